//! Integral edge assignment for an integral choice of copies, via max flow,
//! and the end-to-end feasibility check for covers.

use std::collections::VecDeque;
use std::fmt;

use crate::instance::{CoverSolution, Instance};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub capacity: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowNetwork {
    pub num_nodes: usize,
    pub source: usize,
    pub sink: usize,
    pub arcs: Vec<FlowArc>,
}

impl FlowNetwork {
    pub fn new(num_nodes: usize, source: usize, sink: usize) -> Self {
        FlowNetwork { num_nodes, source, sink, arcs: Vec::new() }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: u64) -> usize {
        assert!(from < self.num_nodes && to < self.num_nodes, "arc endpoint out of range");
        self.arcs.push(FlowArc { from, to, capacity });
        self.arcs.len() - 1
    }

    /// Source → edge node (cap 1) → vertex node (cap 1 per endpoint) → sink
    /// (cap `k_v · x_v`). Node 0 is the source, `1..=|E|` the edges, then the
    /// vertices, then the sink. Arcs are added in that order.
    pub fn for_assignment(inst: &Instance, x: &[u64]) -> Self {
        let ne = inst.num_edges();
        let nv = inst.num_vertices();
        let sink = ne + nv + 1;
        let mut net = FlowNetwork::new(ne + nv + 2, 0, sink);
        for e in 0..ne {
            net.add_arc(0, 1 + e, 1);
        }
        for (e, edge) in inst.edges().iter().enumerate() {
            for &v in edge {
                net.add_arc(1 + e, 1 + ne + v, 1);
            }
        }
        for v in 0..nv {
            net.add_arc(1 + ne + v, sink, inst.capacity(v).saturating_mul(x[v]));
        }
        net
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxFlow {
    pub value: u64,
    /// Flow on each arc of the network, by arc index.
    pub flow: Vec<u64>,
}

struct Dinic {
    /// Residual arcs; arc `2i` is the forward copy of network arc `i`, `2i+1`
    /// its reverse.
    to: Vec<usize>,
    cap: Vec<u64>,
    adj: Vec<Vec<usize>>,
    level: Vec<i64>,
    next: Vec<usize>,
}

impl Dinic {
    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let v = self.to[a];
                if self.cap[a] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, limit: u64) -> u64 {
        if u == t {
            return limit;
        }
        while self.next[u] < self.adj[u].len() {
            let a = self.adj[u][self.next[u]];
            let v = self.to[a];
            if self.cap[a] > 0 && self.level[v] == self.level[u] + 1 {
                let pushed = self.dfs(v, t, limit.min(self.cap[a]));
                if pushed > 0 {
                    self.cap[a] -= pushed;
                    self.cap[a ^ 1] += pushed;
                    return pushed;
                }
            }
            self.next[u] += 1;
        }
        0
    }
}

/// Maximum integral flow by blocking flows on level graphs. Arcs are scanned
/// in insertion order, so the returned flow is deterministic.
pub fn max_flow(net: &FlowNetwork) -> MaxFlow {
    let m = net.arcs.len();
    let mut d = Dinic {
        to: Vec::with_capacity(2 * m),
        cap: Vec::with_capacity(2 * m),
        adj: vec![Vec::new(); net.num_nodes],
        level: vec![-1; net.num_nodes],
        next: vec![0; net.num_nodes],
    };
    for (i, arc) in net.arcs.iter().enumerate() {
        d.to.push(arc.to);
        d.cap.push(arc.capacity);
        d.adj[arc.from].push(2 * i);
        d.to.push(arc.from);
        d.cap.push(0);
        d.adj[arc.to].push(2 * i + 1);
    }
    let mut value = 0u64;
    if net.source != net.sink {
        while d.bfs(net.source, net.sink) {
            d.next.iter_mut().for_each(|n| *n = 0);
            loop {
                let pushed = d.dfs(net.source, net.sink, u64::MAX);
                if pushed == 0 {
                    break;
                }
                value += pushed;
            }
        }
    }
    let flow = (0..m).map(|i| d.cap[2 * i + 1]).collect();
    MaxFlow { value, flow }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssignmentError {
    #[error("x has {found} entries, instance has {expected} vertices")]
    LengthMismatch { expected: usize, found: usize },
    #[error("x[{vertex}] = {x} exceeds multiplicity {m}")]
    MultiplicityExceeded { vertex: usize, x: u64, m: u64 },
    #[error("only {covered} of {edges} edges can be assigned")]
    NoAssignment { covered: u64, edges: usize },
}

/// Integral assignment for integral `x`, or failure if none exists.
pub fn recover_assignment(inst: &Instance, x: &[u64]) -> Result<CoverSolution, AssignmentError> {
    if x.len() != inst.num_vertices() {
        return Err(AssignmentError::LengthMismatch { expected: inst.num_vertices(), found: x.len() });
    }
    for (v, &xv) in x.iter().enumerate() {
        if xv > inst.multiplicity(v) {
            return Err(AssignmentError::MultiplicityExceeded { vertex: v, x: xv, m: inst.multiplicity(v) });
        }
    }
    let net = FlowNetwork::for_assignment(inst, x);
    let mf = max_flow(&net);
    if mf.value != inst.num_edges() as u64 {
        return Err(AssignmentError::NoAssignment { covered: mf.value, edges: inst.num_edges() });
    }
    let ne = inst.num_edges();
    let mut y = Vec::with_capacity(ne);
    let mut arc = ne;
    for (e, edge) in inst.edges().iter().enumerate() {
        for &v in edge {
            if mf.flow[arc] == 1 {
                y.push((e, v));
            }
            arc += 1;
        }
    }
    Ok(CoverSolution { x: x.to_vec(), y })
}

/// First violated feasibility condition found by [`verify_cover`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverViolation {
    LengthMismatch { expected: usize, found: usize },
    /// Condition 1: `x_v <= m_v`.
    MultiplicityExceeded { vertex: usize, x: u64, m: u64 },
    UnknownEdge { edge: usize },
    NotAnEndpoint { edge: usize, vertex: usize },
    /// Condition 2: each edge assigned exactly once.
    Uncovered { edge: usize },
    CoveredTwice { edge: usize },
    /// Condition 3: load within `k_v · x_v`.
    CapacityExceeded { vertex: usize, load: u64, capacity: u64 },
}

impl fmt::Display for CoverViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use CoverViolation::*;
        match self {
            LengthMismatch { expected, found } => {
                write!(f, "x has {found} entries, instance has {expected} vertices")
            }
            MultiplicityExceeded { vertex, x, m } => {
                write!(f, "multiplicity: x[{vertex}] = {x} exceeds m = {m}")
            }
            UnknownEdge { edge } => write!(f, "assignment names nonexistent edge {edge}"),
            NotAnEndpoint { edge, vertex } => {
                write!(f, "coverage: edge {edge} assigned to non-endpoint {vertex}")
            }
            Uncovered { edge } => write!(f, "coverage: edge {edge} is not covered"),
            CoveredTwice { edge } => write!(f, "coverage: edge {edge} is assigned more than once"),
            CapacityExceeded { vertex, load, capacity } => write!(
                f,
                "capacity: vertex {vertex} covers {load} edges, capacity k*x = {capacity}"
            ),
        }
    }
}

/// Checks the three feasibility conditions exactly.
pub fn verify_cover(inst: &Instance, sol: &CoverSolution) -> Result<(), CoverViolation> {
    let n = inst.num_vertices();
    if sol.x.len() != n {
        return Err(CoverViolation::LengthMismatch { expected: n, found: sol.x.len() });
    }
    for (v, &xv) in sol.x.iter().enumerate() {
        if xv > inst.multiplicity(v) {
            return Err(CoverViolation::MultiplicityExceeded { vertex: v, x: xv, m: inst.multiplicity(v) });
        }
    }
    let mut covered = vec![false; inst.num_edges()];
    let mut load = vec![0u64; n];
    for &(e, v) in &sol.y {
        if e >= inst.num_edges() {
            return Err(CoverViolation::UnknownEdge { edge: e });
        }
        if !inst.edge(e).contains(&v) {
            return Err(CoverViolation::NotAnEndpoint { edge: e, vertex: v });
        }
        if covered[e] {
            return Err(CoverViolation::CoveredTwice { edge: e });
        }
        covered[e] = true;
        load[v] += 1;
    }
    if let Some(e) = covered.iter().position(|c| !c) {
        return Err(CoverViolation::Uncovered { edge: e });
    }
    for v in 0..n {
        let capacity = inst.capacity(v).saturating_mul(sol.x[v]);
        if load[v] > capacity {
            return Err(CoverViolation::CapacityExceeded { vertex: v, load: load[v], capacity });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Instance {
        Instance::new(3, vec![vec![0, 1], vec![1, 2], vec![2, 0]], vec![2, 2, 2], vec![1, 1, 1]).unwrap()
    }

    #[test]
    fn single_path() {
        let mut net = FlowNetwork::new(4, 0, 3);
        net.add_arc(0, 1, 1);
        net.add_arc(1, 2, 1);
        net.add_arc(2, 3, 1);
        assert_eq!(max_flow(&net).value, 1);
    }

    #[test]
    fn bottleneck_vertex() {
        let inst = Instance::new(3, vec![vec![0, 1], vec![0, 2]], vec![1, 0, 0], vec![1, 1, 1]).unwrap();
        let mf = max_flow(&FlowNetwork::for_assignment(&inst, &[1, 0, 0]));
        assert_eq!(mf.value, 1);
    }

    #[test]
    fn recover_single_edge() {
        let inst = Instance::new(2, vec![vec![0, 1]], vec![1, 1], vec![1, 1]).unwrap();
        let sol = recover_assignment(&inst, &[1, 0]).unwrap();
        assert_eq!(sol.y, vec![(0, 0)]);
        assert!(matches!(recover_assignment(&inst, &[0, 0]), Err(AssignmentError::NoAssignment { .. })));
        assert!(matches!(
            recover_assignment(&inst, &[2, 0]),
            Err(AssignmentError::MultiplicityExceeded { vertex: 0, .. })
        ));
    }

    #[test]
    fn recover_triangle() {
        let inst = triangle();
        let sol = recover_assignment(&inst, &[1, 1, 0]).unwrap();
        assert_eq!(sol.y.len(), 3);
        assert_eq!(verify_cover(&inst, &sol), Ok(()));
        for &(_, v) in &sol.y {
            assert_ne!(v, 2);
        }
        // Edge {1,2} can only go to vertex 1; {2,0} only to vertex 0.
        assert!(sol.y.contains(&(1, 1)));
        assert!(sol.y.contains(&(2, 0)));
    }

    #[test]
    fn verify_diagnostics() {
        let inst = triangle();
        let good = recover_assignment(&inst, &[1, 1, 0]).unwrap();

        let mut bad = good.clone();
        bad.y[0] = (0, 2);
        assert_eq!(verify_cover(&inst, &bad), Err(CoverViolation::NotAnEndpoint { edge: 0, vertex: 2 }));

        let crowded = CoverSolution { x: vec![1, 0, 1], y: vec![(0, 0), (1, 2), (2, 0)] };
        assert_eq!(verify_cover(&inst, &crowded), Ok(()));
        let over = CoverSolution { x: vec![1, 0, 0], y: vec![(0, 0), (1, 1), (2, 0)] };
        assert!(matches!(
            verify_cover(&inst, &over),
            Err(CoverViolation::CapacityExceeded { vertex: 1, .. })
        ));
        let tight_k = Instance::new(2, vec![vec![0, 1], vec![0, 1]], vec![1, 1], vec![1, 1]).unwrap();
        let exceeded = CoverSolution { x: vec![1, 0], y: vec![(0, 0), (1, 0)] };
        assert_eq!(
            verify_cover(&tight_k, &exceeded),
            Err(CoverViolation::CapacityExceeded { vertex: 0, load: 2, capacity: 1 })
        );

        let missing = CoverSolution { x: vec![1, 1, 0], y: vec![(0, 0), (1, 1)] };
        assert_eq!(verify_cover(&inst, &missing), Err(CoverViolation::Uncovered { edge: 2 }));
        let twice = CoverSolution { x: vec![1, 1, 0], y: vec![(0, 0), (0, 1), (1, 1), (2, 0)] };
        assert_eq!(verify_cover(&inst, &twice), Err(CoverViolation::CoveredTwice { edge: 0 }));
        let too_many = CoverSolution { x: vec![2, 1, 0], ..good };
        assert!(matches!(verify_cover(&inst, &too_many), Err(CoverViolation::MultiplicityExceeded { .. })));
    }
}
