//! Problem instances and solutions.
//!
//! An instance is a multi-hypergraph with a per-vertex capacity `k_v` (edges a
//! single copy of `v` may cover) and multiplicity bound `m_v` (copies of `v`
//! that may be bought). Edges are identified by their position in the edge
//! list, so parallel edges are simply repeated entries.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::recover_assignment;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    #[error("malformed instance document: {0}")]
    Malformed(String),
    #[error("edge {edge} is empty")]
    EmptyEdge { edge: usize },
    #[error("edge {edge} references vertex {vertex}, but there are only {num_vertices} vertices")]
    VertexOutOfRange { edge: usize, vertex: usize, num_vertices: usize },
    #[error("edge {edge} lists vertex {vertex} more than once")]
    DuplicateVertex { edge: usize, vertex: usize },
    #[error("`{field}` has {found} entries, expected {expected}")]
    LengthMismatch { field: &'static str, expected: usize, found: usize },
}

/// Field order here is the canonical key order of the document.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    num_vertices: usize,
    k: Vec<u64>,
    m: Vec<u64>,
    edges: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    num_vertices: usize,
    edges: Vec<Vec<usize>>,
    k: Vec<u64>,
    m: Vec<u64>,
    incidence: Vec<Vec<usize>>,
}

impl Instance {
    pub fn new(
        num_vertices: usize,
        edges: Vec<Vec<usize>>,
        k: Vec<u64>,
        m: Vec<u64>,
    ) -> Result<Self, InstanceError> {
        for (field, len) in [("k", k.len()), ("m", m.len())] {
            if len != num_vertices {
                return Err(InstanceError::LengthMismatch {
                    field,
                    expected: num_vertices,
                    found: len,
                });
            }
        }
        let mut incidence = vec![Vec::new(); num_vertices];
        for (e, edge) in edges.iter().enumerate() {
            if edge.is_empty() {
                return Err(InstanceError::EmptyEdge { edge: e });
            }
            for (p, &v) in edge.iter().enumerate() {
                if v >= num_vertices {
                    return Err(InstanceError::VertexOutOfRange { edge: e, vertex: v, num_vertices });
                }
                if edge[..p].contains(&v) {
                    return Err(InstanceError::DuplicateVertex { edge: e, vertex: v });
                }
                incidence[v].push(e);
            }
        }
        Ok(Instance { num_vertices, edges, k, m, incidence })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &[usize] {
        &self.edges[e]
    }

    pub fn capacity(&self, v: usize) -> u64 {
        self.k[v]
    }

    pub fn multiplicity(&self, v: usize) -> u64 {
        self.m[v]
    }

    pub fn capacities(&self) -> &[u64] {
        &self.k
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.m
    }

    /// Edges containing `v`, in index order (δ(v)).
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incidence[v]
    }

    /// Position of `v` within edge `e`.
    pub fn position(&self, e: usize, v: usize) -> Option<usize> {
        self.edges[e].iter().position(|&u| u == v)
    }

    /// Maximum edge size `f`; zero when there are no edges.
    pub fn rank(&self) -> usize {
        self.edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Canonical compact document.
    pub fn to_document(&self) -> String {
        let doc = InstanceDoc {
            num_vertices: self.num_vertices,
            k: self.k.clone(),
            m: self.m.clone(),
            edges: self.edges.clone(),
        };
        serde_json::to_string(&doc).expect("instance serialization cannot fail")
    }
}

pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| InstanceError::Malformed(e.to_string()))?;
    Instance::new(doc.num_vertices, doc.edges, doc.k, doc.m)
}

pub fn serialize_instance(inst: &Instance) -> String {
    inst.to_document()
}

/// Every vertex bought at full multiplicity admits a feasible assignment.
pub fn is_coverable(inst: &Instance) -> bool {
    recover_assignment(inst, inst.multiplicities()).is_ok()
}

/// An integral cover: copy counts and, per covered edge, the covering vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverSolution {
    pub x: Vec<u64>,
    /// `(edge, vertex)` pairs with `y(edge, vertex) = 1`, sorted by edge.
    pub y: Vec<(usize, usize)>,
}

impl CoverSolution {
    pub fn cost(&self) -> u64 {
        self.x.iter().sum()
    }

    pub fn to_document(&self) -> String {
        serde_json::to_string(self).expect("solution serialization cannot fail")
    }

    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        serde_json::from_str(text).map_err(|e| InstanceError::Malformed(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub num_vertices: usize,
    pub num_edges: usize,
    /// Edge sizes are uniform in `min_edge_size..=max_edge_size`.
    pub min_edge_size: usize,
    pub max_edge_size: usize,
    pub max_capacity: u64,
    pub max_mult: u64,
}

impl GenParams {
    pub fn new(
        num_vertices: usize,
        num_edges: usize,
        max_edge_size: usize,
        max_capacity: u64,
        max_mult: u64,
    ) -> Self {
        GenParams { num_vertices, num_edges, min_edge_size: 1, max_edge_size, max_capacity, max_mult }
    }
}

pub const GENERATOR_RETRIES: usize = 10_000;

/// Seeded random coverable instance.
///
/// Capacities and multiplicities are uniform in `0..=max`; instances that are
/// not coverable are redrawn from the same stream, so the result depends only
/// on `(params, seed)`.
pub fn generate_random(params: &GenParams, seed: u64) -> Result<Instance> {
    let p = params;
    let invalid = |msg: &str| Error::Instance(InstanceError::Malformed(msg.to_string()));
    if p.num_vertices == 0 || p.num_edges == 0 || p.max_edge_size == 0 {
        return Err(invalid("generator parameters must be at least 1"));
    }
    if p.min_edge_size == 0 || p.min_edge_size > p.max_edge_size {
        return Err(invalid("min_edge_size must lie in 1..=max_edge_size"));
    }
    if p.max_edge_size > p.num_vertices {
        return Err(invalid("max_edge_size exceeds num_vertices"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GENERATOR_RETRIES {
        let edges: Vec<Vec<usize>> = (0..p.num_edges)
            .map(|_| {
                let size = rng.gen_range(p.min_edge_size..=p.max_edge_size);
                let mut e = sample(&mut rng, p.num_vertices, size).into_vec();
                e.sort_unstable();
                e
            })
            .collect();
        let k = (0..p.num_vertices).map(|_| rng.gen_range(0..=p.max_capacity)).collect();
        let m = (0..p.num_vertices).map(|_| rng.gen_range(0..=p.max_mult)).collect();
        let inst = Instance::new(p.num_vertices, edges, k, m)?;
        if is_coverable(&inst) {
            return Ok(inst);
        }
    }
    Err(Error::RetryBudgetExhausted(GENERATOR_RETRIES))
}
