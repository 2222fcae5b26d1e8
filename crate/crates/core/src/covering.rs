//! Iterative rounding on covering relaxations, moving continuously between
//! consecutive optima and stopping at the first event on the segment.
//!
//! [`round_lp3`] works for any rank; [`round_lp4`] is the graph-only variant
//! whose partition into `U` and `W` is fixed after LP1.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{interpolate, line_stop_time, AffineEvent, StopTime};
use crate::rational::Rational;
use crate::relaxations::{build_lp1, build_lp3, build_lp4, graph_coupling, BuiltLp, CouplingMatrix, LabelKind};
use crate::rounding::{check_output, effective_f, finish, round_up_bound, u_at_mult, RoundingState};
use crate::trace::{
    check_counts, ensure, lp1_error, solve_checked, Checker, IterationRecord, RoundingOutput,
    RoundingTrace, SetSizes, TerminalRecord, TraceEvent,
};

/// Rounding state plus the current edge ownership `E_u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringState {
    pub base: RoundingState,
    /// Owner of each live non-tight edge.
    pub owner: Vec<Option<usize>>,
}

impl CoveringState {
    pub fn new(inst: &Instance, base: RoundingState) -> Self {
        CoveringState { base, owner: vec![None; inst.num_edges()] }
    }
}

/// Assigns every live non-tight edge to its smallest endpoint in `U`.
pub fn assign_edges(inst: &Instance, state: &RoundingState) -> Result<Vec<Option<usize>>> {
    let live = state.live_edges(inst)?;
    let mut owner = vec![None; inst.num_edges()];
    for e in (0..inst.num_edges()).filter(|&e| live[e]) {
        let u = inst
            .edge(e)
            .iter()
            .enumerate()
            .filter(|&(p, &v)| state.is_live(inst, e, p) && state.in_u(v))
            .map(|(_, &v)| v)
            .min();
        match u {
            Some(u) => owner[e] = Some(u),
            None => {
                return Err(Error::invariant(
                    "edge-meets-u",
                    format!("edge {e} has no undecided endpoint in U"),
                ))
            }
        }
    }
    Ok(owner)
}

/// Coverage at the LP3 target: fractional endpoints scale with their `x`,
/// owners absorb the difference, other `U` endpoints keep their value.
pub fn propagate_y(inst: &Instance, state: &CoveringState, x_new: &[Rational]) -> Vec<Vec<Rational>> {
    let base = &state.base;
    let mut y = base.ystar.clone();
    for (e, owner) in state.owner.iter().enumerate() {
        let Some(u) = *owner else { continue };
        let mut shift = Rational::zero();
        for (p, &w) in inst.edge(e).iter().enumerate() {
            if base.is_live(inst, e, p) && base.is_fractional(w) {
                let scaled = &base.ystar[e][p] * &x_new[w] / &base.xstar[w];
                shift += &base.ystar[e][p] - &scaled;
                y[e][p] = scaled;
            }
        }
        let pu = inst.position(e, u).unwrap();
        y[e][pu] += shift;
    }
    y
}

/// Flattened `[x_0 .. x_{n-1}, y(e0,p0), ...]` coordinates.
struct Coords {
    n: usize,
    offset: Vec<usize>,
}

impl Coords {
    fn new(inst: &Instance) -> Self {
        let mut offset = Vec::with_capacity(inst.num_edges());
        let mut acc = inst.num_vertices();
        for e in inst.edges() {
            offset.push(acc);
            acc += e.len();
        }
        Coords { n: inst.num_vertices(), offset }
    }

    fn y(&self, e: usize, p: usize) -> usize {
        self.offset[e] + p
    }

    fn flatten(&self, x: &[Rational], y: &[Vec<Rational>]) -> Vec<Rational> {
        let mut z = x.to_vec();
        z.extend(y.iter().flatten().cloned());
        z
    }

    fn unflatten(&self, inst: &Instance, z: &[Rational]) -> (Vec<Rational>, Vec<Vec<Rational>>) {
        let x = z[..self.n].to_vec();
        let y = (0..inst.num_edges())
            .map(|e| z[self.offset[e]..self.offset[e] + inst.edge(e).len()].to_vec())
            .collect();
        (x, y)
    }
}

/// Processes every event that holds at the current point, to a fixpoint:
/// zero vertices, tight pairs, vertices at `1/f`, zero owner coverage.
fn normalize(inst: &Instance, state: &mut RoundingState, events: &mut Vec<TraceEvent>) {
    let t = state.threshold();
    loop {
        let mut changed = false;
        let zs = crate::rounding::apply_z_fix(inst, state);
        if !zs.is_empty() {
            events.push(TraceEvent::ZFix { vertices: zs });
            changed = true;
        }
        while let Some((e, u)) = state.find_tight_pair(inst) {
            state.make_tight(inst, e, u);
            events.push(TraceEvent::TightEdge { edge: e, vertex: u });
            changed = true;
        }
        for v in 0..inst.num_vertices() {
            if !state.decided[v] && state.xstar[v] == t {
                state.decide(v, 1);
                for &e in inst.incident(v) {
                    let p = inst.position(e, v).unwrap();
                    if !state.is_tight(e) && !state.dropped[e][p] {
                        state.bar_y[e][p] = Some(state.ystar[e][p].clone());
                    }
                }
                events.push(TraceEvent::ThresholdFix { vertex: v });
                changed = true;
            }
        }
        for e in 0..inst.num_edges() {
            if state.is_tight(e) {
                continue;
            }
            for (p, &u) in inst.edge(e).iter().enumerate() {
                if state.is_live(inst, e, p) && state.in_u(u) && state.ystar[e][p].is_zero() {
                    state.dropped[e][p] = true;
                    state.bar_y[e][p] = Some(Rational::zero());
                    events.push(TraceEvent::ZeroCoverage { edge: e, vertex: u });
                    changed = true;
                }
            }
        }
        state.reclassify();
        if !changed {
            return;
        }
    }
}

/// Capacity along the path, on every live incidence.
fn path_capacity(inst: &Instance, state: &RoundingState) -> std::result::Result<(), String> {
    for v in (0..inst.num_vertices()).filter(|&v| !state.decided[v]) {
        let load = state.live_load(inst, v);
        let cap = Rational::from_integer(state.residual_capacity(inst, v)) * &state.xstar[v];
        ensure(load <= cap, || format!("vertex {v}: load {load} > capacity {cap}"))?;
    }
    Ok(())
}

/// `0 <= y(e,v) <= x_v` on live incidences and `x_v <= m_v`.
fn path_bounds(inst: &Instance, state: &RoundingState) -> std::result::Result<(), String> {
    for v in (0..inst.num_vertices()).filter(|&v| !state.decided[v]) {
        let m = Rational::from(inst.multiplicity(v));
        ensure(!state.xstar[v].is_negative() && state.xstar[v] <= m, || {
            format!("vertex {v}: x = {} outside [0, {m}]", state.xstar[v])
        })?;
    }
    for e in (0..inst.num_edges()).filter(|&e| !state.is_tight(e)) {
        for (p, &v) in inst.edge(e).iter().enumerate() {
            if state.is_live(inst, e, p) {
                let y = &state.ystar[e][p];
                ensure(!y.is_negative() && *y <= state.xstar[v], || {
                    format!("edge {e}, vertex {v}: y = {y} outside [0, {}]", state.xstar[v])
                })?;
            }
        }
    }
    Ok(())
}

fn intersect_bound(inst: &Instance, state: &RoundingState) -> std::result::Result<(), String> {
    let f = Rational::from(state.f);
    for e in (0..inst.num_edges()).filter(|&e| !state.is_tight(e)) {
        let live: Vec<usize> = (0..inst.edge(e).len()).filter(|&p| state.is_live(inst, e, p)).collect();
        let sum: Rational = live.iter().map(|&p| &state.ystar[e][p]).sum();
        let bound = Rational::from(live.len()) / &f;
        ensure(sum >= bound, || format!("edge {e}: coverage {sum} < {bound}"))?;
    }
    Ok(())
}

/// No event holds strictly before `stop.t`, and every triggered one holds at it.
fn stop_exact(
    from: &[Rational],
    to: &[Rational],
    events: &[AffineEvent],
    stop: &StopTime,
) -> std::result::Result<(), String> {
    let at = interpolate(from, to, &stop.t);
    for &i in &stop.triggered {
        ensure(events[i].residual(&at).is_zero(), || format!("event {i} does not hold at t = {}", stop.t))?;
    }
    for (i, ev) in events.iter().enumerate() {
        let g0 = ev.residual(from);
        if g0.is_zero() {
            continue;
        }
        // affine in t, so no root in (0, t) iff the sign at t is not flipped
        let gt = ev.residual(&at);
        ensure(gt.is_zero() || gt.signum() == g0.signum(), || {
            format!("event {i} crossed zero before t = {}", stop.t)
        })?;
    }
    Ok(())
}

/// Covering-LP rounding for any rank.
pub fn round_lp3(inst: &Instance, checker: &mut Checker) -> Result<RoundingOutput> {
    let f = effective_f(inst);
    let mut solves = 0usize;
    let lp1 = build_lp1(inst);
    let sol1 = solve_checked(&lp1.lp, checker, &mut solves).map_err(lp1_error)?;
    let lp1_value = sol1.objective_value.clone();
    let mut state = CoveringState::new(inst, RoundingState::from_lp1(inst, f, &lp1, &sol1));
    let coords = Coords::new(inst);
    let threshold = state.base.threshold();
    let mut ever_u: Vec<bool> = (0..inst.num_vertices()).map(|v| state.base.in_u(v)).collect();
    let mut iterations = Vec::new();
    let budget = 4 * (inst.num_vertices() + inst.edges().iter().map(Vec::len).sum::<usize>()) + 8;

    let (built, sol) = loop {
        if iterations.len() > budget {
            return Err(Error::InconsistentState("covering loop made no progress".into()));
        }
        let mut events = Vec::new();
        normalize(inst, &mut state.base, &mut events);
        let base = &state.base;
        checker.check("coverage-identity", || base.coverage_identity(inst))?;
        checker.check("intersect-u", || intersect_bound(inst, base))?;
        checker.check("path-capacity", || path_capacity(inst, base))?;
        checker.check("persistence", || {
            for v in (0..inst.num_vertices()).filter(|&v| ever_u[v] && !base.decided[v]) {
                ensure(base.xstar[v] >= threshold, || format!("vertex {v} fell below 1/f"))?;
            }
            Ok(())
        })?;
        for (v, flag) in ever_u.iter_mut().enumerate() {
            *flag |= state.base.in_u(v);
        }

        state.owner = assign_edges(inst, &state.base)?;
        let built = build_lp3(inst, &state)?;
        let old_cost = state.base.cost();
        checker.check("old-point-feasible", || {
            let z = built.restrict(&state.base.xstar, &state.base.ystar);
            ensure(built.lp.is_feasible(&z), || "current point violates LP3".into())
        })?;
        let sol = solve_checked(&built.lp, checker, &mut solves)?;
        checker.check("monotone-charging", || {
            ensure(sol.objective_value <= old_cost, || {
                format!("LP3 optimum {} above current cost {old_cost}", sol.objective_value)
            })
        })?;

        let mut x_new = state.base.xstar.clone();
        for v in 0..inst.num_vertices() {
            if let Some(x) = built.x_value(&sol, v) {
                x_new[v] = x.clone();
            }
        }
        let y_new = propagate_y(inst, &state, &x_new);
        let from = coords.flatten(&state.base.xstar, &state.base.ystar);
        let to = coords.flatten(&x_new, &y_new);
        let path_events = lp3_events(inst, &state.base, &coords);
        let stop = line_stop_time(&from, &to, &path_events);
        if let Some(s) = &stop {
            checker.check("stop-exact", || stop_exact(&from, &to, &path_events, s))?;
        }
        let t = stop.as_ref().map_or_else(Rational::one, |s| s.t.clone());
        let (x, y) = coords.unflatten(inst, &interpolate(&from, &to, &t));
        state.base.xstar = x;
        state.base.ystar = y;
        state.base.reclassify();
        let base = &state.base;
        checker.check("path-capacity", || path_capacity(inst, base))?;
        checker.check("path-bounds", || path_bounds(inst, base))?;
        checker.check("coverage-identity", || base.coverage_identity(inst))?;

        events.push(match &stop {
            Some(s) => TraceEvent::PathStop { t: s.t.clone() },
            None => TraceEvent::PathComplete,
        });
        iterations.push(IterationRecord {
            iteration: iterations.len(),
            objective: state.base.cost(),
            events,
            sizes: state.base.sizes(),
        });
        if stop.is_none() {
            break (built, sol);
        }
    };

    // Vertices that reached zero on the final move are decided with no copies.
    let zs = crate::rounding::apply_z_fix(inst, &mut state.base);
    if !zs.is_empty() {
        if let Some(last) = iterations.last_mut() {
            last.events.push(TraceEvent::ZFix { vertices: zs });
            last.sizes = state.base.sizes();
        }
    }
    let base = &state.base;
    let mut terminal = TerminalRecord {
        w: base.partition.fractional.len(),
        u_at_mult: u_at_mult(inst, base),
        ..TerminalRecord::default()
    };
    let w_ok = terminal.w <= terminal.u_at_mult;
    terminal.checks.insert("w-le-u-at-mult".into(), w_ok);
    checker.check("termination-lemmas", || {
        ensure(w_ok, || format!("|W| = {} > |U^=| = {}", terminal.w, terminal.u_at_mult))?;
        intersect_bound(inst, base)?;
        forbidden_rows(&built, &sol, &[LabelKind::LowerOneOverF, LabelKind::UpperOneOverF])
    })?;
    checker.check("final-round-up", || round_up_bound(inst, base))?;

    let x = finish(inst, &mut state.base)?;
    checker.check("persistence", || {
        for v in (0..inst.num_vertices()).filter(|&v| ever_u[v]) {
            ensure(x[v] >= 1, || format!("vertex {v} entered U but ends with {} copies", x[v]))?;
        }
        Ok(())
    })?;
    check_output(inst, &state.base, &x, &lp1, &lp1_value, f, checker)?;

    let trace = RoundingTrace {
        algorithm: "iter-lp3",
        rank: inst.rank(),
        f,
        lp1_value: lp1_value.clone(),
        iterations,
        terminal,
        cost: x.iter().sum(),
        lp_solves: solves,
        checks: check_counts(checker),
        notes: Vec::new(),
    };
    Ok(RoundingOutput { x, lp1_value, trace })
}

fn forbidden_rows(
    built: &BuiltLp,
    sol: &crate::lp::BasicSolution,
    kinds: &[LabelKind],
) -> std::result::Result<(), String> {
    let bad: Vec<String> = sol
        .tight_set
        .iter()
        .map(|&i| built.labels[i])
        .filter(|l| kinds.contains(&l.kind))
        .map(|l| l.to_string())
        .collect();
    ensure(bad.is_empty(), || format!("rows that cannot be tight at termination: {}", bad.join(", ")))
}

/// Stop events on the segment: (a) `y(e,u) = x_u`, (b) `x_v = 1/f`,
/// (c) `y(e,u) = 0`, in that order.
fn lp3_events(inst: &Instance, state: &RoundingState, coords: &Coords) -> Vec<AffineEvent> {
    let one = Rational::one();
    let pairs: Vec<(usize, usize, usize)> = (0..inst.num_edges())
        .filter(|&e| !state.is_tight(e))
        .flat_map(|e| inst.edge(e).iter().enumerate().map(move |(p, &u)| (e, p, u)))
        .filter(|&(e, p, u)| state.is_live(inst, e, p) && state.in_u(u))
        .collect();
    let mut out = Vec::new();
    for &(e, p, u) in &pairs {
        out.push(AffineEvent::new(vec![(coords.y(e, p), one.clone()), (u, -one.clone())], Rational::zero()));
    }
    for v in (0..inst.num_vertices()).filter(|&v| !state.decided[v]) {
        out.push(AffineEvent::new(vec![(v, one.clone())], state.threshold()));
    }
    for &(e, p, _) in &pairs {
        out.push(AffineEvent::new(vec![(coords.y(e, p), one.clone())], Rational::zero()));
    }
    out
}

/// A non-tight edge `{u, w}` with `u ∈ U`, `w ∈ W`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoupledEdge {
    pub u: usize,
    pub w: usize,
    /// Positions of `u` and `w` in the edge.
    pub pu: usize,
    pub pw: usize,
    /// `y(e,w) / x_w`, fixed by LP1.
    pub ratio: Rational,
}

/// State of the graph variant. `U` and `W` never change after LP1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphState {
    pub in_u: Vec<bool>,
    pub in_w: Vec<bool>,
    pub x: Vec<Rational>,
    /// Coverage by `[edge][position]`.
    pub y: Vec<Vec<Rational>>,
    pub coupled: Vec<Option<CoupledEdge>>,
    pub tight_owner: Vec<Option<usize>>,
    /// `⌈x_u⌉ / x_u` for `u ∈ U`.
    pub blowup: Vec<Option<Rational>>,
    /// Coverage `u` carried on each of its tight edges when it entered `T`.
    pub frozen_load: Vec<Rational>,
}

impl GraphState {
    pub fn from_lp1(inst: &Instance, built: &BuiltLp, sol: &crate::lp::BasicSolution) -> Result<Self> {
        if inst.rank() > 2 {
            return Err(Error::RankTooLarge(inst.rank()));
        }
        let n = inst.num_vertices();
        let half = Rational::new(1, 2);
        let x: Vec<Rational> = (0..n).map(|v| built.x_value(sol, v).unwrap().clone()).collect();
        let y: Vec<Vec<Rational>> = built
            .y_var
            .iter()
            .map(|row| row.iter().map(|j| sol.values[j.unwrap()].clone()).collect())
            .collect();
        let in_u: Vec<bool> = x.iter().map(|v| *v >= half).collect();
        let in_w: Vec<bool> = x.iter().map(|v| v.is_positive() && *v < half).collect();
        let blowup = (0..n)
            .map(|u| in_u[u].then(|| Rational::from(x[u].ceil_u64().unwrap()) / &x[u]))
            .collect();
        let mut coupled = vec![None; inst.num_edges()];
        for (e, edge) in inst.edges().iter().enumerate() {
            if let [a, b] = edge[..] {
                let (pu, pw) = match (in_u[a], in_w[a], in_u[b], in_w[b]) {
                    (true, _, _, true) => (0, 1),
                    (_, true, true, _) => (1, 0),
                    _ => continue,
                };
                let (u, w) = (edge[pu], edge[pw]);
                let ratio = &y[e][pw] / &x[w];
                coupled[e] = Some(CoupledEdge { u, w, pu, pw, ratio });
            }
        }
        Ok(GraphState {
            in_u,
            in_w,
            x,
            y,
            coupled,
            tight_owner: vec![None; inst.num_edges()],
            blowup,
            frozen_load: vec![Rational::zero(); n],
        })
    }

    /// `W_f`: vertices of `W` strictly between 0 and 1.
    pub fn w_fractional(&self) -> Vec<usize> {
        (0..self.x.len())
            .filter(|&w| self.in_w[w] && self.x[w].is_positive() && self.x[w] < Rational::one())
            .collect()
    }

    /// Puts every non-tight `(e, u)` with `y(e,u) · ⌈x_u⌉/x_u >= 1` into `T`.
    fn pre_round(&mut self, inst: &Instance) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for e in 0..inst.num_edges() {
            if self.tight_owner[e].is_some() {
                continue;
            }
            let pick = inst
                .edge(e)
                .iter()
                .enumerate()
                .filter(|&(p, &u)| self.blowup[u].as_ref().is_some_and(|c| &self.y[e][p] * c >= Rational::one()))
                .min_by_key(|&(_, &u)| u);
            if let Some((p, &u)) = pick {
                self.tight_owner[e] = Some(u);
                self.frozen_load[u] += &self.y[e][p];
                out.push((e, u));
            }
        }
        out
    }

    /// Moves `x_w` to `x_new` and re-couples `y` on non-tight `U`-`W` edges.
    fn set_x(&mut self, inst: &Instance, x: Vec<Rational>) {
        self.x = x;
        for e in 0..inst.num_edges() {
            if self.tight_owner[e].is_some() {
                continue;
            }
            if let Some(c) = &self.coupled[e] {
                let yw = &c.ratio * &self.x[c.w];
                self.y[e][c.pu] = Rational::one() - &yw;
                self.y[e][c.pw] = yw;
            }
        }
    }

    /// Loads against the LP1 capacities: for `u`, tight-edge loads frozen at
    /// entry plus the current non-tight load.
    fn capacity(&self, inst: &Instance) -> std::result::Result<(), String> {
        for v in 0..inst.num_vertices() {
            let mut load = if self.in_u[v] { self.frozen_load[v].clone() } else { Rational::zero() };
            for &e in inst.incident(v) {
                if self.tight_owner[e].is_none() {
                    load += &self.y[e][inst.position(e, v).unwrap()];
                }
            }
            let cap = Rational::from(inst.capacity(v)) * &self.x[v];
            ensure(load <= cap, || format!("vertex {v}: load {load} > capacity {cap}"))?;
        }
        Ok(())
    }

    fn final_bar_y(&self, inst: &Instance) -> Vec<Vec<Rational>> {
        (0..inst.num_edges())
            .map(|e| match self.tight_owner[e] {
                Some(u) => inst
                    .edge(e)
                    .iter()
                    .map(|&v| if v == u { Rational::one() } else { Rational::zero() })
                    .collect(),
                None => self.y[e].clone(),
            })
            .collect()
    }
}

/// Augmenting-path matching in `{(u, w) : M(u,w) != 0}` saturating `w_f`.
/// Returns `(u, w)` pairs in `w` order, or the first unmatched `w`.
pub fn certify_matching(m: &CouplingMatrix, w_f: &[usize], u: &[usize]) -> std::result::Result<Vec<(usize, usize)>, usize> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (uu, w, _) in m.nonzero() {
        if u.binary_search(&uu).is_ok() {
            adj.entry(w).or_default().push(uu);
        }
    }
    let mut match_u: BTreeMap<usize, usize> = BTreeMap::new();
    fn augment(
        w: usize,
        adj: &BTreeMap<usize, Vec<usize>>,
        seen: &mut Vec<usize>,
        match_u: &mut BTreeMap<usize, usize>,
    ) -> bool {
        for &u in adj.get(&w).map(Vec::as_slice).unwrap_or(&[]) {
            if seen.contains(&u) {
                continue;
            }
            seen.push(u);
            let free = match match_u.get(&u) {
                None => true,
                Some(&other) => augment(other, adj, seen, match_u),
            };
            if free {
                match_u.insert(u, w);
                return true;
            }
        }
        false
    }
    for &w in w_f {
        if !augment(w, &adj, &mut Vec::new(), &mut match_u) {
            return Err(w);
        }
    }
    let mut pairs: Vec<(usize, usize)> = match_u.into_iter().collect();
    pairs.sort_by_key(|&(_, w)| w);
    Ok(pairs)
}

/// Covering-LP rounding for graphs.
pub fn round_lp4(inst: &Instance, checker: &mut Checker) -> Result<RoundingOutput> {
    if inst.rank() > 2 {
        return Err(Error::RankTooLarge(inst.rank()));
    }
    let mut solves = 0usize;
    let lp1 = build_lp1(inst);
    let sol1 = solve_checked(&lp1.lp, checker, &mut solves).map_err(lp1_error)?;
    let lp1_value = sol1.objective_value.clone();
    let mut g = GraphState::from_lp1(inst, &lp1, &sol1)?;
    let n = inst.num_vertices();
    let u_set: Vec<usize> = (0..n).filter(|&v| g.in_u[v]).collect();
    let mut iterations = Vec::new();

    let m_last = loop {
        if iterations.len() > inst.num_edges() + 1 {
            return Err(Error::InconsistentState("graph loop made no progress".into()));
        }
        let mut events: Vec<TraceEvent> = g
            .pre_round(inst)
            .into_iter()
            .map(|(edge, vertex)| TraceEvent::TightEdge { edge, vertex })
            .collect();
        checker.check("path-capacity", || g.capacity(inst))?;

        let built = build_lp4(inst, &g)?;
        let old_cost: Rational = (0..n).filter(|&w| g.in_w[w]).map(|w| &g.x[w]).sum();
        checker.check("old-point-feasible", || {
            let z = built.restrict(&g.x, &g.y);
            ensure(built.lp.is_feasible(&z), || "current point violates LP4".into())
        })?;
        let sol = solve_checked(&built.lp, checker, &mut solves)?;
        checker.check("monotone-charging", || {
            ensure(sol.objective_value <= old_cost, || {
                format!("LP4 optimum {} above current cost {old_cost}", sol.objective_value)
            })
        })?;

        let mut x_new = g.x.clone();
        for w in 0..n {
            if let Some(x) = built.x_value(&sol, w) {
                x_new[w] = x.clone();
            }
        }
        let path_events: Vec<AffineEvent> = (0..inst.num_edges())
            .filter(|&e| g.tight_owner[e].is_none())
            .filter_map(|e| g.coupled[e].as_ref())
            .map(|c| {
                // (1 - r x_w) c_u = 1  <=>  c_u r x_w = c_u - 1
                let cu = g.blowup[c.u].clone().unwrap();
                AffineEvent::new(vec![(c.w, &cu * &c.ratio)], cu - Rational::one())
            })
            .collect();
        let stop = line_stop_time(&g.x, &x_new, &path_events);
        if let Some(s) = &stop {
            checker.check("stop-exact", || stop_exact(&g.x, &x_new, &path_events, s))?;
        }
        let t = stop.as_ref().map_or_else(Rational::one, |s| s.t.clone());
        let x_t = interpolate(&g.x, &x_new, &t);
        g.set_x(inst, x_t);
        checker.check("path-capacity", || g.capacity(inst))?;

        events.push(match &stop {
            Some(s) => TraceEvent::PathStop { t: s.t.clone() },
            None => TraceEvent::PathComplete,
        });
        let sizes = SetSizes {
            above: u_set.len(),
            fractional: (0..n).filter(|&w| g.in_w[w]).count(),
            zero: (0..n).filter(|&v| !g.in_u[v] && !g.in_w[v]).count(),
            tight: g.tight_owner.iter().filter(|o| o.is_some()).count(),
            ..SetSizes::default()
        };
        iterations.push(IterationRecord {
            iteration: iterations.len(),
            objective: (0..n).filter(|&w| g.in_w[w]).map(|w| &g.x[w]).sum(),
            events,
            sizes,
        });
        if stop.is_none() {
            break graph_coupling(inst, &g);
        }
    };

    let w_f = g.w_fractional();
    let matching = certify_matching(&m_last, &w_f, &u_set);
    checker.check("matching", || match &matching {
        Ok(pairs) => {
            for &(u, w) in pairs {
                let lhs = Rational::from(g.x[u].ceil_u64().unwrap() + 1);
                let rhs = Rational::from(2u64) * (&g.x[u] + &g.x[w]);
                ensure(lhs <= rhs, || format!("pair ({u},{w}): {lhs} > {rhs}"))?;
            }
            Ok(())
        }
        Err(w) => Err(format!("vertex {w} of W_f is unmatched")),
    })?;

    let x: Vec<u64> = g
        .x
        .iter()
        .map(|v| v.ceil_u64().ok_or_else(|| Error::InconsistentState(format!("value {v}"))))
        .collect::<Result<_>>()?;
    checker.check("ratio", || {
        let cost: u64 = x.iter().sum();
        let bound = Rational::from(2u64) * &lp1_value;
        ensure(Rational::from(cost) <= bound, || format!("cost {cost} > 2 * LP1 = {bound}"))
    })?;
    checker.check("integral-feasible", || {
        let xs: Vec<Rational> = x.iter().map(|&c| Rational::from(c)).collect();
        let z = lp1.restrict(&xs, &g.final_bar_y(inst));
        match lp1.lp.constraints.iter().position(|c| !c.is_satisfied(&z)) {
            None => Ok(()),
            Some(i) => Err(format!("rounded solution violates {}", lp1.labels[i])),
        }
    })?;

    let mut checks = BTreeMap::new();
    checks.insert("matching".to_string(), matching.is_ok());
    let terminal = TerminalRecord {
        w: (0..n).filter(|&w| g.in_w[w]).count(),
        u_at_mult: (0..n).filter(|&u| g.in_u[u] && g.x[u] == Rational::from(inst.multiplicity(u))).count(),
        w_fractional: Some(w_f.len()),
        matching: matching.ok(),
        checks,
    };
    let uu_edges = inst.edges().iter().filter(|e| e.len() == 2 && e.iter().all(|&v| g.in_u[v])).count();
    let mut notes = Vec::new();
    if uu_edges > 0 {
        notes.push(format!("{uu_edges} edge(s) inside U keep their LP1 coverage along every path"));
    }
    let trace = RoundingTrace {
        algorithm: "iter-lp4",
        rank: inst.rank(),
        f: 2,
        lp1_value: lp1_value.clone(),
        iterations,
        terminal,
        cost: x.iter().sum(),
        lp_solves: solves,
        checks: check_counts(checker),
        notes,
    };
    Ok(RoundingOutput { x, lp1_value, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{recover_assignment, verify_cover};
    use crate::lp::solve_extreme;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn inst(n: usize, edges: Vec<Vec<usize>>, k: Vec<u64>, m: Vec<u64>) -> Instance {
        Instance::new(n, edges, k, m).unwrap()
    }

    fn state(g: &Instance, f: usize, x: Vec<Rational>, y: Vec<Vec<Rational>>) -> CoveringState {
        CoveringState::new(g, RoundingState::new(g, f, x, y))
    }

    #[test]
    fn owner_is_smallest_u() {
        let g = inst(3, vec![vec![2, 0, 1]], vec![1; 3], vec![1; 3]);
        let s = RoundingState::new(&g, 3, vec![q(1, 2), q(1, 2), q(1, 6)], vec![vec![q(1, 6), q(1, 3), q(1, 2)]]);
        assert_eq!(assign_edges(&g, &s).unwrap(), vec![Some(0)]);
        let g2 = inst(2, vec![vec![0, 1]], vec![1; 2], vec![1; 2]);
        let s2 = RoundingState::new(&g2, 2, vec![q(1, 4), q(3, 4)], vec![vec![q(1, 4), q(3, 4)]]);
        assert_eq!(assign_edges(&g2, &s2).unwrap(), vec![Some(1)]);
    }

    #[test]
    fn edge_without_u_is_internal_error() {
        let g = inst(2, vec![vec![0, 1]], vec![1; 2], vec![1; 2]);
        let s = RoundingState::new(&g, 2, vec![q(1, 4), q(1, 4)], vec![vec![q(1, 4), q(1, 4)]]);
        let err = assign_edges(&g, &s).unwrap_err();
        assert!(err.is_internal());
    }

    #[test]
    fn propagate_identity_and_scaling() {
        let g = inst(2, vec![vec![0, 1]], vec![2, 2], vec![1; 2]);
        let mut s = state(&g, 2, vec![q(1, 1), q(1, 2)], vec![vec![q(3, 4), q(1, 4)]]);
        s.base.partition.fractional = vec![1];
        s.base.partition.above = vec![0];
        s.owner = assign_edges(&g, &s.base).unwrap();
        assert_eq!(propagate_y(&g, &s, &s.base.xstar.clone()), s.base.ystar);
        let y = propagate_y(&g, &s, &[q(1, 1), q(1, 4)]);
        assert_eq!(y[0][1], q(1, 8));
        assert_eq!(y[0][0], q(3, 4) + q(1, 8));
        let total: Rational = y[0].iter().sum();
        assert_eq!(total, Rational::one());
    }

    #[test]
    fn coupling_examples() {
        let g = inst(2, vec![vec![0, 1]], vec![2, 2], vec![1; 2]);
        let mut s = state(&g, 2, vec![q(1, 1), q(1, 2)], vec![vec![q(3, 4), q(1, 4)]]);
        s.base.partition.fractional = vec![1];
        s.base.partition.above = vec![0];
        s.owner = assign_edges(&g, &s.base).unwrap();
        let m = crate::relaxations::coupling_matrix(&g, &s);
        assert_eq!(m.get(0, 1), q(1, 2));
        assert_eq!(m.get(1, 0), q(0, 1));

        // two parallel edges with y = 1/6 on a vertex at 1/3
        let g = inst(2, vec![vec![0, 1], vec![0, 1]], vec![2, 2], vec![1; 2]);
        let s = {
            let mut s = state(&g, 2, vec![q(1, 1), q(1, 3)], vec![vec![q(5, 6), q(1, 6)]; 2]);
            s.owner = assign_edges(&g, &s.base).unwrap();
            s
        };
        let m = crate::relaxations::coupling_matrix(&g, &s);
        assert_eq!(m.get(0, 1), q(1, 1));
    }

    #[test]
    fn lp3_current_point_feasible_and_no_w() {
        // Two U_> vertices, no W: each row reads (k - |T|) x_u >= load.
        let g = inst(2, vec![vec![0, 1], vec![0, 1], vec![0, 1]], vec![4, 2], vec![2, 2]);
        let y = vec![vec![q(1, 2), q(1, 2)]; 3];
        let mut s = state(&g, 2, vec![q(1, 1), q(1, 1)], y);
        s.owner = assign_edges(&g, &s.base).unwrap();
        let b = build_lp3(&g, &s).unwrap();
        let z = b.restrict(&s.base.xstar, &s.base.ystar);
        assert!(b.lp.is_feasible(&z));
        let sol = solve_extreme(&b.lp).unwrap();
        // max(1/2, (3/2)/4) + max(1/2, (3/2)/2)
        assert_eq!(sol.objective_value, q(1, 2) + q(3, 4));
        assert!(sol.objective_value <= b.lp.objective_value(&z));
    }

    #[test]
    fn lp4_single_edge_row() {
        // x = (1, 1/4): u = 0, w = 1, y(e, w) = 1/4
        let g = inst(2, vec![vec![0, 1]], vec![1, 1], vec![1, 1]);
        let lp1 = build_lp1(&g);
        let mut vals = vec![Rational::zero(); lp1.lp.num_variables()];
        vals[lp1.x_var[0].unwrap()] = q(1, 1);
        vals[lp1.x_var[1].unwrap()] = q(1, 4);
        vals[lp1.y_var[0][0].unwrap()] = q(3, 4);
        vals[lp1.y_var[0][1].unwrap()] = q(1, 4);
        let sol = crate::lp::BasicSolution { values: vals, objective_value: q(5, 4), tight_set: vec![] };
        let gs = GraphState::from_lp1(&g, &lp1, &sol).unwrap();
        let b = build_lp4(&g, &gs).unwrap();
        assert_eq!(b.lp.num_variables(), 1);
        let opt = solve_extreme(&b.lp).unwrap();
        assert_eq!(opt.values, vec![q(1, 4)]);
        assert!(b.lp.constraints[0].is_tight(&opt.values));
    }

    #[test]
    fn lp4_path_hand_solution() {
        // w1 - u - w2 with x_w = 1/4 and y(e,w) = 1/4 on both sides:
        // the single row x_w1 + x_w2 >= 1/2 is attained at the first vertex
        // of the simplex ordering, total 1/2.
        let g = inst(3, vec![vec![0, 1], vec![1, 2]], vec![1, 2, 1], vec![1; 3]);
        let lp1 = build_lp1(&g);
        let mut vals = vec![Rational::zero(); lp1.lp.num_variables()];
        for (v, x) in [(0, q(1, 4)), (1, q(3, 4)), (2, q(1, 4))] {
            vals[lp1.x_var[v].unwrap()] = x;
        }
        for e in 0..2 {
            for (p, &v) in g.edge(e).iter().enumerate() {
                vals[lp1.y_var[e][p].unwrap()] = if v == 1 { q(3, 4) } else { q(1, 4) };
            }
        }
        let sol = crate::lp::BasicSolution { values: vals, objective_value: q(5, 4), tight_set: vec![] };
        let gs = GraphState::from_lp1(&g, &lp1, &sol).unwrap();
        let b = build_lp4(&g, &gs).unwrap();
        let opt = solve_extreme(&b.lp).unwrap();
        assert_eq!(opt.objective_value, q(1, 2));
        assert_eq!(b.lp.constraints[0].rhs, q(1, 2));
    }

    #[test]
    fn lp4_rejects_hyperedges() {
        let g = inst(3, vec![vec![0, 1, 2]], vec![1; 3], vec![1; 3]);
        assert!(matches!(round_lp4(&g, &mut Checker::new(true)), Err(Error::RankTooLarge(3))));
    }

    #[test]
    fn matching_examples() {
        let mut m = CouplingMatrix::default();
        assert_eq!(certify_matching(&m, &[], &[0]).unwrap(), vec![]);
        m = CouplingMatrix::from_entries([(0, 2, q(1, 1)), (1, 3, q(1, 1))]);
        assert_eq!(certify_matching(&m, &[2, 3], &[0, 1]).unwrap(), vec![(0, 2), (1, 3)]);
        // both w only adjacent to u = 0
        m = CouplingMatrix::from_entries([(0, 2, q(1, 1)), (0, 3, q(1, 1))]);
        assert_eq!(certify_matching(&m, &[2, 3], &[0]), Err(3));
        // needs an augmenting path
        m = CouplingMatrix::from_entries([(0, 2, q(1, 1)), (0, 3, q(1, 1)), (1, 2, q(1, 1))]);
        let pairs = certify_matching(&m, &[2, 3], &[0, 1]).unwrap();
        assert_eq!(pairs, vec![(1, 2), (0, 3)]);
    }

    fn run_all(g: &Instance) -> Vec<RoundingOutput> {
        let mut outs = vec![round_lp3(g, &mut Checker::new(true)).unwrap()];
        if g.rank() <= 2 {
            outs.push(round_lp4(g, &mut Checker::new(true)).unwrap());
        }
        for out in &outs {
            let sol = recover_assignment(g, &out.x).unwrap();
            verify_cover(g, &sol).unwrap();
        }
        outs
    }

    #[test]
    fn single_edge_both_variants() {
        let g = inst(2, vec![vec![0, 1]], vec![1, 1], vec![1, 1]);
        for out in run_all(&g) {
            assert!(out.cost() <= 2);
        }
    }

    #[test]
    fn triangle_both_variants() {
        let g = inst(3, vec![vec![0, 1], vec![1, 2], vec![2, 0]], vec![2; 3], vec![1; 3]);
        for out in run_all(&g) {
            assert!(out.cost() <= 3);
        }
    }

    #[test]
    fn four_cycle_graph_variant() {
        let g = inst(4, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]], vec![1; 4], vec![2; 4]);
        for out in run_all(&g) {
            assert!(Rational::from(out.cost()) <= Rational::from(2u64) * &out.lp1_value);
        }
    }

    #[test]
    fn hyperedge_covering_variant() {
        let g = inst(4, vec![vec![0, 1, 2], vec![1, 2, 3], vec![0, 3]], vec![1, 2, 1, 1], vec![1; 4]);
        let out = run_all(&g).remove(0);
        assert_eq!(out.trace.f, 3);
        assert!(Rational::from(out.cost()) <= Rational::from(3u64) * &out.lp1_value);
    }

    #[test]
    fn zero_move_exits_immediately() {
        // Vertex 1 has no capacity; once vertex 0 is fixed LP3 is empty.
        let g = inst(2, vec![vec![0, 1]], vec![1, 0], vec![1, 1]);
        let out = round_lp3(&g, &mut Checker::new(true)).unwrap();
        assert_eq!(out.x, vec![1, 0]);
        let last = out.trace.iterations.last().unwrap();
        assert_eq!(last.events.last(), Some(&TraceEvent::PathComplete));
        assert!(out.trace.iterations.len() <= 2);
    }
}
