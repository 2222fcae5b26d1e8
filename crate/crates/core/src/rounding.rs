//! Iterative rounding with repeated extreme-point solves of LP2.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::BasicSolution;
use crate::rational::Rational;
use crate::relaxations::{build_lp1, build_lp2, BuiltLp, LabelKind};
use crate::trace::{
    check_counts, ensure, lp1_error, solve_checked, Checker, IterationRecord, RoundingOutput,
    RoundingTrace, SetSizes, TerminalRecord, TraceEvent,
};

/// Threshold parameter used for an instance: its rank, but at least 2.
pub fn effective_f(inst: &Instance) -> usize {
    inst.rank().max(2)
}

/// Split of vertices by their value against `1/f`. Lists are ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    /// `x* > 1/f`
    pub above: Vec<usize>,
    /// `x* = 1/f`
    pub at_threshold: Vec<usize>,
    /// `0 < x* < 1/f`
    pub fractional: Vec<usize>,
    /// `x* = 0`
    pub zero: Vec<usize>,
}

/// Classifies every vertex of `xstar` at threshold `1/f`.
pub fn classify(xstar: &[Rational], f: usize) -> Partition {
    classify_where(xstar, f, |_| true)
}

fn classify_where(xstar: &[Rational], f: usize, keep: impl Fn(usize) -> bool) -> Partition {
    let t = Rational::new(1, f as i64);
    let mut p = Partition::default();
    for (v, x) in xstar.iter().enumerate().filter(|(v, _)| keep(*v)) {
        if x.is_zero() {
            p.zero.push(v);
        } else if *x < t {
            p.fractional.push(v);
        } else if *x == t {
            p.at_threshold.push(v);
        } else {
            p.above.push(v);
        }
    }
    p
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundingState {
    pub f: usize,
    pub xstar: Vec<Rational>,
    /// `y*(e, v)` by `[edge][position in edge]`.
    pub ystar: Vec<Vec<Rational>>,
    /// Owner `u` of each tight edge (`e ∈ T_u`).
    pub tight_owner: Vec<Option<usize>>,
    /// `|T_u|`.
    pub tight_count: Vec<usize>,
    pub decided: Vec<bool>,
    pub bar_x: Vec<Option<u64>>,
    pub bar_y: Vec<Vec<Option<Rational>>>,
    /// Endpoints removed from the working copy of an edge (covering variant).
    pub dropped: Vec<Vec<bool>>,
    pub partition: Partition,
}

impl RoundingState {
    pub fn new(inst: &Instance, f: usize, xstar: Vec<Rational>, ystar: Vec<Vec<Rational>>) -> Self {
        let n = inst.num_vertices();
        let shape = |fill: bool| inst.edges().iter().map(|e| vec![fill; e.len()]).collect();
        let mut s = RoundingState {
            f,
            xstar,
            ystar,
            tight_owner: vec![None; inst.num_edges()],
            tight_count: vec![0; n],
            decided: vec![false; n],
            bar_x: vec![None; n],
            bar_y: inst.edges().iter().map(|e| vec![None; e.len()]).collect(),
            dropped: shape(false),
            partition: Partition::default(),
        };
        s.reclassify();
        s
    }

    /// Starts from an LP1 vertex.
    pub fn from_lp1(inst: &Instance, f: usize, built: &BuiltLp, sol: &BasicSolution) -> Self {
        let x = (0..inst.num_vertices()).map(|v| built.x_value(sol, v).unwrap().clone()).collect();
        let y = built
            .y_var
            .iter()
            .map(|row| row.iter().map(|j| sol.values[j.unwrap()].clone()).collect())
            .collect();
        Self::new(inst, f, x, y)
    }

    pub fn threshold(&self) -> Rational {
        Rational::new(1, self.f as i64)
    }

    pub fn reclassify(&mut self) {
        let decided = &self.decided;
        self.partition = classify_where(&self.xstar, self.f, |v| !decided[v]);
    }

    pub fn is_above(&self, v: usize) -> bool {
        !self.decided[v] && self.partition.above.binary_search(&v).is_ok()
    }

    pub fn is_at_threshold(&self, v: usize) -> bool {
        !self.decided[v] && self.partition.at_threshold.binary_search(&v).is_ok()
    }

    pub fn is_fractional(&self, v: usize) -> bool {
        !self.decided[v] && self.partition.fractional.binary_search(&v).is_ok()
    }

    /// `v ∈ U = U_> ∪ U_=`.
    pub fn in_u(&self, v: usize) -> bool {
        self.is_above(v) || self.is_at_threshold(v)
    }

    pub fn is_tight(&self, e: usize) -> bool {
        self.tight_owner[e].is_some()
    }

    /// Endpoint at position `p` of `e` is undecided and still in the edge.
    pub fn is_live(&self, inst: &Instance, e: usize, p: usize) -> bool {
        !self.dropped[e][p] && !self.decided[inst.edge(e)[p]]
    }

    /// `1 - Σ ȳ(e, v)` over endpoints no longer live.
    pub fn residual(&self, inst: &Instance, e: usize) -> Rational {
        let mut r = Rational::one();
        for p in 0..inst.edge(e).len() {
            if !self.is_live(inst, e, p) {
                if let Some(b) = &self.bar_y[e][p] {
                    r -= b;
                }
            }
        }
        r
    }

    /// Non-tight edges with at least one live endpoint. An edge with no live
    /// endpoint must already be fully covered.
    pub fn live_edges(&self, inst: &Instance) -> Result<Vec<bool>> {
        let mut out = vec![false; inst.num_edges()];
        for e in 0..inst.num_edges() {
            if self.is_tight(e) {
                continue;
            }
            if (0..inst.edge(e).len()).any(|p| self.is_live(inst, e, p)) {
                out[e] = true;
            } else {
                let r = self.residual(inst, e);
                if !r.is_zero() {
                    return Err(Error::InconsistentState(format!(
                        "edge {e} has no undecided endpoint but residual coverage {r}"
                    )));
                }
            }
        }
        Ok(out)
    }

    /// `k_u - |T_u|`.
    pub fn residual_capacity(&self, inst: &Instance, u: usize) -> i64 {
        inst.capacity(u) as i64 - self.tight_count[u] as i64
    }

    /// `Σ_{e ∈ δ(u) \ T} y*(e, u)` over live incidences.
    pub fn live_load(&self, inst: &Instance, u: usize) -> Rational {
        inst.incident(u)
            .iter()
            .filter(|&&e| !self.is_tight(e))
            .filter_map(|&e| {
                let p = inst.position(e, u).unwrap();
                self.is_live(inst, e, p).then(|| self.ystar[e][p].clone())
            })
            .sum()
    }

    /// `Σ_{v ∉ D} x*_v`.
    pub fn cost(&self) -> Rational {
        (0..self.xstar.len()).filter(|&v| !self.decided[v]).map(|v| &self.xstar[v]).sum()
    }

    pub fn sizes(&self) -> SetSizes {
        SetSizes {
            above: self.partition.above.len(),
            at_threshold: self.partition.at_threshold.len(),
            fractional: self.partition.fractional.len(),
            zero: self.partition.zero.len(),
            decided: self.decided.iter().filter(|d| **d).count(),
            tight: self.tight_owner.iter().filter(|o| o.is_some()).count(),
        }
    }

    /// Checks `Σ_{live} y*(e, v) = residual(e)` on every non-tight edge.
    pub fn coverage_identity(&self, inst: &Instance) -> std::result::Result<(), String> {
        for e in (0..inst.num_edges()).filter(|&e| !self.is_tight(e)) {
            let live: Rational = (0..inst.edge(e).len())
                .filter(|&p| self.is_live(inst, e, p))
                .map(|p| &self.ystar[e][p])
                .sum();
            let r = self.residual(inst, e);
            if live != r {
                return Err(format!("edge {e}: live coverage {live} != residual {r}"));
            }
        }
        Ok(())
    }

    /// Marks `v` decided with `bar_x = copies`.
    pub(crate) fn decide(&mut self, v: usize, copies: u64) {
        self.decided[v] = true;
        self.bar_x[v] = Some(copies);
    }

    /// Puts `e` into `T_u`: `ȳ(e,u) = 1`, zero elsewhere.
    pub(crate) fn make_tight(&mut self, inst: &Instance, e: usize, u: usize) {
        self.tight_owner[e] = Some(u);
        self.tight_count[u] += 1;
        for (p, &v) in inst.edge(e).iter().enumerate() {
            self.bar_y[e][p] = Some(if v == u { Rational::one() } else { Rational::zero() });
        }
    }

    /// Smallest `(edge, vertex)` with `u ∈ U`, `e ∉ T` and `y*(e,u) = x*_u`.
    pub fn find_tight_pair(&self, inst: &Instance) -> Option<(usize, usize)> {
        for e in (0..inst.num_edges()).filter(|&e| !self.is_tight(e)) {
            let mut best: Option<usize> = None;
            for (p, &u) in inst.edge(e).iter().enumerate() {
                if self.is_live(inst, e, p) && self.in_u(u) && self.ystar[e][p] == self.xstar[u] {
                    best = Some(best.map_or(u, |b| b.min(u)));
                }
            }
            if let Some(u) = best {
                return Some((e, u));
            }
        }
        None
    }

    /// Final `ȳ`: decided values where set, `y*` on live incidences.
    pub fn final_bar_y(&self, inst: &Instance) -> Vec<Vec<Rational>> {
        (0..inst.num_edges())
            .map(|e| {
                (0..inst.edge(e).len())
                    .map(|p| match &self.bar_y[e][p] {
                        Some(b) => b.clone(),
                        None if self.is_live(inst, e, p) => self.ystar[e][p].clone(),
                        None => Rational::zero(),
                    })
                    .collect()
            })
            .collect()
    }
}

/// Decides every vertex of `Z` with no copies. Returns the vertices fixed.
pub fn apply_z_fix(inst: &Instance, state: &mut RoundingState) -> Vec<usize> {
    let zs: Vec<usize> = state.partition.zero.iter().copied().filter(|&z| !state.decided[z]).collect();
    for &z in &zs {
        state.decide(z, 0);
        for &e in inst.incident(z) {
            let p = inst.position(e, z).unwrap();
            if state.bar_y[e][p].is_none() {
                state.bar_y[e][p] = Some(Rational::zero());
            }
        }
    }
    zs
}

/// Covers the lexicographically smallest tight pair, if any.
pub fn apply_tight_edge(inst: &Instance, state: &mut RoundingState) -> Option<(usize, usize)> {
    let (e, u) = state.find_tight_pair(inst)?;
    state.make_tight(inst, e, u);
    Some((e, u))
}

/// Decides every vertex of `U_=` with one copy, freezing its coverage.
pub fn apply_ueq_fix(inst: &Instance, state: &mut RoundingState) -> Vec<usize> {
    let us: Vec<usize> =
        state.partition.at_threshold.iter().copied().filter(|&u| !state.decided[u]).collect();
    for &u in &us {
        state.decide(u, 1);
        for &e in inst.incident(u) {
            if state.is_tight(e) {
                continue;
            }
            let p = inst.position(e, u).unwrap();
            state.bar_y[e][p] = Some(state.ystar[e][p].clone());
        }
    }
    us
}

/// Outcome of the terminal lemma checks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TerminationReport {
    /// Check name to pass flag, for every check that ran.
    pub checks: BTreeMap<String, bool>,
    pub violations: Vec<String>,
    pub w: usize,
    pub u_at_mult: usize,
}

impl TerminationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, name: &str, result: std::result::Result<(), String>) {
        let ok = result.is_ok();
        let entry = self.checks.entry(name.to_string()).or_insert(true);
        *entry &= ok;
        if let Err(d) = result {
            self.violations.push(format!("{name}: {d}"));
        }
    }
}

/// Vertices of `U` with `x*_u = m_u`.
pub(crate) fn u_at_mult(inst: &Instance, state: &RoundingState) -> usize {
    (0..inst.num_vertices())
        .filter(|&u| state.in_u(u) && state.xstar[u] == Rational::from(inst.multiplicity(u)))
        .count()
}

/// Terminal checks on the last LP2 vertex: the intersection bound on every
/// non-tight edge, `|W| <= |U^=|`, and per-family counts of the basis rows.
pub fn check_termination_lemmas(
    inst: &Instance,
    state: &RoundingState,
    built: &BuiltLp,
    sol: &BasicSolution,
) -> TerminationReport {
    let mut rep = TerminationReport::default();
    let f = Rational::from(state.f);

    // (a) Σ_{v ∈ e\D} y*(e,v) >= |e \ D| / f
    for e in (0..inst.num_edges()).filter(|&e| !state.is_tight(e)) {
        let live: Vec<usize> = (0..inst.edge(e).len()).filter(|&p| state.is_live(inst, e, p)).collect();
        if live.is_empty() {
            continue;
        }
        let sum: Rational = live.iter().map(|&p| &state.ystar[e][p]).sum();
        let bound = Rational::from(live.len()) / &f;
        rep.record(
            "intersect-u",
            ensure(sum >= bound, || format!("edge {e}: coverage {sum} < {bound}")),
        );
    }

    // (b) |W| <= |U^=|
    rep.w = state.partition.fractional.iter().filter(|&&w| !state.decided[w]).count();
    rep.u_at_mult = u_at_mult(inst, state);
    rep.record(
        "w-le-u-at-mult",
        ensure(rep.w <= rep.u_at_mult, || format!("|W| = {} > |U^=| = {}", rep.w, rep.u_at_mult)),
    );

    // (c) basis rows per family
    let mut edge_rows = 0usize;
    let mut w_rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut u_nonneg: BTreeMap<usize, usize> = BTreeMap::new();
    let mut forbidden = Vec::new();
    for &i in &sol.tight_set {
        let label = built.labels[i];
        match label.kind {
            LabelKind::EdgeCover => edge_rows += 1,
            LabelKind::Capacity | LabelKind::YLeX | LabelKind::YNonneg | LabelKind::XNonneg => {
                let v = label.vertex.unwrap();
                if state.is_fractional(v) {
                    if label.kind == LabelKind::XNonneg {
                        forbidden.push(label);
                    } else {
                        *w_rows.entry(v).or_insert(0) += 1;
                    }
                } else if label.kind == LabelKind::YLeX {
                    forbidden.push(label);
                } else if label.kind == LabelKind::YNonneg {
                    *u_nonneg.entry(label.edge.unwrap()).or_insert(0) += 1;
                }
            }
            LabelKind::LowerOneOverF | LabelKind::UpperOneOverF => forbidden.push(label),
            _ => {}
        }
    }
    let live_edges = state.live_edges(inst).unwrap_or_default();
    let num_live = live_edges.iter().filter(|l| **l).count();
    rep.record(
        "basis-edge-rows",
        ensure(edge_rows <= num_live, || format!("{edge_rows} edge rows for {num_live} live edges")),
    );
    for (&w, &count) in &w_rows {
        let deg = inst
            .incident(w)
            .iter()
            .filter(|&&e| live_edges.get(e).copied().unwrap_or(false))
            .count();
        rep.record(
            "basis-w-rows",
            ensure(count <= deg, || format!("vertex {w}: {count} rows > live degree {deg}")),
        );
    }
    for (&e, &count) in &u_nonneg {
        let above = (0..inst.edge(e).len())
            .filter(|&p| state.is_live(inst, e, p) && state.is_above(inst.edge(e)[p]))
            .count();
        rep.record(
            "basis-u-nonneg",
            ensure(count < above, || format!("edge {e}: {count} tight y >= 0 rows among {above} U_> endpoints")),
        );
    }
    rep.record(
        "basis-forbidden-rows",
        ensure(forbidden.is_empty(), || {
            let names: Vec<String> = forbidden.iter().map(ToString::to_string).collect();
            format!("rows that cannot be tight at termination: {}", names.join(", "))
        }),
    );
    rep
}

/// Iterative rounding on LP2 end to end. Returns integral copy counts and the run trace.
pub fn round_lp2(inst: &Instance, checker: &mut Checker) -> Result<RoundingOutput> {
    let f = effective_f(inst);
    let mut solves = 0usize;
    let lp1 = build_lp1(inst);
    let sol1 = solve_checked(&lp1.lp, checker, &mut solves).map_err(lp1_error)?;
    let lp1_value = sol1.objective_value.clone();
    let mut state = RoundingState::from_lp1(inst, f, &lp1, &sol1);
    checker.check("coverage-identity", || state.coverage_identity(inst))?;

    let threshold = state.threshold();
    let mut ever_u: Vec<bool> = (0..inst.num_vertices()).map(|v| state.in_u(v)).collect();
    let mut iterations = Vec::new();

    let (built, sol) = loop {
        let old_x = state.xstar.clone();
        let old_cost = state.cost();
        let mut events = Vec::new();

        let zs = apply_z_fix(inst, &mut state);
        let tight = apply_tight_edge(inst, &mut state);
        let ueq = apply_ueq_fix(inst, &mut state);
        let charged: Rational = zs.iter().chain(&ueq).map(|&v| &old_x[v]).sum();
        if !zs.is_empty() {
            events.push(TraceEvent::ZFix { vertices: zs });
        }
        if let Some((edge, vertex)) = tight {
            events.push(TraceEvent::TightEdge { edge, vertex });
        }
        if !ueq.is_empty() {
            events.push(TraceEvent::UeqFix { vertices: ueq });
        }

        let built = build_lp2(inst, &state)?;
        checker.check("old-point-feasible", || {
            let z = built.restrict(&state.xstar, &state.ystar);
            ensure(built.lp.is_feasible(&z), || "previous vertex violates the rebuilt LP2".into())
        })?;
        let sol = solve_checked(&built.lp, checker, &mut solves)?;
        checker.check("monotone-charging", || {
            let bound = &old_cost - &charged;
            ensure(sol.objective_value <= bound, || {
                format!("new cost {} > old cost {old_cost} - charged {charged}", sol.objective_value)
            })
        })?;

        for v in 0..inst.num_vertices() {
            if let Some(x) = built.x_value(&sol, v) {
                state.xstar[v] = x.clone();
            }
        }
        for (e, row) in built.y_var.iter().enumerate() {
            for (p, j) in row.iter().enumerate() {
                if let Some(j) = j {
                    state.ystar[e][p] = sol.values[*j].clone();
                }
            }
        }
        state.reclassify();
        checker.check("coverage-identity", || state.coverage_identity(inst))?;
        checker.check("persistence", || {
            for v in (0..inst.num_vertices()).filter(|&v| ever_u[v] && !state.decided[v]) {
                ensure(state.xstar[v] >= threshold, || format!("vertex {v} fell below 1/f to {}", state.xstar[v]))?;
            }
            Ok(())
        })?;
        for (v, flag) in ever_u.iter_mut().enumerate() {
            *flag |= state.in_u(v);
        }

        iterations.push(IterationRecord {
            iteration: iterations.len(),
            objective: sol.objective_value.clone(),
            events,
            sizes: state.sizes(),
        });

        let guard = state.partition.zero.is_empty()
            && state.partition.at_threshold.is_empty()
            && state.find_tight_pair(inst).is_none();
        if guard {
            break (built, sol);
        }
    };

    let report = check_termination_lemmas(inst, &state, &built, &sol);
    checker.check("termination-lemmas", || {
        if report.passed() {
            Ok(())
        } else {
            Err(report.violations.join("; "))
        }
    })?;

    checker.check("final-round-up", || round_up_bound(inst, &state))?;

    let x = finish(inst, &mut state)?;
    checker.check("persistence", || {
        for v in (0..inst.num_vertices()).filter(|&v| ever_u[v]) {
            ensure(x[v] >= 1, || format!("vertex {v} entered U but ends with {} copies", x[v]))?;
        }
        Ok(())
    })?;
    check_output(inst, &state, &x, &lp1, &lp1_value, f, checker)?;

    let cost = x.iter().sum();
    let terminal = TerminalRecord {
        w: report.w,
        u_at_mult: report.u_at_mult,
        w_fractional: None,
        matching: None,
        checks: report.checks,
    };
    let trace = RoundingTrace {
        algorithm: "iter-lp2",
        rank: inst.rank(),
        f,
        lp1_value: lp1_value.clone(),
        iterations,
        terminal,
        cost,
        lp_solves: solves,
        checks: check_counts(checker),
        notes: Vec::new(),
    };
    Ok(RoundingOutput { x, lp1_value, trace })
}

/// `|W| + Σ_{U^=} m_u + Σ_{U \ U^=} ⌈x*_u⌉ <= f · Σ_{v ∉ D} x*_v` at the last vertex.
pub(crate) fn round_up_bound(inst: &Instance, state: &RoundingState) -> std::result::Result<(), String> {
    let mut lhs = Rational::zero();
    for v in (0..inst.num_vertices()).filter(|&v| !state.decided[v]) {
        let m = Rational::from(inst.multiplicity(v));
        if state.is_fractional(v) {
            lhs += Rational::one();
        } else if state.xstar[v] == m {
            lhs += m;
        } else {
            lhs += Rational::from(state.xstar[v].ceil_u64().unwrap_or(u64::MAX));
        }
    }
    let rhs = Rational::from(state.f) * state.cost();
    ensure(lhs <= rhs, || format!("round-up cost {lhs} > f * last cost {rhs}"))
}

/// Rounds every undecided vertex up and returns the integral copy counts.
pub(crate) fn finish(inst: &Instance, state: &mut RoundingState) -> Result<Vec<u64>> {
    for v in 0..inst.num_vertices() {
        if !state.decided[v] {
            let c = state.xstar[v]
                .ceil_u64()
                .ok_or_else(|| Error::InconsistentState(format!("vertex {v} has value {}", state.xstar[v])))?;
            state.bar_x[v] = Some(c);
        }
    }
    Ok(state.bar_x.iter().map(|b| b.unwrap()).collect())
}

/// Ratio against LP1 and fractional feasibility of `(x̄, ȳ)` for LP1.
pub(crate) fn check_output(
    inst: &Instance,
    state: &RoundingState,
    x: &[u64],
    lp1: &BuiltLp,
    lp1_value: &Rational,
    f: usize,
    checker: &mut Checker,
) -> Result<()> {
    checker.check("ratio", || {
        let cost: u64 = x.iter().sum();
        let bound = Rational::from(f) * lp1_value;
        ensure(Rational::from(cost) <= bound, || format!("cost {cost} > f * LP1 = {bound}"))
    })?;
    checker.check("integral-feasible", || {
        let xs: Vec<Rational> = x.iter().map(|&c| Rational::from(c)).collect();
        let z = lp1.restrict(&xs, &state.final_bar_y(inst));
        match lp1.lp.constraints.iter().position(|c| !c.is_satisfied(&z)) {
            None => Ok(()),
            Some(i) => Err(format!("rounded solution violates {}", lp1.labels[i])),
        }
    })
}
