//! Builders for the four relaxations used by the rounding algorithms.
//!
//! Every row carries an [`LpLabel`] naming its constraint family and subject,
//! so lemma checks can reason about which families are tight at a vertex.
//! Row order is canonical: families in a fixed order, subjects ascending.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::covering::{CoveringState, GraphState};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{BasicSolution, LpProblem, Relation};
use crate::rational::Rational;
use crate::rounding::RoundingState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelKind {
    /// `Σ_v y(e,v) = 1 - decided coverage`
    EdgeCover,
    /// `y(e,v) <= x_v`
    YLeX,
    /// `Σ_e y(e,v) <= k' x_v`
    Capacity,
    /// `x_v <= m_v`
    MultUpper,
    /// `x_u >= 1/f`
    LowerOneOverF,
    /// `x_w <= 1/f`
    UpperOneOverF,
    /// `x_v >= 0`
    XNonneg,
    /// `y(e,v) >= 0`
    YNonneg,
    /// covering row of the coupled relaxations
    CoveringRow,
    /// `x_w <= 1`
    Box,
}

impl LabelKind {
    pub fn name(self) -> &'static str {
        match self {
            LabelKind::EdgeCover => "edge-cover",
            LabelKind::YLeX => "y-le-x",
            LabelKind::Capacity => "capacity",
            LabelKind::MultUpper => "mult-upper",
            LabelKind::LowerOneOverF => "lower-1-over-f",
            LabelKind::UpperOneOverF => "upper-1-over-f",
            LabelKind::XNonneg => "x-nonneg",
            LabelKind::YNonneg => "y-nonneg",
            LabelKind::CoveringRow => "covering-row",
            LabelKind::Box => "box",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LpLabel {
    pub kind: LabelKind,
    pub edge: Option<usize>,
    pub vertex: Option<usize>,
}

impl LpLabel {
    fn vertex(kind: LabelKind, v: usize) -> Self {
        LpLabel { kind, edge: None, vertex: Some(v) }
    }
    fn edge(kind: LabelKind, e: usize) -> Self {
        LpLabel { kind, edge: Some(e), vertex: None }
    }
    fn pair(kind: LabelKind, e: usize, v: usize) -> Self {
        LpLabel { kind, edge: Some(e), vertex: Some(v) }
    }
}

impl fmt::Display for LpLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        match (self.edge, self.vertex) {
            (Some(e), Some(v)) => write!(f, "(e{e},v{v})"),
            (Some(e), None) => write!(f, "(e{e})"),
            (None, Some(v)) => write!(f, "(v{v})"),
            (None, None) => Ok(()),
        }
    }
}

/// A built relaxation with its labels and variable maps.
#[derive(Debug, Clone)]
pub struct BuiltLp {
    pub lp: LpProblem,
    pub labels: Vec<LpLabel>,
    /// Variable index of `x_v`, if present.
    pub x_var: Vec<Option<usize>>,
    /// Variable index of `y(e, v)` by `[edge][position in edge]`, if present.
    pub y_var: Vec<Vec<Option<usize>>>,
}

impl BuiltLp {
    fn new(inst: &Instance) -> Self {
        BuiltLp {
            lp: LpProblem::new(),
            labels: Vec::new(),
            x_var: vec![None; inst.num_vertices()],
            y_var: inst.edges().iter().map(|e| vec![None; e.len()]).collect(),
        }
    }

    fn add_x(&mut self, v: usize) -> usize {
        let j = self.lp.add_variable(format!("x{v}"));
        self.x_var[v] = Some(j);
        j
    }

    fn add_y(&mut self, e: usize, p: usize, v: usize) -> usize {
        let j = self.lp.add_variable(format!("y{e}_{v}"));
        self.y_var[e][p] = Some(j);
        j
    }

    fn row(&mut self, label: LpLabel, coeffs: Vec<(usize, Rational)>, rel: Relation, rhs: Rational) {
        self.lp.add_constraint(coeffs, rel, rhs);
        self.labels.push(label);
    }

    /// `x_v` at `sol`, when `x_v` is a variable of this relaxation.
    pub fn x_value<'a>(&self, sol: &'a BasicSolution, v: usize) -> Option<&'a Rational> {
        self.x_var[v].map(|j| &sol.values[j])
    }

    /// Restricts per-vertex / per-(edge, position) values to this relaxation's
    /// variables.
    pub fn restrict(&self, x: &[Rational], y: &[Vec<Rational>]) -> Vec<Rational> {
        let mut z = vec![Rational::zero(); self.lp.num_variables()];
        for (v, j) in self.x_var.iter().enumerate() {
            if let Some(j) = j {
                z[*j] = x[v].clone();
            }
        }
        for (e, row) in self.y_var.iter().enumerate() {
            for (p, j) in row.iter().enumerate() {
                if let Some(j) = j {
                    z[*j] = y[e][p].clone();
                }
            }
        }
        z
    }

    /// Count of tight-set rows per label kind.
    pub fn tight_kinds(&self, sol: &BasicSolution) -> BTreeMap<LabelKind, usize> {
        let mut out = BTreeMap::new();
        for &i in &sol.tight_set {
            *out.entry(self.labels[i].kind).or_insert(0) += 1;
        }
        out
    }

    pub fn dump(&self) -> String {
        let labels: Vec<String> = self.labels.iter().map(ToString::to_string).collect();
        self.lp.dump(Some(&labels))
    }
}

fn int(n: u64) -> Rational {
    Rational::from(n)
}

fn one() -> Rational {
    Rational::one()
}

/// LP1: the natural relaxation over all vertices and all (edge, endpoint) pairs.
pub fn build_lp1(inst: &Instance) -> BuiltLp {
    let mut b = BuiltLp::new(inst);
    let xs: Vec<usize> = (0..inst.num_vertices()).map(|v| b.add_x(v)).collect();
    let pairs = sorted_pairs(inst, |_, _| true);
    for &(e, p, v) in &pairs {
        b.add_y(e, p, v);
    }
    b.lp.objective = xs.iter().map(|&j| (j, one())).collect();

    for e in 0..inst.num_edges() {
        let coeffs = pairs_of(&pairs, e).map(|(p, _)| (b.y_var[e][p].unwrap(), one())).collect();
        b.row(LpLabel::edge(LabelKind::EdgeCover, e), coeffs, Relation::Eq, one());
    }
    for &(e, p, v) in &pairs {
        let coeffs = vec![(b.y_var[e][p].unwrap(), one()), (xs[v], -one())];
        b.row(LpLabel::pair(LabelKind::YLeX, e, v), coeffs, Relation::Le, Rational::zero());
    }
    for v in 0..inst.num_vertices() {
        let mut coeffs: Vec<(usize, Rational)> = inst
            .incident(v)
            .iter()
            .map(|&e| (b.y_var[e][inst.position(e, v).unwrap()].unwrap(), one()))
            .collect();
        coeffs.push((xs[v], -int(inst.capacity(v))));
        b.row(LpLabel::vertex(LabelKind::Capacity, v), coeffs, Relation::Le, Rational::zero());
    }
    for v in 0..inst.num_vertices() {
        b.row(LpLabel::vertex(LabelKind::MultUpper, v), vec![(xs[v], one())], Relation::Le, int(inst.multiplicity(v)));
    }
    for v in 0..inst.num_vertices() {
        b.row(LpLabel::vertex(LabelKind::XNonneg, v), vec![(xs[v], one())], Relation::Ge, Rational::zero());
    }
    for &(e, p, v) in &pairs {
        b.row(LpLabel::pair(LabelKind::YNonneg, e, v), vec![(b.y_var[e][p].unwrap(), one())], Relation::Ge, Rational::zero());
    }
    b
}

/// `(edge, position, vertex)` triples accepted by `keep`, ordered by
/// (edge index, vertex index).
fn sorted_pairs(inst: &Instance, keep: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (e, edge) in inst.edges().iter().enumerate() {
        let mut ps: Vec<(usize, usize)> =
            edge.iter().enumerate().filter(|&(p, _)| keep(e, p)).map(|(p, &v)| (p, v)).collect();
        ps.sort_by_key(|&(_, v)| v);
        out.extend(ps.into_iter().map(|(p, v)| (e, p, v)));
    }
    out
}

fn pairs_of(pairs: &[(usize, usize, usize)], e: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    pairs.iter().filter(move |t| t.0 == e).map(|&(_, p, v)| (p, v))
}

/// LP2: the relaxation re-solved by the main iterative rounding loop.
///
/// Variables exist for undecided vertices (all of which must lie in `U_>` or
/// `W`) and for undecided endpoints of non-tight edges.
pub fn build_lp2(inst: &Instance, state: &RoundingState) -> Result<BuiltLp> {
    let f_inv = state.threshold();
    let n = inst.num_vertices();
    let part = &state.partition;
    let mut above = vec![false; n];
    let mut frac = vec![false; n];
    for &u in &part.above {
        above[u] = !state.decided[u];
    }
    for &w in &part.fractional {
        frac[w] = !state.decided[w];
    }
    for v in 0..n {
        if !state.decided[v] && !above[v] && !frac[v] {
            return Err(Error::InconsistentState(format!(
                "undecided vertex {v} is neither in U_> nor in W"
            )));
        }
    }
    let live_edges = state.live_edges(inst)?;

    let mut b = BuiltLp::new(inst);
    let xs: Vec<Option<usize>> =
        (0..n).map(|v| (!state.decided[v]).then(|| b.add_x(v))).collect();
    let pairs = sorted_pairs(inst, |e, p| live_edges[e] && state.is_live(inst, e, p));
    for &(e, p, v) in &pairs {
        b.add_y(e, p, v);
    }
    b.lp.objective = xs.iter().flatten().map(|&j| (j, one())).collect();

    for e in (0..inst.num_edges()).filter(|&e| live_edges[e]) {
        let coeffs = pairs_of(&pairs, e).map(|(p, _)| (b.y_var[e][p].unwrap(), one())).collect();
        b.row(LpLabel::edge(LabelKind::EdgeCover, e), coeffs, Relation::Eq, state.residual(inst, e));
    }
    for &(e, p, v) in &pairs {
        let coeffs = vec![(b.y_var[e][p].unwrap(), one()), (xs[v].unwrap(), -one())];
        b.row(LpLabel::pair(LabelKind::YLeX, e, v), coeffs, Relation::Le, Rational::zero());
    }
    let capacity_row = |b: &mut BuiltLp, v: usize, cap: i64| {
        let mut coeffs: Vec<(usize, Rational)> = inst
            .incident(v)
            .iter()
            .filter_map(|&e| b.y_var[e][inst.position(e, v).unwrap()])
            .map(|j| (j, one()))
            .collect();
        coeffs.push((xs[v].unwrap(), -Rational::from_integer(cap)));
        b.row(LpLabel::vertex(LabelKind::Capacity, v), coeffs, Relation::Le, Rational::zero());
    };
    for u in (0..n).filter(|&u| above[u]) {
        capacity_row(&mut b, u, state.residual_capacity(inst, u));
    }
    for w in (0..n).filter(|&w| frac[w]) {
        capacity_row(&mut b, w, inst.capacity(w) as i64);
    }
    for u in (0..n).filter(|&u| above[u]) {
        b.row(LpLabel::vertex(LabelKind::LowerOneOverF, u), vec![(xs[u].unwrap(), one())], Relation::Ge, f_inv.clone());
    }
    for u in (0..n).filter(|&u| above[u]) {
        b.row(LpLabel::vertex(LabelKind::MultUpper, u), vec![(xs[u].unwrap(), one())], Relation::Le, int(inst.multiplicity(u)));
    }
    for w in (0..n).filter(|&w| frac[w]) {
        b.row(LpLabel::vertex(LabelKind::XNonneg, w), vec![(xs[w].unwrap(), one())], Relation::Ge, Rational::zero());
    }
    for w in (0..n).filter(|&w| frac[w]) {
        b.row(LpLabel::vertex(LabelKind::UpperOneOverF, w), vec![(xs[w].unwrap(), one())], Relation::Le, f_inv.clone());
    }
    for &(e, p, v) in &pairs {
        b.row(LpLabel::pair(LabelKind::YNonneg, e, v), vec![(b.y_var[e][p].unwrap(), one())], Relation::Ge, Rational::zero());
    }
    Ok(b)
}

/// `M(u, w)`; absent entries are zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CouplingMatrix {
    entries: BTreeMap<(usize, usize), Rational>,
}

impl CouplingMatrix {
    pub fn from_entries(entries: impl IntoIterator<Item = (usize, usize, Rational)>) -> Self {
        let mut m = CouplingMatrix::default();
        for (u, w, v) in entries {
            m.add(u, w, v);
        }
        m
    }

    pub fn get(&self, u: usize, w: usize) -> Rational {
        self.entries.get(&(u, w)).cloned().unwrap_or_default()
    }

    fn add(&mut self, u: usize, w: usize, amount: Rational) {
        if amount.is_zero() {
            return;
        }
        let entry = self.entries.entry((u, w)).or_default();
        *entry += amount;
        if entry.is_zero() {
            self.entries.remove(&(u, w));
        }
    }

    /// Nonzero entries in `(u, w)` order.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        self.entries.iter().map(|(&(u, w), m)| (u, w, m))
    }

    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, &Rational)> {
        self.entries.range((u, 0)..(u + 1, 0)).map(|(&(_, w), m)| (w, m))
    }

    /// `Σ_w M(u, w) · x_w`.
    pub fn row_dot(&self, u: usize, x: &[Rational]) -> Rational {
        self.row(u).map(|(w, m)| m * &x[w]).sum()
    }
}

/// `M(u,w) = Σ_{e ∈ E_u ∩ δ(w)} y*(e,w) / x*_w` over the current owners.
pub fn coupling_matrix(inst: &Instance, state: &CoveringState) -> CouplingMatrix {
    let base = &state.base;
    let mut m = CouplingMatrix::default();
    for (e, owner) in state.owner.iter().enumerate() {
        let Some(u) = *owner else { continue };
        for (p, &w) in inst.edge(e).iter().enumerate() {
            if base.is_live(inst, e, p) && base.is_fractional(w) {
                m.add(u, w, &base.ystar[e][p] / &base.xstar[w]);
            }
        }
    }
    m
}

/// LP3: covering relaxation over `x_w (w ∈ W)` and `x_u (u ∈ U_>)`.
pub fn build_lp3(inst: &Instance, state: &CoveringState) -> Result<BuiltLp> {
    let base = &state.base;
    let n = inst.num_vertices();
    let f_inv = base.threshold();
    let w_set: Vec<usize> = (0..n).filter(|&v| base.is_fractional(v)).collect();
    let u_set: Vec<usize> = (0..n).filter(|&v| base.is_above(v)).collect();
    for v in 0..n {
        if !base.decided[v] && !base.is_fractional(v) && !base.is_above(v) {
            return Err(Error::InconsistentState(format!(
                "undecided vertex {v} is neither in U_> nor in W"
            )));
        }
    }
    let m = coupling_matrix(inst, state);

    let mut b = BuiltLp::new(inst);
    let mut xs = vec![None; n];
    for v in (0..n).filter(|&v| base.is_fractional(v) || base.is_above(v)) {
        xs[v] = Some(b.add_x(v));
    }
    b.lp.objective = xs.iter().flatten().map(|&j| (j, one())).collect();

    for &u in &u_set {
        let mut coeffs: Vec<(usize, Rational)> =
            m.row(u).map(|(w, c)| (xs[w].unwrap(), c.clone())).collect();
        coeffs.push((xs[u].unwrap(), Rational::from_integer(base.residual_capacity(inst, u))));
        let rhs = m.row_dot(u, &base.xstar) + base.live_load(inst, u);
        b.row(LpLabel::vertex(LabelKind::CoveringRow, u), coeffs, Relation::Ge, rhs);
    }
    for &w in &w_set {
        b.row(LpLabel::vertex(LabelKind::XNonneg, w), vec![(xs[w].unwrap(), one())], Relation::Ge, Rational::zero());
    }
    for &w in &w_set {
        b.row(LpLabel::vertex(LabelKind::UpperOneOverF, w), vec![(xs[w].unwrap(), one())], Relation::Le, f_inv.clone());
    }
    for &u in &u_set {
        b.row(LpLabel::vertex(LabelKind::LowerOneOverF, u), vec![(xs[u].unwrap(), one())], Relation::Ge, f_inv.clone());
    }
    for &u in &u_set {
        b.row(LpLabel::vertex(LabelKind::MultUpper, u), vec![(xs[u].unwrap(), one())], Relation::Le, int(inst.multiplicity(u)));
    }
    Ok(b)
}

/// `M(u,w) = Σ_{e = uw ∉ T} y*(e,w) / x*_w` for the graph variant, using the
/// per-edge ratio frozen when the run started.
pub fn graph_coupling(inst: &Instance, state: &GraphState) -> CouplingMatrix {
    let mut m = CouplingMatrix::default();
    for e in 0..inst.num_edges() {
        if state.tight_owner[e].is_some() {
            continue;
        }
        if let Some(c) = &state.coupled[e] {
            m.add(c.u, c.w, c.ratio.clone());
        }
    }
    m
}

/// LP4: covering relaxation over `x_w (w ∈ W)` only, for graphs.
pub fn build_lp4(inst: &Instance, state: &GraphState) -> Result<BuiltLp> {
    if inst.rank() > 2 {
        return Err(Error::RankTooLarge(inst.rank()));
    }
    let n = inst.num_vertices();
    let m = graph_coupling(inst, state);
    let mut b = BuiltLp::new(inst);
    let mut xs = vec![None; n];
    for w in (0..n).filter(|&w| state.in_w[w]) {
        xs[w] = Some(b.add_x(w));
    }
    b.lp.objective = xs.iter().flatten().map(|&j| (j, one())).collect();
    for u in (0..n).filter(|&u| state.in_u[u]) {
        let coeffs: Vec<(usize, Rational)> = m.row(u).map(|(w, c)| (xs[w].unwrap(), c.clone())).collect();
        let rhs = m.row_dot(u, &state.x);
        b.row(LpLabel::vertex(LabelKind::CoveringRow, u), coeffs, Relation::Ge, rhs);
    }
    for w in (0..n).filter(|&w| state.in_w[w]) {
        b.row(LpLabel::vertex(LabelKind::XNonneg, w), vec![(xs[w].unwrap(), one())], Relation::Ge, Rational::zero());
    }
    for w in (0..n).filter(|&w| state.in_w[w]) {
        b.row(LpLabel::vertex(LabelKind::Box, w), vec![(xs[w].unwrap(), one())], Relation::Le, one());
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve_extreme;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn lp1_counts_single_edge() {
        let inst = Instance::new(2, vec![vec![0, 1]], vec![1, 1], vec![1, 1]).unwrap();
        let b = build_lp1(&inst);
        assert_eq!(b.lp.num_variables(), 4);
        assert_eq!(b.lp.constraints.len(), 1 + 2 + 2 + 2 + 4);
        let kinds: Vec<LabelKind> = b.labels.iter().map(|l| l.kind).collect();
        assert_eq!(kinds[0], LabelKind::EdgeCover);
        assert_eq!(kinds[1..3], [LabelKind::YLeX; 2]);
        let sol = solve_extreme(&b.lp).unwrap();
        assert_eq!(sol.objective_value, Rational::one());
    }

    #[test]
    fn lp1_counts_match_formula() {
        let inst = Instance::new(
            4,
            vec![vec![0, 1, 2], vec![1, 3], vec![2], vec![1, 3]],
            vec![1, 2, 3, 1],
            vec![1, 1, 2, 1],
        )
        .unwrap();
        let b = build_lp1(&inst);
        let (n, e) = (inst.num_vertices(), inst.num_edges());
        let incidences: usize = inst.edges().iter().map(Vec::len).sum();
        assert_eq!(b.lp.num_variables(), n + incidences);
        assert_eq!(b.lp.constraints.len(), e + 2 * incidences + 3 * n);
    }

    #[test]
    fn lp1_hyperedge_and_empty() {
        let inst = Instance::new(3, vec![vec![0, 1, 2]], vec![1; 3], vec![1; 3]).unwrap();
        let b = build_lp1(&inst);
        assert_eq!(b.lp.num_variables(), 6);
        assert_eq!(b.lp.constraints[0].coeffs.len(), 3);
        assert_eq!(b.lp.constraints[0].relation, Relation::Eq);

        let empty = Instance::new(3, vec![], vec![1; 3], vec![1; 3]).unwrap();
        let sol = solve_extreme(&build_lp1(&empty).lp).unwrap();
        assert_eq!(sol.objective_value, Rational::zero());
        assert!(sol.values.iter().all(Rational::is_zero));
    }

    #[test]
    fn lp1_triangle_optimum() {
        // Lower bound: 3 = Σ y <= Σ k x = 2 Σ x, attained by x = 1/2 everywhere.
        let inst = Instance::new(3, vec![vec![0, 1], vec![1, 2], vec![2, 0]], vec![2; 3], vec![1; 3]).unwrap();
        let sol = solve_extreme(&build_lp1(&inst).lp).unwrap();
        assert_eq!(sol.objective_value, q(3, 2));
    }

    #[test]
    fn coupling_matrix_entries() {
        let mut m = CouplingMatrix::default();
        m.add(0, 1, q(1, 4) / q(1, 2));
        assert_eq!(m.get(0, 1), q(1, 2));
        assert_eq!(m.get(1, 0), Rational::zero());
        m.add(2, 3, q(1, 6) / q(1, 3));
        m.add(2, 3, q(1, 6) / q(1, 3));
        assert_eq!(m.get(2, 3), Rational::one());
        assert_eq!(m.row_dot(2, &[q(0, 1), q(0, 1), q(0, 1), q(1, 3)]), q(1, 3));
    }

    #[test]
    fn label_display() {
        assert_eq!(LpLabel::pair(LabelKind::YLeX, 2, 1).to_string(), "y-le-x(e2,v1)");
        assert_eq!(LpLabel::vertex(LabelKind::Capacity, 3).to_string(), "capacity(v3)");
        assert_eq!(LpLabel::edge(LabelKind::EdgeCover, 0).to_string(), "edge-cover(e0)");
    }
}
