//! Two-phase primal simplex over exact rationals with Bland's rule.

use std::collections::HashSet;

use super::certify::certify_vertex;
use super::{BasicSolution, LpError, LpProblem, Relation};
use crate::rational::Rational;

/// How an original variable is expressed through non-negative columns.
#[derive(Debug, Clone)]
enum VarMap {
    /// `z = lb + p`, with the lower-bound row absorbed into `p >= 0`.
    Shift { col: usize, lb: Rational },
    /// `z = p - q`.
    Split { pos: usize, neg: usize },
}

struct Tableau {
    /// Each row has `ncols + 1` entries; the last is the right-hand side.
    rows: Vec<Vec<Rational>>,
    /// Reduced costs; the last entry is minus the current objective value.
    obj: Vec<Rational>,
    basis: Vec<usize>,
    ncols: usize,
    allowed: Vec<bool>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        let nz: Vec<usize> = {
            let row = &mut self.rows[r];
            let mut nz = Vec::new();
            for (k, a) in row.iter_mut().enumerate() {
                if !a.is_zero() {
                    *a *= &inv;
                    nz.push(k);
                }
            }
            nz
        };
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for &k in &nz {
                row[k] -= &factor * &pivot_row[k];
            }
        }
        if !self.obj[c].is_zero() {
            let factor = self.obj[c].clone();
            for &k in &nz {
                self.obj[k] -= &factor * &pivot_row[k];
            }
        }
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }

    fn set_objective(&mut self, cost: &[Rational]) {
        let mut obj = vec![Rational::zero(); self.ncols + 1];
        obj[..cost.len()].clone_from_slice(cost);
        for (i, row) in self.rows.iter().enumerate() {
            let b = self.basis[i];
            if obj[b].is_zero() {
                continue;
            }
            let factor = obj[b].clone();
            for (k, a) in row.iter().enumerate() {
                if !a.is_zero() {
                    obj[k] -= &factor * a;
                }
            }
        }
        self.obj = obj;
    }

    /// Bland's rule: lowest-index entering column, ratio ties broken by the
    /// lowest-index basic column.
    fn optimize(&mut self) -> Result<(), LpError> {
        let rhs = self.ncols;
        loop {
            let Some(c) = (0..self.ncols).find(|&j| self.allowed[j] && self.obj[j].is_negative())
            else {
                return Ok(());
            };
            let mut best: Option<(Rational, usize, usize)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = &row[rhs] / &row[c];
                let better = match &best {
                    None => true,
                    Some((r, b, _)) => ratio < *r || (ratio == *r && self.basis[i] < *b),
                };
                if better {
                    best = Some((ratio, self.basis[i], i));
                }
            }
            let Some((_, _, r)) = best else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, c);
        }
    }

    fn value(&self) -> Rational {
        -&self.obj[self.ncols]
    }
}

/// Solves `lp` and returns a certified optimal vertex.
///
/// Deterministic: the same problem (same row order) always yields the same
/// solution and certificate.
pub fn solve_extreme(lp: &LpProblem) -> Result<BasicSolution, LpError> {
    lp.validate()?;
    let n = lp.num_variables();

    let canon: Vec<Vec<(usize, Rational)>> =
        lp.constraints.iter().map(|c| c.canonical_coeffs()).collect();

    // Rows that reach the tableau: not an exact duplicate of an earlier row
    // and not identically zero.
    let mut seen = HashSet::new();
    let mut active = vec![false; lp.constraints.len()];
    for (i, c) in lp.constraints.iter().enumerate() {
        if canon[i].is_empty() {
            if !c.relation.holds(&Rational::zero(), &c.rhs) {
                return Err(LpError::Infeasible);
            }
            continue;
        }
        if seen.insert((canon[i].clone(), c.relation, c.rhs.clone())) {
            active[i] = true;
        }
    }

    // Largest single-variable lower bound per variable (first row on ties).
    let mut lower: Vec<Option<(Rational, usize)>> = vec![None; n];
    for (i, c) in lp.constraints.iter().enumerate() {
        if !active[i] || canon[i].len() != 1 {
            continue;
        }
        let (j, a) = &canon[i][0];
        let is_lower = match c.relation {
            Relation::Ge => a.is_positive(),
            Relation::Le => a.is_negative(),
            Relation::Eq => false,
        };
        if !is_lower {
            continue;
        }
        let lb = &c.rhs / a;
        if lower[*j].as_ref().map_or(true, |(cur, _)| lb > *cur) {
            lower[*j] = Some((lb, i));
        }
    }

    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    for bound in &lower {
        match bound {
            Some((lb, row)) => {
                active[*row] = false;
                maps.push(VarMap::Shift { col: ncols, lb: lb.clone() });
                ncols += 1;
            }
            None => {
                maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
                ncols += 2;
            }
        }
    }
    let structural = ncols;

    // Rows in column space: (coefficients by column, relation, rhs).
    let mut body: Vec<(Vec<(usize, Rational)>, Relation, Rational)> = Vec::new();
    for (i, c) in lp.constraints.iter().enumerate() {
        if !active[i] {
            continue;
        }
        let mut rhs = c.rhs.clone();
        let mut cols = Vec::new();
        for (j, a) in &canon[i] {
            match &maps[*j] {
                VarMap::Shift { col, lb } => {
                    rhs -= a * lb;
                    cols.push((*col, a.clone()));
                }
                VarMap::Split { pos, neg } => {
                    cols.push((*pos, a.clone()));
                    cols.push((*neg, -a));
                }
            }
        }
        body.push((cols, c.relation, rhs));
    }

    let num_slack = body.iter().filter(|(_, rel, _)| *rel != Relation::Eq).count();
    let slack_start = structural;
    let art_start = slack_start + num_slack;

    // Decide which rows need an artificial column.
    let mut needs_art = Vec::with_capacity(body.len());
    let mut slack_of = Vec::with_capacity(body.len());
    let mut next_slack = slack_start;
    for (_, rel, rhs) in &body {
        let sign = match rel {
            Relation::Le => Some(Rational::one()),
            Relation::Ge => Some(-Rational::one()),
            Relation::Eq => None,
        };
        let flip = rhs.is_negative();
        let slack_coeff = sign.map(|s| if flip { -s } else { s });
        let slack_col = slack_coeff.as_ref().map(|_| {
            next_slack += 1;
            next_slack - 1
        });
        needs_art.push(!matches!(&slack_coeff, Some(s) if s.is_positive()));
        slack_of.push(slack_col.zip(slack_coeff));
    }
    let num_art = needs_art.iter().filter(|&&b| b).count();
    ncols = art_start + num_art;

    let mut rows = Vec::with_capacity(body.len());
    let mut basis = Vec::with_capacity(body.len());
    let mut next_art = art_start;
    for (r, (cols, _, rhs)) in body.iter().enumerate() {
        let flip = rhs.is_negative();
        let mut row = vec![Rational::zero(); ncols + 1];
        for (k, a) in cols {
            row[*k] += if flip { -a } else { a.clone() };
        }
        row[ncols] = if flip { -rhs } else { rhs.clone() };
        if let Some((col, coeff)) = &slack_of[r] {
            row[*col] = coeff.clone();
        }
        if needs_art[r] {
            row[next_art] = Rational::one();
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(slack_of[r].as_ref().map(|(col, _)| *col).unwrap());
        }
        rows.push(row);
    }

    let mut tab = Tableau { rows, obj: Vec::new(), basis, ncols, allowed: vec![true; ncols] };

    if num_art > 0 {
        let mut phase1 = vec![Rational::zero(); ncols];
        for c in phase1.iter_mut().skip(art_start) {
            *c = Rational::one();
        }
        tab.set_objective(&phase1);
        tab.optimize()?;
        if tab.value().is_positive() {
            return Err(LpError::Infeasible);
        }
        // Drive zero-valued artificials out of the basis; drop redundant rows.
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= art_start {
                match (0..art_start).find(|&j| !tab.rows[r][j].is_zero()) {
                    Some(c) => tab.pivot(r, c),
                    None => {
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for a in tab.allowed.iter_mut().skip(art_start) {
            *a = false;
        }
    }

    let mut cost = vec![Rational::zero(); art_start];
    for (j, c) in &lp.objective {
        match &maps[*j] {
            VarMap::Shift { col, .. } => cost[*col] += c,
            VarMap::Split { pos, neg } => {
                cost[*pos] += c;
                cost[*neg] -= c;
            }
        }
    }
    tab.set_objective(&cost);
    tab.optimize()?;

    let mut col_val = vec![Rational::zero(); ncols];
    for (i, row) in tab.rows.iter().enumerate() {
        col_val[tab.basis[i]] = row[ncols].clone();
    }
    let values: Vec<Rational> = maps
        .iter()
        .map(|m| match m {
            VarMap::Shift { col, lb } => lb + &col_val[*col],
            VarMap::Split { pos, neg } => &col_val[*pos] - &col_val[*neg],
        })
        .collect();

    certify_vertex(lp, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn one() -> Rational {
        Rational::one()
    }

    #[test]
    fn single_bounded_variable() {
        // minimize x s.t. x >= 1/2, x <= 1
        let mut lp = LpProblem::new();
        let x = lp.add_variable("x");
        lp.objective = vec![(x, one())];
        lp.add_constraint(vec![(x, one())], Relation::Ge, q(1, 2));
        lp.add_constraint(vec![(x, one())], Relation::Le, one());
        let sol = solve_extreme(&lp).unwrap();
        assert_eq!(sol.values, vec![q(1, 2)]);
        assert_eq!(sol.objective_value, q(1, 2));
        assert_eq!(sol.tight_set, vec![0]);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LpProblem::new();
        let x = lp.add_variable("x");
        lp.objective = vec![(x, one())];
        lp.add_constraint(vec![(x, one())], Relation::Ge, one());
        lp.add_constraint(vec![(x, one())], Relation::Le, q(1, 2));
        assert_eq!(solve_extreme(&lp), Err(LpError::Infeasible));

        let mut lp = LpProblem::new();
        let x = lp.add_variable("x");
        lp.objective = vec![(x, -one())];
        lp.add_constraint(vec![(x, one())], Relation::Ge, Rational::zero());
        assert_eq!(solve_extreme(&lp), Err(LpError::Unbounded));
    }

    #[test]
    fn free_variables_are_split() {
        // minimize x + y s.t. x + y >= 1, x - y = 1/3, x <= 5 (no sign constraints)
        let mut lp = LpProblem::new();
        let x = lp.add_variable("x");
        let y = lp.add_variable("y");
        lp.objective = vec![(x, one()), (y, one())];
        lp.add_constraint(vec![(x, one()), (y, one())], Relation::Ge, one());
        lp.add_constraint(vec![(x, one()), (y, -one())], Relation::Eq, q(1, 3));
        lp.add_constraint(vec![(x, one())], Relation::Le, q(5, 1));
        let sol = solve_extreme(&lp).unwrap();
        assert_eq!(sol.values, vec![q(2, 3), q(1, 3)]);
        assert_eq!(sol.tight_set, vec![0, 1]);
    }

    #[test]
    fn negative_lower_bound_shift() {
        // minimize x s.t. -x <= 3 (x >= -3), x + y >= -10, y >= 0
        let mut lp = LpProblem::new();
        let x = lp.add_variable("x");
        let y = lp.add_variable("y");
        lp.objective = vec![(x, one())];
        lp.add_constraint(vec![(x, -one())], Relation::Le, q(3, 1));
        lp.add_constraint(vec![(x, one()), (y, one())], Relation::Ge, q(-10, 1));
        lp.add_constraint(vec![(y, one())], Relation::Ge, Rational::zero());
        let sol = solve_extreme(&lp).unwrap();
        assert_eq!(sol.values[0], q(-3, 1));
        assert_eq!(sol.objective_value, q(-3, 1));
    }

    #[test]
    fn duplicate_and_zero_rows() {
        let mut lp = LpProblem::new();
        let x = lp.add_variable("x");
        lp.objective = vec![(x, one())];
        lp.add_constraint(vec![], Relation::Le, one());
        lp.add_constraint(vec![(x, one())], Relation::Ge, q(2, 1));
        lp.add_constraint(vec![(x, one())], Relation::Ge, q(2, 1));
        lp.add_constraint(vec![(x, q(1, 2)), (x, q(1, 2))], Relation::Le, q(9, 1));
        let sol = solve_extreme(&lp).unwrap();
        assert_eq!(sol.values, vec![q(2, 1)]);
        assert_eq!(sol.tight_set, vec![1]);

        let mut lp = LpProblem::new();
        lp.add_variable("x");
        lp.add_constraint(vec![], Relation::Ge, one());
        assert_eq!(solve_extreme(&lp), Err(LpError::Infeasible));
    }

    #[test]
    fn no_variables() {
        let lp = LpProblem::new();
        let sol = solve_extreme(&lp).unwrap();
        assert!(sol.values.is_empty());
        assert!(sol.tight_set.is_empty());
        assert_eq!(sol.objective_value, Rational::zero());
    }

    #[test]
    fn malformed_reference() {
        let mut lp = LpProblem::new();
        lp.add_variable("x");
        lp.add_constraint(vec![(3, one())], Relation::Le, one());
        assert!(matches!(solve_extreme(&lp), Err(LpError::Malformed(_))));
    }

    #[test]
    fn degenerate_equality_system() {
        // Redundant equality rows force an artificial to be dropped.
        let mut lp = LpProblem::new();
        let x = lp.add_variable("x");
        let y = lp.add_variable("y");
        lp.objective = vec![(x, one()), (y, q(2, 1))];
        lp.add_constraint(vec![(x, one()), (y, one())], Relation::Eq, one());
        lp.add_constraint(vec![(x, q(2, 1)), (y, q(2, 1))], Relation::Eq, q(2, 1));
        lp.add_constraint(vec![(x, one())], Relation::Ge, Rational::zero());
        lp.add_constraint(vec![(y, one())], Relation::Ge, Rational::zero());
        let sol = solve_extreme(&lp).unwrap();
        assert_eq!(sol.values, vec![one(), Rational::zero()]);
        assert_eq!(sol.tight_set, vec![0, 3]);
    }
}
