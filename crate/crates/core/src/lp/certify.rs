use super::linalg::RowEchelon;
use super::{BasicSolution, LpError, LpProblem};
use crate::rational::Rational;

/// Greedily picks, in constraint order, tight rows that are independent.
fn tight_basis(lp: &LpProblem, values: &[Rational]) -> (Vec<usize>, RowEchelon) {
    let n = lp.num_variables();
    let mut ech = RowEchelon::new(n);
    let mut chosen = Vec::new();
    for (i, c) in lp.constraints.iter().enumerate() {
        if ech.rank() == n {
            break;
        }
        if c.is_tight(values) && ech.try_insert(c.dense(n)) {
            chosen.push(i);
        }
    }
    (chosen, ech)
}

/// Turns an optimal point into a certified vertex.
///
/// If the tight rows at `values` are rank-deficient the point is moved along
/// the optimal face (a null direction of the tight rows) until another
/// constraint becomes tight; this repeats until the rank is full.
pub(crate) fn certify_vertex(
    lp: &LpProblem,
    mut values: Vec<Rational>,
) -> Result<BasicSolution, LpError> {
    let n = lp.num_variables();
    loop {
        let (chosen, ech) = tight_basis(lp, &values);
        if chosen.len() == n {
            let objective_value = lp.objective_value(&values);
            return Ok(BasicSolution { values, objective_value, tight_set: chosen });
        }
        let d = ech.null_vector().expect("rank deficit implies a null vector");
        let slope: Rational = lp.objective.iter().map(|(j, c)| c * &d[*j]).sum();
        if !slope.is_zero() {
            // A feasible improving direction exists: the point was not optimal.
            return Err(LpError::Malformed("purification found an improving direction".into()));
        }
        let step = max_step(lp, &values, &d)
            .map(|s| (s, false))
            .or_else(|| {
                let neg: Vec<Rational> = d.iter().map(|a| -a).collect();
                max_step(lp, &values, &neg).map(|s| (s, true))
            })
            .ok_or(LpError::NoVertex)?;
        let (s, flip) = step;
        for (v, dj) in values.iter_mut().zip(&d) {
            let delta = &s * dj;
            if flip {
                *v -= delta;
            } else {
                *v += delta;
            }
        }
    }
}

/// Largest `s >= 0` keeping `values + s*d` feasible, if some row blocks.
fn max_step(lp: &LpProblem, values: &[Rational], d: &[Rational]) -> Option<Rational> {
    let mut best: Option<Rational> = None;
    for c in &lp.constraints {
        let rate: Rational = c.coeffs.iter().map(|(j, a)| a * &d[*j]).sum();
        if rate.is_zero() {
            continue;
        }
        let slack = &c.rhs - &c.lhs(values);
        use super::Relation::*;
        let bound = match c.relation {
            // lhs + s*rate <= rhs
            Le if rate.is_positive() => Some(&slack / &rate),
            // lhs + s*rate >= rhs
            Ge if rate.is_negative() => Some(&slack / &rate),
            Eq => Some(Rational::zero()),
            _ => None,
        };
        if let Some(b) = bound {
            if best.as_ref().map_or(true, |cur| b < *cur) {
                best = Some(b);
            }
        }
    }
    best
}

/// Checks a claimed vertex certificate from scratch: feasibility, exact
/// tightness of the listed rows, `|tight_set| == rank == num_variables`, and
/// the reported objective value.
pub fn verify_extreme(lp: &LpProblem, sol: &BasicSolution) -> bool {
    let n = lp.num_variables();
    if sol.values.len() != n || !lp.is_feasible(&sol.values) {
        return false;
    }
    if sol.objective_value != lp.objective_value(&sol.values) {
        return false;
    }
    if sol.tight_set.len() != n {
        return false;
    }
    let mut ech = RowEchelon::new(n);
    for &i in &sol.tight_set {
        let Some(c) = lp.constraints.get(i) else {
            return false;
        };
        if !c.is_tight(&sol.values) || !ech.try_insert(c.dense(n)) {
            return false;
        }
    }
    ech.rank() == n
}

#[cfg(test)]
mod tests {
    use super::super::{solve_extreme, Relation};
    use super::*;

    fn square(objective: Vec<(usize, Rational)>) -> LpProblem {
        let mut lp = LpProblem::new();
        let x = lp.add_variable("x");
        let y = lp.add_variable("y");
        lp.objective = objective;
        for v in [x, y] {
            lp.add_constraint(vec![(v, Rational::one())], Relation::Ge, Rational::zero());
            lp.add_constraint(vec![(v, Rational::one())], Relation::Le, Rational::one());
        }
        lp
    }

    #[test]
    fn solver_output_verifies() {
        let lp = square(vec![(0, Rational::one()), (1, Rational::new(-1, 1))]);
        let sol = solve_extreme(&lp).unwrap();
        assert!(verify_extreme(&lp, &sol));
        assert_eq!(sol.values, vec![Rational::zero(), Rational::one()]);
    }

    #[test]
    fn midpoint_of_two_optima_is_not_extreme() {
        // minimize 0 over the unit square: every vertex is optimal.
        let lp = square(vec![]);
        let half = Rational::new(1, 2);
        let mid = BasicSolution {
            values: vec![half.clone(), Rational::zero()],
            objective_value: Rational::zero(),
            tight_set: vec![2],
        };
        assert!(!verify_extreme(&lp, &mid));
        // Padding the tight set with a non-tight row does not help.
        let padded = BasicSolution { tight_set: vec![2, 0], ..mid.clone() };
        assert!(!verify_extreme(&lp, &padded));
        // Purification from the midpoint lands on a genuine vertex.
        let v = certify_vertex(&lp, mid.values).unwrap();
        assert!(verify_extreme(&lp, &v));
    }

    #[test]
    fn infeasible_point_rejected() {
        let lp = square(vec![]);
        let sol = BasicSolution {
            values: vec![Rational::new(2, 1), Rational::zero()],
            objective_value: Rational::zero(),
            tight_set: vec![2, 0],
        };
        assert!(!verify_extreme(&lp, &sol));
    }

    #[test]
    fn wrong_objective_rejected() {
        let lp = square(vec![(0, Rational::one())]);
        let mut sol = solve_extreme(&lp).unwrap();
        sol.objective_value = Rational::one();
        assert!(!verify_extreme(&lp, &sol));
    }

    #[test]
    fn line_has_no_vertex() {
        let mut lp = LpProblem::new();
        let x = lp.add_variable("x");
        lp.add_variable("y");
        lp.add_constraint(vec![(x, Rational::one())], Relation::Ge, Rational::zero());
        assert_eq!(
            certify_vertex(&lp, vec![Rational::zero(), Rational::zero()]),
            Err(LpError::NoVertex)
        );
    }
}
