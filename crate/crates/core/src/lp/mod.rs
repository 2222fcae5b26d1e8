//! Exact rational linear programming.
//!
//! [`solve_extreme`] returns an optimal *vertex* of the feasible polyhedron
//! together with a certificate: a set of constraints, in the caller's
//! indexing, that hold with equality and whose rows are linearly independent
//! with rank equal to the number of variables. [`verify_extreme`] re-checks
//! such a certificate from scratch.

mod certify;
mod line;
mod linalg;
mod simplex;

use std::fmt;

use serde::Serialize;

use crate::rational::Rational;

pub use certify::verify_extreme;
pub use line::{interpolate, line_stop_time, AffineEvent, StopTime};
pub use linalg::{rank, RowEchelon};
pub use simplex::solve_extreme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    /// Whether `lhs rel rhs` holds.
    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

/// `Σ coeffs · z  rel  rhs`, coefficients sparse by variable index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) -> Self {
        Constraint { coeffs, relation, rhs }
    }

    /// Merges repeated variables, drops zero coefficients and sorts by index.
    pub fn canonical_coeffs(&self) -> Vec<(usize, Rational)> {
        let mut c = self.coeffs.clone();
        c.sort_by_key(|(j, _)| *j);
        let mut out: Vec<(usize, Rational)> = Vec::with_capacity(c.len());
        for (j, a) in c {
            match out.last_mut() {
                Some((k, b)) if *k == j => *b += a,
                _ => out.push((j, a)),
            }
        }
        out.retain(|(_, a)| !a.is_zero());
        out
    }

    pub fn lhs(&self, values: &[Rational]) -> Rational {
        self.coeffs.iter().map(|(j, a)| a * &values[*j]).sum()
    }

    pub fn is_satisfied(&self, values: &[Rational]) -> bool {
        self.relation.holds(&self.lhs(values), &self.rhs)
    }

    pub fn is_tight(&self, values: &[Rational]) -> bool {
        self.lhs(values) == self.rhs
    }

    /// Dense row of length `n`.
    pub fn dense(&self, n: usize) -> Vec<Rational> {
        let mut row = vec![Rational::zero(); n];
        for (j, a) in &self.coeffs {
            row[*j] += a;
        }
        row
    }
}

/// Minimize `objective · z` subject to `constraints`. Variables are free
/// unless a constraint bounds them; bounds are ordinary rows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LpProblem {
    pub variables: Vec<String>,
    pub objective: Vec<(usize, Rational)>,
    pub constraints: Vec<Constraint>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: impl Into<String>) -> usize {
        self.variables.push(name.into());
        self.variables.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        coeffs: Vec<(usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) -> usize {
        self.constraints.push(Constraint::new(coeffs, relation, rhs));
        self.constraints.len() - 1
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn objective_value(&self, values: &[Rational]) -> Rational {
        self.objective.iter().map(|(j, c)| c * &values[*j]).sum()
    }

    pub fn is_feasible(&self, values: &[Rational]) -> bool {
        values.len() == self.num_variables()
            && self.constraints.iter().all(|c| c.is_satisfied(values))
    }

    pub(crate) fn validate(&self) -> Result<(), LpError> {
        let n = self.num_variables();
        let bad = |j: usize| j >= n;
        if self.objective.iter().any(|(j, _)| bad(*j)) {
            return Err(LpError::Malformed("objective references an undeclared variable".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.iter().any(|(j, _)| bad(*j)) {
                return Err(LpError::Malformed(format!(
                    "constraint {i} references an undeclared variable"
                )));
            }
        }
        Ok(())
    }

    /// Human-readable dump; `labels` (if given) annotates each row.
    pub fn dump(&self, labels: Option<&[String]>) -> String {
        let term = |(j, a): &(usize, Rational)| format!("{a}*{}", self.variables[*j]);
        let mut out = String::new();
        let obj: Vec<String> = self.objective.iter().map(term).collect();
        out.push_str(&format!("minimize {}\n", join_terms(&obj)));
        for (i, c) in self.constraints.iter().enumerate() {
            let lhs: Vec<String> = c.coeffs.iter().map(term).collect();
            let tag = labels.and_then(|l| l.get(i)).map(String::as_str).unwrap_or("");
            out.push_str(&format!(
                "  [{i}] {} {} {}    {tag}\n",
                join_terms(&lhs),
                c.relation,
                c.rhs
            ));
        }
        out
    }
}

fn join_terms(terms: &[String]) -> String {
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" + ")
    }
}

/// An optimal vertex with its certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicSolution {
    pub values: Vec<Rational>,
    pub objective_value: Rational,
    /// Indices into `LpProblem::constraints`; exactly `num_variables` rows,
    /// all tight at `values`, linearly independent.
    pub tight_set: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("feasible region has no vertex (contains a line)")]
    NoVertex,
    #[error("malformed linear program: {0}")]
    Malformed(String),
}
