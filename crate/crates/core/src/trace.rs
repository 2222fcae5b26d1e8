//! Run traces and the runtime lemma checker shared by the rounding algorithms.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{solve_extreme, verify_extreme, BasicSolution, LpError, LpProblem};
use crate::rational::Rational;

/// Evaluates named invariant checks and tallies how many ran.
///
/// A disabled checker skips the checks entirely. A failing check returns
/// [`Error::Invariant`] immediately.
#[derive(Debug, Clone, Default)]
pub struct Checker {
    enabled: bool,
    counts: BTreeMap<&'static str, u64>,
}

impl Checker {
    pub fn new(enabled: bool) -> Self {
        Checker { enabled, counts: BTreeMap::new() }
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    pub fn check(
        &mut self,
        name: &'static str,
        test: impl FnOnce() -> std::result::Result<(), String>,
    ) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        *self.counts.entry(name).or_insert(0) += 1;
        test().map_err(|detail| Error::invariant(name, detail))
    }

    /// Number of times each check ran (and passed).
    pub fn counts(&self) -> &BTreeMap<&'static str, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

pub(crate) fn ensure(cond: bool, detail: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(detail())
    }
}

/// Solves `lp` and, when checking, re-verifies the returned vertex.
pub(crate) fn solve_checked(lp: &LpProblem, checker: &mut Checker, solves: &mut usize) -> Result<BasicSolution> {
    let sol = solve_extreme(lp)?;
    *solves += 1;
    checker.check("verify-extreme", || ensure(verify_extreme(lp, &sol), || "solver output failed vertex certification".into()))?;
    Ok(sol)
}

/// Maps LP1 infeasibility to an infeasible instance; anything else is internal.
pub(crate) fn lp1_error(e: Error) -> Error {
    match e {
        Error::Lp(LpError::Infeasible) => Error::Infeasible,
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TraceEvent {
    ZFix { vertices: Vec<usize> },
    /// Edge permanently covered by `vertex`.
    TightEdge { edge: usize, vertex: usize },
    UeqFix { vertices: Vec<usize> },
    /// Vertex reached the `1/f` threshold on a path and was fixed to one copy.
    ThresholdFix { vertex: usize },
    /// Owner coverage hit zero; `vertex` left the working copy of `edge`.
    ZeroCoverage { edge: usize, vertex: usize },
    /// Path stopped early at `t`.
    PathStop { t: Rational },
    /// Path reached its target without events.
    PathComplete,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SetSizes {
    pub above: usize,
    pub at_threshold: usize,
    pub fractional: usize,
    pub zero: usize,
    pub decided: usize,
    pub tight: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Fractional cost of the undecided vertices after this iteration.
    pub objective: Rational,
    pub events: Vec<TraceEvent>,
    pub sizes: SetSizes,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TerminalRecord {
    pub w: usize,
    /// Vertices of `U` sitting at their multiplicity.
    pub u_at_mult: usize,
    /// Only for the graph variant: `|W_f|` and the matching found.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_fractional: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matching: Option<Vec<(usize, usize)>>,
    pub checks: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundingTrace {
    pub algorithm: &'static str,
    pub rank: usize,
    /// Threshold parameter actually used (`1/f`).
    pub f: usize,
    pub lp1_value: Rational,
    pub iterations: Vec<IterationRecord>,
    pub terminal: TerminalRecord,
    pub cost: u64,
    pub lp_solves: usize,
    pub checks: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Output of any of the rounding algorithms.
#[derive(Debug, Clone)]
pub struct RoundingOutput {
    pub x: Vec<u64>,
    pub lp1_value: Rational,
    pub trace: RoundingTrace,
}

impl RoundingOutput {
    pub fn cost(&self) -> u64 {
        self.x.iter().sum()
    }
}

pub(crate) fn check_counts(checker: &Checker) -> BTreeMap<String, u64> {
    checker.counts().iter().map(|(k, v)| (k.to_string(), *v)).collect()
}
