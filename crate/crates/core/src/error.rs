use crate::instance::InstanceError;
use crate::lp::LpError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("instance is not coverable: no choice of copies admits a feasible assignment")]
    Infeasible,
    #[error("generator gave up after {0} attempts without a coverable instance")]
    RetryBudgetExhausted(usize),
    #[error("enumeration needs {needed} candidates, budget is {budget}")]
    EnumerationBudget { needed: u128, budget: u128 },
    #[error("algorithm requires a graph (rank <= 2), instance has rank {0}")]
    RankTooLarge(usize),
    #[error("inconsistent rounding state: {0}")]
    InconsistentState(String),
    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),
    #[error("invariant `{check}` violated: {detail}")]
    Invariant { check: &'static str, detail: String },
}

impl Error {
    pub fn invariant(check: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant { check, detail: detail.into() }
    }

    /// Errors that point at a bug (or a broken proof) rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant { .. } | Error::Lp(_) | Error::InconsistentState(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
