//! Approximation algorithms for minimum vertex cover with hard capacities
//! (VCHC) on multigraphs and f-hypergraphs.

pub mod assignment;
pub mod covering;
pub mod error;
pub mod harness;
pub mod instance;
pub mod lp;
pub mod rational;
pub mod relaxations;
pub mod rounding;
pub mod trace;

pub use error::{Error, Result};
pub use instance::{CoverSolution, Instance};
pub use rational::Rational;
