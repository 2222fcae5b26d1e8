use crate::assignment::recover_assignment;
use crate::error::{Error, Result};
use crate::instance::Instance;

/// Default cap on `Π (m_v + 1)`.
pub const DEFAULT_BUDGET: u128 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub opt: u64,
    /// Lexicographically smallest optimal copy vector.
    pub witness: Vec<u64>,
}

/// Exact optimum by enumerating copy vectors, each tested with max flow.
///
/// Candidates are visited by increasing total and lexicographically within
/// a total, so the first feasible one is optimal and is the lexicographically
/// smallest optimal vector.
pub fn brute_force_opt(inst: &Instance, budget: u128) -> Result<OracleResult> {
    let m = inst.multiplicities();
    let needed = m
        .iter()
        .try_fold(1u128, |acc, &mv| acc.checked_mul(mv as u128 + 1))
        .unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::EnumerationBudget { needed, budget });
    }
    // suffix[i] = Σ_{j >= i} m_j
    let mut suffix = vec![0u64; m.len() + 1];
    for i in (0..m.len()).rev() {
        suffix[i] = suffix[i + 1] + m[i];
    }
    let mut x = vec![0u64; m.len()];
    for total in 0..=suffix[0] {
        if let Some(opt) = search(inst, m, &suffix, &mut x, 0, total) {
            return Ok(opt);
        }
    }
    Err(Error::Infeasible)
}

fn search(
    inst: &Instance,
    m: &[u64],
    suffix: &[u64],
    x: &mut Vec<u64>,
    i: usize,
    left: u64,
) -> Option<OracleResult> {
    if i == m.len() {
        return recover_assignment(inst, x)
            .ok()
            .map(|_| OracleResult { opt: x.iter().sum(), witness: x.clone() });
    }
    let lo = left.saturating_sub(suffix[i + 1]);
    let hi = left.min(m[i]);
    for v in lo..=hi {
        x[i] = v;
        if let Some(r) = search(inst, m, suffix, x, i + 1, left - v) {
            return Some(r);
        }
    }
    x[i] = 0;
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(n: usize, edges: Vec<Vec<usize>>, k: Vec<u64>, m: Vec<u64>) -> Instance {
        Instance::new(n, edges, k, m).unwrap()
    }

    #[test]
    fn star_center_alone() {
        let g = inst(4, vec![vec![0, 1], vec![0, 2], vec![0, 3]], vec![3, 1, 1, 1], vec![1; 4]);
        let r = brute_force_opt(&g, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.opt, 1);
        assert_eq!(r.witness, vec![1, 0, 0, 0]);
    }

    #[test]
    fn triangle_needs_two() {
        let g = inst(3, vec![vec![0, 1], vec![1, 2], vec![2, 0]], vec![2; 3], vec![1; 3]);
        let r = brute_force_opt(&g, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.opt, 2);
        assert_eq!(r.witness, vec![0, 1, 1]);
    }

    #[test]
    fn zero_capacity_is_infeasible() {
        let g = inst(2, vec![vec![0, 1]], vec![0, 0], vec![1, 1]);
        assert!(matches!(brute_force_opt(&g, DEFAULT_BUDGET), Err(Error::Infeasible)));
    }

    #[test]
    fn budget_enforced() {
        let g = inst(3, vec![vec![0, 1]], vec![1; 3], vec![9, 9, 9]);
        assert!(matches!(
            brute_force_opt(&g, 999),
            Err(Error::EnumerationBudget { needed: 1000, budget: 999 })
        ));
        assert!(brute_force_opt(&g, 1000).is_ok());
    }

    #[test]
    fn edge_free_costs_nothing() {
        let g = inst(2, vec![], vec![0, 0], vec![1, 1]);
        assert_eq!(brute_force_opt(&g, DEFAULT_BUDGET).unwrap().opt, 0);
    }
}
