#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vchc::lp::{LpProblem, Relation};
use vchc::{Instance, Rational};

pub struct Golden {
    pub name: &'static str,
    pub inst: Instance,
    pub opt: u64,
}

pub fn inst(n: usize, edges: &[&[usize]], k: &[u64], m: &[u64]) -> Instance {
    Instance::new(n, edges.iter().map(|e| e.to_vec()).collect(), k.to_vec(), m.to_vec()).unwrap()
}

/// The fixed golden set with its optimum values.
pub fn golden() -> Vec<Golden> {
    vec![
        Golden { name: "single-edge", inst: inst(2, &[&[0, 1]], &[1, 1], &[1, 1]), opt: 1 },
        Golden {
            name: "3-star",
            inst: inst(4, &[&[0, 1], &[0, 2], &[0, 3]], &[3, 1, 1, 1], &[1, 1, 1, 1]),
            opt: 1,
        },
        Golden { name: "triangle", inst: triangle(), opt: 2 },
        Golden {
            name: "4-cycle",
            inst: inst(4, &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]], &[2, 2, 2, 2], &[1, 1, 1, 1]),
            opt: 2,
        },
        Golden { name: "3-hyperedge", inst: inst(3, &[&[0, 1, 2]], &[1, 1, 1], &[1, 1, 1]), opt: 1 },
    ]
}

pub fn triangle() -> Instance {
    inst(3, &[&[0, 1], &[1, 2], &[2, 0]], &[2, 2, 2], &[1, 1, 1])
}

/// Unit-capacity 4-cycle with two copies allowed per vertex.
pub fn unit_cycle() -> Instance {
    inst(4, &[&[0, 1], &[1, 2], &[2, 3], &[3, 0]], &[1, 1, 1, 1], &[2, 2, 2, 2])
}

/// Optimum by trying every edge-to-endpoint assignment: the cheapest cover
/// for a fixed assignment buys `ceil(load / k)` copies of each vertex.
pub fn assignment_opt(inst: &Instance) -> Option<u64> {
    let n = inst.num_vertices();
    let edges = inst.edges();
    let mut choice = vec![0usize; edges.len()];
    let mut best: Option<u64> = None;
    loop {
        let mut load = vec![0u64; n];
        for (e, &c) in choice.iter().enumerate() {
            load[edges[e][c]] += 1;
        }
        let mut cost = Some(0u64);
        for v in 0..n {
            if load[v] == 0 {
                continue;
            }
            let k = inst.capacity(v);
            let need = if k == 0 { None } else { Some(load[v].div_ceil(k)) };
            cost = match (cost, need) {
                (Some(c), Some(x)) if x <= inst.multiplicity(v) => Some(c + x),
                _ => None,
            };
        }
        if let Some(c) = cost {
            best = Some(best.map_or(c, |b| b.min(c)));
        }
        let mut i = 0;
        loop {
            if i == choice.len() {
                return best;
            }
            choice[i] += 1;
            if choice[i] < edges[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// A random LP over `n <= 6` variables with at most 12 rows in total. Every
/// variable is nonnegative and the sum is capped, so the region is a polytope.
pub fn random_lp(seed: u64) -> LpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=6);
    let mut lp = LpProblem::new();
    for j in 0..n {
        lp.add_variable(format!("z{j}"));
    }
    let coef = |rng: &mut ChaCha8Rng| Rational::new(rng.gen_range(-6..=6), rng.gen_range(1..=4));
    lp.objective = (0..n).map(|j| (j, coef(&mut rng))).collect();
    for j in 0..n {
        lp.add_constraint(vec![(j, Rational::one())], Relation::Ge, Rational::zero());
    }
    let cap = Rational::from(rng.gen_range(1..=10) as i64);
    lp.add_constraint((0..n).map(|j| (j, Rational::one())).collect(), Relation::Le, cap);
    let extra = rng.gen_range(0..=12 - n - 1);
    for _ in 0..extra {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                coeffs.push((j, coef(&mut rng)));
            }
        }
        let rel = match rng.gen_range(0..6) {
            0 => Relation::Eq,
            1 | 2 => Relation::Ge,
            _ => Relation::Le,
        };
        let rhs = Rational::new(rng.gen_range(-4..=8), rng.gen_range(1..=3));
        lp.add_constraint(coeffs, rel, rhs);
    }
    lp
}

/// Solves the square system `rows · z = rhs`; `None` if singular.
fn solve_square(mut rows: Vec<Vec<Rational>>, mut rhs: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = rows.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !rows[r][col].is_zero())?;
        rows.swap(col, piv);
        rhs.swap(col, piv);
        for r in 0..n {
            if r == col || rows[r][col].is_zero() {
                continue;
            }
            let factor = &rows[r][col] / &rows[col][col];
            for c in col..n {
                let d = &factor * &rows[col][c];
                rows[r][c] -= d;
            }
            let d = &factor * &rhs[col];
            rhs[r] -= d;
        }
    }
    Some((0..n).map(|i| &rhs[i] / &rows[i][i]).collect())
}

fn subsets(m: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut dyn FnMut(&[usize])) {
    if cur.len() == k {
        out(cur);
        return;
    }
    for i in start..m {
        if m - i < k - cur.len() {
            break;
        }
        cur.push(i);
        subsets(m, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Minimum objective over all vertices, by intersecting every `n`-subset of
/// rows. `None` means no feasible vertex.
pub fn vertex_enumeration_opt(lp: &LpProblem) -> Option<Rational> {
    let n = lp.num_variables();
    let dense: Vec<Vec<Rational>> = lp.constraints.iter().map(|c| c.dense(n)).collect();
    let mut best: Option<Rational> = None;
    subsets(lp.constraints.len(), n, 0, &mut Vec::new(), &mut |idx| {
        let rows = idx.iter().map(|&i| dense[i].clone()).collect();
        let rhs = idx.iter().map(|&i| lp.constraints[i].rhs.clone()).collect();
        if let Some(z) = solve_square(rows, rhs) {
            if lp.is_feasible(&z) {
                let v = lp.objective_value(&z);
                if best.as_ref().is_none_or(|b| v < *b) {
                    best = Some(v);
                }
            }
        }
    });
    best
}

pub fn golden_unit_cycle() -> Golden {
    Golden { name: "unit-4-cycle", inst: unit_cycle(), opt: 4 }
}
