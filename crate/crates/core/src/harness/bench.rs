use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assignment::{recover_assignment, verify_cover};
use crate::covering::{round_lp3, round_lp4};
use crate::error::Result;
use crate::harness::oracle::{brute_force_opt, DEFAULT_BUDGET};
use crate::instance::{generate_random, GenParams, Instance};
use crate::rational::Rational;
use crate::rounding::{effective_f, round_lp2};
use crate::trace::{Checker, RoundingOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    IterLp2,
    IterLp3,
    IterLp4,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::IterLp2, Algorithm::IterLp3, Algorithm::IterLp4];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::IterLp2 => "iter-lp2",
            Algorithm::IterLp3 => "iter-lp3",
            Algorithm::IterLp4 => "iter-lp4",
        }
    }

    pub fn run(self, inst: &Instance, checker: &mut Checker) -> Result<RoundingOutput> {
        match self {
            Algorithm::IterLp2 => round_lp2(inst, checker),
            Algorithm::IterLp3 => round_lp3(inst, checker),
            Algorithm::IterLp4 => round_lp4(inst, checker),
        }
    }

    /// Guaranteed ratio against LP1 on `inst`.
    pub fn bound(self, inst: &Instance) -> u64 {
        match self {
            Algorithm::IterLp4 => 2,
            _ => effective_f(inst) as u64,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (expected iter-lp2, iter-lp3 or iter-lp4)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    SmallGraphs,
    SmallHypergraphs,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::SmallGraphs => "small-graphs",
            Profile::SmallHypergraphs => "small-hypergraphs",
        }
    }

    /// Generator parameters for instance seed `seed`: `n ∈ [4,8]`,
    /// `|E| ∈ [5,14]`, `k <= 4`, `m <= 3`.
    pub fn params(self, seed: u64) -> GenParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(17) ^ 0x9e37_79b9_7f4a_7c15);
        let n = rng.gen_range(4..=8);
        let e = rng.gen_range(5..=14);
        let mut p = GenParams::new(n, e, 2, 4, 3);
        match self {
            Profile::SmallGraphs => p.min_edge_size = 2,
            Profile::SmallHypergraphs => p.max_edge_size = 3,
        }
        p
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "small-graphs" => Ok(Profile::SmallGraphs),
            "small-hypergraphs" => Ok(Profile::SmallHypergraphs),
            _ => Err(format!("unknown profile `{s}` (expected small-graphs or small-hypergraphs)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchConfig {
    pub count: usize,
    pub seed: u64,
    pub profile: Profile,
    pub algorithms: Vec<Algorithm>,
    pub oracle: bool,
    pub checks: bool,
    /// Include wall-clock times; the report is then no longer reproducible.
    #[serde(skip)]
    pub timing: bool,
}

impl BenchConfig {
    pub fn new(count: usize, seed: u64, profile: Profile) -> Self {
        let algorithms = match profile {
            Profile::SmallGraphs => Algorithm::ALL.to_vec(),
            Profile::SmallHypergraphs => vec![Algorithm::IterLp2, Algorithm::IterLp3],
        };
        BenchConfig { count, seed, profile, algorithms, oracle: false, checks: true, timing: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenRecord {
    pub num_vertices: usize,
    pub num_edges: usize,
    pub min_edge_size: usize,
    pub max_edge_size: usize,
    pub max_capacity: u64,
    pub max_mult: u64,
}

impl From<&GenParams> for GenRecord {
    fn from(p: &GenParams) -> Self {
        GenRecord {
            num_vertices: p.num_vertices,
            num_edges: p.num_edges,
            min_edge_size: p.min_edge_size,
            max_edge_size: p.max_edge_size,
            max_capacity: p.max_capacity,
            max_mult: p.max_mult,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgoRecord {
    pub algorithm: Algorithm,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<u64>,
    pub bound: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_lp: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_opt: Option<Rational>,
    pub within_bound: bool,
    pub feasible: bool,
    pub checks_passed: bool,
    pub checks_run: u64,
    pub lp_solves: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl AlgoRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none() && self.within_bound && self.feasible && self.checks_passed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRecord {
    pub index: usize,
    pub seed: u64,
    pub params: GenRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp1_value: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub opt: Option<u64>,
    /// `LP1 <= OPT <= every output cost`, when the oracle ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_consistent: Option<bool>,
    pub results: Vec<AlgoRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlgoSummary {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub max_ratio_lp: Option<Rational>,
    pub mean_ratio_lp: Option<Rational>,
    pub max_ratio_opt: Option<Rational>,
    pub lp_solves: usize,
    pub checks_run: u64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub instances: usize,
    pub algorithms: Vec<AlgoSummary>,
    pub errors: usize,
    /// Bound, feasibility, check and oracle failures plus errors. Must be 0.
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub records: Vec<InstanceRecord>,
    pub summary: Summary,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs every configured algorithm on `count` generated instances.
/// Instance `i` is drawn with seed `seed + i`.
pub fn bench_run(config: &BenchConfig) -> BenchReport {
    let records: Vec<InstanceRecord> = (0..config.count)
        .map(|i| run_instance(config, i, config.seed.wrapping_add(i as u64)))
        .collect();
    let summary = summarize(config, &records);
    BenchReport { config: config.clone(), records, summary }
}

fn run_instance(config: &BenchConfig, index: usize, seed: u64) -> InstanceRecord {
    let params = config.profile.params(seed);
    let mut rec = InstanceRecord {
        index,
        seed,
        params: GenRecord::from(&params),
        rank: None,
        lp1_value: None,
        opt: None,
        oracle_consistent: None,
        results: Vec::new(),
        error: None,
    };
    let inst = match generate_random(&params, seed) {
        Ok(inst) => inst,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.rank = Some(inst.rank());
    if config.oracle {
        match brute_force_opt(&inst, DEFAULT_BUDGET) {
            Ok(r) => rec.opt = Some(r.opt),
            Err(e) => rec.error = Some(format!("oracle: {e}")),
        }
    }
    for &algo in &config.algorithms {
        let result = run_algorithm(config, &inst, algo, rec.opt);
        if rec.lp1_value.is_none() {
            rec.lp1_value = result.1;
        }
        rec.results.push(result.0);
    }
    if let (Some(opt), Some(lp)) = (rec.opt, &rec.lp1_value) {
        let opt_q = Rational::from(opt);
        let costs_ok = rec.results.iter().filter_map(|r| r.cost).all(|c| opt <= c);
        rec.oracle_consistent = Some(*lp <= opt_q && costs_ok);
    }
    rec
}

fn run_algorithm(config: &BenchConfig, inst: &Instance, algo: Algorithm, opt: Option<u64>) -> (AlgoRecord, Option<Rational>) {
    let bound = algo.bound(inst);
    let mut rec = AlgoRecord {
        algorithm: algo,
        cost: None,
        bound,
        ratio_lp: None,
        ratio_opt: None,
        within_bound: false,
        feasible: false,
        checks_passed: false,
        checks_run: 0,
        lp_solves: 0,
        error: None,
        wall_ms: None,
    };
    let mut checker = Checker::new(config.checks);
    let start = Instant::now();
    let out = algo.run(inst, &mut checker);
    if config.timing {
        rec.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    rec.checks_run = checker.total();
    let out = match out {
        Ok(out) => out,
        Err(e) => {
            rec.error = Some(e.to_string());
            return (rec, None);
        }
    };
    let cost = out.cost();
    let cost_q = Rational::from(cost);
    let lp = out.lp1_value.clone();
    let bound_q = Rational::from(bound);
    rec.cost = Some(cost);
    rec.lp_solves = out.trace.lp_solves;
    rec.checks_passed = true;
    rec.ratio_lp = (!lp.is_zero()).then(|| &cost_q / &lp);
    let mut within = cost_q <= &bound_q * &lp;
    if let Some(opt) = opt {
        rec.ratio_opt = (opt > 0).then(|| &cost_q / &Rational::from(opt));
        within &= cost_q <= &bound_q * &Rational::from(opt);
    }
    rec.within_bound = within;
    rec.feasible = recover_assignment(inst, &out.x).is_ok_and(|sol| verify_cover(inst, &sol).is_ok());
    (rec, Some(lp))
}

fn summarize(config: &BenchConfig, records: &[InstanceRecord]) -> Summary {
    let errors = records.iter().filter(|r| r.error.is_some()).count()
        + records.iter().flat_map(|r| &r.results).filter(|a| a.error.is_some()).count();
    let oracle_bad = records.iter().filter(|r| r.oracle_consistent == Some(false)).count();
    let mut algorithms = Vec::new();
    for &algo in &config.algorithms {
        let runs: Vec<&AlgoRecord> =
            records.iter().flat_map(|r| &r.results).filter(|a| a.algorithm == algo).collect();
        let ratios: Vec<&Rational> = runs.iter().filter_map(|a| a.ratio_lp.as_ref()).collect();
        let mean = (!ratios.is_empty()).then(|| {
            let total: Rational = ratios.iter().copied().sum();
            total / Rational::from(ratios.len())
        });
        algorithms.push(AlgoSummary {
            algorithm: algo,
            runs: runs.len(),
            max_ratio_lp: ratios.iter().copied().max().cloned(),
            mean_ratio_lp: mean,
            max_ratio_opt: runs.iter().filter_map(|a| a.ratio_opt.as_ref()).max().cloned(),
            lp_solves: runs.iter().map(|a| a.lp_solves).sum(),
            checks_run: runs.iter().map(|a| a.checks_run).sum(),
            violations: runs.iter().filter(|a| !a.ok()).count(),
        });
    }
    let run_violations: usize = algorithms.iter().map(|a| a.violations).sum();
    let instance_errors = records.iter().filter(|r| r.error.is_some()).count();
    Summary {
        instances: records.len(),
        algorithms,
        errors,
        violations: run_violations + instance_errors + oracle_bad,
    }
}
