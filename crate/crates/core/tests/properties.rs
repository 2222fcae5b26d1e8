mod common;

use proptest::prelude::*;

use vchc::assignment::{recover_assignment, verify_cover};
use vchc::harness::{brute_force_opt, Algorithm, DEFAULT_BUDGET};
use vchc::instance::{generate_random, parse_instance, serialize_instance, GenParams};
use vchc::trace::Checker;
use vchc::{CoverSolution, Instance, Rational};

/// Coverable instances; parameter draws that admit none are discarded.
fn instances() -> impl Strategy<Value = (GenParams, u64, Instance)> {
    (3usize..=6, 2usize..=9, 2usize..=3, 1u64..=4, 1u64..=3, any::<u64>()).prop_filter_map(
        "no coverable draw",
        |(n, e, r, k, m, seed)| {
            let p = GenParams::new(n, e, r, k, m);
            generate_random(&p, seed).ok().map(|inst| (p, seed, inst))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn outputs_are_feasible_and_bounded((_, _, inst) in instances()) {
        let opt = brute_force_opt(&inst, DEFAULT_BUDGET).unwrap().opt;
        prop_assert_eq!(common::assignment_opt(&inst), Some(opt));
        for algo in Algorithm::ALL {
            if algo == Algorithm::IterLp4 && inst.rank() > 2 {
                continue;
            }
            let out = algo.run(&inst, &mut Checker::new(true)).unwrap();
            let bound = Rational::from(algo.bound(&inst));
            prop_assert!(out.lp1_value <= Rational::from(opt));
            prop_assert!(Rational::from(out.cost()) <= &bound * &out.lp1_value);
            prop_assert!(out.cost() >= opt);
            for (v, &x) in out.x.iter().enumerate() {
                prop_assert!(x <= inst.multiplicity(v));
            }
            let sol = recover_assignment(&inst, &out.x).unwrap();
            prop_assert!(verify_cover(&inst, &sol).is_ok());
            prop_assert_eq!(out.trace.checks.get("verify-extreme").copied(), Some(out.trace.lp_solves as u64));
        }
    }

    #[test]
    fn runs_are_deterministic((p, seed, inst) in instances()) {
        prop_assert_eq!(&inst, &generate_random(&p, seed).unwrap());
        let a = Algorithm::IterLp3.run(&inst, &mut Checker::new(true)).unwrap();
        let b = Algorithm::IterLp3.run(&inst, &mut Checker::new(false)).unwrap();
        prop_assert_eq!(a.x, b.x);
        prop_assert_eq!(a.trace.iterations, b.trace.iterations);
    }

    #[test]
    fn instance_document_round_trip((_, _, inst) in instances()) {
        prop_assert_eq!(parse_instance(&serialize_instance(&inst)).unwrap(), inst.clone());
        let x: Vec<u64> = (0..inst.num_vertices()).map(|v| inst.multiplicity(v)).collect();
        let sol = recover_assignment(&inst, &x).unwrap();
        prop_assert_eq!(CoverSolution::parse(&sol.to_document()).unwrap(), sol);
    }

    #[test]
    fn rational_field_laws(a in -50i64..50, b in 1i64..20, c in -50i64..50, d in 1i64..20) {
        let (p, q) = (Rational::new(a, b), Rational::new(c, d));
        prop_assert_eq!(&(&p + &q) - &q, p.clone());
        prop_assert_eq!(&p * &q, Rational::new(a * c, b * d));
        prop_assert_eq!(p < q, a * d < c * b);
        prop_assert_eq!(p.to_string().parse::<Rational>().unwrap(), p);
    }
}
