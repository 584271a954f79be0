//! Property tests over random small instances, checked against brute-force oracles.

use proptest::prelude::*;
use rcsched::aptas::aptas;
use rcsched::assemble::compact;
use rcsched::baseline::{greedy, greedy_bound, oracle_optimal};
use rcsched::model::{lower_bound_t, makespan, verify_schedule, Instance, Job, Schedule};
use rcsched::rational::{format_rational, parse_rational, rat, Rational};
use rcsched::solve::{certify, scan_gap};
use rcsched::three_halves::three_halves;

fn instance(max_n: usize) -> impl Strategy<Value = Instance> {
    (1u64..=4, 1u64..=10).prop_flat_map(move |(m, resource)| {
        prop::collection::vec((1i64..=20, 1i64..=4, 1u64..=resource), 0..=max_n).prop_map(move |v| {
            let jobs = v.into_iter().enumerate().map(|(i, (a, b, r))| Job::new(i as u64, rat(a, b), r)).collect();
            Instance::new(m, resource, jobs).unwrap()
        })
    })
}

fn with_starts(max_n: usize) -> impl Strategy<Value = (Instance, Schedule)> {
    instance(max_n).prop_flat_map(|inst| {
        let n = inst.n();
        (Just(inst), prop::collection::vec((0i64..=12, 1i64..=2), n)).prop_map(|(inst, starts)| {
            let mut s = Schedule::new();
            for (j, (a, b)) in inst.jobs.iter().zip(starts) {
                s.insert(j.id, rat(a, b));
            }
            (inst, s)
        })
    })
}

/// Checks both capacities at every start time, job by job.
fn naive_feasible(inst: &Instance, s: &Schedule) -> bool {
    inst.jobs.iter().all(|a| {
        let t = &s.starts[&a.id];
        let running: Vec<&Job> = inst
            .jobs
            .iter()
            .filter(|b| &s.starts[&b.id] <= t && t < &(&s.starts[&b.id] + &b.p))
            .collect();
        running.len() as u64 <= inst.m && running.iter().map(|j| j.r).sum::<u64>() <= inst.resource
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn instance_json_round_trip(inst in instance(8)) {
        let text = serde_json::to_string(&inst).unwrap();
        let back: Instance = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn schedule_json_round_trip((_, s) in with_starts(8)) {
        let text = serde_json::to_string(&s).unwrap();
        let back: Schedule = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn rational_text_round_trip(n in -1000i64..1000, d in 1i64..50) {
        let q = rat(n, d);
        prop_assert_eq!(parse_rational(&format_rational(&q)).unwrap(), q);
    }

    #[test]
    fn verifier_matches_naive_check((inst, s) in with_starts(7)) {
        let rep = verify_schedule(&inst, &s).unwrap();
        prop_assert_eq!(rep.feasible, naive_feasible(&inst, &s));
        prop_assert_eq!(rep.makespan, makespan(&inst, &s).unwrap());
    }

    #[test]
    fn greedy_is_feasible_and_bounded(inst in instance(12)) {
        let s = greedy(&inst);
        let rep = verify_schedule(&inst, &s).unwrap();
        prop_assert!(rep.feasible);
        prop_assert!(rep.makespan <= greedy_bound(&inst));
        prop_assert!(rep.makespan >= lower_bound_t(&inst));
    }

    #[test]
    fn oracle_sits_between_lower_bound_and_greedy(inst in instance(6)) {
        let (s, opt) = oracle_optimal(&inst).unwrap();
        prop_assert!(naive_feasible(&inst, &s));
        prop_assert_eq!(makespan(&inst, &s).unwrap(), opt.clone());
        prop_assert!(opt >= lower_bound_t(&inst));
        prop_assert!(opt <= makespan(&inst, &greedy(&inst)).unwrap());
    }

    #[test]
    fn compaction_keeps_feasibility_and_never_delays(inst in instance(10)) {
        // spread the greedy schedule out, then compact it back
        let mut spread = Schedule::new();
        for (i, (id, t)) in greedy(&inst).starts.iter().enumerate() {
            spread.insert(*id, t * Rational::from_integer(2.into()) + rat(i as i64, 3));
        }
        prop_assume!(verify_schedule(&inst, &spread).unwrap().feasible);
        let c = compact(&inst, &spread);
        prop_assert!(verify_schedule(&inst, &c).unwrap().feasible);
        for (id, t) in &c.starts {
            prop_assert!(t <= &spread.starts[id]);
        }
    }

    #[test]
    fn gap_scan_matches_layerwise_check(
        usage in prop::collection::vec((0u64..=4, 0u64..=10), 0..8),
        k in 0u64..=4,
        g in 1i64..=10,
    ) {
        let gamma = rat(1, g);
        let scan = scan_gap(&usage, 4, 10, k, &gamma);
        let naive = usage.iter().all(|&(m, r)| 4 - m >= k && Rational::from_integer((10 - r).into()) >= &gamma * rat(10, 1));
        prop_assert_eq!(scan.ok, naive);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn drivers_are_feasible_certified_and_not_below_optimum(inst in instance(6)) {
        prop_assume!(!inst.jobs.is_empty());
        let (_, opt) = oracle_optimal(&inst).unwrap();
        let eps = rat(1, 2);
        for r in [aptas(&inst, &eps).unwrap(), three_halves(&inst, &eps).unwrap()] {
            prop_assert!(naive_feasible(&inst, &r.schedule));
            let rep = certify(&r, &inst, &eps);
            prop_assert!(rep.ok(), "{:?}", rep.failures());
            prop_assert!(r.makespan() >= &opt);
            prop_assert!(r.makespan() <= &(&opt * rat(9, 2) + inst.p_max()));
        }
    }
}
