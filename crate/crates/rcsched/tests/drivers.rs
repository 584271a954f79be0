//! Hand-checked instances with known optima.

use rcsched::aptas::aptas;
use rcsched::baseline::{greedy, oracle_optimal};
use rcsched::model::{makespan, verify_schedule, Instance};
use rcsched::rational::{int, rat};
use rcsched::solve::{certify, SolveError};
use rcsched::three_halves::three_halves;

fn all_schedules(inst: &Instance) -> Vec<(&'static str, rcsched::model::Schedule)> {
    let eps = rat(1, 2);
    vec![
        ("greedy", greedy(inst)),
        ("aptas", aptas(inst, &eps).unwrap().schedule),
        ("three-halves", three_halves(inst, &eps).unwrap().schedule),
    ]
}

#[test]
fn full_resource_jobs_run_one_after_another() {
    let inst = Instance::from_pairs(3, 4, &[(int(2), 4), (int(3), 4), (rat(1, 2), 4)]).unwrap();
    let (_, opt) = oracle_optimal(&inst).unwrap();
    assert_eq!(opt, rat(11, 2));
    for (name, s) in all_schedules(&inst) {
        let rep = verify_schedule(&inst, &s).unwrap();
        assert!(rep.feasible, "{name}");
        assert_eq!(rep.makespan, opt, "{name}");
    }
}

#[test]
fn one_job_per_machine_runs_in_parallel() {
    let inst = Instance::from_pairs(3, 3, &[(int(5), 1), (int(5), 1), (int(5), 1)]).unwrap();
    for (name, s) in all_schedules(&inst) {
        assert_eq!(makespan(&inst, &s).unwrap(), int(5), "{name}");
    }
}

#[test]
fn machines_bind_before_the_resource() {
    // four unit jobs on two machines with plenty of resource
    let inst = Instance::from_pairs(2, 100, &[(int(1), 1), (int(1), 1), (int(1), 1), (int(1), 1)]).unwrap();
    let (_, opt) = oracle_optimal(&inst).unwrap();
    assert_eq!(opt, int(2));
    for (name, s) in all_schedules(&inst) {
        assert_eq!(makespan(&inst, &s).unwrap(), opt, "{name}");
    }
}

#[test]
fn epsilon_is_rounded_down_to_a_unit_fraction() {
    let inst = Instance::from_pairs(2, 3, &[(int(2), 2), (int(1), 1)]).unwrap();
    let r = aptas(&inst, &rat(2, 5)).unwrap();
    assert_eq!(r.certificate.eps, rat(1, 3));
    assert!(certify(&r, &inst, &rat(1, 3)).ok());
}

#[test]
fn bad_inputs_are_rejected() {
    let empty = Instance::new(2, 2, vec![]).unwrap();
    assert_eq!(aptas(&empty, &rat(1, 2)).unwrap_err(), SolveError::Empty);
    assert_eq!(three_halves(&empty, &rat(1, 2)).unwrap_err(), SolveError::Empty);
    let inst = Instance::from_pairs(1, 1, &[(int(1), 1)]).unwrap();
    assert!(matches!(aptas(&inst, &int(1)), Err(SolveError::Simplify(_))));
    assert!(matches!(three_halves(&inst, &int(0)), Err(SolveError::Simplify(_))));
}

#[test]
fn certificates_record_the_horizon_search() {
    let inst = Instance::from_pairs(2, 5, &[(int(4), 3), (int(3), 2), (int(2), 4), (rat(1, 4), 1)]).unwrap();
    let r = three_halves(&inst, &rat(1, 2)).unwrap();
    let c = &r.certificate;
    assert!(!c.attempts.is_empty());
    assert!(c.attempts.iter().any(|a| a.ok && a.t_prime == c.t_prime));
    assert!(!c.cases_tried.is_empty());
    assert_eq!(c.makespan, *r.makespan());
    assert!(c.makespan <= c.parts_sum);
}
