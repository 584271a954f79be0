//! End-to-end acceptance suite. Runs every criterion, prints one line each and exits with a
//! failure status if any of them fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcsched::aptas::aptas_with;
use rcsched::baseline::{greedy, greedy_bound, greedy_bound_jobs, oracle_optimal};
use rcsched::generate::{corpus, Family, GenParams};
use rcsched::large::{
    choose_alpha, growth, place_large, split_wide_narrow, GridContext, GridJob, LargeMode, LargeOptions,
};
use rcsched::model::{makespan, verify_schedule, Instance, Job};
use rcsched::rational::{int, rat, to_f64, uint, Rational};
use rcsched::simplify::{simplify, weight};
use rcsched::small::config_lp::{check_config_solution, solve_config_lp, solve_config_lp_enumerated, BoxSpec, SmallType};
use rcsched::small::{place_small, segments, window_support_bound, SmallError, SmallInput};
use rcsched::solve::{certify, scan_gap, SolveResult, SolverOptions};
use rcsched::three_halves::three_halves_with;
use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::time::Instant;

struct Line {
    pass: bool,
    detail: String,
}

fn line(pass: bool, detail: impl Into<String>) -> Line {
    Line { pass, detail: detail.into() }
}

fn half() -> Rational {
    rat(1, 2)
}

/// Data gathered once over the fuzz corpus and shared by several criteria.
#[derive(Default)]
struct Fuzz {
    instances: usize,
    schedules: usize,
    seconds: f64,
    infeasible: Vec<String>,
    greedy_over_bound: Vec<String>,
    gap_violations: Vec<String>,
    medium_checks: usize,
    support_checks: usize,
    support_violations: Vec<String>,
    gap_runs: usize,
    gap_failures: Vec<String>,
}

fn fuzz_corpus() -> Vec<Instance> {
    let mut out = Vec::new();
    for (k, family) in Family::ALL.into_iter().enumerate() {
        out.extend(corpus(&GenParams::new(family, 1, 40), 2500, 1000 + k as u64));
    }
    out
}

fn check_driver(
    name: &str,
    tag: &str,
    inst: &Instance,
    eps: &Rational,
    r: Result<SolveResult, rcsched::solve::SolveError>,
    fz: &mut Fuzz,
) -> Option<SolveResult> {
    let r = match r {
        Ok(r) => r,
        Err(e) => {
            fz.infeasible.push(format!("{tag} {name}: no schedule ({e})"));
            return None;
        }
    };
    fz.schedules += 1;
    match verify_schedule(inst, &r.schedule) {
        Ok(rep) if rep.feasible => {}
        Ok(rep) => fz.infeasible.push(format!("{tag} {name}: {:?}", rep.first_violation)),
        Err(e) => fz.infeasible.push(format!("{tag} {name}: {e}")),
    }
    let cert = certify(&r, inst, eps);
    if !cert.ok() {
        let names: Vec<String> = cert.failures().iter().map(|c| c.name.clone()).collect();
        fz.infeasible.push(format!("{tag} {name}: certificate {names:?}"));
    }
    if let Some(s) = &r.certificate.small {
        if s.types > 0 {
            fz.support_checks += 1;
            let bound = window_support_bound(&r.certificate.eps, &r.certificate.delta, s.narrow_types);
            if uint(s.support_after as u64) > bound {
                fz.support_violations.push(format!("{tag} {name}: support {} > {bound}", s.support_after));
            }
        }
    }
    Some(r)
}

fn check_gap(tag: &str, inst: &Instance, r: &SolveResult, runs: &mut usize, failures: &mut Vec<String>) {
    let Some(g) = &r.certificate.gap else { return };
    *runs += 1;
    let again = scan_gap(&g.usage, inst.m, inst.resource, g.k, &g.gamma);
    if !g.scan.ok || !again.ok || again != g.scan {
        failures.push(format!("{tag}: case {} scan {:?}", g.case, again));
    }
}

fn run_fuzz() -> Fuzz {
    let clock = Instant::now();
    let mut fz = Fuzz::default();
    let eps = half();
    let third = rat(1, 3);
    for (i, inst) in fuzz_corpus().iter().enumerate() {
        fz.instances += 1;
        let tag = format!("#{i}");
        // greedy
        let g = greedy(inst);
        fz.schedules += 1;
        let rep = verify_schedule(inst, &g).expect("complete schedule");
        if !rep.feasible {
            fz.infeasible.push(format!("{tag} greedy: {:?}", rep.first_violation));
        }
        if rep.makespan > greedy_bound(inst) {
            fz.greedy_over_bound.push(tag.clone());
        }
        if inst.jobs.is_empty() {
            continue;
        }
        // medium band weight
        for e in [&eps, &third] {
            let s = simplify(inst, e).expect("unit fraction");
            let medium: Vec<Job> = inst.jobs.iter().filter(|j| s.classes.medium.contains(&j.id)).cloned().collect();
            let lo = &s.gap.mu * &s.t;
            let hi = &s.gap.delta * &s.t;
            let band_ok = inst.jobs.iter().all(|j| s.classes.medium.contains(&j.id) == (j.p >= lo && j.p < hi));
            let light = weight(&medium, inst.m, inst.resource) <= e * weight(&inst.jobs, inst.m, inst.resource);
            fz.medium_checks += 1;
            if !band_ok || !light {
                fz.gap_violations.push(format!("{tag} eps={e}"));
            }
        }
        let opts = SolverOptions::default();
        check_driver("aptas", &tag, inst, &eps, aptas_with(inst, &eps, &opts), &mut fz);
        if let Some(r) = check_driver("three-halves", &tag, inst, &eps, three_halves_with(inst, &eps, &opts), &mut fz) {
            check_gap(&tag, inst, &r, &mut fz.gap_runs, &mut fz.gap_failures);
        }
    }
    fz.seconds = clock.elapsed().as_secs_f64();
    fz
}

fn sample(v: &[String]) -> String {
    v.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
}

fn c1(fz: &Fuzz) -> Line {
    let pass = fz.infeasible.is_empty() && fz.instances >= 10_000 && fz.seconds < 600.0;
    line(
        pass,
        format!(
            "{} instances (n <= 40), {} schedules verified and certified, {} problems, {:.1}s {}",
            fz.instances,
            fz.schedules,
            fz.infeasible.len(),
            fz.seconds,
            sample(&fz.infeasible)
        ),
    )
}

fn c2(fz: &Fuzz) -> Line {
    line(
        fz.greedy_over_bound.is_empty(),
        format!("greedy within (1/m)p(J) + (2/R)area(J) + p_max on {} instances, {} above", fz.instances, fz.greedy_over_bound.len()),
    )
}

fn c3() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = GenParams::new(Family::Random, 1, 7);
    let mut n = 0;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    while n < 500 {
        let inst = rcsched::generate::generate_with(&params, &mut rng);
        // with one machine the bound 3 - 3/m is 0 and says nothing
        if inst.m < 2 || inst.jobs.is_empty() {
            continue;
        }
        n += 1;
        let (_, opt) = oracle_optimal(&inst).expect("small");
        let mk = makespan(&inst, &greedy(&inst)).expect("complete");
        let bound = int(3) - Rational::new(3.into(), inst.m.into());
        worst = worst.max(to_f64(&(&mk / &opt)));
        if mk > bound * &opt {
            bad.push(format!("m={} ratio {}", inst.m, &mk / &opt));
        }
    }
    line(bad.is_empty(), format!("{n} instances with m >= 2, n <= 7; worst greedy/OPT {worst:.4}; {} above 3 - 3/m {}", bad.len(), sample(&bad)))
}

fn c4(fz: &Fuzz) -> Line {
    line(
        fz.gap_violations.is_empty(),
        format!(
            "medium band weight <= eps * weight(J) for eps in {{1/2, 1/3}}: {} checks, {} violations {}",
            fz.medium_checks,
            fz.gap_violations.len(),
            sample(&fz.gap_violations)
        ),
    )
}

fn c5() -> Line {
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for (k, eps) in [rat(1, 2), rat(1, 3)].into_iter().enumerate() {
        let mut insts = corpus(&GenParams::new(Family::Random, 1, 6), 150, 50 + k as u64);
        insts.extend(corpus(&GenParams::new(Family::HugeHeavy, 1, 6), 50, 60 + k as u64));
        for inst in insts {
            if inst.jobs.is_empty() {
                continue;
            }
            let s = simplify(&inst, &eps).expect("unit fraction");
            let step = &eps * &s.gap.delta * &s.t;
            let jobs: Vec<Job> = inst
                .jobs
                .iter()
                .map(|j| match s.rounded.get(&j.id) {
                    Some(r) => {
                        assert!((&r.p / &step).is_integer(), "rounded length off the grid");
                        Job::new(j.id, r.p.clone(), j.r)
                    }
                    None => j.clone(),
                })
                .collect();
            let rounded = Instance::new(inst.m, inst.resource, jobs).expect("valid");
            let (_, opt) = oracle_optimal(&inst).expect("small");
            let (_, opt_r) = oracle_optimal(&rounded).expect("small");
            let bound = (int(1) + int(2) * &eps) * &opt + &step * uint(inst.n() as u64);
            checked += 1;
            worst = worst.max(to_f64(&(&opt_r / &opt)));
            if opt_r > bound {
                bad.push(format!("eps={eps} OPT={opt} rounded={opt_r}"));
            }
        }
    }
    line(
        bad.is_empty() && checked >= 400,
        format!("{checked} instances (200 per eps, n <= 6); worst OPT(rounded)/OPT {worst:.4}; {} violations {}", bad.len(), sample(&bad)),
    )
}

fn lp_options() -> SolverOptions {
    let mut o = SolverOptions::default();
    o.large.mode = LargeMode::Lp;
    o.large.node_budget = 500;
    o
}

/// A wide job leaves a thin residual that several narrow jobs compete for.
fn contended(rng: &mut ChaCha8Rng, resource: u64, residual: std::ops::RangeInclusive<u64>, narrow_r: std::ops::RangeInclusive<u64>) -> Instance {
    let m = rng.gen_range(3..=4u64);
    let mut jobs = vec![Job::new(0, rat(rng.gen_range(8..=10), 2), resource - rng.gen_range(residual))];
    let n = rng.gen_range(3..=6);
    for i in 1..=n {
        jobs.push(Job::new(i, rat(rng.gen_range(4..=8), 2), rng.gen_range(narrow_r.clone())));
    }
    Instance::new(m, resource, jobs).expect("valid")
}

fn c6() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut placements = 0;
    let mut max_frac_seen = 0;
    let mut bad = Vec::new();
    let opts = LargeOptions { mode: LargeMode::Lp, profile_budget: 5000, guess_budget: 24, node_budget: 40 };
    let mut cases = 0;
    while cases < 120 {
        cases += 1;
        let count = rng.gen_range(2..=8u64);
        let m = rng.gen_range(1..=4u64);
        let resource = 2000;
        let gamma = if rng.gen_bool(0.5) { int(1) } else { rat(1, 2) };
        let alpha = choose_alpha(&gamma, count);
        let rmax = rcsched::rational::floor_int(&(&alpha * uint(resource))).try_into().unwrap_or(1u64).max(1);
        let mut jobs = vec![GridJob {
            id: 0,
            len: rng.gen_range(1..=count),
            r: resource - rng.gen_range(rmax..=3 * rmax),
            huge: false,
        }];
        for id in 1..=rng.gen_range(2..=6u64) {
            jobs.push(GridJob { id, len: rng.gen_range(1..=count.div_ceil(2)), r: rng.gen_range(1..=rmax), huge: false });
        }
        let ctx = GridContext { count, m, resource, gamma: gamma.clone(), huge_align: 1 };
        let (_, narrow) = split_wide_narrow(&jobs, &alpha, resource);
        let narrow_ids: BTreeSet<u64> = narrow.iter().map(|j| j.id).collect();
        let by_id: BTreeMap<u64, &GridJob> = jobs.iter().map(|j| (j.id, j)).collect();
        let mut seen = Vec::new();
        let out = place_large(&ctx, &jobs, &opts, |pl| {
            seen.push(pl.clone());
            None::<()>
        });
        let out = match out {
            Ok(o) => o,
            Err(e) => {
                bad.push(format!("case {cases}: {e}"));
                continue;
            }
        };
        max_frac_seen = max_frac_seen.max(out.stats.max_fractional);
        if out.stats.max_fractional as u64 > 2 * count {
            bad.push(format!("case {cases}: {} fractional > 2|S|", out.stats.max_fractional));
        }
        for pl in &seen {
            placements += 1;
            let profile = pl.profile.as_ref().expect("LP placements carry their profile");
            let g = growth(m);
            for s in 0..count {
                let used: u64 = pl
                    .starts
                    .iter()
                    .filter(|(id, &i)| narrow_ids.contains(id) && i <= s && s < i + by_id[*id].len)
                    .map(|(id, _)| by_id[id].r)
                    .sum();
                if uint(used) > profile.resource_bound(s as usize, m, resource) / &g {
                    bad.push(format!("case {cases}: layer {s} uses {used}"));
                }
            }
            let removed_r: u64 = pl.removed.iter().map(|id| by_id[id].r).sum();
            if uint(removed_r) > &gamma * uint(resource) {
                bad.push(format!("case {cases}: r(removed) = {removed_r}"));
            }
        }
    }
    // the same checks inside full solver runs
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut solver_runs = 0;
    for _ in 0..3 {
        let inst = contended(&mut rng, 1000, 10..=14, 4..=8);
        if let Ok(r) = aptas_with(&inst, &half(), &lp_options()) {
            solver_runs += 1;
            if r.certificate.large.max_fractional as u64 > 2 * r.certificate.layers {
                bad.push(format!("solver run: {} fractional", r.certificate.large.max_fractional));
            }
        }
    }
    line(
        bad.is_empty() && placements > 0,
        format!(
            "{cases} LP contexts, {placements} pruned placements, {solver_runs} LP-mode solver runs; max fractional {max_frac_seen}; {} violations {}",
            bad.len(),
            sample(&bad)
        ),
    )
}

fn c7() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut cases, mut feasible) = (0, 0);
    let mut bad = Vec::new();
    while feasible < 120 && cases < 1000 {
        let resource = rng.gen_range(2..=12u64);
        let types: Vec<SmallType> = (0..rng.gen_range(1..=5))
            .map(|_| {
                let r = rng.gen_range(1..=resource);
                SmallType { r, p: rat(rng.gen_range(1..=8), 2), wide: 2 * r > resource }
            })
            .collect();
        let boxes: Vec<BoxSpec> = (0..rng.gen_range(1..=3))
            .map(|_| BoxSpec {
                machines: rng.gen_range(1..=4),
                resource: rng.gen_range(1..=resource),
                cap: int(rng.gen_range(4..=24)),
                weight: int(rng.gen_range(1..=2)),
            })
            .collect();
        cases += 1;
        let cg = solve_config_lp(&types, &boxes);
        let en = solve_config_lp_enumerated(&types, &boxes);
        match (&cg, &en) {
            (Ok(a), Ok(b)) => {
                feasible += 1;
                if a.objective != b.objective {
                    bad.push(format!("case {cases}: {} vs {}", a.objective, b.objective));
                }
                if let Err(e) = check_config_solution(&types, &boxes, a) {
                    bad.push(format!("case {cases}: {e}"));
                }
            }
            (Err(SmallError::Infeasible), Err(SmallError::Infeasible)) => {}
            _ => bad.push(format!("case {cases}: {:?} vs {:?}", cg.map(|s| s.objective), en.map(|s| s.objective))),
        }
    }
    line(
        bad.is_empty() && feasible >= 100,
        format!("{cases} cases (<= 5 types, m_s <= 4), {feasible} feasible; {} mismatches {}", bad.len(), sample(&bad)),
    )
}

fn c8(fz: &Fuzz) -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = fz.support_violations.clone();
    let mut blocks = 0;
    let mut runs = 0;
    let mut worst = 0.0f64;
    for _ in 0..150 {
        let (m, resource) = (rng.gen_range(1..=4u64), rng.gen_range(2..=20u64));
        let eps = if rng.gen_bool(0.5) { rat(1, 2) } else { rat(1, 3) };
        let step = rat(1, 1);
        let count = rng.gen_range(2..=10usize);
        let usage: Vec<(u64, u64)> = (0..count)
            .map(|_| if rng.gen_bool(0.3) { (0, 0) } else { (rng.gen_range(0..m), rng.gen_range(0..resource)) })
            .collect();
        let segs = segments(&usage, &BTreeSet::new(), m, resource);
        let jobs: Vec<Job> = (0..rng.gen_range(1..=25))
            .map(|id| Job::new(id, rat(rng.gen_range(1..=4), 8), rng.gen_range(1..=resource)))
            .collect();
        // room for everything in the extra box, so the LP is always feasible
        let extra = greedy_bound_jobs(&jobs, m, resource);
        let input = SmallInput { m, resource, eps: &eps, step: &step, segments: &segs, extra_len: &extra, jobs: &jobs, all_jobs: &jobs };
        let plan = match place_small(&input) {
            Ok(p) => p,
            Err(e) => {
                bad.push(format!("place_small: {e}"));
                continue;
            }
        };
        runs += 1;
        let stretch = int(1) + &eps;
        for (seg, fill) in segs.iter().zip(&plan.segments) {
            blocks += 1;
            let len = uint(seg.layers) * &step;
            if !len.numer().eq(&0.into()) {
                worst = worst.max(to_f64(&(&fill.used / &len)));
            }
            if fill.used > &stretch * &len {
                bad.push(format!("segment used {} of {}", fill.used, len));
            }
        }
        if plan.extra.used > &stretch * &extra {
            bad.push(format!("extra used {}", plan.extra.used));
        }
    }
    line(
        bad.is_empty(),
        format!(
            "support <= 2/(eps^3 delta) + #narrow in {} solver runs; {runs} direct runs, {blocks} segments, worst used/length {worst:.3} <= 1 + eps; {} violations {}",
            fz.support_checks,
            bad.len(),
            sample(&bad)
        ),
    )
}

/// Oracle-sized corpus for the end-to-end ratios.
fn small_corpus() -> Vec<Instance> {
    let mut out = Vec::new();
    for (k, family) in Family::ALL.into_iter().enumerate() {
        out.extend(corpus(&GenParams::new(family, 1, 7), 30, 90 + k as u64));
    }
    out.retain(|i| !i.jobs.is_empty());
    out
}

fn c9(insts: &[Instance]) -> Line {
    let eps = half();
    let mut c = 0.0f64;
    let mut bad = Vec::new();
    for inst in insts {
        let (_, opt) = oracle_optimal(inst).expect("small");
        match aptas_with(inst, &eps, &SolverOptions::default()) {
            Ok(r) => {
                let excess = r.makespan() - &opt - inst.p_max();
                c = c.max(to_f64(&(excess / (&eps * &opt))));
            }
            Err(e) => bad.push(e.to_string()),
        }
    }
    line(
        bad.is_empty() && c <= 8.0 && insts.len() >= 100,
        format!("{} instances (n <= 7), eps = 1/2: measured c = {:.3} (pinned <= 8) {}", insts.len(), c.max(0.0), sample(&bad)),
    )
}

fn c10(insts: &[Instance]) -> Line {
    let eps = half();
    let mut all: Vec<Instance> = insts.to_vec();
    all.extend(corpus(&GenParams::new(Family::HugeHeavy, 2, 7), 100, 110));
    let mut c = 0.0f64;
    let mut bad = Vec::new();
    for inst in &all {
        let (_, opt) = oracle_optimal(inst).expect("small");
        match three_halves_with(inst, &eps, &SolverOptions::default()) {
            Ok(r) => {
                let excess = r.makespan() - &opt * rat(3, 2);
                c = c.max(to_f64(&(excess / (&eps * &opt))));
            }
            Err(e) => bad.push(e.to_string()),
        }
    }
    // Witness: the long narrow job is fractional in the placement LP, so the additive
    // driver stacks it on top while the three-halves driver keeps huge jobs in place.
    // Block layouts are compared before the final left shift.
    let inst = Instance::from_pairs(3, 1000, &[(int(5), 991), (int(4), 4), (int(3), 5)]).expect("valid");
    let mut opts = lp_options();
    opts.compact = false;
    let (_, opt) = oracle_optimal(&inst).expect("small");
    let witness = match (aptas_with(&inst, &eps, &opts), three_halves_with(&inst, &eps, &opts)) {
        (Ok(a), Ok(h)) => {
            let top = a.certificate.parts.iter().find(|p| p.label == "top").expect("top block");
            let half_horizon = &a.certificate.t_prime / int(2);
            let stacked_huge = top.jobs.iter().any(|id| inst.job(*id).expect("job").p > half_horizon);
            let ok = stacked_huge && h.makespan() < a.makespan() && certify(&a, &inst, &eps).ok() && certify(&h, &inst, &eps).ok();
            (ok, format!("witness aptas {} vs three-halves {} (OPT {opt})", to_f64(&(a.makespan() / &opt)), to_f64(&(h.makespan() / &opt))))
        }
        (a, h) => (false, format!("witness failed: {:?} {:?}", a.err(), h.err())),
    };
    line(
        bad.is_empty() && c <= 8.0 && witness.0,
        format!("{} instances incl. 100 huge-heavy: measured c = {:.3} (pinned <= 8); {} {}", all.len(), c.max(0.0), witness.1, sample(&bad)),
    )
}

fn c11(fz: &Fuzz) -> Line {
    let mut runs = fz.gap_runs;
    let mut failures = fz.gap_failures.clone();
    // LP-mode runs with removed jobs, forced through the shifted-gap route
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut opts = lp_options();
    opts.shift_always = true;
    let mut cases: BTreeMap<String, u64> = BTreeMap::new();
    for i in 0..6 {
        let inst = contended(&mut rng, 1_000_000, 10..=14, 4..=8);
        let tag = format!("lp #{i}");
        match three_halves_with(&inst, &half(), &opts) {
            Ok(r) => {
                if !certify(&r, &inst, &half()).ok() {
                    failures.push(format!("{tag}: certificate"));
                }
                if let Some(g) = &r.certificate.gap {
                    *cases.entry(g.case.clone()).or_default() += 1;
                }
                check_gap(&tag, &inst, &r, &mut runs, &mut failures);
            }
            Err(e) => failures.push(format!("{tag}: {e}")),
        }
    }
    let shifted = cases.iter().filter(|(c, _)| c.contains('.')).map(|(_, n)| n).sum::<u64>();
    line(
        failures.is_empty() && shifted > 0,
        format!("{runs} gap placements scanned, shifted-gap cases {cases:?}; {} failures {}", failures.len(), sample(&failures)),
    )
}

fn c12() -> Line {
    let bin = env!("CARGO_BIN_EXE_rcsched");
    let run = |seed: &str| {
        Command::new(bin)
            .args(["bench", "--count", "24", "--n-max", "8", "--seed", seed])
            .output()
            .expect("bench runs")
    };
    let (a, b, other) = (run("42"), run("42"), run("43"));
    let same = a.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    let differs = other.stdout != a.stdout;
    let header = String::from_utf8_lossy(&a.stdout).lines().next().unwrap_or_default().to_string();
    line(
        same && differs && header == rcsched_cli::bench::HEADER,
        format!("two runs with seed 42 byte-identical: {same} ({} bytes); seed 43 differs: {differs}", a.stdout.len()),
    )
}

fn main() {
    let clock = Instant::now();
    let fz = run_fuzz();
    let small = small_corpus();
    let results = [
        ("feasibility fuzz", c1(&fz)),
        ("greedy bound", c2(&fz)),
        ("greedy oracle ratio", c3()),
        ("medium gap", c4(&fz)),
        ("rounding loss", c5()),
        ("placement LP structure", c6()),
        ("configuration LP oracle", c7()),
        ("window reduction", c8(&fz)),
        ("additive driver end-to-end", c9(&small)),
        ("three-halves end-to-end", c10(&small)),
        ("gap validity", c11(&fz)),
        ("bench determinism", c12()),
    ];
    let mut failed = 0;
    for (i, (name, l)) in results.iter().enumerate() {
        println!("criterion {:>2} {} {name}: {}", i + 1, if l.pass { "PASS" } else { "FAIL" }, l.detail);
        if !l.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} passed in {:.1}s", results.len() - failed, results.len(), clock.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
