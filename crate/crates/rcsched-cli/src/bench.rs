//! Benchmark table.
//!
//! Columns: `instance,algo,eps,makespan,lowerT,oracleOpt,ratio,seconds`. Rationals are
//! written as `n` or `n/d`. `eps` is empty for greedy. `oracleOpt` is filled when the
//! instance has at most 8 jobs, and `ratio` is `makespan / oracleOpt` in that case and
//! `makespan / lowerT` otherwise, printed with six decimals. `seconds` is empty unless
//! timing was requested. A failed run leaves `makespan` and `ratio` as `-`.

use crate::{solve_instance, Algo};
use rayon::prelude::*;
use rcsched::baseline::{oracle_optimal, ORACLE_CAP};
use rcsched::model::{lower_bound_t, verify_schedule, Instance};
use rcsched::rational::{to_f64, Rational, Short};
use rcsched::solve::SolverOptions;
use std::time::Instant;

pub const HEADER: &str = "instance,algo,eps,makespan,lowerT,oracleOpt,ratio,seconds";

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub algos: Vec<Algo>,
    pub eps: Rational,
    pub opts: SolverOptions,
    pub timing: bool,
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub instance: String,
    pub algo: Algo,
    pub eps: Option<Rational>,
    pub makespan: Option<Rational>,
    pub lower_t: Rational,
    pub oracle: Option<Rational>,
    pub seconds: Option<f64>,
    pub error: Option<String>,
}

impl BenchRow {
    pub fn ratio(&self) -> Option<f64> {
        let mk = self.makespan.as_ref()?;
        let base = self.oracle.as_ref().unwrap_or(&self.lower_t);
        Some(if base == &Rational::from_integer(0.into()) { 1.0 } else { to_f64(&(mk / base)) })
    }
}

/// Runs every algorithm on every instance. Instances are processed in parallel; rows come
/// back in input order.
pub fn run_bench(instances: &[(String, Instance)], cfg: &BenchConfig) -> Vec<BenchRow> {
    instances.par_iter().flat_map_iter(|(name, inst)| bench_one(name, inst, cfg)).collect()
}

fn bench_one(name: &str, inst: &Instance, cfg: &BenchConfig) -> Vec<BenchRow> {
    let lower_t = lower_bound_t(inst);
    let oracle = if inst.n() <= ORACLE_CAP { oracle_optimal(inst).ok().map(|(_, opt)| opt) } else { None };
    cfg.algos
        .iter()
        .map(|&algo| {
            let clock = Instant::now();
            let out = solve_instance(inst, algo, &cfg.eps, &cfg.opts);
            let seconds = cfg.timing.then(|| clock.elapsed().as_secs_f64());
            let (makespan, error) = match out {
                Ok(s) => match verify_schedule(inst, &s.schedule) {
                    Ok(rep) if rep.feasible => (Some(s.cert.makespan), None),
                    Ok(rep) => (None, Some(format!("infeasible: {:?}", rep.first_violation))),
                    Err(e) => (None, Some(e.to_string())),
                },
                Err(e) => (None, Some(e.to_string())),
            };
            BenchRow {
                instance: name.to_string(),
                algo,
                eps: (algo != Algo::Greedy).then(|| cfg.eps.clone()),
                makespan,
                lower_t: lower_t.clone(),
                oracle: oracle.clone(),
                seconds,
                error,
            }
        })
        .collect()
}

fn q(x: &Option<Rational>) -> String {
    x.as_ref().map(|v| Short(v).to_string()).unwrap_or_default()
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER.split(',')).expect("in-memory write");
    for r in rows {
        let makespan = if r.error.is_some() { "-".into() } else { q(&r.makespan) };
        let ratio = r.ratio().map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
        let seconds = r.seconds.map(|s| format!("{s:.3}")).unwrap_or_default();
        w.write_record([
            r.instance.as_str(),
            r.algo.name(),
            &q(&r.eps),
            &makespan,
            &Short(&r.lower_t).to_string(),
            &q(&r.oracle),
            &ratio,
            &seconds,
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}
