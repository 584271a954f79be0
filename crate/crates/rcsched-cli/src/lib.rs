//! Front end for the `rcsched` solvers: instance and schedule files, solving, checking,
//! benchmarking and Gantt charts.

pub mod bench;
pub mod gantt;
pub mod io;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rcsched::aptas::aptas_with;
use rcsched::baseline::{greedy, greedy_bound, oracle_optimal_capped, ORACLE_CAP};
use rcsched::generate::{corpus, Family, GenParams};
use rcsched::model::{lower_bound_t, verify_schedule, Instance, Schedule};
use rcsched::rational::{parse_rational, Rational};
use rcsched::solve::{certify, CertReport, Certificate, SolveError, SolveResult, SolverOptions};
use rcsched::three_halves::three_halves_with;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "rcsched", version, about = "Scheduling with one shared renewable resource")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve an instance and write the schedule and its certificate.
    Solve(SolveArgs),
    /// Check a schedule (and optionally its certificate) against an instance.
    Verify(VerifyArgs),
    /// Exact optimum by exhaustive search (small instances only).
    Oracle(OracleArgs),
    /// Run solvers over a generated or stored corpus and write a CSV table.
    Bench(BenchArgs),
    /// Draw a feasible schedule as an SVG chart.
    Gantt(GanttArgs),
    /// Write a seeded corpus of instance files.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Greedy,
    Aptas,
    ThreeHalves,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Greedy => "greedy",
            Algo::Aptas => "aptas",
            Algo::ThreeHalves => "three-halves",
        }
    }
}

/// Solver knobs shared by `solve` and `bench`.
#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Accuracy parameter in (0, 1), written `n/d`. Rounded down to a unit fraction.
    #[arg(long, default_value = "1/2", value_parser = parse_eps)]
    pub eps: Rational,
    /// Profiles enumerated exactly before falling back to heuristic ones.
    #[arg(long = "budget-profiles", value_parser = clap::value_parser!(u64).range(1..))]
    pub budget_profiles: Option<u64>,
    /// Placements checked per horizon.
    #[arg(long = "budget-guesses", value_parser = clap::value_parser!(u64).range(1..))]
    pub budget_guesses: Option<u64>,
    /// Search nodes per horizon in the long-job placement.
    #[arg(long = "budget-nodes", value_parser = clap::value_parser!(u64).range(1..))]
    pub budget_nodes: Option<u64>,
    /// Skip the final left-shift pass.
    #[arg(long)]
    pub no_compact: bool,
}

impl SolverArgs {
    pub fn options(&self) -> SolverOptions {
        let mut o = SolverOptions::default();
        if let Some(b) = self.budget_profiles {
            o.large.profile_budget = b;
        }
        if let Some(b) = self.budget_guesses {
            o.large.guess_budget = b;
        }
        if let Some(b) = self.budget_nodes {
            o.large.node_budget = b;
        }
        o.compact = !self.no_compact;
        o
    }
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "aptas")]
    pub algo: Algo,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Schedule file. The certificate goes next to it (`<stem>.cert.json`) unless `--cert`
    /// is given. Without `--out`, both are printed to stdout as one JSON object.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub cert: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub instance: PathBuf,
    pub schedule: PathBuf,
    /// Certificate written by `solve`; its block bounds are re-checked.
    #[arg(long)]
    pub cert: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    pub instance: PathBuf,
    /// Largest job count accepted.
    #[arg(long, default_value_t = ORACLE_CAP)]
    pub max_jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct GenArgs {
    #[arg(long, default_value = "random", value_parser = parse_family)]
    pub family: Family,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    #[arg(long, default_value_t = 4)]
    pub m_max: u64,
    #[arg(long, default_value_t = 10)]
    pub resource_max: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl GenArgs {
    pub fn params(&self) -> GenParams {
        GenParams { m_max: self.m_max, resource_max: self.resource_max, ..GenParams::new(self.family, self.n_min, self.n_max) }
    }
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Read `*.json` instances from this directory instead of generating them.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    #[command(flatten)]
    pub gen: GenArgs,
    /// Algorithms to run (comma separated); all by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub algo: Vec<Algo>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Fill the `seconds` column with wall-clock times. Off by default so that the table
    /// only depends on the inputs.
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GanttArgs {
    pub instance: PathBuf,
    pub schedule: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub gen: GenArgs,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_eps(s: &str) -> Result<Rational, String> {
    let q = parse_rational(s).map_err(|e| e.to_string())?;
    if q <= Rational::from_integer(0.into()) || q >= Rational::from_integer(1.into()) {
        return Err(format!("epsilon must lie strictly between 0 and 1, got {s}"));
    }
    Ok(q)
}

fn parse_family(s: &str) -> Result<Family, String> {
    Family::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
        format!("unknown family {s:?} (expected one of {})", names.join(", "))
    })
}

/// Failure of a command, with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or invalid input. Exit code 2.
    #[error("{0}")]
    Input(String),
    /// A solver ran out of budget or found no horizon. Exit code 1.
    #[error("{0}")]
    Budget(String),
    /// A schedule or certificate failed its check. Exit code 1.
    #[error("{0}")]
    Rejected(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Budget(_) | CliError::Rejected(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
        }
    }
}

/// Contents of a certificate file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateFile {
    pub algo: Algo,
    #[serde(with = "rcsched::rational::serde_q")]
    pub makespan: Rational,
    #[serde(with = "rcsched::rational::serde_q")]
    pub lower_t: Rational,
    /// List-scheduling bound, for the greedy solver.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_q")]
    pub greedy_bound: Option<Rational>,
    /// Uncompacted block layout, for the approximation drivers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<Schedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<CertReport>,
}

mod opt_q {
    use rcsched::rational::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match q {
            Some(q) => s.serialize_some(&format_rational(q)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?.map(|t| parse_rational(&t).map_err(serde::de::Error::custom)).transpose()
    }
}

/// Outcome of one solver run.
pub struct Solved {
    pub schedule: Schedule,
    pub cert: CertificateFile,
}

pub fn solver_error(e: SolveError) -> CliError {
    match e {
        SolveError::Budget | SolveError::NoHorizon => CliError::Budget(e.to_string()),
        SolveError::Empty | SolveError::Simplify(_) => CliError::Input(e.to_string()),
    }
}

/// Runs `algo` on `inst`.
pub fn solve_instance(inst: &Instance, algo: Algo, eps: &Rational, opts: &SolverOptions) -> Result<Solved, CliError> {
    let lower_t = lower_bound_t(inst);
    let (result, checks) = match algo {
        Algo::Greedy => {
            let schedule = greedy(inst);
            let makespan = rcsched::model::makespan(inst, &schedule).map_err(|e| CliError::Input(e.to_string()))?;
            let cert = CertificateFile {
                algo,
                makespan,
                lower_t,
                greedy_bound: Some(greedy_bound(inst)),
                layout: None,
                certificate: None,
                checks: None,
            };
            return Ok(Solved { schedule, cert });
        }
        Algo::Aptas => solved_with_checks(aptas_with(inst, eps, opts), inst, eps)?,
        Algo::ThreeHalves => solved_with_checks(three_halves_with(inst, eps, opts), inst, eps)?,
    };
    let SolveResult { schedule, layout, certificate } = result;
    let cert = CertificateFile {
        algo,
        makespan: certificate.makespan.clone(),
        lower_t,
        greedy_bound: None,
        layout: Some(layout),
        certificate: Some(certificate),
        checks: Some(checks),
    };
    Ok(Solved { schedule, cert })
}

fn solved_with_checks(
    r: Result<SolveResult, SolveError>,
    inst: &Instance,
    eps: &Rational,
) -> Result<(SolveResult, CertReport), CliError> {
    let r = r.map_err(solver_error)?;
    let checks = certify(&r, inst, eps);
    Ok((r, checks))
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gantt(a) => cmd_gantt(a),
        Command::Generate(a) => cmd_generate(a),
    }
}

fn cert_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "schedule".into());
    out.with_file_name(format!("{stem}.cert.json"))
}

fn cmd_solve(a: &SolveArgs) -> Result<(), CliError> {
    let inst = io::read_instance(&a.instance)?;
    let solved = solve_instance(&inst, a.algo, &a.solver.eps, &a.solver.options())?;
    match &a.out {
        Some(out) => {
            io::write_json(out, &solved.schedule)?;
            io::write_json(&a.cert.clone().unwrap_or_else(|| cert_path(out)), &solved.cert)?;
        }
        None => {
            let both = serde_json::json!({ "schedule": solved.schedule, "certificate": solved.cert });
            println!("{}", serde_json::to_string_pretty(&both).expect("values serialize"));
        }
    }
    if let Some(report) = &solved.cert.checks {
        if !report.ok() {
            let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
            return Err(CliError::Rejected(format!("certificate checks failed: {}", names.join(", "))));
        }
    }
    eprintln!("{} makespan {}", a.algo.name(), rcsched::rational::Short(&solved.cert.makespan));
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), CliError> {
    let inst = io::read_instance(&a.instance)?;
    let sched = io::read_schedule(&a.schedule)?;
    let report = verify_schedule(&inst, &sched).map_err(|e| CliError::Input(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if let Some(v) = &report.first_violation {
        return Err(CliError::Rejected(format!("infeasible: {v}")));
    }
    if let Some(path) = &a.cert {
        let cert: CertificateFile = io::read_json(path)?;
        let (Some(layout), Some(certificate)) = (cert.layout, cert.certificate) else {
            if cert.makespan != report.makespan {
                return Err(CliError::Rejected("certificate makespan does not match the schedule".into()));
            }
            return Ok(());
        };
        let eps = certificate.eps.clone();
        let result = SolveResult { schedule: sched, layout, certificate };
        let checks = certify(&result, &inst, &eps);
        for c in checks.failures() {
            eprintln!("failed: {}: {}", c.name, c.detail);
        }
        if !checks.ok() {
            return Err(CliError::Rejected(format!("{} certificate checks failed", checks.failures().len())));
        }
        eprintln!("certificate: {} checks passed", checks.checks.len());
    }
    Ok(())
}

fn cmd_oracle(a: &OracleArgs) -> Result<(), CliError> {
    let inst = io::read_instance(&a.instance)?;
    let (sched, opt) = oracle_optimal_capped(&inst, a.max_jobs).map_err(|e| CliError::Budget(e.to_string()))?;
    match &a.out {
        Some(out) => io::write_json(out, &sched)?,
        None => println!("{}", serde_json::to_string_pretty(&sched).expect("schedule serializes")),
    }
    eprintln!("optimum {}", rcsched::rational::Short(&opt));
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    let named = match &a.dir {
        Some(dir) => io::read_dir_instances(dir)?,
        None => {
            let insts = corpus(&a.gen.params(), a.gen.count, a.gen.seed);
            insts
                .into_iter()
                .enumerate()
                .map(|(i, inst)| (format!("{}-{}-{i:04}", a.gen.family.name(), a.gen.seed), inst))
                .collect()
        }
    };
    let algos = if a.algo.is_empty() { vec![Algo::Greedy, Algo::Aptas, Algo::ThreeHalves] } else { a.algo.clone() };
    let cfg = bench::BenchConfig { algos, eps: a.solver.eps.clone(), opts: a.solver.options(), timing: a.timing };
    let rows = bench::run_bench(&named, &cfg);
    let csv = bench::to_csv(&rows);
    match &a.out {
        Some(out) => std::fs::write(out, &csv)?,
        None => print!("{csv}"),
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Err(CliError::Budget(format!("{failed} of {} runs failed", rows.len())));
    }
    Ok(())
}

fn cmd_gantt(a: &GanttArgs) -> Result<(), CliError> {
    let inst = io::read_instance(&a.instance)?;
    let sched = io::read_schedule(&a.schedule)?;
    let svg = gantt::render(&inst, &sched)?;
    match &a.out {
        Some(out) => std::fs::write(out, svg)?,
        None => print!("{svg}"),
    }
    Ok(())
}

fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    std::fs::create_dir_all(&a.out)?;
    for (i, inst) in corpus(&a.gen.params(), a.gen.count, a.gen.seed).iter().enumerate() {
        io::write_json(&a.out.join(format!("{}-{i:04}.json", a.gen.family.name())), inst)?;
    }
    Ok(())
}
