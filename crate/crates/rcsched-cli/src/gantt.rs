//! Static SVG Gantt chart: time runs right, resource units stack upwards.
//!
//! Jobs are taken in order of start time (ties by id) and receive the lowest resource units
//! and the lowest machine that are free at their start. A job whose units are not contiguous
//! is drawn as several rectangles.

use crate::CliError;
use rcsched::model::{verify_schedule, Instance, Job, Schedule};
use rcsched::rational::{to_f64, Rational, Short};
use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 50.0;
const TOP: f64 = 40.0;

const PALETTE: [&str; 10] =
    ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"];

/// One drawn job: machine lane and maximal runs of consecutive resource units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placed {
    pub id: u64,
    pub machine: u64,
    pub runs: Vec<(u64, u64)>,
}

/// Assigns machines and resource units. `sched` must be feasible.
pub fn assign(inst: &Instance, sched: &Schedule) -> Vec<Placed> {
    let mut jobs: Vec<(&Rational, &Job)> = inst.jobs.iter().map(|j| (&sched.starts[&j.id], j)).collect();
    jobs.sort_by(|a, b| a.0.cmp(b.0).then(a.1.id.cmp(&b.1.id)));
    let zero = Rational::from_integer(0.into());
    let mut unit_free: Vec<Rational> = vec![zero.clone(); inst.resource as usize];
    let mut machine_free: Vec<Rational> = vec![zero; inst.m as usize];
    let mut out = Vec::with_capacity(jobs.len());
    for (s, j) in jobs {
        let end = s + &j.p;
        let machine = machine_free.iter().position(|f| f <= s).expect("feasible schedule has a free machine");
        machine_free[machine] = end.clone();
        let mut units = Vec::with_capacity(j.r as usize);
        for (u, f) in unit_free.iter_mut().enumerate() {
            if units.len() as u64 == j.r {
                break;
            }
            if &*f <= s {
                *f = end.clone();
                units.push(u as u64);
            }
        }
        assert_eq!(units.len() as u64, j.r, "feasible schedule has free resource units");
        let mut runs: Vec<(u64, u64)> = Vec::new();
        for u in units {
            match runs.last_mut() {
                Some((a, len)) if *a + *len == u => *len += 1,
                _ => runs.push((u, 1)),
            }
        }
        out.push(Placed { id: j.id, machine: machine as u64, runs });
    }
    out
}

/// Renders `sched`, or refuses with the verifier's message when it is infeasible.
pub fn render(inst: &Instance, sched: &Schedule) -> Result<String, CliError> {
    let report = verify_schedule(inst, sched).map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(v) = &report.first_violation {
        return Err(CliError::Input(format!("refusing to draw an infeasible schedule: {v}")));
    }
    let span = to_f64(&report.makespan).max(f64::MIN_POSITIVE);
    let sx = WIDTH / span;
    let sy = HEIGHT / inst.resource as f64;
    let base = TOP + HEIGHT;
    let peak = peak_machines(inst, sched);

    let mut svg = String::new();
    let (w, h) = (LEFT + WIDTH + 20.0, TOP + HEIGHT + 40.0);
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#);
    let _ = writeln!(
        svg,
        r#"<text x="{LEFT}" y="20" font-family="sans-serif" font-size="13">m={} R={} makespan={} machines in use at most {}/{}</text>"#,
        inst.m,
        inst.resource,
        Short(&report.makespan),
        peak,
        inst.m
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{WIDTH}" height="{HEIGHT}" fill="none" stroke="#333" stroke-width="1"/>"##
    );
    let map = inst.job_map();
    for p in assign(inst, sched) {
        let j = map[&p.id];
        let x = LEFT + to_f64(&sched.starts[&p.id]) * sx;
        let wd = to_f64(&j.p) * sx;
        let color = PALETTE[(p.id % PALETTE.len() as u64) as usize];
        for (k, &(u, len)) in p.runs.iter().enumerate() {
            let y = base - (u + len) as f64 * sy;
            let hh = len as f64 * sy;
            let _ = writeln!(
                svg,
                r##"<rect x="{x:.2}" y="{y:.2}" width="{wd:.2}" height="{hh:.2}" fill="{color}" stroke="#222" stroke-width="0.5"><title>job {} p={} r={} machine {}</title></rect>"##,
                p.id,
                Short(&j.p),
                j.r,
                p.machine
            );
            if k == 0 && wd > 24.0 && hh > 11.0 {
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10">{} m{}</text>"#,
                    x + 2.0,
                    y + 10.0,
                    p.id,
                    p.machine
                );
            }
        }
    }
    let _ = writeln!(svg, r#"<text x="{LEFT}" y="{:.0}" font-family="sans-serif" font-size="11">0</text>"#, base + 15.0);
    let _ = writeln!(
        svg,
        r#"<text x="{:.0}" y="{:.0}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
        LEFT + WIDTH,
        base + 15.0,
        Short(&report.makespan)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.0}" y="{:.0}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
        LEFT - 4.0,
        TOP + 10.0,
        inst.resource
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn peak_machines(inst: &Instance, sched: &Schedule) -> usize {
    inst.jobs
        .iter()
        .map(|a| {
            let t = &sched.starts[&a.id];
            inst.jobs.iter().filter(|b| &sched.starts[&b.id] <= t && t < &(&sched.starts[&b.id] + &b.p)).count()
        })
        .max()
        .unwrap_or(0)
}
