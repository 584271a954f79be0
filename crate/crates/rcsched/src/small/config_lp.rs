//! Configuration LP for short jobs, solved by column generation with an exact knapsack
//! pricing step.

use super::SmallError;
use crate::lp::{solve_feasible, LpModel, Relation};
use crate::rational::{uint, Rational};
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::{BTreeMap, HashSet};

/// A rounded short-job type: all jobs sharing one rounded requirement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SmallType {
    pub r: u64,
    #[serde(with = "crate::rational::serde_q")]
    pub p: Rational,
    pub wide: bool,
}

/// A capacity box the LP may fill: a class of equal-residual segments or the extra box.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoxSpec {
    pub machines: u64,
    pub resource: u64,
    /// Upper bound on the total configuration time in this box.
    #[serde(with = "crate::rational::serde_q")]
    pub cap: Rational,
    /// Cost per unit of time in the second phase.
    #[serde(with = "crate::rational::serde_q")]
    pub weight: Rational,
}

/// Multiset of type indices, sorted, with positive multiplicities.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Configuration(pub Vec<(usize, u64)>);

impl Configuration {
    pub fn machines(&self) -> u64 {
        self.0.iter().map(|(_, a)| a).sum()
    }

    pub fn resource(&self, types: &[SmallType]) -> u64 {
        self.0.iter().map(|(j, a)| a * types[*j].r).sum()
    }

    pub fn count(&self, j: usize) -> u64 {
        self.0.iter().find(|(t, _)| *t == j).map(|(_, a)| *a).unwrap_or(0)
    }

    pub fn fits(&self, types: &[SmallType], b: &BoxSpec) -> bool {
        self.machines() <= b.machines && self.resource(types) <= b.resource
    }

    /// The part made of wide types.
    pub fn wide_part(&self, types: &[SmallType]) -> Configuration {
        Configuration(self.0.iter().filter(|(j, _)| types[*j].wide).copied().collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfigEntry {
    pub box_index: usize,
    pub config: Configuration,
    #[serde(with = "crate::rational::serde_q")]
    pub x: Rational,
}

/// Non-zero configuration times of a basic solution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfigSolution {
    pub entries: Vec<ConfigEntry>,
    /// Weighted time of the second phase.
    #[serde(with = "crate::rational::serde_q")]
    pub objective: Rational,
    pub columns: usize,
    pub iterations: usize,
}

impl ConfigSolution {
    pub fn box_time(&self, b: usize) -> Rational {
        self.entries.iter().filter(|e| e.box_index == b).map(|e| e.x.clone()).sum()
    }
}

/// Configuration of maximum total profit that fits `machines` and `resource`; types with
/// non-positive profit are never used. `None` when no positive profit is reachable.
pub fn best_configuration(
    types: &[SmallType],
    profits: &[Rational],
    machines: u64,
    resource: u64,
) -> Option<(Rational, Configuration)> {
    let items: Vec<usize> = (0..types.len()).filter(|&j| profits[j] > Rational::zero() && types[j].r <= resource).collect();
    if items.is_empty() || machines == 0 {
        return None;
    }
    // Pareto frontier over (resource used, profit) for each exact item count.
    let mut frontier: Vec<(u64, Rational, Vec<u64>)> = vec![(0, Rational::zero(), vec![0; types.len()])];
    let mut best: Option<(Rational, Vec<u64>)> = None;
    for _ in 0..machines {
        let mut next: Vec<(u64, Rational, Vec<u64>)> = Vec::new();
        for (used, profit, counts) in &frontier {
            for &j in &items {
                let u = used + types[j].r;
                if u > resource {
                    continue;
                }
                let mut c = counts.clone();
                c[j] += 1;
                next.push((u, profit + &profits[j], c));
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
        let mut kept: Vec<(u64, Rational, Vec<u64>)> = Vec::new();
        for s in next {
            if kept.last().map(|k| s.1 > k.1).unwrap_or(true) {
                kept.push(s);
            }
        }
        let top = kept.iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).expect("non-empty");
        if best.as_ref().map(|b| top.1 > b.0).unwrap_or(true) {
            best = Some((top.1.clone(), top.2.clone()));
        }
        frontier = kept;
    }
    best.map(|(v, counts)| {
        let cfg = counts.iter().enumerate().filter(|(_, &a)| a > 0).map(|(j, &a)| (j, a)).collect();
        (v, Configuration(cfg))
    })
}

struct Master {
    model: LpModel,
    cover_rows: Vec<usize>,
    cap_rows: Vec<usize>,
    columns: Vec<(usize, Configuration)>,
    artificial: usize,
}

fn build_master(types: &[SmallType], boxes: &[BoxSpec], columns: &[(usize, Configuration)], phase_one: bool) -> Master {
    let mut model = LpModel::new();
    for (b, c) in columns {
        model.add_var(format!("x_{b}_{:?}", c.0));
    }
    let artificial = model.num_vars();
    if phase_one {
        for j in 0..types.len() {
            model.add_var(format!("a_{j}"));
        }
    }
    let mut cover_rows = Vec::new();
    for (j, t) in types.iter().enumerate() {
        let mut row: Vec<(usize, Rational)> = columns
            .iter()
            .enumerate()
            .filter_map(|(v, (_, c))| {
                let a = c.count(j);
                (a > 0).then(|| (v, uint(a)))
            })
            .collect();
        if phase_one {
            row.push((artificial + j, Rational::one()));
        }
        cover_rows.push(model.add_constraint(format!("cover_{j}"), row, Relation::Eq, t.p.clone()));
    }
    let mut cap_rows = Vec::new();
    for (b, spec) in boxes.iter().enumerate() {
        let row = columns
            .iter()
            .enumerate()
            .filter(|(_, (cb, _))| *cb == b)
            .map(|(v, _)| (v, Rational::one()))
            .collect();
        cap_rows.push(model.add_constraint(format!("cap_{b}"), row, Relation::Le, spec.cap.clone()));
    }
    let objective = if phase_one {
        (0..types.len()).map(|j| (artificial + j, Rational::one())).collect()
    } else {
        columns.iter().enumerate().map(|(v, (b, _))| (v, boxes[*b].weight.clone())).collect()
    };
    model.set_objective(objective);
    Master { model, cover_rows, cap_rows, columns: columns.to_vec(), artificial }
}

const MAX_ROUNDS: usize = 5_000;

/// Column generation over both phases. Fails with [`SmallError::Infeasible`] when the
/// types cannot be covered within the box caps.
pub fn solve_config_lp(types: &[SmallType], boxes: &[BoxSpec]) -> Result<ConfigSolution, SmallError> {
    let mut columns: Vec<(usize, Configuration)> = Vec::new();
    let mut known: HashSet<(usize, Configuration)> = HashSet::new();
    let mut iterations = 0;
    for phase_one in [true, false] {
        loop {
            iterations += 1;
            if iterations > MAX_ROUNDS {
                return Err(SmallError::IterationLimit);
            }
            let master = build_master(types, boxes, &columns, phase_one);
            let sol = solve_feasible(&master.model)?;
            if phase_one && sol.objective.is_zero() {
                break;
            }
            let y: Vec<Rational> = master.cover_rows.iter().map(|&r| sol.duals[r].clone()).collect();
            let mut pricing: BTreeMap<(u64, u64), Option<(Rational, Configuration)>> = BTreeMap::new();
            let mut added = false;
            for (b, spec) in boxes.iter().enumerate() {
                let best = pricing
                    .entry((spec.machines, spec.resource))
                    .or_insert_with(|| best_configuration(types, &y, spec.machines, spec.resource));
                let Some((value, cfg)) = best else { continue };
                let cost = if phase_one { Rational::zero() } else { spec.weight.clone() };
                let reduced = cost - &*value - &sol.duals[master.cap_rows[b]];
                if reduced < Rational::zero() && known.insert((b, cfg.clone())) {
                    columns.push((b, cfg.clone()));
                    added = true;
                }
            }
            if !added {
                if phase_one {
                    // optimal with uncovered work left
                    debug_assert!(sol.values[master.artificial..].iter().any(|v| !v.is_zero()));
                    return Err(SmallError::Infeasible);
                }
                return Ok(extract(&master, &sol.values, sol.objective, columns.len(), iterations));
            }
        }
    }
    unreachable!("the second phase returns")
}

fn extract(master: &Master, values: &[Rational], objective: Rational, columns: usize, iterations: usize) -> ConfigSolution {
    let entries = master
        .columns
        .iter()
        .zip(values)
        .filter(|(_, x)| !x.is_zero())
        .map(|((b, c), x)| ConfigEntry { box_index: *b, config: c.clone(), x: x.clone() })
        .collect();
    ConfigSolution { entries, objective, columns, iterations }
}

/// All non-empty configurations fitting `machines` and `resource`.
pub fn all_configurations(types: &[SmallType], machines: u64, resource: u64) -> Vec<Configuration> {
    fn rec(types: &[SmallType], j: usize, left_m: u64, left_r: u64, cur: &mut Vec<(usize, u64)>, out: &mut Vec<Configuration>) {
        if j == types.len() {
            if !cur.is_empty() {
                out.push(Configuration(cur.clone()));
            }
            return;
        }
        rec(types, j + 1, left_m, left_r, cur, out);
        let mut a = 1;
        while a <= left_m && a * types[j].r <= left_r {
            cur.push((j, a));
            rec(types, j + 1, left_m - a, left_r - a * types[j].r, cur, out);
            cur.pop();
            a += 1;
        }
    }
    let mut out = Vec::new();
    rec(types, 0, machines, resource, &mut Vec::new(), &mut out);
    out
}

/// Same LP with every configuration listed up front; only practical for a handful of types.
pub fn solve_config_lp_enumerated(types: &[SmallType], boxes: &[BoxSpec]) -> Result<ConfigSolution, SmallError> {
    let columns: Vec<(usize, Configuration)> = boxes
        .iter()
        .enumerate()
        .flat_map(|(b, spec)| all_configurations(types, spec.machines, spec.resource).into_iter().map(move |c| (b, c)))
        .collect();
    let phase1 = build_master(types, boxes, &columns, true);
    let s1 = solve_feasible(&phase1.model)?;
    if !s1.objective.is_zero() {
        return Err(SmallError::Infeasible);
    }
    let phase2 = build_master(types, boxes, &columns, false);
    let s2 = solve_feasible(&phase2.model)?;
    Ok(extract(&phase2, &s2.values, s2.objective, columns.len(), 1))
}

/// Checks coverage, caps and configuration validity exactly.
pub fn check_config_solution(types: &[SmallType], boxes: &[BoxSpec], sol: &ConfigSolution) -> Result<(), String> {
    for e in &sol.entries {
        if !e.config.fits(types, &boxes[e.box_index]) {
            return Err(format!("configuration {:?} exceeds box {}", e.config.0, e.box_index));
        }
        if e.x < Rational::zero() {
            return Err("negative time".into());
        }
    }
    for (j, t) in types.iter().enumerate() {
        let covered: Rational = sol.entries.iter().map(|e| uint(e.config.count(j)) * &e.x).sum();
        if covered != t.p {
            return Err(format!("type {j} covered {covered} of {}", t.p));
        }
    }
    for (b, spec) in boxes.iter().enumerate() {
        if sol.box_time(b) > spec.cap {
            return Err(format!("box {b} over its cap"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn ty(r: u64, p: Rational) -> SmallType {
        SmallType { r, p, wide: false }
    }

    fn bx(machines: u64, resource: u64, cap: Rational) -> BoxSpec {
        BoxSpec { machines, resource, cap, weight: int(1) }
    }

    #[test]
    fn knapsack_respects_both_limits() {
        let types = vec![ty(3, int(1)), ty(2, int(1)), ty(0, int(1))];
        let profits = vec![int(5), int(3), int(1)];
        let (v, c) = best_configuration(&types, &profits, 2, 5).unwrap();
        assert_eq!(v, int(8));
        assert_eq!(c, Configuration(vec![(0, 1), (1, 1)]));
        let (v, c) = best_configuration(&types, &profits, 3, 4).unwrap();
        // ties with {1: 2, 2: 1}; the cheaper one in resource wins
        assert_eq!(v, int(7));
        assert_eq!(c, Configuration(vec![(0, 1), (2, 2)]));
        assert!(best_configuration(&types, &[int(0), int(-1), int(0)], 3, 4).is_none());
    }

    #[test]
    fn single_type_single_box() {
        let types = vec![ty(1, rat(3, 2))];
        let boxes = vec![bx(1, 2, int(2))];
        let sol = solve_config_lp(&types, &boxes).unwrap();
        assert_eq!(sol.entries.len(), 1);
        assert_eq!(sol.entries[0].x, rat(3, 2));
        check_config_solution(&types, &boxes, &sol).unwrap();
    }

    #[test]
    fn full_width_types_are_singletons() {
        let types = vec![ty(4, int(1)), ty(4, int(2))];
        let boxes = vec![bx(3, 4, int(5))];
        let sol = solve_config_lp(&types, &boxes).unwrap();
        for e in &sol.entries {
            assert_eq!(e.config.machines(), 1);
        }
        assert_eq!(sol.objective, int(3));
    }

    #[test]
    fn infeasible_when_caps_too_small() {
        let types = vec![ty(4, int(3))];
        let boxes = vec![bx(3, 4, int(2))];
        assert_eq!(solve_config_lp(&types, &boxes), Err(SmallError::Infeasible));
        assert_eq!(solve_config_lp_enumerated(&types, &boxes), Err(SmallError::Infeasible));
    }

    #[test]
    fn matches_enumeration_on_mixed_instance() {
        let types = vec![ty(1, int(2)), ty(2, int(3)), ty(3, rat(1, 2))];
        let boxes = vec![
            BoxSpec { machines: 2, resource: 3, cap: int(3), weight: int(1) },
            BoxSpec { machines: 3, resource: 5, cap: int(2), weight: int(2) },
        ];
        let cg = solve_config_lp(&types, &boxes).unwrap();
        let en = solve_config_lp_enumerated(&types, &boxes).unwrap();
        assert_eq!(cg.objective, en.objective);
        check_config_solution(&types, &boxes, &cg).unwrap();
    }
}
