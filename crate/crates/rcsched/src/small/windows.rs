//! Windows: capacity reserved for narrow short jobs next to the wide part of a configuration.
//!
//! A solution of the configuration LP is folded into generalized configurations (wide part
//! plus window) and narrow loads per window. The reduction then caps the number of distinct
//! windows per box by stacking windows of equal machine count and shifting their loads one
//! segment down, the bottom segment going to a separate end window with full capacity.

use super::config_lp::{BoxSpec, ConfigSolution, Configuration, SmallType};
use super::SmallError;
use crate::lp::{to_basic, LpModel, Relation};
use crate::rational::{inverse_integer, uint, Rational};
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

/// Capacity pair `(resource, machines)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Window {
    pub machines: u64,
    pub resource: u64,
}

impl Window {
    pub fn fits_in(&self, other: &Window) -> bool {
        self.machines <= other.machines && self.resource <= other.resource
    }
}

/// Where a window lives: one of the boxes, or the end window with full capacity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Place {
    Box(usize),
    End,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenEntry {
    pub box_index: usize,
    pub wide: Configuration,
    pub window: Window,
    #[serde(with = "crate::rational::serde_q")]
    pub x: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NarrowLoad {
    pub place: Place,
    pub window: Window,
    pub type_index: usize,
    #[serde(with = "crate::rational::serde_q")]
    pub y: Rational,
}

/// Generalized configurations and narrow loads.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenConfigSolution {
    pub entries: Vec<GenEntry>,
    pub loads: Vec<NarrowLoad>,
    /// Length of the end window.
    #[serde(with = "crate::rational::serde_q")]
    pub end_x: Rational,
}

impl GenConfigSolution {
    pub fn box_time(&self, b: usize) -> Rational {
        self.entries.iter().filter(|e| e.box_index == b).map(|e| e.x.clone()).sum()
    }

    /// Time of all boxes plus the end window.
    pub fn total_time(&self) -> Rational {
        self.entries.iter().map(|e| e.x.clone()).sum::<Rational>() + &self.end_x
    }

    /// Number of non-zero variables.
    pub fn support(&self) -> usize {
        self.entries.iter().filter(|e| !e.x.is_zero()).count()
            + self.loads.iter().filter(|l| !l.y.is_zero()).count()
            + usize::from(!self.end_x.is_zero())
    }

    /// Total configuration time behind a window.
    pub fn window_time(&self, place: Place, w: &Window) -> Rational {
        match place {
            Place::End => self.end_x.clone(),
            Place::Box(b) => {
                self.entries.iter().filter(|e| e.box_index == b && &e.window == w).map(|e| e.x.clone()).sum()
            }
        }
    }

    fn normalize(&mut self) {
        let mut xs: BTreeMap<(usize, Configuration, Window), Rational> = BTreeMap::new();
        for e in self.entries.drain(..) {
            *xs.entry((e.box_index, e.wide, e.window)).or_insert_with(Rational::zero) += e.x;
        }
        self.entries = xs
            .into_iter()
            .filter(|(_, x)| !x.is_zero())
            .map(|((box_index, wide, window), x)| GenEntry { box_index, wide, window, x })
            .collect();
        let mut ys: BTreeMap<(Place, Window, usize), Rational> = BTreeMap::new();
        for l in self.loads.drain(..) {
            *ys.entry((l.place, l.window, l.type_index)).or_insert_with(Rational::zero) += l.y;
        }
        self.loads = ys
            .into_iter()
            .filter(|(_, y)| !y.is_zero())
            .map(|((place, window, type_index), y)| NarrowLoad { place, window, type_index, y })
            .collect();
    }
}

/// The full capacity window of the end block.
pub fn end_window(m: u64, resource: u64) -> Window {
    Window { machines: m, resource }
}

fn main_window(types: &[SmallType], b: &BoxSpec, wide: &Configuration) -> Window {
    Window { machines: b.machines - wide.machines(), resource: b.resource - wide.resource(types) }
}

/// Folds each configuration into its wide part with the main window, moving the narrow
/// part into loads of that window.
pub fn to_window_solution(types: &[SmallType], boxes: &[BoxSpec], sol: &ConfigSolution) -> GenConfigSolution {
    let mut out = GenConfigSolution { entries: Vec::new(), loads: Vec::new(), end_x: Rational::zero() };
    for e in &sol.entries {
        let wide = e.config.wide_part(types);
        let window = main_window(types, &boxes[e.box_index], &wide);
        out.entries.push(GenEntry { box_index: e.box_index, wide, window, x: e.x.clone() });
        for &(j, a) in &e.config.0 {
            if !types[j].wide {
                out.loads.push(NarrowLoad { place: Place::Box(e.box_index), window, type_index: j, y: uint(a) * &e.x });
            }
        }
    }
    out.normalize();
    out
}

/// Checks the window LP constraints and the box caps exactly.
pub fn check_window_solution(
    types: &[SmallType],
    boxes: &[BoxSpec],
    sol: &GenConfigSolution,
    m: u64,
    resource: u64,
) -> Result<(), String> {
    for (j, t) in types.iter().enumerate() {
        let covered: Rational = if t.wide {
            sol.entries.iter().map(|e| uint(e.wide.count(j)) * &e.x).sum()
        } else {
            sol.loads.iter().filter(|l| l.type_index == j).map(|l| l.y.clone()).sum()
        };
        if covered != t.p {
            return Err(format!("type {j} covered {covered} of {}", t.p));
        }
    }
    for e in &sol.entries {
        let b = &boxes[e.box_index];
        if e.wide.machines() > b.machines || e.wide.resource(types) > b.resource {
            return Err(format!("wide part exceeds box {}", e.box_index));
        }
        if !e.window.fits_in(&main_window(types, b, &e.wide)) {
            return Err(format!("window {:?} exceeds the main window in box {}", e.window, e.box_index));
        }
    }
    let mut windows: BTreeMap<(Place, Window), (Rational, Rational)> = BTreeMap::new();
    for l in &sol.loads {
        let acc = windows.entry((l.place, l.window)).or_insert_with(|| (Rational::zero(), Rational::zero()));
        acc.0 += &l.y;
        acc.1 += uint(types[l.type_index].r) * &l.y;
    }
    for ((place, w), (load, rload)) in windows {
        let w = if place == Place::End { end_window(m, resource) } else { w };
        let x = sol.window_time(place, &w);
        if uint(w.machines) * &x < load || uint(w.resource) * &x < rload {
            return Err(format!("window {w:?} in {place:?} is overloaded"));
        }
    }
    for (b, spec) in boxes.iter().enumerate() {
        if sol.box_time(b) > spec.cap {
            return Err(format!("box {b} exceeds its cap"));
        }
    }
    Ok(())
}

/// Diagnostics of [`reduce_windows`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReduceReport {
    pub support_before: usize,
    pub support_after: usize,
    #[serde(with = "crate::rational::serde_q")]
    pub time_before: Rational,
    #[serde(with = "crate::rational::serde_q")]
    pub time_after: Rational,
}

/// Reduces the number of windows per box and returns a vertex of the window LP.
pub fn reduce_windows(
    types: &[SmallType],
    boxes: &[BoxSpec],
    sol: &GenConfigSolution,
    eps: &Rational,
    m: u64,
    resource: u64,
) -> Result<(GenConfigSolution, ReduceReport), SmallError> {
    let k = inverse_integer(eps).expect("1/eps is an integer");
    let mut out = GenConfigSolution { entries: Vec::new(), loads: Vec::new(), end_x: sol.end_x.clone() };
    let end = end_window(m, resource);
    let mut moved_to_end: Vec<NarrowLoad> = Vec::new();

    let mut load_of: BTreeMap<(Place, Window), Vec<&NarrowLoad>> = BTreeMap::new();
    for l in &sol.loads {
        load_of.entry((l.place, l.window)).or_default().push(l);
    }
    // loads already sitting in the end window stay there
    for l in sol.loads.iter().filter(|l| l.place == Place::End) {
        out.loads.push(l.clone());
    }

    for b in 0..boxes.len() {
        let mut by_machines: BTreeMap<u64, Vec<&super::windows::GenEntry>> = BTreeMap::new();
        for e in sol.entries.iter().filter(|e| e.box_index == b) {
            by_machines.entry(e.window.machines).or_default().push(e);
        }
        for (_, mut group) in by_machines {
            let distinct: std::collections::BTreeSet<Window> = group.iter().map(|e| e.window).collect();
            if distinct.len() <= 1 {
                for e in &group {
                    out.entries.push((*e).clone());
                }
                for w in distinct {
                    if let Some(ls) = load_of.get(&(Place::Box(b), w)) {
                        out.loads.extend(ls.iter().map(|l| (*l).clone()));
                    }
                }
                continue;
            }
            // widest window at the bottom of the stack
            group.sort_by(|a, c| c.window.resource.cmp(&a.window.resource).then(a.wide.cmp(&c.wide)));
            let height: Rational = group.iter().map(|e| e.x.clone()).sum();
            let seg = &height / uint(k);
            // cut into pieces (entry, amount, segment)
            let mut pieces: Vec<(usize, Rational, u64)> = Vec::new();
            let mut bottom = Rational::zero();
            for (idx, e) in group.iter().enumerate() {
                let mut rest = e.x.clone();
                while !rest.is_zero() {
                    let s = (&bottom / &seg).floor().to_integer();
                    let s: u64 = s.try_into().unwrap_or(k - 1).min(k - 1);
                    let seg_top = if s == k - 1 { height.clone() } else { uint(s + 1) * &seg };
                    let take = (&seg_top - &bottom).min(rest.clone());
                    pieces.push((idx, take.clone(), s));
                    bottom += &take;
                    rest -= take;
                }
            }
            let mut narrowest: BTreeMap<u64, Window> = BTreeMap::new();
            for (idx, _, s) in &pieces {
                let w = group[*idx].window;
                narrowest.entry(*s).and_modify(|n| {
                    if w.resource < n.resource {
                        *n = w
                    }
                }).or_insert(w);
            }
            for (idx, amount, s) in &pieces {
                let e = group[*idx];
                out.entries.push(GenEntry { box_index: b, wide: e.wide.clone(), window: narrowest[s], x: amount.clone() });
                let window_x = sol.window_time(Place::Box(b), &e.window);
                let share = amount / &window_x;
                let (place, target) = if *s == 0 { (Place::End, end) } else { (Place::Box(b), narrowest[&(s - 1)]) };
                for l in load_of.get(&(Place::Box(b), e.window)).into_iter().flatten() {
                    let moved = NarrowLoad { place, window: target, type_index: l.type_index, y: &l.y * &share };
                    if place == Place::End {
                        moved_to_end.push(moved);
                    } else {
                        out.loads.push(moved);
                    }
                }
            }
        }
    }
    if !moved_to_end.is_empty() {
        let load: Rational = moved_to_end.iter().map(|l| l.y.clone()).sum();
        let rload: Rational = moved_to_end.iter().map(|l| uint(types[l.type_index].r) * &l.y).sum();
        out.end_x += (load / uint(m)).max(rload / uint(resource));
        out.loads.extend(moved_to_end);
    }
    out.normalize();
    // loads moved into a box window from a window used by several entries may refer to
    // the same target; normalization merged them
    debug_assert!(check_window_solution(types, boxes, &out, m, resource).is_ok());
    let time_mid = out.total_time();
    let reduced = vertex(types, boxes, &out, m, resource)?;
    let report = ReduceReport {
        support_before: sol.support(),
        support_after: reduced.support(),
        time_before: sol.total_time(),
        time_after: reduced.total_time(),
    };
    debug_assert!(reduced.total_time() <= time_mid);
    Ok((reduced, report))
}

/// Moves the solution to a vertex of the window LP restricted to its current support,
/// without increasing total time.
pub fn vertex(
    types: &[SmallType],
    boxes: &[BoxSpec],
    sol: &GenConfigSolution,
    m: u64,
    resource: u64,
) -> Result<GenConfigSolution, SmallError> {
    let mut model = LpModel::new();
    let mut point = Vec::new();
    let mut objective = Vec::new();
    let xs: Vec<usize> = sol
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let v = model.add_var(format!("x{i}"));
            point.push(e.x.clone());
            objective.push((v, Rational::one()));
            v
        })
        .collect();
    let end_var = model.add_var("x_end");
    point.push(sol.end_x.clone());
    objective.push((end_var, Rational::one()));
    let ys: Vec<usize> = sol
        .loads
        .iter()
        .enumerate()
        .map(|(i, l)| {
            point.push(l.y.clone());
            model.add_var(format!("y{i}"))
        })
        .collect();
    for (j, t) in types.iter().enumerate() {
        let row: Vec<(usize, Rational)> = if t.wide {
            sol.entries
                .iter()
                .zip(&xs)
                .filter_map(|(e, &v)| {
                    let a = e.wide.count(j);
                    (a > 0).then(|| (v, uint(a)))
                })
                .collect()
        } else {
            sol.loads.iter().zip(&ys).filter(|(l, _)| l.type_index == j).map(|(_, &v)| (v, Rational::one())).collect()
        };
        model.add_constraint(format!("cover_{j}"), row, Relation::Eq, t.p.clone());
    }
    let mut windows: Vec<(Place, Window)> = sol.loads.iter().map(|l| (l.place, l.window)).collect();
    windows.sort();
    windows.dedup();
    for (place, w) in windows {
        let (cap_vars, cap_w): (Vec<usize>, Window) = match place {
            Place::End => (vec![end_var], end_window(m, resource)),
            Place::Box(b) => (
                sol.entries.iter().zip(&xs).filter(|(e, _)| e.box_index == b && e.window == w).map(|(_, &v)| v).collect(),
                w,
            ),
        };
        let mut mrow: Vec<(usize, Rational)> = cap_vars.iter().map(|&v| (v, uint(cap_w.machines))).collect();
        let mut rrow: Vec<(usize, Rational)> = cap_vars.iter().map(|&v| (v, uint(cap_w.resource))).collect();
        for (l, &v) in sol.loads.iter().zip(&ys) {
            if l.place == place && l.window == w {
                mrow.push((v, -Rational::one()));
                rrow.push((v, -uint(types[l.type_index].r)));
            }
        }
        model.add_constraint(format!("wm_{place:?}_{w:?}"), mrow, Relation::Ge, Rational::zero());
        model.add_constraint(format!("wr_{place:?}_{w:?}"), rrow, Relation::Ge, Rational::zero());
    }
    for (b, spec) in boxes.iter().enumerate() {
        let row: Vec<(usize, Rational)> = sol
            .entries
            .iter()
            .zip(&xs)
            .filter(|(e, _)| e.box_index == b)
            .map(|(_, &v)| (v, Rational::one()))
            .collect();
        if !row.is_empty() {
            model.add_constraint(format!("cap_{b}"), row, Relation::Le, spec.cap.clone());
        }
    }
    model.set_objective(objective);
    let basic = to_basic(&model, &point)?;
    let mut out = sol.clone();
    for (e, &v) in out.entries.iter_mut().zip(&xs) {
        e.x = basic.values[v].clone();
    }
    out.end_x = basic.values[end_var].clone();
    for (l, &v) in out.loads.iter_mut().zip(&ys) {
        l.y = basic.values[v].clone();
    }
    out.normalize();
    Ok(out)
}
