//! Exact rational linear programming: two-phase simplex with Bland's rule, dual values for
//! column generation, and reduction of any feasible point to a vertex.
//!
//! All variables are implicitly non-negative. An optional objective is minimized.
//!
//! # Text dump format
//!
//! [`LpModel::dump`] writes one item per line:
//!
//! ```text
//! minimize: <term> + <term> ...      (or "feasibility" without objective)
//! <row name>: <term> + ... <rel> <rational>
//! ```
//!
//! where a term is `<rational> <variable name>`, `<rel>` is one of `<=`, `=`, `>=` and
//! rationals are written `num/den` or as integers.

use crate::rational::{Rational, Short};
use num_traits::{One, Signed, Zero};
use std::fmt::Write as _;

/// Constraint sense.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn flipped(self) -> Self {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// One row `sum coeff * x (rel) rhs`, stored sparsely.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, Rational)>,
    pub rel: Relation,
    pub rhs: Rational,
}

/// A linear program over non-negative variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LpModel {
    pub names: Vec<String>,
    pub constraints: Vec<Constraint>,
    /// Minimized when present.
    pub objective: Option<Vec<(usize, Rational)>>,
}

/// Solver failures.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("the linear program is infeasible")]
    Infeasible,
    #[error("the objective is unbounded")]
    Unbounded,
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("the given point violates row {0}")]
    PointInfeasible(String),
}

impl LpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.names.push(name.into());
        self.names.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, Rational)>,
        rel: Relation,
        rhs: Rational,
    ) -> usize {
        self.constraints.push(Constraint { name: name.into(), coeffs, rel, rhs });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, coeffs: Vec<(usize, Rational)>) {
        self.objective = Some(coeffs);
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for c in &self.constraints {
            if let Some((j, _)) = c.coeffs.iter().find(|(j, _)| *j >= n) {
                return Err(LpError::Malformed(format!("row {} references variable {j}", c.name)));
            }
        }
        if let Some(obj) = &self.objective {
            if obj.iter().any(|(j, _)| *j >= n) {
                return Err(LpError::Malformed("objective references unknown variable".into()));
            }
        }
        Ok(())
    }

    /// `sum coeff * x` for one row.
    pub fn row_value(&self, row: usize, x: &[Rational]) -> Rational {
        self.constraints[row].coeffs.iter().fold(Rational::zero(), |acc, (j, a)| acc + a * &x[*j])
    }

    /// Objective value at `x` (0 without objective).
    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        match &self.objective {
            None => Rational::zero(),
            Some(obj) => obj.iter().fold(Rational::zero(), |acc, (j, c)| acc + c * &x[*j]),
        }
    }

    /// First violated row (by name), if any; also rejects negative entries.
    pub fn violation(&self, x: &[Rational]) -> Option<String> {
        if x.len() != self.num_vars() {
            return Some("dimension".into());
        }
        if let Some(j) = x.iter().position(|v| v.is_negative()) {
            return Some(format!("nonnegativity of {}", self.names[j]));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let lhs = self.row_value(i, x);
            let ok = match c.rel {
                Relation::Le => lhs <= c.rhs,
                Relation::Eq => lhs == c.rhs,
                Relation::Ge => lhs >= c.rhs,
            };
            if !ok {
                return Some(c.name.clone());
            }
        }
        None
    }

    /// Plain-text rendering (grammar in the module docs).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let term_list = |coeffs: &[(usize, Rational)]| -> String {
            if coeffs.is_empty() {
                return "0".into();
            }
            coeffs
                .iter()
                .map(|(j, a)| format!("{} {}", Short(a), self.names[*j]))
                .collect::<Vec<_>>()
                .join(" + ")
        };
        match &self.objective {
            Some(obj) => writeln!(out, "minimize: {}", term_list(obj)).unwrap(),
            None => writeln!(out, "feasibility").unwrap(),
        }
        for c in &self.constraints {
            writeln!(out, "{}: {} {} {}", c.name, term_list(&c.coeffs), c.rel.symbol(), Short(&c.rhs)).unwrap();
        }
        out
    }
}

/// A vertex of the feasible region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicSolution {
    pub values: Vec<Rational>,
    /// Structural variables that are basic (for simplex output) or in the support (for
    /// [`to_basic`] output).
    pub basis: Vec<usize>,
    pub objective: Rational,
    /// One dual value per constraint in model order (simplex output only; empty otherwise).
    pub duals: Vec<Rational>,
}

impl BasicSolution {
    /// Number of non-zero structural values.
    pub fn support(&self) -> usize {
        self.values.iter().filter(|v| !v.is_zero()).count()
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, e: usize) {
        let piv = self.rows[r][e].clone();
        if !piv.is_one() {
            let inv = piv.recip();
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
            self.rhs[r] *= &inv;
        }
        let nz: Vec<usize> = (0..self.ncols).filter(|&j| !self.rows[r][j].is_zero()).collect();
        let prow: Vec<Rational> = nz.iter().map(|&j| self.rows[r][j].clone()).collect();
        let prhs = self.rhs[r].clone();
        for k in 0..self.rows.len() {
            if k == r || self.rows[k][e].is_zero() {
                continue;
            }
            let f = self.rows[k][e].clone();
            for (idx, &j) in nz.iter().enumerate() {
                let d = &f * &prow[idx];
                self.rows[k][j] -= d;
            }
            self.rhs[k] -= &f * &prhs;
        }
        self.basis[r] = e;
    }

    fn reduced_costs(&self, cost: &[Rational], allowed: &[bool]) -> Vec<Option<Rational>> {
        (0..self.ncols)
            .map(|j| {
                if !allowed[j] {
                    return None;
                }
                let mut d = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !cost[b].is_zero() && !self.rows[i][j].is_zero() {
                        d -= &cost[b] * &self.rows[i][j];
                    }
                }
                Some(d)
            })
            .collect()
    }

    /// Bland's rule simplex on the given cost vector. Returns false when unbounded.
    fn run(&mut self, cost: &[Rational], allowed: &[bool]) -> bool {
        let basic_flag = |t: &Tableau, j: usize| t.basis.contains(&j);
        loop {
            let d = self.reduced_costs(cost, allowed);
            let entering = (0..self.ncols)
                .find(|&j| !basic_flag(self, j) && d[j].as_ref().map(|v| v.is_negative()).unwrap_or(false));
            let Some(e) = entering else { return true };
            let mut best: Option<(Rational, usize, usize)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][e];
                if a.is_positive() {
                    let ratio = &self.rhs[i] / a;
                    let better = match &best {
                        None => true,
                        Some((br, _, bb)) => ratio < *br || (ratio == *br && self.basis[i] < *bb),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            match best {
                None => return false,
                Some((_, r, _)) => self.pivot(r, e),
            }
        }
    }
}

/// Finds a vertex of the feasible region, optimal for the objective when one is set.
pub fn solve_feasible(model: &LpModel) -> Result<BasicSolution, LpError> {
    model.validate()?;
    let n = model.num_vars();
    let m = model.num_rows();
    // Column layout: structural | one slack/surplus per inequality row | one artificial per row
    // that lacks a natural unit column.
    let mut flipped = vec![false; m];
    let mut rels = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (i, c) in model.constraints.iter().enumerate() {
        if c.rhs.is_negative() {
            flipped[i] = true;
            rels.push(c.rel.flipped());
            rhs.push(-c.rhs.clone());
        } else {
            rels.push(c.rel);
            rhs.push(c.rhs.clone());
        }
    }
    let mut slack_col = vec![None; m];
    let mut next = n;
    for i in 0..m {
        if rels[i] != Relation::Eq {
            slack_col[i] = Some(next);
            next += 1;
        }
    }
    let mut art_col = vec![None; m];
    for i in 0..m {
        if rels[i] != Relation::Le {
            art_col[i] = Some(next);
            next += 1;
        }
    }
    let ncols = next;
    let mut rows = vec![vec![Rational::zero(); ncols]; m];
    let mut basis = vec![0usize; m];
    for (i, c) in model.constraints.iter().enumerate() {
        let sign = if flipped[i] { -Rational::one() } else { Rational::one() };
        for (j, a) in &c.coeffs {
            rows[i][*j] += &sign * a;
        }
        if let Some(s) = slack_col[i] {
            rows[i][s] = if rels[i] == Relation::Le { Rational::one() } else { -Rational::one() };
        }
        if let Some(a) = art_col[i] {
            rows[i][a] = Rational::one();
            basis[i] = a;
        } else {
            basis[i] = slack_col[i].expect("<= rows have a slack");
        }
    }
    // the column that formed the initial identity in each row, to read duals from
    let unit_col: Vec<usize> = basis.clone();
    let mut tab = Tableau { rows, rhs, basis, ncols };
    let is_art: Vec<bool> = (0..ncols).map(|j| art_col.contains(&Some(j))).collect();

    if is_art.iter().any(|&a| a) {
        let cost1: Vec<Rational> =
            (0..ncols).map(|j| if is_art[j] { Rational::one() } else { Rational::zero() }).collect();
        let all = vec![true; ncols];
        tab.run(&cost1, &all);
        let infeas: Rational = (0..m).filter(|&i| is_art[tab.basis[i]]).map(|i| tab.rhs[i].clone()).sum();
        if infeas.is_positive() {
            return Err(LpError::Infeasible);
        }
        // drive zero-level artificials out of the basis where possible
        for i in 0..m {
            if is_art[tab.basis[i]] {
                if let Some(j) = (0..ncols).find(|&j| !is_art[j] && !tab.rows[i][j].is_zero()) {
                    tab.pivot(i, j);
                }
            }
        }
    }

    let mut cost = vec![Rational::zero(); ncols];
    if let Some(obj) = &model.objective {
        for (j, c) in obj {
            cost[*j] += c;
        }
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| !is_art[j]).collect();
    if model.objective.is_some() && !tab.run(&cost, &allowed) {
        return Err(LpError::Unbounded);
    }

    let mut values = vec![Rational::zero(); n];
    let mut basic_struct = Vec::new();
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            values[b] = tab.rhs[i].clone();
            basic_struct.push(b);
        }
    }
    basic_struct.sort_unstable();
    let duals: Vec<Rational> = (0..m)
        .map(|i| {
            let col = unit_col[i];
            let mut y = Rational::zero();
            for (k, &b) in tab.basis.iter().enumerate() {
                if !cost[b].is_zero() && !tab.rows[k][col].is_zero() {
                    y += &cost[b] * &tab.rows[k][col];
                }
            }
            if flipped[i] {
                -y
            } else {
                y
            }
        })
        .collect();
    let objective = model.objective_value(&values);
    debug_assert!(model.violation(&values).is_none());
    debug_assert!(values.iter().filter(|v| !v.is_zero()).count() <= m);
    Ok(BasicSolution { values, basis: basic_struct, objective, duals })
}

/// A non-zero vector `d` with `A[:, cols] d = 0`, if the columns are dependent.
fn null_vector(a: &[Vec<Rational>], cols: &[usize]) -> Option<Vec<Rational>> {
    let m = a.len();
    let k = cols.len();
    let mut mat: Vec<Vec<Rational>> = (0..m).map(|i| cols.iter().map(|&j| a[i][j].clone()).collect()).collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..k {
        if r == m {
            break;
        }
        let Some(p) = (r..m).find(|&i| !mat[i][c].is_zero()) else { continue };
        mat.swap(r, p);
        let inv = mat[r][c].recip();
        for v in mat[r].iter_mut() {
            *v *= &inv;
        }
        for i in 0..m {
            if i != r && !mat[i][c].is_zero() {
                let f = mat[i][c].clone();
                for cc in 0..k {
                    if !mat[r][cc].is_zero() {
                        let d = &f * &mat[r][cc];
                        mat[i][cc] -= d;
                    }
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let free = (0..k).find(|c| !pivot_cols.contains(c))?;
    let mut d = vec![Rational::zero(); k];
    d[free] = Rational::one();
    for (row, &pc) in pivot_cols.iter().enumerate() {
        d[pc] = -mat[row][free].clone();
    }
    Some(d)
}

/// Moves a feasible point along null-space directions of its support until the support
/// columns are independent, never worsening the objective.
pub fn to_basic(model: &LpModel, point: &[Rational]) -> Result<BasicSolution, LpError> {
    model.validate()?;
    if let Some(row) = model.violation(point) {
        return Err(LpError::PointInfeasible(row));
    }
    let n = model.num_vars();
    let m = model.num_rows();
    // equality form with one slack per inequality row
    let mut ncols = n;
    let mut slack = vec![None; m];
    for (i, c) in model.constraints.iter().enumerate() {
        if c.rel != Relation::Eq {
            slack[i] = Some(ncols);
            ncols += 1;
        }
    }
    let mut a = vec![vec![Rational::zero(); ncols]; m];
    let mut z = vec![Rational::zero(); ncols];
    z[..n].clone_from_slice(point);
    for (i, c) in model.constraints.iter().enumerate() {
        for (j, v) in &c.coeffs {
            a[i][*j] += v;
        }
        if let Some(s) = slack[i] {
            let lhs = model.row_value(i, point);
            match c.rel {
                Relation::Le => {
                    a[i][s] = Rational::one();
                    z[s] = &c.rhs - lhs;
                }
                Relation::Ge => {
                    a[i][s] = -Rational::one();
                    z[s] = lhs - &c.rhs;
                }
                Relation::Eq => unreachable!(),
            }
        }
    }
    let mut cost = vec![Rational::zero(); ncols];
    if let Some(obj) = &model.objective {
        for (j, c) in obj {
            cost[*j] += c;
        }
    }
    loop {
        let support: Vec<usize> = (0..ncols).filter(|&j| !z[j].is_zero()).collect();
        let Some(mut d) = null_vector(&a, &support) else { break };
        let cd: Rational = support.iter().zip(&d).map(|(&j, dj)| &cost[j] * dj).sum();
        if cd.is_positive() || (cd.is_zero() && !d.iter().any(|v| v.is_negative())) {
            for v in d.iter_mut() {
                *v = -v.clone();
            }
        }
        let mut theta: Option<Rational> = None;
        for (idx, &j) in support.iter().enumerate() {
            if d[idx].is_negative() {
                let t = &z[j] / -d[idx].clone();
                if theta.as_ref().map(|b| &t < b).unwrap_or(true) {
                    theta = Some(t);
                }
            }
        }
        let Some(theta) = theta else { return Err(LpError::Unbounded) };
        for (idx, &j) in support.iter().enumerate() {
            z[j] += &theta * &d[idx];
            if z[j].is_negative() {
                z[j] = Rational::zero();
            }
        }
        // exact arithmetic: the blocking entries land on zero
    }
    let values: Vec<Rational> = z[..n].to_vec();
    let basis: Vec<usize> = (0..n).filter(|&j| !values[j].is_zero()).collect();
    debug_assert!(model.violation(&values).is_none());
    let objective = model.objective_value(&values);
    Ok(BasicSolution { values, basis, objective, duals: Vec::new() })
}
