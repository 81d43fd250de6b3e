//! Minimum-norm quadratic program with half-plane constraints and an
//! infinity-norm box:
//!
//! ```text
//! minimize ||u||^2  s.t.  a_i . u >= b_i,  |u_j| <= M
//! ```
//!
//! The problem is tiny (at most three decision variables), so the solver
//! enumerates KKT candidates exactly: the optimum of a strictly convex QP is
//! the minimum-norm point of the affine set cut out by some linearly
//! independent subset of its active constraints, and there are at most
//! `sum_{k <= m} C(n, k)` such subsets. The feasible candidate of least norm
//! is the global optimum.
//!
//! [`oracle_grid`] is an independent brute-force check used in tests.

use crate::error::{ensure_finite, Error, Result};

/// One linear inequality `a . u >= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfplaneConstraint {
    pub a: Vec<f64>,
    pub b: f64,
    pub label: String,
}

impl HalfplaneConstraint {
    pub fn new(a: Vec<f64>, b: f64, label: impl Into<String>) -> Self {
        Self { a, b, label: label.into() }
    }

    /// `a . u - b`; nonnegative when satisfied.
    pub fn residual(&self, u: &[f64]) -> f64 {
        dot(&self.a, u) - self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub constraints: Vec<HalfplaneConstraint>,
    /// Box half-width `M` in `||u||_inf <= M`.
    pub bound: f64,
    pub dim: usize,
}

impl QpProblem {
    pub fn new(dim: usize, bound: f64) -> Self {
        Self { constraints: Vec::new(), bound, dim }
    }

    pub fn with(mut self, c: HalfplaneConstraint) -> Self {
        self.constraints.push(c);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::Config(format!("QP dimension must be 1, 2 or 3, got {}", self.dim)));
        }
        if !self.bound.is_finite() || self.bound <= 0.0 {
            if self.bound.is_nan() {
                return Err(Error::Numerical("QP box bound is NaN".into()));
            }
            return Err(Error::Config(format!("QP box bound must be positive, got {}", self.bound)));
        }
        for c in &self.constraints {
            if c.a.len() != self.dim {
                return Err(Error::Config(format!(
                    "constraint `{}` has normal of length {}, expected {}",
                    c.label,
                    c.a.len(),
                    self.dim
                )));
            }
            ensure_finite("constraint normal", &c.a)?;
            ensure_finite("constraint offset", &[c.b])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub u: Vec<f64>,
    /// Labels of constraints tight at `u`, box faces included.
    pub active_set: Vec<String>,
    pub objective: f64,
}

/// Tolerances used by the solver; fixed for reproducibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Minimum allowed residual `a . u - b` for a candidate.
    pub feasibility: f64,
    /// Allowed excess of `|u_j|` over `M` before clamping.
    pub box_slack: f64,
    /// Norm differences below this count as ties.
    pub tie: f64,
    /// Relative Gram determinant below which a subset is treated as dependent.
    pub singular: f64,
}

pub const TOLERANCES: Tolerances =
    Tolerances { feasibility: 1e-9, box_slack: 1e-12, tie: 1e-12, singular: 1e-12 };

type Row = ([f64; 3], f64);

/// User rows followed by the `2 m` box faces `+-e_j . u >= -M`.
fn rows(p: &QpProblem) -> Vec<Row> {
    let mut out = Vec::with_capacity(p.constraints.len() + 2 * p.dim);
    for c in &p.constraints {
        let mut a = [0.0; 3];
        a[..p.dim].copy_from_slice(&c.a);
        out.push((a, c.b));
    }
    for j in 0..p.dim {
        let mut e = [0.0; 3];
        e[j] = 1.0;
        out.push((e, -p.bound));
        e[j] = -1.0;
        out.push((e, -p.bound));
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimum-norm point of `{u : a_i . u = b_i, i in subset}`, i.e.
/// `A^T (A A^T)^{-1} b`. `None` when the normals are (nearly) dependent.
fn affine_min_norm(rows: &[Row], subset: &[usize], dim: usize) -> Option<[f64; 3]> {
    let k = subset.len();
    let mut gram = [[0.0; 4]; 3];
    for (r, &i) in subset.iter().enumerate() {
        for (c, &j) in subset.iter().enumerate() {
            gram[r][c] = dot(&rows[i].0[..dim], &rows[j].0[..dim]);
        }
        gram[r][3] = rows[i].1;
    }
    let diag: f64 = (0..k).map(|r| gram[r][r]).product();
    if diag == 0.0 {
        return None;
    }
    // Gaussian elimination with partial pivoting on the augmented k x (k+1) system.
    let mut det = 1.0;
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&a, &b| gram[a][col].abs().total_cmp(&gram[b][col].abs()))
            .unwrap();
        if gram[piv][col] == 0.0 {
            return None;
        }
        gram.swap(col, piv);
        det *= gram[col][col];
        let pivot = gram[col];
        for row in &mut gram[col + 1..k] {
            let f = row[col] / pivot[col];
            for (dst, src) in row[col..].iter_mut().zip(&pivot[col..]) {
                *dst -= f * src;
            }
        }
    }
    if det.abs() <= TOLERANCES.singular * diag {
        return None;
    }
    let mut lambda = [0.0; 3];
    for r in (0..k).rev() {
        let mut s = gram[r][3];
        for c in r + 1..k {
            s -= gram[r][c] * lambda[c];
        }
        lambda[r] = s / gram[r][r];
    }
    let mut u = [0.0; 3];
    for (r, &i) in subset.iter().enumerate() {
        for (j, uj) in u.iter_mut().enumerate().take(dim) {
            *uj += lambda[r] * rows[i].0[j];
        }
    }
    Some(u)
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn feasible(p: &QpProblem, u: &[f64]) -> bool {
    u.iter().all(|x| x.abs() <= p.bound + TOLERANCES.box_slack)
        && p.constraints.iter().all(|c| c.residual(u) >= -TOLERANCES.feasibility)
}

/// `true` when `a` should replace the incumbent `b`.
fn better(a: &[f64], na: f64, b: &[f64], nb: f64) -> bool {
    if (na - nb).abs() <= TOLERANCES.tie {
        a.iter().zip(b).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y)
    } else {
        na < nb
    }
}

/// Exact global minimizer of `||u||^2` over the constraint polytope.
pub fn solve_min_norm(p: &QpProblem) -> Result<QpSolution> {
    p.validate()?;
    let dim = p.dim;
    if let Some(c) = p
        .constraints
        .iter()
        .find(|c| c.a.iter().all(|a| *a == 0.0) && c.b > TOLERANCES.feasibility)
    {
        return Err(Error::Infeasible(format!(
            "constraint `{}` has zero normal and requires 0 >= {}",
            c.label, c.b
        )));
    }
    let rows = rows(p);
    let mut best: Option<([f64; 3], f64)> = None;
    let mut consider = |u: [f64; 3]| {
        if !feasible(p, &u[..dim]) {
            return;
        }
        let n = dot(&u[..dim], &u[..dim]);
        if best.as_ref().is_none_or(|(b, nb)| better(&u[..dim], n, &b[..dim], *nb)) {
            best = Some((u, n));
        }
    };
    consider([0.0; 3]);
    for k in 1..=dim {
        for_each_subset(rows.len(), k, |s| {
            if let Some(u) = affine_min_norm(&rows, s, dim) {
                consider(u);
            }
        });
    }
    let Some((u, _)) = best else {
        return Err(Error::Infeasible(format!(
            "no point satisfies all {} constraints within the box |u| <= {}",
            p.constraints.len(),
            p.bound
        )));
    };
    let u: Vec<f64> = u[..dim].iter().map(|x| x.clamp(-p.bound, p.bound)).collect();
    let mut active_set: Vec<String> = p
        .constraints
        .iter()
        .filter(|c| c.residual(&u).abs() <= TOLERANCES.feasibility * (1.0 + c.b.abs()))
        .map(|c| c.label.clone())
        .collect();
    for (j, x) in u.iter().enumerate() {
        if *x >= p.bound - TOLERANCES.box_slack {
            active_set.push(format!("box_upper[{j}]"));
        } else if *x <= -p.bound + TOLERANCES.box_slack {
            active_set.push(format!("box_lower[{j}]"));
        }
    }
    let objective = dot(&u, &u);
    Ok(QpSolution { u, active_set, objective })
}

/// Largest value of `c . u` over the constraint polytope of `p`.
///
/// Used to find the least violation of a row that cannot be met together
/// with the others. The box keeps the polytope bounded, so the maximum is
/// attained at a vertex.
pub fn max_linear(p: &QpProblem, objective: &[f64]) -> Result<f64> {
    p.validate()?;
    if objective.len() != p.dim {
        return Err(Error::Config("objective dimension does not match the QP".into()));
    }
    ensure_finite("objective", objective)?;
    let rows = rows(p);
    let mut best: Option<f64> = None;
    for_each_subset(rows.len(), p.dim, |s| {
        if let Some(u) = affine_min_norm(&rows, s, p.dim) {
            if feasible(p, &u[..p.dim]) {
                let v = dot(objective, &u[..p.dim]);
                if best.is_none_or(|b| v > b) {
                    best = Some(v);
                }
            }
        }
    });
    best.ok_or_else(|| Error::Infeasible("constraint polytope is empty".into()))
}

/// Brute-force minimum-norm search over lattice columns.
///
/// One coordinate is left continuous and the others walk the lattice
/// `resolution * Z` inside the box. Within each column the feasible interval
/// of the free coordinate is computed exactly and its point closest to zero
/// is kept, which is the least-norm point of that column. Every coordinate
/// takes a turn as the free one and the least-norm result wins.
///
/// A feasible set thinner than the lattice spacing can fall between columns.
/// When no column is feasible the search is repeated with every constraint
/// relaxed by `resolution * max ||a_i||` and the free coordinate also on the
/// lattice; only if that fails too is the problem reported infeasible.
pub fn oracle_grid(p: &QpProblem, resolution: f64) -> Result<Vec<f64>> {
    p.validate()?;
    if !(resolution > 0.0 && resolution <= p.bound / 10.0) {
        return Err(Error::Config(format!(
            "oracle resolution must be in (0, M/10], got {resolution}"
        )));
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for free in 0..p.dim {
        if let Some((u, n)) = scan_columns(p, resolution, free, None) {
            if best.as_ref().is_none_or(|(_, nb)| n < *nb) {
                best = Some((u, n));
            }
        }
    }
    if best.is_none() {
        let slack = resolution
            * p.constraints
                .iter()
                .map(|c| dot(&c.a, &c.a).sqrt())
                .fold(0.0, f64::max);
        best = scan_columns(p, resolution, p.dim - 1, Some(slack));
    }
    best.map(|(u, _)| u)
        .ok_or_else(|| Error::Infeasible("no lattice column contains a feasible point".into()))
}

/// Least-norm point over the columns whose free coordinate is `free`.
/// With `relax = Some(s)` rows are loosened by `s` and the free coordinate is
/// rounded onto the lattice as well.
fn scan_columns(p: &QpProblem, resolution: f64, free: usize, relax: Option<f64>) -> Option<(Vec<f64>, f64)> {
    let dim = p.dim;
    let slack = relax.unwrap_or(0.0);
    let kmax = (p.bound / resolution + 1e-9).floor() as i64;
    let fixed: Vec<usize> = (0..dim).filter(|j| *j != free).collect();
    let mut idx = vec![-kmax; fixed.len()];
    let mut point = vec![0.0; dim];
    let mut best: Option<(Vec<f64>, f64)> = None;
    loop {
        for (j, k) in fixed.iter().zip(&idx) {
            point[*j] = *k as f64 * resolution;
        }
        point[free] = 0.0;
        let (mut lo, mut hi) = (-p.bound, p.bound);
        let mut empty = false;
        for c in &p.constraints {
            let need = c.b - slack - dot(&c.a, &point);
            let coef = c.a[free];
            if coef > 0.0 {
                lo = lo.max(need / coef);
            } else if coef < 0.0 {
                hi = hi.min(need / coef);
            } else if need > 0.0 {
                empty = true;
                break;
            }
        }
        if relax.is_some() {
            lo = (lo / resolution).ceil() * resolution;
            hi = (hi / resolution).floor() * resolution;
        }
        if !empty && lo <= hi {
            point[free] = 0.0f64.clamp(lo, hi);
            let n = dot(&point, &point);
            if best.as_ref().is_none_or(|(b, nb)| n < *nb || (n == *nb && point < *b)) {
                best = Some((point.clone(), n));
            }
        }
        // odometer over the lattice coordinates
        let mut j = idx.len();
        loop {
            if j == 0 {
                return best;
            }
            j -= 1;
            if idx[j] < kmax {
                idx[j] += 1;
                break;
            }
            idx[j] = -kmax;
        }
    }
}
