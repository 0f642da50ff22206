//! Shared data model: discrete measures, cost matrices, couplings, dual
//! potentials and assignment maps.
//!
//! All matrices are dense, row-major `f64`.

use crate::error::{OtError, Result};

/// Absolute tolerance on `|Σa − Σb|` for a pair to count as balanced.
pub const BALANCE_TOL: f64 = 1e-9;
/// Default ℓ₁ feasibility tolerance for couplings.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Slack allowed in `w_i + z_j ≤ C_ij`.
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-9;

/// Nonnegative weights over an indexed support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
    total_mass: f64,
    labels: Option<Vec<String>>,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(OtError::InvalidInput("measure must have at least one point".into()));
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() {
                return Err(OtError::InvalidInput(format!("weight {index} is not finite")));
            }
            if value < 0.0 {
                return Err(OtError::NegativeEntry { index, value });
            }
        }
        let total_mass = weights.iter().sum();
        Ok(Self { weights, total_mass, labels: None })
    }

    /// The uniform probability vector on `n` points.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(OtError::InvalidInput("measure must have at least one point".into()));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.weights.len() {
            return Err(OtError::ShapeMismatch {
                expected: format!("{} labels", self.weights.len()),
                found: format!("{} labels", labels.len()),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Rescales to unit mass. Fails on the zero measure.
    pub fn normalized(&self) -> Result<Self> {
        if self.total_mass <= 0.0 {
            return Err(OtError::InvalidInput("cannot normalize a zero measure".into()));
        }
        let mut out = Self::new(self.weights.iter().map(|w| w / self.total_mass).collect())?;
        out.labels = self.labels.clone();
        Ok(out)
    }
}

/// Dense nonnegative `rows × cols` cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    max_abs: f64,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(OtError::InvalidInput("cost matrix must be non-empty".into()));
        }
        if entries.len() != rows * cols {
            return Err(OtError::ShapeMismatch {
                expected: format!("{} entries ({rows}x{cols})", rows * cols),
                found: format!("{} entries", entries.len()),
            });
        }
        let mut max_abs = 0.0f64;
        for (index, &value) in entries.iter().enumerate() {
            if !value.is_finite() {
                return Err(OtError::InvalidInput(format!("cost entry {index} is not finite")));
            }
            if value < 0.0 {
                return Err(OtError::NegativeEntry { index, value });
            }
            max_abs = max_abs.max(value.abs());
        }
        Ok(Self { rows, cols, entries, max_abs })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::new(rows, cols, entries)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(OtError::InvalidInput("ragged cost rows".into()));
        }
        Self::new(n, m, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `‖C‖∞`, the largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j));
            }
        }
        Self { rows: self.cols, cols: self.rows, entries, max_abs: self.max_abs }
    }

    /// Sub-matrix keeping the listed rows and columns, in order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        let mut max_abs = 0.0f64;
        for &i in rows {
            for &j in cols {
                let c = self.get(i, j);
                max_abs = max_abs.max(c);
                entries.push(c);
            }
        }
        Self { rows: rows.len(), cols: cols.len(), entries, max_abs }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.rows, self.cols, self.entries.iter().map(|c| c * factor).collect())
    }
}

/// Dense nonnegative coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl TransportPlan {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(OtError::ShapeMismatch {
                expected: format!("{} entries ({rows}x{cols})", rows * cols),
                found: format!("{} entries", entries.len()),
            });
        }
        for (index, &value) in entries.iter().enumerate() {
            if value.is_nan() || value.is_infinite() {
                return Err(OtError::InvalidInput(format!("plan entry {index} is not finite")));
            }
            if value < 0.0 {
                return Err(OtError::NegativeEntry { index, value });
            }
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![0.0; rows * cols] }
    }

    /// The product coupling `a bᵀ`.
    pub fn outer(a: &[f64], b: &[f64]) -> Self {
        let entries = a.iter().flat_map(|&ai| b.iter().map(move |&bj| ai * bj)).collect();
        Self { rows: a.len(), cols: b.len(), entries }
    }

    pub(crate) fn from_entries_unchecked(rows: usize, cols: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), rows * cols);
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().sum()
    }

    /// `(‖P1 − a‖₁, ‖Pᵀ1 − b‖₁)`.
    pub fn marginal_violation(&self, a: &[f64], b: &[f64]) -> (f64, f64) {
        let (rows, cols) = marginals(self);
        (l1_distance(&rows, a), l1_distance(&cols, b))
    }

    pub fn is_feasible(&self, a: &[f64], b: &[f64], tol: f64) -> bool {
        if a.len() != self.rows || b.len() != self.cols {
            return false;
        }
        let (r, c) = self.marginal_violation(a, b);
        r + c <= tol
    }

    /// Number of strictly positive entries.
    pub fn support_size(&self) -> usize {
        self.entries.iter().filter(|&&p| p > 0.0).count()
    }

    /// Re-embeds a plan solved on a sub-support into the full shape.
    pub(crate) fn embed(&self, rows: usize, cols: usize, row_idx: &[usize], col_idx: &[usize]) -> Self {
        let mut out = Self::zeros(rows, cols);
        for (si, &i) in row_idx.iter().enumerate() {
            for (sj, &j) in col_idx.iter().enumerate() {
                out.entries[i * cols + j] = self.get(si, sj);
            }
        }
        out
    }
}

/// Kantorovich potentials `(w, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotentials {
    pub w: Vec<f64>,
    pub z: Vec<f64>,
}

impl DualPotentials {
    pub fn new(w: Vec<f64>, z: Vec<f64>) -> Self {
        Self { w, z }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self { w: vec![0.0; n], z: vec![0.0; m] }
    }

    /// Largest value of `w_i + z_j − C_ij` (≤ 0 when feasible).
    pub fn max_excess(&self, cost: &CostMatrix) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (i, &wi) in self.w.iter().enumerate() {
            for (j, &zj) in self.z.iter().enumerate() {
                worst = worst.max(wi + zj - cost.get(i, j));
            }
        }
        worst
    }

    pub fn is_dual_feasible(&self, cost: &CostMatrix, tol: f64) -> bool {
        self.w.len() == cost.rows() && self.z.len() == cost.cols() && self.max_excess(cost) <= tol
    }
}

/// A deterministic source → target assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MongeMap {
    assignment: Vec<usize>,
    targets: usize,
}

impl MongeMap {
    pub fn new(assignment: Vec<usize>, targets: usize) -> Result<Self> {
        if let Some((i, &j)) = assignment.iter().enumerate().find(|(_, &j)| j >= targets) {
            return Err(OtError::InvalidInput(format!(
                "source {i} maps to {j}, outside [0, {targets})"
            )));
        }
        Ok(Self { assignment, targets })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn image(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Checks `T#a = b`: the mass landing on each target equals its weight.
    pub fn pushes_forward(&self, a: &[f64], b: &[f64]) -> bool {
        if a.len() != self.assignment.len() || b.len() != self.targets {
            return false;
        }
        let mut pushed = vec![0.0; self.targets];
        for (&ai, &j) in a.iter().zip(&self.assignment) {
            pushed[j] += ai;
        }
        pushed.iter().zip(b).all(|(p, bj)| (p - bj).abs() <= 1e-9)
    }

    /// Cost `Σ_i C_{i,T(i)}` of the unit-weight assignment.
    pub fn cost(&self, cost: &CostMatrix) -> f64 {
        self.assignment.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum()
    }

    /// The coupling placing weight `a_i` on `(i, T(i))`.
    pub fn to_plan(&self, a: &[f64]) -> TransportPlan {
        let mut plan = TransportPlan::zeros(self.assignment.len(), self.targets);
        for (i, (&j, &ai)) in self.assignment.iter().zip(a).enumerate() {
            plan.entries[i * self.targets + j] = ai;
        }
        plan
    }
}

/// Diagnostics from [`validate_pair`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    /// Non-finite or negative entries as `(side, index)`, side 0 for `a`.
    pub negative: Vec<(usize, usize)>,
    pub empty: bool,
    /// `Σa − Σb`.
    pub mass_gap: f64,
    pub balanced: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.negative.is_empty() && !self.empty && self.balanced
    }
}

/// Reports dimension, sign and (when `balanced` is set) total-mass problems.
/// Purely diagnostic: solvers decide whether to reject.
pub fn validate_pair(a: &[f64], b: &[f64], balanced: bool) -> ValidationReport {
    let mut report = ValidationReport { empty: a.is_empty() || b.is_empty(), ..Default::default() };
    for (side, weights) in [a, b].into_iter().enumerate() {
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0 && w.is_finite()) {
                report.negative.push((side, i));
            }
        }
    }
    report.mass_gap = a.iter().sum::<f64>() - b.iter().sum::<f64>();
    report.balanced = !balanced || report.mass_gap.abs() <= BALANCE_TOL;
    report
}

/// Row and column sums of a plan.
pub fn marginals(plan: &TransportPlan) -> (Vec<f64>, Vec<f64>) {
    let mut rows = vec![0.0; plan.rows];
    let mut cols = vec![0.0; plan.cols];
    for (i, row) in plan.entries.chunks_exact(plan.cols.max(1)).enumerate().take(plan.rows) {
        let mut s = 0.0;
        for (j, &p) in row.iter().enumerate() {
            s += p;
            cols[j] += p;
        }
        rows[i] = s;
    }
    (rows, cols)
}

/// `⟨C, P⟩`.
pub fn transport_cost(cost: &CostMatrix, plan: &TransportPlan) -> Result<f64> {
    check_shapes(cost, plan)?;
    Ok(cost.entries.iter().zip(&plan.entries).map(|(c, p)| c * p).sum())
}

pub(crate) fn check_shapes(cost: &CostMatrix, plan: &TransportPlan) -> Result<()> {
    if cost.shape() != plan.shape() {
        return Err(OtError::ShapeMismatch {
            expected: format!("{}x{}", cost.rows, cost.cols),
            found: format!("{}x{}", plan.rows, plan.cols),
        });
    }
    Ok(())
}

pub(crate) fn check_len(what: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(OtError::ShapeMismatch {
            expected: format!("{what} of length {expected}"),
            found: format!("length {found}"),
        });
    }
    Ok(())
}

pub(crate) fn require_balanced(a: &[f64], b: &[f64]) -> Result<()> {
    let gap = a.iter().sum::<f64>() - b.iter().sum::<f64>();
    if gap.abs() > BALANCE_TOL {
        return Err(OtError::Unbalanced { gap });
    }
    Ok(())
}

pub(crate) fn l1_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum()
}
