//! Dense two-phase simplex for `min cᵀx` s.t. `Ax = b`, `x ≥ 0`.
//!
//! Sized for toy instances (a few dozen rows, up to ~10⁴ columns). Pivots
//! follow Dantzig's rule and fall back to Bland's rule after a run of
//! degenerate pivots, so the method cannot cycle. The final basic solution
//! is re-solved from the original data for full precision.

use crate::error::{OtError, Result};

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Solves the standard-form LP; `rows[r]` is row `r` of `A`.
pub fn solve_lp(c: &[f64], rows: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let nvars = c.len();
    if rows.len() != b.len() || rows.iter().any(|r| r.len() != nvars) {
        return Err(OtError::ShapeMismatch {
            expected: format!("{} rows of {nvars} coefficients", b.len()),
            found: format!("{} rows", rows.len()),
        });
    }
    let nrows = rows.len();
    let scale = b.iter().fold(1.0f64, |s, x| s.max(x.abs()));
    let feas_tol = 1e-9 * scale;

    // tableau columns: structural, artificial, rhs
    let width = nvars + nrows + 1;
    let mut t: Vec<Vec<f64>> = rows
        .iter()
        .zip(b)
        .enumerate()
        .map(|(r, (row, &rhs))| {
            let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
            let mut line = vec![0.0; width];
            line[..nvars].iter_mut().zip(row).for_each(|(x, a)| *x = sign * a);
            line[nvars + r] = 1.0;
            line[width - 1] = sign * rhs;
            line
        })
        .collect();
    let mut basis: Vec<usize> = (nvars..nvars + nrows).collect();

    // phase one: minimize the sum of artificials
    let phase_one: Vec<f64> = (0..width - 1).map(|k| if k >= nvars { 1.0 } else { 0.0 }).collect();
    let infeasibility = simplex(&mut t, &mut basis, &phase_one, width - 1)?;
    if infeasibility > feas_tol {
        return Err(OtError::InvalidInput(format!("linear program is infeasible (residual {infeasibility:e})")));
    }

    // drive artificials out of the basis; rows that cannot be are redundant
    let mut r = 0;
    while r < t.len() {
        if basis[r] >= nvars {
            match (0..nvars).find(|&k| t[r][k].abs() > 1e-9) {
                Some(k) => pivot(&mut t, &mut basis, r, k),
                None => {
                    t.remove(r);
                    basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    simplex(&mut t, &mut basis, c, nvars)?;
    let x = resolve_basis(rows, b, &t, &basis, nvars)?;
    let objective = c.iter().zip(&x).map(|(c, x)| c * x).sum();
    Ok(LpSolution { x, objective })
}

/// Runs primal simplex over the first `active` columns. Returns the final
/// objective value.
fn simplex(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], active: usize) -> Result<f64> {
    let width = t.first().map_or(0, |r| r.len());
    let rhs = width - 1;
    let mut degenerate = 0usize;
    let limit = 50_000 + 100 * active;
    for _ in 0..limit {
        // reduced costs d_k = c_k − c_Bᵀ column_k
        let reduced = |k: usize| -> f64 {
            cost[k] - t.iter().zip(basis.iter()).map(|(row, &bk)| cost_of(cost, bk) * row[k]).sum::<f64>()
        };
        let bland = degenerate >= DEGENERATE_RUN;
        let mut entering = None;
        let mut best = -PIVOT_TOL;
        for k in 0..active {
            if basis.contains(&k) {
                continue;
            }
            let d = reduced(k);
            if d < best {
                entering = Some(k);
                if bland {
                    break;
                }
                best = d;
            }
        }
        let Some(k) = entering else {
            let value = t.iter().zip(basis.iter()).map(|(row, &bk)| cost_of(cost, bk) * row[rhs]).sum();
            return Ok(value);
        };
        let mut leave: Option<(usize, f64)> = None;
        for (r, row) in t.iter().enumerate() {
            if row[k] > PIVOT_TOL {
                let ratio = row[rhs] / row[k];
                let better = match leave {
                    None => true,
                    Some((lr, best_ratio)) => {
                        ratio < best_ratio - 1e-15 || (ratio <= best_ratio + 1e-15 && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, ratio)) = leave else {
            return Err(OtError::InvalidInput("linear program is unbounded".into()));
        };
        degenerate = if ratio.abs() <= 1e-14 { degenerate + 1 } else { 0 };
        pivot(t, basis, r, k);
    }
    Err(OtError::NonConvergence("simplex pivot limit reached".into()))
}

fn cost_of(cost: &[f64], k: usize) -> f64 {
    cost.get(k).copied().unwrap_or(0.0)
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, k: usize) {
    let p = t[r][k];
    t[r].iter_mut().for_each(|x| *x /= p);
    let pivot_row = t[r].clone();
    for (q, row) in t.iter_mut().enumerate() {
        if q != r && row[k] != 0.0 {
            let f = row[k];
            row.iter_mut().zip(&pivot_row).for_each(|(x, p)| *x -= f * p);
            row[k] = 0.0;
        }
    }
    basis[r] = k;
}

/// Recomputes basic values from the original rows by least squares on the
/// basic columns (exactly determined when the retained rows are independent).
fn resolve_basis(rows: &[Vec<f64>], b: &[f64], t: &[Vec<f64>], basis: &[usize], nvars: usize) -> Result<Vec<f64>> {
    let rhs = t.first().map_or(0, |r| r.len() - 1);
    let mut x = vec![0.0; nvars];
    for (row, &k) in t.iter().zip(basis) {
        x[k] = row[rhs].max(0.0);
    }
    let cols: Vec<usize> = basis.to_vec();
    let size = cols.len();
    if size == 0 {
        return Ok(x);
    }
    // normal equations BᵀB x_B = Bᵀ b over all original rows
    let mut m = vec![vec![0.0; size + 1]; size];
    for (row, &rhs_val) in rows.iter().zip(b) {
        for p in 0..size {
            let ap = row[cols[p]];
            if ap == 0.0 {
                continue;
            }
            for q in 0..size {
                m[p][q] += ap * row[cols[q]];
            }
            m[p][size] += ap * rhs_val;
        }
    }
    if let Some(sol) = gaussian_solve(m) {
        if sol.iter().all(|v| v.is_finite() && *v >= -1e-9) {
            for (p, &k) in cols.iter().enumerate() {
                x[k] = sol[p].max(0.0);
            }
        }
    }
    Ok(x)
}

fn gaussian_solve(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-13 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}
