use crate::error::{OtError, Result};
use crate::measure::{check_len, marginals, require_balanced, TransportPlan};

/// Marginal violation below which a plan is treated as already feasible.
pub const ROUNDING_IDENTITY_TOL: f64 = 1e-12;

/// Projects an approximate plan onto `U(a, b)`.
///
/// Rows are scaled down to at most `a`, then columns to at most `b`, and the
/// leftover deficits are filled with a rank-one correction. The cost grows by
/// at most `‖C‖∞·(‖P̃1 − a‖₁ + ‖P̃ᵀ1 − b‖₁)`.
pub fn round_to_feasible(plan: &TransportPlan, a: &[f64], b: &[f64]) -> Result<TransportPlan> {
    let (n, m) = plan.shape();
    check_len("a", n, a.len())?;
    check_len("b", m, b.len())?;
    for (index, &value) in plan.entries().iter().enumerate() {
        if value < 0.0 {
            return Err(OtError::NegativeEntry { index, value });
        }
    }
    require_balanced(a, b)?;

    let (row_viol, col_viol) = plan.marginal_violation(a, b);
    let mass = a.iter().sum::<f64>().max(1.0);
    if row_viol + col_viol <= ROUNDING_IDENTITY_TOL * mass {
        return Ok(plan.clone());
    }

    let mut p = plan.entries().to_vec();
    let (rows, _) = marginals(plan);
    for i in 0..n {
        let scale = if rows[i] > a[i] { a[i] / rows[i] } else { 1.0 };
        p[i * m..(i + 1) * m].iter_mut().for_each(|x| *x *= scale);
    }
    let mut cols = vec![0.0; m];
    for row in p.chunks(m) {
        cols.iter_mut().zip(row).for_each(|(c, x)| *c += x);
    }
    let col_scale: Vec<f64> = (0..m).map(|j| if cols[j] > b[j] { b[j] / cols[j] } else { 1.0 }).collect();
    for row in p.chunks_mut(m) {
        row.iter_mut().zip(&col_scale).for_each(|(x, s)| *x *= s);
    }

    let mut row_err = a.to_vec();
    let mut col_err = b.to_vec();
    for (i, row) in p.chunks(m).enumerate() {
        for (j, &x) in row.iter().enumerate() {
            row_err[i] -= x;
            col_err[j] -= x;
        }
    }
    row_err.iter_mut().chain(col_err.iter_mut()).for_each(|e| *e = e.max(0.0));
    let total: f64 = row_err.iter().sum();
    if total > 0.0 {
        for (i, row) in p.chunks_mut(m).enumerate() {
            for (x, &cj) in row.iter_mut().zip(&col_err) {
                *x += row_err[i] * cj / total;
            }
        }
    }
    TransportPlan::new(n, m, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{transport_cost, CostMatrix};

    #[test]
    fn feasible_plan_is_returned_bit_identical() {
        let p = TransportPlan::new(2, 2, vec![0.4, 0.3, 0.0, 0.3]).unwrap();
        let r = round_to_feasible(&p, &[0.7, 0.3], &[0.4, 0.6]).unwrap();
        assert_eq!(r.entries(), p.entries());
    }

    #[test]
    fn scaled_optimum_is_repaired_within_bound() {
        let c = CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let (a, b) = ([0.7, 0.3], [0.4, 0.6]);
        let p = TransportPlan::new(2, 2, vec![0.36, 0.27, 0.0, 0.27]).unwrap();
        let (rv, cv) = p.marginal_violation(&a, &b);
        assert!((rv + cv - 0.2).abs() < 1e-12);
        let r = round_to_feasible(&p, &a, &b).unwrap();
        assert!(r.is_feasible(&a, &b, 1e-12));
        let cost = transport_cost(&c, &r).unwrap();
        assert!(cost <= 0.3 + c.max_abs() * 0.2 + 1e-12);
        assert!(cost >= 0.3 - 1e-12);
    }

    #[test]
    fn oversupplied_rows_are_scaled_down() {
        let p = TransportPlan::new(1, 2, vec![1.0, 1.0]).unwrap();
        let r = round_to_feasible(&p, &[1.0], &[0.25, 0.75]).unwrap();
        assert!(r.is_feasible(&[1.0], &[0.25, 0.75], 1e-15));
    }

    #[test]
    fn rejects_negative_entries() {
        let p = TransportPlan::from_entries_unchecked(1, 1, vec![-1.0]);
        assert!(matches!(round_to_feasible(&p, &[1.0], &[1.0]), Err(OtError::NegativeEntry { .. })));
    }
}
