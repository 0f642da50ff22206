//! Optimal Transport Warping: OT between the points of two time series
//! under a cost mixing value distance and normalized index gap.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::entropic::{sinkhorn, EntropicOptions};
use crate::error::{OtError, Result};
use crate::exact::{round_to_feasible, solve_exact};
use crate::io::fmt_f64;
use crate::measure::{transport_cost, CostMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    id: String,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(OtError::InvalidInput("time series must have at least one value".into()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(OtError::InvalidInput(format!("time series value {index} is not finite")));
        }
        Ok(Self { id: id.into(), values })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalMode {
    /// `p_i = 1/T`.
    Uniform,
    /// `p_i ∝ |x_i|`, falling back to uniform for an all-zero series.
    NormalizedMagnitude,
}

impl fmt::Display for MarginalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MarginalMode::Uniform => "uniform",
            MarginalMode::NormalizedMagnitude => "normalized-magnitude",
        })
    }
}

impl FromStr for MarginalMode {
    type Err = OtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(MarginalMode::Uniform),
            "normalized-magnitude" => Ok(MarginalMode::NormalizedMagnitude),
            other => Err(OtError::Parse(format!("unknown marginal mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtwConfig {
    /// Entropic strength; 0 selects the exact backend.
    pub eta: f64,
    /// Weight `λ` of the normalized index gap.
    pub temporal_weight: f64,
    /// Exponent `p ∈ {1, 2}` of the value distance.
    pub ground_power: u32,
    pub marginal_mode: MarginalMode,
}

impl Default for OtwConfig {
    fn default() -> Self {
        Self { eta: 0.0, temporal_weight: 0.0, ground_power: 1, marginal_mode: MarginalMode::Uniform }
    }
}

impl OtwConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(OtError::InvalidInput(format!("eta must be nonnegative, got {}", self.eta)));
        }
        if !(self.temporal_weight >= 0.0) || !self.temporal_weight.is_finite() {
            return Err(OtError::InvalidInput(format!(
                "temporal weight must be nonnegative, got {}",
                self.temporal_weight
            )));
        }
        if !matches!(self.ground_power, 1 | 2) {
            return Err(OtError::InvalidInput(format!("ground power must be 1 or 2, got {}", self.ground_power)));
        }
        Ok(())
    }

    pub fn marginal(&self, series: &TimeSeries) -> Vec<f64> {
        let t = series.len();
        if self.marginal_mode == MarginalMode::NormalizedMagnitude {
            let total: f64 = series.values.iter().map(|v| v.abs()).sum();
            if total > 0.0 {
                return series.values.iter().map(|v| v.abs() / total).collect();
            }
        }
        vec![1.0 / t as f64; t]
    }
}

/// `C_ij = |x_i − y_j|^p + λ|i − j| / max(T_x, T_y)`.
pub fn otw_cost_matrix(x: &TimeSeries, y: &TimeSeries, cfg: &OtwConfig) -> Result<CostMatrix> {
    cfg.validate()?;
    let span = x.len().max(y.len()) as f64;
    CostMatrix::from_fn(x.len(), y.len(), |i, j| {
        let d = (x.values[i] - y.values[j]).abs();
        let value = if cfg.ground_power == 2 { d * d } else { d };
        value + cfg.temporal_weight * (i.abs_diff(j) as f64) / span
    })
}

/// Unregularized OT cost between the two series. With `eta > 0` the Sinkhorn
/// plan is rounded onto the marginals before its cost is taken.
pub fn otw_distance(x: &TimeSeries, y: &TimeSeries, cfg: &OtwConfig) -> Result<f64> {
    let cost = otw_cost_matrix(x, y, cfg)?;
    let (p, q) = (cfg.marginal(x), cfg.marginal(y));
    if cfg.eta == 0.0 {
        return Ok(solve_exact(&p, &q, &cost)?.cost);
    }
    let solution = sinkhorn(&p, &q, &cost, &EntropicOptions::new(cfg.eta))?;
    let plan = round_to_feasible(&solution.plan, &p, &q)?;
    transport_cost(&cost, &plan)
}

/// Symmetric matrix of pairwise distances, computed in parallel over the
/// upper triangle.
pub fn otw_pairwise(batch: &[TimeSeries], cfg: &OtwConfig) -> Result<Vec<Vec<f64>>> {
    if batch.is_empty() {
        return Err(OtError::InvalidInput("pairwise batch is empty".into()));
    }
    cfg.validate()?;
    let n = batch.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = pairs.par_iter().map(|&(i, j)| otw_distance(&batch[i], &batch[j], cfg)).collect::<Result<Vec<_>>>()?;
    let mut out = vec![vec![0.0; n]; n];
    for (&(i, j), d) in pairs.iter().zip(values) {
        out[i][j] = d;
        out[j][i] = d;
    }
    if cfg.eta > 0.0 {
        let diagonal = batch.par_iter().map(|s| otw_distance(s, s, cfg)).collect::<Result<Vec<_>>>()?;
        for (i, d) in diagonal.into_iter().enumerate() {
            out[i][i] = d;
        }
    }
    Ok(out)
}

/// Reads one series per line as `id,v1,v2,...`. Blank lines are skipped.
pub fn read_series_csv<R: Read>(reader: R) -> Result<Vec<TimeSeries>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (line, record) in csv.records().enumerate() {
        let record = record?;
        let mut fields = record.iter();
        let Some(id) = fields.next().filter(|s| !s.is_empty()) else {
            continue;
        };
        let values = fields
            .filter(|f| !f.is_empty())
            .map(|f| f.parse::<f64>().map_err(|e| OtError::Parse(format!("line {}: {f:?}: {e}", line + 1))))
            .collect::<Result<Vec<_>>>()?;
        out.push(TimeSeries::new(id, values).map_err(|e| OtError::Parse(format!("line {}: {e}", line + 1)))?);
    }
    Ok(out)
}

/// Writes a distance matrix with the series ids as header row and column.
pub fn write_distance_csv<W: Write>(writer: W, ids: &[&str], matrix: &[Vec<f64>]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(std::iter::once("").chain(ids.iter().copied()))?;
    for (id, row) in ids.iter().zip(matrix) {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        csv.write_record(std::iter::once(id.to_string()).chain(cells))?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[f64]) -> TimeSeries {
        TimeSeries::new("s", values.to_vec()).unwrap()
    }

    #[test]
    fn cost_examples() {
        let cfg = OtwConfig::default();
        let c = otw_cost_matrix(&series(&[0.0]), &series(&[3.0]), &cfg).unwrap();
        assert_eq!(c.entries(), &[3.0]);
        let x = series(&[0.5, -1.0, 2.0]);
        let c = otw_cost_matrix(&x, &x, &OtwConfig { temporal_weight: 0.0, ground_power: 2, ..cfg }).unwrap();
        assert!((0..3).all(|i| c.get(i, i) == 0.0));
        let y = series(&[1.0, 4.0]);
        let cfg = OtwConfig { temporal_weight: 0.7, ground_power: 2, ..cfg };
        let c = otw_cost_matrix(&x, &y, &cfg).unwrap();
        let ct = otw_cost_matrix(&y, &x, &cfg).unwrap();
        assert_eq!(c.transpose(), ct);
        assert_eq!(c.get(2, 0), 1.0 + 0.7 * 2.0 / 3.0);
    }

    #[test]
    fn distance_examples() {
        let cfg = OtwConfig::default();
        let x = series(&[0.3, 1.2, -0.4]);
        assert!(otw_distance(&x, &x, &OtwConfig { temporal_weight: 2.0, ..cfg }).unwrap().abs() < 1e-12);
        let d = otw_distance(&series(&[0.0, 0.0]), &series(&[1.0, 1.0]), &cfg).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let shifted: Vec<f64> = x.values().iter().map(|v| v + 0.25).collect();
        assert!((otw_distance(&x, &series(&shifted), &cfg).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn entropic_close_to_exact() {
        let x = series(&[0.1, 0.9, 0.4, 0.7, 0.2, 0.5, 0.8, 0.3]);
        let y = series(&[0.6, 0.2, 0.9, 0.1, 0.4, 0.3, 0.7, 0.5]);
        let cfg = OtwConfig { temporal_weight: 0.5, ..OtwConfig::default() };
        let scale = otw_cost_matrix(&x, &y, &cfg).unwrap().max_abs();
        let exact = otw_distance(&x, &y, &cfg).unwrap();
        let entropic = otw_distance(&x, &y, &OtwConfig { eta: 0.01 * scale, ..cfg }).unwrap();
        assert!(entropic >= exact - 1e-12);
        assert!(entropic - exact <= 0.05 * scale);
    }

    #[test]
    fn pairwise_is_symmetric() {
        let batch = vec![series(&[1.0, 2.0]), series(&[1.0, 2.0])];
        assert_eq!(otw_pairwise(&batch, &OtwConfig::default()).unwrap(), vec![vec![0.0; 2]; 2]);
        assert_eq!(otw_pairwise(&batch[..1], &OtwConfig::default()).unwrap(), vec![vec![0.0]]);
        assert!(otw_pairwise(&[], &OtwConfig::default()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let text = "a,1,2,3\n\nb, 0.5 ,-1\n";
        let batch = read_series_csv(text.as_bytes()).unwrap();
        assert_eq!(batch.len(), 2);
        assert_eq!(batch[1].values(), &[0.5, -1.0]);
        assert!(read_series_csv("c,1,x\n".as_bytes()).is_err());
        assert!(read_series_csv("c\n".as_bytes()).is_err());
        let mut out = Vec::new();
        write_distance_csv(&mut out, &["a", "b"], &[vec![0.0, 1.5], vec![1.5, 0.0]]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with(",a,b\n"));
        let last: Vec<f64> = text.lines().nth(2).unwrap().split(',').skip(1).map(|v| v.parse().unwrap()).collect();
        assert_eq!(last, vec![1.5, 0.0]);
    }

    #[test]
    fn rejects_bad_config() {
        let x = series(&[1.0]);
        let bad = OtwConfig { ground_power: 3, ..OtwConfig::default() };
        assert!(otw_distance(&x, &x, &bad).is_err());
        assert!(TimeSeries::new("n", vec![f64::NAN]).is_err());
    }
}
