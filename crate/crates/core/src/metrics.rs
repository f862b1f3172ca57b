//! Reductions over simulation traces: average interference, SINR CDF,
//! outage, prediction RMSE and minimum rate.

use crate::error::{Error, Result};

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub fn mean(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Empty("sample set"));
    }
    Ok(pairwise_sum(xs) / xs.len() as f64)
}

/// Sample standard deviation (zero for a single sample).
pub fn std_dev(xs: &[f64]) -> Result<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Ok(0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
    Ok((pairwise_sum(&sq) / (xs.len() - 1) as f64).sqrt())
}

/// Time-averaged interference `(1/T) sum_t I(t)`.
pub fn avg_interference(trace: &[f64]) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::Empty("interference trace"));
    }
    mean(trace)
}

/// Fraction of samples strictly below each threshold.
pub fn outage(samples: &[f64], thresholds: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Empty("SINR samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(thresholds
        .iter()
        .map(|g| sorted.partition_point(|s| s < g) as f64 / n)
        .collect())
}

/// Empirical CDF as `(value, F(value))` pairs at the distinct sample values.
pub fn sinr_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::Empty("SINR samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, s) in sorted.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *s => last.1 = f,
            _ => out.push((*s, f)),
        }
    }
    Ok(out)
}

/// Right-continuous evaluation `F(x)` of a CDF from [`sinr_cdf`].
pub fn cdf_at(cdf: &[(f64, f64)], x: f64) -> f64 {
    let i = cdf.partition_point(|(v, _)| *v <= x);
    if i == 0 {
        0.0
    } else {
        cdf[i - 1].1
    }
}

/// Left limit `F(x-)`.
pub fn cdf_before(cdf: &[(f64, f64)], x: f64) -> f64 {
    let i = cdf.partition_point(|(v, _)| *v < x);
    if i == 0 {
        0.0
    } else {
        cdf[i - 1].1
    }
}

/// Empirical quantile: smallest sample value `v` with `F(v) >= p`.
pub fn quantile(cdf: &[(f64, f64)], p: f64) -> f64 {
    let i = cdf.partition_point(|(_, f)| *f < p - 1e-12);
    cdf[i.min(cdf.len() - 1)].0
}

/// `min_k log2(1 + gamma_k)`.
pub fn min_rate(sinrs: &[f64]) -> Result<f64> {
    if sinrs.is_empty() {
        return Err(Error::Empty("per-user SINRs"));
    }
    Ok(sinrs.iter().map(|g| (1.0 + g.max(0.0)).log2()).fold(f64::INFINITY, f64::min))
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Threshold grid in dB: `-5, -4.5, ..., 20`.
pub fn default_threshold_grid_db() -> Vec<f64> {
    (0..=50).map(|i| -5.0 + 0.5 * i as f64).collect()
}

/// Summary of one (scheme, K) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub scheme: String,
    pub num_interferers: usize,
    pub seeds: Vec<u64>,
    /// Watts.
    pub avg_interference: f64,
    /// Linear.
    pub sinr_samples: Vec<f64>,
    /// Thresholds in dB and outage probabilities.
    pub thresholds_db: Vec<f64>,
    pub outage: Vec<f64>,
    /// Empty for schemes without a predictor.
    pub rmse_per_horizon: Vec<f64>,
    /// bits/s/Hz.
    pub min_rate: f64,
}

impl MetricsReport {
    pub fn validate(&self) -> Result<()> {
        if self.outage.iter().any(|p| !(0.0..=1.0).contains(p)) || self.outage.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("outage must lie in [0, 1] and be non-decreasing".into()));
        }
        if !(self.min_rate >= 0.0) || self.sinr_samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("min rate must be non-negative and samples finite".into()));
        }
        Ok(())
    }
}
