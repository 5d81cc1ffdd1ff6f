//! Goodness-of-fit tests against exact PMFs and limit CDFs.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::scalar::Scalar;

/// Default significance for stochastic checks.
pub const SIGNIFICANCE: f64 = 0.001;
/// Minimum expected count of a pooled chi-square cell.
pub const MIN_EXPECTED: f64 = 5.0;
/// Minimum sample size for the asymptotic Kolmogorov p-value.
pub const KS_MIN_SAMPLES: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GofReport {
    pub test: String,
    pub statistic: f64,
    /// Degrees of freedom for chi-square; absent for Kolmogorov-Smirnov.
    pub dof: Option<usize>,
    pub sample_size: usize,
    pub p_value: f64,
    pub significance: f64,
    pub passed: bool,
}

impl GofReport {
    fn new(test: &str, statistic: f64, dof: Option<usize>, sample_size: usize, p_value: f64, significance: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            test: test.into(),
            statistic,
            dof,
            sample_size,
            p_value,
            significance,
            passed: p_value >= significance,
        }
    }
}

/// Tallies integer observations.
pub fn counts<I: IntoIterator<Item = i64>>(values: I) -> BTreeMap<i64, u64> {
    let mut out = BTreeMap::new();
    for v in values {
        *out.entry(v).or_insert(0) += 1;
    }
    out
}

/// Pearson chi-square test of observed counts against a PMF. Adjacent
/// support cells (in value order) are pooled until each pooled cell expects
/// at least five observations; a short tail joins the last pooled cell.
/// Observations outside the support give an infinite statistic.
pub fn gof_chi_square<T: Scalar>(
    expected: &Pmf<T>,
    observed: &BTreeMap<i64, u64>,
    significance: f64,
) -> Result<GofReport> {
    let n: u64 = observed.values().sum();
    if n == 0 {
        return Err(Error::Statistics("empty sample".into()));
    }
    let probs: Vec<(i64, f64)> = expected.iter().map(|(v, p)| (v, p.as_f64())).filter(|(_, p)| *p > 0.0).collect();
    if observed.iter().any(|(v, &c)| c > 0 && !probs.iter().any(|(s, _)| s == v)) {
        return Ok(GofReport::new("chi-square", f64::INFINITY, None, n as usize, 0.0, significance));
    }
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut e, mut o) = (0.0, 0.0);
    for (v, p) in &probs {
        e += p * nf;
        o += *observed.get(v).unwrap_or(&0) as f64;
        if e >= MIN_EXPECTED {
            cells.push((e, o));
            e = 0.0;
            o = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += e;
                last.1 += o;
            }
            None => cells.push((e, o)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::Statistics("expected law pools into a single cell".into()));
    }
    let statistic: f64 = cells.iter().map(|(e, o)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let p = ChiSquared::new(dof as f64).map_err(|e| Error::Statistics(e.to_string()))?.sf(statistic);
    Ok(GofReport::new("chi-square", statistic, Some(dof), n as usize, p, significance))
}

/// Kolmogorov tail `P{K > x} = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`,
/// switching to the theta-function form for small `x`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        let t = -std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let s: f64 = (1..=20).map(|k| ((2 * k - 1) as f64).powi(2) * t).map(f64::exp).sum();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s
    } else {
        let s: f64 = (1..=100)
            .map(|k: i32| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k as f64).powi(2) * x * x).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// One-sample Kolmogorov-Smirnov test with the asymptotic p-value at
/// `(sqrt(n) + 0.12 + 0.11/sqrt(n)) D`.
pub fn gof_ks(samples: &[f64], cdf: impl Fn(f64) -> f64, significance: f64) -> Result<GofReport> {
    if samples.is_empty() {
        return Err(Error::Statistics("empty sample".into()));
    }
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::Statistics(format!("need at least {KS_MIN_SAMPLES} samples, got {}", samples.len())));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        // Ties share one jump of the empirical CDF.
        let mut k = i;
        while k + 1 < xs.len() && xs[k + 1] == xs[i] {
            k += 1;
        }
        let f = cdf(xs[i]);
        d = d.max(f - i as f64 / n).max((k + 1) as f64 / n - f);
        i = k + 1;
    }
    let rn = n.sqrt();
    let p = kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d);
    Ok(GofReport::new("kolmogorov-smirnov", d, None, xs.len(), p, significance))
}

/// Mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
