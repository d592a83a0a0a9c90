use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::Axis;
use super::records::{mean_stderr, TrialRecord};
use crate::error::{Error, Result};

pub fn record_axis(r: &TrialRecord, axis: Axis) -> f64 {
    match axis {
        Axis::NPub => r.n_pub as f64,
        Axis::NPriv => r.n_priv as f64,
        Axis::N => r.n() as f64,
        Axis::D => r.d as f64,
        Axis::Epsilon => r.epsilon,
    }
}

/// Mean of the successful trials at one x value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub x: f64,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// `log(mean) ≈ intercept + slope · log(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    /// Propagated from the per-cell standard errors.
    pub stderr: f64,
    pub intercept: f64,
    pub points: Vec<ScalingPoint>,
}

/// Per-x means of the successful records accepted by `filter`, sorted by x.
pub fn aggregate_by<F: Fn(&TrialRecord) -> bool>(records: &[TrialRecord], axis: Axis, filter: F) -> Vec<ScalingPoint> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_ok() && filter(r)) {
        // positive floats order like their bit patterns
        groups.entry(record_axis(r, axis).to_bits()).or_default().push(r.excess_risk);
    }
    groups
        .into_iter()
        .map(|(bits, vals)| {
            let (mean, stderr) = mean_stderr(&vals);
            ScalingPoint {
                x: f64::from_bits(bits),
                mean,
                stderr,
                count: vals.len(),
            }
        })
        .collect()
}

/// Least-squares slope of `log(mean)` against `log(x)`.
///
/// Each cell's log-mean has variance about `(se/mean)^2`; the slope's
/// standard error is `sqrt(sum (x_i - x̄)^2 var_i) / sum (x_i - x̄)^2` in
/// log coordinates.
pub fn fit_points(points: &[ScalingPoint]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            found: points.len(),
        });
    }
    if let Some(p) = points.iter().find(|p| !(p.x > 0.0 && p.mean > 0.0)) {
        return Err(Error::NonFinite(format!(
            "log-log fit needs positive x and mean, got x = {}, mean = {}",
            p.x, p.mean
        )));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.x.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.mean.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let var: f64 = lx
        .iter()
        .zip(points)
        .map(|(x, p)| (x - mx).powi(2) * (p.stderr / p.mean).powi(2))
        .sum::<f64>()
        / (sxx * sxx);
    Ok(ScalingFit {
        slope,
        stderr: var.sqrt(),
        intercept: my - slope * mx,
        points: points.to_vec(),
    })
}

/// Scaling exponent of mean excess risk along `axis` for the records
/// accepted by `filter`; needs at least three distinct x values.
pub fn fit_scaling<F: Fn(&TrialRecord) -> bool>(records: &[TrialRecord], axis: Axis, filter: F) -> Result<ScalingFit> {
    fit_points(&aggregate_by(records, axis, filter))
}

/// First x at which `b` overtakes `a` (their difference changes sign),
/// interpolated linearly in `log x` on `log(a/b)`. Both curves must share
/// their x grid (sorted ascending).
pub fn crossover(a: &[ScalingPoint], b: &[ScalingPoint]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter(|(p, q)| p.x == q.x && p.mean > 0.0 && q.mean > 0.0)
        .map(|(p, q)| (p.x.ln(), (p.mean / q.mean).ln()))
        .collect();
    for w in pairs.windows(2) {
        let ((x0, r0), (x1, r1)) = (w[0], w[1]);
        if r0 == 0.0 {
            return Some(x0.exp());
        }
        if r0.signum() != r1.signum() && r1 != 0.0 {
            return Some((x0 + (x1 - x0) * r0 / (r0 - r1)).exp());
        }
        if r1 == 0.0 {
            return Some(x1.exp());
        }
    }
    None
}
