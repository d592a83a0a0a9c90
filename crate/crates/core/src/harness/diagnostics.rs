//! Configurable runs of the structural diagnostics (fingerprint correlation,
//! cover concentration, norm concentration), as used by `padp diagnose`.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::covers::{build_cover_with, cover_concentration_audit, CoverAuditReport, CoverConfig, EmpiricalMetric};
use crate::domain::{derive_rng, SeedSpec};
use crate::error::{Error, Result};
use crate::instances::{
    fingerprint_correlation_diagnostic, norm_concentration_check, FingerprintReport, NormConcentrationReport,
};
use crate::vecops::uniform_on_sphere;

fn one() -> f64 {
    1.0
}

pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::ConfigInvalid(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerprintDiagConfig {
    pub d: usize,
    pub n: usize,
    pub m: f64,
    #[serde(default = "one")]
    pub radius: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintDiagReport {
    #[serde(flatten)]
    pub report: FingerprintReport,
    /// `|mean - oracle| / oracle`.
    pub relative_error: f64,
    pub above_floor: bool,
}

pub fn run_fingerprint_diag(cfg: &FingerprintDiagConfig) -> Result<FingerprintDiagReport> {
    let mut rng = derive_rng(SeedSpec::new(cfg.seed, 0));
    let report = fingerprint_correlation_diagnostic(cfg.d, cfg.n, cfg.m, cfg.radius, cfg.trials, &mut rng)?;
    Ok(FingerprintDiagReport {
        relative_error: (report.mean_correlation - report.oracle).abs() / report.oracle,
        above_floor: report.mean_correlation > report.floor,
        report,
    })
}

/// Repeated cover audits on the sphere marginal of radius `norm_x`.
///
/// The cover is a `tau`-cover of the radius-`radius` ball (default `√d`)
/// under the metric of `n_pub` public points; each audit draws fresh
/// public points and a fresh population sample of size `n_fresh`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverDiagConfig {
    pub d: usize,
    pub n_pub: usize,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default = "one")]
    pub norm_x: f64,
    pub alpha: f64,
    pub tau: f64,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_audits")]
    pub audits: usize,
    #[serde(default = "default_fresh")]
    pub n_fresh: usize,
    /// Cover construction; `r_max` defaults to `d` here.
    #[serde(default)]
    pub cover: Option<CoverConfig>,
    /// Fraction of audits that must pass.
    #[serde(default = "default_required")]
    pub required: f64,
    pub seed: u64,
}

fn default_slack() -> f64 {
    0.05
}

fn default_n_test() -> usize {
    1000
}

fn default_audits() -> usize {
    20
}

fn default_fresh() -> usize {
    10_000
}

fn default_required() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverDiagReport {
    pub audits: Vec<CoverAuditReport>,
    pub pass_fraction: f64,
    pub mean_exceed_frac: f64,
    pub passed: bool,
}

pub fn run_cover_diag(cfg: &CoverDiagConfig) -> Result<CoverDiagReport> {
    if cfg.d == 0 || cfg.n_pub == 0 || cfg.audits == 0 || cfg.n_fresh == 0 {
        return Err(Error::ConfigInvalid("d, n_pub, audits and n_fresh must be >= 1".into()));
    }
    let radius = cfg.radius.unwrap_or((cfg.d as f64).sqrt());
    let cover_cfg = cfg.cover.unwrap_or(CoverConfig {
        r_max: cfg.d,
        ..CoverConfig::default()
    });
    let mut audits = Vec::with_capacity(cfg.audits);
    for a in 0..cfg.audits {
        let mut rng = derive_rng(SeedSpec::new(cfg.seed, a as u64));
        let public: Vec<Vec<f64>> = (0..cfg.n_pub).map(|_| uniform_on_sphere(&mut rng, cfg.d, cfg.norm_x)).collect();
        let metric = EmpiricalMetric::new(&public, cfg.d)?;
        let cover = build_cover_with(&metric, radius, cfg.tau, &cover_cfg)?;
        let fresh: Vec<Vec<f64>> = (0..cfg.n_fresh).map(|_| uniform_on_sphere(&mut rng, cfg.d, cfg.norm_x)).collect();
        audits.push(cover_concentration_audit(&cover, &fresh, cfg.alpha, cfg.tau, cfg.slack, cfg.n_test, &mut rng)?);
    }
    let k = audits.len() as f64;
    let pass_fraction = audits.iter().filter(|r| r.passed()).count() as f64 / k;
    Ok(CoverDiagReport {
        mean_exceed_frac: audits.iter().map(|r| r.exceed_frac).sum::<f64>() / k,
        passed: pass_fraction >= cfg.required,
        pass_fraction,
        audits,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsDiagConfig {
    pub d: usize,
    pub trials: usize,
    #[serde(default = "default_norm_slack")]
    pub slack: f64,
    pub seed: u64,
}

fn default_norm_slack() -> f64 {
    0.005
}

pub fn run_norms_diag(cfg: &NormsDiagConfig) -> Result<NormConcentrationReport> {
    let mut rng = derive_rng(SeedSpec::new(cfg.seed, 0));
    norm_concentration_check(cfg.d, cfg.trials, cfg.slack, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs() {
        let f = run_fingerprint_diag(&FingerprintDiagConfig {
            d: 32,
            n: 50,
            m: 0.5,
            radius: 1.0,
            trials: 200,
            seed: 1,
        })
        .unwrap();
        assert!(f.relative_error < 0.15, "{f:?}");

        let cfg: CoverDiagConfig = toml::from_str(
            "d = 4\nn_pub = 400\nalpha = 0.3\ntau = 0.3\nn_test = 200\naudits = 3\nn_fresh = 2000\nseed = 5",
        )
        .unwrap();
        let c = run_cover_diag(&cfg).unwrap();
        assert_eq!(c.audits.len(), 3);
        assert!(c.passed, "{c:?}");
        for a in &c.audits {
            assert!(a.max_emp_dist <= 0.3 * (1.0 + 1e-6));
        }

        let n = run_norms_diag(&NormsDiagConfig {
            d: 64,
            trials: 2000,
            slack: 0.005,
            seed: 2,
        })
        .unwrap();
        assert!(n.passed);
        assert!(toml::from_str::<NormsDiagConfig>("d = 1\ntrials = 1\nseed = 0\nextra = 1").is_err());
    }
}
