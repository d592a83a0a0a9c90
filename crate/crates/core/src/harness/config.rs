use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::covers::CoverConfig;
use crate::error::{Error, Result};
use crate::learners::Method;

fn one() -> f64 {
    1.0
}

fn default_signal() -> f64 {
    0.5
}

fn default_noise() -> f64 {
    0.1
}

/// Which data-generating process the trials draw from.
///
/// Fingerprint-based instances redraw the mean `mu ~ Unif([-M, M]^d)` in
/// every trial; `m` defaults to `min(1, 1/√n)` with `n = n_pub + n_priv`
/// of the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    /// Mean estimation on `D_mu`, samples of norm `radius`.
    Fingerprint {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default)]
        m: Option<f64>,
        /// Use this value for every mean coordinate instead of drawing `mu`.
        #[serde(default)]
        fixed_mu: Option<f64>,
    },
    /// `G<w, x>` over fingerprint features of norm `norm_x`, `||w|| <= radius`.
    LinearSco {
        #[serde(default = "one")]
        g: f64,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "one")]
        norm_x: f64,
        #[serde(default)]
        m: Option<f64>,
    },
    /// `(lambda/2)||w - z||^2` over fingerprint points of norm `norm_x`.
    StronglyConvex {
        #[serde(default = "one")]
        lambda: f64,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "one")]
        norm_x: f64,
        #[serde(default)]
        m: Option<f64>,
    },
    /// Absolute-loss GLM with a hidden fingerprinting code, shaped by `n_priv eps`.
    KnownMarginal {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "one")]
        norm_x: f64,
    },
    /// Squared-loss regression on a random `rank`-dimensional feature subspace.
    LowRankGlm {
        rank: usize,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "one")]
        norm_x: f64,
        #[serde(default = "default_signal")]
        signal: f64,
        #[serde(default = "default_noise")]
        noise: f64,
    },
}

impl InstanceSpec {
    pub fn name(&self) -> &'static str {
        match self {
            InstanceSpec::Fingerprint { .. } => "fingerprint",
            InstanceSpec::LinearSco { .. } => "linear_sco",
            InstanceSpec::StronglyConvex { .. } => "strongly_convex",
            InstanceSpec::KnownMarginal { .. } => "known_marginal",
            InstanceSpec::LowRankGlm { .. } => "low_rank_glm",
        }
    }

    pub fn supports(&self, method: Method) -> bool {
        match self {
            InstanceSpec::Fingerprint { .. } => method.is_mean_estimator(),
            InstanceSpec::StronglyConvex { .. } => {
                matches!(method, Method::PubErm | Method::AllprivDpsgd | Method::Erm)
            }
            _ => !method.is_mean_estimator(),
        }
    }

    /// Radius of the hypothesis ball (or of the data, for mean estimation).
    pub fn radius(&self) -> f64 {
        match *self {
            InstanceSpec::Fingerprint { radius, .. }
            | InstanceSpec::LinearSco { radius, .. }
            | InstanceSpec::StronglyConvex { radius, .. }
            | InstanceSpec::KnownMarginal { radius, .. }
            | InstanceSpec::LowRankGlm { radius, .. } => radius,
        }
    }

    pub fn norm_x(&self) -> f64 {
        match *self {
            InstanceSpec::Fingerprint { radius, .. } => radius,
            InstanceSpec::LinearSco { norm_x, .. }
            | InstanceSpec::StronglyConvex { norm_x, .. }
            | InstanceSpec::KnownMarginal { norm_x, .. }
            | InstanceSpec::LowRankGlm { norm_x, .. } => norm_x,
        }
    }

    /// Lipschitz constant used for rate overlays.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            InstanceSpec::LinearSco { g, .. } => g,
            InstanceSpec::StronglyConvex {
                lambda, radius, norm_x, ..
            } => lambda * (radius + norm_x),
            _ => 1.0,
        }
    }

    /// The fingerprint mean bound for a cell with `n` samples.
    pub fn resolved_m(&self, n: usize) -> Option<f64> {
        let m = match *self {
            InstanceSpec::Fingerprint { m, .. }
            | InstanceSpec::LinearSco { m, .. }
            | InstanceSpec::StronglyConvex { m, .. } => m,
            _ => return None,
        };
        Some(m.unwrap_or_else(|| (1.0 / (n.max(1) as f64).sqrt()).min(1.0)))
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::ConfigInvalid(format!("instance.{name} must be > 0, got {v}")))
            }
        };
        positive("radius", self.radius())?;
        positive("norm_x", self.norm_x())?;
        match *self {
            InstanceSpec::Fingerprint { m, .. }
            | InstanceSpec::LinearSco { m, .. }
            | InstanceSpec::StronglyConvex { m, .. } => {
                if let Some(m) = m {
                    if !(0.0..=1.0).contains(&m) {
                        return Err(Error::ConfigInvalid(format!("instance.m must be in [0, 1], got {m}")));
                    }
                }
            }
            _ => {}
        }
        if let InstanceSpec::Fingerprint { fixed_mu: Some(v), .. } = *self {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::ConfigInvalid(format!("instance.fixed_mu must be in [-1, 1], got {v}")));
            }
        }
        match *self {
            InstanceSpec::LinearSco { g, .. } => positive("g", g)?,
            InstanceSpec::StronglyConvex { lambda, .. } => positive("lambda", lambda)?,
            InstanceSpec::LowRankGlm {
                rank, signal, noise, ..
            } => {
                if rank == 0 {
                    return Err(Error::ConfigInvalid("instance.rank must be >= 1".into()));
                }
                if !(0.0..=1.0).contains(&signal) {
                    return Err(Error::ConfigInvalid("instance.signal must be in [0, 1]".into()));
                }
                if !(noise.is_finite() && noise >= 0.0) {
                    return Err(Error::ConfigInvalid("instance.noise must be >= 0".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Sweep axes. Give either `n_priv` or `n` (then `n_priv = n - n_pub`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axes {
    pub n_pub: Vec<usize>,
    #[serde(default)]
    pub n_priv: Option<Vec<usize>>,
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    pub d: Vec<usize>,
    pub epsilon: Vec<f64>,
}

/// Knobs shared by the learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerOptions {
    /// Cover scale for `alg2`.
    pub alpha: f64,
    pub c0: f64,
    pub steps: Option<usize>,
    pub step_size: Option<f64>,
    pub clip_norm: Option<f64>,
    pub cover: CoverConfig,
}

impl Default for LearnerOptions {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            c0: crate::dp::DpSgdConfig::DEFAULT_C0,
            steps: None,
            step_size: None,
            clip_norm: None,
            cover: CoverConfig::default(),
        }
    }
}

/// Axis used for scaling fits and plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    NPub,
    NPriv,
    N,
    D,
    Epsilon,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::NPub => "n_pub",
            Axis::NPriv => "n_priv",
            Axis::N => "n",
            Axis::D => "d",
            Axis::Epsilon => "epsilon",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Axis::NPub, Axis::NPriv, Axis::N, Axis::D, Axis::Epsilon]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown axis `{s}`")))
    }
}

/// A complete sweep description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub instance: InstanceSpec,
    pub methods: Vec<Method>,
    pub axes: Axes,
    pub delta: f64,
    pub trials: usize,
    pub base_seed: u64,
    /// CSV destination for `padp sweep`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// SVG destination; the plot's x axis is `fit` (default `n_pub`).
    #[serde(default)]
    pub plot: Option<PathBuf>,
    /// Axis for per-method scaling fits.
    #[serde(default)]
    pub fit: Option<Axis>,
    /// Rate calculator names drawn over the plot (see `rates::rate_report`).
    #[serde(default)]
    pub overlays: Vec<String>,
    #[serde(default)]
    pub learner: LearnerOptions,
    /// Worker threads; 0 uses the global pool.
    #[serde(default)]
    pub threads: usize,
    /// Record wall-clock time per trial (makes output non-reproducible).
    #[serde(default)]
    pub timing: bool,
}

/// One `(n_pub, n_priv, d, epsilon, method)` combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    pub n_pub: usize,
    pub n_priv: usize,
    pub d: usize,
    pub epsilon: f64,
    pub method: Method,
}

impl Cell {
    pub fn n(&self) -> usize {
        self.n_pub + self.n_priv
    }

    pub fn axis_value(&self, axis: Axis) -> f64 {
        match axis {
            Axis::NPub => self.n_pub as f64,
            Axis::NPriv => self.n_priv as f64,
            Axis::N => self.n() as f64,
            Axis::D => self.d as f64,
            Axis::Epsilon => self.epsilon,
        }
    }
}

impl SweepConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(s).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        self.instance.validate()?;
        if self.methods.is_empty() {
            return bad("methods must be nonempty".into());
        }
        for m in &self.methods {
            if !self.instance.supports(*m) {
                return bad(format!("method {m} does not apply to instance {}", self.instance.name()));
            }
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        let a = &self.axes;
        if a.n_pub.is_empty() || a.d.is_empty() || a.epsilon.is_empty() {
            return bad("axes must be nonempty".into());
        }
        match (&a.n_priv, &a.n) {
            (Some(v), None) | (None, Some(v)) if !v.is_empty() => {}
            (Some(_), Some(_)) => return bad("give either axes.n_priv or axes.n, not both".into()),
            _ => return bad("one of axes.n_priv or axes.n must be a nonempty list".into()),
        }
        if let Some(ns) = &a.n {
            let max_pub = a.n_pub.iter().max().copied().unwrap_or(0);
            if let Some(n) = ns.iter().find(|&&n| n < max_pub) {
                return bad(format!("axes.n value {n} is smaller than n_pub {max_pub}"));
            }
        }
        if a.d.contains(&0) {
            return bad("axes.d values must be >= 1".into());
        }
        if let Some(e) = a.epsilon.iter().find(|e| !(**e > 0.0)) {
            return bad(format!("epsilon values must be > 0, got {e}"));
        }
        if let InstanceSpec::LowRankGlm { rank, .. } = self.instance {
            if a.d.iter().any(|&d| d < rank) {
                return bad("every d must be >= instance.rank".into());
            }
        }
        let l = &self.learner;
        if !(l.alpha.is_finite() && l.alpha > 0.0) {
            return bad("learner.alpha must be > 0".into());
        }
        if !(l.c0.is_finite() && l.c0 > 0.0) {
            return bad("learner.c0 must be > 0".into());
        }
        for name in &self.overlays {
            if !OVERLAY_NAMES.contains(&name.as_str()) {
                return bad(format!("unknown overlay `{name}`; known: {}", OVERLAY_NAMES.join(", ")));
            }
        }
        Ok(())
    }

    /// Cells in config order: `n_pub`, then `n_priv` (or `n`), `d`,
    /// `epsilon`, and the method list innermost.
    pub fn cells(&self) -> Vec<Cell> {
        let a = &self.axes;
        let second: &[usize] = a.n_priv.as_deref().or(a.n.as_deref()).unwrap_or(&[]);
        let by_total = a.n.is_some();
        let mut out = Vec::new();
        for &n_pub in &a.n_pub {
            for &v in second {
                let n_priv = if by_total { v.saturating_sub(n_pub) } else { v };
                for &d in &a.d {
                    for &epsilon in &a.epsilon {
                        for &method in &self.methods {
                            out.push(Cell {
                                index: out.len(),
                                n_pub,
                                n_priv,
                                d,
                                epsilon,
                                method,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn total_trials(&self) -> usize {
        self.cells().len() * self.trials
    }
}

/// Rate calculators that can be drawn over a plot.
pub const OVERLAY_NAMES: &[&str] = &[
    "psi",
    "sco_lb",
    "sc_lb",
    "mean_lb",
    "pure_dp_lb",
    "glm_upper",
    "known_marginal_lb",
    "optimistic_rate_realizable",
];

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
methods = ["pub_mean", "allpriv_mean"]
delta = 1e-5
trials = 3
base_seed = 11

[instance]
kind = "fingerprint"
radius = 1.0

[axes]
n_pub = [10, 50]
n = [200]
d = [8]
epsilon = [0.5, 1.0]
"#;

    #[test]
    fn parses_and_enumerates_cells() {
        let cfg = SweepConfig::from_toml_str(BASIC).unwrap();
        let cells = cfg.cells();
        assert_eq!(cells.len(), 2 * 2 * 2);
        assert_eq!(cells[0].n_priv, 190);
        assert_eq!(cells[4].n_pub, 50);
        assert_eq!(cells[4].n_priv, 150);
        assert_eq!(cells[1].method, Method::AllprivMean);
        assert!(cells.iter().enumerate().all(|(i, c)| c.index == i));
        assert_eq!(cfg.total_trials(), 24);
        let again = SweepConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let extra = BASIC.replace("trials = 3", "trials = 3\nbogus = 1");
        assert!(matches!(SweepConfig::from_toml_str(&extra), Err(Error::ConfigInvalid(_))));
        let extra = BASIC.replace("radius = 1.0", "radius = 1.0\nwidth = 2");
        assert!(SweepConfig::from_toml_str(&extra).is_err());
        assert!(SweepConfig::from_toml_str(&BASIC.replace("trials = 3", "trials = 0")).is_err());
        assert!(SweepConfig::from_toml_str(&BASIC.replace("n_pub = [10, 50]", "n_pub = []")).is_err());
        assert!(SweepConfig::from_toml_str(&BASIC.replace("n = [200]", "n = [20]")).is_err());
        assert!(SweepConfig::from_toml_str(&BASIC.replace("n = [200]", "n = [200]\nn_priv = [3]")).is_err());
        assert!(SweepConfig::from_toml_str(&BASIC.replace("\"pub_mean\", ", "\"alg1\", ")).is_err());
        assert!(SweepConfig::from_toml_str(&BASIC.replace("kind = \"fingerprint\"", "kind = \"nope\"")).is_err());
        assert!(SweepConfig::from_toml_str(&BASIC.replace("delta = 1e-5", "delta = 0.0")).is_err());
        assert!(SweepConfig::from_toml_str(&format!("overlays = [\"zzz\"]\n{BASIC}")).is_err());
        assert!(SweepConfig::from_toml_str(&format!("overlays = [\"mean_lb\"]\n{BASIC}")).is_ok());
    }

    #[test]
    fn default_m_shrinks_with_n() {
        let spec = InstanceSpec::LinearSco {
            g: 1.0,
            radius: 1.0,
            norm_x: 1.0,
            m: None,
        };
        assert_eq!(spec.resolved_m(400), Some(0.05));
        assert_eq!(spec.resolved_m(0), Some(1.0));
        let fixed = InstanceSpec::Fingerprint {
            radius: 1.0,
            m: Some(0.3),
            fixed_mu: None,
        };
        assert_eq!(fixed.resolved_m(10_000), Some(0.3));
        assert_eq!(InstanceSpec::KnownMarginal { radius: 1.0, norm_x: 1.0 }.resolved_m(5), None);
    }
}
