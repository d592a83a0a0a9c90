//! Differentially private mechanisms: the Gaussian mechanism, the
//! exponential mechanism over a finite candidate set, and noisy projected
//! SGD used as the private subroutine of the projection learner.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::domain::PrivacyParams;
use crate::error::{check_dim, Error, Result};
use crate::linalg::project_to_ball_in_place;
use crate::losses::SampleLoss;
use crate::vecops::{axpy, clip_norm, scale};

/// Gaussian mechanism calibrated as `sigma = Delta sqrt(2 ln(1.25/delta)) / epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMechanismSpec {
    l2_sensitivity: f64,
    privacy: PrivacyParams,
    sigma: f64,
}

impl GaussianMechanismSpec {
    pub fn new(l2_sensitivity: f64, privacy: PrivacyParams) -> Result<Self> {
        if privacy.is_pure() {
            return Err(Error::DeltaZero);
        }
        if !(l2_sensitivity.is_finite() && l2_sensitivity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "l2 sensitivity must be > 0, got {l2_sensitivity}"
            )));
        }
        Ok(Self {
            l2_sensitivity,
            privacy,
            sigma: gaussian_sigma(l2_sensitivity, privacy.epsilon(), privacy.delta()),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn l2_sensitivity(&self) -> f64 {
        self.l2_sensitivity
    }

    pub fn privacy(&self) -> PrivacyParams {
        self.privacy
    }
}

/// `Delta sqrt(2 ln(1.25/delta)) / epsilon`; zero when `epsilon` is infinite.
pub fn gaussian_sigma(l2_sensitivity: f64, epsilon: f64, delta: f64) -> f64 {
    if epsilon.is_infinite() {
        return 0.0;
    }
    l2_sensitivity * (2.0 * (1.25 / delta).ln()).sqrt() / epsilon
}

/// Returns `v + N(0, sigma^2 I)`.
pub fn gaussian_mechanism<R: Rng + ?Sized>(
    v: &[f64],
    spec: &GaussianMechanismSpec,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = v.to_vec();
    add_gaussian_noise(&mut out, spec.sigma, rng);
    out
}

fn add_gaussian_noise<R: Rng + ?Sized>(v: &mut [f64], sigma: f64, rng: &mut R) {
    if sigma > 0.0 {
        for x in v.iter_mut() {
            *x += sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
}

/// Exponential mechanism `p(i) ∝ exp(-gamma * score_i)` over empirical losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpMechSpec {
    score_sensitivity: f64,
    gamma: f64,
    epsilon: f64,
}

impl ExpMechSpec {
    /// Default calibration for empirical-risk scores over `n_priv` examples:
    /// sensitivity `2 s / n_priv` and `gamma = n_priv epsilon / (4 s)`, where
    /// `s = min(B, G R)`.
    pub fn calibrated(n_priv: usize, score_scale: f64, epsilon: f64) -> Result<Self> {
        if n_priv == 0 {
            return Err(Error::EmptyPrivateSet);
        }
        if !(score_scale.is_finite() && score_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "score scale must be > 0, got {score_scale}"
            )));
        }
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be > 0, got {epsilon}"
            )));
        }
        let n = n_priv as f64;
        Ok(Self {
            score_sensitivity: 2.0 * score_scale / n,
            gamma: n * epsilon / (4.0 * score_scale),
            epsilon,
        })
    }

    /// Explicit exponent; the spec is checked against `2 gamma Delta <= epsilon`.
    pub fn with_gamma(gamma: f64, score_sensitivity: f64, epsilon: f64) -> Result<Self> {
        if gamma.is_nan() || gamma < 0.0 {
            return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
        }
        let spec = Self {
            score_sensitivity,
            gamma,
            epsilon,
        };
        if !spec.satisfies_dp() {
            return Err(Error::InvalidParameter(format!(
                "2 * gamma * sensitivity = {} exceeds epsilon = {epsilon}",
                2.0 * gamma * score_sensitivity
            )));
        }
        Ok(spec)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn score_sensitivity(&self) -> f64 {
        self.score_sensitivity
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn satisfies_dp(&self) -> bool {
        if self.epsilon.is_infinite() {
            return true;
        }
        2.0 * self.gamma * self.score_sensitivity <= self.epsilon * (1.0 + 1e-12)
    }
}

/// Samples an index with probability proportional to `exp(-gamma * score)`.
///
/// Gumbel-max over max-subtracted log-weights; an infinite `gamma` picks
/// uniformly among the minimizers.
pub fn exp_mech_select<R: Rng + ?Sized>(
    scores: &[f64],
    spec: &ExpMechSpec,
    rng: &mut R,
) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score {bad}")));
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let gamma = spec.gamma;
    if gamma.is_infinite() {
        let argmins: Vec<usize> = scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == min)
            .map(|(i, _)| i)
            .collect();
        return Ok(argmins[rng.random_range(0..argmins.len())]);
    }
    let mut best = 0;
    let mut best_key = f64::NEG_INFINITY;
    for (i, &s) in scores.iter().enumerate() {
        let log_weight = -gamma * (s - min);
        let key = log_weight + gumbel(rng);
        if key > best_key {
            best_key = key;
            best = i;
        }
    }
    Ok(best)
}

fn gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // open interval (0, 1) keeps both logs finite
    let u: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    -(-u.ln()).ln()
}

/// Noisy projected SGD settings.
///
/// `steps` defaults to the number of examples; `step_size` defaults to
/// `D / sqrt(T (C^2 + k sigma^2))`; `clip_norm` defaults to the loss's
/// gradient bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpSgdConfig {
    pub steps: Option<usize>,
    pub step_size: Option<f64>,
    pub c0: f64,
    pub clip_norm: Option<f64>,
    pub privacy: PrivacyParams,
}

impl DpSgdConfig {
    pub const DEFAULT_C0: f64 = 2.0;

    pub fn new(privacy: PrivacyParams) -> Self {
        Self {
            steps: None,
            step_size: None,
            c0: Self::DEFAULT_C0,
            clip_norm: None,
            privacy,
        }
    }

    /// Resolves defaults for a run over `n` examples in `dim` dimensions.
    pub fn plan<L: SampleLoss + ?Sized>(
        &self,
        loss: &L,
        n: usize,
        dim: usize,
        radius: f64,
    ) -> Result<SgdPlan> {
        if self.privacy.is_pure() {
            return Err(Error::DeltaZero);
        }
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if !(self.c0.is_finite() && self.c0 > 0.0) {
            return Err(Error::InvalidParameter(format!("c0 must be > 0, got {}", self.c0)));
        }
        let steps = self.steps.unwrap_or(n);
        let clip = self.clip_norm.unwrap_or_else(|| loss.gradient_bound());
        if !(clip.is_finite() && clip > 0.0) {
            return Err(Error::InvalidParameter(format!("clip norm must be > 0, got {clip}")));
        }
        let sigma_step = sgd_noise_std(self.c0, clip, steps, n, self.privacy);
        let step_size = match self.step_size {
            Some(eta) if eta.is_finite() && eta > 0.0 => eta,
            Some(eta) => {
                return Err(Error::InvalidParameter(format!("step size must be > 0, got {eta}")))
            }
            None => {
                let t = steps.max(1) as f64;
                radius / (t * (clip * clip + dim as f64 * sigma_step * sigma_step)).sqrt()
            }
        };
        Ok(SgdPlan {
            steps,
            step_size,
            clip_norm: clip,
            sigma_step,
            c0: self.c0,
        })
    }
}

/// Per-step noise `c0 C sqrt(T ln(1/delta)) / (n epsilon)`.
pub fn sgd_noise_std(c0: f64, clip: f64, steps: usize, n: usize, privacy: PrivacyParams) -> f64 {
    if privacy.epsilon().is_infinite() {
        return 0.0;
    }
    c0 * clip * (steps as f64 * (1.0 / privacy.delta()).ln()).sqrt()
        / (n as f64 * privacy.epsilon())
}

/// Fully resolved SGD parameters, recorded with learner output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdPlan {
    pub steps: usize,
    pub step_size: f64,
    pub clip_norm: f64,
    pub sigma_step: f64,
    pub c0: f64,
}

/// Noisy projected SGD over the ball of radius `radius`, started at the
/// origin. Each step samples one example, clips its gradient, adds
/// `N(0, sigma_step^2 I)`, steps and projects. Returns the uniform average
/// of the iterates.
pub fn noisy_projected_sgd<L: SampleLoss + ?Sized, R: Rng + ?Sized>(
    loss: &L,
    data: &[(Vec<f64>, f64)],
    radius: f64,
    cfg: &DpSgdConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let dim = data.first().map(|(x, _)| x.len()).ok_or(Error::EmptyDataset)?;
    for (x, _) in data {
        check_dim(dim, x.len())?;
    }
    let plan = cfg.plan(loss, data.len(), dim, radius)?;
    Ok(run_sgd(loss, data, radius, &plan, rng))
}

pub(crate) fn run_sgd<L: SampleLoss + ?Sized, R: Rng + ?Sized>(
    loss: &L,
    data: &[(Vec<f64>, f64)],
    radius: f64,
    plan: &SgdPlan,
    rng: &mut R,
) -> Vec<f64> {
    let dim = data[0].0.len();
    let mut w = vec![0.0; dim];
    if plan.steps == 0 {
        return w;
    }
    let mut avg = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for _ in 0..plan.steps {
        let (x, y) = &data[rng.random_range(0..data.len())];
        loss.gradient_into(&w, x, *y, &mut g);
        clip_norm(&mut g, plan.clip_norm);
        add_gaussian_noise(&mut g, plan.sigma_step, rng);
        axpy(-plan.step_size, &g, &mut w);
        project_to_ball_in_place(&mut w, radius);
        axpy(1.0, &w, &mut avg);
    }
    scale(1.0 / plan.steps as f64, &mut avg);
    // averaging feasible points stays feasible up to rounding
    project_to_ball_in_place(&mut avg, radius);
    avg
}

/// Gaussian-mechanism mean of points clipped to norm `radius`, with
/// sensitivity `2 radius / n`.
pub fn private_mean<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    radius: f64,
    privacy: PrivacyParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if privacy.is_pure() {
        return Err(Error::DeltaZero);
    }
    let d = points.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
    let n = points.len() as f64;
    let mut mean = vec![0.0; d];
    let mut buf = vec![0.0; d];
    for p in points {
        check_dim(d, p.len())?;
        buf.copy_from_slice(p);
        clip_norm(&mut buf, radius);
        axpy(1.0 / n, &buf, &mut mean);
    }
    let spec = GaussianMechanismSpec::new(2.0 * radius / n, privacy)?;
    Ok(gaussian_mechanism(&mean, &spec, rng))
}
