//! Learners: the projection learner and the cover learner that use unlabeled
//! public data, the baselines that either discard the private data or treat
//! everything as private, non-private ERM, and the two mean estimators.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::covers::{build_cover_with, CoverConfig, EmpiricalMetric, HypothesisCover};
use crate::domain::{PrivacyParams, SplitDataset};
use crate::dp::{exp_mech_select, private_mean, run_sgd, DpSgdConfig, ExpMechSpec, SgdPlan};
use crate::error::{check_dim, Error, Result};
use crate::instances::PopulationOracle;
use crate::linalg::{orthonormal_basis, project_to_ball_in_place, DEFAULT_RANK_TOL};
use crate::losses::{empirical_gradient, empirical_loss, GlmLoss, SampleLoss};
use crate::vecops::{axpy, mean_of, norm, sub};

/// Method names used in configs and CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Alg1,
    Alg2,
    PubErm,
    AllprivDpsgd,
    PubMean,
    AllprivMean,
    Erm,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Alg1,
        Method::Alg2,
        Method::PubErm,
        Method::AllprivDpsgd,
        Method::PubMean,
        Method::AllprivMean,
        Method::Erm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Alg1 => "alg1",
            Method::Alg2 => "alg2",
            Method::PubErm => "pub_erm",
            Method::AllprivDpsgd => "allpriv_dpsgd",
            Method::PubMean => "pub_mean",
            Method::AllprivMean => "allpriv_mean",
            Method::Erm => "erm",
        }
    }

    /// Mean estimators report an estimation error rather than an excess risk.
    pub fn is_mean_estimator(&self) -> bool {
        matches!(self, Method::PubMean | Method::AllprivMean)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

/// What a learner did, recorded next to its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerMeta {
    pub method: Method,
    /// Reduced dimension (projection learner) or full dimension.
    pub k: Option<usize>,
    pub cover_size: Option<f64>,
    pub sgd: Option<SgdPlan>,
    pub gamma: Option<f64>,
    /// Fingerprint of the random stream, filled in by the caller.
    pub seed: Option<u64>,
}

impl LearnerMeta {
    fn new(method: Method) -> Self {
        Self {
            method,
            k: None,
            cover_size: None,
            sgd: None,
            gamma: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerOutput {
    pub w_hat: Vec<f64>,
    pub meta: LearnerMeta,
}

/// Projects the private features onto the span of the public features, runs
/// noisy projected SGD on the reduced problem and maps the result back.
///
/// Public labels, if any, are ignored.
pub fn alg1_projected_glm<R: Rng + ?Sized>(
    ds: &SplitDataset,
    loss: &GlmLoss,
    cfg: &DpSgdConfig,
    rng: &mut R,
) -> Result<LearnerOutput> {
    if cfg.privacy.is_pure() {
        return Err(Error::DeltaZero);
    }
    if ds.n_priv() == 0 {
        return Err(Error::EmptyPrivateSet);
    }
    let basis = orthonormal_basis(&ds.public_features, ds.d, DEFAULT_RANK_TOL)?;
    let k = basis.k();
    let mut meta = LearnerMeta::new(Method::Alg1);
    meta.k = Some(k);
    if k == 0 {
        return Ok(LearnerOutput {
            w_hat: vec![0.0; ds.d],
            meta,
        });
    }
    let projected = ds
        .private_examples
        .iter()
        .map(|(x, y)| Ok((basis.project_down(x)?, *y)))
        .collect::<Result<Vec<_>>>()?;
    let radius = loss.geometry().radius();
    let plan = cfg.plan(loss, projected.len(), k, radius)?;
    let w_tilde = run_sgd(loss, &projected, radius, &plan, rng);
    meta.sgd = Some(plan);
    let mut w_hat = basis.embed_up(&w_tilde)?;
    project_to_ball_in_place(&mut w_hat, radius);
    Ok(LearnerOutput { w_hat, meta })
}

/// Builds a cover of the ball from the public features at scale `alpha`
/// and selects a candidate with the exponential mechanism on the private
/// empirical risk (pure `epsilon`-DP).
pub fn alg2_cover_expmech<R: Rng + ?Sized>(
    ds: &SplitDataset,
    loss: &GlmLoss,
    epsilon: f64,
    alpha: f64,
    cover_cfg: &CoverConfig,
    rng: &mut R,
) -> Result<LearnerOutput> {
    if ds.n_priv() == 0 {
        return Err(Error::EmptyPrivateSet);
    }
    let metric = EmpiricalMetric::new(&ds.public_features, ds.d)?;
    let cover = build_cover_with(&metric, loss.geometry().radius(), alpha, cover_cfg)?;
    alg2_with_cover(ds, loss, epsilon, &cover, rng)
}

/// The selection step of [`alg2_cover_expmech`] over a given cover.
pub fn alg2_with_cover<R: Rng + ?Sized>(
    ds: &SplitDataset,
    loss: &GlmLoss,
    epsilon: f64,
    cover: &HypothesisCover,
    rng: &mut R,
) -> Result<LearnerOutput> {
    if ds.n_priv() == 0 {
        return Err(Error::EmptyPrivateSet);
    }
    let candidates = cover
        .candidates()
        .ok_or(Error::CoverTooLarge { size: cover.size() })?;
    let scores = candidates
        .iter()
        .map(|c| empirical_loss(loss, c, &ds.private_examples))
        .collect::<Result<Vec<_>>>()?;
    let spec = ExpMechSpec::calibrated(ds.n_priv(), loss.score_scale(), epsilon)?;
    let pick = exp_mech_select(&scores, &spec, rng)?;
    let mut meta = LearnerMeta::new(Method::Alg2);
    meta.cover_size = Some(cover.size());
    meta.gamma = Some(spec.gamma());
    Ok(LearnerOutput {
        w_hat: candidates[pick].clone(),
        meta,
    })
}

/// Deterministic ERM over the labeled public rows only.
pub fn baseline_public_only_erm<L: SampleLoss + ?Sized>(
    ds: &SplitDataset,
    loss: &L,
    radius: f64,
) -> Result<LearnerOutput> {
    let data = ds.labeled_public()?;
    if data.is_empty() {
        return Err(Error::EmptyPublicSet);
    }
    let mut meta = LearnerMeta::new(Method::PubErm);
    meta.k = Some(ds.d);
    Ok(LearnerOutput {
        w_hat: minimize_empirical(loss, &data, radius)?,
        meta,
    })
}

/// Deterministic, non-private ERM over every labeled row.
pub fn erm<L: SampleLoss + ?Sized>(ds: &SplitDataset, loss: &L, radius: f64) -> Result<LearnerOutput> {
    let data = ds.all_labeled()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut meta = LearnerMeta::new(Method::Erm);
    meta.k = Some(ds.d);
    Ok(LearnerOutput {
        w_hat: minimize_empirical(loss, &data, radius)?,
        meta,
    })
}

/// Noisy projected SGD over all `n_pub + n_priv` labeled rows in `d` dimensions.
pub fn baseline_all_private_dpsgd<L: SampleLoss + ?Sized, R: Rng + ?Sized>(
    ds: &SplitDataset,
    loss: &L,
    radius: f64,
    cfg: &DpSgdConfig,
    rng: &mut R,
) -> Result<LearnerOutput> {
    let data = ds.all_labeled()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let plan = cfg.plan(loss, data.len(), ds.d, radius)?;
    let w_hat = run_sgd(loss, &data, radius, &plan, rng);
    let mut meta = LearnerMeta::new(Method::AllprivDpsgd);
    meta.k = Some(ds.d);
    meta.sgd = Some(plan);
    Ok(LearnerOutput { w_hat, meta })
}

/// Plain average of the public features.
pub fn mean_public_only(ds: &SplitDataset) -> Result<Vec<f64>> {
    if ds.public_features.is_empty() {
        return Err(Error::EmptyPublicSet);
    }
    Ok(mean_of(&ds.public_features, ds.d))
}

/// Gaussian-mechanism mean over every feature vector, public and private.
pub fn mean_all_private<R: Rng + ?Sized>(
    ds: &SplitDataset,
    radius: f64,
    privacy: PrivacyParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let points: Vec<Vec<f64>> = ds
        .public_features
        .iter()
        .cloned()
        .chain(ds.private_examples.iter().map(|(x, _)| x.clone()))
        .collect();
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    private_mean(&points, radius, privacy, rng)
}

/// `L(w_hat) - L(w*)` under the instance's closed-form population risk.
pub fn excess_risk<O: PopulationOracle + ?Sized>(w_hat: &[f64], oracle: &O) -> Result<f64> {
    check_dim(oracle.d(), w_hat.len())?;
    Ok(oracle.population_risk(w_hat)? - oracle.optimal_risk())
}

/// Deterministic minimization of the empirical risk over the ball.
///
/// Linear objectives are solved in closed form, smooth ones with restarted
/// accelerated projected gradient, and the rest with projected subgradient
/// steps keeping the best iterate.
fn minimize_empirical<L: SampleLoss + ?Sized>(
    loss: &L,
    data: &[(Vec<f64>, f64)],
    radius: f64,
) -> Result<Vec<f64>> {
    let d = data[0].0.len();
    for (x, _) in data {
        check_dim(d, x.len())?;
    }
    let objective = |w: &[f64]| empirical_loss(loss, w, data).expect("dimensions checked");
    if loss.is_linear() {
        let g = empirical_gradient(loss, &vec![0.0; d], data);
        let gn = norm(&g);
        if gn == 0.0 {
            return Ok(vec![0.0; d]);
        }
        return Ok(g.iter().map(|v| -radius * v / gn).collect());
    }
    if let Some(smooth) = loss.smoothness() {
        return Ok(accelerated_pgd(loss, data, radius, smooth, objective));
    }
    Ok(subgradient_descent(loss, data, radius, objective))
}

const ERM_TOL: f64 = 1e-8;
const ERM_MAX_ITERS: usize = 100_000;

fn accelerated_pgd<L: SampleLoss + ?Sized>(
    loss: &L,
    data: &[(Vec<f64>, f64)],
    radius: f64,
    smooth: f64,
    objective: impl Fn(&[f64]) -> f64,
) -> Vec<f64> {
    let d = data[0].0.len();
    let step = 1.0 / smooth.max(f64::MIN_POSITIVE);
    let mut w = vec![0.0; d];
    let mut y = w.clone();
    let mut f_w = objective(&w);
    let mut t = 1.0f64;
    for _ in 0..ERM_MAX_ITERS {
        let g = empirical_gradient(loss, &y, data);
        let mut next = y.clone();
        axpy(-step, &g, &mut next);
        project_to_ball_in_place(&mut next, radius);
        let f_next = objective(&next);
        // gradient-mapping norm at y
        let mapping = norm(&sub(&next, &y)) / step;
        if f_next > f_w {
            // restart momentum from the last accepted point
            y = w.clone();
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        let diff = sub(&next, &w);
        y = next.clone();
        axpy(momentum, &diff, &mut y);
        w = next;
        f_w = f_next;
        t = t_next;
        if mapping <= ERM_TOL {
            break;
        }
    }
    w
}

fn subgradient_descent<L: SampleLoss + ?Sized>(
    loss: &L,
    data: &[(Vec<f64>, f64)],
    radius: f64,
    objective: impl Fn(&[f64]) -> f64,
) -> Vec<f64> {
    let d = data[0].0.len();
    let iters = 20_000;
    let scale = radius / loss.gradient_bound().max(f64::MIN_POSITIVE);
    let mut w = vec![0.0; d];
    let mut best = w.clone();
    let mut best_f = objective(&w);
    for t in 1..=iters {
        let g = empirical_gradient(loss, &w, data);
        if norm(&g) == 0.0 {
            break;
        }
        axpy(-scale / (t as f64).sqrt(), &g, &mut w);
        project_to_ball_in_place(&mut w, radius);
        let f = objective(&w);
        if f < best_f {
            best_f = f;
            best.copy_from_slice(&w);
        }
    }
    best
}
