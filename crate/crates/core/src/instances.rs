//! Hard-instance generators with closed-form population risks, and the
//! fingerprinting diagnostics built on them.
//!
//! All fingerprint-type samples live on the scaled cube `{±R/√d}^d`, so each
//! has norm exactly `R`. Correlation statistics are reported in the unscaled
//! `{±1}` coordinates.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::orthonormal_basis;
use crate::losses::{GlmFamily, GlmLoss, SampleLoss, StronglyConvexLoss};
use crate::vecops::{axpy, dot, gaussian_vec, norm, sub, uniform_on_sphere};
use crate::ProblemGeometry;

/// Closed-form population risk of an instance under its own loss.
pub trait PopulationOracle {
    fn d(&self) -> usize;

    fn population_risk(&self, w: &[f64]) -> Result<f64>;

    /// A minimizer of the population risk over the instance's ball.
    fn minimizer(&self) -> Vec<f64>;

    fn optimal_risk(&self) -> f64 {
        self.population_risk(&self.minimizer())
            .expect("minimizer has the instance dimension")
    }
}

/// How a fingerprint sample of size `n` is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    Iid,
    /// `ceil(n / k)` i.i.d. base points, each repeated `k` times, truncated to `n`.
    Copies(usize),
}

/// The product distribution on `(R/√d){±1}^d` with mean `(R/√d) mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintInstance {
    d: usize,
    m: f64,
    radius: f64,
    mu: Vec<f64>,
    mode: SamplingMode,
}

impl FingerprintInstance {
    /// Draws `mu ~ Unif([-m, m]^d)`.
    pub fn new<R: Rng + ?Sized>(d: usize, m: f64, radius: f64, rng: &mut R) -> Result<Self> {
        check_m(m)?;
        let mu = (0..d)
            .map(|_| if m == 0.0 { 0.0 } else { rng.random_range(-m..=m) })
            .collect();
        Self::with_mu(m, radius, mu)
    }

    pub fn with_mu(m: f64, radius: f64, mu: Vec<f64>) -> Result<Self> {
        check_m(m)?;
        if mu.is_empty() {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be > 0, got {radius}")));
        }
        if let Some(bad) = mu.iter().find(|v| v.abs() > 1.0 || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("mean coordinate {bad} outside [-1, 1]")));
        }
        Ok(Self {
            d: mu.len(),
            m,
            radius,
            mu,
            mode: SamplingMode::Iid,
        })
    }

    pub fn with_mode(mut self, mode: SamplingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The mean in unscaled `{±1}` coordinates.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    fn unit(&self) -> f64 {
        self.radius / (self.d as f64).sqrt()
    }

    /// The population mean `(R/√d) mu`.
    pub fn mu_scaled(&self) -> Vec<f64> {
        let s = self.unit();
        self.mu.iter().map(|m| s * m).collect()
    }

    fn draw_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let s = self.unit();
        self.mu
            .iter()
            .map(|&m| {
                if rng.random::<f64>() < (1.0 + m) / 2.0 {
                    s
                } else {
                    -s
                }
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        match self.mode {
            SamplingMode::Iid => (0..n).map(|_| self.draw_one(rng)).collect(),
            SamplingMode::Copies(k) => {
                let k = k.max(1);
                let mut out = Vec::with_capacity(n);
                while out.len() < n {
                    let base = self.draw_one(rng);
                    for _ in 0..k.min(n - out.len()) {
                        out.push(base.clone());
                    }
                }
                out
            }
        }
    }
}

fn check_m(m: f64) -> Result<()> {
    if (0.0..=1.0).contains(&m) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("M must be in [0, 1], got {m}")))
    }
}

/// `sum_i <a - mu, x_i - mu>` in the unscaled `{±1}` coordinates: every
/// input is multiplied by `√d / radius` before the inner products.
pub fn correlation_statistic(
    estimate: &[f64],
    samples: &[Vec<f64>],
    mu_scaled: &[f64],
    radius: f64,
) -> Result<f64> {
    let d = mu_scaled.len();
    check_dim(d, estimate.len())?;
    let s = (d as f64).sqrt() / radius;
    let a = sub(estimate, mu_scaled);
    let mut total = 0.0;
    for x in samples {
        check_dim(d, x.len())?;
        total += dot(&a, &sub(x, mu_scaled));
    }
    Ok(total * s * s)
}

/// Clamps every coordinate to `[-m, m]`.
pub fn coordinate_clip(v: &[f64], m: f64) -> Vec<f64> {
    v.iter().map(|x| x.clamp(-m, m)).collect()
}

/// Linear loss `G<w, x>` over fingerprint data; labels are all 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScoInstance {
    pub fingerprint: FingerprintInstance,
    pub g: f64,
    pub radius: f64,
}

impl LinearScoInstance {
    pub fn geometry(&self) -> Result<ProblemGeometry> {
        ProblemGeometry::linear(self.radius, self.fingerprint.radius)
    }

    pub fn loss(&self) -> Result<GlmLoss> {
        GlmLoss::linear(self.g, self.geometry()?, 1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(Vec<f64>, f64)> {
        self.fingerprint.sample(n, rng).into_iter().map(|x| (x, 1.0)).collect()
    }
}

impl PopulationOracle for LinearScoInstance {
    fn d(&self) -> usize {
        self.fingerprint.d
    }

    fn population_risk(&self, w: &[f64]) -> Result<f64> {
        check_dim(self.fingerprint.d, w.len())?;
        Ok(self.g * dot(w, &self.fingerprint.mu_scaled()))
    }

    fn minimizer(&self) -> Vec<f64> {
        let mu = self.fingerprint.mu_scaled();
        let n = norm(&mu);
        if n == 0.0 {
            return vec![0.0; mu.len()];
        }
        mu.iter().map(|m| -self.radius * m / n).collect()
    }
}

/// `(lambda/2)||w - z||^2` over fingerprint data; the example's feature
/// slot carries `z` and its label is unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StronglyConvexInstance {
    pub fingerprint: FingerprintInstance,
    pub lambda: f64,
    pub radius: f64,
}

impl StronglyConvexInstance {
    pub fn loss(&self) -> Result<StronglyConvexLoss> {
        StronglyConvexLoss::new(self.lambda, self.radius, self.fingerprint.radius)
    }

    /// Lipschitz constant `lambda (D + R)` over the ball.
    pub fn g(&self) -> f64 {
        self.lambda * (self.radius + self.fingerprint.radius)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(Vec<f64>, f64)> {
        self.fingerprint.sample(n, rng).into_iter().map(|x| (x, 0.0)).collect()
    }
}

impl PopulationOracle for StronglyConvexInstance {
    fn d(&self) -> usize {
        self.fingerprint.d
    }

    /// `(lambda/2)(||w - mu||^2 + R^2 - ||mu||^2)`.
    fn population_risk(&self, w: &[f64]) -> Result<f64> {
        check_dim(self.fingerprint.d, w.len())?;
        let mu = self.fingerprint.mu_scaled();
        let r = self.fingerprint.radius;
        let dist2 = sub(w, &mu).iter().map(|v| v * v).sum::<f64>();
        Ok(0.5 * self.lambda * (dist2 + r * r - dot(&mu, &mu)))
    }

    fn minimizer(&self) -> Vec<f64> {
        crate::linalg::project_to_ball(&self.fingerprint.mu_scaled(), self.radius)
    }
}

/// Absolute-loss GLM with a known feature marginal and a hidden code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownMarginalGlmInstance {
    d: usize,
    d_prime: usize,
    p: f64,
    radius: f64,
    norm_x: f64,
    code_mean: Vec<f64>,
    code: Vec<f64>,
}

impl KnownMarginalGlmInstance {
    /// `d' = min(d, ceil(n eps))`, `p = min(1, d'/(n eps))`; the code mean
    /// has `Beta(1/16, 1/16)` coordinates and the code is drawn from it.
    pub fn new<R: Rng + ?Sized>(
        d: usize,
        n: usize,
        epsilon: f64,
        radius: f64,
        norm_x: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::InvalidParameter("d and n must be >= 1".into()));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be finite and > 0, got {epsilon}")));
        }
        let (d_prime, p) = known_marginal_shape(d, n, epsilon);
        let code_mean: Vec<f64> = (0..d_prime)
            .map(|_| sample_beta_small(0.0625, 0.0625, rng))
            .collect();
        let code = code_mean
            .iter()
            .map(|&m| if rng.random::<f64>() < m { 1.0 } else { 0.0 })
            .collect();
        Self::with_code(d, p, radius, norm_x, code_mean, code)
    }

    /// Builds an instance from an explicit code of length `d'`.
    pub fn with_code(
        d: usize,
        p: f64,
        radius: f64,
        norm_x: f64,
        code_mean: Vec<f64>,
        code: Vec<f64>,
    ) -> Result<Self> {
        let d_prime = code.len();
        if d_prime == 0 || d_prime > d || code_mean.len() != d_prime {
            return Err(Error::InvalidParameter(format!(
                "code length {d_prime} must be in 1..={d} and match its mean"
            )));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!("p must be in (0, 1], got {p}")));
        }
        Ok(Self {
            d,
            d_prime,
            p,
            radius,
            norm_x,
            code_mean,
            code,
        })
    }

    pub fn d_prime(&self) -> usize {
        self.d_prime
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The realized code `z` in `{0,1}^{d'}`.
    pub fn code(&self) -> &[f64] {
        &self.code
    }

    pub fn code_mean(&self) -> &[f64] {
        &self.code_mean
    }

    pub fn label_bound(&self) -> f64 {
        self.radius * self.norm_x / (self.d_prime as f64).sqrt()
    }

    pub fn geometry(&self) -> Result<ProblemGeometry> {
        ProblemGeometry::linear(self.radius, self.norm_x)
    }

    pub fn loss(&self) -> Result<GlmLoss> {
        GlmLoss::new(GlmFamily::Absolute, self.geometry()?, self.label_bound())
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(Vec<f64>, f64)> {
        (0..n)
            .map(|_| {
                let mut x = vec![0.0; self.d];
                let mut y = 0.0;
                if rng.random::<f64>() < self.p {
                    let j = rng.random_range(0..self.d_prime);
                    x[j] = self.norm_x;
                    y = self.label_bound() * self.code[j];
                }
                (x, y)
            })
            .collect()
    }
}

/// `(d', p)` for the known-marginal construction.
pub fn known_marginal_shape(d: usize, n: usize, epsilon: f64) -> (usize, f64) {
    let n_eps = n as f64 * epsilon;
    let d_prime = d.min(n_eps.ceil().max(1.0) as usize);
    (d_prime, (d_prime as f64 / n_eps).min(1.0))
}

/// Convenience wrapper matching the other generators.
pub fn sample_known_marginal<R: Rng + ?Sized>(
    inst: &KnownMarginalGlmInstance,
    n: usize,
    rng: &mut R,
) -> Vec<(Vec<f64>, f64)> {
    inst.sample(n, rng)
}

impl PopulationOracle for KnownMarginalGlmInstance {
    fn d(&self) -> usize {
        self.d
    }

    /// `(p/d') sum_j ||X|| |D z_j/√d' - w_j|`; a zero feature has zero loss.
    fn population_risk(&self, w: &[f64]) -> Result<f64> {
        check_dim(self.d, w.len())?;
        let scale = self.radius / (self.d_prime as f64).sqrt();
        let s: f64 = self
            .code
            .iter()
            .zip(w)
            .map(|(&z, &wj)| (scale * z - wj).abs())
            .sum();
        Ok(self.p * self.norm_x * s / self.d_prime as f64)
    }

    fn minimizer(&self) -> Vec<f64> {
        let scale = self.radius / (self.d_prime as f64).sqrt();
        let mut w = vec![0.0; self.d];
        for (wj, z) in w.iter_mut().zip(&self.code) {
            *wj = scale * z;
        }
        w
    }
}

/// Beta sample via the gamma ratio, computed in log space so that tiny
/// shape parameters do not underflow to `0/0`.
pub fn sample_beta_small<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let lg1 = log_gamma_sample(a, rng);
    let lg2 = log_gamma_sample(b, rng);
    1.0 / (1.0 + (lg2 - lg1).exp())
}

/// `ln G` for `G ~ Gamma(shape, 1)`, using `G = G' U^{1/shape}` with
/// `G' ~ Gamma(shape + 1, 1)` when `shape < 1`.
fn log_gamma_sample<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("positive shape");
        return g.sample(rng).ln();
    }
    let g = Gamma::new(shape + 1.0, 1.0).expect("positive shape");
    let u: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    g.sample(rng).ln() + u.ln() / shape
}

/// Squared-loss GLM whose features fill a random `rank`-dimensional
/// subspace: `x = ||X|| Q z` with `z` uniform on the unit sphere of
/// `R^rank`, and `y = <w_true, x> + xi` with `xi ~ Unif[-b, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankGlmInstance {
    d: usize,
    /// Orthonormal columns of `Q`.
    basis: Vec<Vec<f64>>,
    w_true: Vec<f64>,
    radius: f64,
    norm_x: f64,
    noise: f64,
}

impl LowRankGlmInstance {
    /// Random subspace; `w_true` is a random direction in it with norm
    /// `signal * D`.
    pub fn new<R: Rng + ?Sized>(
        d: usize,
        rank: usize,
        radius: f64,
        norm_x: f64,
        signal: f64,
        noise: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if rank == 0 || rank > d {
            return Err(Error::InvalidParameter(format!("rank must be in 1..={d}, got {rank}")));
        }
        if !(0.0..=1.0).contains(&signal) {
            return Err(Error::InvalidParameter(format!("signal must be in [0, 1], got {signal}")));
        }
        if !(noise.is_finite() && noise >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise must be >= 0, got {noise}")));
        }
        let basis = loop {
            let raw: Vec<Vec<f64>> = (0..rank).map(|_| gaussian_vec(rng, d)).collect();
            let b = orthonormal_basis(&raw, d, 1e-8)?;
            if b.k() == rank {
                break b.columns().to_vec();
            }
        };
        let dir = uniform_on_sphere(rng, rank, signal * radius);
        let mut w_true = vec![0.0; d];
        for (q, c) in basis.iter().zip(&dir) {
            axpy(*c, q, &mut w_true);
        }
        Ok(Self {
            d,
            basis,
            w_true,
            radius,
            norm_x,
            noise,
        })
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn w_true(&self) -> &[f64] {
        &self.w_true
    }

    pub fn label_bound(&self) -> f64 {
        norm(&self.w_true) * self.norm_x + self.noise
    }

    pub fn geometry(&self) -> Result<ProblemGeometry> {
        ProblemGeometry::linear(self.radius, self.norm_x)
    }

    pub fn loss(&self) -> Result<GlmLoss> {
        GlmLoss::new(GlmFamily::Squared, self.geometry()?, self.label_bound())
    }

    pub fn sample_features<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                let z = uniform_on_sphere(rng, self.rank(), self.norm_x);
                let mut x = vec![0.0; self.d];
                for (q, c) in self.basis.iter().zip(&z) {
                    axpy(*c, q, &mut x);
                }
                x
            })
            .collect()
    }

    pub fn label<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> f64 {
        let xi = if self.noise > 0.0 {
            rng.random_range(-self.noise..=self.noise)
        } else {
            0.0
        };
        dot(&self.w_true, x) + xi
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(Vec<f64>, f64)> {
        self.sample_features(n, rng)
            .into_iter()
            .map(|x| {
                let y = self.label(&x, rng);
                (x, y)
            })
            .collect()
    }
}

impl PopulationOracle for LowRankGlmInstance {
    fn d(&self) -> usize {
        self.d
    }

    /// `(||X||^2/r) ||Q^T (w - w_true)||^2 + b^2/3`.
    fn population_risk(&self, w: &[f64]) -> Result<f64> {
        check_dim(self.d, w.len())?;
        let diff = sub(w, &self.w_true);
        let proj: f64 = self.basis.iter().map(|q| dot(q, &diff).powi(2)).sum();
        Ok(self.norm_x * self.norm_x / self.rank() as f64 * proj + self.noise * self.noise / 3.0)
    }

    fn minimizer(&self) -> Vec<f64> {
        self.w_true.clone()
    }
}

/// Monte Carlo estimate `(mean, standard error)` of a population risk.
pub fn monte_carlo_risk<L, F, R>(loss: &L, w: &[f64], n: usize, mut draw: F, rng: &mut R) -> (f64, f64)
where
    L: SampleLoss + ?Sized,
    F: FnMut(&mut R) -> (Vec<f64>, f64),
    R: Rng + ?Sized,
{
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n {
        let (x, y) = draw(rng);
        let v = loss.value(w, &x, y);
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    (mean, (var / n as f64).sqrt())
}

/// Outcome of the norm-concentration check for `z ~ Unif([-1,1]^d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormConcentrationReport {
    pub d: usize,
    pub n_trials: usize,
    pub gamma: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass_rate: f64,
    /// Pass rate of the same-width interval centred at `√(2d/3)`.
    pub pass_rate_at_2d3: f64,
    pub mean_sq_norm: f64,
    pub expected_sq_norm: f64,
    pub passed: bool,
}

/// Fraction of draws whose norm lies in `√(d/3) ± √(3 ln(1/gamma))/2`, for
/// `gamma = 0.01`; the check passes at rate `>= 0.99 - slack`.
///
/// `E z_1^2 = 1/3`, so the interval is centred at `√(d/3)`. The rate for an
/// interval centred at `√(2d/3)` is reported alongside for comparison; it
/// collapses to zero once `d` is moderately large.
pub fn norm_concentration_check<R: Rng + ?Sized>(
    d: usize,
    n_trials: usize,
    slack: f64,
    rng: &mut R,
) -> Result<NormConcentrationReport> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be >= 1".into()));
    }
    let gamma: f64 = 0.01;
    let center = (d as f64 / 3.0).sqrt();
    let alt_center = (2.0 * d as f64 / 3.0).sqrt();
    let half = (3.0 * (1.0 / gamma).ln()).sqrt() / 2.0;
    let (lower, upper) = (center - half, center + half);
    let mut inside = 0usize;
    let mut inside_alt = 0usize;
    let mut sum_sq = 0.0;
    for _ in 0..n_trials {
        let sq: f64 = (0..d)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..=1.0);
                z * z
            })
            .sum();
        sum_sq += sq;
        let nz = sq.sqrt();
        if nz >= lower && nz <= upper {
            inside += 1;
        }
        if (nz - alt_center).abs() <= half {
            inside_alt += 1;
        }
    }
    let n = n_trials.max(1) as f64;
    let pass_rate = inside as f64 / n;
    Ok(NormConcentrationReport {
        d,
        n_trials,
        gamma,
        lower,
        upper,
        pass_rate,
        pass_rate_at_2d3: inside_alt as f64 / n,
        mean_sq_norm: sum_sq / n,
        expected_sq_norm: d as f64 / 3.0,
        passed: pass_rate >= 1.0 - gamma - slack,
    })
}

/// Empirical-mean correlation diagnostic on fingerprint instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerprintReport {
    pub d: usize,
    pub n: usize,
    pub m: f64,
    pub trials: usize,
    /// Mean of `sum_i Z_i` over trials.
    pub mean_correlation: f64,
    pub correlation_stderr: f64,
    /// `d (1 - M^2/3)`, the expectation for the empirical mean.
    pub oracle: f64,
    /// Mean of `||a - mu||` in unscaled coordinates.
    pub alpha: f64,
    /// `2d/3 - alpha √d / M - 2 M √d alpha`.
    pub floor: f64,
}

/// Runs the empirical-mean estimator on fresh `D_mu` instances (`mu` redrawn
/// per trial) and compares the correlation statistic with its expectation
/// and with the accuracy-dependent floor.
pub fn fingerprint_correlation_diagnostic<R: Rng + ?Sized>(
    d: usize,
    n: usize,
    m: f64,
    radius: f64,
    trials: usize,
    rng: &mut R,
) -> Result<FingerprintReport> {
    if trials == 0 || n == 0 {
        return Err(Error::InvalidParameter("trials and n must be >= 1".into()));
    }
    if m <= 0.0 {
        return Err(Error::InvalidParameter("M must be > 0 for the floor".into()));
    }
    let unscale = (d as f64).sqrt() / radius;
    let mut zs = Vec::with_capacity(trials);
    let mut alpha_sum = 0.0;
    for _ in 0..trials {
        let inst = FingerprintInstance::new(d, m, radius, rng)?;
        let samples = inst.sample(n, rng);
        let mut est = vec![0.0; d];
        for x in &samples {
            axpy(1.0 / n as f64, x, &mut est);
        }
        let mu = inst.mu_scaled();
        zs.push(correlation_statistic(&est, &samples, &mu, radius)?);
        alpha_sum += norm(&sub(&est, &mu)) * unscale;
    }
    let t = trials as f64;
    let mean = zs.iter().sum::<f64>() / t;
    let var = if trials > 1 {
        zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (t - 1.0)
    } else {
        0.0
    };
    let alpha = alpha_sum / t;
    let df = d as f64;
    Ok(FingerprintReport {
        d,
        n,
        m,
        trials,
        mean_correlation: mean,
        correlation_stderr: (var / t).sqrt(),
        oracle: df * (1.0 - m * m / 3.0),
        alpha,
        floor: 2.0 * df / 3.0 - alpha * df.sqrt() / m - 2.0 * m * df.sqrt() * alpha,
    })
}
