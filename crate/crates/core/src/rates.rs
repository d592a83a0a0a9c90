//! Closed-form rate calculators.
//!
//! Every formula is evaluated with unit leading constants and natural logs;
//! the values are for shape and slope overlays, not absolute thresholds.
//! The only exposed constant is `c_univ`, the regime constant of the
//! public/private lower bound.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Label written next to every report so readers know the constants are 1.
pub const CONSTANT_CONVENTION: &str = "unit_constants";

fn one() -> f64 {
    1.0
}

fn default_beta() -> f64 {
    0.05
}

/// Problem sizes, privacy level and problem constants for the calculators.
///
/// `n` may be omitted; it defaults to `n_pub + n_priv` and is rejected if
/// given inconsistently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateQuery {
    pub n_pub: u64,
    pub n_priv: u64,
    #[serde(default)]
    pub n: Option<u64>,
    pub d: u64,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(rename = "G", default = "one")]
    pub g: f64,
    #[serde(rename = "D", default = "one")]
    pub d_radius: f64,
    #[serde(rename = "norm_X", default = "one")]
    pub norm_x: f64,
    #[serde(rename = "B", default = "one")]
    pub b: f64,
    #[serde(rename = "H", default = "one")]
    pub h: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(rename = "R", default = "one")]
    pub r: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "one")]
    pub c_univ: f64,
}

impl RateQuery {
    /// Query with unit problem constants, β = 0.05 and c_univ = 1.
    pub fn new(n_pub: u64, n_priv: u64, d: u64, epsilon: f64, delta: f64) -> Self {
        Self {
            n_pub,
            n_priv,
            n: None,
            d,
            epsilon,
            delta,
            g: 1.0,
            d_radius: 1.0,
            norm_x: 1.0,
            b: 1.0,
            h: 1.0,
            lambda: 1.0,
            r: 1.0,
            beta: 0.05,
            c_univ: 1.0,
        }
    }

    pub fn total(&self) -> u64 {
        self.n.unwrap_or(self.n_pub + self.n_priv)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if let Some(n) = self.n {
            if n != self.n_pub + self.n_priv {
                return bad("n must equal n_pub + n_priv");
            }
        }
        if self.total() == 0 {
            return bad("n must be positive");
        }
        if self.d == 0 {
            return bad("d must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        for (name, v) in [
            ("G", self.g),
            ("D", self.d_radius),
            ("norm_X", self.norm_x),
            ("B", self.b),
            ("H", self.h),
            ("lambda", self.lambda),
            ("R", self.r),
            ("c_univ", self.c_univ),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive and finite")));
            }
        }
        Ok(())
    }

    fn priv_eps(&self) -> f64 {
        self.n_priv as f64 * self.epsilon
    }

    fn need_priv(&self) -> Result<f64> {
        if self.n_priv == 0 {
            Err(Error::InvalidParameter("formula needs n_priv > 0".into()))
        } else {
            Ok(self.n_priv as f64)
        }
    }
}

fn inv_sqrt(n: u64) -> f64 {
    if n == 0 {
        f64::INFINITY
    } else {
        1.0 / (n as f64).sqrt()
    }
}

/// Whether the `log 1/δ` branch of Ψ applies. Fails when the regime test
/// would divide by a non-positive `log 1/(√(nd) δ)`.
fn psi_log_branch(q: &RateQuery) -> Result<bool> {
    let n = q.total() as f64;
    let d = q.d as f64;
    let c = q.c_univ;
    if d < c * n * q.epsilon {
        return Ok(false);
    }
    let l = (1.0 / ((n * d).sqrt() * q.delta)).ln();
    if l <= 0.0 {
        return Err(Error::OutOfRegime(format!(
            "log 1/(sqrt(nd) delta) = {l} is not positive"
        )));
    }
    Ok((q.n_pub as f64) <= n * q.epsilon / (c * l))
}

/// The public/private rate function; `n_pub = 0` makes the public branch infinite.
pub fn psi(q: &RateQuery) -> Result<f64> {
    q.validate()?;
    let n = q.total() as f64;
    let d = q.d as f64;
    let private = if psi_log_branch(q)? {
        (d * (1.0 / q.delta).ln()).sqrt() / (n * q.epsilon)
    } else {
        d.sqrt() / (n * q.epsilon)
    };
    Ok(inv_sqrt(q.n_pub).min(1.0 / n.sqrt() + private))
}

/// Convex Lipschitz lower bound `G D Ψ`.
pub fn sco_lb(q: &RateQuery) -> Result<f64> {
    Ok(q.g * q.d_radius * psi(q)?)
}

/// Strongly convex lower bound `(G²/λ) Ψ²`.
pub fn sc_lb(q: &RateQuery) -> Result<f64> {
    Ok(q.g * q.g / q.lambda * psi(q)?.powi(2))
}

/// Mean estimation lower bound `R Ψ`.
pub fn mean_lb(q: &RateQuery) -> Result<f64> {
    Ok(q.r * psi(q)?)
}

/// Pure-DP lower bound `G D / √n_pub`, valid only when `d ≥ c n ε`.
pub fn pure_dp_lb(q: &RateQuery) -> Result<f64> {
    q.validate()?;
    let n = q.total() as f64;
    if (q.d as f64) < q.c_univ * n * q.epsilon {
        return Err(Error::OutOfRegime(format!(
            "pure-DP bound needs d >= c n eps ({} < {})",
            q.d,
            q.c_univ * n * q.epsilon
        )));
    }
    Ok(q.g * q.d_radius * inv_sqrt(q.n_pub))
}

/// Upper bound of the projection learner for convex Lipschitz GLMs.
pub fn glm_upper(q: &RateQuery) -> Result<f64> {
    q.validate()?;
    let n = q.need_priv()?;
    let l4 = (4.0 / q.beta).ln();
    let l2 = (2.0 / q.beta).ln();
    let ld = (1.0 / q.delta).ln();
    let scale = q.g * q.d_radius * q.norm_x;
    Ok(scale * (l4.sqrt() / n.sqrt() + (l2 + ld).powf(0.25) / (n * q.epsilon).sqrt()) + q.b * l4.sqrt() / n.sqrt())
}

/// Public sample sizes for the GLM learner: the prescription that suffices
/// for [`glm_upper`] and the amount below which it cannot be matched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PubRequirement {
    pub sufficient: f64,
    pub necessary: f64,
}

pub fn glm_pub_requirement(q: &RateQuery) -> Result<PubRequirement> {
    q.validate()?;
    q.need_priv()?;
    let ne = q.priv_eps();
    let ld = (1.0 / q.delta).ln();
    Ok(PubRequirement {
        sufficient: ne / ((2.0 / q.beta).ln() + ld).sqrt(),
        necessary: ne / ld,
    })
}

/// Lower bound when the marginal is fully known, evaluated at `n = n_priv`
/// (knowing the marginal subsumes any amount of unlabeled public data).
pub fn known_marginal_lb(q: &RateQuery) -> Result<f64> {
    q.validate()?;
    let n = q.need_priv()?;
    let ne = n * q.epsilon;
    let private = (1.0 / ne.sqrt()).min((q.d as f64).sqrt() / ne);
    Ok(q.g * q.d_radius * q.norm_x * (1.0 / n.sqrt() + private))
}

/// Fat-shattering dimension of norm-bounded linear predictors.
pub fn fat_linear(d_radius: f64, norm_x: f64, alpha: f64) -> f64 {
    (d_radius * norm_x / alpha).powi(2)
}

/// Rademacher complexity of norm-bounded linear predictors on `m` points.
pub fn rademacher_linear(d_radius: f64, norm_x: f64, m: f64) -> f64 {
    d_radius * norm_x / m.sqrt()
}

/// Complexity measures of a hypothesis class, as used by the cover learner's bound.
pub trait ComplexityModel {
    fn fat(&self, alpha: f64) -> f64;
    fn rademacher(&self, m: f64) -> f64;
}

/// Linear predictors `‖w‖ ≤ D` over `‖x‖ ≤ norm_X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearClass {
    pub d_radius: f64,
    pub norm_x: f64,
}

impl ComplexityModel for LinearClass {
    fn fat(&self, alpha: f64) -> f64 {
        fat_linear(self.d_radius, self.norm_x, alpha)
    }

    fn rademacher(&self, m: f64) -> f64 {
        rademacher_linear(self.d_radius, self.norm_x, m)
    }
}

/// Bound of the cover learner at scale `alpha`:
/// `2G ℜ + B√(log 4/β)/√n + min(B, GR)(fat_α + log 4/β)/(nε) + 2Gα`.
pub fn fat_class_upper<C: ComplexityModel + ?Sized>(q: &RateQuery, class: &C, alpha: f64) -> Result<f64> {
    q.validate()?;
    let n = q.need_priv()?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter("alpha must be positive".into()));
    }
    let l4 = (4.0 / q.beta).ln();
    Ok(2.0 * q.g * class.rademacher(n)
        + q.b * l4.sqrt() / n.sqrt()
        + q.b.min(q.g * q.r) * (class.fat(alpha) + l4) / q.priv_eps()
        + 2.0 * q.g * alpha)
}

/// Minimum of [`fat_class_upper`] over a log grid of scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleOptimum {
    pub value: f64,
    pub alpha: f64,
}

pub const ALPHA_GRID_POINTS: usize = 401;

/// Grid over `[alpha_lo, alpha_hi]`, equally spaced in log scale.
pub fn fat_class_rate<C: ComplexityModel + ?Sized>(
    q: &RateQuery,
    class: &C,
    alpha_lo: f64,
    alpha_hi: f64,
) -> Result<ScaleOptimum> {
    if !(alpha_lo > 0.0 && alpha_hi > alpha_lo) {
        return Err(Error::InvalidParameter("need 0 < alpha_lo < alpha_hi".into()));
    }
    let (a, b) = (alpha_lo.ln(), alpha_hi.ln());
    let mut best = ScaleOptimum {
        value: f64::INFINITY,
        alpha: alpha_lo,
    };
    for i in 0..ALPHA_GRID_POINTS {
        let alpha = (a + (b - a) * i as f64 / (ALPHA_GRID_POINTS - 1) as f64).exp();
        let v = fat_class_upper(q, class, alpha)?;
        if v < best.value {
            best = ScaleOptimum { value: v, alpha };
        }
    }
    Ok(best)
}

/// [`fat_class_rate`] for the linear class given by `D` and `norm_X`,
/// searching scales from `1e-4·D‖X‖` to `D‖X‖`.
pub fn linear_class_rate(q: &RateQuery) -> Result<ScaleOptimum> {
    let class = LinearClass {
        d_radius: q.d_radius,
        norm_x: q.norm_x,
    };
    let top = q.d_radius * q.norm_x;
    fat_class_rate(q, &class, 1e-4 * top, top)
}

/// Depth and per-layer Frobenius bounds of a feed-forward network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnSpec {
    pub layer_bounds: Vec<f64>,
}

impl NnSpec {
    pub fn depth(&self) -> usize {
        self.layer_bounds.len()
    }
}

/// Cover-learner rate for feed-forward networks; the terms are summed.
pub fn nn_rate(q: &RateQuery, nn: &NnSpec) -> Result<f64> {
    q.validate()?;
    let n = q.need_priv()?;
    if nn.layer_bounds.is_empty() || nn.layer_bounds.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter("need depth >= 1 and positive layer bounds".into()));
    }
    let m = nn.depth() as f64;
    let prod: f64 = nn.layer_bounds.iter().product();
    let l4 = (4.0 / q.beta).ln();
    let ne = q.priv_eps();
    Ok(q.g * q.norm_x * m.sqrt() * prod / n.sqrt()
        + q.b * l4.sqrt() / n.sqrt()
        + q.b * l4 / ne
        + (q.b * q.g * q.g * m * (q.norm_x * prod).powi(2) / ne).cbrt())
}

/// Uniform-convexity exponent of the non-Euclidean geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonEuclideanSpec {
    pub r: f64,
}

impl NonEuclideanSpec {
    /// The `(ℓ_p, ℓ_q)` setup has exponent `max(2, p)`.
    pub fn lp(p: f64) -> Self {
        Self { r: p.max(2.0) }
    }
}

pub fn non_euclidean_rate(q: &RateQuery, ne: &NonEuclideanSpec) -> Result<f64> {
    q.validate()?;
    let n = q.need_priv()?;
    if !(ne.r >= 2.0) {
        return Err(Error::InvalidParameter("uniform convexity exponent must be >= 2".into()));
    }
    let l4 = (4.0 / q.beta).ln();
    let l2 = (2.0 / q.beta).ln();
    let nep = q.priv_eps();
    Ok(q.g
        * q.d_radius
        * q.norm_x
        * (n.powf(-1.0 / ne.r) + l4.sqrt() / n.sqrt() + l2 * nep.powf(-1.0 / (ne.r + 1.0)) + l4 / nep)
        + q.b * l4.sqrt() / n.sqrt())
}

/// Smooth non-negative loss bound as a function of the private empirical
/// optimum `l_star`; at `l_star = 0` only the fast terms remain.
pub fn optimistic_rate(q: &RateQuery, l_star: f64) -> Result<f64> {
    q.validate()?;
    let n = q.need_priv()?;
    if !(l_star >= 0.0 && l_star.is_finite()) {
        return Err(Error::InvalidParameter("L_star must be finite and >= 0".into()));
    }
    let ne = q.priv_eps();
    let dx = q.d_radius * q.norm_x;
    let slow = (q.h.sqrt() * dx / ne.sqrt() + (q.b / n).sqrt()) * l_star.sqrt()
        + q.h.powf(0.25) * dx * q.g.sqrt() * l_star.powf(0.25) / ne.sqrt();
    let fast = q.g * dx / ne + (q.h.sqrt() * dx * dx * q.g / ne).powf(2.0 / 3.0) + q.h * dx * dx / ne + q.b / n;
    Ok(slow + fast)
}

fn entry<T: Serialize>(r: Result<T>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).unwrap_or(Value::Null),
        Err(e) => Value::String(e.kind().to_string()),
    }
}

/// Every formula that needs only the query, keyed by name. Failed formulas
/// map to the error kind (e.g. `"OutOfRegime"`).
pub fn rate_report(q: &RateQuery) -> Result<BTreeMap<String, Value>> {
    q.validate()?;
    let mut out = BTreeMap::new();
    out.insert("constants".to_string(), Value::String(CONSTANT_CONVENTION.into()));
    out.insert("psi".into(), entry(psi(q)));
    out.insert("sco_lb".into(), entry(sco_lb(q)));
    out.insert("sc_lb".into(), entry(sc_lb(q)));
    out.insert("mean_lb".into(), entry(mean_lb(q)));
    out.insert("pure_dp_lb".into(), entry(pure_dp_lb(q)));
    out.insert("glm_upper".into(), entry(glm_upper(q)));
    out.insert("glm_pub_requirement".into(), entry(glm_pub_requirement(q)));
    out.insert("known_marginal_lb".into(), entry(known_marginal_lb(q)));
    out.insert("linear_class_rate".into(), entry(linear_class_rate(q)));
    out.insert("optimistic_rate_realizable".into(), entry(optimistic_rate(q, 0.0)));
    out.insert(
        "fat_linear_at_alpha_0.1".into(),
        entry(Ok(fat_linear(q.d_radius, q.norm_x, 0.1))),
    );
    out.insert(
        "rademacher_linear_n_priv".into(),
        entry(q.need_priv().map(|n| rademacher_linear(q.d_radius, q.norm_x, n))),
    );
    Ok(out)
}
