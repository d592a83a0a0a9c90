//! GLM losses `l(w; x, y) = phi_y(<w, x>)` with constants derived from the
//! problem geometry, and the strongly convex mean-estimation loss.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::ProblemGeometry;
use crate::error::{check_dim, Error, Result};
use crate::vecops::{axpy, dot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlmFamily {
    /// `G * y * a`
    Linear,
    /// `|y - a|`
    Absolute,
    /// `(y - a)^2`
    Squared,
    /// `log(1 + exp(-y a))`
    Logistic,
    /// `max(0, 1 - y a)`
    Hinge,
}

impl GlmFamily {
    pub fn name(&self) -> &'static str {
        match self {
            GlmFamily::Linear => "linear",
            GlmFamily::Absolute => "absolute",
            GlmFamily::Squared => "squared",
            GlmFamily::Logistic => "logistic",
            GlmFamily::Hinge => "hinge",
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, GlmFamily::Squared | GlmFamily::Logistic)
    }

    /// Prediction value at which the family is not differentiable.
    pub fn kink(&self, y: f64) -> Option<f64> {
        match self {
            GlmFamily::Absolute => Some(y),
            GlmFamily::Hinge if y != 0.0 => Some(1.0 / y),
            _ => None,
        }
    }
}

impl fmt::Display for GlmFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GlmFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "linear" => GlmFamily::Linear,
            "absolute" => GlmFamily::Absolute,
            "squared" => GlmFamily::Squared,
            "logistic" => GlmFamily::Logistic,
            "hinge" => GlmFamily::Hinge,
            other => return Err(Error::InvalidParameter(format!("unknown loss `{other}`"))),
        })
    }
}

/// Per-example loss as seen by the optimizers.
///
/// Implementations skip dimension checks; the checked entry points are
/// [`loss_value`], [`loss_gradient`] and [`empirical_loss`].
pub trait SampleLoss: Send + Sync {
    fn value(&self, w: &[f64], x: &[f64], y: f64) -> f64;

    /// Writes a (sub)gradient with respect to `w` into `out`.
    fn gradient_into(&self, w: &[f64], x: &[f64], y: f64, out: &mut [f64]);

    /// Bound on the per-example gradient norm over the feasible set.
    fn gradient_bound(&self) -> f64;

    /// Smoothness constant of `w -> l(w; x, y)`, if the loss is smooth.
    fn smoothness(&self) -> Option<f64>;

    /// Whether the loss is linear in `w` (constant gradient per example).
    fn is_linear(&self) -> bool {
        false
    }
}

/// A GLM loss with its Lipschitz constant `G`, range bound `B` and
/// smoothness `H`, all computed from the geometry and a label bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlmLoss {
    family: GlmFamily,
    /// Multiplier of the linear family; 1 otherwise.
    scale: f64,
    label_bound: f64,
    geom: ProblemGeometry,
    lipschitz: f64,
    bound: f64,
    smoothness: Option<f64>,
}

impl GlmLoss {
    pub fn new(family: GlmFamily, geom: ProblemGeometry, label_bound: f64) -> Result<Self> {
        Self::with_scale(family, 1.0, geom, label_bound)
    }

    /// `l(w; x, y) = g * y * <w, x>`.
    pub fn linear(g: f64, geom: ProblemGeometry, label_bound: f64) -> Result<Self> {
        Self::with_scale(GlmFamily::Linear, g, geom, label_bound)
    }

    fn with_scale(
        family: GlmFamily,
        scale: f64,
        geom: ProblemGeometry,
        label_bound: f64,
    ) -> Result<Self> {
        if !(label_bound.is_finite() && label_bound >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "label bound must be finite and >= 0, got {label_bound}"
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "loss scale must be > 0, got {scale}"
            )));
        }
        let r = geom.range();
        let y = label_bound;
        let (lipschitz, bound, smoothness) = match family {
            GlmFamily::Linear => (scale * y, scale * y * r, None),
            GlmFamily::Absolute => (1.0, y + r, None),
            GlmFamily::Squared => (2.0 * (y + r), (y + r).powi(2), Some(2.0)),
            GlmFamily::Logistic => (y, softplus(y * r), Some(y * y / 4.0)),
            GlmFamily::Hinge => (y, 1.0 + y * r, None),
        };
        if !(lipschitz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{family} loss with label bound {label_bound} has zero Lipschitz constant"
            )));
        }
        Ok(Self {
            family,
            scale,
            label_bound,
            geom,
            lipschitz,
            bound,
            smoothness,
        })
    }

    pub fn family(&self) -> GlmFamily {
        self.family
    }

    pub fn geometry(&self) -> &ProblemGeometry {
        &self.geom
    }

    pub fn label_bound(&self) -> f64 {
        self.label_bound
    }

    /// Lipschitz constant `G` of `phi_y`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Uniform bound `B` on `phi_y` over the feasible prediction range.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Smoothness `H` of `phi_y`; `None` for nonsmooth families.
    pub fn smoothness_h(&self) -> Option<f64> {
        self.smoothness
    }

    /// `min(B, G R)`, the scale of the empirical-risk sensitivity.
    pub fn score_scale(&self) -> f64 {
        self.bound.min(self.lipschitz * self.geom.range())
    }

    /// `phi_y(a)`
    pub fn phi(&self, a: f64, y: f64) -> f64 {
        match self.family {
            GlmFamily::Linear => self.scale * y * a,
            GlmFamily::Absolute => (y - a).abs(),
            GlmFamily::Squared => (y - a).powi(2),
            GlmFamily::Logistic => softplus(-y * a),
            GlmFamily::Hinge => (1.0 - y * a).max(0.0),
        }
    }

    /// `phi_y'(a)`, with subgradient 0 at kinks.
    pub fn dphi(&self, a: f64, y: f64) -> f64 {
        match self.family {
            GlmFamily::Linear => self.scale * y,
            GlmFamily::Absolute => {
                if a > y {
                    1.0
                } else if a < y {
                    -1.0
                } else {
                    0.0
                }
            }
            GlmFamily::Squared => 2.0 * (a - y),
            GlmFamily::Logistic => -y * sigmoid(-y * a),
            GlmFamily::Hinge => {
                if y * a < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
        }
    }
}

impl SampleLoss for GlmLoss {
    fn value(&self, w: &[f64], x: &[f64], y: f64) -> f64 {
        self.phi(dot(w, x), y)
    }

    fn gradient_into(&self, w: &[f64], x: &[f64], y: f64, out: &mut [f64]) {
        let g = self.dphi(dot(w, x), y);
        out.iter_mut().for_each(|v| *v = 0.0);
        if g != 0.0 {
            axpy(g, x, out);
        }
    }

    fn gradient_bound(&self) -> f64 {
        self.lipschitz * self.geom.norm_x()
    }

    fn smoothness(&self) -> Option<f64> {
        self.smoothness.map(|h| h * self.geom.norm_x().powi(2))
    }

    fn is_linear(&self) -> bool {
        self.family == GlmFamily::Linear
    }
}

/// `(lambda / 2) ||w - z||^2` on the ball of radius `radius`, for data with
/// `||z|| <= z_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StronglyConvexLoss {
    lambda: f64,
    lipschitz: f64,
}

impl StronglyConvexLoss {
    pub fn new(lambda: f64, radius: f64, z_bound: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be > 0, got {lambda}"
            )));
        }
        Ok(Self {
            lambda,
            lipschitz: lambda * (radius + z_bound),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Lipschitz constant `G` on the feasible ball.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

impl SampleLoss for StronglyConvexLoss {
    fn value(&self, w: &[f64], z: &[f64], _y: f64) -> f64 {
        let s: f64 = w.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum();
        0.5 * self.lambda * s
    }

    fn gradient_into(&self, w: &[f64], z: &[f64], _y: f64, out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(w).zip(z) {
            *o = self.lambda * (a - b);
        }
    }

    fn gradient_bound(&self) -> f64 {
        self.lipschitz
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.lambda)
    }
}

/// `(lambda/2)||w - z||^2`
pub fn sc_loss_value(loss: &StronglyConvexLoss, w: &[f64], z: &[f64]) -> Result<f64> {
    check_dim(w.len(), z.len())?;
    Ok(loss.value(w, z, 0.0))
}

/// `lambda (w - z)`
pub fn sc_loss_gradient(loss: &StronglyConvexLoss, w: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    check_dim(w.len(), z.len())?;
    let mut g = vec![0.0; w.len()];
    loss.gradient_into(w, z, 0.0, &mut g);
    Ok(g)
}

pub fn loss_value<L: SampleLoss + ?Sized>(loss: &L, w: &[f64], x: &[f64], y: f64) -> Result<f64> {
    check_dim(w.len(), x.len())?;
    Ok(loss.value(w, x, y))
}

pub fn loss_gradient<L: SampleLoss + ?Sized>(
    loss: &L,
    w: &[f64],
    x: &[f64],
    y: f64,
) -> Result<Vec<f64>> {
    check_dim(w.len(), x.len())?;
    let mut g = vec![0.0; w.len()];
    loss.gradient_into(w, x, y, &mut g);
    Ok(g)
}

/// Mean loss over `samples`.
pub fn empirical_loss<L: SampleLoss + ?Sized>(
    loss: &L,
    w: &[f64],
    samples: &[(Vec<f64>, f64)],
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for (x, y) in samples {
        check_dim(w.len(), x.len())?;
        total += loss.value(w, x, *y);
    }
    Ok(total / samples.len() as f64)
}

/// Mean (sub)gradient over `samples`.
pub(crate) fn empirical_gradient<L: SampleLoss + ?Sized>(
    loss: &L,
    w: &[f64],
    samples: &[(Vec<f64>, f64)],
) -> Vec<f64> {
    let mut total = vec![0.0; w.len()];
    let mut g = vec![0.0; w.len()];
    for (x, y) in samples {
        loss.gradient_into(w, x, *y, &mut g);
        axpy(1.0, &g, &mut total);
    }
    let n = samples.len().max(1) as f64;
    total.iter_mut().for_each(|v| *v /= n);
    total
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
