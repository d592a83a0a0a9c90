//! Small dense-vector helpers shared by the numeric modules.

use rand::Rng;
use rand_distr::StandardNormal;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(alpha: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Rescales `x` in place so that its norm is at most `bound`.
pub fn clip_norm(x: &mut [f64], bound: f64) {
    let n = norm(x);
    if n > bound && n > 0.0 {
        scale(bound / n, x);
    }
}

pub fn mean_of(rows: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d];
    for r in rows {
        axpy(1.0, r, &mut m);
    }
    if !rows.is_empty() {
        scale(1.0 / rows.len() as f64, &mut m);
    }
    m
}

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform draw from the Euclidean ball of the given radius.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Vec<f64> {
    let mut v = gaussian_vec(rng, d);
    let n = norm(&v);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    if n > 0.0 {
        scale(r / n, &mut v);
    }
    v
}

/// Uniform draw from the sphere of the given radius.
pub fn uniform_on_sphere<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Vec<f64> {
    loop {
        let mut v = gaussian_vec(rng, d);
        let n = norm(&v);
        if n > 0.0 {
            scale(radius / n, &mut v);
            return v;
        }
    }
}
