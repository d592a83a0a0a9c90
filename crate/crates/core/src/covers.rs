//! Covers of the bounded linear class under the empirical metric
//! `||w1 - w2||_{2,X} = sqrt((1/m) sum_i <w1 - w2, x_i>^2)`.
//!
//! The cover is a grid in the whitened eigen-coordinates of the empirical
//! second moment. Directions too flat to matter at the target scale are
//! dropped; every grid point is then pulled back into the radius-`D` ball
//! with a projection in the metric itself, which cannot increase the distance
//! to any point already in the ball. Large covers are kept implicit: the
//! nearest-candidate query is then the construction's rounding map.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::vecops::{axpy, dot, norm, sub, uniform_in_ball};

/// Eigenvalues below this fraction of the largest are treated as exact zeros.
const NUMERICAL_ZERO: f64 = 1e-24;

/// The empirical second moment of a public feature sample, with its
/// eigendecomposition cached.
#[derive(Debug, Clone)]
pub struct EmpiricalMetric {
    d: usize,
    points: Vec<Vec<f64>>,
    second_moment: DMatrix<f64>,
    /// Eigenpairs in decreasing eigenvalue order; eigenvalues clamped at 0.
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<Vec<f64>>,
}

impl EmpiricalMetric {
    pub fn new(points: &[Vec<f64>], d: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPublicSet);
        }
        for p in points {
            check_dim(d, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("public feature".into()));
            }
        }
        let m = points.len() as f64;
        let mut sigma = DMatrix::<f64>::zeros(d, d);
        for p in points {
            for i in 0..d {
                if p[i] == 0.0 {
                    continue;
                }
                for j in i..d {
                    sigma[(i, j)] += p[i] * p[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = sigma[(i, j)] / m;
                sigma[(i, j)] = v;
                sigma[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(sigma.clone());
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let eigenvectors = order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        Ok(Self {
            d,
            points: points.to_vec(),
            second_moment: sigma,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn second_moment(&self) -> &DMatrix<f64> {
        &self.second_moment
    }

    /// Eigenvalues of the second moment, largest first.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[Vec<f64>] {
        &self.eigenvectors
    }

    /// Number of eigenvalues that are not numerically zero.
    pub fn numerical_rank(&self) -> usize {
        let top = self.eigenvalues.first().copied().unwrap_or(0.0);
        self.eigenvalues
            .iter()
            .take_while(|&&l| l > 0.0 && l > NUMERICAL_ZERO * top)
            .count()
    }

    /// Coordinates `sqrt(lambda_i) <v_i, w>` over the numerically nonzero
    /// eigenpairs; Euclidean distance between whitened vectors is the
    /// empirical distance.
    pub fn whiten(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, w.len())?;
        Ok((0..self.numerical_rank())
            .map(|i| self.eigenvalues[i].sqrt() * dot(&self.eigenvectors[i], w))
            .collect())
    }

    /// `sqrt((1/m) sum_i <w1 - w2, x_i>^2)` evaluated directly over the sample.
    pub fn direct_distance(&self, w1: &[f64], w2: &[f64]) -> Result<f64> {
        check_dim(self.d, w1.len())?;
        check_dim(self.d, w2.len())?;
        let diff = sub(w1, w2);
        let s: f64 = self.points.iter().map(|x| dot(&diff, x).powi(2)).sum();
        Ok((s / self.points.len() as f64).sqrt())
    }
}

/// `sqrt((w1 - w2)^T Sigma (w1 - w2))`.
pub fn empirical_distance(metric: &EmpiricalMetric, w1: &[f64], w2: &[f64]) -> Result<f64> {
    check_dim(metric.d, w1.len())?;
    check_dim(metric.d, w2.len())?;
    let diff = sub(w1, w2);
    let mut q = 0.0;
    for i in 0..metric.d {
        let mut row = 0.0;
        for j in 0..metric.d {
            row += metric.second_moment[(i, j)] * diff[j];
        }
        q += diff[i] * row;
    }
    Ok(q.max(0.0).sqrt())
}

/// Construction parameters for [`build_cover_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverConfig {
    /// Fraction of `alpha` spent on dropped directions; the rest goes to the grid.
    pub trunc_fraction: f64,
    pub r_max: usize,
    /// Covers with more candidates than this stay implicit.
    pub materialize_limit: usize,
}

impl Default for CoverConfig {
    fn default() -> Self {
        Self {
            trunc_fraction: 0.5,
            r_max: 4,
            materialize_limit: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
enum CoverKind {
    Grid {
        /// Kept eigenvectors and their eigenvalues.
        directions: Vec<Vec<f64>>,
        lambdas: Vec<f64>,
        spacing: f64,
        counts: Vec<usize>,
    },
    Explicit,
}

/// A finite alpha-cover of the radius-`D` ball under an empirical metric.
#[derive(Debug, Clone)]
pub struct HypothesisCover {
    metric: EmpiricalMetric,
    radius: f64,
    alpha: f64,
    alpha_trunc: f64,
    alpha_grid: f64,
    kind: CoverKind,
    candidates: Option<Vec<Vec<f64>>>,
    /// Whitened coordinates of the materialized candidates.
    whitened: Vec<Vec<f64>>,
    size: f64,
}

impl HypothesisCover {
    /// A cover with caller-supplied candidates (e.g. a forced small cover).
    /// No coverage guarantee is implied; `alpha` is recorded as given.
    pub fn explicit(
        metric: EmpiricalMetric,
        radius: f64,
        alpha: f64,
        candidates: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        for (index, c) in candidates.iter().enumerate() {
            check_dim(metric.d, c.len())?;
            let n = norm(c);
            if n > radius * (1.0 + 1e-12) {
                return Err(Error::NormBoundViolated {
                    index,
                    norm: n,
                    bound: radius,
                });
            }
        }
        let size = candidates.len() as f64;
        let whitened = candidates
            .iter()
            .map(|c| metric.whiten(c))
            .collect::<Result<_>>()?;
        Ok(Self {
            metric,
            radius,
            alpha,
            alpha_trunc: 0.0,
            alpha_grid: alpha,
            kind: CoverKind::Explicit,
            candidates: Some(candidates),
            whitened,
            size,
        })
    }

    pub fn metric(&self) -> &EmpiricalMetric {
        &self.metric
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn alpha_trunc(&self) -> f64 {
        self.alpha_trunc
    }

    pub fn alpha_grid(&self) -> f64 {
        self.alpha_grid
    }

    /// Number of gridded directions (0 for explicit covers).
    pub fn effective_rank(&self) -> usize {
        match &self.kind {
            CoverKind::Grid { directions, .. } => directions.len(),
            CoverKind::Explicit => 0,
        }
    }

    /// Number of candidates; a float because implicit covers can be huge.
    pub fn size(&self) -> f64 {
        self.size
    }

    /// The candidate list, if it was materialized.
    pub fn candidates(&self) -> Option<&[Vec<f64>]> {
        self.candidates.as_deref()
    }

    pub fn is_materialized(&self) -> bool {
        self.candidates.is_some()
    }

    /// The grid's size bound `(1 + 2 sqrt(r) D sqrt(lambda_max) / alpha_grid)^r`.
    pub fn size_bound(&self) -> f64 {
        match &self.kind {
            CoverKind::Grid { lambdas, .. } if !lambdas.is_empty() => {
                let r = lambdas.len() as f64;
                (1.0 + 2.0 * r.sqrt() * self.radius * lambdas[0].sqrt() / self.alpha_grid).powf(r)
            }
            _ => self.size,
        }
    }

    /// A cover element close to `w` and its empirical distance.
    ///
    /// Materialized covers are searched exhaustively (first index wins ties);
    /// implicit grid covers return the element the construction assigns to
    /// `w`, which is within `alpha` but not necessarily the closest.
    pub fn nearest(&self, w: &[f64]) -> Result<(Vec<f64>, f64)> {
        check_dim(self.metric.d, w.len())?;
        let wz = self.metric.whiten(w)?;
        if let Some(cands) = &self.candidates {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, cz) in self.whitened.iter().enumerate() {
                let dist = wz.iter().zip(cz).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                if dist < best_d {
                    best_d = dist;
                    best = i;
                }
            }
            return Ok((cands[best].clone(), best_d.sqrt()));
        }
        let c = self.round_to_grid(w);
        let dist = empirical_distance(&self.metric, w, &c)?;
        Ok((c, dist))
    }

    fn round_to_grid(&self, w: &[f64]) -> Vec<f64> {
        let CoverKind::Grid {
            directions,
            lambdas,
            spacing,
            counts,
        } = &self.kind
        else {
            unreachable!("explicit covers are always materialized")
        };
        let idx: Vec<usize> = directions
            .iter()
            .zip(lambdas)
            .zip(counts)
            .map(|((v, &l), &m)| {
                let u = l.sqrt() * dot(v, w);
                let j = (u / spacing + (m as f64 - 1.0) / 2.0).round();
                j.clamp(0.0, (m - 1) as f64) as usize
            })
            .collect();
        self.grid_candidate(&idx)
    }

    /// Maps a grid index to its candidate in `R^d`.
    fn grid_candidate(&self, idx: &[usize]) -> Vec<f64> {
        let CoverKind::Grid {
            directions,
            lambdas,
            spacing,
            counts,
        } = &self.kind
        else {
            unreachable!()
        };
        // coefficients along the kept eigenvectors
        let g: Vec<f64> = idx
            .iter()
            .zip(lambdas)
            .zip(counts)
            .map(|((&j, &l), &m)| (j as f64 - (m as f64 - 1.0) / 2.0) * spacing / l.sqrt())
            .collect();
        let c = metric_ball_projection(&g, lambdas, self.radius);
        let mut out = vec![0.0; self.metric.d];
        for (v, &ci) in directions.iter().zip(&c) {
            axpy(ci, v, &mut out);
        }
        out
    }
}

/// Projects `g` onto `{c : ||c|| <= radius}` in the metric
/// `sum_i lambda_i (c_i - g_i)^2`, where all `lambda_i > 0`.
///
/// The minimizer is `c_i = lambda_i g_i / (lambda_i + nu)` with `nu >= 0`
/// chosen so that `||c|| = radius` when `g` lies outside the ball.
fn metric_ball_projection(g: &[f64], lambdas: &[f64], radius: f64) -> Vec<f64> {
    if norm(g) <= radius {
        return g.to_vec();
    }
    let at = |nu: f64| -> Vec<f64> {
        g.iter()
            .zip(lambdas)
            .map(|(&gi, &l)| l * gi / (l + nu))
            .collect()
    };
    let mut lo = 0.0;
    let mut hi = g
        .iter()
        .zip(lambdas)
        .map(|(&gi, &l)| (l * gi).powi(2))
        .sum::<f64>()
        .sqrt()
        / radius;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm(&at(mid)) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mut c = at(hi);
    let n = norm(&c);
    if n > radius {
        c.iter_mut().for_each(|v| *v *= radius / n);
    }
    c
}

/// Builds an `alpha`-cover of the radius-`radius` ball with the default
/// budget split and materialization limit.
pub fn build_cover(
    metric: &EmpiricalMetric,
    radius: f64,
    alpha: f64,
    r_max: usize,
) -> Result<HypothesisCover> {
    build_cover_with(
        metric,
        radius,
        alpha,
        &CoverConfig {
            r_max,
            ..CoverConfig::default()
        },
    )
}

pub fn build_cover_with(
    metric: &EmpiricalMetric,
    radius: f64,
    alpha: f64,
    cfg: &CoverConfig,
) -> Result<HypothesisCover> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be > 0, got {radius}")));
    }
    if !(cfg.trunc_fraction > 0.0 && cfg.trunc_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "trunc_fraction must be in (0, 1), got {}",
            cfg.trunc_fraction
        )));
    }
    let alpha_trunc = alpha * cfg.trunc_fraction;
    let alpha_grid = alpha - alpha_trunc;

    // Drop the largest set of trailing directions with
    // 2 D sqrt(lambda) <= alpha_trunc / sqrt(#dropped) for each of them; their
    // combined contribution to any distance is then at most alpha_trunc / 2.
    let lambdas = metric.eigenvalues();
    let d = lambdas.len();
    let mut dropped = 0;
    for j in 1..=d {
        let largest_dropped = lambdas[d - j];
        if 2.0 * radius * largest_dropped.sqrt() <= alpha_trunc / (j as f64).sqrt() {
            dropped = j;
        }
    }
    let r = d - dropped;
    if r > cfg.r_max {
        return Err(Error::RankTooLarge {
            rank: r,
            max: cfg.r_max,
        });
    }
    let directions: Vec<Vec<f64>> = metric.eigenvectors()[..r].to_vec();
    let kept: Vec<f64> = lambdas[..r].to_vec();
    let spacing = if r == 0 {
        0.0
    } else {
        alpha_grid / (r as f64).sqrt()
    };
    let counts: Vec<usize> = kept
        .iter()
        .map(|&l| ((2.0 * radius * l.sqrt() / spacing).ceil() as usize).max(1))
        .collect();
    let size: f64 = counts.iter().map(|&m| m as f64).product();

    let mut cover = HypothesisCover {
        metric: metric.clone(),
        radius,
        alpha,
        alpha_trunc,
        alpha_grid,
        kind: CoverKind::Grid {
            directions,
            lambdas: kept,
            spacing,
            counts: counts.clone(),
        },
        candidates: None,
        whitened: Vec::new(),
        size,
    };
    if size <= cfg.materialize_limit as f64 {
        let total = size as usize;
        let mut cands = Vec::with_capacity(total);
        let mut idx = vec![0usize; r];
        for _ in 0..total {
            cands.push(cover.grid_candidate(&idx));
            // mixed-radix increment
            for (i, m) in idx.iter_mut().zip(&counts) {
                *i += 1;
                if *i < *m {
                    break;
                }
                *i = 0;
            }
        }
        cover.whitened = cands
            .iter()
            .map(|c| metric.whiten(c))
            .collect::<Result<_>>()?;
        cover.candidates = Some(cands);
    }
    Ok(cover)
}

/// Result of comparing empirical and population distances over a cover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverAuditReport {
    pub alpha: f64,
    pub tau: f64,
    pub slack: f64,
    pub n_test: usize,
    pub max_pop_dist: f64,
    pub max_emp_dist: f64,
    pub exceed_frac: f64,
    pub cover_size: f64,
}

impl CoverAuditReport {
    /// No tested hypothesis exceeded `alpha + tau + slack`.
    pub fn passed(&self) -> bool {
        self.max_pop_dist <= self.alpha + self.tau + self.slack
    }
}

/// Draws `n_test` hypotheses uniformly from the cover's ball, assigns each
/// its cover element under the empirical metric, and measures the distance
/// between the two over `fresh` (a sample from the population marginal).
///
/// Passing the public sample itself as `fresh` makes the two distances equal.
pub fn cover_concentration_audit<R: Rng + ?Sized>(
    cover: &HypothesisCover,
    fresh: &[Vec<f64>],
    alpha: f64,
    tau: f64,
    slack: f64,
    n_test: usize,
    rng: &mut R,
) -> Result<CoverAuditReport> {
    if fresh.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = cover.metric.d;
    for x in fresh {
        check_dim(d, x.len())?;
    }
    let threshold = alpha + tau + slack;
    // mean of x x^T over the fresh sample; distances are quadratic forms in it
    let mut moment = vec![0.0; d * d];
    for x in fresh {
        for i in 0..d {
            if x[i] != 0.0 {
                axpy(x[i], x, &mut moment[i * d..(i + 1) * d]);
            }
        }
    }
    let inv = 1.0 / fresh.len() as f64;
    moment.iter_mut().for_each(|v| *v *= inv);
    let mut max_pop: f64 = 0.0;
    let mut max_emp: f64 = 0.0;
    let mut exceed = 0usize;
    for _ in 0..n_test {
        let w = uniform_in_ball(rng, d, cover.radius);
        let (c, emp) = cover.nearest(&w)?;
        let diff = sub(&w, &c);
        let quad: f64 = (0..d)
            .map(|i| diff[i] * dot(&moment[i * d..(i + 1) * d], &diff))
            .sum();
        let pop = quad.max(0.0).sqrt();
        max_pop = max_pop.max(pop);
        max_emp = max_emp.max(emp);
        if pop > threshold {
            exceed += 1;
        }
    }
    Ok(CoverAuditReport {
        alpha,
        tau,
        slack,
        n_test,
        max_pop_dist: max_pop,
        max_emp_dist: max_emp,
        exceed_frac: if n_test == 0 {
            0.0
        } else {
            exceed as f64 / n_test as f64
        },
        cover_size: cover.size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{derive_rng, SeedSpec};
    use crate::linalg::{orthonormal_basis, DEFAULT_RANK_TOL};
    use crate::vecops::{gaussian_vec, uniform_on_sphere};
    use proptest::prelude::*;
    use rand::Rng;

    fn low_rank_points(seed: u64, d: usize, rank: usize, m: usize) -> Vec<Vec<f64>> {
        let mut rng = derive_rng(SeedSpec::new(seed, 0));
        let basis: Vec<Vec<f64>> = (0..rank).map(|_| gaussian_vec(&mut rng, d)).collect();
        let basis = orthonormal_basis(&basis, d, DEFAULT_RANK_TOL).unwrap();
        (0..m)
            .map(|_| {
                let z = uniform_on_sphere(&mut rng, basis.k(), 1.0);
                basis.embed_up(&z).unwrap()
            })
            .collect()
    }

    #[test]
    fn distance_examples() {
        let m = EmpiricalMetric::new(&[vec![1.0, 0.0, 0.0]], 3).unwrap();
        let w = [0.3, -0.2, 0.9];
        assert_eq!(empirical_distance(&m, &w, &w).unwrap(), 0.0);
        let dist = empirical_distance(&m, &[0.7, 5.0, -1.0], &[0.2, -3.0, 4.0]).unwrap();
        assert!((dist - 0.5).abs() < 1e-12);

        // X = {(1,2), (3,0)}: Sigma = [[5, 1], [1, 2]]; for u = (1,1),
        // u^T Sigma u = 9 and the direct sum is ((3)^2 + (3)^2) / 2 = 9.
        let m = EmpiricalMetric::new(&[vec![1.0, 2.0], vec![3.0, 0.0]], 2).unwrap();
        let s = m.second_moment();
        assert_eq!((s[(0, 0)], s[(0, 1)], s[(1, 1)]), (5.0, 1.0, 2.0));
        let dist = empirical_distance(&m, &[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert!((dist - 3.0).abs() < 1e-12);
        assert!(empirical_distance(&m, &[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn zero_metric_gives_singleton_cover() {
        let m = EmpiricalMetric::new(&[vec![0.0; 4], vec![0.0; 4]], 4).unwrap();
        let cover = build_cover(&m, 1.0, 0.1, 4).unwrap();
        assert_eq!(cover.size(), 1.0);
        assert_eq!(cover.candidates().unwrap(), &[vec![0.0; 4]]);
        let (c, dist) = cover.nearest(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!((c, dist), (vec![0.0; 4], 0.0));
    }

    #[test]
    fn one_dimensional_grid() {
        let m = EmpiricalMetric::new(&[vec![1.0]], 1).unwrap();
        let cover = build_cover(&m, 1.0, 0.5, 4).unwrap();
        let cands: Vec<f64> = cover.candidates().unwrap().iter().map(|c| c[0]).collect();
        // spacing 0.25 over [-1, 1], centred
        assert_eq!(cands, vec![-0.875, -0.625, -0.375, -0.125, 0.125, 0.375, 0.625, 0.875]);
        for i in 0..=200 {
            let w = -1.0 + i as f64 / 100.0;
            let best = cands.iter().map(|c| (c - w).abs()).fold(f64::INFINITY, f64::min);
            assert!(best <= 0.5);
        }
    }

    #[test]
    fn rank_too_large() {
        let pts = low_rank_points(1, 8, 6, 40);
        let m = EmpiricalMetric::new(&pts, 8).unwrap();
        assert!(matches!(
            build_cover(&m, 1.0, 0.3, 4),
            Err(Error::RankTooLarge { rank: 6, max: 4 })
        ));
    }

    #[test]
    fn rank_two_coverage_audit() {
        let pts = low_rank_points(2, 8, 2, 30);
        let m = EmpiricalMetric::new(&pts, 8).unwrap();
        let cover = build_cover(&m, 1.0, 0.3, 4).unwrap();
        assert_eq!(cover.effective_rank(), 2);
        assert!(cover.size() <= cover.size_bound());
        let mut rng = derive_rng(SeedSpec::new(2, 1));
        for _ in 0..1000 {
            let w = uniform_in_ball(&mut rng, 8, 1.0);
            let (_, dist) = cover.nearest(&w).unwrap();
            assert!(dist <= 0.3 * (1.0 + 1e-6));
        }
        let basis = orthonormal_basis(&pts, 8, DEFAULT_RANK_TOL).unwrap();
        for c in cover.candidates().unwrap() {
            assert!(norm(c) <= 1.0 + 1e-12);
            let p = basis.project(c).unwrap();
            assert!(norm(&sub(&p, c)) < 1e-9);
        }
    }

    #[test]
    fn implicit_cover_rounding_is_within_alpha() {
        let mut rng = derive_rng(SeedSpec::new(3, 0));
        let pts: Vec<Vec<f64>> = (0..200).map(|_| uniform_on_sphere(&mut rng, 6, 1.0)).collect();
        let m = EmpiricalMetric::new(&pts, 6).unwrap();
        let cfg = CoverConfig {
            r_max: 6,
            materialize_limit: 0,
            ..CoverConfig::default()
        };
        let cover = build_cover_with(&m, 2.0, 0.2, &cfg).unwrap();
        assert!(!cover.is_materialized());
        for _ in 0..500 {
            let w = uniform_in_ball(&mut rng, 6, 2.0);
            let (c, dist) = cover.nearest(&w).unwrap();
            assert!(dist <= 0.2 * (1.0 + 1e-6));
            assert!(norm(&c) <= 2.0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn explicit_cover_checks() {
        let m = EmpiricalMetric::new(&[vec![1.0]], 1).unwrap();
        assert!(matches!(
            HypothesisCover::explicit(m.clone(), 1.0, 0.5, vec![]),
            Err(Error::EmptyCandidates)
        ));
        assert!(HypothesisCover::explicit(m.clone(), 1.0, 0.5, vec![vec![2.0]]).is_err());
        let c = HypothesisCover::explicit(m, 1.0, 0.5, vec![vec![-1.0], vec![0.5], vec![0.5]])
            .unwrap();
        assert_eq!(c.nearest(&[0.4]).unwrap().0, vec![0.5]);
    }

    #[test]
    fn audit_on_own_sample_matches_empirical_distance() {
        let pts = low_rank_points(4, 5, 2, 25);
        let m = EmpiricalMetric::new(&pts, 5).unwrap();
        let cover = build_cover(&m, 1.0, 0.3, 4).unwrap();
        let mut rng = derive_rng(SeedSpec::new(4, 1));
        let report = cover_concentration_audit(&cover, &pts, 0.0, 0.3, 0.0, 300, &mut rng).unwrap();
        assert!((report.max_pop_dist - report.max_emp_dist).abs() < 1e-9);
        assert_eq!(report.exceed_frac, 0.0);
    }

    #[test]
    fn metric_projection_is_feasible_and_fixed_inside() {
        let lambdas = [2.0, 0.5, 0.01];
        assert_eq!(metric_ball_projection(&[0.1, 0.2, 0.3], &lambdas, 1.0), vec![0.1, 0.2, 0.3]);
        let c = metric_ball_projection(&[3.0, -4.0, 10.0], &lambdas, 1.0);
        assert!((norm(&c) - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn quadratic_form_matches_direct_sum(seed in 0u64..500, d in 1usize..10, m in 1usize..15) {
            let mut rng = derive_rng(SeedSpec::new(seed, 7));
            let pts: Vec<Vec<f64>> = (0..m).map(|_| gaussian_vec(&mut rng, d)).collect();
            let metric = EmpiricalMetric::new(&pts, d).unwrap();
            let w1 = gaussian_vec(&mut rng, d);
            let w2 = gaussian_vec(&mut rng, d);
            let q = empirical_distance(&metric, &w1, &w2).unwrap();
            let direct = metric.direct_distance(&w1, &w2).unwrap();
            prop_assert!((q - direct).abs() < 1e-9);
            let a = metric.whiten(&w1).unwrap();
            let b = metric.whiten(&w2).unwrap();
            let wd = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            prop_assert!((wd - direct).abs() < 1e-9);
        }

        #[test]
        fn metric_projection_does_not_move_away(seed in 0u64..500) {
            let mut rng = derive_rng(SeedSpec::new(seed, 8));
            let lambdas: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..2.0)).collect();
            let g = gaussian_vec(&mut rng, 3).iter().map(|v| 3.0 * v).collect::<Vec<_>>();
            let inside = uniform_in_ball(&mut rng, 3, 1.0);
            let c = metric_ball_projection(&g, &lambdas, 1.0);
            let dist = |a: &[f64], b: &[f64]| -> f64 {
                a.iter().zip(b).zip(&lambdas).map(|((x, y), l)| l * (x - y).powi(2)).sum::<f64>()
            };
            prop_assert!(norm(&c) <= 1.0 + 1e-12);
            prop_assert!(dist(&c, &inside) <= dist(&g, &inside) * (1.0 + 1e-9) + 1e-15);
        }
    }
}
