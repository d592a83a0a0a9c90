//! Orthonormal basis of the public-feature span and the projections used to
//! reduce a private learning problem to that span.

use crate::error::{check_dim, Result};
use crate::vecops::{axpy, dot, norm, scale};

/// Default rank tolerance, relative to the largest input norm.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Column-orthonormal `d x k` matrix `U` whose columns span the input vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBasis {
    d: usize,
    tol: f64,
    /// The `k` columns of `U`, each of length `d`.
    columns: Vec<Vec<f64>>,
}

impl ProjectionBasis {
    /// The identity basis of `R^d`.
    pub fn identity(d: usize) -> Self {
        let columns = (0..d)
            .map(|j| {
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                e
            })
            .collect();
        Self {
            d,
            tol: 0.0,
            columns,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Effective rank.
    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// `U^T x`
    pub fn project_down(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, x.len())?;
        Ok(self.columns.iter().map(|u| dot(u, x)).collect())
    }

    /// `U w`
    pub fn embed_up(&self, w_tilde: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.k(), w_tilde.len())?;
        let mut out = vec![0.0; self.d];
        for (u, &c) in self.columns.iter().zip(w_tilde) {
            axpy(c, u, &mut out);
        }
        Ok(out)
    }

    /// Orthogonal projection `U U^T x` onto the span.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let coeffs = self.project_down(x)?;
        self.embed_up(&coeffs)
    }
}

/// Removes from `v` its components along `columns` (one modified
/// Gram–Schmidt sweep).
fn mgs_sweep(columns: &[Vec<f64>], v: &mut [f64]) {
    for u in columns {
        let c = dot(u, v);
        axpy(-c, u, v);
    }
}

/// Rank-revealing orthonormal basis of `span(xs)`.
///
/// Modified Gram–Schmidt with a second re-orthogonalization sweep. A vector
/// whose residual norm is at most `tol * max_i ||x_i||` is absorbed into the
/// current span instead of adding a column.
pub fn orthonormal_basis(xs: &[Vec<f64>], d: usize, tol: f64) -> Result<ProjectionBasis> {
    for x in xs {
        check_dim(d, x.len())?;
    }
    let max_norm = xs.iter().map(|x| norm(x)).fold(0.0, f64::max);
    let threshold = tol * max_norm;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    if max_norm == 0.0 {
        return Ok(ProjectionBasis { d, tol, columns });
    }
    for x in xs {
        if columns.len() == d {
            break;
        }
        let mut v = x.clone();
        mgs_sweep(&columns, &mut v);
        mgs_sweep(&columns, &mut v);
        let r = norm(&v);
        if r > threshold {
            scale(1.0 / r, &mut v);
            columns.push(v);
        }
    }
    Ok(ProjectionBasis { d, tol, columns })
}

/// Euclidean projection onto the centered ball of radius `radius`.
pub fn project_to_ball(w: &[f64], radius: f64) -> Vec<f64> {
    let mut out = w.to_vec();
    project_to_ball_in_place(&mut out, radius);
    out
}

pub fn project_to_ball_in_place(w: &mut [f64], radius: f64) {
    let n = norm(w);
    if n > radius {
        scale(radius / n, w);
    }
}
