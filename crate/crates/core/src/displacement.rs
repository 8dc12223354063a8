//! Minimal displacement vectors: the projection of 0 onto cl ran(Id − T).
//!
//! Affine operators are handled exactly through their displacement range,
//! an affine subspace. Anything else falls back to fixed-point iteration.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numeric::{svd, AffineSubspaceRep, Matrix, Vector, DEFAULT_RANK_TOL};
use crate::operators::Operator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactAffine,
    ResidualIteration,
    NormalizedIterate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementEstimate {
    pub vector: Vector,
    pub residual: f64,
    pub iterations: usize,
    pub method: Method,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Starting point; the zero vector when `None`.
    pub x0: Option<Vector>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { x0: None, max_iter: 100_000, tol: 1e-8 }
    }
}

fn unsupported(op: &Operator) -> Error {
    Error::Unsupported(format!("{} has a non-affine leaf", op.label()))
}

/// `ran(Id − T) = col(I − M) − b` for affine `T x = Mx + b`.
pub fn displacement_range_affine(op: &Operator) -> Result<AffineSubspaceRep> {
    let form = op.flatten_to_affine().ok_or_else(|| unsupported(op))?;
    let dim = op.dim();
    let displacement = Matrix::identity(dim, dim) - &form.linear;
    AffineSubspaceRep::from_column_space(-form.offset, &displacement, DEFAULT_RANK_TOL)
}

/// Exact minimal displacement vector of an affine operator.
///
/// The residual is `‖(x* − T x*) − v‖` at a least-squares preimage `x*` of
/// `v`, so it measures attainment as well as solver error.
pub fn displacement_exact_affine(op: &Operator) -> Result<DisplacementEstimate> {
    let form = op.flatten_to_affine().ok_or_else(|| unsupported(op))?;
    let dim = op.dim();
    let displacement = Matrix::identity(dim, dim) - &form.linear;
    let range = AffineSubspaceRep::from_column_space(-&form.offset, &displacement, DEFAULT_RANK_TOL)?;
    let vector = range.project(&Vector::zeros(dim))?;
    let preimage = svd(&displacement)?.pseudo_solve(&(&vector + &form.offset), DEFAULT_RANK_TOL)?;
    let attained = &preimage - form.apply(&preimage);
    Ok(DisplacementEstimate {
        residual: (attained - &vector).norm(),
        vector,
        iterations: 0,
        method: Method::ExactAffine,
        converged: true,
    })
}

/// Iterations before agreement between checkpoints counts as convergence.
///
/// Residuals can stay constant for many steps before moving again (an
/// iterate sliding toward a face of a box), so agreement over a short run
/// proves nothing.
pub const MIN_STABLE_ITER: usize = 1 << 14;

/// Fixed-point iteration estimate of the minimal displacement vector.
///
/// Averaged maps use the residual `x_n − T x_n`; merely nonexpansive maps use
/// the normalized iterate `−x_n/n`. Estimates are compared at doubling
/// checkpoints `n/2` and `n`, and convergence is declared once they agree to
/// `tol` with `n ≥ MIN_STABLE_ITER`. A residual of norm at most `tol` stops
/// the iteration at once, since `‖mdv‖` never exceeds it. Running out of
/// iterations is not an error: the estimate so far comes back with
/// `converged = false`.
///
/// `residual` is the last checkpoint difference, or the residual norm when
/// the early stop fired.
pub fn displacement_iterative(op: &Operator, config: &EstimatorConfig) -> Result<DisplacementEstimate> {
    if config.max_iter == 0 {
        return Err(Error::input("max_iter must be at least 1"));
    }
    if !(config.tol > 0.0) {
        return Err(Error::input("iteration tolerance must be positive"));
    }
    let dim = op.dim();
    let x0 = config.x0.clone().unwrap_or_else(|| Vector::zeros(dim));
    check_dim(dim, x0.len())?;

    let method = if op.regularity().is_averaged() {
        Method::ResidualIteration
    } else {
        Method::NormalizedIterate
    };
    let non_finite = |n: usize| Error::Numerical(format!("non-finite iterate at step {n}"));

    let mut x = x0;
    let mut tx = op.apply(&x)?;
    let mut estimate = match method {
        Method::ResidualIteration => &x - &tx,
        _ => Vector::zeros(dim),
    };
    let mut residual = f64::INFINITY;
    let mut checkpoint: Option<Vector> = None;
    for n in 1..=config.max_iter {
        x = tx;
        tx = op.apply(&x)?;
        estimate = match method {
            Method::ResidualIteration => &x - &tx,
            _ => -&x / n as f64,
        };
        if !estimate.iter().all(|v| v.is_finite()) {
            return Err(non_finite(n));
        }
        if method == Method::ResidualIteration && estimate.norm() <= config.tol {
            let residual = estimate.norm();
            return Ok(DisplacementEstimate { vector: estimate, residual, iterations: n, method, converged: true });
        }
        if n.is_power_of_two() {
            if let Some(prev) = &checkpoint {
                residual = (&estimate - prev).norm();
                if residual <= config.tol && n >= MIN_STABLE_ITER {
                    return Ok(DisplacementEstimate { vector: estimate, residual, iterations: n, method, converged: true });
                }
            }
            checkpoint = Some(estimate.clone());
        }
    }
    Ok(DisplacementEstimate { vector: estimate, residual, iterations: config.max_iter, method, converged: false })
}

/// Exact when the operator flattens to an affine map, iterative otherwise.
pub fn estimate(op: &Operator, config: &EstimatorConfig) -> Result<DisplacementEstimate> {
    if op.flatten_to_affine().is_some() {
        displacement_exact_affine(op)
    } else {
        displacement_iterative(op, config)
    }
}

/// Whether `y ∈ ran(Id − T)`, tested as least-squares solvability of
/// `(I − M)x = y + b` up to `tol`.
pub fn membership_in_displacement_range(op: &Operator, y: &Vector, tol: f64) -> Result<bool> {
    check_dim(op.dim(), y.len())?;
    let range = displacement_range_affine(op)?;
    range.contains(y, tol)
}
