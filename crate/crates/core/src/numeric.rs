//! Dense linear algebra substrate: column-space bases and affine subspaces.
//!
//! Vectors and matrices are plain `nalgebra` dynamic types. Finiteness is
//! checked wherever values enter the crate (operator construction, scenario
//! loading) rather than on every arithmetic step.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative singular-value cutoff used for every rank decision.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Orthonormality slack accepted by [`AffineSubspaceRep::new`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

pub fn ensure_finite_vector(v: &Vector, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::input(format!("{what} has non-finite entries")))
    }
}

pub fn ensure_finite_matrix(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::input(format!("{what} has non-finite entries")))
    }
}

/// Singular value decomposition `m = U diag(s) Vᵀ`, computed by `faer`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

fn to_faer(m: &Matrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn svd(m: &Matrix) -> Result<Svd> {
    ensure_finite_matrix(m, "matrix")?;
    let f = to_faer(m).svd().map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    Ok(Svd {
        u: from_faer(f.U()),
        singular_values: f.S().column_vector().iter().copied().collect(),
        v: from_faer(f.V()),
    })
}

impl Svd {
    /// Singular values above `tol` times the largest one, by index.
    fn kept(&self, tol: f64) -> Vec<usize> {
        let smax = self.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        if smax == 0.0 {
            return Vec::new();
        }
        let cutoff = tol * smax;
        (0..self.singular_values.len()).filter(|&i| self.singular_values[i] > cutoff).collect()
    }

    /// Minimum-norm least-squares solution of `m x = y` with the same
    /// relative rank cutoff as [`orthonormal_range_basis`].
    pub fn pseudo_solve(&self, y: &Vector, tol: f64) -> Result<Vector> {
        check_dim(self.u.nrows(), y.len())?;
        let mut x = Vector::zeros(self.v.nrows());
        for i in self.kept(tol) {
            let coef = self.u.column(i).dot(y) / self.singular_values[i];
            x.axpy(coef, &self.v.column(i), 1.0);
        }
        Ok(x)
    }
}

/// Orthonormal basis of the column space of `m`.
///
/// Left singular vectors whose singular value is at most `tol` times the
/// largest one are dropped, so the returned length is the numerical rank.
pub fn orthonormal_range_basis(m: &Matrix, tol: f64) -> Result<Vec<Vector>> {
    if !(tol >= 0.0) {
        return Err(Error::input("rank tolerance must be nonnegative"));
    }
    ensure_finite_matrix(m, "matrix")?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let d = svd(m)?;
    Ok(d.kept(tol).into_iter().map(|i| d.u.column(i).into_owned()).collect())
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    to_faer(m)
        .singular_values()
        .map(|s| s.into_iter().fold(0.0_f64, f64::max))
        .unwrap_or(f64::NAN)
}

/// Eigenvalues of the symmetric part `(m + mᵀ)/2`, ascending.
pub fn symmetric_part_eigenvalues(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let sym = (m + m.transpose()) * 0.5;
    let mut ev = to_faer(&sym)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .unwrap_or_else(|_| vec![f64::NAN; m.nrows()]);
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * m.amax().max(1.0)
}

/// An affine subspace `base + span(basis)` with an orthonormal basis.
///
/// An empty basis encodes the singleton `{base}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspaceRep {
    base: Vector,
    basis: Vec<Vector>,
}

impl AffineSubspaceRep {
    /// Validates that `basis` is orthonormal and dimensionally consistent.
    pub fn new(base: Vector, basis: Vec<Vector>) -> Result<Self> {
        ensure_finite_vector(&base, "subspace base")?;
        for (i, b) in basis.iter().enumerate() {
            check_dim(base.len(), b.len())?;
            ensure_finite_vector(b, "subspace basis vector")?;
            if (b.norm() - 1.0).abs() > ORTHONORMAL_TOL {
                return Err(Error::input(format!("basis vector {i} is not unit length")));
            }
            for c in &basis[..i] {
                if b.dot(c).abs() > ORTHONORMAL_TOL {
                    return Err(Error::input("basis vectors are not mutually orthogonal"));
                }
            }
        }
        Ok(Self { base, basis })
    }

    /// `base + span(generators)`, orthonormalizing the generators first.
    pub fn from_spanning(base: Vector, generators: &[Vector], tol: f64) -> Result<Self> {
        let dim = base.len();
        for g in generators {
            check_dim(dim, g.len())?;
        }
        let basis = if generators.is_empty() {
            Vec::new()
        } else {
            orthonormal_range_basis(&Matrix::from_columns(generators), tol)?
        };
        Self::new(base, basis)
    }

    /// `base + column space of m`.
    pub fn from_column_space(base: Vector, m: &Matrix, tol: f64) -> Result<Self> {
        check_dim(base.len(), m.nrows())?;
        Self::new(base, orthonormal_range_basis(m, tol)?)
    }

    pub fn point(p: Vector) -> Self {
        Self { base: p, basis: Vec::new() }
    }

    pub fn whole_space(dim: usize) -> Self {
        Self {
            base: Vector::zeros(dim),
            basis: (0..dim).map(|i| Vector::from_fn(dim, |r, _| if r == i { 1.0 } else { 0.0 })).collect(),
        }
    }

    pub fn base(&self) -> &Vector {
        &self.base
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.len()
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    fn project_direction(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(v.len());
        for b in &self.basis {
            out.axpy(v.dot(b), b, 1.0);
        }
        out
    }

    /// Nearest point of the subspace to `y`.
    pub fn project(&self, y: &Vector) -> Result<Vector> {
        check_dim(self.ambient_dim(), y.len())?;
        let offset = y - &self.base;
        Ok(&self.base + self.project_direction(&offset))
    }

    pub fn distance(&self, y: &Vector) -> Result<f64> {
        Ok((y - self.project(y)?).norm())
    }

    pub fn contains(&self, y: &Vector, tol: f64) -> Result<bool> {
        Ok(self.distance(y)? <= tol)
    }

    /// `{s1 + s2 : s1 ∈ self, s2 ∈ other}`.
    pub fn minkowski_sum(&self, other: &Self) -> Result<Self> {
        check_dim(self.ambient_dim(), other.ambient_dim())?;
        let generators: Vec<Vector> = self.basis.iter().chain(other.basis.iter()).cloned().collect();
        Self::from_spanning(&self.base + &other.base, &generators, DEFAULT_RANK_TOL)
    }

    /// `{λ s : s ∈ self}` for `λ > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::input("subspace scale factor must be positive"));
        }
        Ok(Self { base: &self.base * factor, basis: self.basis.clone() })
    }

    pub fn translated(&self, shift: &Vector) -> Result<Self> {
        check_dim(self.ambient_dim(), shift.len())?;
        Ok(Self { base: &self.base + shift, basis: self.basis.clone() })
    }

    /// Largest of: distance from `other`'s base to `self`, and the mutual
    /// projection residuals of the two direction spaces.
    pub fn discrepancy(&self, other: &Self) -> Result<f64> {
        check_dim(self.ambient_dim(), other.ambient_dim())?;
        let mut worst = self.distance(&other.base)?;
        for b in &other.basis {
            worst = worst.max((b - self.project_direction(b)).norm());
        }
        for b in &self.basis {
            worst = worst.max((b - other.project_direction(b)).norm());
        }
        Ok(worst)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> Result<bool> {
        Ok(self.discrepancy(other)? <= tol)
    }
}
