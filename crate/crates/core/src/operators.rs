//! Nonexpansive operator algebra.
//!
//! An [`Operator`] is an immutable expression tree whose leaves are affine
//! maps, projectors, gradient steps of convex quadratics and (reflected)
//! resolvents of affine monotone operators. Every constructor validates the
//! nonexpansiveness invariant of its variant, so a constructed operator is
//! always 1-Lipschitz.

use nalgebra::Cholesky;

use crate::error::{check_dim, Error, Result};
use crate::numeric::{
    ensure_finite_matrix, ensure_finite_vector, is_symmetric, orthonormal_range_basis,
    spectral_norm, symmetric_part_eigenvalues, AffineSubspaceRep, Matrix, Vector,
    DEFAULT_RANK_TOL,
};
use crate::sets::ConvexSet;

/// Slack on the spectral-norm test for affine maps.
pub const NONEXPANSIVE_TOL: f64 = 1e-10;
/// Slack on positive semidefiniteness of `Q + Qᵀ`.
pub const MONOTONE_TOL: f64 = 1e-10;
/// Cocoercivity moduli are capped here; the zero operator reports this value.
pub const COCOERCIVITY_CAP: f64 = 1e12;
/// Averagedness constant reported for maps that are α-averaged for every α.
pub const ALPHA_FLOOR: f64 = 1e-10;
/// Bisection results above this are treated as "merely nonexpansive".
pub const ALPHA_CEILING: f64 = 1.0 - 1e-6;

/// Affine maximally monotone operator `x ↦ Qx + q` with `Q + Qᵀ ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneAffine {
    linear: Matrix,
    offset: Vector,
    resolvent_linear: Matrix,
}

impl MonotoneAffine {
    pub fn new(linear: Matrix, offset: Vector) -> Result<Self> {
        if !linear.is_square() {
            return Err(Error::input("monotone operator matrix must be square"));
        }
        check_dim(linear.nrows(), offset.len())?;
        ensure_finite_matrix(&linear, "monotone operator matrix")?;
        ensure_finite_vector(&offset, "monotone operator offset")?;
        let eig = symmetric_part_eigenvalues(&linear);
        let scale = eig.iter().fold(1.0_f64, |m, e| m.max(e.abs()));
        if eig.first().is_some_and(|&lo| lo < -MONOTONE_TOL * scale) {
            return Err(Error::input(format!(
                "matrix is not monotone: smallest eigenvalue of symmetric part is {}",
                eig[0]
            )));
        }
        let dim = linear.nrows();
        let resolvent_linear = (Matrix::identity(dim, dim) + &linear)
            .try_inverse()
            .ok_or_else(|| Error::Numerical("I + Q is singular".into()))?;
        Ok(Self { linear, offset, resolvent_linear })
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(Matrix::zeros(dim, dim), Vector::zeros(dim)).expect("zero operator is monotone")
    }

    pub fn linear(&self) -> &Matrix {
        &self.linear
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(&self.linear * x + &self.offset)
    }

    /// `(I + Q)⁻¹`, the linear part of the resolvent.
    pub fn resolvent_linear(&self) -> &Matrix {
        &self.resolvent_linear
    }

    /// The operator `x ↦ A(x − y)`.
    pub fn shift_argument(&self, y: &Vector) -> Result<Self> {
        check_dim(self.dim(), y.len())?;
        Self::new(self.linear.clone(), &self.offset - &self.linear * y)
    }

    /// The operator `x ↦ A(x) − y`.
    pub fn subtract_constant(&self, y: &Vector) -> Result<Self> {
        check_dim(self.dim(), y.len())?;
        Self::new(self.linear.clone(), &self.offset - y)
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Self::new(&self.linear + &other.linear, &self.offset + &other.offset)
    }

    /// `ran A = col(Q) + q`.
    pub fn range(&self) -> Result<AffineSubspaceRep> {
        AffineSubspaceRep::from_column_space(self.offset.clone(), &self.linear, DEFAULT_RANK_TOL)
    }

    pub fn is_symmetric(&self) -> bool {
        is_symmetric(&self.linear, 1e-12)
    }

    /// Largest `μ` with `⟨u, Qu⟩ ≥ μ‖Qu‖²` for all `u`, capped at
    /// [`COCOERCIVITY_CAP`]; zero when no positive modulus exists.
    ///
    /// Symmetric `Q` gives `1/λ_max(Q)`. Otherwise the modulus is the
    /// smallest generalized eigenvalue of the pencil `(S, QᵀQ)` restricted to
    /// the row space of `Q`, where `S` is the symmetric part.
    pub fn cocoercivity_modulus(&self) -> f64 {
        if self.linear.amax() == 0.0 {
            return COCOERCIVITY_CAP;
        }
        let mu = if self.is_symmetric() {
            let lmax = symmetric_part_eigenvalues(&self.linear).last().copied().unwrap_or(0.0);
            if lmax <= 0.0 {
                COCOERCIVITY_CAP
            } else {
                1.0 / lmax
            }
        } else {
            self.nonsymmetric_modulus()
        };
        if mu < 1e-12 {
            0.0
        } else {
            mu.min(COCOERCIVITY_CAP)
        }
    }

    fn nonsymmetric_modulus(&self) -> f64 {
        let q = &self.linear;
        let Ok(row_basis) = orthonormal_range_basis(&q.transpose(), DEFAULT_RANK_TOL) else {
            return 0.0;
        };
        if row_basis.is_empty() {
            return COCOERCIVITY_CAP;
        }
        let v = Matrix::from_columns(&row_basis);
        let sym = (q + q.transpose()) * 0.5;
        let num = v.transpose() * sym * &v;
        let den = v.transpose() * q.transpose() * q * &v;
        let Some(chol) = Cholesky::new(den) else {
            return 0.0;
        };
        let l_inv = match chol.l().try_inverse() {
            Some(m) => m,
            None => return 0.0,
        };
        let reduced = &l_inv * num * l_inv.transpose();
        symmetric_part_eigenvalues(&reduced).first().copied().unwrap_or(0.0)
    }
}

/// Regularity certificate of a nonexpansive map.
#[derive(Debug, Clone, Copy)]
pub enum Regularity {
    Nonexpansive,
    Averaged(f64),
    FirmlyNonexpansive,
}

impl Regularity {
    pub fn averaged(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Regularity::Averaged(alpha))
        } else {
            Err(Error::input(format!("averagedness constant {alpha} outside (0,1)")))
        }
    }

    /// The averagedness constant, if certified.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Regularity::Nonexpansive => None,
            Regularity::Averaged(a) => Some(a),
            Regularity::FirmlyNonexpansive => Some(0.5),
        }
    }

    pub fn is_averaged(&self) -> bool {
        self.alpha().is_some()
    }

    /// Certificate for `second ∘ first` from the two-map averagedness rule.
    pub fn then(self, second: Regularity) -> Regularity {
        match (self.alpha(), second.alpha()) {
            (Some(a1), Some(a2)) => {
                let a = (a1 + a2 - 2.0 * a1 * a2) / (1.0 - a1 * a2);
                Regularity::Averaged(a.clamp(ALPHA_FLOOR, 1.0 - f64::EPSILON))
            }
            _ => Regularity::Nonexpansive,
        }
    }
}

impl PartialEq for Regularity {
    fn eq(&self, other: &Self) -> bool {
        self.alpha() == other.alpha()
    }
}

/// Smallest `α ∈ (0,1)` with `‖(M − (1−α)I)/α‖₂ ≤ 1 + tol`, by bisection.
///
/// `None` means `M` is nonexpansive but not averaged. The identity (and any
/// map averaged for every α) reports [`ALPHA_FLOOR`].
pub fn minimal_averagedness(m: &Matrix, tol: f64) -> Result<Option<f64>> {
    if !m.is_square() {
        return Err(Error::input("averagedness requires a square matrix"));
    }
    ensure_finite_matrix(m, "linear part")?;
    let norm = spectral_norm(m);
    if norm > 1.0 + tol {
        return Err(Error::NotNonexpansive { norm });
    }
    let dim = m.nrows();
    let id = Matrix::identity(dim, dim);
    let shifted = m - &id;
    let feasible = |alpha: f64| spectral_norm(&(&shifted / alpha + &id)) <= 1.0 + tol;
    if feasible(ALPHA_FLOOR) {
        return Ok(Some(ALPHA_FLOOR));
    }
    if !feasible(ALPHA_CEILING) {
        return Ok(None);
    }
    let (mut lo, mut hi) = (ALPHA_FLOOR, ALPHA_CEILING);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// `x ↦ linear·x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub linear: Matrix,
    pub offset: Vector,
}

impl AffineForm {
    pub fn identity(dim: usize) -> Self {
        Self { linear: Matrix::identity(dim, dim), offset: Vector::zeros(dim) }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.linear * x + &self.offset
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &AffineForm) -> AffineForm {
        AffineForm {
            linear: &self.linear * &inner.linear,
            offset: &self.linear * &inner.offset + &self.offset,
        }
    }
}

/// A nonexpansive map, built through the validating constructors.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    #[non_exhaustive]
    AffineMap { linear: Matrix, offset: Vector },
    #[non_exhaustive]
    SetProjector { set: ConvexSet },
    /// `x ↦ x − step·(Qx + q)` for symmetric PSD `Q`.
    #[non_exhaustive]
    GradientStep { hessian: Matrix, gradient_offset: Vector, step: f64 },
    #[non_exhaustive]
    Resolvent { op: MonotoneAffine },
    #[non_exhaustive]
    ReflectedResolvent { op: MonotoneAffine },
    /// Parts are applied innermost-first: `[R1, R2]` is `R2 ∘ R1`.
    #[non_exhaustive]
    Composition { parts: Vec<Operator> },
    #[non_exhaustive]
    ConvexCombination { weights: Vec<f64>, parts: Vec<Operator> },
}

impl Operator {
    pub fn affine(linear: Matrix, offset: Vector) -> Result<Self> {
        if !linear.is_square() {
            return Err(Error::input("affine map must be square"));
        }
        check_dim(linear.nrows(), offset.len())?;
        ensure_finite_matrix(&linear, "affine linear part")?;
        ensure_finite_vector(&offset, "affine offset")?;
        let norm = spectral_norm(&linear);
        if norm > 1.0 + NONEXPANSIVE_TOL {
            return Err(Error::NotNonexpansive { norm });
        }
        Ok(Operator::AffineMap { linear, offset })
    }

    pub fn identity(dim: usize) -> Self {
        Operator::AffineMap { linear: Matrix::identity(dim, dim), offset: Vector::zeros(dim) }
    }

    /// `x ↦ x + shift`.
    pub fn translation(shift: Vector) -> Result<Self> {
        let dim = shift.len();
        Self::affine(Matrix::identity(dim, dim), shift)
    }

    /// `x ↦ scale·x + offset` with `|scale| ≤ 1`.
    pub fn scaled_shift(scale: f64, offset: Vector) -> Result<Self> {
        let dim = offset.len();
        Self::affine(Matrix::identity(dim, dim) * scale, offset)
    }

    pub fn projector(set: ConvexSet) -> Self {
        Operator::SetProjector { set }
    }

    pub fn gradient_step(hessian: Matrix, gradient_offset: Vector, step: f64) -> Result<Self> {
        if !hessian.is_square() {
            return Err(Error::input("gradient step Hessian must be square"));
        }
        check_dim(hessian.nrows(), gradient_offset.len())?;
        ensure_finite_matrix(&hessian, "gradient step Hessian")?;
        ensure_finite_vector(&gradient_offset, "gradient step offset")?;
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::input("gradient step size must be positive"));
        }
        if !is_symmetric(&hessian, 1e-12) {
            return Err(Error::input("gradient step Hessian must be symmetric"));
        }
        let eig = symmetric_part_eigenvalues(&hessian);
        let lmax = eig.last().copied().unwrap_or(0.0);
        let scale = eig.iter().fold(1.0_f64, |m, e| m.max(e.abs()));
        if eig.first().is_some_and(|&lo| lo < -MONOTONE_TOL * scale) {
            return Err(Error::input("gradient step Hessian must be positive semidefinite"));
        }
        if step * lmax > 2.0 * (1.0 + 1e-12) {
            return Err(Error::input(format!("step·L = {} exceeds 2", step * lmax)));
        }
        Ok(Operator::GradientStep { hessian, gradient_offset, step })
    }

    pub fn resolvent(op: MonotoneAffine) -> Self {
        Operator::Resolvent { op }
    }

    pub fn reflected_resolvent(op: MonotoneAffine) -> Self {
        Operator::ReflectedResolvent { op }
    }

    pub fn compose(parts: Vec<Operator>) -> Result<Self> {
        common_dim(&parts)?;
        Ok(Operator::Composition { parts })
    }

    pub fn combine(weights: Vec<f64>, parts: Vec<Operator>) -> Result<Self> {
        common_dim(&parts)?;
        if weights.len() != parts.len() {
            return Err(Error::input("convex combination needs one weight per part"));
        }
        if weights.iter().any(|w| !(*w > 0.0 && *w < 1.0)) {
            return Err(Error::input("convex combination weights must lie in (0,1)"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!("convex combination weights sum to {total}")));
        }
        Ok(Operator::ConvexCombination { weights, parts })
    }

    pub fn dim(&self) -> usize {
        match self {
            Operator::AffineMap { offset, .. } => offset.len(),
            Operator::SetProjector { set } => set.dim(),
            Operator::GradientStep { gradient_offset, .. } => gradient_offset.len(),
            Operator::Resolvent { op } | Operator::ReflectedResolvent { op } => op.dim(),
            Operator::Composition { parts } | Operator::ConvexCombination { parts, .. } => parts[0].dim(),
        }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(self.apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: &Vector) -> Vector {
        match self {
            Operator::AffineMap { linear, offset } => linear * x + offset,
            Operator::SetProjector { set } => set.project(x).expect("dimension checked"),
            Operator::GradientStep { hessian, gradient_offset, step } => {
                x - (hessian * x + gradient_offset) * *step
            }
            Operator::Resolvent { op } => resolvent_apply(op, x),
            Operator::ReflectedResolvent { op } => resolvent_apply(op, x) * 2.0 - x,
            Operator::Composition { parts } => {
                parts.iter().fold(x.clone(), |acc, part| part.apply_unchecked(&acc))
            }
            Operator::ConvexCombination { weights, parts } => {
                let mut out = Vector::zeros(x.len());
                for (w, part) in weights.iter().zip(parts) {
                    out.axpy(*w, &part.apply_unchecked(x), 1.0);
                }
                out
            }
        }
    }

    /// `x − T x`.
    pub fn displacement(&self, x: &Vector) -> Result<Vector> {
        Ok(x - self.apply(x)?)
    }

    pub fn regularity(&self) -> Regularity {
        match self {
            Operator::SetProjector { .. } | Operator::Resolvent { .. } => Regularity::FirmlyNonexpansive,
            Operator::ReflectedResolvent { op } => {
                let mu = op.cocoercivity_modulus();
                if mu > 0.0 {
                    Regularity::Averaged(1.0 / (1.0 + mu))
                } else {
                    Regularity::Nonexpansive
                }
            }
            Operator::AffineMap { linear, .. } => match minimal_averagedness(linear, NONEXPANSIVE_TOL) {
                Ok(Some(alpha)) => Regularity::Averaged(alpha),
                _ => Regularity::Nonexpansive,
            },
            Operator::GradientStep { hessian, step, .. } => {
                let lmax = symmetric_part_eigenvalues(hessian).last().copied().unwrap_or(0.0);
                let ratio = step * lmax;
                if ratio < 2.0 {
                    Regularity::Averaged((ratio / 2.0).max(ALPHA_FLOOR))
                } else {
                    Regularity::Nonexpansive
                }
            }
            Operator::Composition { parts } => {
                let mut iter = parts.iter().map(Operator::regularity);
                let first = iter.next().unwrap_or(Regularity::Averaged(ALPHA_FLOOR));
                iter.fold(first, Regularity::then)
            }
            Operator::ConvexCombination { weights, parts } => {
                let mut total = 0.0;
                for (w, part) in weights.iter().zip(parts) {
                    match part.regularity().alpha() {
                        Some(a) => total += w * a,
                        None => return Regularity::Nonexpansive,
                    }
                }
                Regularity::Averaged(total.clamp(ALPHA_FLOOR, 1.0 - f64::EPSILON))
            }
        }
    }

    /// Exact affine form when every leaf is affine; `None` otherwise.
    pub fn flatten_to_affine(&self) -> Option<AffineForm> {
        let dim = self.dim();
        match self {
            Operator::AffineMap { linear, offset } => {
                Some(AffineForm { linear: linear.clone(), offset: offset.clone() })
            }
            Operator::SetProjector { set } => match set {
                ConvexSet::Singleton(p) => {
                    Some(AffineForm { linear: Matrix::zeros(dim, dim), offset: p.clone() })
                }
                ConvexSet::AffineSub(rep) => {
                    let mut proj = Matrix::zeros(dim, dim);
                    for b in rep.basis() {
                        proj += b * b.transpose();
                    }
                    let offset = rep.base() - &proj * rep.base();
                    Some(AffineForm { linear: proj, offset })
                }
                _ => None,
            },
            Operator::GradientStep { hessian, gradient_offset, step } => Some(AffineForm {
                linear: Matrix::identity(dim, dim) - hessian * *step,
                offset: gradient_offset * -*step,
            }),
            Operator::Resolvent { op } => Some(resolvent_form(op)),
            Operator::ReflectedResolvent { op } => {
                let j = resolvent_form(op);
                Some(AffineForm {
                    linear: j.linear * 2.0 - Matrix::identity(dim, dim),
                    offset: j.offset * 2.0,
                })
            }
            Operator::Composition { parts } => parts
                .iter()
                .try_fold(AffineForm::identity(dim), |acc, part| Some(part.flatten_to_affine()?.after(&acc))),
            Operator::ConvexCombination { weights, parts } => {
                let mut out = AffineForm { linear: Matrix::zeros(dim, dim), offset: Vector::zeros(dim) };
                for (w, part) in weights.iter().zip(parts) {
                    let f = part.flatten_to_affine()?;
                    out.linear += f.linear * *w;
                    out.offset += f.offset * *w;
                }
                Some(out)
            }
        }
    }

    /// Short human-readable label used in reports.
    pub fn label(&self) -> String {
        match self {
            Operator::AffineMap { .. } => "affine".into(),
            Operator::SetProjector { set } => match set {
                ConvexSet::Box { .. } => "proj(box)".into(),
                ConvexSet::Ball { .. } => "proj(ball)".into(),
                ConvexSet::Halfspace { .. } => "proj(halfspace)".into(),
                ConvexSet::AffineSub(_) => "proj(affine)".into(),
                ConvexSet::Singleton(_) => "proj(point)".into(),
            },
            Operator::GradientStep { .. } => "gradstep".into(),
            Operator::Resolvent { .. } => "resolvent".into(),
            Operator::ReflectedResolvent { .. } => "reflected".into(),
            Operator::Composition { parts } => {
                let inner: Vec<String> = parts.iter().rev().map(Operator::label).collect();
                format!("({})", inner.join(" . "))
            }
            Operator::ConvexCombination { parts, .. } => {
                let inner: Vec<String> = parts.iter().map(Operator::label).collect();
                format!("combo[{}]", inner.join(", "))
            }
        }
    }
}

fn common_dim(parts: &[Operator]) -> Result<usize> {
    let first = parts.first().ok_or_else(|| Error::input("operator list must be nonempty"))?;
    let dim = first.dim();
    for p in parts {
        check_dim(dim, p.dim())?;
    }
    Ok(dim)
}

fn resolvent_apply(op: &MonotoneAffine, x: &Vector) -> Vector {
    op.resolvent_linear() * (x - op.offset())
}

fn resolvent_form(op: &MonotoneAffine) -> AffineForm {
    let inv = op.resolvent_linear().clone();
    let offset = -(&inv * op.offset());
    AffineForm { linear: inv, offset }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn random_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vector {
        Vector::from_fn(dim, |_, _| rng.gen_range(-scale..scale))
    }

    fn random_psd(rng: &mut ChaCha8Rng, dim: usize) -> Matrix {
        let g = Matrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        &g * g.transpose()
    }

    fn sample_operators() -> Vec<Operator> {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dim = 3;
        let q = random_psd(&mut rng, dim);
        let skew = {
            let g = Matrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
            &g - g.transpose()
        };
        let a = MonotoneAffine::new(q.clone(), random_vec(&mut rng, dim, 1.0)).unwrap();
        let b = MonotoneAffine::new(&q + &skew, random_vec(&mut rng, dim, 1.0)).unwrap();
        let lmax = symmetric_part_eigenvalues(&q).last().copied().unwrap();
        let m = {
            let g = Matrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
            &g * (0.9 / spectral_norm(&g))
        };
        let ball = ConvexSet::ball(v(&[0.5, 0.0, -1.0]), 0.7).unwrap();
        let half = ConvexSet::halfspace(v(&[1.0, 2.0, -1.0]), 0.3).unwrap();
        let parts = vec![
            Operator::affine(m, random_vec(&mut rng, dim, 1.0)).unwrap(),
            Operator::projector(ball),
            Operator::gradient_step(q.clone(), random_vec(&mut rng, dim, 1.0), 1.5 / lmax).unwrap(),
            Operator::resolvent(a.clone()),
            Operator::reflected_resolvent(a),
            Operator::reflected_resolvent(b),
            Operator::scaled_shift(-1.0, v(&[1.0, 0.0, 0.0])).unwrap(),
            Operator::projector(half),
        ];
        let mut out = parts.clone();
        out.push(Operator::compose(parts.clone()).unwrap());
        out.push(Operator::combine(vec![0.25, 0.5, 0.25], parts[..3].to_vec()).unwrap());
        out.push(Operator::compose(vec![parts[0].clone(), parts[2].clone(), parts[4].clone()]).unwrap());
        out
    }

    #[test]
    fn apply_examples() {
        let zero = MonotoneAffine::zero(2);
        assert_eq!(Operator::resolvent(zero).apply(&v(&[3.0, 4.0])).unwrap(), v(&[3.0, 4.0]));

        let shifted = MonotoneAffine::new(Matrix::zeros(2, 2), v(&[1.0, 0.0])).unwrap();
        assert_eq!(Operator::reflected_resolvent(shifted).apply(&v(&[0.0, 0.0])).unwrap(), v(&[-2.0, 0.0]));

        let u = v(&[1.0, 0.0]);
        let r1 = Operator::scaled_shift(-1.0, Vector::zeros(2)).unwrap();
        let r2 = Operator::scaled_shift(-1.0, u).unwrap();
        let comp = Operator::compose(vec![r1, r2]).unwrap();
        assert_eq!(comp.apply(&v(&[5.0, 5.0])).unwrap(), v(&[6.0, 5.0]));
    }

    #[test]
    fn apply_dim_mismatch() {
        let id = Operator::identity(2);
        assert!(matches!(id.apply(&v(&[1.0])), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn constructors_reject_invalid() {
        assert!(matches!(
            Operator::affine(Matrix::identity(2, 2) * 1.1, Vector::zeros(2)),
            Err(Error::NotNonexpansive { .. })
        ));
        let q = Matrix::from_diagonal(&v(&[2.0, 1.0]));
        assert!(Operator::gradient_step(q.clone(), Vector::zeros(2), 1.5).is_err());
        assert!(Operator::gradient_step(q, Vector::zeros(2), 1.0).is_ok());
        assert!(MonotoneAffine::new(Matrix::from_diagonal(&v(&[1.0, -0.5])), Vector::zeros(2)).is_err());
        assert!(Operator::combine(vec![0.5, 0.6], vec![Operator::identity(1), Operator::identity(1)]).is_err());
        assert!(Operator::combine(vec![1.0], vec![Operator::identity(1)]).is_err());
        assert!(Operator::compose(vec![Operator::identity(1), Operator::identity(2)]).is_err());
        assert!(Operator::compose(vec![]).is_err());
    }

    #[test]
    fn regularity_examples() {
        let p = Operator::projector(ConvexSet::ball(Vector::zeros(2), 1.0).unwrap());
        assert_eq!(p.regularity(), Regularity::FirmlyNonexpansive);
        assert_eq!(p.regularity(), Regularity::Averaged(0.5));

        let comp = Operator::compose(vec![p.clone(), p.clone()]).unwrap();
        let alpha = comp.regularity().alpha().unwrap();
        assert!((alpha - 2.0 / 3.0).abs() < 1e-15);

        let neg = Operator::scaled_shift(-1.0, Vector::zeros(2)).unwrap();
        assert_eq!(neg.regularity(), Regularity::Nonexpansive);
        assert!(!Operator::compose(vec![neg, p]).unwrap().regularity().is_averaged());
    }

    #[test]
    fn composed_projectors_satisfy_two_thirds_averagedness() {
        let p1 = Operator::projector(ConvexSet::ball(v(&[1.0, 0.0]), 1.0).unwrap());
        let p2 = Operator::projector(ConvexSet::halfspace(v(&[1.0, 1.0]), -0.5).unwrap());
        let t = Operator::compose(vec![p1, p2]).unwrap();
        let alpha = t.regularity().alpha().unwrap();
        let k = alpha / (1.0 - alpha);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = random_vec(&mut rng, 2, 4.0);
            let y = random_vec(&mut rng, 2, 4.0);
            let (tx, ty) = (t.apply(&x).unwrap(), t.apply(&y).unwrap());
            let lhs = ((&x - &tx) - (&y - &ty)).norm_squared();
            let rhs = k * ((&x - &y).norm_squared() - (&tx - &ty).norm_squared());
            assert!(lhs <= rhs + 1e-8, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn minimal_averagedness_examples() {
        let half = minimal_averagedness(&Matrix::zeros(2, 2), 1e-10).unwrap().unwrap();
        // (1−α)/α ≤ 1 + tol  ⇔  α ≥ 1/(2 + tol)
        assert!((half - 1.0 / (2.0 + 1e-10)).abs() <= 2e-10);
        assert_eq!(minimal_averagedness(&Matrix::identity(2, 2), 1e-10).unwrap(), Some(ALPHA_FLOOR));
        assert_eq!(minimal_averagedness(&(-Matrix::identity(2, 2)), 1e-10).unwrap(), None);
        assert!(matches!(
            minimal_averagedness(&(Matrix::identity(2, 2) * 2.0), 1e-10),
            Err(Error::NotNonexpansive { .. })
        ));
    }

    #[test]
    fn minimal_averagedness_scalar_oracle() {
        // for M = cI with c ∈ (−1, 1): α* = (1 − c)/2 solves |c − (1−α)| = α
        for c in [-0.8, -0.3, 0.0, 0.4, 0.9] {
            let m = Matrix::identity(3, 3) * c;
            let alpha = minimal_averagedness(&m, 0.0).unwrap().unwrap();
            assert!((alpha - (1.0 - c) / 2.0).abs() < 1e-9, "c={c}: {alpha}");
        }
    }

    #[test]
    fn flatten_examples() {
        let u1 = v(&[1.0, 2.0]);
        let u2 = v(&[-3.0, 0.5]);
        let r1 = Operator::scaled_shift(-1.0, -&u1).unwrap();
        let r2 = Operator::scaled_shift(-1.0, -&u2).unwrap();
        let f = Operator::compose(vec![r1, r2]).unwrap().flatten_to_affine().unwrap();
        assert_eq!(f.linear, Matrix::identity(2, 2));
        assert_eq!(f.offset, &u1 - &u2);

        let combo = Operator::combine(vec![0.5, 0.5], vec![Operator::identity(2), Operator::identity(2)]).unwrap();
        assert_eq!(combo.flatten_to_affine().unwrap(), AffineForm::identity(2));

        let res = Operator::resolvent(MonotoneAffine::new(Matrix::identity(2, 2), Vector::zeros(2)).unwrap());
        let f = res.flatten_to_affine().unwrap();
        assert!((f.linear - Matrix::identity(2, 2) * 0.5).amax() < 1e-15);
        assert_eq!(f.offset, Vector::zeros(2));

        let ball = Operator::projector(ConvexSet::ball(Vector::zeros(2), 1.0).unwrap());
        assert!(Operator::compose(vec![Operator::identity(2), ball]).unwrap().flatten_to_affine().is_none());
    }

    #[test]
    fn flatten_agrees_with_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dim = 3;
        let line = AffineSubspaceRep::from_spanning(v(&[1.0, 2.0, 0.0]), &[v(&[1.0, 1.0, 1.0])], 1e-10).unwrap();
        let mut ops: Vec<Operator> = sample_operators()
            .into_iter()
            .filter(|op| op.flatten_to_affine().is_some())
            .collect();
        ops.push(Operator::projector(ConvexSet::affine(line)));
        ops.push(Operator::projector(ConvexSet::singleton(v(&[0.0, 1.0, 2.0])).unwrap()));
        for op in &ops {
            let f = op.flatten_to_affine().unwrap();
            // dim+1 affinely independent points: origin and the unit vectors, plus random ones
            let mut points = vec![Vector::zeros(dim)];
            points.extend((0..dim).map(|i| Vector::from_fn(dim, |r, _| if r == i { 1.0 } else { 0.0 })));
            points.extend((0..5).map(|_| random_vec(&mut rng, dim, 5.0)));
            for x in points {
                assert!((f.apply(&x) - op.apply(&x).unwrap()).norm() < 1e-9, "{}", op.label());
            }
        }
    }

    #[test]
    fn sampled_nonexpansive_and_averaged() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for op in sample_operators() {
            let reg = op.regularity();
            for _ in 0..1000 {
                let x = random_vec(&mut rng, 3, 5.0);
                let y = random_vec(&mut rng, 3, 5.0);
                let (tx, ty) = (op.apply(&x).unwrap(), op.apply(&y).unwrap());
                let dxy = (&x - &y).norm_squared();
                let dt = (&tx - &ty).norm_squared();
                assert!(dt.sqrt() <= dxy.sqrt() + 1e-9, "{} expands", op.label());
                if let Some(alpha) = reg.alpha() {
                    let lhs = ((&x - &tx) - (&y - &ty)).norm_squared();
                    let rhs = alpha / (1.0 - alpha) * (dxy - dt);
                    assert!(lhs <= rhs + 1e-8, "{} violates {alpha}-averagedness", op.label());
                }
            }
        }
    }

    #[test]
    fn minty_and_inverse_resolvent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let q = random_psd(&mut rng, 4);
            let a = MonotoneAffine::new(q, random_vec(&mut rng, 4, 2.0)).unwrap();
            let j = Operator::resolvent(a.clone());
            let r = Operator::reflected_resolvent(a.clone());
            for _ in 0..20 {
                let x = random_vec(&mut rng, 4, 5.0);
                let y = j.apply(&x).unwrap();
                // x − J_A x ∈ A(J_A x), i.e. J_{A⁻¹} x lands in the graph
                let inverse_resolvent = &x - &y;
                assert!((&inverse_resolvent - a.apply(&y).unwrap()).norm() < 1e-10);
                let residual = (Matrix::identity(4, 4) + a.linear()) * &y - (&x - a.offset());
                assert!(residual.norm() < 1e-10);
                assert_eq!(r.apply(&x).unwrap(), &y * 2.0 - &x);
            }
        }
    }

    #[test]
    fn cocoercivity_modulus_cases() {
        assert_eq!(MonotoneAffine::zero(2).cocoercivity_modulus(), COCOERCIVITY_CAP);
        let id = MonotoneAffine::new(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
        assert!((id.cocoercivity_modulus() - 1.0).abs() < 1e-12);
        let diag = MonotoneAffine::new(Matrix::from_diagonal(&v(&[2.0, 0.5])), Vector::zeros(2)).unwrap();
        assert!((diag.cocoercivity_modulus() - 0.5).abs() < 1e-12);
        // a rotation generator is monotone but not cocoercive
        let skew = MonotoneAffine::new(Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]), Vector::zeros(2)).unwrap();
        assert_eq!(skew.cocoercivity_modulus(), 0.0);
        assert_eq!(Operator::reflected_resolvent(skew).regularity(), Regularity::Nonexpansive);
    }

    #[test]
    fn nonsymmetric_cocoercivity_matches_sampling() {
        // Q = [[1, 1], [-1, 1]] = I + J: ⟨u, Qu⟩ = ‖u‖², ‖Qu‖² = 2‖u‖², so μ = 1/2
        let q = Matrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]);
        let a = MonotoneAffine::new(q.clone(), Vector::zeros(2)).unwrap();
        assert!((a.cocoercivity_modulus() - 0.5).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = random_psd(&mut rng, 3) + {
            let g = Matrix::from_fn(3, 3, |_, _| rng.gen_range(-0.5..0.5));
            &g - g.transpose()
        };
        let a = MonotoneAffine::new(q.clone(), Vector::zeros(3)).unwrap();
        let mu = a.cocoercivity_modulus();
        let mut sampled = f64::INFINITY;
        for _ in 0..20000 {
            let u = random_vec(&mut rng, 3, 1.0);
            let qu = &q * &u;
            sampled = sampled.min(u.dot(&qu) / qu.norm_squared());
        }
        assert!(mu <= sampled + 1e-12);
        assert!(sampled - mu < 1e-2, "mu={mu} sampled={sampled}");
    }

    #[test]
    fn shift_rules() {
        let a = MonotoneAffine::new(Matrix::from_diagonal(&v(&[1.0, 2.0])), v(&[0.5, -1.0])).unwrap();
        let y = v(&[3.0, -2.0]);
        let x = v(&[0.7, 0.1]);
        let shifted = a.shift_argument(&y).unwrap();
        assert!((shifted.apply(&x).unwrap() - a.apply(&(&x - &y)).unwrap()).norm() < 1e-14);
        let minus = a.subtract_constant(&y).unwrap();
        assert!((minus.apply(&x).unwrap() - (a.apply(&x).unwrap() - &y)).norm() < 1e-14);
    }
}
