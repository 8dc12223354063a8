//! Closed convex sets with closed-form projectors.

use crate::error::{check_dim, Error, Result};
use crate::numeric::{ensure_finite_vector, AffineSubspaceRep, Vector};

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    Box { lo: Vector, hi: Vector },
    Ball { center: Vector, radius: f64 },
    /// `{x : ⟨normal, x⟩ ≤ offset}`; the normal need not be unit length.
    Halfspace { normal: Vector, offset: f64 },
    AffineSub(AffineSubspaceRep),
    Singleton(Vector),
}

impl ConvexSet {
    pub fn boxed(lo: Vector, hi: Vector) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        ensure_finite_vector(&lo, "box lower bound")?;
        ensure_finite_vector(&hi, "box upper bound")?;
        if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
            return Err(Error::input("box requires lo <= hi componentwise"));
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        ensure_finite_vector(&center, "ball center")?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::input("ball radius must be positive"));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self> {
        ensure_finite_vector(&normal, "halfspace normal")?;
        if !offset.is_finite() {
            return Err(Error::input("halfspace offset must be finite"));
        }
        if normal.norm() == 0.0 {
            return Err(Error::input("halfspace normal must be nonzero"));
        }
        Ok(ConvexSet::Halfspace { normal, offset })
    }

    pub fn affine(rep: AffineSubspaceRep) -> Self {
        ConvexSet::AffineSub(rep)
    }

    pub fn singleton(point: Vector) -> Result<Self> {
        ensure_finite_vector(&point, "singleton point")?;
        Ok(ConvexSet::Singleton(point))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Halfspace { normal, .. } => normal.len(),
            ConvexSet::AffineSub(rep) => rep.ambient_dim(),
            ConvexSet::Singleton(p) => p.len(),
        }
    }

    /// Sets whose projector is an affine map.
    pub fn is_affine(&self) -> bool {
        matches!(self, ConvexSet::AffineSub(_) | ConvexSet::Singleton(_))
    }

    pub fn project(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            ConvexSet::Box { lo, hi } => Vector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i])),
            ConvexSet::Ball { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= *radius {
                    x.clone()
                } else {
                    center + d * (*radius / n)
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    x - normal * (excess / normal.norm_squared())
                }
            }
            ConvexSet::AffineSub(rep) => rep.project(x)?,
            ConvexSet::Singleton(p) => p.clone(),
        })
    }

    /// True iff `x` lies within distance `tol` of the set.
    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok((x - self.project(x)?).norm() <= tol)
    }

    /// Some point of the set.
    pub fn any_point(&self) -> Vector {
        match self {
            ConvexSet::Box { lo, .. } => lo.clone(),
            ConvexSet::Ball { center, .. } => center.clone(),
            ConvexSet::Halfspace { normal, offset } => normal * (offset / normal.norm_squared()),
            ConvexSet::AffineSub(rep) => rep.base().clone(),
            ConvexSet::Singleton(p) => p.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn projection_examples() {
        let ball = ConvexSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(ball.project(&v(&[2.0, 0.0])).unwrap(), v(&[1.0, 0.0]));

        let left = ConvexSet::halfspace(v(&[1.0, 0.0]), 0.0).unwrap();
        assert_eq!(left.project(&v(&[-1.0, 5.0])).unwrap(), v(&[-1.0, 5.0]));

        let unit_box = ConvexSet::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        let x = v(&[2.0, -3.0]);
        let clamp = v(&[x[0].clamp(0.0, 1.0), x[1].clamp(0.0, 1.0)]);
        assert_eq!(unit_box.project(&x).unwrap(), clamp);
        assert_eq!(clamp, v(&[1.0, 0.0]));
    }

    #[test]
    fn halfspace_unnormalized_normal() {
        let h = ConvexSet::halfspace(v(&[3.0, 4.0]), 5.0).unwrap();
        // {3x+4y <= 5}; the point (3,4) is 4 units beyond the boundary along (0.6, 0.8)
        let p = h.project(&v(&[3.0, 4.0])).unwrap();
        assert!((p - v(&[0.6, 0.8])).norm() < 1e-14);
    }

    #[test]
    fn contains_examples() {
        let ball = ConvexSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert!(ball.contains(&v(&[0.5, 0.0]), 0.0).unwrap());
        let left = ConvexSet::halfspace(v(&[1.0, 0.0]), 0.0).unwrap();
        assert!(!left.contains(&v(&[1.0, 0.0]), 1e-9).unwrap());
        let unit_box = ConvexSet::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        assert!(unit_box.contains(&v(&[1.0 + 1e-12, 0.5]), 1e-9).unwrap());
    }

    #[test]
    fn constructor_validation() {
        assert!(ConvexSet::boxed(v(&[1.0]), v(&[0.0])).is_err());
        assert!(ConvexSet::ball(v(&[0.0]), 0.0).is_err());
        assert!(ConvexSet::halfspace(v(&[0.0, 0.0]), 1.0).is_err());
        assert!(ConvexSet::singleton(v(&[f64::INFINITY])).is_err());
        let ball = ConvexSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert!(matches!(ball.project(&v(&[1.0])), Err(Error::DimMismatch { .. })));
    }

    fn arb_set() -> impl Strategy<Value = ConvexSet> {
        let vec3 = || proptest::collection::vec(-3.0..3.0f64, 3).prop_map(Vector::from_vec);
        prop_oneof![
            (vec3(), vec3()).prop_map(|(a, b)| {
                let lo = a.zip_map(&b, f64::min);
                let hi = a.zip_map(&b, f64::max);
                ConvexSet::boxed(lo, hi).unwrap()
            }),
            (vec3(), 0.1..3.0f64).prop_map(|(c, r)| ConvexSet::ball(c, r).unwrap()),
            (vec3(), -2.0..2.0f64)
                .prop_filter("nonzero normal", |(n, _)| n.norm() > 1e-3)
                .prop_map(|(n, o)| ConvexSet::halfspace(n, o).unwrap()),
            vec3().prop_map(|p| ConvexSet::singleton(p).unwrap()),
            (vec3(), vec3()).prop_map(|(b, d)| ConvexSet::affine(
                AffineSubspaceRep::from_spanning(b, &[d], 1e-10).unwrap()
            )),
        ]
    }

    proptest! {
        #[test]
        fn projector_is_firmly_nonexpansive(
            set in arb_set(),
            x in proptest::collection::vec(-10.0..10.0f64, 3),
            y in proptest::collection::vec(-10.0..10.0f64, 3),
        ) {
            let (x, y) = (Vector::from_vec(x), Vector::from_vec(y));
            let (px, py) = (set.project(&x).unwrap(), set.project(&y).unwrap());
            let d = &px - &py;
            prop_assert!(d.norm_squared() <= (&x - &y).dot(&d) + 1e-8);
        }

        #[test]
        fn projection_feasible_idempotent_variational(
            set in arb_set(),
            x in proptest::collection::vec(-10.0..10.0f64, 3),
            c in proptest::collection::vec(-10.0..10.0f64, 3),
        ) {
            let x = Vector::from_vec(x);
            let p = set.project(&x).unwrap();
            prop_assert!(set.contains(&p, 1e-10).unwrap());
            prop_assert!((set.project(&p).unwrap() - &p).norm() <= 1e-10);
            // sample a feasible point by projecting an arbitrary one
            let c = set.project(&Vector::from_vec(c)).unwrap();
            prop_assert!((&x - &p).dot(&(&c - &p)) <= 1e-8);
        }

        #[test]
        fn displacement_of_projector_attains_zero(set in arb_set()) {
            let z = set.any_point();
            prop_assert!((&z - set.project(&z).unwrap()).norm() <= 1e-10);
        }
    }
}
