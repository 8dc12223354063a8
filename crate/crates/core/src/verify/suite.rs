//! Batteries of checks: the seeded randomized suite and the built-in
//! reproduction battery run by `mindisp verify --builtin-suite`.

use rand::{Rng, SeedableRng};

use super::random::{
    contraction_operator, gaussian_vector, instance_seed, random_permutation, random_psd_operator,
    random_weights, uniform_vector, InstanceRng, SharedFixedSpace,
};
use super::{delta_operator, CheckReport, Checker, EXACT_TOL, ITERATIVE_TOL};
use crate::displacement::displacement_exact_affine;
use crate::error::Result;
use crate::numeric::{AffineSubspaceRep, Matrix, Vector};
use crate::operators::{MonotoneAffine, Operator};
use crate::sets::ConvexSet;

/// Tolerance for range equalities on random instances.
pub const RANDOM_RANGE_TOL: f64 = 1e-8;

/// Sorts by check name, then instance label.
pub fn canonicalize(reports: &mut [CheckReport]) {
    reports.sort_by(|a, b| a.check_name.cmp(&b.check_name).then_with(|| a.instance.cmp(&b.instance)));
}

fn label(family: &str, m: usize, index: usize) -> String {
    format!("{family}/m{m}/{index:04}")
}

/// `m` operators sharing a fixed space, all averaged, except that the one
/// at `orthogonal_at` (if any) is an orthogonal map.
pub fn structured_instance(rng: &mut InstanceRng, dim: usize, m: usize, orthogonal_at: &[usize]) -> Vec<Operator> {
    let fam = SharedFixedSpace::random(rng, dim);
    (0..m)
        .map(|i| if orthogonal_at.contains(&i) { fam.orthogonal(rng) } else { fam.averaged(rng) })
        .collect()
}

/// Random mix of box, ball and halfspace projectors with translations;
/// always contains at least one projector and one translation.
///
/// A shift ending in a projector onto a box or ball maps a compact convex
/// set into itself and has a fixed point, so these instances have zero
/// minimal displacement whenever a bounded set occurs.
pub fn nonaffine_instance(rng: &mut InstanceRng, dim: usize) -> Vec<Operator> {
    mixed_instance(rng, dim, false)
}

/// Halfspace projectors and translations only. Usually inconsistent, so
/// the minimal displacement vector is typically nonzero.
pub fn unbounded_nonaffine_instance(rng: &mut InstanceRng, dim: usize) -> Vec<Operator> {
    mixed_instance(rng, dim, true)
}

fn mixed_instance(rng: &mut InstanceRng, dim: usize, halfspaces_only: bool) -> Vec<Operator> {
    let m = rng.gen_range(3..=4);
    let translation_at = rng.gen_range(0..m);
    (0..m)
        .map(|i| {
            if i == translation_at || (i != 0 && rng.gen_bool(0.2)) {
                return Operator::translation(gaussian_vector(rng, dim) * 0.5).expect("translation");
            }
            let kind = if halfspaces_only { 2 } else { rng.gen_range(0..3) };
            let set = match kind {
                0 => {
                    let c = uniform_vector(rng, dim, 2.0);
                    let w = Vector::from_fn(dim, |_, _| rng.gen_range(0.2..1.5));
                    ConvexSet::boxed(&c - &w, &c + &w)
                }
                1 => ConvexSet::ball(uniform_vector(rng, dim, 2.0), rng.gen_range(0.5..2.0)),
                _ => ConvexSet::halfspace(gaussian_vector(rng, dim), rng.gen_range(-1.0..1.0)),
            }
            .expect("valid random set");
            Operator::projector(set)
        })
        .collect()
}

/// Seeded instances of random averaged and merely nonexpansive affine
/// operators and random PSD monotone operators, run through every
/// applicable check. Deterministic given the arguments.
pub fn run_randomized_suite(dim: usize, m: usize, count: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let checker = Checker::default();
    let mut out = Vec::new();
    for index in 0..count {
        let s = instance_seed(seed, index as u64);
        let mut rng = InstanceRng::seed_from_u64(s);
        let tag = |family: &str| label(family, m, index);

        // spectral norm 0.95 contractions
        let ops: Vec<Operator> = (0..m).map(|_| contraction_operator(&mut rng, dim)).collect();
        let sigma = random_permutation(&mut rng, m);
        for r in [
            checker.check_range_formula_composition(&ops, RANDOM_RANGE_TOL)?,
            checker.check_permutation_displacement(&ops, &sigma, EXACT_TOL)?,
            checker.check_norm_bound_composition(&ops, EXACT_TOL)?,
        ] {
            out.push(r.with_instance(tag("contraction")).with_seed(s));
        }

        // averaged maps with a shared fixed space: proper ranges, nonzero mdv
        let ops = structured_instance(&mut rng, dim, m, &[]);
        let sigma = random_permutation(&mut rng, m);
        for r in [
            checker.check_range_formula_composition(&ops, RANDOM_RANGE_TOL)?,
            checker.check_permutation_displacement(&ops, &sigma, EXACT_TOL)?,
            checker.check_norm_bound_composition(&ops, EXACT_TOL)?,
            checker.check_cyclic_norm(&ops, EXACT_TOL)?,
            checker.check_cyclic_attainment(&ops, EXACT_TOL)?,
        ] {
            out.push(r.with_instance(tag("averaged")).with_seed(s));
        }

        // exactly one orthogonal map at a random position
        let j = rng.gen_range(0..m);
        let ops = structured_instance(&mut rng, dim, m, &[j]);
        let sigma = random_permutation(&mut rng, m);
        for r in [
            checker.check_range_formula_composition(&ops, RANDOM_RANGE_TOL)?,
            checker.check_permutation_displacement(&ops, &sigma, EXACT_TOL)?,
            checker.check_norm_bound_composition(&ops, EXACT_TOL)?,
            checker.check_cyclic_norm(&ops, EXACT_TOL)?,
        ] {
            out.push(r.with_instance(format!("{}/j{j}", tag("one_orthogonal"))).with_seed(s));
        }

        // two orthogonal maps: outside the hypotheses, reported as such
        if m >= 2 {
            let ops = structured_instance(&mut rng, dim, m, &[0, 1]);
            out.push(
                checker
                    .check_range_formula_composition(&ops, RANDOM_RANGE_TOL)?
                    .with_instance(tag("two_orthogonal"))
                    .with_seed(s),
            );
        }

        // convex combinations of merely nonexpansive maps
        let orth: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
        let ops = structured_instance(&mut rng, dim, m, &orth);
        let weights = random_weights(&mut rng, m);
        out.push(
            checker
                .check_convex_combination(&ops, &weights, EXACT_TOL)?
                .with_instance(tag("combination"))
                .with_seed(s),
        );
        let (ops, weights) = zero_sum_instance(&mut rng, dim, m)?;
        out.push(checker.check_zero_sum_corollary(&ops, &weights)?.with_instance(tag("zero_sum")).with_seed(s));

        // monotone affine pairs
        let a = random_psd_operator(&mut rng, dim);
        let b = random_psd_operator(&mut rng, dim);
        let y = gaussian_vector(&mut rng, dim);
        let sub = rng.gen::<u64>();
        for r in [
            checker.check_cocoercive_averaged_equivalence(&a, a.cocoercivity_modulus(), 200, sub)?,
            checker.check_brezis_haraux_affine(&a, &b)?,
            checker.check_translation_formula(&a, &b, &y, 50, sub)?,
            checker.check_range_identity_reflected(&a)?,
            checker.check_displacement_range_inclusion(&a, &b, 50, sub)?,
        ] {
            let seed = if r.seed == 0 { s } else { r.seed };
            out.push(r.with_instance(tag("monotone")).with_seed(seed));
        }
    }
    canonicalize(&mut out);
    Ok(out)
}

/// Operators and weights with `Σ λᵢ mdv(Rᵢ) = 0`: `m − 1` random affine
/// maps plus a translation that cancels their weighted displacement.
pub fn zero_sum_instance(rng: &mut InstanceRng, dim: usize, m: usize) -> Result<(Vec<Operator>, Vec<f64>)> {
    let k = m.max(2);
    let orth: Vec<usize> = (0..k - 1).filter(|_| rng.gen_bool(0.3)).collect();
    let mut ops = structured_instance(rng, dim, k - 1, &orth);
    let weights = random_weights(rng, k);
    let mut weighted = Vector::zeros(dim);
    for (op, w) in ops.iter().zip(&weights) {
        weighted.axpy(*w, &displacement_exact_affine(op)?.vector, 1.0);
    }
    // x ↦ x − a has mdv a
    let a = -weighted / weights[k - 1];
    ops.push(Operator::translation(-a)?);
    Ok((ops, weights))
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

/// The built-in reproduction battery: both counterexamples, the closed form
/// over all δ-triples, randomized trials for m ∈ {2, 3, 4}, iterative
/// cyclic checks, convex combinations, monotone-operator identities and the
/// projected gradient bound.
pub fn builtin_suite(seed: u64, checker: &Checker) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();

    // x ↦ −x − uᵢ: nonexpansive, not averaged
    let (u1, u2) = (v(&[1.0, 0.0]), v(&[0.0, 1.0]));
    let flips = [delta_operator(-1, &u1)?, delta_operator(-1, &u2)?];
    for r in [
        checker.check_range_formula_composition(&flips, EXACT_TOL)?,
        checker.check_permutation_displacement(&flips, &[1, 0], EXACT_TOL)?,
        checker.check_norm_bound_composition(&flips, EXACT_TOL)?,
        checker.check_cyclic_norm(&flips, EXACT_TOL)?,
        checker.check_convex_combination(&flips, &[0.5, 0.5], EXACT_TOL)?,
    ] {
        out.push(r.with_instance("two_flips"));
    }

    let mut rng = InstanceRng::seed_from_u64(instance_seed(seed, 1));
    let mut us = vec![v(&[1.0, 0.0]), v(&[0.0, 3.0]), Vector::zeros(2)];
    us.extend((0..10).map(|_| gaussian_vector(&mut rng, 2)));
    for (i, u) in us.iter().enumerate() {
        out.push(checker.check_noncyclic_counterexample(u)?.with_instance(format!("u/{i:02}")));
    }
    let u = v(&[1.0, 0.0]);
    let noncyclic = [delta_operator(-1, &Vector::zeros(2))?, delta_operator(-1, &-&u)?, delta_operator(1, &u)?];
    out.push(checker.check_permutation_displacement(&noncyclic, &[1, 0, 2], EXACT_TOL)?.with_instance("noncyclic"));
    out.push(checker.check_cyclic_norm(&noncyclic, EXACT_TOL)?.with_instance("noncyclic"));
    out.push(checker.check_cyclic_attainment(&noncyclic, EXACT_TOL)?.with_instance("noncyclic"));

    let mut rng = InstanceRng::seed_from_u64(instance_seed(seed, 2));
    for trial in 0..5 {
        let a = [gaussian_vector(&mut rng, 3), gaussian_vector(&mut rng, 3), gaussian_vector(&mut rng, 3)];
        for deltas in all_delta_triples() {
            let r = checker.check_three_op_closed_form(deltas, &a)?;
            let inst = format!("{}/{trial}", r.instance);
            out.push(r.with_instance(inst));
        }
    }

    for (k, m) in (2..=4).enumerate() {
        out.extend(run_randomized_suite(5, m, 100, instance_seed(seed, 10 + k as u64))?);
    }

    let mut rng = InstanceRng::seed_from_u64(instance_seed(seed, 3));
    for i in 0..5 {
        let ops = nonaffine_instance(&mut rng, 4);
        out.push(checker.check_cyclic_norm(&ops, 1e-3)?.with_instance(format!("nonaffine/{i:02}")));
        let ops = unbounded_nonaffine_instance(&mut rng, 4);
        out.push(checker.check_cyclic_norm(&ops, 1e-3)?.with_instance(format!("unbounded/{i:02}")));
    }

    let h1 = Operator::projector(ConvexSet::halfspace(v(&[1.0, 0.0]), 1.0)?);
    let h2 = Operator::projector(ConvexSet::halfspace(v(&[-1.0, -1.0]), 0.5)?);
    out.push(checker.check_zero_sum_corollary(&[h1.clone(), h2.clone()], &[0.4, 0.6])?.with_instance("halfspaces"));
    out.push(checker.check_convex_combination(&[h1, h2], &[0.4, 0.6], ITERATIVE_TOL)?.with_instance("halfspaces"));

    let id = MonotoneAffine::new(Matrix::identity(3, 3), Vector::zeros(3))?;
    let zero = MonotoneAffine::zero(3);
    let diag = MonotoneAffine::new(Matrix::from_diagonal(&v(&[2.0, 0.5])), Vector::zeros(2))?;
    for (name, a) in [("identity", &id), ("zero", &zero), ("diag", &diag)] {
        let s = instance_seed(seed, 4);
        out.push(
            checker
                .check_cocoercive_averaged_equivalence(a, a.cocoercivity_modulus(), 1000, s)?
                .with_instance(name),
        );
        out.push(checker.check_range_identity_reflected(a)?.with_instance(name));
    }

    out.extend(projected_gradient_examples(checker)?);

    canonicalize(&mut out);
    Ok(out)
}

pub fn all_delta_triples() -> impl Iterator<Item = [i8; 3]> {
    (0..27).map(|k| [(k % 3) as i8 - 1, ((k / 3) % 3) as i8 - 1, (k / 9) as i8 - 1])
}

/// Whole-space linear objective, a box-constrained quadratic, and a linear
/// objective bounded below by a halfspace.
pub fn projected_gradient_examples(checker: &Checker) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    let g = v(&[1.0, 0.0]);
    let zero = Matrix::zeros(2, 2);
    let whole = ConvexSet::affine(AffineSubspaceRep::whole_space(2));
    out.push(
        checker
            .check_projected_gradient_bound(&zero, &g, &whole, 1.0, Some(1.0), 1e-6)?
            .with_instance("linear/whole_space"),
    );
    // {x₁ ≥ 0} blocks descent along −g, so the iteration stalls on the boundary
    let upper = ConvexSet::halfspace(v(&[-1.0, 0.0]), 0.0)?;
    out.push(
        checker
            .check_projected_gradient_bound(&zero, &g, &upper, 1.0, Some(1.0), ITERATIVE_TOL)?
            .with_instance("linear/halfspace"),
    );
    let q = Matrix::from_diagonal(&v(&[1.0, 2.0]));
    let lin = -(&q * v(&[0.2, 0.3]));
    let unit_box = ConvexSet::boxed(Vector::zeros(2), v(&[1.0, 1.0]))?;
    out.push(
        checker
            .check_projected_gradient_bound(&q, &lin, &unit_box, 1.0, None, ITERATIVE_TOL)?
            .with_instance("quadratic/box"),
    );
    Ok(out)
}
