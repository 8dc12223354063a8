//! Executable checks for the range and displacement identities of
//! compositions and convex combinations of nonexpansive maps.
//!
//! Every check returns a [`CheckReport`] whose `pass` flag is exactly
//! `discrepancy <= tolerance`. When the hypotheses of the underlying result
//! are not satisfied the check still runs, but the report carries
//! `hypothesis_met = false` so that a failure there is read as an expected
//! counterexample rather than a defect.

pub mod random;
pub mod suite;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cli::format::{num, scalar_json, subspace_json, vector_json};
use crate::displacement::{
    displacement_exact_affine, displacement_range_affine, estimate, membership_in_displacement_range,
    DisplacementEstimate, EstimatorConfig, Method,
};
use crate::error::{check_dim, Error, Result};
use crate::numeric::{symmetric_part_eigenvalues, AffineSubspaceRep, Matrix, Vector};
use crate::operators::{MonotoneAffine, Operator};
use crate::sets::ConvexSet;

use random::{uniform_vector, InstanceRng};

/// Default tolerance for identities computed exactly on affine operators.
pub const EXACT_TOL: f64 = 1e-9;
/// Default tolerance for quantities estimated by iteration.
pub const ITERATIVE_TOL: f64 = 1e-4;
/// Slack on sampled inequalities.
pub const SAMPLED_TOL: f64 = 1e-8;

const CLOSEDNESS_NOTE: &str =
    "finite-dimensional affine setting: displacement ranges are closed, attainment is automatic";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    /// Instance label, used with `check_name` to order reports canonically.
    pub instance: String,
    pub pass: bool,
    pub hypothesis_met: bool,
    pub lhs: Value,
    pub rhs: Value,
    #[serde(with = "num")]
    pub discrepancy: f64,
    #[serde(with = "num")]
    pub tolerance: f64,
    pub witness: Option<Value>,
    pub seed: u64,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(check_name: &str, lhs: Value, rhs: Value, discrepancy: f64, tolerance: f64) -> Self {
        Self {
            check_name: check_name.to_string(),
            instance: String::new(),
            pass: discrepancy <= tolerance,
            hypothesis_met: true,
            lhs,
            rhs,
            discrepancy,
            tolerance,
            witness: None,
            seed: 0,
            notes: Vec::new(),
        }
    }

    pub fn with_instance(mut self, instance: impl Into<String>) -> Self {
        self.instance = instance.into();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_witness(mut self, witness: Option<Value>) -> Self {
        self.witness = witness;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn hypothesis(mut self, met: bool, unmet_note: &str) -> Self {
        self.hypothesis_met = met;
        if !met {
            self.notes.push(format!("hypothesis unmet: {unmet_note}"));
        }
        self
    }

    /// True unless this is a failure of a check whose hypotheses held.
    pub fn acceptable(&self) -> bool {
        self.pass || !self.hypothesis_met
    }
}

fn non_averaged_count(ops: &[Operator]) -> usize {
    ops.iter().filter(|op| !op.regularity().is_averaged()).count()
}

fn sum_ranges(ranges: &[AffineSubspaceRep]) -> Result<AffineSubspaceRep> {
    let (first, rest) = ranges.split_first().ok_or_else(|| Error::input("need at least one range"))?;
    rest.iter().try_fold(first.clone(), |acc, r| acc.minkowski_sum(r))
}

fn estimate_json(est: &DisplacementEstimate) -> Value {
    json!({
        "vector": vector_json(&est.vector),
        "norm": scalar_json(est.vector.norm()),
        "method": est.method,
        "iterations": est.iterations,
        "converged": est.converged,
        "residual": scalar_json(est.residual),
    })
}

/// `δ Id − a`.
pub fn delta_operator(delta: i8, a: &Vector) -> Result<Operator> {
    if !(-1..=1).contains(&delta) {
        return Err(Error::input("delta must lie in {-1, 0, 1}"));
    }
    Operator::scaled_shift(f64::from(delta), -a)
}

/// Closed-form minimal displacement vector of `R₃R₂R₁` with `Rᵢ = δᵢId − aᵢ`.
pub fn three_op_closed_form(deltas: [i8; 3], a: &[Vector; 3]) -> Vector {
    let [d1, d2, d3] = deltas.map(f64::from);
    if d1 * d2 * d3 == 1.0 {
        &a[2] + &a[1] * d3 + &a[0] * (d3 * d2)
    } else {
        Vector::zeros(a[0].len())
    }
}

/// Sampled-pair harness: tracks the worst violation and its inputs.
struct Worst {
    value: f64,
    witness: Option<Value>,
}

impl Worst {
    fn new() -> Self {
        Self { value: 0.0, witness: None }
    }

    fn update(&mut self, violation: f64, witness: impl FnOnce() -> Value) {
        if violation > self.value || violation.is_nan() {
            self.value = violation;
            self.witness = Some(witness());
        }
    }
}

/// Runs checks with a shared iterative-estimator configuration.
#[derive(Debug, Clone, Default)]
pub struct Checker {
    pub estimator: EstimatorConfig,
}

impl Checker {
    pub fn new(estimator: EstimatorConfig) -> Self {
        Self { estimator }
    }

    /// Exact for affine operators, iterative otherwise.
    pub fn mdv(&self, op: &Operator) -> Result<DisplacementEstimate> {
        estimate(op, &self.estimator)
    }

    fn mdv_tolerance(&self, ops: &[&Operator], exact: f64, iterative: f64) -> f64 {
        if ops.iter().all(|op| op.flatten_to_affine().is_some()) {
            exact
        } else {
            iterative
        }
    }

    /// `cl ran(Id − R_m⋯R₁) = cl(ran(Id − R₁) + ⋯ + ran(Id − R_m))`, which
    /// requires all but at most one `Rᵢ` to be averaged.
    pub fn check_range_formula_composition(&self, ops: &[Operator], tol: f64) -> Result<CheckReport> {
        let comp = Operator::compose(ops.to_vec())?;
        let lhs = displacement_range_affine(&comp)?;
        let ranges = ops.iter().map(displacement_range_affine).collect::<Result<Vec<_>>>()?;
        let rhs = sum_ranges(&ranges)?;
        let disc = lhs.discrepancy(&rhs)?;
        let bad = non_averaged_count(ops);
        Ok(CheckReport::new("range_formula_composition", subspace_json(&lhs), subspace_json(&rhs), disc, tol)
            .hypothesis(bad <= 1, &format!("{bad} of {} operators lack an averagedness certificate", ops.len())))
    }

    /// `mdv(R_{σ(m)}⋯R_{σ(1)}) = mdv(R_m⋯R₁)`; `sigma` lists 0-based indices
    /// in application order.
    pub fn check_permutation_displacement(&self, ops: &[Operator], sigma: &[usize], tol: f64) -> Result<CheckReport> {
        let mut seen = vec![false; ops.len()];
        if sigma.len() != ops.len() || sigma.iter().any(|&i| i >= ops.len() || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::input("sigma must be a permutation of the operator indices"));
        }
        let original = self.mdv(&Operator::compose(ops.to_vec())?)?;
        let permuted_ops: Vec<Operator> = sigma.iter().map(|&i| ops[i].clone()).collect();
        let permuted = self.mdv(&Operator::compose(permuted_ops)?)?;
        let disc = (&permuted.vector - &original.vector).norm();
        let bad = non_averaged_count(ops);
        Ok(CheckReport::new("permutation_displacement", estimate_json(&permuted), estimate_json(&original), disc, tol)
            .with_witness(Some(json!({ "sigma": sigma })))
            .hypothesis(bad <= 1, &format!("{bad} of {} operators lack an averagedness certificate", ops.len())))
    }

    /// `‖mdv(R_m⋯R₁)‖ ≤ ‖mdv(R₁)‖ + ⋯ + ‖mdv(R_m)‖`.
    pub fn check_norm_bound_composition(&self, ops: &[Operator], tol: f64) -> Result<CheckReport> {
        let comp = self.mdv(&Operator::compose(ops.to_vec())?)?;
        let parts = ops.iter().map(|op| self.mdv(op)).collect::<Result<Vec<_>>>()?;
        let lhs = comp.vector.norm();
        let rhs: f64 = parts.iter().map(|p| p.vector.norm()).sum();
        let bad = non_averaged_count(ops);
        Ok(CheckReport::new("norm_bound_composition", scalar_json(lhs), scalar_json(rhs), (lhs - rhs).max(0.0), tol)
            .hypothesis(bad <= 1, &format!("{bad} of {} operators lack an averagedness certificate", ops.len())))
    }

    /// `‖mdv‖` is the same for every cyclic shift of the composition.
    pub fn check_cyclic_norm(&self, ops: &[Operator], tol: f64) -> Result<CheckReport> {
        let shifts = cyclic_shifts(ops)?;
        let estimates = shifts.iter().map(|op| self.mdv(op)).collect::<Result<Vec<_>>>()?;
        let norms: Vec<f64> = estimates.iter().map(|e| e.vector.norm()).collect();
        let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut report = CheckReport::new(
            "cyclic_norm",
            Value::Array(norms.iter().map(|n| scalar_json(*n)).collect()),
            json!({ "min": scalar_json(lo), "max": scalar_json(hi) }),
            hi - lo,
            tol,
        );
        if estimates.iter().any(|e| !e.converged) {
            report = report.with_note("iterative estimate hit max_iter before converging");
        }
        Ok(report)
    }

    /// `mdv` is attained for one cyclic shift iff for all of them; on affine
    /// operators both sides hold, so the discrepancy is the worst attainment
    /// residual across shifts.
    pub fn check_cyclic_attainment(&self, ops: &[Operator], tol: f64) -> Result<CheckReport> {
        let shifts = cyclic_shifts(ops)?;
        let mut residuals = Vec::with_capacity(shifts.len());
        let mut attained = Vec::with_capacity(shifts.len());
        for op in &shifts {
            let est = displacement_exact_affine(op)?;
            attained.push(membership_in_displacement_range(op, &est.vector, tol)?);
            residuals.push(est.residual);
        }
        let disc = residuals.iter().cloned().fold(0.0, f64::max);
        let all_same = attained.iter().all(|&a| a == attained[0]);
        Ok(CheckReport::new(
            "cyclic_attainment",
            json!(attained),
            Value::Array(residuals.iter().map(|r| scalar_json(*r)).collect()),
            if all_same { disc } else { f64::INFINITY },
            tol,
        )
        .with_note(CLOSEDNESS_NOTE))
    }

    /// `R₁x = −x`, `R₂x = −x + u`, `R₃x = x − u`: `mdv(R₃R₂R₁) = 0` while
    /// `mdv(R₃R₁R₂) = 2u`.
    pub fn check_noncyclic_counterexample(&self, u: &Vector) -> Result<CheckReport> {
        let zero = Vector::zeros(u.len());
        let r1 = delta_operator(-1, &zero)?;
        let r2 = delta_operator(-1, &-u)?;
        let r3 = delta_operator(1, u)?;
        let forward = displacement_exact_affine(&Operator::compose(vec![r1.clone(), r2.clone(), r3.clone()])?)?;
        let swapped = displacement_exact_affine(&Operator::compose(vec![r2, r1, r3])?)?;
        let disc = forward.vector.norm().max((&swapped.vector - u * 2.0).norm());
        let mut report =
            CheckReport::new("noncyclic_counterexample", estimate_json(&forward), estimate_json(&swapped), disc, 1e-10)
                .with_witness(Some(json!({ "u": vector_json(u) })));
        if u.norm() == 0.0 {
            report = report.with_note("u = 0: both sides vanish, counterexample is vacuous");
        }
        Ok(report)
    }

    /// Compares the exact `mdv(R₃R₂R₁)` for `Rᵢ = δᵢId − aᵢ` with the closed form.
    pub fn check_three_op_closed_form(&self, deltas: [i8; 3], a: &[Vector; 3]) -> Result<CheckReport> {
        let ops = [delta_operator(deltas[0], &a[0])?, delta_operator(deltas[1], &a[1])?, delta_operator(deltas[2], &a[2])?];
        let exact = displacement_exact_affine(&Operator::compose(ops.to_vec())?)?;
        let closed = three_op_closed_form(deltas, a);
        let disc = (&exact.vector - &closed).norm();
        Ok(CheckReport::new("three_op_closed_form", estimate_json(&exact), vector_json(&closed), disc, 1e-10)
            .with_instance(format!("delta=({},{},{})", deltas[0], deltas[1], deltas[2])))
    }

    /// `cl ran(Id − R̄) = cl Σ λᵢ ran(Id − Rᵢ)` and
    /// `‖mdv(R̄)‖ ≤ ‖Σ λᵢ mdv(Rᵢ)‖ ≤ Σ λᵢ ‖mdv(Rᵢ)‖` for `R̄ = Σ λᵢ Rᵢ`.
    /// No averagedness is needed. The range part is skipped (with a note)
    /// when some operator is not affine.
    pub fn check_convex_combination(&self, ops: &[Operator], weights: &[f64], tol: f64) -> Result<CheckReport> {
        let combo = Operator::combine(weights.to_vec(), ops.to_vec())?;
        let dim = combo.dim();
        let mut notes = Vec::new();
        let mut range_disc = 0.0;
        let mut ranges_json = Value::Null;
        if combo.flatten_to_affine().is_some() {
            let lhs = displacement_range_affine(&combo)?;
            let scaled = ops
                .iter()
                .zip(weights)
                .map(|(op, w)| displacement_range_affine(op)?.scaled(*w))
                .collect::<Result<Vec<_>>>()?;
            let rhs = sum_ranges(&scaled)?;
            range_disc = lhs.discrepancy(&rhs)?;
            ranges_json = json!({ "combination": subspace_json(&lhs), "weighted_sum": subspace_json(&rhs) });
        } else {
            notes.push("range equality skipped: non-affine operator".to_string());
        }

        let combo_mdv = self.mdv(&combo)?;
        let parts = ops.iter().map(|op| self.mdv(op)).collect::<Result<Vec<_>>>()?;
        let mut weighted = Vector::zeros(dim);
        let mut weighted_norms = 0.0;
        for (p, w) in parts.iter().zip(weights) {
            weighted.axpy(*w, &p.vector, 1.0);
            weighted_norms += w * p.vector.norm();
        }
        let (n0, n1, n2) = (combo_mdv.vector.norm(), weighted.norm(), weighted_norms);
        let disc = range_disc.max(n0 - n1).max(n1 - n2).max(0.0);
        let mut report = CheckReport::new(
            "convex_combination",
            json!({ "mdv_norm": scalar_json(n0), "ranges": ranges_json }),
            json!({ "weighted_mdv_norm": scalar_json(n1), "weighted_norm_sum": scalar_json(n2) }),
            disc,
            tol,
        )
        .with_witness(Some(json!({ "range_discrepancy": scalar_json(range_disc) })));
        for n in notes {
            report = report.with_note(n);
        }
        Ok(report)
    }

    /// `Σ λᵢ mdv(Rᵢ) = 0` forces `mdv(Σ λᵢ Rᵢ) = 0`.
    pub fn check_zero_sum_corollary(&self, ops: &[Operator], weights: &[f64]) -> Result<CheckReport> {
        let combo = Operator::combine(weights.to_vec(), ops.to_vec())?;
        let refs: Vec<&Operator> = ops.iter().collect();
        let pre_tol = self.mdv_tolerance(&refs, 1e-10, 1e-6);
        let mut weighted = Vector::zeros(combo.dim());
        for (op, w) in ops.iter().zip(weights) {
            weighted.axpy(*w, &self.mdv(op)?.vector, 1.0);
        }
        let combo_mdv = self.mdv(&combo)?;
        Ok(CheckReport::new(
            "zero_sum_corollary",
            estimate_json(&combo_mdv),
            vector_json(&weighted),
            combo_mdv.vector.norm(),
            SAMPLED_TOL,
        )
        .hypothesis(
            weighted.norm() <= pre_tol,
            &format!("weighted sum of displacement vectors has norm {:e}", weighted.norm()),
        ))
    }

    /// `A` is μ-cocoercive iff `R_A` is `(1+μ)⁻¹`-averaged, checked on
    /// `samples` seeded pairs through three families: cocoercivity of `A`,
    /// averagedness of `R_A`, and the polarization identity linking them.
    pub fn check_cocoercive_averaged_equivalence(
        &self,
        a: &MonotoneAffine,
        mu: f64,
        samples: usize,
        seed: u64,
    ) -> Result<CheckReport> {
        if !(mu > 0.0) {
            return Err(Error::input("cocoercivity modulus must be positive"));
        }
        let dim = a.dim();
        let r = Operator::reflected_resolvent(a.clone());
        let mut rng = InstanceRng::seed_from_u64(seed);
        let mut coco = Worst::new();
        let mut avg = Worst::new();
        let mut ident = Worst::new();
        for _ in 0..samples {
            let x = uniform_vector(&mut rng, dim, 1.0);
            let y = uniform_vector(&mut rng, dim, 1.0);
            let d = &x - &y;
            let ad = a.apply(&x)? - a.apply(&y)?;
            coco.update(mu * ad.norm_squared() - d.dot(&ad), || json!({"family": "cocoercive", "x": vector_json(&x), "y": vector_json(&y)}));

            // (1+μ)⁻¹-averaged, scaled by μ: μ‖(Id−R)x − (Id−R)y‖² ≤ ‖x−y‖² − ‖Rx−Ry‖²
            let rd = r.apply(&x)? - r.apply(&y)?;
            let lhs = mu * (&d - &rd).norm_squared();
            let rhs = d.norm_squared() - rd.norm_squared();
            avg.update(lhs - rhs, || json!({"family": "averaged", "x": vector_json(&x), "y": vector_json(&y)}));

            let u = uniform_vector(&mut rng, dim, 1.0);
            let v = uniform_vector(&mut rng, dim, 1.0);
            let left = 4.0 * (v.dot(&(&u - &v)) - mu * (&u - &v).norm_squared());
            let right = u.norm_squared() - (&v * 2.0 - &u).norm_squared() - 4.0 * mu * (&u - &v).norm_squared();
            let scale = (1.0 + mu).max(1.0);
            ident.update((left - right).abs() / scale, || json!({"family": "identity", "u": vector_json(&u), "v": vector_json(&v)}));
        }
        let worst = [&coco, &avg, &ident].into_iter().fold(&coco, |w, c| if c.value > w.value { c } else { w });
        let mut report = CheckReport::new(
            "cocoercive_averaged_equivalence",
            json!({ "cocoercive": scalar_json(coco.value), "identity": scalar_json(ident.value) }),
            json!({ "averaged": scalar_json(avg.value), "alpha": scalar_json(1.0 / (1.0 + mu)) }),
            coco.value.max(avg.value).max(ident.value),
            SAMPLED_TOL,
        )
        .with_seed(seed)
        .with_witness(worst.witness.clone());
        if !a.is_symmetric() {
            report = report.with_note("nonsymmetric Q: modulus from the generalized eigenvalue of (sym Q, QᵀQ)");
        }
        Ok(report)
    }

    /// `cl ran(A+B) = cl(ran A + ran B)` when one of `A`, `B` is cocoercive.
    pub fn check_brezis_haraux_affine(&self, a: &MonotoneAffine, b: &MonotoneAffine) -> Result<CheckReport> {
        let lhs = a.sum(b)?.range()?;
        let rhs = a.range()?.minkowski_sum(&b.range()?)?;
        let disc = lhs.discrepancy(&rhs)?;
        let cocoercive = a.cocoercivity_modulus() > 0.0 || b.cocoercivity_modulus() > 0.0;
        Ok(CheckReport::new("brezis_haraux", subspace_json(&lhs), subspace_json(&rhs), disc, EXACT_TOL)
            .hypothesis(cocoercive, "neither operator has a positive cocoercivity modulus"))
    }

    /// `x − R_{B(·−y)} R_{−y+A} x = −2y + (x+y) − R_B R_A (x+y)` on sampled
    /// `x`, together with the induced range identity
    /// `ran(Id − R_B R_A) = 2y + ran(Id − R_{B(·−y)} R_{−y+A})`.
    pub fn check_translation_formula(
        &self,
        a: &MonotoneAffine,
        b: &MonotoneAffine,
        y: &Vector,
        samples: usize,
        seed: u64,
    ) -> Result<CheckReport> {
        check_dim(a.dim(), y.len())?;
        let plain = Operator::compose(vec![Operator::reflected_resolvent(a.clone()), Operator::reflected_resolvent(b.clone())])?;
        let shifted = Operator::compose(vec![
            Operator::reflected_resolvent(a.subtract_constant(y)?),
            Operator::reflected_resolvent(b.shift_argument(y)?),
        ])?;
        let mut rng = InstanceRng::seed_from_u64(seed);
        let mut worst = Worst::new();
        for _ in 0..samples {
            let x = uniform_vector(&mut rng, a.dim(), 5.0);
            let left = shifted.displacement(&x)?;
            let xy = &x + y;
            let right = -y * 2.0 + plain.displacement(&xy)?;
            worst.update((left - right).norm(), || json!({ "x": vector_json(&x) }));
        }
        let lhs_range = displacement_range_affine(&plain)?;
        let rhs_range = displacement_range_affine(&shifted)?.translated(&(y * 2.0))?;
        let range_disc = lhs_range.discrepancy(&rhs_range)?;
        Ok(CheckReport::new(
            "translation_formula",
            json!({ "pointwise": scalar_json(worst.value), "range": subspace_json(&lhs_range) }),
            json!({ "range": subspace_json(&rhs_range), "range_discrepancy": scalar_json(range_disc) }),
            worst.value.max(range_disc),
            EXACT_TOL,
        )
        .with_seed(seed)
        .with_witness(worst.witness))
    }

    /// `2 ran A = 2 ran(Id − J_A) = ran(Id − R_A)`.
    pub fn check_range_identity_reflected(&self, a: &MonotoneAffine) -> Result<CheckReport> {
        let doubled = a.range()?.scaled(2.0)?;
        let resolvent = displacement_range_affine(&Operator::resolvent(a.clone()))?.scaled(2.0)?;
        let reflected = displacement_range_affine(&Operator::reflected_resolvent(a.clone()))?;
        let disc = doubled
            .discrepancy(&resolvent)?
            .max(doubled.discrepancy(&reflected)?)
            .max(resolvent.discrepancy(&reflected)?);
        Ok(CheckReport::new(
            "range_identity_reflected",
            json!({ "two_ran_a": subspace_json(&doubled), "two_ran_id_minus_j": subspace_json(&resolvent) }),
            subspace_json(&reflected),
            disc,
            EXACT_TOL,
        ))
    }

    /// `cl ran(Id − R_B R_A) ⊆ cl(ran(Id − R_A) + ran(Id − R_B))` with no
    /// averagedness assumption, on sampled displacement values.
    pub fn check_displacement_range_inclusion(
        &self,
        a: &MonotoneAffine,
        b: &MonotoneAffine,
        samples: usize,
        seed: u64,
    ) -> Result<CheckReport> {
        let ra = Operator::reflected_resolvent(a.clone());
        let rb = Operator::reflected_resolvent(b.clone());
        let sum = displacement_range_affine(&ra)?.minkowski_sum(&displacement_range_affine(&rb)?)?;
        let comp = Operator::compose(vec![ra, rb])?;
        let mut rng = InstanceRng::seed_from_u64(seed);
        let mut worst = Worst::new();
        for _ in 0..samples {
            let x = uniform_vector(&mut rng, a.dim(), 5.0);
            let d = comp.displacement(&x)?;
            worst.update(sum.distance(&d)?, || json!({ "x": vector_json(&x) }));
        }
        Ok(CheckReport::new(
            "displacement_range_inclusion",
            scalar_json(worst.value),
            subspace_json(&sum),
            worst.value,
            SAMPLED_TOL,
        )
        .with_seed(seed)
        .with_witness(worst.witness))
    }

    /// `‖mdv(P_C ∘ (Id − (α/L)∇f))‖ ≤ (α/L) inf ‖∇f‖` for the convex
    /// quadratic `f(x) = ½⟨x, Qx⟩ + ⟨q, x⟩`. `lipschitz` defaults to
    /// `λ_max(Q)` and must be supplied when `Q = 0`.
    pub fn check_projected_gradient_bound(
        &self,
        hessian: &Matrix,
        q: &Vector,
        set: &ConvexSet,
        alpha: f64,
        lipschitz: Option<f64>,
        tol: f64,
    ) -> Result<CheckReport> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::input("step factor alpha must lie in (0, 2)"));
        }
        let lmax = symmetric_part_eigenvalues(hessian).last().copied().unwrap_or(0.0);
        let l = match lipschitz {
            Some(l) if l > 0.0 && l >= lmax * (1.0 - 1e-12) => l,
            Some(l) => return Err(Error::input(format!("Lipschitz constant {l} is below λ_max(Q) = {lmax}"))),
            None if lmax > 0.0 => lmax,
            None => return Err(Error::input("Q = 0: supply the Lipschitz constant explicitly")),
        };
        let step = alpha / l;
        let t = Operator::compose(vec![
            Operator::gradient_step(hessian.clone(), q.clone(), step)?,
            Operator::projector(set.clone()),
        ])?;
        // inf ‖Qx + q‖ is the distance from −q to ran Q
        let ran_q = AffineSubspaceRep::from_column_space(Vector::zeros(q.len()), hessian, crate::numeric::DEFAULT_RANK_TOL)?;
        let inf_grad = ran_q.distance(&-q)?;
        let est = self.mdv(&t)?;
        let lhs = est.vector.norm();
        let rhs = step * inf_grad;
        let mut report = CheckReport::new(
            "projected_gradient_bound",
            estimate_json(&est),
            json!({ "bound": scalar_json(rhs), "inf_grad_norm": scalar_json(inf_grad), "lipschitz": scalar_json(l) }),
            (lhs - rhs).max(0.0),
            tol,
        );
        if est.method != Method::ExactAffine && !est.converged {
            report = report.with_note("iterative estimate hit max_iter before converging");
        }
        Ok(report)
    }
}

/// All `m` cyclic shifts `R_{k−1}⋯R₁R_m⋯R_k`, starting with the original.
pub fn cyclic_shifts(ops: &[Operator]) -> Result<Vec<Operator>> {
    (0..ops.len())
        .map(|k| {
            let mut parts = ops.to_vec();
            parts.rotate_left(k);
            Operator::compose(parts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::random::{random_psd_operator, SharedFixedSpace};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn translation(a: &Vector) -> Operator {
        delta_operator(1, a).unwrap()
    }

    fn flip(u: &Vector) -> Operator {
        // x ↦ −x − u
        delta_operator(-1, u).unwrap()
    }

    fn checker() -> Checker {
        Checker::default()
    }

    #[test]
    fn report_pass_iff_within_tolerance() {
        assert!(CheckReport::new("x", Value::Null, Value::Null, 1e-9, 1e-9).pass);
        assert!(!CheckReport::new("x", Value::Null, Value::Null, 2e-9, 1e-9).pass);
        assert!(!CheckReport::new("x", Value::Null, Value::Null, f64::NAN, 1.0).pass);
    }

    #[test]
    fn range_formula_translations() {
        let (a1, a2) = (v(&[1.0, 2.0]), v(&[-0.5, 4.0]));
        let r = checker().check_range_formula_composition(&[translation(&a1), translation(&a2)], EXACT_TOL).unwrap();
        assert!(r.pass && r.hypothesis_met);
    }

    #[test]
    fn range_formula_fails_for_two_flips() {
        let (u1, u2) = (v(&[1.0, 0.0]), v(&[0.0, 1.0]));
        let r = checker().check_range_formula_composition(&[flip(&u1), flip(&u2)], EXACT_TOL).unwrap();
        assert!(!r.hypothesis_met);
        assert!(!r.pass);
        assert!(r.acceptable());
        assert!(r.notes.iter().any(|n| n.starts_with("hypothesis unmet")));
    }

    #[test]
    fn hypothesis_unmet_even_when_equality_holds() {
        // quarter turns: I − J² = 2I, so both sides are the whole plane
        let j = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let quarter = Operator::affine(j, Vector::zeros(2)).unwrap();
        let r = checker().check_range_formula_composition(&[quarter.clone(), quarter], EXACT_TOL).unwrap();
        assert!(r.pass);
        assert!(!r.hypothesis_met);
    }

    #[test]
    fn range_formula_rejects_non_affine() {
        let ball = Operator::projector(ConvexSet::ball(Vector::zeros(2), 1.0).unwrap());
        let res = checker().check_range_formula_composition(&[ball, Operator::identity(2)], EXACT_TOL);
        assert!(matches!(res, Err(Error::Unsupported(_))));
    }

    #[test]
    fn permutation_swap_of_averaged_pair() {
        let p = Operator::projector(ConvexSet::affine(
            AffineSubspaceRep::new(v(&[0.0, 1.0]), vec![v(&[1.0, 0.0])]).unwrap(),
        ));
        let t = translation(&v(&[0.3, -2.0]));
        let r = checker().check_permutation_displacement(&[p, t], &[1, 0], EXACT_TOL).unwrap();
        assert!(r.pass && r.hypothesis_met);
        assert!(checker().check_permutation_displacement(&[Operator::identity(1)], &[1], 1.0).is_err());
    }

    #[test]
    fn permutation_noncyclic_example_is_flagged() {
        let u = v(&[1.0, 0.0]);
        let ops = [flip(&Vector::zeros(2)), flip(&-&u), translation(&u)];
        let r = checker().check_permutation_displacement(&ops, &[1, 0, 2], EXACT_TOL).unwrap();
        assert!(!r.pass && !r.hypothesis_met);
        assert!((r.discrepancy - 2.0).abs() < 1e-12);
    }

    #[test]
    fn norm_bound_examples() {
        let dir = v(&[0.6, 0.8]);
        let ops: Vec<Operator> = [1.0, 2.5, 0.5].iter().map(|s| translation(&(&dir * *s))).collect();
        let r = checker().check_norm_bound_composition(&ops, EXACT_TOL).unwrap();
        assert!(r.pass);
        let lhs = crate::cli::format::parse_f64(&r.lhs).unwrap();
        assert!((lhs - 4.0).abs() < 1e-12);

        let p = Operator::projector(ConvexSet::affine(
            AffineSubspaceRep::new(v(&[0.0, 1.0]), vec![v(&[1.0, 0.0])]).unwrap(),
        ));
        let r = checker().check_norm_bound_composition(&[p.clone(), Operator::identity(2), p], EXACT_TOL).unwrap();
        assert!(r.pass);
        assert!(crate::cli::format::parse_f64(&r.lhs).unwrap() < 1e-12);
    }

    #[test]
    fn cyclic_norm_examples() {
        let ops = [translation(&v(&[1.0, 0.0])), translation(&v(&[0.0, 2.0]))];
        assert!(checker().check_cyclic_norm(&ops, EXACT_TOL).unwrap().pass);

        let u = v(&[1.0, 0.0]);
        let ops = [flip(&Vector::zeros(2)), flip(&-&u), translation(&u)];
        let r = checker().check_cyclic_norm(&ops, EXACT_TOL).unwrap();
        assert!(r.pass, "{r:?}");
        let a = checker().check_cyclic_attainment(&ops, EXACT_TOL).unwrap();
        assert!(a.pass);
    }

    #[test]
    fn cyclic_norm_non_affine() {
        let h1 = Operator::projector(ConvexSet::halfspace(v(&[1.0, 0.0]), 0.0).unwrap());
        let h2 = Operator::projector(ConvexSet::halfspace(v(&[-1.0, 1.0]), -1.0).unwrap());
        let t = translation(&v(&[0.5, -0.5]));
        let r = checker().check_cyclic_norm(&[h1, h2, t], ITERATIVE_TOL).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn noncyclic_counterexample_instances() {
        for u in [v(&[1.0, 0.0]), v(&[0.0, 3.0]), Vector::zeros(2)] {
            let r = checker().check_noncyclic_counterexample(&u).unwrap();
            assert!(r.pass, "{r:?}");
        }
        let r = checker().check_noncyclic_counterexample(&Vector::zeros(2)).unwrap();
        assert!(r.notes.iter().any(|n| n.contains("vacuous")));
    }

    #[test]
    fn closed_form_examples() {
        let a = [v(&[1.0, 2.0]), v(&[-3.0, 0.5]), v(&[0.25, 1.0])];
        assert_eq!(three_op_closed_form([1, 1, 1], &a), &a[0] + &a[1] + &a[2]);
        assert_eq!(three_op_closed_form([0, 1, 1], &a), Vector::zeros(2));
        let u = v(&[1.0, 0.0]);
        let b = [Vector::zeros(2), -&u, u.clone()];
        assert_eq!(three_op_closed_form([-1, -1, 1], &b), Vector::zeros(2));
        for d in [[1, 1, 1], [0, 1, 1], [-1, -1, 1], [1, -1, -1]] {
            assert!(checker().check_three_op_closed_form(d, &a).unwrap().pass);
        }
        assert!(delta_operator(2, &u).is_err());
    }

    #[test]
    fn convex_combination_examples() {
        let (a1, a2) = (v(&[1.0, 2.0]), v(&[3.0, -1.0]));
        let r = checker()
            .check_convex_combination(&[translation(&a1), translation(&a2)], &[0.25, 0.75], EXACT_TOL)
            .unwrap();
        assert!(r.pass, "{r:?}");
        let combo = Operator::combine(vec![0.25, 0.75], vec![translation(&a1), translation(&a2)]).unwrap();
        let mdv = displacement_exact_affine(&combo).unwrap().vector;
        assert!((mdv - (&a1 * 0.25 + &a2 * 0.75)).norm() < 1e-14);

        let (u1, u2) = (v(&[1.0, 0.0]), v(&[0.0, 1.0]));
        let r = checker().check_convex_combination(&[flip(&u1), flip(&u2)], &[0.5, 0.5], EXACT_TOL).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(crate::cli::format::parse_f64(&r.lhs["mdv_norm"]).unwrap() < 1e-14);
    }

    #[test]
    fn zero_sum_examples() {
        let a = v(&[1.0, -2.0]);
        let (l1, l2) = (0.3, 0.7);
        let ops = [translation(&a), translation(&(&a * -(l1 / l2)))];
        let r = checker().check_zero_sum_corollary(&ops, &[l1, l2]).unwrap();
        assert!(r.pass && r.hypothesis_met, "{r:?}");

        let h1 = Operator::projector(ConvexSet::halfspace(v(&[1.0, 0.0]), 1.0).unwrap());
        let h2 = Operator::projector(ConvexSet::halfspace(v(&[-1.0, -1.0]), 0.5).unwrap());
        let r = checker().check_zero_sum_corollary(&[h1, h2], &[0.4, 0.6]).unwrap();
        assert!(r.pass && r.hypothesis_met, "{r:?}");

        let bad = [translation(&a), translation(&a)];
        let r = checker().check_zero_sum_corollary(&bad, &[0.5, 0.5]).unwrap();
        assert!(!r.hypothesis_met);
    }

    #[test]
    fn cocoercive_examples() {
        let id = MonotoneAffine::new(Matrix::identity(3, 3), Vector::zeros(3)).unwrap();
        assert!(checker().check_cocoercive_averaged_equivalence(&id, 1.0, 500, 1).unwrap().pass);
        let zero = MonotoneAffine::zero(3);
        let mu = zero.cocoercivity_modulus();
        assert!(checker().check_cocoercive_averaged_equivalence(&zero, mu, 500, 2).unwrap().pass);
        let diag = MonotoneAffine::new(Matrix::from_diagonal(&v(&[2.0, 0.5])), Vector::zeros(2)).unwrap();
        let mu = diag.cocoercivity_modulus();
        assert!((mu - 0.5).abs() < 1e-12);
        let r = checker().check_cocoercive_averaged_equivalence(&diag, mu, 1000, 3).unwrap();
        assert!(r.pass);
        assert!((crate::cli::format::parse_f64(&r.rhs["alpha"]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // overstating the modulus must be caught
        let r = checker().check_cocoercive_averaged_equivalence(&diag, 0.75, 1000, 3).unwrap();
        assert!(!r.pass);
        assert!(r.witness.is_some());
    }

    #[test]
    fn brezis_haraux_examples() {
        let a = MonotoneAffine::new(Matrix::zeros(2, 2), v(&[1.0, 2.0])).unwrap();
        let b = MonotoneAffine::new(Matrix::zeros(2, 2), v(&[-3.0, 0.5])).unwrap();
        let r = checker().check_brezis_haraux_affine(&a, &b).unwrap();
        assert!(r.pass && r.hypothesis_met);

        let id = MonotoneAffine::new(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
        assert!(checker().check_brezis_haraux_affine(&id, &b).unwrap().pass);

        // two opposite rotation generators: ran(A+B) = {0} but ran A + ran B = ℝ²
        let j = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let a = MonotoneAffine::new(j.clone(), Vector::zeros(2)).unwrap();
        let b = MonotoneAffine::new(-j, Vector::zeros(2)).unwrap();
        let r = checker().check_brezis_haraux_affine(&a, &b).unwrap();
        assert!(!r.hypothesis_met && !r.pass);
    }

    #[test]
    fn translation_formula_examples() {
        let mut rng = InstanceRng::seed_from_u64(8);
        let a = random_psd_operator(&mut rng, 3);
        let b = random_psd_operator(&mut rng, 3);
        assert!(checker().check_translation_formula(&a, &b, &Vector::zeros(3), 50, 1).unwrap().pass);
        let y = v(&[0.5, -1.0, 2.0]);
        assert!(checker().check_translation_formula(&a, &b, &y, 50, 1).unwrap().pass);
        let zero = MonotoneAffine::zero(3);
        assert!(checker().check_translation_formula(&zero, &zero, &y, 50, 1).unwrap().pass);
    }

    #[test]
    fn translation_formula_zero_operators_by_hand() {
        // A = B = 0: R_A = R_B = Id, R_{−y+A} x = x + 2y, R_{B(·−y)} = Id,
        // so the left side is −2y and the right side is −2y + (x+y) − (x+y)
        let y = v(&[1.0, -2.0]);
        let zero = MonotoneAffine::zero(2);
        let shifted = Operator::compose(vec![
            Operator::reflected_resolvent(zero.subtract_constant(&y).unwrap()),
            Operator::reflected_resolvent(zero.shift_argument(&y).unwrap()),
        ])
        .unwrap();
        let x = v(&[0.3, 0.4]);
        assert!((shifted.displacement(&x).unwrap() + &y * 2.0).norm() < 1e-15);
    }

    #[test]
    fn range_identity_examples() {
        let a = MonotoneAffine::new(Matrix::zeros(2, 2), v(&[1.0, -1.0])).unwrap();
        let r = checker().check_range_identity_reflected(&a).unwrap();
        assert!(r.pass);
        let id = MonotoneAffine::new(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
        assert!(checker().check_range_identity_reflected(&id).unwrap().pass);
    }

    #[test]
    fn inclusion_without_averagedness() {
        let j = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let a = MonotoneAffine::new(j.clone(), v(&[1.0, 0.0])).unwrap();
        let b = MonotoneAffine::new(j * 2.0, v(&[0.0, 1.0])).unwrap();
        assert!(!Operator::reflected_resolvent(a.clone()).regularity().is_averaged());
        assert!(checker().check_displacement_range_inclusion(&a, &b, 200, 4).unwrap().pass);
    }

    #[test]
    fn projected_gradient_examples() {
        let q = Matrix::from_diagonal(&v(&[1.0, 2.0]));
        let lin = -(&q * v(&[0.2, 0.3]));
        let unit_box = ConvexSet::boxed(Vector::zeros(2), v(&[1.0, 1.0])).unwrap();
        let r = checker().check_projected_gradient_bound(&q, &lin, &unit_box, 1.0, None, ITERATIVE_TOL).unwrap();
        assert!(r.pass, "{r:?}");

        let g = v(&[1.0, 0.0]);
        let whole = ConvexSet::affine(AffineSubspaceRep::whole_space(2));
        let zero = Matrix::zeros(2, 2);
        let r = checker().check_projected_gradient_bound(&zero, &g, &whole, 1.5, Some(1.0), 1e-12).unwrap();
        assert!(r.pass);
        let mdv = &r.lhs["vector"];
        assert!((crate::cli::format::parse_f64(&mdv[0]).unwrap() - 1.5).abs() < 1e-12);
        assert!(checker().check_projected_gradient_bound(&zero, &g, &whole, 1.5, None, 1e-12).is_err());
        assert!(checker().check_projected_gradient_bound(&zero, &g, &whole, 2.0, Some(1.0), 1e-12).is_err());
    }

    #[test]
    fn shared_fixed_space_range_formula() {
        let mut rng = InstanceRng::seed_from_u64(21);
        for _ in 0..20 {
            let fam = SharedFixedSpace::new(&mut rng, 5, 2);
            let mut ops: Vec<Operator> = (0..3).map(|_| fam.averaged(&mut rng)).collect();
            let r = checker().check_range_formula_composition(&ops, 1e-8).unwrap();
            assert!(r.pass && r.hypothesis_met, "{r:?}");
            ops[1] = fam.orthogonal(&mut rng);
            let r = checker().check_range_formula_composition(&ops, 1e-8).unwrap();
            assert!(r.pass && r.hypothesis_met, "{r:?}");
        }
    }
}
