//! Scenario files: operators, checks and estimator settings in JSON.
//!
//! Operators use a tagged grammar, one key per node:
//!
//! ```text
//! {"affine":     {"M": [[..], ..], "b": [..]}}
//! {"translation": [..]}
//! {"projector":  {"ball": {"center": [..], "radius": r}}}
//!                {"box": {"lo": [..], "hi": [..]}}
//!                {"halfspace": {"normal": [..], "offset": c}}
//!                {"affine": {"base": [..], "directions": [[..], ..]}}
//!                {"singleton": [..]}
//! {"compose":    [spec, ..]}                 innermost first
//! {"combo":      {"weights": [..], "parts": [spec, ..]}}
//! {"resolvent":  {"Q": [[..]], "q": [..]}}   likewise "reflected"
//! {"gradstep":   {"Q": [[..]], "q": [..], "step": s}}
//! ```
//!
//! A top-level operator may also carry a `"label"`. Reals are JSON numbers
//! or decimal strings. Validation errors name the offending field path.

use serde_json::{json, Map, Value};

use crate::displacement::EstimatorConfig;
use crate::error::{Error, Result};
use crate::numeric::{AffineSubspaceRep, Matrix, Vector, DEFAULT_RANK_TOL};
use crate::operators::{MonotoneAffine, Operator};
use crate::sets::ConvexSet;

use super::format::{parse_f64, scalar_json, vector_json};

#[derive(Debug, Clone)]
pub struct LabeledOperator {
    pub label: String,
    pub operator: Operator,
}

/// Arguments of one requested check. Operator lists are indices into the
/// scenario's `operators`, innermost first.
#[derive(Debug, Clone)]
pub enum CheckArgs {
    RangeFormulaComposition { ops: Vec<usize> },
    PermutationDisplacement { ops: Vec<usize>, sigma: Vec<usize> },
    NormBoundComposition { ops: Vec<usize> },
    CyclicNorm { ops: Vec<usize> },
    CyclicAttainment { ops: Vec<usize> },
    NoncyclicCounterexample { u: Vector },
    ThreeOpClosedForm { deltas: [i8; 3], a: [Vector; 3] },
    ConvexCombination { ops: Vec<usize>, weights: Vec<f64> },
    ZeroSumCorollary { ops: Vec<usize>, weights: Vec<f64> },
    CocoerciveAveragedEquivalence { a: MonotoneAffine, mu: Option<f64>, samples: usize },
    BrezisHaraux { a: MonotoneAffine, b: MonotoneAffine },
    TranslationFormula { a: MonotoneAffine, b: MonotoneAffine, y: Vector, samples: usize },
    RangeIdentityReflected { a: MonotoneAffine },
    DisplacementRangeInclusion { a: MonotoneAffine, b: MonotoneAffine, samples: usize },
    ProjectedGradientBound { hessian: Matrix, q: Vector, set: ConvexSet, alpha: f64, lipschitz: Option<f64> },
}

pub const CHECK_NAMES: [&str; 15] = [
    "range_formula_composition",
    "permutation_displacement",
    "norm_bound_composition",
    "cyclic_norm",
    "cyclic_attainment",
    "noncyclic_counterexample",
    "three_op_closed_form",
    "convex_combination",
    "zero_sum_corollary",
    "cocoercive_averaged_equivalence",
    "brezis_haraux",
    "translation_formula",
    "range_identity_reflected",
    "displacement_range_inclusion",
    "projected_gradient_bound",
];

const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Clone)]
pub struct CheckSpec {
    pub name: String,
    pub tolerance: Option<f64>,
    pub args: CheckArgs,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    pub seed: u64,
    pub operators: Vec<LabeledOperator>,
    pub checks: Vec<CheckSpec>,
    pub estimator: EstimatorConfig,
}

/// Cursor into the JSON tree that remembers how it got there.
#[derive(Clone, Copy)]
struct Node<'a> {
    value: &'a Value,
    path: &'a str,
}

fn at(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::input(format!("{path}: {msg}"))
}

fn ctx<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Input(m) => at(path, m),
        other => at(path, other),
    })
}

impl<'a> Node<'a> {
    fn object(&self) -> Result<&'a Map<String, Value>> {
        self.value.as_object().ok_or_else(|| at(self.path, "expected an object"))
    }

    fn array(&self) -> Result<&'a Vec<Value>> {
        self.value.as_array().ok_or_else(|| at(self.path, "expected an array"))
    }

    fn get(&self, key: &str) -> Result<Option<&'a Value>> {
        Ok(self.object()?.get(key))
    }

    fn real(&self) -> Result<f64> {
        let x = ctx(self.path, parse_f64(self.value))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(at(self.path, "must be finite"))
        }
    }

    fn uint(&self) -> Result<u64> {
        self.value.as_u64().ok_or_else(|| at(self.path, "expected a nonnegative integer"))
    }

    fn vector(&self) -> Result<Vector> {
        let items = self.array()?;
        let mut out = Vec::with_capacity(items.len());
        for (i, v) in items.iter().enumerate() {
            let path = format!("{}[{i}]", self.path);
            out.push(Node { value: v, path: &path }.real()?);
        }
        Ok(Vector::from_vec(out))
    }

    fn matrix(&self) -> Result<Matrix> {
        let rows = self.array()?;
        let mut parsed = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let path = format!("{}[{i}]", self.path);
            parsed.push(Node { value: r, path: &path }.vector()?);
        }
        let ncols = parsed.first().map_or(0, |r| r.len());
        if parsed.iter().any(|r| r.len() != ncols) {
            return Err(at(self.path, "rows have different lengths"));
        }
        Ok(Matrix::from_fn(parsed.len(), ncols, |i, j| parsed[i][j]))
    }

    fn indices(&self) -> Result<Vec<usize>> {
        let items = self.array()?;
        items
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_u64()
                    .map(|n| n as usize)
                    .ok_or_else(|| at(&format!("{}[{i}]", self.path), "expected a nonnegative integer"))
            })
            .collect()
    }
}

/// Looks up a required field and hands the child node to `f`.
fn field<T>(node: Node<'_>, key: &str, f: impl FnOnce(Node<'_>) -> Result<T>) -> Result<T> {
    let path = format!("{}.{key}", node.path);
    let value = node.get(key)?.ok_or_else(|| at(&path, "missing field"))?;
    f(Node { value, path: &path })
}

fn opt_field<T>(node: Node<'_>, key: &str, f: impl FnOnce(Node<'_>) -> Result<T>) -> Result<Option<T>> {
    let path = format!("{}.{key}", node.path);
    match node.get(key)? {
        None | Some(Value::Null) => Ok(None),
        Some(value) => f(Node { value, path: &path }).map(Some),
    }
}

/// The single tag of a `{"tag": body}` node, ignoring `skip` keys.
fn tagged<'a>(node: Node<'a>, skip: &[&str]) -> Result<(&'a str, &'a Value)> {
    let obj = node.object()?;
    let mut tags = obj.iter().filter(|(k, _)| !skip.contains(&k.as_str()));
    match (tags.next(), tags.next()) {
        (Some((k, v)), None) => Ok((k.as_str(), v)),
        _ => Err(at(node.path, "expected exactly one tag")),
    }
}

fn expect_dim(path: &str, dim: usize, found: usize) -> Result<()> {
    if dim == found {
        Ok(())
    } else {
        Err(at(path, format!("dimension {found} does not match scenario dimension {dim}")))
    }
}

fn parse_set(node: Node<'_>, dim: usize) -> Result<ConvexSet> {
    let (tag, body) = tagged(node, &[])?;
    let path = format!("{}.{tag}", node.path);
    let n = Node { value: body, path: &path };
    let set = match tag {
        "ball" => ctx(&path, ConvexSet::ball(field(n, "center", |c| c.vector())?, field(n, "radius", |r| r.real())?))?,
        "box" => ctx(&path, ConvexSet::boxed(field(n, "lo", |c| c.vector())?, field(n, "hi", |c| c.vector())?))?,
        "halfspace" => {
            ctx(&path, ConvexSet::halfspace(field(n, "normal", |c| c.vector())?, field(n, "offset", |c| c.real())?))?
        }
        "affine" => {
            let base = field(n, "base", |c| c.vector())?;
            let dirs = opt_field(n, "directions", |c| {
                let m = c.matrix()?;
                Ok(m.row_iter().map(|r| r.transpose()).collect::<Vec<Vector>>())
            })?
            .unwrap_or_default();
            ConvexSet::affine(ctx(&path, AffineSubspaceRep::from_spanning(base, &dirs, DEFAULT_RANK_TOL))?)
        }
        "singleton" => ctx(&path, ConvexSet::singleton(n.vector()?))?,
        other => return Err(at(node.path, format!("unknown set kind {other:?}"))),
    };
    expect_dim(&path, dim, set.dim())?;
    Ok(set)
}

fn parse_monotone(node: Node<'_>, dim: usize) -> Result<MonotoneAffine> {
    let q_mat = field(node, "Q", |c| c.matrix())?;
    let q = field(node, "q", |c| c.vector())?;
    expect_dim(node.path, dim, q.len())?;
    ctx(node.path, MonotoneAffine::new(q_mat, q))
}

pub fn parse_operator(node_value: &Value, path: &str, dim: usize) -> Result<Operator> {
    let node = Node { value: node_value, path };
    let (tag, body) = tagged(node, &["label"])?;
    let path = format!("{path}.{tag}");
    let n = Node { value: body, path: &path };
    let op = match tag {
        "affine" => {
            let m = field(n, "M", |c| c.matrix())?;
            let b = field(n, "b", |c| c.vector())?;
            expect_dim(&path, dim, b.len())?;
            ctx(&path, Operator::affine(m, b))?
        }
        "translation" => {
            let a = n.vector()?;
            expect_dim(&path, dim, a.len())?;
            ctx(&path, Operator::translation(a))?
        }
        "projector" => Operator::projector(parse_set(n, dim)?),
        "compose" => {
            let parts = parse_operator_list(n, dim)?;
            ctx(&path, Operator::compose(parts))?
        }
        "combo" => {
            let weights = field(n, "weights", |c| c.vector())?;
            let parts = field(n, "parts", |c| parse_operator_list(c, dim))?;
            ctx(&path, Operator::combine(weights.iter().copied().collect(), parts))?
        }
        "resolvent" => Operator::resolvent(parse_monotone(n, dim)?),
        "reflected" => Operator::reflected_resolvent(parse_monotone(n, dim)?),
        "gradstep" => {
            let q_mat = field(n, "Q", |c| c.matrix())?;
            let q = field(n, "q", |c| c.vector())?;
            let step = field(n, "step", |c| c.real())?;
            expect_dim(&path, dim, q.len())?;
            ctx(&path, Operator::gradient_step(q_mat, q, step))?
        }
        other => return Err(at(node.path, format!("unknown operator kind {other:?}"))),
    };
    Ok(op)
}

fn parse_operator_list(node: Node<'_>, dim: usize) -> Result<Vec<Operator>> {
    let items = node.array()?;
    if items.is_empty() {
        return Err(at(node.path, "operator list must be nonempty"));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, v)| parse_operator(v, &format!("{}[{i}]", node.path), dim))
        .collect()
}

fn parse_estimator(node: Node<'_>, dim: usize) -> Result<EstimatorConfig> {
    let mut cfg = EstimatorConfig::default();
    if let Some(x0) = opt_field(node, "x0", |c| c.vector())? {
        expect_dim(&format!("{}.x0", node.path), dim, x0.len())?;
        cfg.x0 = Some(x0);
    }
    if let Some(n) = opt_field(node, "max_iter", |c| c.uint())? {
        cfg.max_iter = n as usize;
    }
    if let Some(t) = opt_field(node, "tol", |c| c.real())? {
        if !(t > 0.0) {
            return Err(at(&format!("{}.tol", node.path), "must be positive"));
        }
        cfg.tol = t;
    }
    Ok(cfg)
}

fn parse_check(node: Node<'_>, dim: usize, n_ops: usize) -> Result<CheckSpec> {
    let name = field(node, "check", |c| {
        c.value.as_str().map(str::to_string).ok_or_else(|| at(c.path, "expected a check name"))
    })?;
    let tolerance = opt_field(node, "tolerance", |c| c.real())?;
    if let Some(t) = tolerance {
        if !(t >= 0.0) {
            return Err(at(&format!("{}.tolerance", node.path), "must be nonnegative"));
        }
    }
    let ops = || -> Result<Vec<usize>> {
        let list = opt_field(node, "operators", |c| c.indices())?.unwrap_or_else(|| (0..n_ops).collect());
        if list.is_empty() {
            return Err(at(&format!("{}.operators", node.path), "needs at least one operator"));
        }
        if let Some(bad) = list.iter().find(|&&i| i >= n_ops) {
            return Err(at(&format!("{}.operators", node.path), format!("index {bad} out of range (have {n_ops})")));
        }
        Ok(list)
    };
    let vec_dim = |key: &str| -> Result<Vector> {
        let v = field(node, key, |c| c.vector())?;
        expect_dim(&format!("{}.{key}", node.path), dim, v.len())?;
        Ok(v)
    };
    let weights = || field(node, "weights", |c| c.vector()).map(|w| w.iter().copied().collect::<Vec<f64>>());
    let samples = || opt_field(node, "samples", |c| c.uint()).map(|s| s.map_or(DEFAULT_SAMPLES, |s| s as usize));
    let mono = |key: &str| field(node, key, |c| parse_monotone(c, dim));

    let args = match name.as_str() {
        "range_formula_composition" => CheckArgs::RangeFormulaComposition { ops: ops()? },
        "permutation_displacement" => {
            CheckArgs::PermutationDisplacement { ops: ops()?, sigma: field(node, "sigma", |c| c.indices())? }
        }
        "norm_bound_composition" => CheckArgs::NormBoundComposition { ops: ops()? },
        "cyclic_norm" => CheckArgs::CyclicNorm { ops: ops()? },
        "cyclic_attainment" => CheckArgs::CyclicAttainment { ops: ops()? },
        "noncyclic_counterexample" => CheckArgs::NoncyclicCounterexample { u: vec_dim("u")? },
        "three_op_closed_form" => {
            let deltas = field(node, "deltas", |c| {
                let d = c.array()?;
                let parsed: Vec<i8> = d
                    .iter()
                    .filter_map(|v| v.as_i64())
                    .filter(|x| (-1..=1).contains(x))
                    .map(|x| x as i8)
                    .collect();
                match (d.len(), parsed.as_slice()) {
                    (3, &[a, b, c]) => Ok([a, b, c]),
                    _ => Err(at(c.path, "expected three entries from {-1, 0, 1}")),
                }
            })?;
            let a = field(node, "a", |c| {
                let m = c.matrix()?;
                if m.nrows() != 3 {
                    return Err(at(c.path, "expected three vectors"));
                }
                expect_dim(c.path, dim, m.ncols())?;
                Ok([m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()])
            })?;
            CheckArgs::ThreeOpClosedForm { deltas, a }
        }
        "convex_combination" => CheckArgs::ConvexCombination { ops: ops()?, weights: weights()? },
        "zero_sum_corollary" => CheckArgs::ZeroSumCorollary { ops: ops()?, weights: weights()? },
        "cocoercive_averaged_equivalence" => CheckArgs::CocoerciveAveragedEquivalence {
            a: mono("A")?,
            mu: opt_field(node, "mu", |c| c.real())?,
            samples: samples()?,
        },
        "brezis_haraux" => CheckArgs::BrezisHaraux { a: mono("A")?, b: mono("B")? },
        "translation_formula" => {
            CheckArgs::TranslationFormula { a: mono("A")?, b: mono("B")?, y: vec_dim("y")?, samples: samples()? }
        }
        "range_identity_reflected" => CheckArgs::RangeIdentityReflected { a: mono("A")? },
        "displacement_range_inclusion" => {
            CheckArgs::DisplacementRangeInclusion { a: mono("A")?, b: mono("B")?, samples: samples()? }
        }
        "projected_gradient_bound" => CheckArgs::ProjectedGradientBound {
            hessian: field(node, "Q", |c| c.matrix())?,
            q: vec_dim("q")?,
            set: field(node, "set", |c| parse_set(c, dim))?,
            alpha: field(node, "alpha", |c| c.real())?,
            lipschitz: opt_field(node, "lipschitz", |c| c.real())?,
        },
        other => {
            return Err(at(
                &format!("{}.check", node.path),
                format!("unknown check {other:?}; known checks: {}", CHECK_NAMES.join(", ")),
            ))
        }
    };
    Ok(CheckSpec { name, tolerance, args })
}

impl Scenario {
    /// Parses and validates scenario text. Syntax errors report line and
    /// column, semantic errors the JSON path of the offending field.
    pub fn parse(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text)
            .map_err(|e| Error::input(format!("malformed JSON at line {}, column {}: {e}", e.line(), e.column())))?;
        let node = Node { value: &root, path: "$" };
        node.object()?;
        let name = opt_field(node, "name", |c| {
            c.value.as_str().map(str::to_string).ok_or_else(|| at(c.path, "expected a string"))
        })?
        .unwrap_or_else(|| "scenario".to_string());
        let dim = field(node, "dim", |c| c.uint())? as usize;
        if dim == 0 {
            return Err(at("$.dim", "must be positive"));
        }
        let seed = opt_field(node, "seed", |c| c.uint())?.unwrap_or(0);
        let operators = opt_field(node, "operators", |c| {
            c.array()?
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let path = format!("$.operators[{i}]");
                    let operator = parse_operator(v, &path, dim)?;
                    let label = match v.get("label") {
                        None => format!("op{i}"),
                        Some(Value::String(s)) => s.clone(),
                        Some(_) => return Err(at(&format!("{path}.label"), "expected a string")),
                    };
                    Ok(LabeledOperator { label, operator })
                })
                .collect::<Result<Vec<_>>>()
        })?
        .unwrap_or_default();
        let checks = opt_field(node, "checks", |c| {
            c.array()?
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let path = format!("$.checks[{i}]");
                    parse_check(Node { value: v, path: &path }, dim, operators.len())
                })
                .collect::<Result<Vec<_>>>()
        })?
        .unwrap_or_default();
        let estimator = opt_field(node, "estimator", |c| parse_estimator(c, dim))?.unwrap_or_default();
        Ok(Scenario { name, dim, seed, operators, checks, estimator })
    }

    pub fn select(&self, indices: &[usize]) -> Vec<Operator> {
        indices.iter().map(|&i| self.operators[i].operator.clone()).collect()
    }
}

fn matrix_json(m: &Matrix) -> Value {
    Value::Array(m.row_iter().map(|r| vector_json(&r.transpose())).collect())
}

fn set_json(set: &ConvexSet) -> Value {
    match set {
        ConvexSet::Ball { center, radius } => json!({"ball": {"center": vector_json(center), "radius": scalar_json(*radius)}}),
        ConvexSet::Box { lo, hi } => json!({"box": {"lo": vector_json(lo), "hi": vector_json(hi)}}),
        ConvexSet::Halfspace { normal, offset } => {
            json!({"halfspace": {"normal": vector_json(normal), "offset": scalar_json(*offset)}})
        }
        ConvexSet::AffineSub(rep) => json!({"affine": {
            "base": vector_json(rep.base()),
            "directions": rep.basis().iter().map(vector_json).collect::<Vec<_>>(),
        }}),
        ConvexSet::Singleton(p) => json!({ "singleton": vector_json(p) }),
    }
}

fn monotone_json(a: &MonotoneAffine) -> Value {
    json!({"Q": matrix_json(a.linear()), "q": vector_json(a.offset())})
}

/// Inverse of [`parse_operator`].
pub fn operator_json(op: &Operator) -> Value {
    match op {
        Operator::AffineMap { linear, offset } => json!({"affine": {"M": matrix_json(linear), "b": vector_json(offset)}}),
        Operator::SetProjector { set } => json!({ "projector": set_json(set) }),
        Operator::GradientStep { hessian, gradient_offset, step } => json!({"gradstep": {
            "Q": matrix_json(hessian), "q": vector_json(gradient_offset), "step": scalar_json(*step),
        }}),
        Operator::Resolvent { op } => json!({ "resolvent": monotone_json(op) }),
        Operator::ReflectedResolvent { op } => json!({ "reflected": monotone_json(op) }),
        Operator::Composition { parts } => json!({ "compose": parts.iter().map(operator_json).collect::<Vec<_>>() }),
        Operator::ConvexCombination { weights, parts } => json!({"combo": {
            "weights": weights.iter().map(|w| scalar_json(*w)).collect::<Vec<_>>(),
            "parts": parts.iter().map(operator_json).collect::<Vec<_>>(),
        }}),
    }
}
