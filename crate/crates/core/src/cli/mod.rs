//! Scenario files in, deterministic JSON reports out.
//!
//! Exit codes: 0 success, 1 a check failed although its hypotheses held,
//! 2 invalid input, 3 numerical failure.

pub mod format;
pub mod report;
pub mod scenario;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::displacement::{estimate, EstimatorConfig};
use crate::error::{Error, Result};
use crate::operators::Operator;
use crate::verify::random::instance_seed;
use crate::verify::suite::{builtin_suite, canonicalize};
use crate::verify::{CheckReport, Checker, EXACT_TOL, ITERATIVE_TOL};

use report::{EstimateRecord, EstimatorSettings, Format, Report, Summary, SCHEMA_VERSION};
use scenario::{CheckArgs, CheckSpec, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const BUILTIN_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "mindisp", version, about = "Minimal displacement vectors of nonexpansive maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the minimal displacement vector of every scenario operator.
    Estimate {
        scenario: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run the checks of a scenario, or the built-in reproduction suite.
    Verify {
        #[arg(required_unless_present = "builtin_suite", conflicts_with = "builtin_suite")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        builtin_suite: bool,
        #[command(flatten)]
        flags: Flags,
    },
    /// Re-serialize a report file as JSON or CSV on standard output.
    Report {
        report: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Convergence tolerance of the iterative estimator.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap of the iterative estimator.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Flags {
    fn estimator(&self, base: &EstimatorConfig) -> Result<EstimatorConfig> {
        let mut cfg = base.clone();
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::input("--tol must be positive"));
            }
            cfg.tol = t;
        }
        if let Some(n) = self.max_iter {
            cfg.max_iter = n;
        }
        Ok(cfg)
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_INVALID,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::parse(&read(path)?).map_err(|e| match e {
        Error::Input(m) => Error::input(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial report.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Error::input(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn estimate_report(scenario: &Scenario, flags: &Flags) -> Result<Report> {
    if scenario.operators.is_empty() {
        return Err(Error::input("scenario has no operators to estimate"));
    }
    let cfg = flags.estimator(&scenario.estimator)?;
    let estimates = scenario
        .operators
        .iter()
        .map(|op| Ok(EstimateRecord::new(&op.label, op.operator.label(), &estimate(&op.operator, &cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report::Estimate {
        schema_version: SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        seed: flags.seed.unwrap_or(scenario.seed),
        estimator: EstimatorSettings::from(&cfg),
        estimates,
    })
}

fn default_tolerance(ops: &[Operator]) -> f64 {
    if ops.iter().all(|op| op.flatten_to_affine().is_some()) {
        EXACT_TOL
    } else {
        ITERATIVE_TOL
    }
}

pub fn run_check(checker: &Checker, scenario: &Scenario, spec: &CheckSpec, seed: u64) -> Result<CheckReport> {
    let pick = |ops: &[usize]| scenario.select(ops);
    let tol_for = |ops: &[Operator]| spec.tolerance.unwrap_or_else(|| default_tolerance(ops));
    let report = match &spec.args {
        CheckArgs::RangeFormulaComposition { ops } => {
            let ops = pick(ops);
            checker.check_range_formula_composition(&ops, spec.tolerance.unwrap_or(EXACT_TOL))?
        }
        CheckArgs::PermutationDisplacement { ops, sigma } => {
            let ops = pick(ops);
            checker.check_permutation_displacement(&ops, sigma, tol_for(&ops))?
        }
        CheckArgs::NormBoundComposition { ops } => {
            let ops = pick(ops);
            checker.check_norm_bound_composition(&ops, tol_for(&ops))?
        }
        CheckArgs::CyclicNorm { ops } => {
            let ops = pick(ops);
            checker.check_cyclic_norm(&ops, tol_for(&ops))?
        }
        CheckArgs::CyclicAttainment { ops } => {
            checker.check_cyclic_attainment(&pick(ops), spec.tolerance.unwrap_or(EXACT_TOL))?
        }
        CheckArgs::NoncyclicCounterexample { u } => checker.check_noncyclic_counterexample(u)?,
        CheckArgs::ThreeOpClosedForm { deltas, a } => checker.check_three_op_closed_form(*deltas, a)?,
        CheckArgs::ConvexCombination { ops, weights } => {
            let ops = pick(ops);
            checker.check_convex_combination(&ops, weights, tol_for(&ops))?
        }
        CheckArgs::ZeroSumCorollary { ops, weights } => checker.check_zero_sum_corollary(&pick(ops), weights)?,
        CheckArgs::CocoerciveAveragedEquivalence { a, mu, samples } => {
            let mu = mu.unwrap_or_else(|| a.cocoercivity_modulus());
            checker.check_cocoercive_averaged_equivalence(a, mu, *samples, seed)?
        }
        CheckArgs::BrezisHaraux { a, b } => checker.check_brezis_haraux_affine(a, b)?,
        CheckArgs::TranslationFormula { a, b, y, samples } => checker.check_translation_formula(a, b, y, *samples, seed)?,
        CheckArgs::RangeIdentityReflected { a } => checker.check_range_identity_reflected(a)?,
        CheckArgs::DisplacementRangeInclusion { a, b, samples } => {
            checker.check_displacement_range_inclusion(a, b, *samples, seed)?
        }
        CheckArgs::ProjectedGradientBound { hessian, q, set, alpha, lipschitz } => checker.check_projected_gradient_bound(
            hessian,
            q,
            set,
            *alpha,
            *lipschitz,
            spec.tolerance.unwrap_or(ITERATIVE_TOL),
        )?,
    };
    let report = report.with_seed(seed);
    Ok(match spec.tolerance {
        Some(t) => CheckReport { tolerance: t, pass: report.discrepancy <= t, ..report },
        None => report,
    })
}

pub fn verify_report(scenario: &Scenario, flags: &Flags) -> Result<Report> {
    if scenario.checks.is_empty() {
        return Err(Error::input("scenario requests no checks"));
    }
    let seed = flags.seed.unwrap_or(scenario.seed);
    let checker = Checker::new(flags.estimator(&scenario.estimator)?);
    let mut checks = scenario
        .checks
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let r = run_check(&checker, scenario, spec, instance_seed(seed, i as u64)).map_err(|e| {
                let context = format!("$.checks[{i}] ({})", spec.name);
                match e {
                    Error::Numerical(m) => Error::Numerical(format!("{context}: {m}")),
                    other => Error::input(format!("{context}: {other}")),
                }
            })?;
            let instance = if r.instance.is_empty() { format!("{i:03}") } else { format!("{i:03}/{}", r.instance) };
            Ok(r.with_instance(instance))
        })
        .collect::<Result<Vec<_>>>()?;
    canonicalize(&mut checks);
    Ok(Report::Verify {
        schema_version: SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        seed,
        summary: Summary::of(&checks),
        checks,
    })
}

pub fn builtin_report(flags: &Flags) -> Result<Report> {
    let seed = flags.seed.unwrap_or(BUILTIN_SEED);
    let checker = Checker::new(flags.estimator(&EstimatorConfig::default())?);
    let checks = builtin_suite(seed, &checker)?;
    Ok(Report::Verify {
        schema_version: SCHEMA_VERSION,
        scenario: "builtin-suite".into(),
        seed,
        summary: Summary::of(&checks),
        checks,
    })
}

/// Like `print!`, but a closed pipe (`mindisp report r.json | head`) is not an error.
fn write_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn emit(report: &Report, flags: &Flags) -> Result<()> {
    let text = report.render(flags.format.unwrap_or(Format::Json))?;
    match &flags.out {
        Some(path) => write_atomic(path, &text),
        None => {
            write_stdout(&text);
            Ok(())
        }
    }
}

/// Runs one parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Estimate { scenario, flags } => {
            load_scenario(&scenario).and_then(|s| estimate_report(&s, &flags)).and_then(|r| emit(&r, &flags).map(|_| EXIT_OK))
        }
        Command::Verify { scenario, builtin_suite, flags } => {
            let report = if builtin_suite {
                builtin_report(&flags)
            } else {
                let path = scenario.expect("clap requires a scenario without --builtin-suite");
                load_scenario(&path).and_then(|s| verify_report(&s, &flags))
            };
            report.and_then(|r| {
                emit(&r, &flags)?;
                let Report::Verify { summary, .. } = &r else { unreachable!("verify produces a verify report") };
                eprintln!(
                    "{} checks: {} passed, {} failed, {} expected failures (hypotheses unmet)",
                    summary.total, summary.passed, summary.failed, summary.expected_failures
                );
                Ok(if summary.ok { EXIT_OK } else { EXIT_CHECK_FAILED })
            })
        }
        Command::Report { report, format } => read(&report)
            .and_then(|text| Report::parse(&text))
            .map_err(|e| match e {
                Error::Input(m) => Error::input(format!("{}: {m}", report.display())),
                other => other,
            })
            .and_then(|r| r.render(format))
            .map(|text| {
                write_stdout(&text);
                EXIT_OK
            }),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}
