//! TOML experiment configuration.
//!
//! ```toml
//! [model]
//! name = "linear"        # linear | zero | polynomial
//! alpha = 1.0
//! beta = 0.5
//!
//! [model.initial]
//! kind = "point"         # point | gaussian | empirical
//! x0 = [1.0]
//!
//! [dynamics]
//! t = 10.0
//! n = 20
//! N = 50
//!
//! [estimator]
//! algorithm = "AEA"
//! observable = "x^2"
//! reference = "invariant"
//!
//! [execution]
//! seed = 7
//! replications = 20
//! ```
//!
//! A `[planner]` section with `epsilon` and `lambda` replaces the explicit
//! `t`, `n`, `N`, `M`.

use std::path::{Path, PathBuf};

use ergomv_core::model::PolynomialModel;
use ergomv_core::planner::{plan, Algorithm, EsSchedule, ParameterPlan, PlannerInput};
use ergomv_core::{
    model::zero_model, Evaluation, InitialLaw, LinearModel, ModelSpec, Observable, ParticleSchedule,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::experiment_of;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<ModelSection>,
    pub dynamics: Option<DynamicsSection>,
    pub estimator: Option<EstimatorSection>,
    pub execution: Option<ExecutionSection>,
    pub planner: Option<PlannerSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub sigma: Option<f64>,
    pub dim: Option<usize>,
    /// Confining polynomial `P(x) = Σ c_j x^j` of the polynomial model.
    pub coefficients: Option<Vec<f64>>,
    pub coupling: Option<f64>,
    pub initial: Option<InitialSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: Option<String>,
    pub x0: Option<Vec<f64>>,
    pub mean: Option<Vec<f64>>,
    /// Row-major `d × d` covariance.
    pub covariance: Option<Vec<f64>>,
    /// Diagonal covariance shorthand.
    pub variance: Option<Vec<f64>>,
    /// Atom file for `kind = "empirical"`, relative to the config file.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub t: Option<f64>,
    pub n: Option<usize>,
    #[serde(rename = "N")]
    pub particles: Option<usize>,
    #[serde(rename = "M")]
    pub ensembles: Option<usize>,
    /// `constant` or `harmonic`; harmonic needs a self-interacting algorithm.
    pub schedule: Option<String>,
    /// Largest particle count of a harmonic schedule.
    pub cap: Option<usize>,
    pub burn_in: Option<f64>,
    /// `naive` (pairwise, default) or `fast` (feature form).
    pub evaluation: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub algorithm: Option<String>,
    /// `x`, `x[j]`, `x^2`, `|x|^2`, or `polynomial` (see `coefficients`).
    pub observable: Option<String>,
    pub coefficients: Option<Vec<f64>>,
    /// `invariant`, `transient`, or a number.
    pub reference: Option<toml::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionSection {
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub dump_trajectory: Option<bool>,
    pub trajectory: Option<PathBuf>,
    pub timing: Option<bool>,
    pub antithetic: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    pub epsilon: Option<f64>,
    pub lambda: Option<f64>,
    pub cost_constant: Option<f64>,
}

/// Target value attached to every result row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    None,
    /// `∫ f dπ` of the linear model.
    Invariant,
    /// `E f(x_t)` at the simulated horizon.
    Transient,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub seed: u64,
    pub replications: usize,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub timing: bool,
    pub antithetic: bool,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model_name: String,
    pub model: ModelSpec,
    pub linear: Option<LinearModel>,
    pub plan: ParameterPlan,
    pub planner: Option<PlannerInput>,
    pub observable: Observable,
    pub burn_in: f64,
    pub evaluation: Evaluation,
    pub reference: Reference,
    pub execution: Execution,
}

/// Read and validate a config file, reporting every problem at once.
pub fn parse_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    ConfigFile::parse(&text)?.resolve(base)
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::validation(e.to_string().trim_end().to_string()))
    }

    /// Validate against `base_dir` (used for relative atom files).
    pub fn resolve(&self, base_dir: &Path) -> CliResult<ExperimentConfig> {
        let mut errors = Vec::new();
        let model_section = self.model.clone().unwrap_or_default();
        let dynamics = self.dynamics.clone().unwrap_or_default();
        let estimator = self.estimator.clone().unwrap_or_default();
        let execution = self.execution.clone().unwrap_or_default();
        if self.model.is_none() {
            errors.push("missing section [model]".to_string());
        }
        if self.estimator.is_none() {
            errors.push("missing section [estimator]".to_string());
        }

        let algorithm = match estimator.algorithm.as_deref() {
            None => {
                errors.push("missing field estimator.algorithm".into());
                None
            }
            Some(s) => match s.parse::<Algorithm>() {
                Ok(a) => Some(a),
                Err(e) => {
                    errors.push(format!("estimator.algorithm: {e}"));
                    None
                }
            },
        };
        let algorithm = algorithm.map(|a| apply_schedule_kind(a, &dynamics, &mut errors));

        let (model, linear, model_name) = build_model(&model_section, base_dir, &mut errors);
        let observable = build_observable(&estimator, &mut errors);
        let reference = build_reference(&estimator, &mut errors);

        let burn_in = dynamics.burn_in.unwrap_or(0.0);
        if !(burn_in.is_finite() && burn_in >= 0.0) {
            errors.push(format!(
                "dynamics.burn_in must be non-negative, got {burn_in}"
            ));
        }
        let evaluation = match dynamics.evaluation.as_deref().unwrap_or("naive") {
            "naive" => Evaluation::Naive,
            "fast" => Evaluation::Fast,
            other => {
                errors.push(format!(
                    "dynamics.evaluation must be 'naive' or 'fast', got '{other}'"
                ));
                Evaluation::Naive
            }
        };

        let (plan_result, planner) = match algorithm {
            Some(a) => build_plan(a, &dynamics, self.planner.as_ref(), &mut errors),
            None => (None, None),
        };

        let replications = execution.replications.unwrap_or(1);
        if replications == 0 {
            errors.push("execution.replications must be at least 1".into());
        }
        if execution.workers == Some(0) {
            errors.push("execution.workers must be at least 1".into());
        }
        let summary = execution
            .summary
            .clone()
            .or_else(|| execution.output.as_ref().map(|p| p.with_extension("json")));
        let trajectory = match (
            execution.dump_trajectory.unwrap_or(false),
            &execution.trajectory,
        ) {
            (false, _) => None,
            (true, Some(p)) => Some(p.clone()),
            (true, None) => match &execution.output {
                Some(out) => Some(out.with_extension("trajectory.csv")),
                None => {
                    errors.push(
                        "execution.dump_trajectory needs execution.trajectory or execution.output"
                            .into(),
                    );
                    None
                }
            },
        };

        if let (Some(model), Some(plan), Some(observable)) = (&model, &plan_result, &observable) {
            if matches!(reference, Reference::Invariant) && linear.is_none() {
                errors.push("estimator.reference = 'invariant' needs the linear model".into());
            }
            if matches!(reference, Reference::Transient)
                && !matches!(model_name.as_str(), "linear" | "zero")
            {
                errors.push(
                    "estimator.reference = 'transient' needs the linear or zero model".into(),
                );
            }
            if execution.antithetic.unwrap_or(false) && !replications.is_multiple_of(2) {
                errors.push("execution.antithetic needs an even number of replications".into());
            }
            let exp =
                ergomv_core::experiment::Experiment::new(model.clone(), *plan, observable.clone())
                    .with_burn_in(burn_in)
                    .with_evaluation(evaluation);
            if let Err(e) = exp.validate() {
                errors.push(e.to_string());
            }
        }

        if !errors.is_empty() {
            return Err(CliError::Validation(errors));
        }
        let cfg = ExperimentConfig {
            model_name,
            model: model.expect("validated"),
            linear,
            plan: plan_result.expect("validated"),
            planner,
            observable: observable.expect("validated"),
            burn_in,
            evaluation,
            reference,
            execution: Execution {
                seed: execution.seed.unwrap_or(0),
                replications,
                workers: execution.workers,
                output: execution.output,
                summary,
                trajectory,
                timing: execution.timing.unwrap_or(false),
                antithetic: execution.antithetic.unwrap_or(false),
            },
        };
        // reference values that cannot be computed are configuration errors too
        cfg.reference_value()?;
        Ok(cfg)
    }
}

fn apply_schedule_kind(
    a: Algorithm,
    dynamics: &DynamicsSection,
    errors: &mut Vec<String>,
) -> Algorithm {
    let Some(kind) = dynamics.schedule.as_deref() else {
        if dynamics.cap.is_some() && !matches!(a, Algorithm::EsAea(EsSchedule::Harmonic)) {
            errors.push("dynamics.cap only applies to a harmonic schedule".into());
        }
        return a;
    };
    match (kind, a) {
        ("harmonic", Algorithm::EsAea(_)) => Algorithm::EsAea(EsSchedule::Harmonic),
        ("constant", Algorithm::EsAea(_)) => {
            if dynamics.cap.is_some() {
                errors.push("dynamics.cap only applies to a harmonic schedule".into());
            }
            Algorithm::EsAea(EsSchedule::Constant)
        }
        ("constant", other) => {
            if dynamics.cap.is_some() {
                errors.push("dynamics.cap only applies to a harmonic schedule".into());
            }
            other
        }
        ("harmonic", other) => {
            errors.push(format!(
                "dynamics.schedule = 'harmonic' needs algorithm ES_AEA, got {other}"
            ));
            other
        }
        (other, a) => {
            errors.push(format!(
                "dynamics.schedule must be 'constant' or 'harmonic', got '{other}'"
            ));
            a
        }
    }
}

fn build_model(
    section: &ModelSection,
    base_dir: &Path,
    errors: &mut Vec<String>,
) -> (Option<ModelSpec>, Option<LinearModel>, String) {
    let name = section.name.clone().unwrap_or_else(|| "linear".into());
    let dim = section.dim.unwrap_or(1);
    let mut fail = |msg: String| {
        errors.push(msg);
    };
    let initial = match &section.initial {
        None => {
            fail("missing section [model.initial]".into());
            None
        }
        Some(init) => match build_initial(init, base_dir) {
            Ok(law) => Some(law),
            Err(CliError::Validation(msgs)) => {
                msgs.into_iter().for_each(&mut fail);
                None
            }
            Err(e) => {
                fail(format!("model.initial: {e}"));
                None
            }
        },
    };
    if let Some(law) = &initial {
        let model_dim = if name == "polynomial" { 1 } else { dim };
        if law.dim() != model_dim {
            fail(format!(
                "model.initial has dimension {} but the model has dimension {model_dim}",
                law.dim()
            ));
            return (None, None, name);
        }
    }
    let unused = |field: &str, set: bool, errors: &mut dyn FnMut(String)| {
        if set {
            errors(format!("model.{field} does not apply to model '{name}'"));
        }
    };
    match name.as_str() {
        "linear" => {
            unused("coefficients", section.coefficients.is_some(), &mut fail);
            unused("coupling", section.coupling.is_some(), &mut fail);
            let (Some(alpha), Some(beta)) = (section.alpha, section.beta) else {
                if section.alpha.is_none() {
                    fail("missing field model.alpha".into());
                }
                if section.beta.is_none() {
                    fail("missing field model.beta".into());
                }
                return (None, None, name);
            };
            if alpha <= beta {
                fail(format!(
                    "model.alpha = {alpha} must exceed model.beta = {beta} (the linear model is only ergodic for alpha > beta)"
                ));
                return (None, None, name);
            }
            let lin = LinearModel::new(alpha, beta)
                .and_then(|m| m.with_sigma(section.sigma.unwrap_or(1.0)))
                .and_then(|m| m.with_dim(dim));
            match lin {
                Ok(lin) => {
                    let spec = initial.map(|law| lin.spec(law));
                    match spec {
                        Some(Ok(spec)) => (Some(spec), Some(lin), name),
                        Some(Err(e)) => {
                            fail(e.to_string());
                            (None, None, name)
                        }
                        None => (None, None, name),
                    }
                }
                Err(e) => {
                    fail(format!("model: {e}"));
                    (None, None, name)
                }
            }
        }
        "zero" => {
            for (field, set) in [
                ("alpha", section.alpha.is_some()),
                ("beta", section.beta.is_some()),
                ("sigma", section.sigma.is_some()),
                ("coefficients", section.coefficients.is_some()),
                ("coupling", section.coupling.is_some()),
            ] {
                unused(field, set, &mut fail);
            }
            match initial.map(|law| zero_model(dim, law)) {
                Some(Ok(spec)) => (Some(spec), None, name),
                Some(Err(e)) => {
                    fail(e.to_string());
                    (None, None, name)
                }
                None => (None, None, name),
            }
        }
        "polynomial" => {
            unused("alpha", section.alpha.is_some(), &mut fail);
            unused("beta", section.beta.is_some(), &mut fail);
            if section.dim.is_some_and(|d| d != 1) {
                fail("the polynomial model is scalar (model.dim = 1)".into());
            }
            let Some(coefficients) = section.coefficients.clone() else {
                fail("missing field model.coefficients".into());
                return (None, None, name);
            };
            let model = PolynomialModel::new(
                coefficients,
                section.coupling.unwrap_or(0.0),
                section.sigma.unwrap_or(1.0),
            );
            match (model, initial) {
                (Ok(m), Some(law)) => match m.spec(law) {
                    Ok(spec) => (Some(spec), None, name),
                    Err(e) => {
                        fail(e.to_string());
                        (None, None, name)
                    }
                },
                (Err(e), _) => {
                    fail(format!("model: {e}"));
                    (None, None, name)
                }
                (Ok(_), None) => (None, None, name),
            }
        }
        other => {
            fail(format!(
                "model.name must be 'linear', 'zero' or 'polynomial', got '{other}'"
            ));
            (None, None, name)
        }
    }
}

fn build_initial(init: &InitialSection, base_dir: &Path) -> CliResult<InitialLaw> {
    let kind = init.kind.as_deref().unwrap_or(if init.path.is_some() {
        "empirical"
    } else if init.mean.is_some() {
        "gaussian"
    } else {
        "point"
    });
    let law = match kind {
        "point" => {
            let x0 = init
                .x0
                .clone()
                .ok_or_else(|| CliError::validation("missing field model.initial.x0"))?;
            InitialLaw::point(x0)?
        }
        "gaussian" => {
            let mean = init
                .mean
                .clone()
                .ok_or_else(|| CliError::validation("missing field model.initial.mean"))?;
            let d = mean.len();
            let covariance = match (&init.covariance, &init.variance) {
                (Some(_), Some(_)) => return Err(CliError::validation(
                    "model.initial.covariance and model.initial.variance are mutually exclusive",
                )),
                (Some(c), None) => c.clone(),
                (None, Some(v)) => {
                    if v.len() != d {
                        return Err(CliError::validation(format!(
                            "model.initial.variance needs {d} entries, got {}",
                            v.len()
                        )));
                    }
                    let mut c = vec![0.0; d * d];
                    for (i, &vi) in v.iter().enumerate() {
                        c[i * d + i] = vi;
                    }
                    c
                }
                (None, None) => return Err(CliError::validation(
                    "gaussian initial law needs model.initial.covariance or model.initial.variance",
                )),
            };
            InitialLaw::gaussian(mean, covariance)?
        }
        "empirical" => {
            let path = init
                .path
                .as_ref()
                .ok_or_else(|| CliError::validation("missing field model.initial.path"))?;
            let path = if path.is_absolute() {
                path.clone()
            } else {
                base_dir.join(path)
            };
            let dim = init.x0.as_ref().map(Vec::len).unwrap_or(0);
            crate::io::load_empirical(&path, if dim == 0 { sniff_dim(&path)? } else { dim })?
        }
        other => {
            return Err(CliError::validation(format!(
                "model.initial.kind must be 'point', 'gaussian' or 'empirical', got '{other}'"
            )))
        }
    };
    Ok(law)
}

/// Number of columns on the first data line of an atom file.
fn sniff_dim(path: &Path) -> CliResult<usize> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .count()
        })
        .ok_or_else(|| CliError::validation(format!("{}: no atoms", path.display())))
}

fn build_observable(section: &EstimatorSection, errors: &mut Vec<String>) -> Option<Observable> {
    let Some(name) = section.observable.as_deref() else {
        errors.push("missing field estimator.observable".into());
        return None;
    };
    let key: String = name.chars().filter(|c| !c.is_whitespace()).collect();
    if key != "polynomial" && section.coefficients.is_some() {
        errors.push("estimator.coefficients needs estimator.observable = 'polynomial'".into());
    }
    let obs = match key.as_str() {
        "x" => Observable::Coordinate(0),
        "x^2" | "x2" | "|x|^2" | "squared_norm" => Observable::SquaredNorm,
        "polynomial" => match &section.coefficients {
            Some(c) if !c.is_empty() => Observable::Polynomial(c.clone()),
            _ => {
                errors.push(
                    "estimator.observable = 'polynomial' needs estimator.coefficients".into(),
                );
                return None;
            }
        },
        k => match k
            .strip_prefix("x[")
            .and_then(|r| r.strip_suffix(']'))
            .and_then(|j| j.parse::<usize>().ok())
        {
            Some(j) => Observable::Coordinate(j),
            None => {
                errors.push(format!(
                    "estimator.observable must be 'x', 'x[j]', 'x^2', '|x|^2' or 'polynomial', got '{name}'"
                ));
                return None;
            }
        },
    };
    Some(obs)
}

fn build_reference(section: &EstimatorSection, errors: &mut Vec<String>) -> Reference {
    match &section.reference {
        None => Reference::None,
        Some(toml::Value::String(s)) => match s.as_str() {
            "invariant" => Reference::Invariant,
            "transient" => Reference::Transient,
            "none" => Reference::None,
            other => {
                errors.push(format!(
                    "estimator.reference must be 'invariant', 'transient' or a number, got '{other}'"
                ));
                Reference::None
            }
        },
        Some(toml::Value::Float(v)) => Reference::Value(*v),
        Some(toml::Value::Integer(v)) => Reference::Value(*v as f64),
        Some(other) => {
            errors.push(format!(
                "estimator.reference must be 'invariant', 'transient' or a number, got {other}"
            ));
            Reference::None
        }
    }
}

fn build_plan(
    algorithm: Algorithm,
    dynamics: &DynamicsSection,
    planner: Option<&PlannerSection>,
    errors: &mut Vec<String>,
) -> (Option<ParameterPlan>, Option<PlannerInput>) {
    let explicit = [
        ("dynamics.t", dynamics.t.is_some()),
        ("dynamics.n", dynamics.n.is_some()),
        ("dynamics.N", dynamics.particles.is_some()),
        ("dynamics.M", dynamics.ensembles.is_some()),
    ];
    let with_cap = |mut p: ParameterPlan| {
        if let (Some(cap), ParticleSchedule::Harmonic { base, .. }) = (dynamics.cap, p.schedule) {
            p.schedule = ParticleSchedule::Harmonic { base, cap };
        }
        p
    };
    if let Some(section) = planner {
        let mut ok = true;
        for (field, set) in explicit {
            if set {
                errors.push(format!(
                    "{field} and planner.epsilon both determine the parameters; remove one"
                ));
                ok = false;
            }
        }
        let (Some(epsilon), Some(lambda)) = (section.epsilon, section.lambda) else {
            if section.epsilon.is_none() {
                errors.push("missing field planner.epsilon".into());
            }
            if section.lambda.is_none() {
                errors.push("missing field planner.lambda".into());
            }
            return (None, None);
        };
        let input = PlannerInput::new(algorithm, epsilon, lambda)
            .with_cost_constant(section.cost_constant.unwrap_or(1.0));
        return match plan(&input) {
            Ok(p) if ok => (Some(with_cap(p)), Some(input)),
            Ok(_) => (None, None),
            Err(e) => {
                errors.push(format!("planner: {e}"));
                (None, None)
            }
        };
    }
    let mut missing = false;
    for (field, value) in [
        ("dynamics.t", dynamics.t.is_some()),
        ("dynamics.n", dynamics.n.is_some()),
        ("dynamics.N", dynamics.particles.is_some()),
    ] {
        if !value {
            errors.push(format!("missing field {field} (or a [planner] section)"));
            missing = true;
        }
    }
    if missing {
        return (None, None);
    }
    let (t, n, particles) = (
        dynamics.t.unwrap(),
        dynamics.n.unwrap(),
        dynamics.particles.unwrap(),
    );
    let ensembles = dynamics.ensembles.unwrap_or(1);
    let mut ok = true;
    if !(t.is_finite() && t > 0.0) {
        errors.push(format!("dynamics.t must be positive, got {t}"));
        ok = false;
    }
    for (field, v) in [
        ("dynamics.n", n),
        ("dynamics.N", particles),
        ("dynamics.M", ensembles),
    ] {
        if v == 0 {
            errors.push(format!("{field} must be at least 1"));
            ok = false;
        }
    }
    if ensembles > 1 && !matches!(algorithm, Algorithm::CAea | Algorithm::CsAea) {
        errors.push(format!(
            "dynamics.M > 1 needs algorithm C_AEA or CS_AEA, got {algorithm}"
        ));
        ok = false;
    }
    if !ok {
        return (None, None);
    }
    match ParameterPlan::from_parameters(algorithm, t, n, particles, ensembles) {
        Ok(p) => (Some(with_cap(p)), None),
        Err(e) => {
            errors.push(format!("dynamics: {e}"));
            (None, None)
        }
    }
}

impl ExperimentConfig {
    pub fn experiment(&self) -> ergomv_core::experiment::Experiment {
        experiment_of(self)
    }

    /// Numeric target for the configured reference, if any.
    pub fn reference_value(&self) -> CliResult<Option<f64>> {
        let moments = match self.reference {
            Reference::None => return Ok(None),
            Reference::Value(v) => return Ok(Some(v)),
            Reference::Invariant => {
                let lin = self.linear.as_ref().ok_or_else(|| {
                    CliError::validation("invariant reference needs the linear model")
                })?;
                let v = lin.sigma * lin.sigma * 0.5 / lin.alpha;
                vec![(0.0, v); lin.dim]
            }
            Reference::Transient => {
                let law = self.model.initial();
                let t = self.plan.grid()?.covered_horizon();
                let (m0, v0) = (law.mean(), law.variance());
                let gaussian = !matches!(law, InitialLaw::Empirical { .. });
                if !gaussian && polynomial_degree(&self.observable) > 2 {
                    return Err(CliError::validation(
                        "transient reference for polynomials of degree > 2 needs a Gaussian or point initial law",
                    ));
                }
                match &self.linear {
                    Some(lin) => m0
                        .iter()
                        .zip(&v0)
                        .map(|(&m, &v)| {
                            let r = ergomv_core::analysis::AnalyticReference::new(lin, m, v);
                            (r.mean(t), r.variance(t))
                        })
                        .collect(),
                    None => m0.into_iter().zip(v0).collect(),
                }
            }
        };
        let value = match &self.observable {
            Observable::Coordinate(j) => moments[*j].0,
            Observable::SquaredNorm => moments.iter().map(|(m, v)| v + m * m).sum(),
            Observable::Polynomial(c) => {
                let (m, v) = moments[0];
                c.iter()
                    .enumerate()
                    .map(|(j, cj)| cj * gaussian_moment(m, v, j))
                    .sum()
            }
            Observable::Custom { .. } => {
                return Err(CliError::validation(
                    "no closed-form reference for a custom observable",
                ))
            }
        };
        Ok(Some(value))
    }
}

fn polynomial_degree(f: &Observable) -> usize {
    match f {
        Observable::Polynomial(c) => c.len().saturating_sub(1),
        _ => 2,
    }
}

/// `E[X^j]` for `X ~ N(m, v)`.
fn gaussian_moment(m: f64, v: f64, j: usize) -> f64 {
    let (mut prev, mut cur) = (1.0, m);
    if j == 0 {
        return 1.0;
    }
    for k in 2..=j {
        let next = m * cur + (k - 1) as f64 * v * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Axis a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
pub enum Axis {
    #[value(name = "N")]
    #[serde(rename = "N")]
    Particles,
    #[value(name = "n")]
    #[serde(rename = "n")]
    Steps,
    #[value(name = "t")]
    #[serde(rename = "t")]
    Horizon,
    #[value(name = "epsilon")]
    #[serde(rename = "epsilon")]
    Epsilon,
}

impl Axis {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Particles => "N",
            Self::Steps => "n",
            Self::Horizon => "t",
            Self::Epsilon => "epsilon",
        }
    }
}

impl ConfigFile {
    /// Copy with one parameter replaced by a sweep value.
    pub fn with_axis(&self, axis: Axis, value: f64) -> CliResult<Self> {
        let mut out = self.clone();
        let as_count = |v: f64| -> CliResult<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v.is_finite() {
                Ok(v as usize)
            } else {
                Err(CliError::validation(format!(
                    "sweep value {v} for axis {} must be a positive integer",
                    axis.label()
                )))
            }
        };
        match axis {
            Axis::Epsilon => {
                let planner = out.planner.get_or_insert_with(Default::default);
                planner.epsilon = Some(value);
            }
            _ => {
                if out.planner.is_some() {
                    return Err(CliError::validation(format!(
                        "sweeping dynamics.{} conflicts with the [planner] section",
                        axis.label()
                    )));
                }
                let d = out.dynamics.get_or_insert_with(Default::default);
                match axis {
                    Axis::Particles => d.particles = Some(as_count(value)?),
                    Axis::Steps => d.n = Some(as_count(value)?),
                    Axis::Horizon => d.t = Some(value),
                    Axis::Epsilon => unreachable!(),
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments_match_known_values() {
        assert_eq!(gaussian_moment(0.0, 2.0, 4), 12.0);
        assert_eq!(gaussian_moment(1.0, 0.5, 2), 1.5);
        assert_eq!(gaussian_moment(3.0, 0.0, 3), 27.0);
    }
}
