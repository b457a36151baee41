use std::fs;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use submonotone::constants::{alpha_grid, run_step, run_suite, StepId, StepPath, StepSummary, SuiteConfig};
use submonotone::estimate::{discrete_oracle_with, ChainOptions, OracleOptions};
use submonotone::funcspace::GeneratorProfile;
use submonotone::functionals::check_axioms;
use submonotone::schema::{test_function, Report, Segment};
use submonotone::{chain_verify, lower_bound_search, StatementInstance64};

use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    /// Exit code 2.
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] submonotone::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

fn required<T: Clone>(field: &str, x: &Option<T>) -> Result<T> {
    x.clone().ok_or_else(|| CliError::Invalid(format!("{field}: required")))
}

fn instance(config: &RunConfig) -> Result<StatementInstance64> {
    Ok(required("instance", &config.instance)?.build("instance")?)
}

fn profile(config: &RunConfig, seed: u64) -> GeneratorProfile<f64> {
    config.profile.clone().unwrap_or_default().with_seed(seed)
}

/// Output of one command: the report body and whether it is free of violations.
pub struct Outcome {
    pub clean: bool,
    pub result: Value,
    pub summary: String,
}

fn to_value<S: Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("report serializes")
}

pub fn execute(config: &RunConfig) -> Result<Report<Value>> {
    let seed = required("seed", &config.seed)?;
    if config.self_test && config.command != "chain" {
        return Err(CliError::Invalid("self_test: only the chain command has a self-test".into()));
    }
    let out = match config.command.as_str() {
        "axioms" => axioms(config, seed)?,
        "eval" => eval(config)?,
        "estimate" => estimate(config, seed)?,
        "oracle" => oracle(config)?,
        "proofsteps" => proofsteps(config, seed)?,
        "chain" => chain(config, seed)?,
        other => return Err(CliError::Invalid(format!("command: unknown command {other:?}"))),
    };
    eprintln!("{}: {}", config.command, out.summary);
    Ok(Report::new(&config.command, config, seed, out.clean, out.result))
}

fn axioms(config: &RunConfig, seed: u64) -> Result<Outcome> {
    let trials = required("trials", &config.trials)?;
    let tol = config.tol.unwrap_or(1e-6);
    if config.functionals.is_empty() {
        return Err(CliError::Invalid("functionals: at least one functional is required".into()));
    }
    let prof = profile(config, seed);
    let mut entries = Vec::new();
    let mut bad = 0;
    for (i, spec) in config.functionals.iter().enumerate() {
        let rho = spec.build(&format!("functionals[{i}]"))?;
        let rep = check_axioms(&rho, &prof, trials)?;
        let k = rep.k_quasitriangle.unwrap_or(1.0).max(rep.k_weak_lattice);
        let declared = rho.declared_k();
        let within = declared.map_or(true, |d| k <= d * (1.0 + tol) + tol);
        let ok = rep.lattice_violations == 0 && rep.failed == 0 && k.is_finite() && within;
        bad += usize::from(!ok);
        entries.push(json!({
            "functional": rho.name(),
            "declared_k": declared,
            "k": k,
            "clean": ok,
            "report": rep,
        }));
    }
    Ok(Outcome {
        clean: bad == 0,
        result: json!({ "trials": trials, "functionals": entries }),
        summary: format!("{} functionals, {bad} with violations", config.functionals.len()),
    })
}

fn eval(config: &RunConfig) -> Result<Outcome> {
    let inst = instance(config)?;
    let f = test_function("function", &required("function", &config.function)?)?;
    let rec = inst.evaluate(&f)?;
    Ok(Outcome {
        clean: true,
        result: json!({
            "instance": config.instance,
            "function": config.function,
            "lhs": rec.lhs,
            "rhs": rec.rhs,
            "ratio": rec.ratio,
        }),
        summary: format!("ratio {}", rec.ratio),
    })
}

fn oracle_options(config: &RunConfig, n: usize) -> OracleOptions<f64> {
    let opts = OracleOptions::new(n);
    match config.oracle_window {
        Some((lo, hi)) => opts.with_window(lo, hi),
        None => opts,
    }
}

fn estimate(config: &RunConfig, seed: u64) -> Result<Outcome> {
    let inst = instance(config)?;
    let budget = required("budget", &config.budget)?;
    if budget == 0 {
        return Err(CliError::Invalid("budget: must be at least 1".into()));
    }
    let est = lower_bound_search(&inst, budget, seed)?;
    let oracle = match config.oracle_n {
        Some(n) => Some(discrete_oracle_with(&inst, &oracle_options(config, n))?),
        None => None,
    };
    let summary = match &oracle {
        Some(o) => format!("lower bound {}, oracle {}", est.lower_bound, o.value),
        None => format!("lower bound {}", est.lower_bound),
    };
    Ok(Outcome {
        clean: true,
        result: json!({
            "instance": config.instance,
            "lower_bound": est.lower_bound,
            "witness": Segment::of(est.witness.piecewise()),
            "source": est.source,
            "budget": est.budget,
            "evaluations": est.evaluations,
            "oracle": oracle,
        }),
        summary,
    })
}

fn oracle(config: &RunConfig) -> Result<Outcome> {
    let inst = instance(config)?;
    let n = required("oracle_n", &config.oracle_n)?;
    let res = discrete_oracle_with(&inst, &oracle_options(config, n))?;
    Ok(Outcome {
        clean: true,
        result: json!({ "instance": config.instance, "oracle": res }),
        summary: format!("{} (n = {n}, converged: {})", res.value, res.converged),
    })
}

fn proofsteps(config: &RunConfig, seed: u64) -> Result<Outcome> {
    let suite = SuiteConfig {
        trials: required("trials", &config.trials)?,
        seed,
        tol_closed: config.tol.unwrap_or(1e-9),
        tol_quadrature: config.tol_quadrature.unwrap_or(1e-6),
        steps: config.steps.clone().unwrap_or_else(|| StepId::ALL.to_vec()),
    };
    let steps: Vec<StepSummary<f64>> = run_suite(&suite);
    let mut grid = Vec::new();
    if config.ps15_grid.unwrap_or(false) {
        let tol = match StepId::PS15.path() {
            StepPath::ClosedForm => suite.tol_closed,
            _ => suite.tol_quadrature,
        };
        for p in [1.0, 1.5, 2.0, 3.0] {
            for alpha in alpha_grid(p) {
                let s = run_step(StepId::PS15, suite.trials, seed, tol, Some((p, alpha)));
                grid.push(json!({ "p": p, "alpha": alpha, "summary": s }));
            }
        }
    }
    let bad = steps.iter().filter(|s| !s.clean()).count();
    let bad_grid = grid.iter().filter(|g| g["summary"]["violations"] != 0 || g["summary"]["errors"] != 0).count();
    Ok(Outcome {
        clean: bad == 0 && bad_grid == 0,
        result: json!({ "suite": to_value(&suite), "steps": steps, "ps15_grid": grid }),
        summary: format!(
            "{} steps x {} trials, {bad} unclean; {} grid points, {bad_grid} unclean",
            steps.len(),
            suite.trials,
            grid.len()
        ),
    })
}

fn chain(config: &RunConfig, seed: u64) -> Result<Outcome> {
    let inst = instance(config)?;
    let mut opts = ChainOptions::new(required("samples", &config.samples)?, seed);
    if let Some(tol) = config.tol {
        opts.tol = tol;
    }
    if let Some(p) = &config.profile {
        opts.profile = p.clone();
    }
    if config.self_test {
        opts.corrupt = Some(0.01);
    }
    let rep = chain_verify(&inst, &opts)?;
    Ok(Outcome {
        clean: rep.clean(),
        summary: format!(
            "{} edges, {} violations, {} unchecked{}",
            rep.edges.len(),
            rep.violations,
            rep.errors,
            if config.self_test { " (self-test: bounds x0.01)" } else { "" }
        ),
        result: to_value(&rep),
    })
}

/// One CSV line per checked item of each input report.
#[derive(Debug, Serialize)]
pub struct Row {
    pub file: String,
    pub command: String,
    pub item: String,
    pub trials: Option<u64>,
    pub violations: Option<u64>,
    pub errors: Option<u64>,
    pub value: Option<f64>,
    pub clean: bool,
}

fn rows_of(file: &str, rep: &Report<Value>) -> Vec<Row> {
    let r = &rep.result;
    let row = |item: String, trials: &Value, violations: &Value, errors: &Value, value: &Value, clean: bool| Row {
        file: file.to_string(),
        command: rep.command.clone(),
        item,
        trials: trials.as_u64(),
        violations: violations.as_u64(),
        errors: errors.as_u64(),
        value: value.as_f64(),
        clean,
    };
    let none = Value::Null;
    let list = |key: &str| r[key].as_array().cloned().unwrap_or_default();
    match rep.command.as_str() {
        "proofsteps" => {
            let mut out: Vec<Row> = list("steps")
                .iter()
                .map(|s| {
                    let ok = s["violations"] == 0 && s["errors"] == 0;
                    row(s["step"].as_str().unwrap_or("").to_string(), &s["trials"], &s["violations"], &s["errors"], &s["worst_relative_margin"], ok)
                })
                .collect();
            for g in list("ps15_grid") {
                let s = &g["summary"];
                let ok = s["violations"] == 0 && s["errors"] == 0;
                let item = format!("PS15 p={} alpha={}", g["p"], g["alpha"]);
                out.push(row(item, &s["trials"], &s["violations"], &s["errors"], &s["worst_relative_margin"], ok));
            }
            out
        }
        "chain" => list("edges")
            .iter()
            .map(|e| {
                let errors = json!(e["skipped"].as_u64().unwrap_or(0) + u64::from(!e["error"].is_null()));
                let ok = e["violations"] == 0 && errors == 0;
                row(e["edge"].as_str().unwrap_or("").to_string(), &e["samples"], &e["violations"], &errors, &e["max_ratio"], ok)
            })
            .collect(),
        "axioms" => list("functionals")
            .iter()
            .map(|f| {
                let rep = &f["report"];
                let ok = f["clean"].as_bool().unwrap_or(false);
                row(f["functional"].as_str().unwrap_or("").to_string(), &rep["trials"], &rep["lattice_violations"], &rep["failed"], &f["k"], ok)
            })
            .collect(),
        "estimate" => {
            let mut out = vec![row("lower_bound".into(), &r["budget"], &none, &none, &r["lower_bound"], true)];
            if !r["oracle"].is_null() {
                out.push(row("oracle".into(), &r["oracle"]["n"], &none, &none, &r["oracle"]["value"], true));
            }
            out
        }
        "oracle" => vec![row("oracle".into(), &r["oracle"]["n"], &none, &none, &r["oracle"]["value"], true)],
        "eval" => vec![row("ratio".into(), &none, &none, &none, &r["ratio"], true)],
        _ => Vec::new(),
    }
}

/// Aggregates report files into CSV; returns the CSV text and whether all inputs were clean.
pub fn report(inputs: &[String]) -> Result<(String, bool)> {
    if inputs.is_empty() {
        return Err(CliError::Invalid("inputs: at least one report file is required".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut clean = true;
    for path in inputs {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let rep: Report<Value> = serde_json::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("inputs: {path} is not a report ({e})")))?;
        if rep.schema != submonotone::schema::SCHEMA {
            return Err(CliError::Invalid(format!("inputs: {path} has schema {} (expected {})", rep.schema, submonotone::schema::SCHEMA)));
        }
        clean &= rep.clean;
        for r in rows_of(path, &rep) {
            w.serialize(r).expect("csv rows serialize");
        }
    }
    let bytes = w.into_inner().expect("in-memory writer");
    Ok((String::from_utf8(bytes).expect("csv is utf-8"), clean))
}
