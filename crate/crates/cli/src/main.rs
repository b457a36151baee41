//! `submono`: batch runner for the submonotone library.
//!
//! Exit codes: 0 clean, 1 violations found, 2 invalid configuration.

mod config;
mod run;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use config::RunConfig;
use run::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Empirical axiom check of functionals.
    Axioms,
    /// Both sides of one statement for one function.
    Eval,
    /// Lower-bound search for a best constant, optionally with the discrete oracle.
    Estimate,
    /// Discrete-grid oracle alone.
    Oracle,
    /// Randomized proof-step suite.
    Proofsteps,
    /// Constant-chain verification.
    Chain,
    /// Aggregate JSON reports into a CSV summary.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Axioms => "axioms",
            Command::Eval => "eval",
            Command::Estimate => "estimate",
            Command::Oracle => "oracle",
            Command::Proofsteps => "proofsteps",
            Command::Chain => "chain",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "submono", version, about = "Weighted Hardy-type inequalities with sub-monotone functionals")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration; fields left out take the command's defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the report; without it the report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Main tolerance of the command (closed-form tolerance for `proofsteps`).
    #[arg(long)]
    tol: Option<f64>,
    /// Corrupt the chain bounds by 0.01; violations are then expected.
    #[arg(long)]
    self_test: bool,
    /// Report files for `report`.
    inputs: Vec<String>,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let name = cli.command.name();
    let defaults = RunConfig::default_for(name);
    let mut config = match &cli.config {
        None => defaults,
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let given: RunConfig = serde_json::from_str(&text)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            merge(given, defaults)
        }
    };
    config.command = name.to_string();
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if cli.tol.is_some() {
        config.tol = cli.tol;
    }
    config.self_test |= cli.self_test;
    config.inputs.extend(cli.inputs.iter().cloned());
    Ok(config)
}

/// Fields missing from `given` are taken from `defaults`.
fn merge(given: RunConfig, d: RunConfig) -> RunConfig {
    RunConfig {
        command: given.command,
        seed: given.seed.or(d.seed),
        instance: given.instance.or(d.instance),
        functionals: if given.functionals.is_empty() { d.functionals } else { given.functionals },
        function: given.function.or(d.function),
        profile: given.profile.or(d.profile),
        trials: given.trials.or(d.trials),
        budget: given.budget.or(d.budget),
        oracle_n: given.oracle_n.or(d.oracle_n),
        oracle_window: given.oracle_window.or(d.oracle_window),
        samples: given.samples.or(d.samples),
        tol: given.tol.or(d.tol),
        tol_quadrature: given.tol_quadrature.or(d.tol_quadrature),
        steps: given.steps.or(d.steps),
        ps15_grid: given.ps15_grid.or(d.ps15_grid),
        inputs: given.inputs,
        self_test: given.self_test,
    }
}

/// Temp file in the target directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("report");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn emit(cli: &Cli, file: &str, bytes: &[u8]) -> Result<(), CliError> {
    match &cli.out {
        Some(dir) => {
            let path = dir.join(file);
            write_atomic(&path, bytes)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => std::io::stdout().write_all(bytes).map_err(|source| CliError::Io {
            path: "stdout".into(),
            source,
        }),
    }
}

fn main_inner(cli: &Cli) -> Result<bool, CliError> {
    let config = load(cli)?;
    if cli.command == Command::Report {
        let (csv, clean) = run::report(&config.inputs)?;
        emit(cli, "report.csv", csv.as_bytes())?;
        return Ok(clean);
    }
    let report = run::execute(&config)?;
    let mut bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
    bytes.push(b'\n');
    emit(cli, &format!("{}.json", cli.command.name()), &bytes)?;
    Ok(report.clean)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("violations found");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_prefers_given_fields() {
        let mut given: RunConfig = serde_json::from_str("{\"trials\": 5}").unwrap();
        given.command = "axioms".into();
        let m = merge(given, RunConfig::default_for("axioms"));
        assert_eq!(m.trials, Some(5));
        assert_eq!(m.seed, Some(0));
        assert_eq!(m.functionals, RunConfig::default_for("axioms").functionals);
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("r.json");
        write_atomic(&path, b"{}").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"{}");
        let names: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("r.json")]);
    }
}
