//! `pdem` - scenario harness for the position-dependent-mass potential
//! library.
//!
//! `pdem run <scenario.cfg>` executes the configured checks and writes a
//! grid table, a machine-readable report and a human summary;
//! `pdem check-all <dir>` runs every bundled scenario and aggregates.
//!
//! Exit codes: 0 all checks passed, 1 a check failed its tolerance,
//! 2 configuration or usage error, 3 computation error.

mod config;
mod run;

use clap::{Parser, Subcommand};
use config::{parse_scenario, OutputFormat, Scenario};
use run::{run_scenario, ScenarioOutcome};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable giving the default output directory.
const OUT_DIR_ENV: &str = "PDEM_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "pdem",
    about = "verification harness for exactly solvable position-dependent-mass potentials",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and write its artifacts.
    Run {
        /// Scenario configuration file.
        scenario: PathBuf,
        /// Output directory (default: scenario `output.dir`, then
        /// $PDEM_OUT_DIR, then ./pdem-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite existing artifact files.
        #[arg(long)]
        overwrite: bool,
        /// Scale the grid resolution by this factor (interval count is
        /// multiplied; the point count stays odd).
        #[arg(long = "grid-scale")]
        grid_scale: Option<f64>,
    },
    /// Run every *.cfg scenario in a directory and aggregate pass/fail.
    CheckAll {
        /// Directory of scenario files.
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        overwrite: bool,
        #[arg(long = "grid-scale")]
        grid_scale: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out,
            overwrite,
            grid_scale,
        } => match run_one(&scenario, out.as_deref(), overwrite, grid_scale) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => e.report(),
        },
        Command::CheckAll {
            dir,
            out,
            overwrite,
            grid_scale,
        } => match check_all(&dir, out.as_deref(), overwrite, grid_scale) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => e.report(),
        },
    }
}

enum CliError {
    Config(String),
    Io(String),
    Compute(String),
}

impl CliError {
    fn report(self) -> ExitCode {
        match self {
            CliError::Config(msg) => {
                eprintln!("configuration error: {msg}");
                ExitCode::from(2)
            }
            CliError::Io(msg) => {
                eprintln!("i/o error: {msg}");
                ExitCode::from(2)
            }
            CliError::Compute(msg) => {
                eprintln!("computation error: {msg}");
                ExitCode::from(3)
            }
        }
    }
}

fn load_scenario(path: &Path, grid_scale: Option<f64>) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut scenario = parse_scenario(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(f) = grid_scale {
        scenario
            .scale_grid(f)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(scenario)
}

fn scenario_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into())
}

fn output_dir(scenario: &Scenario, cli_out: Option<&Path>) -> PathBuf {
    if let Some(p) = cli_out {
        return p.to_path_buf();
    }
    if let Some(p) = &scenario.output_dir {
        return PathBuf::from(p);
    }
    if let Ok(p) = std::env::var(OUT_DIR_ENV) {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    PathBuf::from("pdem-out")
}

/// Write a file exclusively unless overwriting was requested.
fn write_artifact(path: &Path, contents: &str, overwrite: bool) -> Result<(), CliError> {
    if path.exists() && !overwrite {
        return Err(CliError::Io(format!(
            "{} exists (use --overwrite to replace it)",
            path.display()
        )));
    }
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit_artifacts(
    scenario: &Scenario,
    outcome: &ScenarioOutcome,
    name: &str,
    dir: &Path,
    overwrite: bool,
) -> Result<(), CliError> {
    let sub = dir.join(name);
    fs::create_dir_all(&sub).map_err(|e| CliError::Io(format!("{}: {e}", sub.display())))?;
    for format in &scenario.formats {
        match format {
            OutputFormat::Table => {
                let table = outcome.table.as_ref().expect("table requested");
                write_artifact(&sub.join("grid.csv"), table, overwrite)?;
            }
            OutputFormat::Report => {
                write_artifact(&sub.join("report.txt"), &outcome.report_text(), overwrite)?;
            }
            OutputFormat::Summary => {
                write_artifact(
                    &sub.join("summary.txt"),
                    &outcome.summary_text(name),
                    overwrite,
                )?;
            }
        }
    }
    Ok(())
}

fn run_one(
    path: &Path,
    cli_out: Option<&Path>,
    overwrite: bool,
    grid_scale: Option<f64>,
) -> Result<bool, CliError> {
    let scenario = load_scenario(path, grid_scale)?;
    let name = scenario_stem(path);
    let outcome = run_scenario(&scenario).map_err(|e| CliError::Compute(e.to_string()))?;
    let dir = output_dir(&scenario, cli_out);
    emit_artifacts(&scenario, &outcome, &name, &dir, overwrite)?;
    print!("{}", outcome.summary_text(&name));
    println!("artifacts in {}", dir.join(&name).display());
    Ok(outcome.passed())
}

fn check_all(
    dir: &Path,
    cli_out: Option<&Path>,
    overwrite: bool,
    grid_scale: Option<f64>,
) -> Result<bool, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "cfg"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Config(format!(
            "no *.cfg scenarios in {}",
            dir.display()
        )));
    }
    let mut all_passed = true;
    for path in &paths {
        let name = scenario_stem(path);
        match load_scenario(path, grid_scale)
            .and_then(|s| {
                run_scenario(&s)
                    .map_err(|e| CliError::Compute(e.to_string()))
                    .map(|o| (s, o))
            })
            .and_then(|(s, o)| {
                let out = output_dir(&s, cli_out);
                emit_artifacts(&s, &o, &name, &out, overwrite)?;
                Ok(o)
            }) {
            Ok(outcome) => {
                let verdict = if outcome.passed() {
                    "PASS"
                } else {
                    all_passed = false;
                    "FAIL"
                };
                println!("{name}: {verdict}");
            }
            Err(e) => {
                all_passed = false;
                let msg = match &e {
                    CliError::Config(m) | CliError::Io(m) | CliError::Compute(m) => m.clone(),
                };
                println!("{name}: ERROR ({msg})");
            }
        }
    }
    println!("{}", if all_passed { "all scenarios passed" } else { "failures present" });
    Ok(all_passed)
}
