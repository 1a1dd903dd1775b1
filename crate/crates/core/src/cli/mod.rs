//! Manifest-driven front end behind the `harmorph` binary.
//!
//! Exit codes: 0 when every analysis passes, 1 when an expectation fails,
//! 2 for unreadable or invalid input and for analyses that raised errors.

mod manifest;
mod run;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

pub use manifest::{
    Analysis, DomainSpec, Expect, Grid, Manifest, ManifoldSpec, MapSpec, Op, Provenance, Resolved,
    ResolvedAnalysis, ScanOp, SchemaError,
};
pub use run::{
    run_manifest, run_manifest_str, run_resolved, AnalysisReport, Report, RunOptions, Status, Summary,
};

use crate::fixtures;

#[derive(Debug, Parser)]
#[command(name = "harmorph", version, about = "Harmonic morphisms between degenerate charts")]
pub struct Cli {
    /// Absolute tolerance; overrides every analysis tol.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Also cross-check every jet against finite differences.
    #[arg(long, global = true)]
    pub fd_check: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a manifest file.
    Run { path: PathBuf },
    /// Built-in fixtures.
    Fixtures {
        #[command(subcommand)]
        command: FixtureCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum FixtureCommand {
    /// List fixture names.
    List,
    /// Run a fixture's expectations.
    Run { name: String },
    /// Write every fixture as `<name>.manifest` into a directory.
    Export { dir: PathBuf },
}

/// Runs the command line and returns the process exit code.
pub fn main_with(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let options = RunOptions { tol: cli.tol, fd_check: cli.fd_check };
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t > 0.0) {
            let _ = writeln!(stderr, "error: --tol must be positive and finite");
            return 2;
        }
    }
    match cli.command {
        Command::Run { path } => match std::fs::read_to_string(&path) {
            Ok(text) => emit(run_manifest_str(&text, &options), cli.format, stdout, stderr),
            Err(e) => {
                let err = SchemaError::new("/", format!("cannot read {}: {e}", path.display()));
                emit(Err(err), cli.format, stdout, stderr)
            }
        },
        Command::Fixtures { command: FixtureCommand::List } => {
            for name in fixtures::fixture_catalog() {
                let _ = writeln!(stdout, "{name}");
            }
            0
        }
        Command::Fixtures { command: FixtureCommand::Run { name } } => match fixtures::build_fixture(&name) {
            Ok(f) => emit(Ok(run_resolved(f.resolved(), &options)), cli.format, stdout, stderr),
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                2
            }
        },
        Command::Fixtures { command: FixtureCommand::Export { dir } } => match export_fixtures(&dir) {
            Ok(paths) => {
                for p in paths {
                    let _ = writeln!(stdout, "{}", p.display());
                }
                0
            }
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                2
            }
        },
    }
}

fn emit(
    outcome: Result<Report, SchemaError>,
    format: Format,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    match outcome {
        Ok(report) => {
            let text = match format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json(),
            };
            let _ = stdout.write_all(text.as_bytes());
            report.exit_code
        }
        Err(err) => {
            if format == Format::Json {
                let body = serde_json::json!({ "schema_error": err, "exit_code": 2 });
                let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&body).expect("serializable"));
            }
            let _ = writeln!(stderr, "{err}");
            2
        }
    }
}

/// Writes every catalog fixture as a manifest file and returns the paths.
pub fn export_fixtures(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for name in fixtures::fixture_catalog() {
        let fixture = fixtures::build_fixture(name).expect("catalog fixtures build");
        let path = dir.join(format!("{name}.manifest"));
        std::fs::write(&path, fixture.manifest().to_json())?;
        written.push(path);
    }
    Ok(written)
}
