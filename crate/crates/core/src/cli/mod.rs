//! Batch pipelines behind the `hyperweyl` binary.
//!
//! Every subcommand reads an optional JSON configuration, writes its bulk
//! outputs (CSV, OBJ, field files) into the output directory and finishes with
//! a `<command>_report.json`. Exit codes: 0 when every check passed, 1 when an
//! invariant was violated, 2 for unusable input.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

pub use config::PipelineConfig;

use crate::error::{Error, Result};
use crate::report::{InputDigest, Report, Verdict, SCHEMA_VERSION};
use commands::Context;

#[derive(Debug, Parser)]
#[command(name = "hyperweyl", version, about = "Boundary data of convex domains in hyperbolic 3-space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration; defaults are used for absent keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Sequential reductions and no timing data, so reruns give byte-identical reports.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the grid or sample count of the selected pipeline.
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Curvature of a conformal field, with a Gauss–Bonnet summary on full-sphere inputs.
    Curvature,
    /// Split of a metric on a quasidisk into hyperbolic, Thurston and round factors.
    Decompose,
    /// Ideal convex hull of points at infinity and the Thurston/visual comparison.
    Hull,
    /// Build and certify the cut-off function.
    Cutoff,
    /// Approximating metrics and their curvature regimes over a range of n.
    Approx,
    /// Fundamental forms, Gauss map and tube factors of a surface patch.
    Surface,
    /// Realize a rotationally symmetric metric as a surface of revolution.
    Revolve,
    /// Push a convex surface to boundary data at infinity.
    Assemble,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Curvature => "curvature",
            Command::Decompose => "decompose",
            Command::Hull => "hull",
            Command::Cutoff => "cutoff",
            Command::Approx => "approx",
            Command::Surface => "surface",
            Command::Revolve => "revolve",
            Command::Assemble => "assemble",
        }
    }
}

/// Flags of one run, independent of how they were parsed.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub deterministic: bool,
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
}

fn apply_overrides(cfg: &mut PipelineConfig, cmd: Command, opts: &RunOptions) {
    if opts.deterministic {
        cfg.deterministic = true;
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if opts.resolution.is_some() {
        cfg.resolution = opts.resolution;
    }
    let Some(n) = cfg.resolution else { return };
    match cmd {
        Command::Curvature => cfg.curvature.resolution = n,
        Command::Decompose => cfg.decompose.resolution = n,
        Command::Approx => cfg.approx.resolution = n,
        Command::Surface => cfg.surface.resolution = n,
        Command::Revolve => cfg.revolve.samples = n,
        Command::Assemble => cfg.assemble.resolution = n,
        Command::Hull => cfg.hull.visual_samples = n,
        Command::Cutoff => {}
    }
}

/// Runs one pipeline and writes its report; returns the report.
pub fn run(cmd: Command, opts: &RunOptions) -> Result<Report> {
    let start = Instant::now();
    let (mut cfg, raw, base) = match &opts.config {
        Some(path) => {
            let text = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let cfg: PipelineConfig = serde_json::from_slice(&text).map_err(|e| Error::Parse {
                line: e.line(),
                msg: format!("{}: {e}", path.display()),
            })?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (cfg, Some(text), base)
        }
        None => (PipelineConfig::default(), None, PathBuf::new()),
    };
    apply_overrides(&mut cfg, cmd, opts);
    cfg.validate()?;
    fs::create_dir_all(&opts.out).map_err(|e| Error::Io(format!("{}: {e}", opts.out.display())))?;
    let mut inputs = Vec::new();
    if let Some(text) = &raw {
        inputs.push(InputDigest::of_bytes("<config>", text));
    }
    let mut ctx = Context { config: cfg.resolved(&base), base, out: opts.out.clone(), inputs, artifacts: Vec::new() };
    let mut verdict = Verdict::default();
    let results = match cmd {
        Command::Curvature => commands::curvature_cmd(&mut ctx, &mut verdict),
        Command::Decompose => commands::decompose_cmd(&mut ctx, &mut verdict),
        Command::Hull => commands::hull_cmd(&mut ctx, &mut verdict),
        Command::Cutoff => commands::cutoff_cmd(&mut ctx, &mut verdict),
        Command::Approx => commands::approx_cmd(&mut ctx, &mut verdict),
        Command::Surface => commands::surface_cmd(&mut ctx, &mut verdict),
        Command::Revolve => commands::revolve_cmd(&mut ctx, &mut verdict),
        Command::Assemble => commands::assemble_cmd(&mut ctx, &mut verdict),
    }?;
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: cmd.name().to_string(),
        config: serde_json::to_value(&cfg)?,
        inputs: ctx.inputs,
        seed: cfg.seed,
        deterministic: cfg.deterministic,
        passed: verdict.passed(),
        violations: verdict.violations,
        artifacts: ctx.artifacts,
        results,
        elapsed_ms: (!cfg.deterministic).then(|| start.elapsed().as_secs_f64() * 1e3),
    };
    report.write(&opts.out.join(format!("{}_report.json", cmd.name())))?;
    Ok(report)
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let opts = RunOptions {
        config: cli.config,
        out: cli.out,
        deterministic: cli.deterministic,
        seed: cli.seed,
        resolution: cli.resolution,
    };
    match run(cli.command, &opts) {
        Ok(report) => {
            if report.passed {
                println!("{}: ok", report.command);
                0
            } else {
                println!("{}: {} violation(s)", report.command, report.violations.len());
                for v in &report.violations {
                    println!("  {v}");
                }
                1
            }
        }
        Err(e) => {
            eprintln!("hyperweyl {}: {e}", cli.command.name());
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}
