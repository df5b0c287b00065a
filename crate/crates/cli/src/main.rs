//! Analyst command line: validate snapshots, run the triage analysis, and
//! generate synthetic snapshots.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 rejected input (parse or
//! validation errors, inapplicable flags), 3 oracle mismatch.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polyscope_core::engine::{analyze, AnalysisResult, EngineConfig, EngineError, ScopeFilter};
use polyscope_core::expansion::ExpansionConfig;
use polyscope_core::oracle::{oracle_analyze, OracleConfig, OracleError};
use polyscope_core::report::{
    render, summarize, what_if_delta, what_if_full_scoped, ReportFormat,
};
use polyscope_core::snapshot::{parse_snapshot, validate_snapshot, Snapshot};
use polyscope_core::synthgen::{generate, GenParams};

const EXIT_IO: u8 = 1;
const EXIT_REJECTED: u8 = 2;
const EXIT_ORACLE_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(
    name = "polyscope",
    about = "Multi-policy access-control triage for device snapshots",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis and emit a triage report.
    Analyze(AnalyzeArgs),
    /// Check a snapshot and print findings, one per line.
    Validate { snapshot: PathBuf },
    /// Generate a synthetic snapshot.
    Gen(GenArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    snapshot: PathBuf,
    /// Worker count (falls back to POLYSCOPE_WORKERS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Analyze external-storage objects only.
    #[arg(long)]
    external_only: bool,
    #[arg(long)]
    no_adversary_expansion: bool,
    #[arg(long)]
    no_victim_expansion: bool,
    /// Also analyze the fully-enforced Scoped Storage transform and report
    /// the before/after deltas.
    #[arg(long)]
    what_if_full_scoped: bool,
    /// Cross-check the engine against the reference implementation.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value = "table")]
    format: String,
    /// Omit timing from the report (for byte-stable golden output).
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    subjects: usize,
    #[arg(long)]
    objects: usize,
    /// Fraction of app packages declared legacy.
    #[arg(long, default_value_t = 0.2)]
    legacy: f64,
    /// Scoped Storage enabled (the default).
    #[arg(long, conflicts_with = "pre_scoped")]
    scoped: bool,
    /// Scoped Storage disabled.
    #[arg(long)]
    pre_scoped: bool,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Validate { snapshot } => cmd_validate(&snapshot),
        Command::Gen(args) => cmd_gen(args),
    }
}

fn read_snapshot(path: &Path) -> Result<Snapshot, ExitCode> {
    let raw = std::fs::read(path).map_err(|err| {
        eprintln!("error: cannot read {}: {err}", path.display());
        ExitCode::from(EXIT_IO)
    })?;
    parse_snapshot(&raw).map_err(|err| {
        eprintln!("error: {}: {err}", path.display());
        ExitCode::from(EXIT_REJECTED)
    })
}

fn resolve_workers(flag: Option<usize>) -> Result<Option<usize>, ExitCode> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("POLYSCOPE_WORKERS") {
        Ok(value) => match value.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => {
                eprintln!("error: POLYSCOPE_WORKERS must be a positive integer, got \"{value}\"");
                Err(ExitCode::from(EXIT_REJECTED))
            }
        },
        Err(_) => Ok(None),
    }
}

fn run_engine(snapshot: &Snapshot, config: &EngineConfig) -> Result<AnalysisResult, ExitCode> {
    analyze(snapshot, config).map_err(|err| match err {
        EngineError::Validation(report) => {
            for finding in &report.findings {
                println!("{finding}");
            }
            ExitCode::from(EXIT_REJECTED)
        }
        other => {
            eprintln!("error: {other}");
            ExitCode::from(EXIT_REJECTED)
        }
    })
}

fn cmd_analyze(args: AnalyzeArgs) -> ExitCode {
    let format: ReportFormat = match args.format.parse() {
        Ok(format) => format,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(EXIT_REJECTED);
        }
    };
    let snapshot = match read_snapshot(&args.snapshot) {
        Ok(snapshot) => snapshot,
        Err(code) => return code,
    };

    let mut config = EngineConfig::default();
    if let Some(workers) = match resolve_workers(args.workers) {
        Ok(w) => w,
        Err(code) => return code,
    } {
        config.worker_count = workers.max(1);
    }
    config.expansion = ExpansionConfig {
        adversary_expansion: !args.no_adversary_expansion,
        victim_expansion: !args.no_victim_expansion,
        prescoped_assume_rex_wex: true,
    };
    config.scope_filter = if args.external_only {
        ScopeFilter::ExternalOnly
    } else {
        ScopeFilter::All
    };

    let result = match run_engine(&snapshot, &config) {
        Ok(result) => result,
        Err(code) => return code,
    };

    if args.oracle {
        let oracle_config = OracleConfig {
            expansion: config.expansion,
            scope_filter: config.scope_filter,
            allow_large: false,
        };
        let reference = match oracle_analyze(&snapshot, &oracle_config) {
            Ok(reference) => reference,
            Err(err @ OracleError::SizeGuard { .. }) => {
                eprintln!("error: {err}");
                return ExitCode::from(EXIT_REJECTED);
            }
            Err(err) => {
                eprintln!("error: {err}");
                return ExitCode::from(EXIT_REJECTED);
            }
        };
        if reference.canonical_json(false) != result.canonical_json(false) {
            eprintln!(
                "oracle mismatch: engine ivs={} ops={} prevented={}; oracle ivs={} ops={} prevented={}",
                result.ivs.len(),
                result.ops.len(),
                result.squat_prevented.len(),
                reference.ivs.len(),
                reference.ops.len(),
                reference.squat_prevented.len()
            );
            return ExitCode::from(EXIT_ORACLE_MISMATCH);
        }
    }

    let mut report = summarize(&result, &snapshot);

    if args.what_if_full_scoped {
        let transformed = match what_if_full_scoped(&snapshot) {
            Ok(transformed) => transformed,
            Err(err) => {
                eprintln!("error: {err}");
                return ExitCode::from(EXIT_REJECTED);
            }
        };
        let after_result = match run_engine(&transformed, &config) {
            Ok(after) => after,
            Err(code) => return code,
        };
        let after_report = summarize(&after_result, &transformed);
        report.what_if_full_scoped = Some(what_if_delta(&report, &after_report));
    }

    if args.no_timing {
        report.timing = None;
    }

    let bytes = render(&report, format);
    let written = match &args.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|err| (path.display().to_string(), err)),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|err| ("stdout".to_string(), err)),
    };
    if let Err((target, err)) = written {
        eprintln!("error: cannot write {target}: {err}");
        return ExitCode::from(EXIT_IO);
    }
    ExitCode::SUCCESS
}

fn cmd_validate(path: &Path) -> ExitCode {
    let snapshot = match read_snapshot(path) {
        Ok(snapshot) => snapshot,
        Err(code) => return code,
    };
    let report = validate_snapshot(&snapshot);
    for finding in &report.findings {
        println!("{finding}");
    }
    if report.has_errors() {
        ExitCode::from(EXIT_REJECTED)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_gen(args: GenArgs) -> ExitCode {
    let params = GenParams {
        seed: args.seed,
        subject_count: args.subjects,
        object_count: args.objects,
        legacy_fraction: args.legacy,
        external_fraction: 0.35,
        scoped_storage_enabled: !args.pre_scoped,
        skew: 1.0,
    };
    let snapshot = generate(&params);
    let bytes = polyscope_core::snapshot::serialize_snapshot(&snapshot);
    if let Err(err) = std::fs::write(&args.out, bytes) {
        eprintln!("error: cannot write {}: {err}", args.out.display());
        return ExitCode::from(EXIT_IO);
    }
    ExitCode::SUCCESS
}
