//! `weakzq` command-line driver.
//!
//! Exit codes: `0` when every check passes, `2` when at least one check
//! fails, `1` on any configuration or execution error.

mod checks;
mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::checks::{build_domain, run_check, validate};
use crate::config::{CheckKind, RunConfig};

/// Version of the JSON report layout.
const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "weakzq", version, about = "Weak Z(q) certification and weighted form checks", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weak Z(q) certification of the configured Υ over boundary samples.
    Certify(CommonArgs),
    /// Levi eigenvalues over boundary samples (CSV).
    LeviScan(CommonArgs),
    /// Morrey-Kohn-Hörmander residuals for random interior forms.
    MkhCheck(CommonArgs),
    /// Rayleigh quotients of rescaled forms on the Siegel half-space.
    ScalingDemo(CommonArgs),
    /// Dehomogenization identities and gradient lower bound.
    HomogCheck(CommonArgs),
    /// Runs every check listed under `checks` in the config, in order.
    Run(CommonArgs),
    /// Prints the builtin domains.
    ListBuiltins {
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for JSON reports and CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `tolerances.tol`.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    let (args, only) = match cli.command {
        Command::ListBuiltins { json } => {
            list_builtins(json);
            return Ok(true);
        }
        Command::Certify(a) => (a, Some(CheckKind::Certify)),
        Command::LeviScan(a) => (a, Some(CheckKind::LeviScan)),
        Command::MkhCheck(a) => (a, Some(CheckKind::MkhCheck)),
        Command::ScalingDemo(a) => (a, Some(CheckKind::ScalingDemo)),
        Command::HomogCheck(a) => (a, Some(CheckKind::HomogCheck)),
        Command::Run(a) => (a, None),
    };
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(tol) = args.tol {
        cfg.tolerances.tol = tol;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let spec = Arc::new(build_domain(&cfg.domain)?);
    validate(&cfg, &spec)?;
    let checks = match only {
        Some(k) => vec![k],
        None if cfg.checks.is_empty() => anyhow::bail!("config lists no checks"),
        None => cfg.checks.clone(),
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("weakzq-reports"));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let config_hash = cfg.hash();
    let mut all_pass = true;
    for (i, kind) in checks.iter().enumerate() {
        let outcome = run_check(*kind, &cfg, &spec).with_context(|| format!("check `{}`", kind.name()))?;
        let stem = format!("{:02}_{}", i + 1, kind.name());
        let report = json!({
            "schema_version": SCHEMA_VERSION,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "check": kind.name(),
            "config_sha256": config_hash,
            "domain": spec.name,
            "domain_hash": spec.hash(),
            "seed": cfg.seed,
            "verdict": if outcome.pass { "PASS" } else { "FAIL" },
            "result": outcome.body,
        });
        let path = out.join(format!("{stem}.json"));
        write(&path, serde_json::to_string_pretty(&report)?.as_bytes())?;
        for (suffix, bytes) in &outcome.csv {
            write(&out.join(format!("{stem}_{suffix}.csv")), bytes)?;
        }
        println!("{}: {} ({})", kind.name(), if outcome.pass { "PASS" } else { "FAIL" }, path.display());
        all_pass &= outcome.pass;
    }
    Ok(all_pass)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn list_builtins(as_json: bool) {
    let catalog = weakzq::builtins::catalog();
    let text = if as_json {
        format!("{}\n", serde_json::to_string_pretty(&catalog).expect("catalog serializes"))
    } else {
        catalog
            .iter()
            .map(|b| format!("{}\n    rho = {}\n    {}\n\n", b.name, b.formula, b.description))
            .collect()
    };
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}
