use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

mod cache;
mod commands;
mod config;
mod output;

use commands::{Overrides, EXIT_NUMERIC};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "isodiam", version, about = "Isodiametric bound checker for closed convex surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Angular grid size (overrides `grid.n_theta`).
    #[arg(long)]
    n_theta: Option<usize>,
    /// Comma-separated verdict names to evaluate.
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<String>>,
    /// Neither read nor write the trace cache.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline on one surface.
    Analyze(RunArgs),
    /// `analyze` over a list of surface parameter values.
    Sweep(RunArgs),
    /// Spherically symmetric profiles in dimension d.
    Highdim(RunArgs),
    /// Trace cache maintenance.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    /// List cache entries with size and integrity status.
    Inspect(CacheArgs),
    /// Remove every cache entry.
    Clear(CacheArgs),
}

#[derive(Args)]
struct CacheArgs {
    /// Cache directory; defaults to $ISODIAM_CACHE_DIR, then the config.
    #[arg(long)]
    dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    let o = Overrides { out: args.out.clone(), workers: args.workers, n_theta: args.n_theta, checks: args.checks.clone() };
    commands::apply_overrides(&mut cfg, &o)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Analyze(a) => commands::cmd_analyze(&load(&a)?, a.no_cache),
        Command::Sweep(a) => commands::cmd_sweep(&load(&a)?, a.no_cache),
        Command::Highdim(a) => {
            let cfg = load(&a)?;
            let dir = a.config.parent().unwrap_or(Path::new("."));
            commands::cmd_highdim(&cfg, dir)
        }
        Command::Cache { action } => {
            let (CacheAction::Inspect(c) | CacheAction::Clear(c)) = &action;
            let cfg = c.config.as_deref().map(RunConfig::load).transpose()?;
            let root = commands::cache_root(cfg.as_ref(), c.dir.as_deref());
            match action {
                CacheAction::Inspect(_) => commands::cmd_cache_inspect(&root),
                CacheAction::Clear(_) => commands::cmd_cache_clear(&root),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
