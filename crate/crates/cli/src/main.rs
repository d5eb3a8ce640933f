//! `orthospec`: configuration-driven experiments on torus orthospectra.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "orthospec", version, about = "Orthogeodesic length spectra on flat tori")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, global = true, env = "ORTHOSPEC_WORKERS")]
    workers: Option<usize>,
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steiner data and intrinsic volumes of every body.
    Volumes,
    /// Enumerate orthogeodesics and tabulate counting functions.
    Spectrum,
    /// Zeta values, continuation, residues and twist suppression.
    Zeta {
        #[arg(long)]
        report_residues: bool,
    },
    /// Poincaré series along the imaginary axis and singularity fits.
    Poincare,
    /// Guinand–Meyer pairing for two points.
    Guinand,
    /// Twisted correlation time series.
    Correlate,
    /// Equidistribution of dilated boundaries.
    Equidist,
    /// Oscillatory-integral diagnostics.
    Oscint,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Volumes => "volumes",
            Command::Spectrum => "spectrum",
            Command::Zeta { .. } => "zeta",
            Command::Poincare => "poincare",
            Command::Guinand => "guinand",
            Command::Correlate => "correlate",
            Command::Equidist => "equidist",
            Command::Oscint => "oscint",
        }
    }
}

/// Config problems exit with 2, computation failures with 1.
struct ConfigError(anyhow::Error);

fn load(cli: &Cli) -> std::result::Result<ExperimentConfig, ConfigError> {
    let path = cli.config.as_ref().ok_or_else(|| ConfigError(anyhow::anyhow!("--config is required")))?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(ConfigError)?;
    ExperimentConfig::parse(&text).map_err(ConfigError)
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> Result<()> {
    let art = match &cli.command {
        Command::Volumes => commands::volumes(cfg)?,
        Command::Spectrum => commands::spectrum(cfg)?,
        Command::Zeta { report_residues } => commands::zeta(cfg, *report_residues)?,
        Command::Poincare => commands::poincare(cfg)?,
        Command::Guinand => commands::guinand(cfg)?,
        Command::Correlate => commands::correlate(cfg)?,
        Command::Equidist => commands::equidist(cfg)?,
        Command::Oscint => commands::oscint(cfg)?,
    };
    let name = cli.command.name();
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let bundle = json!({
        "tool": "orthospec",
        "version": orthospec::VERSION,
        "command": name,
        "config": cfg,
        "report": art.report,
    });
    let path = cli.out.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&bundle)? + "\n")?;
    if cli.verbose {
        eprintln!("wrote {}", path.display());
    }
    for (file, body) in &art.tables {
        std::fs::write(cli.out.join(file), body)?;
        if cli.verbose {
            eprintln!("wrote {}", cli.out.join(file).display());
        }
    }
    std::fs::write(cli.out.join(format!("{name}.gp")), &art.plot)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(ConfigError(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
