use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use mltide::experiment::{parse_config_text, run_sweep, run_verification, Experiment, ExperimentConfig};

/// Preconditioned GMRES experiments for the multilayer rotating shallow-water model.
#[derive(Debug, Parser)]
#[command(name = "mltide", version)]
struct Cli {
    /// fr-sweep, cfl-sweep, layer-sweep or verify
    #[arg(long)]
    experiment: Option<String>,
    /// ilu, wtd-norm, layer-decoupled or tridiag
    #[arg(long)]
    pc: Option<String>,
    /// exact or ilu0
    #[arg(long)]
    inner: Option<String>,
    /// Comma-separated mesh sizes N (N x N squares)
    #[arg(long)]
    mesh_sizes: Option<String>,
    /// Layer count, or a comma-separated list for the layer sweep
    #[arg(long)]
    layers: Option<String>,
    /// Comma-separated Froude numbers
    #[arg(long)]
    fr: Option<String>,
    /// Comma-separated CFL numbers (dt/h)
    #[arg(long)]
    cfl: Option<String>,
    #[arg(long)]
    rtol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Solve unknown per step: stage or midpoint
    #[arg(long)]
    unknown: Option<String>,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file; flags given on the command line take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

fn build_config(cli: &Cli) -> mltide::Result<ExperimentConfig> {
    let file = match &cli.config {
        Some(path) => parse_config_text(&fs::read_to_string(path)?)?,
        None => Default::default(),
    };
    let experiment: Experiment = cli
        .experiment
        .as_deref()
        .or(file.get("experiment").map(String::as_str))
        .ok_or_else(|| mltide::Error::Config("--experiment is required".into()))?
        .parse()?;
    let mut config = ExperimentConfig::defaults(experiment);
    for (k, v) in &file {
        if k != "experiment" {
            config.set(k, v)?;
        }
    }
    let flags = [
        ("pc", &cli.pc),
        ("inner", &cli.inner),
        ("mesh-sizes", &cli.mesh_sizes),
        ("layers", &cli.layers),
        ("fr", &cli.fr),
        ("cfl", &cli.cfl),
        ("rtol", &cli.rtol),
        ("seed", &cli.seed),
        ("unknown", &cli.unknown),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            config.set(k, v)?;
        }
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn emit(config: &ExperimentConfig, text: &str) -> mltide::Result<()> {
    match &config.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> mltide::Result<bool> {
    let config = build_config(cli)?;
    if config.experiment == Experiment::Verify {
        let (report, ok) = run_verification(&config)?;
        emit(&config, &report)?;
        Ok(ok)
    } else {
        let table = run_sweep(&config)?;
        emit(&config, &table.to_csv())?;
        Ok(true)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
