use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eprsim_core::{pipeline, CriteriaReport, Result, RunConfig};

/// Momentum-position EPR experiment simulator.
#[derive(Debug, Parser)]
#[command(name = "eprsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Conditional densities and variances straight from the model.
    Theory(Overrides),
    /// Simulated slit scans in both planes, analyzed like measured data.
    Experiment(Overrides),
    /// Analyze scan CSV files produced elsewhere.
    Analyze {
        /// Position-plane scan file.
        position: PathBuf,
        /// Momentum-plane scan file.
        momentum: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Theory and experiment side by side, plus a comparison file.
    Full(Overrides),
}

#[derive(Debug, Args)]
struct Overrides {
    /// TOML file with run parameters; missing keys take their defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for the Poisson sampling.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = &self.out {
            cfg.output_dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn summary(label: &str, r: &CriteriaReport) {
    println!("{label} ({})", r.provenance.as_str());
    println!("  dx_inf   {:.5} mm", r.dx_inf_mm);
    println!("  dp_inf   {:.4} rad/mm", r.dp_inf_invmm);
    println!("  product  {:.3e} hbar^2 (EPR bound 0.25, margin {:.1}x)", r.product_hbar2, r.epr_margin);
    println!(
        "  joint    {:.3e} hbar^2 (separability bound 1, margin {:.1}x)",
        r.joint_product_hbar2, r.mancini_margin
    );
    println!("  epr_violated={} inseparable={}", r.epr_violated, r.inseparable);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Theory(o) => {
            let cfg = o.resolve()?;
            summary("theory", &pipeline::run_theory(&cfg)?);
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Experiment(o) => {
            let cfg = o.resolve()?;
            summary("experiment", &pipeline::run_experiment(&cfg)?);
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Analyze {
            position,
            momentum,
            overrides,
        } => {
            let cfg = overrides.resolve()?;
            summary("analysis", &pipeline::analyze_external(&position, &momentum, &cfg)?);
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Full(o) => {
            let cfg = o.resolve()?;
            let out = pipeline::run_full(&cfg)?;
            summary("theory", &out.theory);
            summary("experiment", &out.experiment);
            println!(
                "experiment/theory product ratio {:.2}",
                out.experiment.product_hbar2 / out.theory.product_hbar2
            );
            println!("wrote {}", cfg.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
