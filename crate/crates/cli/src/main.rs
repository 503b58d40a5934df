//! `dhams`: config-driven sampling runs and diagnostics.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for failures at run time.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dhams_core::experiment::{
    parse_config, run_diagnostic, run_experiment, run_tuning, Diagnostic, ExperimentConfig,
    Overrides,
};

#[derive(Parser)]
#[command(name = "dhams", version, about = "Momentum-augmented gradient samplers for lattice distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured chains and write draws.csv, diagnostics and manifest.json.
    Sample(RunArgs),
    /// Run the configured tuning procedure and write tuning.csv.
    Tune(RunArgs),
    /// TV distance to the exact marginals, from a previous draws.csv.
    Tv(RunArgs),
    /// Multi-chain ESS per coordinate and of the energy, from a previous draws.csv.
    Ess(RunArgs),
    /// Posterior inclusion probabilities, from a previous draws.csv.
    Pip(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> dhams_core::Result<ExperimentConfig> {
        parse_config(&self.config)?.with_overrides(&Overrides {
            output_dir: self.out.clone(),
            seed: self.seed,
            chains: self.chains,
            threads: self.threads,
        })
    }
}

fn run(command: Command) -> dhams_core::Result<()> {
    match command {
        Command::Sample(args) => {
            let cfg = args.load()?;
            let s = run_experiment(&cfg)?;
            let mean_acc = s.acceptance_rates.iter().sum::<f64>() / s.acceptance_rates.len() as f64;
            println!("sampler        {}", cfg.sampler.kind);
            println!("chains         {} x {} draws", cfg.chains, cfg.draws);
            println!("acceptance     {mean_acc:.4}");
            println!("average flips  {:.4}", s.average_flips);
            println!("wall time      {:.3}s", s.wall_time_seconds);
            for f in &s.files {
                println!("wrote          {}", f.display());
            }
        }
        Command::Tune(args) => {
            let cfg = args.load()?;
            let r = run_tuning(&cfg)?;
            let p = &r.best;
            println!(
                "best delta={} epsilon={} phi={} beta={} (criterion {:.6})",
                p.delta, p.epsilon, p.phi, p.beta, r.value
            );
            println!("wrote {}", r.path.display());
        }
        Command::Tv(args) => diagnostic(&args, Diagnostic::Tv)?,
        Command::Ess(args) => diagnostic(&args, Diagnostic::Ess)?,
        Command::Pip(args) => diagnostic(&args, Diagnostic::Pip)?,
    }
    Ok(())
}

fn diagnostic(args: &RunArgs, which: Diagnostic) -> dhams_core::Result<()> {
    let cfg = args.load()?;
    let path = run_diagnostic(&cfg, which)?;
    let text = std::fs::read_to_string(&path).unwrap_or_default();
    print!("{text}");
    log::info!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
