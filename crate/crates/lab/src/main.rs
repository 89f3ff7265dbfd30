use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand as ClapSubcommand};
use kgz_lab::run::DEFAULT_IDENTITY_SAMPLES;
use kgz_lab::{parse_config, run, ExperimentConfig, LabError, RunOptions, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "kgz-lab",
    version,
    about = "Numerical laboratory for the Klein-Gordon-Zakharov system"
)]
struct Cli {
    /// Experiment configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(ClapSubcommand, Debug)]
enum Cmd {
    /// Evolve the coupled system and record energies and a checkpoint.
    Solve {
        /// Stop early at this time (a checkpoint is written there).
        #[arg(long)]
        stop_at: Option<f64>,
        /// Continue from a checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Picard iteration and contraction ratios for each `picard.eps_list` entry.
    Picard,
    /// Flat versus hyperboloidal growth of the quadratic-form integrals.
    CompareFoliations,
    /// Weighted sup norms and decay-rate fits.
    Decay,
    /// Pointwise vector-field identities on random analytic samples.
    Identities {
        #[arg(long, default_value_t = DEFAULT_IDENTITY_SAMPLES)]
        samples: usize,
    },
    /// Constants of the Klainerman-Sobolev, conformal, Kubota and Georgiev inequalities.
    Inequalities,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<(), LabError> {
    let cfg = match &cli.config {
        Some(p) => parse_config(p)?,
        None => ExperimentConfig::default(),
    };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let cmd = match cli.cmd {
        Cmd::Solve { stop_at, resume } => Subcommand::Solve { stop_at, resume },
        Cmd::Picard => Subcommand::Picard,
        Cmd::CompareFoliations => Subcommand::CompareFoliations,
        Cmd::Decay => Subcommand::Decay,
        Cmd::Identities { samples } => {
            if samples == 0 {
                return Err(LabError::Usage("--samples must be at least 1".into()));
            }
            Subcommand::Identities { samples }
        }
        Cmd::Inequalities => Subcommand::Inequalities,
    };
    let opts = RunOptions {
        seed: cli.seed,
        jobs: cli.jobs,
    };
    let m = run(&cmd, &cfg, &out, opts)?;
    println!("{}: {} files written to {}", m.subcommand, m.files.len(), out.display());
    Ok(())
}
