//! Subcommand dispatch: runs one experiment into an output directory and
//! finishes with the manifest.

use std::path::{Path, PathBuf};

use kgz_core::picard::ScalingRow;
use serde::Serialize;

use crate::checkpoint::{checkpoint_load, save, Checkpoint};
use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::experiments as ex;
use crate::output::{sha256_hex, unix_ms, OutputDir, RunManifest};

pub const CHECKPOINT: &str = "checkpoint.kgzl";
pub const DEFAULT_IDENTITY_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub enum Subcommand {
    Solve {
        stop_at: Option<f64>,
        resume: Option<PathBuf>,
    },
    Picard,
    CompareFoliations,
    Decay,
    Identities {
        samples: usize,
    },
    Inequalities,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Solve { .. } => "solve",
            Self::Picard => "picard",
            Self::CompareFoliations => "compare-foliations",
            Self::Decay => "decay",
            Self::Identities { .. } => "identities",
            Self::Inequalities => "inequalities",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Worker threads; 0 means one per logical core.
    pub jobs: usize,
}

struct Session {
    out: OutputDir,
    json: bool,
    deviations: Vec<String>,
}

impl Session {
    fn summary<T: Serialize>(&mut self, value: &T) -> LabResult<()> {
        if self.json {
            self.out.write_json("summary.json", value)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct SolveSummary {
    t_final: f64,
    level: i64,
    resumed_from: Option<f64>,
    max_relative_balance_residual: [f64; 2],
}

#[derive(Serialize)]
struct PicardSummary {
    eps: Vec<f64>,
    max_rho: Vec<Option<f64>>,
    contracted: Vec<bool>,
    limit_within_5x: Vec<bool>,
    log_rho_slope: Option<f64>,
    rho_nonincreasing: Option<bool>,
    eps0: Option<f64>,
    eps0_failed: Option<f64>,
}

#[derive(Serialize)]
struct FoliationSummary {
    rows: Vec<FoliationRow>,
}

#[derive(Serialize)]
struct FoliationRow {
    q: &'static str,
    foliation: &'static str,
    c0: f64,
    c1: f64,
    se_c1: f64,
    last_decade_increase: f64,
    classification: &'static str,
}

fn execute(cmd: &Subcommand, cfg: &ExperimentConfig, opts: RunOptions, s: &mut Session) -> LabResult<()> {
    match cmd {
        Subcommand::Solve { stop_at, resume } => {
            let ck = resume.as_deref().map(checkpoint_load).transpose()?;
            if ck.is_some() {
                s.deviations
                    .push("ghost-weight accumulators and energy series restart at the resume time".into());
            }
            let res = ex::solve(cfg, *stop_at, ck.as_ref())?;
            s.out.write_csv(&ex::energy_table(&res.ledger))?;
            save(&Checkpoint::from_state(&res.final_state), &s.out.path(CHECKPOINT))?;
            s.out.register(CHECKPOINT)?;
            s.summary(&SolveSummary {
                t_final: res.final_state.t,
                level: res.final_state.level,
                resumed_from: ck.map(|c| c.t),
                max_relative_balance_residual: res.max_balance_residual,
            })
        }
        Subcommand::Picard => {
            let pc = cfg.picard_config();
            let sweep = ex::picard_full(&pc, &cfg.picard.eps_list, true)?;
            s.out.write_csv(&ex::picard_table(&sweep.runs))?;
            let (table, fit) = ex::contraction_table(&sweep);
            s.out.write_csv(&table)?;
            if let Some(search) = &sweep.eps0 {
                s.out.write_csv(&ex::eps0_table(search))?;
            }
            let rows: Vec<_> = sweep.runs.iter().map(|(_, r)| ScalingRow::of(r)).collect();
            s.summary(&PicardSummary {
                eps: rows.iter().map(|r| r.eps).collect(),
                max_rho: rows.iter().map(|r| r.max_ratio).collect(),
                contracted: rows.iter().map(|r| r.contracted).collect(),
                limit_within_5x: sweep.limits.iter().map(|l| l.within(5.0)).collect(),
                log_rho_slope: fit.as_ref().and_then(|f| f.slope),
                rho_nonincreasing: fit.as_ref().map(|f| f.nonincreasing()),
                eps0: sweep.eps0.as_ref().map(|e| e.eps0),
                eps0_failed: sweep.eps0.as_ref().and_then(|e| e.failed),
            })
        }
        Subcommand::CompareFoliations => {
            let table = ex::foliation(&cfg.foliation_config())?;
            let (summary, curves) = ex::growth_tables(&table);
            s.out.write_csv(&summary)?;
            s.out.write_csv(&curves)?;
            s.summary(&FoliationSummary {
                rows: table
                    .rows
                    .iter()
                    .map(|r| FoliationRow {
                        q: r.q.name(),
                        foliation: r.foliation.name(),
                        c0: r.c0,
                        c1: r.c1,
                        se_c1: r.se_c1,
                        last_decade_increase: r.last_decade_increase,
                        classification: r.classification.name(),
                    })
                    .collect(),
            })
        }
        Subcommand::Decay => {
            let (series, fits) = ex::decay(cfg)?;
            s.out.write_csv(&series)?;
            s.out.write_csv(&ex::decay_fit_table(&fits))?;
            s.summary(&fits)
        }
        Subcommand::Identities { samples } => {
            let rows = ex::identities(opts.seed, *samples)?;
            s.out.write_csv(&ex::identity_table(&rows))?;
            s.summary(&rows)
        }
        Subcommand::Inequalities => {
            s.deviations.push("Georgiev tier truncated to |I|<=2".into());
            let c = ex::inequalities(cfg)?;
            s.out.write_csv(&ex::constants_table(&c))?;
            s.summary(&c)
        }
    }
}

fn pool(jobs: usize) -> LabResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| LabError::Usage(format!("cannot start {jobs} worker threads: {e}")))
}

/// Runs `cmd` into `out_dir`. The manifest is written in every case where
/// the directory could be opened; on failure its status is `partial` and the
/// error is returned after writing it.
pub fn run(cmd: &Subcommand, cfg: &ExperimentConfig, out_dir: &Path, opts: RunOptions) -> LabResult<RunManifest> {
    let start = unix_ms();
    let jobs = if opts.jobs == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        opts.jobs
    };
    let mut s = Session {
        out: OutputDir::open(out_dir)?,
        json: cfg.wants_json(),
        deviations: Vec::new(),
    };
    let result = pool(jobs).and_then(|p| p.install(|| execute(cmd, cfg, opts, &mut s)));
    let manifest = RunManifest {
        subcommand: cmd.name().to_string(),
        config_hash: sha256_hex(cfg.canonical_json().as_bytes()),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: opts.seed,
        jobs,
        start_unix_ms: start,
        end_unix_ms: unix_ms(),
        files: s.out.files.clone(),
        deviations: s.deviations.clone(),
        status: if result.is_ok() { "complete" } else { "partial" }.to_string(),
        error: result.as_ref().err().map(|e| e.to_string()),
    };
    s.out.finish(&manifest)?;
    result.map(|_| manifest)
}
