//! `batch`: generate an ensemble of runs sharing one manufacturing
//! profile-error field, with per-run seeds for everything else.

use anyhow::Context;
use clap::Args;
use gearsim_core::enhancement::mix_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::config::RunConfig;
use crate::io::{resolve_out_dir, write_atomic, Manifest};

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub fault: Option<String>,
    /// Number of runs.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Master seed: fixes the shared error field and derives per-run seeds.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub xyz: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchIndex {
    pub schema_version: u32,
    pub master_seed: u64,
    pub shared_error_seed: u64,
    pub runs: Vec<BatchRun>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchRun {
    pub dir: String,
    pub seed: u64,
    pub state_label: String,
    pub status: String,
}

pub fn run(args: &BatchArgs) -> anyhow::Result<()> {
    if args.count < 1 {
        anyhow::bail!("--count must be ≥ 1");
    }
    let base = super::simulate::resolve_config(
        &args.preset,
        &args.config,
        &args.fault,
        args.seed,
        args.duration,
    )?;
    let out = resolve_out_dir(args.out.clone(), "gearsim-batch");
    std::fs::create_dir_all(&out)?;
    if let Some(w) = args.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .ok();
    }

    let master = base.sim.seed;
    let error_seed = base.sim.effective_error_seed();
    let runs: Vec<(usize, RunConfig)> = (0..args.count)
        .map(|i| {
            let mut config = base.clone();
            config.sim.seed = mix_seed(master, i as u64 + 1);
            config.sim.error_seed = Some(error_seed);
            (i, config)
        })
        .collect();

    let results: Vec<BatchRun> = runs
        .par_iter()
        .map(|(i, config)| {
            let dir = out.join(format!("run_{i:03}"));
            let name = format!("run_{i:03}");
            // Resume: a run whose manifest already parses is complete.
            if let Ok(m) = Manifest::load(&dir.join("manifest.json")) {
                return BatchRun {
                    dir: name,
                    seed: m.seed,
                    state_label: m.state_label,
                    status: "skipped".into(),
                };
            }
            match super::simulate::run_into(config, &dir, args.xyz) {
                Ok(_) => BatchRun {
                    dir: name,
                    seed: config.sim.seed,
                    state_label: config.sim.state_label(),
                    status: "ok".into(),
                },
                Err(e) => BatchRun {
                    dir: name,
                    seed: config.sim.seed,
                    state_label: config.sim.state_label(),
                    status: format!("failed: {e:#}"),
                },
            }
        })
        .collect();

    let index = BatchIndex {
        schema_version: crate::config::SCHEMA_VERSION,
        master_seed: master,
        shared_error_seed: error_seed,
        runs: results,
    };
    write_atomic(
        &out.join("index.json"),
        format!("{}\n", serde_json::to_string_pretty(&index)?).as_bytes(),
    )
    .context("writing batch index")?;
    let failed = index.runs.iter().filter(|r| r.status.starts_with("failed")).count();
    eprintln!(
        "batch: {} runs ({} skipped, {} failed) -> {}",
        index.runs.len(),
        index.runs.iter().filter(|r| r.status == "skipped").count(),
        failed,
        out.display()
    );
    if failed > 0 {
        anyhow::bail!("{failed} batch runs failed (see index.json)");
    }
    Ok(())
}
