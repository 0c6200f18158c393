//! `enhance`: grid-search the three enhancement parameters against an
//! experimental dataset and persist the error table and best combination.

use anyhow::Context;
use clap::Args;
use gearsim_core::enhancement::{
    default_error_features, tune, EnhancementParams, ErrorTable, GridSpec,
};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::io::{fmt_f64, resolve_out_dir, write_atomic};

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    /// Simulated dataset directory (output of `features`).
    #[arg(long)]
    pub sim: PathBuf,
    /// Experimental dataset directory (output of `features`).
    #[arg(long)]
    pub exp: PathBuf,
    /// Grid specification JSON (defaults to the shipped search grid).
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Error features (comma-separated).
    #[arg(long, default_value = "log_diff_rms,log_diff_kurtosis")]
    pub features: String,
    /// Grid seed when no grid file is given.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EnhanceSummary {
    pub schema_version: u32,
    pub best_params: EnhancementParams,
    pub score: f64,
    pub features: Vec<String>,
    pub grid: GridSpec,
}

pub fn error_table_csv(table: &ErrorTable) -> String {
    let states: Vec<&String> = table
        .entries
        .first()
        .map(|e| e.breakdown.iter().map(|(s, _)| s).collect())
        .unwrap_or_default();
    let mut out = String::from("width_ratio,alpha,noise_level,score");
    for s in &states {
        for f in &table.feature_names {
            out.push_str(&format!(",err_{s}_{f}"));
        }
    }
    out.push('\n');
    for e in &table.entries {
        out.push_str(&fmt_f64(e.params.width_ratio));
        out.push(',');
        out.push_str(&fmt_f64(e.params.fault_to_harmonics));
        out.push(',');
        out.push_str(&fmt_f64(e.params.noise_level));
        out.push(',');
        out.push_str(&fmt_f64(e.score));
        for (_, per_feature) in &e.breakdown {
            for v in per_feature {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
        }
        out.push('\n');
    }
    out
}

pub fn run(args: &EnhanceArgs) -> anyhow::Result<()> {
    if let Some(w) = args.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .ok();
    }
    let sim = super::features::load_dataset(&args.sim)
        .with_context(|| format!("loading simulated dataset {}", args.sim.display()))?;
    let exp = super::features::load_dataset(&args.exp)
        .with_context(|| format!("loading experimental dataset {}", args.exp.display()))?;
    let grid = match &args.grid {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<GridSpec>(&text).context("parsing grid specification")?
        }
        None => GridSpec::default_grid(args.seed),
    };
    let features: Vec<String> = if args.features.is_empty() {
        default_error_features()
    } else {
        args.features.split(',').map(|s| s.trim().to_string()).collect()
    };

    let (best, table) = tune(&sim, &exp, &grid, &features)?;
    let best_score = table.entries[table.best_index()].score;

    let out = resolve_out_dir(args.out.clone(), "gearsim-enhance");
    std::fs::create_dir_all(&out)?;
    write_atomic(&out.join("error_table.csv"), error_table_csv(&table).as_bytes())?;
    let summary = EnhanceSummary {
        schema_version: crate::config::SCHEMA_VERSION,
        best_params: best,
        score: best_score,
        features,
        grid,
    };
    write_atomic(
        &out.join("summary.json"),
        format!("{}\n", serde_json::to_string_pretty(&summary)?).as_bytes(),
    )?;
    eprintln!(
        "enhance: best (width {}, alpha {}, noise {}) score {:.4e} over {} combinations -> {}",
        best.width_ratio,
        best.fault_to_harmonics,
        best.noise_level,
        best_score,
        table.entries.len(),
        out.display()
    );
    Ok(())
}
