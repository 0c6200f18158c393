//! `features`: angular resampling, synchronous averaging, difference signal,
//! healthy-rms normalization, and condition-indicator extraction.

use anyhow::{anyhow, bail, Context};
use clap::Args;
use gearsim_core::profile_errors::Wheel;
use gearsim_core::sigproc::{
    angular_resample, condition_indicators, difference_signal, envelope, mean_rms,
    normalize_by_healthy, synchronous_average, DifferenceConfig, DifferenceSignal, CI_NAMES,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::io::{fmt_f64, load_signal, resolve_out_dir, write_atomic};

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Run directories, a batch directory, or bare CSV files named
    /// `<state>__<id>.csv`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Shaft to track for the synchronous average.
    #[arg(long, default_value = "gear")]
    pub shaft: String,
    /// Angular points per revolution.
    #[arg(long, default_value_t = 1024)]
    pub points_per_rev: usize,
    /// Mesh harmonics to remove (default: all below the Nyquist order).
    #[arg(long)]
    pub harmonics: Option<usize>,
    /// Sideband pairs removed around each mesh harmonic.
    #[arg(long, default_value_t = 2)]
    pub sidebands: usize,
    /// Tach index file for bare CSV inputs (one sample index per line).
    #[arg(long)]
    pub tach: Option<PathBuf>,
    /// Mesh order override for bare CSV inputs (tooth count of the tracked
    /// shaft's wheel).
    #[arg(long)]
    pub mesh_order: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Index of a processed dataset, consumed by `enhance`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub schema_version: u32,
    pub shaft: String,
    pub points_per_rev: usize,
    pub mesh_order: usize,
    pub records: Vec<DatasetRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub state: String,
    pub diff_file: String,
}

pub fn parse_shaft(name: &str) -> anyhow::Result<Wheel> {
    match name {
        "pinion" => Ok(Wheel::Pinion),
        "gear" => Ok(Wheel::Gear),
        other => bail!("unknown shaft '{other}' (pinion|gear)"),
    }
}

/// Expand inputs: batch directories (containing run_*/manifest.json) expand
/// to their run directories.
fn expand_inputs(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() && !input.join("manifest.json").exists() {
            let mut subs: Vec<PathBuf> = std::fs::read_dir(input)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.join("manifest.json").exists())
                .collect();
            subs.sort();
            if subs.is_empty() {
                bail!("{} contains no run directories", input.display());
            }
            out.extend(subs);
        } else {
            out.push(input.clone());
        }
    }
    Ok(out)
}

fn state_and_id(path: &Path) -> anyhow::Result<(String, String)> {
    if path.is_dir() {
        let manifest = crate::io::Manifest::load(&path.join("manifest.json"))?;
        let id = path
            .file_name()
            .ok_or_else(|| anyhow!("bad path"))?
            .to_string_lossy()
            .to_string();
        Ok((manifest.state_label, id))
    } else {
        let stem = path
            .file_stem()
            .ok_or_else(|| anyhow!("bad file name"))?
            .to_string_lossy()
            .to_string();
        match stem.split_once("__") {
            Some((state, id)) => Ok((state.to_string(), id.to_string())),
            None => bail!(
                "bare CSV '{}' must be named <state>__<id>.csv so its health state is known",
                path.display()
            ),
        }
    }
}

fn column_csv(header: &str, values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 26 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for v in values {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

pub struct ProcessedDataset {
    pub index: DatasetIndex,
    pub diffs: Vec<DifferenceSignal>,
    pub cis: Vec<gearsim_core::sigproc::ConditionIndicatorSet>,
    pub sync_avgs: Vec<Vec<f64>>,
}

/// Run the processing chain over a set of inputs.
pub fn process(
    inputs: &[PathBuf],
    shaft: Wheel,
    points_per_rev: usize,
    harmonics: Option<usize>,
    sidebands: usize,
    tach: Option<&Path>,
    mesh_order_override: Option<usize>,
) -> anyhow::Result<ProcessedDataset> {
    let paths = expand_inputs(inputs)?;
    let mut records = Vec::new();
    let mut diffs: Vec<DifferenceSignal> = Vec::new();
    let mut sync_avgs = Vec::new();
    let mut mesh_order_seen: Option<usize> = None;

    for path in &paths {
        let (state, id) = state_and_id(path)?;
        let loaded = load_signal(path, tach)?;
        let mesh_order = match (&loaded.manifest, mesh_order_override) {
            (_, Some(z)) => z,
            (Some(m), None) => match shaft {
                Wheel::Pinion => m.config.sim.pinion.tooth_count as usize,
                Wheel::Gear => m.config.sim.gear.tooth_count as usize,
            },
            (None, None) => bail!("bare CSV input needs --mesh-order"),
        };
        if let Some(prev) = mesh_order_seen {
            if prev != mesh_order {
                bail!("inconsistent mesh orders {prev} vs {mesh_order} across inputs");
            }
        }
        mesh_order_seen = Some(mesh_order);
        let recorded = loaded.recorded(shaft)?;
        let segments = angular_resample(&recorded, points_per_rev)?;
        let avg = synchronous_average(&segments)?;
        let cfg = DifferenceConfig {
            mesh_order,
            max_harmonics: harmonics,
            sideband_pairs: sidebands,
        };
        let diff = difference_signal(&avg, &cfg)?;
        sync_avgs.push(avg.cycle_signal);
        diffs.push(diff);
        records.push(DatasetRecord {
            id,
            state,
            diff_file: String::new(),
        });
    }

    // Normalize every difference signal by the healthy-state mean rms.
    let healthy: Vec<Vec<f64>> = records
        .iter()
        .zip(diffs.iter())
        .filter(|(r, _)| r.state == "healthy")
        .map(|(_, d)| d.values.clone())
        .collect();
    if healthy.is_empty() {
        bail!("no healthy-state signals in the input set; normalization needs a healthy reference");
    }
    let healthy_rms = mean_rms(&healthy);
    let mut values: Vec<Vec<f64>> = diffs.iter().map(|d| d.values.clone()).collect();
    normalize_by_healthy(&mut values, healthy_rms)?;
    for (d, v) in diffs.iter_mut().zip(values.into_iter()) {
        d.values = v;
    }

    let cis = diffs
        .iter()
        .map(|d| {
            let env = envelope(d);
            condition_indicators(d, &env).map_err(anyhow::Error::new)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    Ok(ProcessedDataset {
        index: DatasetIndex {
            schema_version: crate::config::SCHEMA_VERSION,
            shaft: match shaft {
                Wheel::Pinion => "pinion".into(),
                Wheel::Gear => "gear".into(),
            },
            points_per_rev,
            mesh_order: mesh_order_seen.unwrap_or(0),
            records,
        },
        diffs,
        cis,
        sync_avgs,
    })
}

pub fn run(args: &FeaturesArgs) -> anyhow::Result<()> {
    let shaft = parse_shaft(&args.shaft)?;
    let mut dataset = process(
        &args.inputs,
        shaft,
        args.points_per_rev,
        args.harmonics,
        args.sidebands,
        args.tach.as_deref(),
        args.mesh_order,
    )?;
    let out = resolve_out_dir(args.out.clone(), "gearsim-features");
    std::fs::create_dir_all(&out)?;

    // CI table.
    let mut table = String::from("id,state");
    for name in CI_NAMES {
        table.push(',');
        table.push_str(name);
    }
    table.push('\n');
    for (rec, ci) in dataset.index.records.iter().zip(dataset.cis.iter()) {
        table.push_str(&rec.id);
        table.push(',');
        table.push_str(&rec.state);
        for v in ci.as_array() {
            table.push(',');
            table.push_str(&fmt_f64(v));
        }
        table.push('\n');
    }
    write_atomic(&out.join("ci_table.csv"), table.as_bytes())?;

    // Per-signal plot data and the dataset index for `enhance`.
    for i in 0..dataset.index.records.len() {
        let id = dataset.index.records[i].id.clone();
        let diff_file = format!("{id}_diff.csv");
        write_atomic(
            &out.join(&diff_file),
            column_csv("diff", &dataset.diffs[i].values).as_bytes(),
        )?;
        write_atomic(
            &out.join(format!("{id}_sa.csv")),
            column_csv("sync_average", &dataset.sync_avgs[i]).as_bytes(),
        )?;
        dataset.index.records[i].diff_file = diff_file;
    }
    write_atomic(
        &out.join("dataset.json"),
        format!("{}\n", serde_json::to_string_pretty(&dataset.index)?).as_bytes(),
    )?;
    eprintln!(
        "features: {} signals -> {}",
        dataset.index.records.len(),
        out.display()
    );
    Ok(())
}

/// Load a dataset produced by this command.
pub fn load_dataset(dir: &Path) -> anyhow::Result<Vec<gearsim_core::enhancement::DiffRecord>> {
    let index: DatasetIndex =
        serde_json::from_str(&std::fs::read_to_string(dir.join("dataset.json")).with_context(
            || format!("reading {}/dataset.json", dir.display()),
        )?)?;
    index
        .records
        .iter()
        .map(|rec| {
            let text = std::fs::read_to_string(dir.join(&rec.diff_file))?;
            let values: Vec<f64> = text
                .lines()
                .skip(1)
                .filter(|l| !l.is_empty())
                .map(|l| l.parse::<f64>().context("bad diff value"))
                .collect::<anyhow::Result<_>>()?;
            Ok(gearsim_core::enhancement::DiffRecord {
                id: rec.id.clone(),
                state: rec.state.clone(),
                values,
            })
        })
        .collect()
}
