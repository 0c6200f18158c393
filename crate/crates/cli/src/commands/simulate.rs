//! `simulate`: run one configuration end to end and persist the signal.

use anyhow::{bail, Context};
use clap::Args;
use gearsim_core::pipeline::{build_model, error_field_hash, run_model};
use std::path::PathBuf;

use crate::config::{parse_fault, preset, RunConfig};
use crate::io::{resolve_out_dir, signal_csv, write_atomic, Channels, Manifest};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Shipped experiment preset (tooth-breakage, pitting, involute-destruction).
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Configuration file (JSON, versioned schema).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Fault override, e.g. breakage:0.25:tooth=3 or
    /// pitting:depth=0.4:pos=0.5:extent=0.3:teeth=2,7.
    #[arg(long)]
    pub fault: Option<String>,
    /// Master seed override.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Signal duration override (s).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Output directory (default ./gearsim-out, or $GEARSIM_OUT_DIR).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also export the mesh stiffness curve as gms.csv.
    #[arg(long)]
    pub emit_gms: bool,
    /// Also export the assembled system matrices as matrices.csv.
    #[arg(long)]
    pub emit_matrices: bool,
    /// Emit all three casing channels instead of accel_y only.
    #[arg(long)]
    pub xyz: bool,
}

/// Resolve the run configuration from preset/config plus CLI overrides.
pub fn resolve_config(
    preset_name: &Option<String>,
    config_path: &Option<PathBuf>,
    fault: &Option<String>,
    seed: Option<u64>,
    duration: Option<f64>,
) -> anyhow::Result<RunConfig> {
    let mut config = match (preset_name, config_path) {
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            RunConfig::parse(&text)?
        }
        (None, None) => bail!("provide --preset or --config"),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    if let Some(f) = fault {
        config.sim.fault = parse_fault(f)?;
    }
    if let Some(s) = seed {
        config.sim.seed = s;
    }
    if let Some(d) = duration {
        config.sim.conditions.duration_s = d;
    }
    config
        .sim
        .validate()
        .map_err(|e| anyhow::Error::new(e).context("invalid configuration"))?;
    Ok(config)
}

/// Run one simulation into `dir`. Returns the error-field hash.
pub fn run_into(config: &RunConfig, dir: &std::path::Path, xyz: bool) -> anyhow::Result<u64> {
    let model = build_model(&config.sim)?;
    let (result, wall) = run_model(&model)?;
    let hash = error_field_hash(&model.errors);
    let channels = if xyz { Channels::Xyz } else { Channels::YOnly };
    let manifest = Manifest::from_run(
        config,
        &result.metadata,
        &result.tach_pulses,
        hash,
        &channels.names(),
    );
    write_atomic(&dir.join("signal.csv"), signal_csv(&result, channels).as_bytes())?;
    write_atomic(
        &dir.join("manifest.json"),
        format!("{}\n", serde_json::to_string_pretty(&manifest)?).as_bytes(),
    )?;
    eprintln!(
        "simulated {} ({} samples, {} tach pulses) in {wall:.2}s -> {}",
        manifest.state_label,
        result.time.len(),
        result.tach_pulses.len(),
        dir.display()
    );
    Ok(hash)
}

fn gms_csv(model: &gearsim_core::pipeline::Model) -> String {
    let mut out = String::from("cycle_pos_rad,total_stiffness_n_per_m,k_pair0,k_pair1\n");
    for i in 0..model.gms.len() {
        out.push_str(&crate::io::fmt_f64(model.gms.cycle_grid[i]));
        out.push(',');
        out.push_str(&crate::io::fmt_f64(model.gms.total[i]));
        out.push(',');
        out.push_str(&crate::io::fmt_f64(model.gms.pairs[i][0].stiffness));
        out.push(',');
        out.push_str(&crate::io::fmt_f64(model.gms.pairs[i][1].stiffness));
        out.push('\n');
    }
    out
}

fn matrices_csv(model: &gearsim_core::pipeline::Model) -> String {
    let mut out = String::new();
    for (name, m) in [
        ("mass", &model.matrices.mass),
        ("damping", &model.matrices.damping),
        ("k_const", &model.matrices.k_const),
    ] {
        out.push_str(&format!("# {name} ({0}x{0})\n", m.nrows()));
        for r in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|c| crate::io::fmt_f64(m[(r, c)])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out.push_str(&format!("# k_cycle: {} matrices\n", model.matrices.k_cycle.len()));
    out
}

pub fn run(args: &SimulateArgs) -> anyhow::Result<()> {
    let config = resolve_config(
        &args.preset,
        &args.config,
        &args.fault,
        args.seed,
        args.duration,
    )?;
    let dir = resolve_out_dir(args.out.clone(), "gearsim-out");
    if args.emit_gms || args.emit_matrices {
        let model = build_model(&config.sim)?;
        if args.emit_gms {
            write_atomic(&dir.join("gms.csv"), gms_csv(&model).as_bytes())?;
        }
        if args.emit_matrices {
            write_atomic(&dir.join("matrices.csv"), matrices_csv(&model).as_bytes())?;
        }
    }
    run_into(&config, &dir, args.xyz)?;
    Ok(())
}
