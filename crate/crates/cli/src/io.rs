//! File formats and atomic write discipline.
//!
//! Every artifact is written to a `.tmp` sibling and renamed into place, so
//! no command leaves partial files behind on failure. Floating-point columns
//! are printed with 17 significant digits, which round-trips f64 exactly.

use anyhow::{anyhow, bail, Context};
use gearsim_core::pipeline::{RunMetadata, SimulationResult};
use gearsim_core::sigproc::RecordedSignal;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Serialize an f64 with 17 significant digits (exact round-trip).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path
        .parent()
        .ok_or_else(|| anyhow!("path {path:?} has no parent directory"))?;
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .ok_or_else(|| anyhow!("path {path:?} has no file name"))?
            .to_string_lossy()
    ));
    {
        let mut f = std::fs::File::create(&tmp)
            .with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// On-disk manifest of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config: crate::config::RunConfig,
    pub seed: u64,
    pub state_label: String,
    pub mesh_frequency_hz: f64,
    pub output_speed_hz: f64,
    /// Once-per-revolution pulses of the input shaft, sample indices into
    /// the signal CSV.
    pub tach_pulses: Vec<usize>,
    pub iteration_histogram: Vec<u64>,
    pub discarded_samples: usize,
    /// Content hash of the manufacturing profile-error field.
    pub error_field_hash: String,
    pub signal_file: String,
    pub channels: Vec<String>,
}

impl Manifest {
    pub fn from_run(
        config: &crate::config::RunConfig,
        metadata: &RunMetadata,
        tach: &[usize],
        error_field_hash: u64,
        channels: &[String],
    ) -> Self {
        Self {
            schema_version: crate::config::SCHEMA_VERSION,
            config: config.clone(),
            seed: metadata.seed,
            state_label: metadata.config.state_label(),
            mesh_frequency_hz: metadata.mesh_frequency_hz,
            output_speed_hz: metadata.output_speed_hz,
            tach_pulses: tach.to_vec(),
            iteration_histogram: metadata.iteration_histogram.clone(),
            discarded_samples: metadata.discarded_samples,
            error_field_hash: format!("{error_field_hash:016x}"),
            signal_file: "signal.csv".into(),
            channels: channels.to_vec(),
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Emitted acceleration channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channels {
    YOnly,
    Xyz,
}

impl Channels {
    pub fn names(&self) -> Vec<String> {
        match self {
            Channels::YOnly => vec!["accel_y_ms2".into()],
            Channels::Xyz => vec![
                "accel_y_ms2".into(),
                "accel_x_ms2".into(),
                "accel_z_ms2".into(),
            ],
        }
    }
}

/// Render the signal CSV: time, acceleration channel(s), pinion shaft angle.
pub fn signal_csv(result: &SimulationResult, channels: Channels) -> String {
    let mut out = String::with_capacity(result.time.len() * 64);
    out.push_str("time_s");
    for name in channels.names() {
        out.push(',');
        out.push_str(&name);
    }
    out.push_str(",shaft_angle_rad\n");
    for i in 0..result.time.len() {
        out.push_str(&fmt_f64(result.time[i]));
        out.push(',');
        out.push_str(&fmt_f64(result.accel_y[i]));
        if channels == Channels::Xyz {
            out.push(',');
            out.push_str(&fmt_f64(result.accel_x[i]));
            out.push(',');
            out.push_str(&fmt_f64(result.accel_z[i]));
        }
        out.push(',');
        out.push_str(&fmt_f64(result.pinion_angle[i]));
        out.push('\n');
    }
    out
}

/// A signal loaded back from disk.
pub struct LoadedSignal {
    pub time: Vec<f64>,
    pub accel: Vec<f64>,
    pub shaft_angle: Option<Vec<f64>>,
    pub rate: f64,
    pub manifest: Option<Manifest>,
    /// Pulse indices from a tach column or sidecar file (bare CSV inputs).
    pub pulses: Vec<usize>,
}

/// Load a run directory (signal.csv + manifest.json) or a bare CSV with the
/// columns `time_s,accel...[,shaft_angle_rad]` and an optional pulse column.
pub fn load_signal(path: &Path, tach_file: Option<&Path>) -> anyhow::Result<LoadedSignal> {
    let (csv_path, manifest) = if path.is_dir() {
        let manifest = Manifest::load(&path.join("manifest.json"))?;
        (path.join(&manifest.signal_file), Some(manifest))
    } else {
        (path.to_path_buf(), None)
    };
    let text = std::fs::read_to_string(&csv_path)
        .with_context(|| format!("reading {}", csv_path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty CSV"))?;
    let columns: Vec<&str> = header.split(',').collect();
    let col = |name: &str| columns.iter().position(|&c| c == name);
    let time_col = col("time_s").ok_or_else(|| anyhow!("missing time_s column"))?;
    let accel_col = col("accel_y_ms2")
        .or_else(|| col("accel_ms2"))
        .ok_or_else(|| anyhow!("missing accel_y_ms2/accel_ms2 column"))?;
    let angle_col = col("shaft_angle_rad");
    let pulse_col = col("tach_pulse");

    let mut time = Vec::new();
    let mut accel = Vec::new();
    let mut angle = Vec::new();
    let mut pulses = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let get = |c: usize| -> anyhow::Result<f64> {
            fields
                .get(c)
                .ok_or_else(|| anyhow!("row {i}: missing column {c}"))?
                .parse::<f64>()
                .with_context(|| format!("row {i}: bad number"))
        };
        time.push(get(time_col)?);
        accel.push(get(accel_col)?);
        if let Some(c) = angle_col {
            angle.push(get(c)?);
        }
        if let Some(c) = pulse_col {
            if get(c)? > 0.5 {
                pulses.push(i);
            }
        }
    }
    if time.len() < 2 {
        bail!("signal has fewer than 2 samples");
    }
    let rate = ((time.len() - 1) as f64) / (time[time.len() - 1] - time[0]);
    if let Some(tf) = tach_file {
        let text = std::fs::read_to_string(tf)
            .with_context(|| format!("reading tach file {}", tf.display()))?;
        pulses = text
            .split_whitespace()
            .map(|t| t.parse::<usize>().context("bad tach index"))
            .collect::<anyhow::Result<_>>()?;
    }
    if manifest.is_none() && pulses.is_empty() {
        bail!(
            "no tachometer data: provide a run directory with a manifest, a tach_pulse \
             column, or --tach <file>"
        );
    }
    Ok(LoadedSignal {
        time,
        accel,
        shaft_angle: if angle.is_empty() { None } else { Some(angle) },
        rate,
        manifest,
        pulses,
    })
}

impl LoadedSignal {
    /// Recorded signal tracking the requested shaft. For run directories the
    /// pinion pulses come from the manifest and gear pulses are derived from
    /// the shaft angle and the tooth ratio; bare CSVs use their own pulses
    /// (assumed to track the requested shaft already).
    pub fn recorded(
        &self,
        shaft: gearsim_core::profile_errors::Wheel,
    ) -> anyhow::Result<RecordedSignal> {
        use gearsim_core::profile_errors::Wheel;
        let tau = std::f64::consts::TAU;
        let tach = match (&self.manifest, shaft) {
            (Some(m), Wheel::Pinion) => m.tach_pulses.clone(),
            (Some(m), Wheel::Gear) => {
                let angle = self
                    .shaft_angle
                    .as_ref()
                    .ok_or_else(|| anyhow!("signal CSV lacks shaft_angle_rad"))?;
                let ratio = m.config.sim.pinion.tooth_count as f64
                    / m.config.sim.gear.tooth_count as f64;
                let mut tach = Vec::new();
                let mut next = (angle[0] * ratio / tau).ceil() * tau;
                for (i, &a) in angle.iter().enumerate().skip(1) {
                    while a * ratio >= next {
                        tach.push(i);
                        next += tau;
                    }
                }
                tach
            }
            (None, _) => self.pulses.clone(),
        };
        Ok(RecordedSignal {
            samples: self.accel.clone(),
            rate: self.rate,
            tach,
            shaft_label: match shaft {
                Wheel::Pinion => "pinion".into(),
                Wheel::Gear => "gear".into(),
            },
        })
    }
}

/// Resolve the output directory: explicit flag, else the override variable,
/// else the default.
pub fn resolve_out_dir(flag: Option<PathBuf>, default: &str) -> PathBuf {
    flag.unwrap_or_else(|| {
        std::env::var_os("GEARSIM_OUT_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(default))
    })
}
