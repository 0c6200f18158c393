//! Simulation enhancement: width modification, fault-to-harmonics mixing,
//! noise injection, and the exhaustive grid search that tunes the three
//! parameters against measured condition indicators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigproc::signal_stats;

/// The three enhancement parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnhancementParams {
    /// Signal width ratio (shrink < 1 < stretch).
    pub width_ratio: f64,
    /// Fault-to-harmonics mixing coefficient α (may exceed 1).
    pub fault_to_harmonics: f64,
    /// White-noise multiplier relative to the normalized signal scale.
    pub noise_level: f64,
}

impl EnhancementParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.width_ratio > 0.0) {
            return Err(Error::Enhancement("width_ratio must be > 0".into()));
        }
        if self.fault_to_harmonics < 0.0 || self.noise_level < 0.0 {
            return Err(Error::Enhancement(
                "fault_to_harmonics and noise_level must be ≥ 0".into(),
            ));
        }
        Ok(())
    }
}

/// Grid of parameter combinations to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width_ratios: Vec<f64>,
    pub alphas: Vec<f64>,
    pub noise_levels: Vec<f64>,
    /// Noise realizations per combination.
    pub n_noise: usize,
    pub seed: u64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width_ratios.is_empty() || self.alphas.is_empty() || self.noise_levels.is_empty() {
            return Err(Error::Enhancement("empty parameter grid".into()));
        }
        if self.n_noise == 0 {
            return Err(Error::Enhancement("n_noise must be ≥ 1".into()));
        }
        for &r in &self.width_ratios {
            if !(r > 0.0) {
                return Err(Error::Enhancement("width ratios must be > 0".into()));
            }
        }
        Ok(())
    }

    pub fn combinations(&self) -> Vec<EnhancementParams> {
        let mut out =
            Vec::with_capacity(self.width_ratios.len() * self.alphas.len() * self.noise_levels.len());
        for &r in &self.width_ratios {
            for &a in &self.alphas {
                for &n in &self.noise_levels {
                    out.push(EnhancementParams {
                        width_ratio: r,
                        fault_to_harmonics: a,
                        noise_level: n,
                    });
                }
            }
        }
        out
    }

    /// Default search grid bracketing all shipped optima.
    pub fn default_grid(seed: u64) -> Self {
        let mut width_ratios: Vec<f64> = (2..=20).map(|i| i as f64 * 0.05).collect();
        width_ratios.extend([1.25, 1.5, 2.0]);
        Self {
            width_ratios,
            alphas: (0..=60).map(|i| i as f64 * 0.05).collect(),
            noise_levels: (0..=50).map(|i| i as f64 * 0.05).collect(),
            n_noise: 3,
            seed,
        }
    }
}

/// One difference signal with its health-state label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffRecord {
    pub id: String,
    pub state: String,
    pub values: Vec<f64>,
}

/// Condition-indicator table: one row per signal, one column per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<CiRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiRow {
    pub id: String,
    pub state: String,
    pub features: Vec<f64>,
}

/// Default error features: log rms and log kurtosis of the difference signal.
pub fn default_error_features() -> Vec<String> {
    vec!["log_diff_rms".into(), "log_diff_kurtosis".into()]
}

/// Feature values of a cycle-domain signal for the given feature names.
pub fn feature_values(values: &[f64], names: &[String]) -> Result<Vec<f64>> {
    let stats = signal_stats(values)?;
    let needs_env = names.iter().any(|n| n.starts_with("log_env") || n == "env_skewness");
    let env_stats = if needs_env {
        Some(signal_stats(&crate::sigproc::envelope_of(values))?)
    } else {
        None
    };
    names
        .iter()
        .map(|name| match name.as_str() {
            "log_diff_rms" => Ok(stats.rms.ln()),
            "log_diff_kurtosis" => Ok(stats.kurtosis.ln()),
            "diff_skewness" => Ok(stats.skewness),
            "log_env_rms" => Ok(env_stats.as_ref().unwrap().rms.ln()),
            "log_env_kurtosis" => Ok(env_stats.as_ref().unwrap().kurtosis.ln()),
            "env_skewness" => Ok(env_stats.as_ref().unwrap().skewness),
            other => Err(Error::Enhancement(format!("unknown feature '{other}'"))),
        })
        .collect()
}

/// Stretch or shrink a cycle-domain signal to emulate transmission-path
/// dispersion, keeping the total length and the energy centroid in place.
///
/// Shrink (r < 1): the signal is resampled to round(r·P) points and placed in
/// a zero array so its energy centroid stays put. Stretch (r > 1): the
/// round(P/r)-point segment around the energy centroid is interpolated back
/// to P points.
pub fn modify_width(values: &[f64], r: f64) -> Result<Vec<f64>> {
    let p = values.len();
    if !(r > 0.0) {
        return Err(Error::Enhancement("width ratio must be > 0".into()));
    }
    if r * p as f64 == 0.0 || (r * p as f64) < 4.0 {
        return Err(Error::Enhancement(format!(
            "width ratio {r} over {p} points degenerates the resampling"
        )));
    }
    if (r - 1.0).abs() < 1e-15 {
        return Ok(values.to_vec());
    }
    let energy: f64 = values.iter().map(|&v| v * v).sum();
    let centroid = if energy > 0.0 {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| i as f64 * v * v)
            .sum::<f64>()
            / energy
    } else {
        p as f64 / 2.0
    };
    let interp = |src: &[f64], pos: f64| -> f64 {
        let n = src.len();
        if pos <= 0.0 {
            return src[0];
        }
        if pos >= (n - 1) as f64 {
            return src[n - 1];
        }
        let i = pos.floor() as usize;
        let w = pos - i as f64;
        src[i] + w * (src[i + 1] - src[i])
    };

    if r < 1.0 {
        let q = (r * p as f64).round() as usize;
        let resampled: Vec<f64> = (0..q)
            .map(|j| interp(values, j as f64 * (p - 1) as f64 / (q - 1) as f64))
            .collect();
        // Place so the (scaled) centroid lands back on the original one.
        let scaled_centroid = centroid * (q - 1) as f64 / (p - 1) as f64;
        let start = ((centroid - scaled_centroid).round() as i64)
            .clamp(0, (p - q) as i64) as usize;
        let mut out = vec![0.0; p];
        out[start..start + q].copy_from_slice(&resampled);
        Ok(out)
    } else {
        let q = ((p as f64 / r).round() as usize).max(4);
        let start = ((centroid - q as f64 / 2.0).round() as i64)
            .clamp(0, (p - q) as i64) as usize;
        let seg = &values[start..start + q];
        Ok((0..p)
            .map(|j| interp(seg, j as f64 * (q - 1) as f64 / (p - 1) as f64))
            .collect())
    }
}

/// Linear fault-to-harmonics combination:
/// diff_mod = α·diff + (1 − α)·diff_healthy.
pub fn mix_fault_harmonics(
    diff: &[f64],
    diff_healthy: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    if diff.len() != diff_healthy.len() {
        return Err(Error::Enhancement(format!(
            "length mismatch: {} vs {}",
            diff.len(),
            diff_healthy.len()
        )));
    }
    Ok(diff
        .iter()
        .zip(diff_healthy.iter())
        .map(|(&d, &h)| alpha * d + (1.0 - alpha) * h)
        .collect())
}

/// `n_realizations` copies of `signal`, each with independent seeded Gaussian
/// white noise scaled by `noise_level`.
pub fn inject_noise(
    signal: &[f64],
    noise_level: f64,
    seed: u64,
    n_realizations: usize,
) -> Vec<Vec<f64>> {
    let normal = rand_distr::StandardNormal;
    (0..n_realizations)
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, rep as u64));
            signal
                .iter()
                .map(|&v| v + noise_level * <rand_distr::StandardNormal as Distribution<f64>>::sample(&normal, &mut rng))
                .collect()
        })
        .collect()
}

/// splitmix64-style seed derivation for reproducible parallel evaluation.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Score of one parameter combination with its per-state breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub params: EnhancementParams,
    /// Mean normalized absolute error over states, signals, and features.
    pub score: f64,
    /// Per-(state, feature) mean errors.
    pub breakdown: Vec<(String, Vec<f64>)>,
}

/// Full grid-evaluation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub feature_names: Vec<String>,
    pub entries: Vec<ErrorEntry>,
}

impl ErrorTable {
    /// Index of the lowest-scoring combination (first on ties).
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, e) in self.entries.iter().enumerate() {
            if e.score < self.entries[best].score {
                best = i;
            }
        }
        best
    }
}

/// Per-(signal, feature) normalized absolute error between a simulated and an
/// experimental CI table, per the normalized-error definition: the absolute
/// feature difference over the standard deviation of the experimental
/// feature across all experimental signals.
///
/// Signals are matched by health-state label. When the per-state row counts
/// agree, rows pair one-to-one after sorting by id; otherwise every simulated
/// row is scored against the experimental state mean. State means are
/// averaged within a state first and across states second, so unbalanced
/// record counts do not bias the score.
pub fn ci_error(sim: &CiTable, exp: &CiTable) -> Result<ErrorEntry> {
    if sim.feature_names != exp.feature_names {
        return Err(Error::Enhancement("CI tables have different feature columns".into()));
    }
    let nf = sim.feature_names.len();
    if exp.rows.len() < 2 {
        return Err(Error::Enhancement("need at least 2 experimental signals".into()));
    }
    // σ̂ per feature over all experimental signals.
    let mut sigma = vec![0.0; nf];
    for j in 0..nf {
        let vals: Vec<f64> = exp.rows.iter().map(|r| r.features[j]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (vals.len() - 1) as f64;
        sigma[j] = var.sqrt();
        if !(sigma[j] > 0.0) {
            return Err(Error::Enhancement(format!(
                "experimental feature '{}' has zero spread",
                exp.feature_names[j]
            )));
        }
    }

    let mut states: Vec<String> = sim.rows.iter().map(|r| r.state.clone()).collect();
    states.sort();
    states.dedup();

    let mut breakdown = Vec::with_capacity(states.len());
    let mut state_means = Vec::with_capacity(states.len());
    for state in &states {
        let mut sim_rows: Vec<&CiRow> = sim.rows.iter().filter(|r| &r.state == state).collect();
        let mut exp_rows: Vec<&CiRow> = exp.rows.iter().filter(|r| &r.state == state).collect();
        if exp_rows.is_empty() {
            return Err(Error::Enhancement(format!(
                "state '{state}' missing from the experimental dataset"
            )));
        }
        sim_rows.sort_by(|a, b| a.id.cmp(&b.id));
        exp_rows.sort_by(|a, b| a.id.cmp(&b.id));

        let mut per_feature = vec![0.0; nf];
        if sim_rows.len() == exp_rows.len() {
            for (s, e) in sim_rows.iter().zip(exp_rows.iter()) {
                for j in 0..nf {
                    per_feature[j] += (s.features[j] - e.features[j]).abs() / sigma[j];
                }
            }
        } else {
            let mut exp_mean = vec![0.0; nf];
            for e in &exp_rows {
                for j in 0..nf {
                    exp_mean[j] += e.features[j];
                }
            }
            for m in &mut exp_mean {
                *m /= exp_rows.len() as f64;
            }
            for s in &sim_rows {
                for j in 0..nf {
                    per_feature[j] += (s.features[j] - exp_mean[j]).abs() / sigma[j];
                }
            }
        }
        for v in &mut per_feature {
            *v /= sim_rows.len() as f64;
        }
        state_means.push(per_feature.iter().sum::<f64>() / nf as f64);
        breakdown.push((state.clone(), per_feature));
    }
    let score = state_means.iter().sum::<f64>() / state_means.len() as f64;
    Ok(ErrorEntry {
        params: EnhancementParams {
            width_ratio: 1.0,
            fault_to_harmonics: 1.0,
            noise_level: 0.0,
        },
        score,
        breakdown,
    })
}

/// Pointwise mean of the healthy-state difference signals.
pub fn healthy_mean_diff(records: &[DiffRecord]) -> Result<Vec<f64>> {
    let healthy: Vec<&DiffRecord> = records.iter().filter(|r| r.state == "healthy").collect();
    if healthy.is_empty() {
        return Err(Error::Enhancement("dataset has no healthy subset".into()));
    }
    let p = healthy[0].values.len();
    let mut mean = vec![0.0; p];
    for r in &healthy {
        if r.values.len() != p {
            return Err(Error::Enhancement("inconsistent signal lengths".into()));
        }
        for (m, &v) in mean.iter_mut().zip(r.values.iter()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= healthy.len() as f64;
    }
    Ok(mean)
}

/// Process experimental difference signals into a CI table: normalize by the
/// healthy-state mean rms, then extract features.
pub fn experimental_ci_table(exp: &[DiffRecord], features: &[String]) -> Result<CiTable> {
    let healthy: Vec<Vec<f64>> = exp
        .iter()
        .filter(|r| r.state == "healthy")
        .map(|r| r.values.clone())
        .collect();
    if healthy.is_empty() {
        return Err(Error::Enhancement("experimental dataset has no healthy subset".into()));
    }
    let healthy_rms = crate::sigproc::mean_rms(&healthy);
    if !(healthy_rms > 0.0) {
        return Err(Error::Enhancement("experimental healthy rms is zero".into()));
    }
    let rows = exp
        .iter()
        .map(|r| {
            let normalized: Vec<f64> = r.values.iter().map(|&v| v / healthy_rms).collect();
            Ok(CiRow {
                id: r.id.clone(),
                state: r.state.clone(),
                features: feature_values(&normalized, features)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CiTable {
        feature_names: features.to_vec(),
        rows,
    })
}

/// Enhance the simulated dataset with one parameter combination and extract
/// its CI table: width-modify, mix against the (width-modified) healthy mean,
/// normalize by the enhanced healthy-state mean rms, add noise realizations
/// in that normalized domain, then normalize once more by the noisy healthy
/// mean rms before feature extraction.
///
/// The second normalization mirrors the measured-data path, whose recorded
/// noise is already inside the signals when the healthy mean rms is taken;
/// without it the noise level would be biased low. At zero noise it divides
/// by exactly 1, so the identity combination stays an exact self-match.
pub fn enhanced_ci_table(
    sim: &[DiffRecord],
    params: &EnhancementParams,
    features: &[String],
    n_noise: usize,
    seed: u64,
) -> Result<CiTable> {
    params.validate()?;
    let healthy_mean = healthy_mean_diff(sim)?;
    let healthy_mean_mod = modify_width(&healthy_mean, params.width_ratio)?;

    let mut enhanced: Vec<(usize, Vec<f64>)> = Vec::with_capacity(sim.len());
    for (idx, rec) in sim.iter().enumerate() {
        let widened = modify_width(&rec.values, params.width_ratio)?;
        let mixed = mix_fault_harmonics(&widened, &healthy_mean_mod, params.fault_to_harmonics)?;
        enhanced.push((idx, mixed));
    }
    let healthy_signals: Vec<Vec<f64>> = enhanced
        .iter()
        .filter(|(idx, _)| sim[*idx].state == "healthy")
        .map(|(_, v)| v.clone())
        .collect();
    let healthy_rms = crate::sigproc::mean_rms(&healthy_signals);
    if !(healthy_rms > 0.0) {
        return Err(Error::Enhancement("enhanced healthy rms is zero".into()));
    }

    let mut noisy_rows: Vec<(usize, usize, Vec<f64>)> = Vec::with_capacity(sim.len() * n_noise);
    for (idx, mixed) in &enhanced {
        let normalized: Vec<f64> = mixed.iter().map(|&v| v / healthy_rms).collect();
        let noisy = inject_noise(
            &normalized,
            params.noise_level,
            mix_seed(seed, *idx as u64),
            n_noise,
        );
        for (rep, signal) in noisy.into_iter().enumerate() {
            noisy_rows.push((*idx, rep, signal));
        }
    }
    let noisy_healthy: Vec<Vec<f64>> = noisy_rows
        .iter()
        .filter(|(idx, _, _)| sim[*idx].state == "healthy")
        .map(|(_, _, v)| v.clone())
        .collect();
    let noisy_healthy_rms = crate::sigproc::mean_rms(&noisy_healthy);
    if !(noisy_healthy_rms > 0.0) {
        return Err(Error::Enhancement("noisy healthy rms is zero".into()));
    }

    let mut rows = Vec::with_capacity(noisy_rows.len());
    for (idx, rep, mut signal) in noisy_rows {
        let rec = &sim[idx];
        for v in &mut signal {
            *v /= noisy_healthy_rms;
        }
        rows.push(CiRow {
            id: if n_noise == 1 {
                rec.id.clone()
            } else {
                format!("{}#{rep}", rec.id)
            },
            state: rec.state.clone(),
            features: feature_values(&signal, features)?,
        });
    }
    Ok(CiTable {
        feature_names: features.to_vec(),
        rows,
    })
}

/// Exhaustive grid search: evaluate every combination, score against the
/// experimental CI table, and return the argmin with the full table.
/// Deterministic given the grid seed; combinations evaluate in parallel with
/// per-combination derived seeds.
pub fn tune(
    sim: &[DiffRecord],
    exp: &[DiffRecord],
    grid: &GridSpec,
    features: &[String],
) -> Result<(EnhancementParams, ErrorTable)> {
    grid.validate()?;
    if sim.iter().all(|r| r.state != "healthy") {
        return Err(Error::Enhancement("simulated dataset has no healthy subset".into()));
    }
    let exp_table = experimental_ci_table(exp, features)?;
    let combos = grid.combinations();
    let entries: Vec<ErrorEntry> = combos
        .par_iter()
        .enumerate()
        .map(|(i, params)| {
            let combo_seed = mix_seed(grid.seed, i as u64);
            let sim_table = enhanced_ci_table(sim, params, features, grid.n_noise, combo_seed)?;
            let mut entry = ci_error(&sim_table, &exp_table)?;
            entry.params = *params;
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    let table = ErrorTable {
        feature_names: features.to_vec(),
        entries,
    };
    let best = table.entries[table.best_index()].params;
    Ok((best, table))
}
