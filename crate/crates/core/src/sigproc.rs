//! Vibration signal processing shared by the simulation and measurement
//! paths: angular resampling, synchronous averaging, the difference signal,
//! envelope extraction, and condition indicators.
//!
//! Cycle-domain processing works on a fixed number of points per revolution,
//! so "frequency bins" are integer shaft orders and order removal is exact by
//! construction.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A recorded (or simulated) acceleration signal with tachometer pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedSignal {
    /// Acceleration samples (m/s²).
    pub samples: Vec<f64>,
    /// Sampling rate (samples/s).
    pub rate: f64,
    /// Once-per-revolution pulse sample indices, strictly increasing.
    pub tach: Vec<usize>,
    /// Which shaft the tach tracks (free-form label, e.g. "pinion").
    pub shaft_label: String,
}

impl RecordedSignal {
    pub fn validate(&self) -> Result<()> {
        if self.tach.len() < 2 {
            return Err(Error::Signal(
                "need at least 2 tach pulses (one full revolution)".into(),
            ));
        }
        if self.tach.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Signal("tach indices must be strictly increasing".into()));
        }
        if *self.tach.last().unwrap() >= self.samples.len() {
            return Err(Error::Signal("tach index beyond sample range".into()));
        }
        Ok(())
    }
}

/// Resample each revolution to `points_per_rev` uniformly spaced angular
/// points, with phase linear in angle between consecutive pulses.
pub fn angular_resample(signal: &RecordedSignal, points_per_rev: usize) -> Result<Vec<Vec<f64>>> {
    signal.validate()?;
    if points_per_rev < 2 {
        return Err(Error::Signal("points_per_rev must be ≥ 2".into()));
    }
    let mut segments = Vec::with_capacity(signal.tach.len() - 1);
    for w in signal.tach.windows(2) {
        let (s0, s1) = (w[0] as f64, w[1] as f64);
        let seg: Vec<f64> = (0..points_per_rev)
            .map(|j| {
                let p = s0 + (j as f64 / points_per_rev as f64) * (s1 - s0);
                let i = p.floor() as usize;
                let frac = p - i as f64;
                if i + 1 < signal.samples.len() {
                    signal.samples[i] * (1.0 - frac) + signal.samples[i + 1] * frac
                } else {
                    signal.samples[i]
                }
            })
            .collect();
        segments.push(seg);
    }
    Ok(segments)
}

/// Synchronous average over one shaft revolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncAverage {
    pub cycle_signal: Vec<f64>,
    pub points_per_rev: usize,
    pub n_cycles_averaged: usize,
}

/// Pointwise mean across revolution segments.
pub fn synchronous_average(segments: &[Vec<f64>]) -> Result<SyncAverage> {
    let n = segments.len();
    if n == 0 {
        return Err(Error::Signal("no segments to average".into()));
    }
    let p = segments[0].len();
    if segments.iter().any(|s| s.len() != p) {
        return Err(Error::Signal("segments have unequal lengths".into()));
    }
    let mut avg = vec![0.0; p];
    for seg in segments {
        for (a, &s) in avg.iter_mut().zip(seg.iter()) {
            *a += s;
        }
    }
    for a in &mut avg {
        *a /= n as f64;
    }
    Ok(SyncAverage {
        cycle_signal: avg,
        points_per_rev: p,
        n_cycles_averaged: n,
    })
}

/// Order-removal configuration for the difference signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceConfig {
    /// Fundamental mesh order on the tracked shaft (tooth count of its wheel).
    pub mesh_order: usize,
    /// Mesh harmonics to remove; `None` = all below the Nyquist order.
    pub max_harmonics: Option<usize>,
    /// Sideband pairs removed around each harmonic.
    pub sideband_pairs: usize,
}

/// Synchronous average with mesh harmonics, their close sidebands, and the
/// mean removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceSignal {
    pub values: Vec<f64>,
    pub points_per_rev: usize,
    /// Orders zeroed in the cycle spectrum (including order 0).
    pub removed_orders: Vec<usize>,
}

fn fft_forward(values: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(values.len()).process(&mut buf);
    buf
}

fn fft_inverse_real(buf: &mut [Complex<f64>]) -> Vec<f64> {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Compute the removal set for `config` at `points_per_rev`, or reject it if
/// it exceeds the Nyquist order.
pub fn removal_orders(config: &DifferenceConfig, points_per_rev: usize) -> Result<Vec<usize>> {
    let nyquist = points_per_rev / 2;
    if config.mesh_order == 0 {
        return Err(Error::Signal("mesh_order must be ≥ 1".into()));
    }
    let mut orders = vec![0usize];
    let max_k = match config.max_harmonics {
        Some(k) => k,
        None => (nyquist.saturating_sub(1)) / config.mesh_order,
    };
    for k in 1..=max_k {
        let h = k * config.mesh_order;
        let top = h + config.sideband_pairs;
        if config.max_harmonics.is_some() && 2 * top >= points_per_rev {
            return Err(Error::Signal(format!(
                "removal set reaches order {top}, at or beyond the Nyquist order {nyquist}"
            )));
        }
        if 2 * top >= points_per_rev {
            break;
        }
        for s in 0..=config.sideband_pairs {
            orders.push(h - s);
            orders.push(h + s);
        }
    }
    orders.sort_unstable();
    orders.dedup();
    Ok(orders)
}

/// Zero the configured orders in the cycle spectrum and transform back.
pub fn difference_signal(avg: &SyncAverage, config: &DifferenceConfig) -> Result<DifferenceSignal> {
    let p = avg.points_per_rev;
    if p < 4 {
        return Err(Error::Signal("points_per_rev too small".into()));
    }
    let orders = removal_orders(config, p)?;
    if let Some(&max_removed) = orders.iter().max() {
        if max_removed > 0 && p <= 2 * max_removed {
            return Err(Error::Signal(format!(
                "points_per_rev {p} must exceed twice the max removed order {max_removed}"
            )));
        }
    }
    let mut spectrum = fft_forward(&avg.cycle_signal);
    for &b in &orders {
        spectrum[b] = Complex::new(0.0, 0.0);
        if b != 0 {
            spectrum[p - b] = Complex::new(0.0, 0.0);
        }
    }
    let values = fft_inverse_real(&mut spectrum);
    Ok(DifferenceSignal {
        values,
        points_per_rev: p,
        removed_orders: orders,
    })
}

/// Envelope of the difference signal: magnitude of its analytic signal
/// (negative frequencies zeroed, positive doubled).
pub fn envelope(diff: &DifferenceSignal) -> Vec<f64> {
    envelope_of(&diff.values)
}

/// Analytic-signal magnitude of an arbitrary cycle-domain array.
pub fn envelope_of(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut spectrum = fft_forward(values);
    let half = n / 2;
    for (i, c) in spectrum.iter_mut().enumerate() {
        if i == 0 || (n % 2 == 0 && i == half) {
            // DC and Nyquist stay.
        } else if i < half || (n % 2 == 1 && i == half) {
            *c *= 2.0;
        } else {
            *c = Complex::new(0.0, 0.0);
        }
    }
    let nf = n as f64;
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    spectrum.iter().map(|c| (*c / nf).norm()).collect()
}

/// Statistical condition indicators of a difference signal and its envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionIndicatorSet {
    pub diff_rms: f64,
    pub diff_skewness: f64,
    pub diff_kurtosis: f64,
    pub env_rms: f64,
    pub env_skewness: f64,
    pub env_kurtosis: f64,
}

/// Names of the CI columns in storage order.
pub const CI_NAMES: [&str; 6] = [
    "diff_rms",
    "diff_skewness",
    "diff_kurtosis",
    "env_rms",
    "env_skewness",
    "env_kurtosis",
];

impl ConditionIndicatorSet {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.diff_rms,
            self.diff_skewness,
            self.diff_kurtosis,
            self.env_rms,
            self.env_skewness,
            self.env_kurtosis,
        ]
    }

    /// Features entering the calibration error: logs of rms and kurtosis
    /// (strictly positive quantities get equal responsibility on a log
    /// scale; skewness may be negative and stays linear).
    pub fn log_feature(&self, name: &str) -> Option<f64> {
        match name {
            "log_diff_rms" => Some(self.diff_rms.ln()),
            "log_diff_kurtosis" => Some(self.diff_kurtosis.ln()),
            "log_env_rms" => Some(self.env_rms.ln()),
            "log_env_kurtosis" => Some(self.env_kurtosis.ln()),
            "diff_skewness" => Some(self.diff_skewness),
            "env_skewness" => Some(self.env_skewness),
            _ => None,
        }
    }
}

/// rms, skewness, and kurtosis of a signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalStats {
    /// √mean(x²), computed on the raw (not mean-subtracted) signal.
    pub rms: f64,
    pub skewness: f64,
    /// Non-excess kurtosis: Gaussian → 3.
    pub kurtosis: f64,
}

/// Raw rms plus standardized central moments of a signal.
pub fn signal_stats(x: &[f64]) -> Result<SignalStats> {
    if x.is_empty() {
        return Err(Error::Signal("empty signal has no statistics".into()));
    }
    let (_, skewness, kurtosis) = moments(x)?;
    let rms = (x.iter().map(|&v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    Ok(SignalStats {
        rms,
        skewness,
        kurtosis,
    })
}

fn moments(x: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &v in x {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 <= 0.0 {
        return Err(Error::Signal("zero-variance input has no standardized moments".into()));
    }
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    Ok((m2, skew, kurt))
}

/// rms (raw), skewness and kurtosis (standardized central moments,
/// non-excess: Gaussian → 3) of the difference signal and its envelope.
pub fn condition_indicators(
    diff: &DifferenceSignal,
    env: &[f64],
) -> Result<ConditionIndicatorSet> {
    if diff.points_per_rev < 8 {
        return Err(Error::Signal("need at least 8 points per revolution".into()));
    }
    let rms = |x: &[f64]| (x.iter().map(|&v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    let (_, d_skew, d_kurt) = moments(&diff.values)?;
    let (_, e_skew, e_kurt) = moments(env)?;
    Ok(ConditionIndicatorSet {
        diff_rms: rms(&diff.values),
        diff_skewness: d_skew,
        diff_kurtosis: d_kurt,
        env_rms: rms(env),
        env_skewness: e_skew,
        env_kurtosis: e_kurt,
    })
}

/// Mean rms over a set of cycle-domain signals.
pub fn mean_rms(signals: &[Vec<f64>]) -> f64 {
    if signals.is_empty() {
        return 0.0;
    }
    signals
        .iter()
        .map(|s| (s.iter().map(|&v| v * v).sum::<f64>() / s.len() as f64).sqrt())
        .sum::<f64>()
        / signals.len() as f64
}

/// Divide every signal by the scalar mean rms of its source's healthy state.
pub fn normalize_by_healthy(signals: &mut [Vec<f64>], healthy_rms_mean: f64) -> Result<()> {
    if !(healthy_rms_mean > 0.0) {
        return Err(Error::Signal("healthy mean rms must be > 0".into()));
    }
    for s in signals {
        for v in s {
            *v /= healthy_rms_mean;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sine_cycle(p: usize, order: f64, amp: f64, phase: f64) -> Vec<f64> {
        (0..p)
            .map(|i| amp * (std::f64::consts::TAU * order * i as f64 / p as f64 + phase).sin())
            .collect()
    }

    #[test]
    fn constant_speed_resampling_is_identity() {
        // Pulses every 100 samples, 100 points per rev: the angular grid hits
        // the time grid exactly.
        let samples: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin()).collect();
        let sig = RecordedSignal {
            samples: samples.clone(),
            rate: 1000.0,
            tach: vec![0, 100, 200, 300, 400],
            shaft_label: "pinion".into(),
        };
        let segs = angular_resample(&sig, 100).unwrap();
        assert_eq!(segs.len(), 4);
        for (k, seg) in segs.iter().enumerate() {
            for (j, &v) in seg.iter().enumerate() {
                assert_relative_eq!(v, samples[100 * k + j], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn two_pulses_one_cycle() {
        let sig = RecordedSignal {
            samples: (0..32).map(|i| i as f64).collect(),
            rate: 32.0,
            tach: vec![4, 20],
            shaft_label: "pinion".into(),
        };
        let segs = angular_resample(&sig, 8).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].len(), 8);
    }

    #[test]
    fn too_few_pulses_rejected() {
        let sig = RecordedSignal {
            samples: vec![0.0; 100],
            rate: 100.0,
            tach: vec![10],
            shaft_label: "pinion".into(),
        };
        assert!(angular_resample(&sig, 16).is_err());
    }

    /// Order-3 tone under 5% speed wobble: after angular resampling at least
    /// 99% of the energy lands in order 3.
    #[test]
    fn wobble_energy_concentrates_in_order() {
        let rate = 20_000.0;
        let base_speed = 20.0; // rev/s
        let n = 40_000;
        let mut phase = 0.0;
        let mut samples = Vec::with_capacity(n);
        let mut angles = Vec::with_capacity(n);
        for i in 0..n {
            let t = i as f64 / rate;
            let speed = base_speed * (1.0 + 0.05 * (2.0 * std::f64::consts::TAU * t).sin());
            phase += std::f64::consts::TAU * speed / rate;
            angles.push(phase);
            samples.push((3.0 * phase).sin());
        }
        let mut tach = Vec::new();
        let mut next = 0.0;
        for (i, &a) in angles.iter().enumerate() {
            if a >= next {
                tach.push(i);
                next += std::f64::consts::TAU;
            }
        }
        let sig = RecordedSignal {
            samples,
            rate,
            tach,
            shaft_label: "shaft".into(),
        };
        let p = 256;
        let segs = angular_resample(&sig, p).unwrap();
        assert!(segs.len() > 10);
        // Energy split in the order spectrum of each resampled revolution.
        let mut in_order = 0.0;
        let mut total = 0.0;
        for seg in &segs {
            let spec = fft_forward(seg);
            for (k, c) in spec.iter().enumerate().take(p / 2 + 1).skip(1) {
                let e = c.norm_sqr();
                total += e;
                if k == 3 {
                    in_order += e;
                }
            }
        }
        assert!(
            in_order / total >= 0.99,
            "order-3 energy fraction {:.4}",
            in_order / total
        );
    }

    #[test]
    fn identical_segments_average_to_themselves() {
        let seg = sine_cycle(64, 2.0, 1.0, 0.3);
        let avg = synchronous_average(&[seg.clone(), seg.clone(), seg.clone()]).unwrap();
        assert_eq!(avg.n_cycles_averaged, 3);
        for (a, b) in avg.cycle_signal.iter().zip(seg.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn averaging_attenuates_noise_by_sqrt_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = 512;
        let n = 100;
        let segments: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..p)
                    .map(|_| {
                        let u: f64 = rng.random_range(-1.0f64..1.0);
                        u * (3.0f64).sqrt() // unit variance
                    })
                    .collect()
            })
            .collect();
        let input_rms = mean_rms(&segments);
        let avg = synchronous_average(&segments).unwrap();
        let out_rms = (avg.cycle_signal.iter().map(|&v| v * v).sum::<f64>() / p as f64).sqrt();
        let expected = input_rms / (n as f64).sqrt();
        assert!(
            (out_rms / expected - 1.0).abs() < 0.2,
            "attenuation off: {out_rms:.4} vs {expected:.4}"
        );
    }

    #[test]
    fn averaging_improves_correlation_with_clean_period() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = 128;
        let clean = sine_cycle(p, 5.0, 1.0, 0.0);
        let segments: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                clean
                    .iter()
                    .map(|&c| c + rng.random_range(-1.5..1.5))
                    .collect()
            })
            .collect();
        let corr = |x: &[f64]| {
            let num: f64 = x.iter().zip(clean.iter()).map(|(a, b)| a * b).sum();
            let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nc: f64 = clean.iter().map(|v| v * v).sum::<f64>().sqrt();
            num / (nx * nc)
        };
        let avg = synchronous_average(&segments).unwrap();
        let avg_corr = corr(&avg.cycle_signal);
        for seg in &segments {
            assert!(avg_corr > corr(seg));
        }
    }

    #[test]
    fn sync_average_is_linear() {
        let xs: Vec<Vec<f64>> = (0..4).map(|k| sine_cycle(64, 2.0, 1.0, k as f64)).collect();
        let ys: Vec<Vec<f64>> = (0..4).map(|k| sine_cycle(64, 5.0, 0.5, k as f64)).collect();
        let (a, b) = (2.5, -1.3);
        let combo: Vec<Vec<f64>> = xs
            .iter()
            .zip(ys.iter())
            .map(|(x, y)| x.iter().zip(y.iter()).map(|(xi, yi)| a * xi + b * yi).collect())
            .collect();
        let sa_combo = synchronous_average(&combo).unwrap();
        let sa_x = synchronous_average(&xs).unwrap();
        let sa_y = synchronous_average(&ys).unwrap();
        for i in 0..64 {
            assert_relative_eq!(
                sa_combo.cycle_signal[i],
                a * sa_x.cycle_signal[i] + b * sa_y.cycle_signal[i],
                max_relative = 1e-12,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn mesh_harmonic_is_removed_exactly() {
        let p = 256;
        let z = 17;
        let avg = SyncAverage {
            cycle_signal: sine_cycle(p, z as f64, 2.0, 0.7),
            points_per_rev: p,
            n_cycles_averaged: 1,
        };
        let cfg = DifferenceConfig {
            mesh_order: z,
            max_harmonics: None,
            sideband_pairs: 2,
        };
        let diff = difference_signal(&avg, &cfg).unwrap();
        let max_abs = diff.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(max_abs < 1e-10 * 2.0, "residual {max_abs:.3e}");
    }

    #[test]
    fn spectral_nulls_exact_and_others_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = 512;
        let avg = SyncAverage {
            cycle_signal: (0..p).map(|_| rng.random_range(-1.0..1.0)).collect(),
            points_per_rev: p,
            n_cycles_averaged: 1,
        };
        let cfg = DifferenceConfig {
            mesh_order: 38,
            max_harmonics: None,
            sideband_pairs: 2,
        };
        let diff = difference_signal(&avg, &cfg).unwrap();
        let before = fft_forward(&avg.cycle_signal);
        let after = fft_forward(&diff.values);
        let scale = avg
            .cycle_signal
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        for k in 0..p {
            let order = k.min(p - k);
            if diff.removed_orders.contains(&order) {
                assert!(after[k].norm() <= 1e-12 * scale * p as f64);
            } else {
                assert!(
                    (after[k] - before[k]).norm() <= 1e-12 * before[k].norm().max(scale),
                    "bin {k} changed"
                );
            }
        }
        // Parseval: removed energy accounts for the full difference.
        let energy = |x: &[f64]| x.iter().map(|&v| v * v).sum::<f64>();
        let removed_time: f64 = avg
            .cycle_signal
            .iter()
            .zip(diff.values.iter())
            .map(|(&a, &d)| (a - d) * (a - d))
            .sum();
        let removed_bins: f64 = (0..p)
            .filter(|&k| diff.removed_orders.contains(&k.min(p - k)))
            .map(|k| before[k].norm_sqr())
            .sum::<f64>()
            / p as f64;
        assert!(
            (removed_time - removed_bins).abs() <= 1e-10 * energy(&avg.cycle_signal),
            "Parseval violated: {removed_time:.6e} vs {removed_bins:.6e}"
        );
    }

    #[test]
    fn impulse_train_survives_removal() {
        let p = 512;
        let mut cycle = vec![0.0; p];
        cycle[100] = 1.0;
        let avg = SyncAverage {
            cycle_signal: cycle.clone(),
            points_per_rev: p,
            n_cycles_averaged: 1,
        };
        let cfg = DifferenceConfig {
            mesh_order: 38,
            max_harmonics: None,
            sideband_pairs: 2,
        };
        let diff = difference_signal(&avg, &cfg).unwrap();
        // An impulse spreads its energy evenly over all bins; removing a
        // fraction of bins removes exactly that fraction of energy.
        let removed_bins = diff
            .removed_orders
            .iter()
            .map(|&o| if o == 0 || 2 * o == p { 1 } else { 2 })
            .sum::<usize>();
        let energy_in = 1.0;
        let energy_out: f64 = diff.values.iter().map(|&v| v * v).sum();
        let expected = energy_in * (1.0 - removed_bins as f64 / p as f64);
        assert_relative_eq!(energy_out, expected, max_relative = 1e-9);
        // Impulse still dominates its neighborhood.
        let peak = diff.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert_relative_eq!(diff.values[100].abs(), peak, max_relative = 1e-12);
    }

    #[test]
    fn empty_removal_set_subtracts_mean_only() {
        let p = 128;
        let values: Vec<f64> = (0..p).map(|i| 1.0 + (i as f64 * 0.1).sin()).collect();
        let avg = SyncAverage {
            cycle_signal: values.clone(),
            points_per_rev: p,
            n_cycles_averaged: 1,
        };
        let cfg = DifferenceConfig {
            mesh_order: 17,
            max_harmonics: Some(0),
            sideband_pairs: 0,
        };
        let diff = difference_signal(&avg, &cfg).unwrap();
        let mean = values.iter().sum::<f64>() / p as f64;
        for (d, v) in diff.values.iter().zip(values.iter()) {
            assert_relative_eq!(*d, v - mean, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn removal_beyond_nyquist_rejected() {
        let avg = SyncAverage {
            cycle_signal: vec![0.0; 64],
            points_per_rev: 64,
            n_cycles_averaged: 1,
        };
        let cfg = DifferenceConfig {
            mesh_order: 17,
            max_harmonics: Some(3),
            sideband_pairs: 2,
        };
        assert!(difference_signal(&avg, &cfg).is_err());
    }

    #[test]
    fn envelope_of_pure_sine_is_flat() {
        let p = 256;
        let diff = DifferenceSignal {
            values: sine_cycle(p, 8.0, 2.5, 0.0),
            points_per_rev: p,
            removed_orders: vec![],
        };
        let env = envelope(&diff);
        for &e in &env[p / 8..7 * p / 8] {
            assert!((e - 2.5).abs() / 2.5 < 0.01, "envelope {e}");
        }
        // Envelope dominates the signal pointwise (small tolerance for the
        // discrete Hilbert transform).
        for (e, v) in env.iter().zip(diff.values.iter()) {
            assert!(*e >= v.abs() - 1e-6);
        }
    }

    #[test]
    fn envelope_recovers_amplitude_modulation() {
        let p = 1024;
        let carrier = 50.0;
        let values: Vec<f64> = (0..p)
            .map(|i| {
                let s = i as f64 / p as f64;
                let am = 1.0 + 0.5 * (std::f64::consts::TAU * 2.0 * s).cos();
                am * (std::f64::consts::TAU * carrier * s).sin()
            })
            .collect();
        let diff = DifferenceSignal {
            values,
            points_per_rev: p,
            removed_orders: vec![],
        };
        let env = envelope(&diff);
        let mut err = 0.0;
        let mut count = 0;
        for i in p / 8..7 * p / 8 {
            let s = i as f64 / p as f64;
            let expected = 1.0 + 0.5 * (std::f64::consts::TAU * 2.0 * s).cos();
            err += (env[i] - expected) * (env[i] - expected);
            count += 1;
        }
        let rms_err = (err / count as f64).sqrt();
        assert!(rms_err < 0.02 * 1.0, "AM recovery error {rms_err:.4}");
    }

    #[test]
    fn sine_condition_indicators_closed_form() {
        let p = 4096;
        let diff = DifferenceSignal {
            values: sine_cycle(p, 5.0, 1.0, 0.0),
            points_per_rev: p,
            removed_orders: vec![],
        };
        let env = envelope(&diff);
        let ci = condition_indicators(&diff, &env).unwrap();
        assert_relative_eq!(ci.diff_rms, 1.0 / 2.0f64.sqrt(), max_relative = 1e-9);
        assert_relative_eq!(ci.diff_kurtosis, 1.5, max_relative = 1e-9);
        assert!(ci.diff_skewness.abs() < 1e-9);
    }

    #[test]
    fn gaussian_kurtosis_approaches_three() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p = 200_000;
        let values: Vec<f64> = (0..p)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let (_, _, kurt) = moments(&values).unwrap();
        assert!((kurt - 3.0).abs() < 0.2, "kurtosis {kurt}");
    }

    #[test]
    fn scaling_moves_rms_but_not_shape_moments() {
        let p = 512;
        let mut values = sine_cycle(p, 3.0, 1.0, 0.2);
        for (i, v) in values.iter_mut().enumerate() {
            *v += 0.3 * ((7.3 * i as f64).sin()).powi(2);
        }
        let diff = DifferenceSignal {
            values: values.clone(),
            points_per_rev: p,
            removed_orders: vec![],
        };
        let env = envelope(&diff);
        let ci1 = condition_indicators(&diff, &env).unwrap();
        let scaled = DifferenceSignal {
            values: values.iter().map(|&v| 3.7 * v).collect(),
            points_per_rev: p,
            removed_orders: vec![],
        };
        let env2 = envelope(&scaled);
        let ci2 = condition_indicators(&scaled, &env2).unwrap();
        assert_relative_eq!(ci2.diff_rms, 3.7 * ci1.diff_rms, max_relative = 1e-12);
        assert_relative_eq!(ci2.diff_skewness, ci1.diff_skewness, max_relative = 1e-9);
        assert_relative_eq!(ci2.diff_kurtosis, ci1.diff_kurtosis, max_relative = 1e-9);
    }

    #[test]
    fn zero_variance_is_an_error() {
        let diff = DifferenceSignal {
            values: vec![1.0; 64],
            points_per_rev: 64,
            removed_orders: vec![],
        };
        let env = vec![1.0; 64];
        assert!(condition_indicators(&diff, &env).is_err());
    }

    #[test]
    fn healthy_normalization_properties() {
        let mut signals: Vec<Vec<f64>> =
            (1..=4).map(|k| sine_cycle(128, 2.0, k as f64, 0.0)).collect();
        let healthy_mean = mean_rms(&signals[..2].to_vec());
        let ratio_before = {
            let r = |s: &Vec<f64>| (s.iter().map(|v| v * v).sum::<f64>() / 128.0).sqrt();
            r(&signals[3]) / r(&signals[0])
        };
        normalize_by_healthy(&mut signals, healthy_mean).unwrap();
        let r = |s: &Vec<f64>| (s.iter().map(|v| v * v).sum::<f64>() / 128.0).sqrt();
        let mean_after = (r(&signals[0]) + r(&signals[1])) / 2.0;
        assert_relative_eq!(mean_after, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r(&signals[3]) / r(&signals[0]), ratio_before, max_relative = 1e-12);
        assert!(normalize_by_healthy(&mut signals, 0.0).is_err());
    }
}
