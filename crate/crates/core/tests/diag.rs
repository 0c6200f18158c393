//! Manual diagnostics (run with --ignored --nocapture).

use gearsim_core::faults::FaultSpec;
use gearsim_core::geometry::{GearWheelSpec, OperatingConditions};
use gearsim_core::pipeline::{build_model, run_model, to_recorded_signal, SimConfig};
use gearsim_core::profile_errors::Wheel;
use gearsim_core::sigproc::{
    angular_resample, difference_signal, signal_stats, synchronous_average, DifferenceConfig,
};
use num_complex::Complex;
use rustfft::FftPlanner;

fn config(fault: FaultSpec) -> SimConfig {
    SimConfig {
        pinion: GearWheelSpec::standard(17, 3.0, 25.0),
        gear: GearWheelSpec::standard(38, 3.0, 25.0),
        conditions: OperatingConditions {
            input_speed_hz: 40.0,
            output_load_nm: 10.0,
            sampling_rate_hz: 25_000.0,
            duration_s: 1.5,
        },
        din_grade: 7,
        fault,
        seed: 42,
        error_seed: None,
        n_cyc: 256,
        profile_points: 400,
        error_points_per_tooth: 64,
        structural: Default::default(),
        nr_rel_tol: 1e-8,
        nr_max_iter: 20,
        discard_output_revs: 4.0,
        sensor_noise: 0.0,
    }
}

#[test]
#[ignore]
fn inspect() {
    for fault in [
        FaultSpec::Healthy,
        FaultSpec::ToothBreakage {
            tip_loss_fraction: 0.5,
            tooth_index: 7,
            wheel: Wheel::Gear,
        },
    ] {
        let cfg = config(fault.clone());
        let model = build_model(&cfg).unwrap();
        let gmin = model.gms.total.iter().cloned().fold(f64::INFINITY, f64::min);
        let gmax = model.gms.total.iter().cloned().fold(0.0f64, f64::max);
        eprintln!("=== {:?}", fault.state_label());
        eprintln!("gms range: {gmin:.4e} .. {gmax:.4e}, period {} cycles", model.gms.period_cycles);
        let (result, wall) = run_model(&model).unwrap();
        eprintln!("wall {wall:.3}s, {} samples", result.accel_y.len());
        for (name, ch) in [
            ("accel_x", &result.accel_x),
            ("accel_y", &result.accel_y),
            ("accel_z", &result.accel_z),
        ] {
            let s = signal_stats(ch)
                .map(|s| format!("rms {:.4e} kurt {:.2}", s.rms, s.kurtosis))
                .unwrap_or_else(|_| "flat".into());
            eprintln!("{name}: {s}");
        }
        // Top 6 spectral peaks of accel_y.
        let n = result.accel_y.len();
        let mut buf: Vec<Complex<f64>> =
            result.accel_y.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let mut mags: Vec<(usize, f64)> = buf
            .iter()
            .take(n / 2)
            .enumerate()
            .skip(1)
            .map(|(k, c)| (k, c.norm()))
            .collect();
        mags.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let rate = cfg.conditions.sampling_rate_hz;
        for (k, m) in mags.iter().take(5) {
            eprintln!("  peak {:.2} Hz mag {:.3e}", *k as f64 * rate / n as f64, m);
        }
        // Magnitude at the first three mesh harmonics.
        for h in [680.0, 1360.0, 2040.0] {
            let k = (h * n as f64 / rate).round() as usize;
            let m = buf[k - 1..=k + 1].iter().map(|c| c.norm()).fold(0.0, f64::max);
            eprintln!("  mesh {h} Hz mag {m:.3e}");
        }
        // Gear-shaft difference signal.
        let rec = to_recorded_signal(&result, Wheel::Gear);
        let segs = angular_resample(&rec, 512).unwrap();
        let avg = synchronous_average(&segs).unwrap();
        let dcfg = DifferenceConfig {
            mesh_order: 38,
            max_harmonics: None,
            sideband_pairs: 2,
        };
        let diff = difference_signal(&avg, &dcfg).unwrap();
        let ds = signal_stats(&diff.values).unwrap();
        eprintln!(
            "gear diff: rms {:.4e} skew {:.2} kurt {:.2} ({} segments)",
            ds.rms, ds.skewness, ds.kurtosis, avg.n_cycles_averaged
        );
        // Where is the diff energy concentrated?
        let peak_idx = diff
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap()
            .0;
        eprintln!("diff |max| at cycle point {peak_idx}/512");
    }
}

#[test]
#[ignore]
fn seed_sweep_spectrum() {
    for seed in [1u64, 2, 3, 7, 13, 42, 99, 123, 1000, 31337] {
        let mut cfg = config(FaultSpec::Healthy);
        cfg.seed = seed;
        cfg.conditions.duration_s = 0.8;
        let (result, _) = gearsim_core::pipeline::simulate(&cfg).unwrap();
        let n = result.accel_y.len();
        let mut buf: Vec<Complex<f64>> =
            result.accel_y.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let rate = cfg.conditions.sampling_rate_hz;
        let mut best = (0usize, 0.0f64);
        for (k, c) in buf.iter().enumerate().take(n / 2).skip(1) {
            if c.norm() > best.1 {
                best = (k, c.norm());
            }
        }
        let peak_hz = best.0 as f64 * rate / n as f64;
        // second highest outside the 680 neighborhood
        let kmesh = (680.0 * n as f64 / rate).round() as usize;
        let mut second = 0.0f64;
        let mut second_hz = 0.0;
        for (k, c) in buf.iter().enumerate().take(n / 2).skip(1) {
            if (k as i64 - kmesh as i64).abs() > 3 && c.norm() > second {
                second = c.norm();
                second_hz = k as f64 * rate / n as f64;
            }
        }
        let mesh_mag = buf[kmesh - 1..=kmesh + 1].iter().map(|c| c.norm()).fold(0.0, f64::max);
        eprintln!(
            "seed {seed}: peak {peak_hz:.1} Hz, mesh/second = {:.2} (second at {second_hz:.0} Hz)",
            mesh_mag / second
        );
    }
}
