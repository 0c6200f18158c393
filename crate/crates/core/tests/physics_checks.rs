//! Cross-module physics checks on the full simulated signal: spectral
//! content, fault signatures, and run-to-run determinism of the processing
//! chain.

use gearsim_core::enhancement::mix_seed;
use gearsim_core::faults::FaultSpec;
use gearsim_core::geometry::{GearWheelSpec, OperatingConditions};
use gearsim_core::pipeline::{simulate, to_recorded_signal, SimConfig};
use gearsim_core::profile_errors::Wheel;
use gearsim_core::sigproc::{
    angular_resample, condition_indicators, difference_signal, envelope, synchronous_average,
    DifferenceConfig,
};
use num_complex::Complex;
use rustfft::FftPlanner;

fn table2_breakage_config(seed: u64, duration_s: f64, fault: FaultSpec) -> SimConfig {
    SimConfig {
        pinion: GearWheelSpec::standard(17, 3.0, 25.0),
        gear: GearWheelSpec::standard(38, 3.0, 25.0),
        conditions: OperatingConditions {
            input_speed_hz: 40.0,
            output_load_nm: 10.0,
            sampling_rate_hz: 25_000.0,
            duration_s,
        },
        din_grade: 7,
        fault,
        seed,
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

fn spectrum_peak_hz(samples: &[f64], rate: f64) -> f64 {
    let n = samples.len();
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut best = (1, 0.0);
    for (k, c) in buf.iter().enumerate().take(n / 2).skip(1) {
        let mag = c.norm();
        if mag > best.1 {
            best = (k, mag);
        }
    }
    best.0 as f64 * rate / n as f64
}

/// Difference-signal kurtosis on the gear shaft for one simulation.
fn gear_diff_kurtosis(config: &SimConfig) -> f64 {
    let (result, _) = simulate(config).unwrap();
    let rec = to_recorded_signal(&result, Wheel::Gear);
    let segments = angular_resample(&rec, 512).unwrap();
    let avg = synchronous_average(&segments).unwrap();
    let cfg = DifferenceConfig {
        mesh_order: 38,
        max_harmonics: None,
        sideband_pairs: 2,
    };
    let diff = difference_signal(&avg, &cfg).unwrap();
    let env = envelope(&diff);
    condition_indicators(&diff, &env).unwrap().diff_kurtosis
}

#[test]
fn healthy_spectrum_dominated_by_mesh_frequency() {
    let config = table2_breakage_config(42, 0.6, FaultSpec::Healthy);
    let (result, _) = simulate(&config).unwrap();
    let peak = spectrum_peak_hz(&result.accel_y, config.conditions.sampling_rate_hz);
    let bin = config.conditions.sampling_rate_hz / result.accel_y.len() as f64;
    assert!(
        (peak - 680.0).abs() <= bin + 1e-9,
        "dominant line at {peak:.2} Hz, expected 680 ± {bin:.3}"
    );
}

#[test]
fn breakage_raises_difference_kurtosis() {
    let healthy: Vec<f64> = (0..4)
        .map(|i| gear_diff_kurtosis(&table2_breakage_config(100 + i, 0.8, FaultSpec::Healthy)))
        .collect();
    let faulted = gear_diff_kurtosis(&table2_breakage_config(
        200,
        0.8,
        FaultSpec::ToothBreakage {
            tip_loss_fraction: 0.5,
            tooth_index: 7,
            wheel: Wheel::Gear,
        },
    ));
    let mean = healthy.iter().sum::<f64>() / healthy.len() as f64;
    let sd = (healthy.iter().map(|k| (k - mean) * (k - mean)).sum::<f64>()
        / (healthy.len() - 1) as f64)
        .sqrt();
    eprintln!("healthy kurtosis {healthy:?} (mean {mean:.3}, sd {sd:.3}); faulted {faulted:.3}");
    assert!(
        faulted > mean + 3.0 * sd,
        "faulted kurtosis {faulted:.3} not above healthy mean {mean:.3} + 3σ ({sd:.3})"
    );
}

#[test]
fn processing_chain_is_deterministic() {
    let config = table2_breakage_config(mix_seed(7, 1), 0.5, FaultSpec::Healthy);
    let a = gear_diff_kurtosis(&config);
    let b = gear_diff_kurtosis(&config);
    assert_eq!(a.to_bits(), b.to_bits());
}
