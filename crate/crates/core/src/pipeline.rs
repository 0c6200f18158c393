//! End-to-end simulation pipeline: configuration in, vibration signal out.
//!
//! Builds the tooth geometry, surface errors, fault geometry, mesh stiffness,
//! and system matrices, then integrates the equations of motion and emits the
//! casing acceleration with shaft angles and tachometer pulses.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_damping, assemble_external_forces, assemble_mass, assemble_static_forces,
    assemble_stiffness_cycle_fast, assemble_structural_stiffness, geom_coefficients, DofLayout,
    GeomCoefficients, InertiaConfig, StructuralParams, SystemMatrices,
};
use crate::enhancement::mix_seed;
use crate::error::{Error, Result};
use crate::faults::{apply_fault, FaultSpec, GearPairGeometry};
use crate::geometry::{
    build_tooth_profile, contact_properties, ContactProperties, GearWheelSpec,
    OperatingConditions,
};
use crate::profile_errors::{generate_profile_errors, ProfileErrorField};
use crate::solver::{
    march, precompute_cycle_jacobians, ErrorExcitation, JacobianMode, SolverSettings,
    SolverSystem,
};
use crate::stiffness::{gms_over_cycle, GmsCurve};

fn default_n_cyc() -> usize {
    512
}
fn default_profile_points() -> usize {
    1000
}
fn default_error_points() -> usize {
    128
}
fn default_nr_rel_tol() -> f64 {
    1e-8
}
fn default_nr_max_iter() -> usize {
    20
}
fn default_discard() -> f64 {
    1.0
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub pinion: GearWheelSpec,
    pub gear: GearWheelSpec,
    pub conditions: OperatingConditions,
    /// DIN 3962 surface quality grade (5..=9).
    pub din_grade: u8,
    pub fault: FaultSpec,
    /// Master seed: drives the profile errors (unless `error_seed` is set)
    /// and the sensor noise.
    pub seed: u64,
    /// Shared profile-error seed for batches with a common error field.
    #[serde(default)]
    pub error_seed: Option<u64>,
    #[serde(default = "default_n_cyc")]
    pub n_cyc: usize,
    #[serde(default = "default_profile_points")]
    pub profile_points: usize,
    #[serde(default = "default_error_points")]
    pub error_points_per_tooth: usize,
    #[serde(default)]
    pub structural: StructuralParams,
    #[serde(default = "default_nr_rel_tol")]
    pub nr_rel_tol: f64,
    #[serde(default = "default_nr_max_iter")]
    pub nr_max_iter: usize,
    /// Start-up transient discarded from the output, in output-shaft
    /// revolutions.
    #[serde(default = "default_discard")]
    pub discard_output_revs: f64,
    /// Accelerometer noise σ (m/s²) added to the emitted channels.
    #[serde(default)]
    pub sensor_noise: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.pinion.validate()?;
        self.gear.validate()?;
        self.conditions.validate(self.pinion.tooth_count)?;
        self.fault.validate(&self.pinion, &self.gear)?;
        crate::profile_errors::din_tolerance_um(self.din_grade)?;
        if self.sensor_noise < 0.0 {
            return Err(Error::InvalidConfig("sensor_noise must be ≥ 0".into()));
        }
        let f_out = self.conditions.input_speed_hz * self.pinion.tooth_count as f64
            / self.gear.tooth_count as f64;
        let needed = (self.discard_output_revs + 2.0) / f_out;
        if self.conditions.duration_s < needed {
            return Err(Error::InvalidConfig(format!(
                "duration {} s too short: needs ≥ {:.3} s for {} discarded + 2 output revolutions",
                self.conditions.duration_s, needed, self.discard_output_revs
            )));
        }
        Ok(())
    }

    /// Seed used for the manufacturing profile errors.
    pub fn effective_error_seed(&self) -> u64 {
        self.error_seed.unwrap_or(self.seed)
    }

    /// Health-state label of this run.
    pub fn state_label(&self) -> String {
        self.fault.state_label()
    }
}

/// Assembled model ready to integrate.
pub struct Model {
    pub config: SimConfig,
    pub geometry: GearPairGeometry,
    pub errors: ProfileErrorField,
    pub props: ContactProperties,
    pub gms: GmsCurve,
    pub geom: GeomCoefficients,
    pub inertias: InertiaConfig,
    pub matrices: SystemMatrices,
    pub system: SolverSystem,
}

/// Stages 1–6: geometry, errors, fault, mesh stiffness, system matrices.
pub fn build_model(config: &SimConfig) -> Result<Model> {
    config.validate()?;
    let pinion_profile = build_tooth_profile(&config.pinion, config.profile_points)?;
    let gear_profile = build_tooth_profile(&config.gear, config.profile_points)?;
    let errors = generate_profile_errors(
        &config.pinion,
        &config.gear,
        config.din_grade,
        config.effective_error_seed(),
        config.error_points_per_tooth,
    )?;
    let geometry = apply_fault(
        &config.pinion,
        &config.gear,
        &pinion_profile,
        &gear_profile,
        &errors,
        &config.fault,
    )?;
    let props = contact_properties(&config.pinion, &config.gear)?;
    let gms = gms_over_cycle(&geometry, &props, config.n_cyc)?;

    let geom = geom_coefficients(&geometry, config.structural.edge_relief);
    let inertias = InertiaConfig::from_pair(&geometry, &config.structural);
    let mass = assemble_mass(&inertias)?;
    let k_const = assemble_structural_stiffness(&config.structural);
    let k_cycle = assemble_stiffness_cycle_fast(&gms, &geom, &k_const);
    let mut k_mean = DMatrix::zeros(crate::assembly::NDOF, crate::assembly::NDOF);
    for k in &k_cycle {
        k_mean += k;
    }
    k_mean /= k_cycle.len() as f64;
    let damping = assemble_damping(
        &mass,
        &k_mean,
        config.structural.rayleigh_a,
        config.structural.rayleigh_b,
    )?;
    let f_ex = assemble_external_forces(
        &geometry,
        &config.conditions,
        &inertias,
        &geom,
        &gms,
        false,
        config.structural.gravity,
    );
    let f_static = assemble_static_forces(
        &geometry,
        &config.conditions,
        &inertias,
        config.structural.gravity,
    );

    let mesh_matrix = geom
        .geom_z_dep
        .component_mul(&geom.expectation_matrix)
        + &geom.geom_z_indep;
    let excitation = ErrorExcitation {
        projection: geom.projection.clone(),
        mean_density: geom.mean_density(),
        contact_ratio: props.contact_ratio,
        pinion_traces: geometry
            .pinion
            .teeth
            .iter()
            .map(|t| t.deviation_um.clone())
            .collect(),
        gear_traces: geometry
            .gear
            .teeth
            .iter()
            .map(|t| t.deviation_um.clone())
            .collect(),
    };
    let system = SolverSystem {
        mass: mass.clone(),
        damping: damping.clone(),
        k_const: k_const.clone(),
        mesh_matrix,
        gms_total: gms.total.clone(),
        pair_samples: gms.pairs.clone(),
        n_cyc: gms.n_cyc,
        period_cycles: gms.period_cycles,
        mesh_freq_hz: config.conditions.mesh_frequency_hz(config.pinion.tooth_count),
        f_static,
        excitation: Some(excitation),
    };
    let matrices = SystemMatrices {
        mass,
        damping,
        k_const,
        k_cycle,
        f_ex,
    };
    Ok(Model {
        config: config.clone(),
        geometry,
        errors,
        props,
        gms,
        geom,
        inertias,
        matrices,
        system,
    })
}

/// Integrated vibration signal with shaft phase information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    /// Sample times (s), transient discarded.
    pub time: Vec<f64>,
    /// Casing accelerations (m/s²).
    pub accel_x: Vec<f64>,
    pub accel_y: Vec<f64>,
    pub accel_z: Vec<f64>,
    /// Total pinion/gear shaft angles (rad), nominal rotation plus torsional
    /// vibration.
    pub pinion_angle: Vec<f64>,
    pub gear_angle: Vec<f64>,
    /// Once-per-revolution pulses of the input (pinion) shaft, as indices
    /// into the emitted arrays.
    pub tach_pulses: Vec<usize>,
    pub metadata: RunMetadata,
}

/// Reproducibility envelope of a run: everything needed to regenerate the
/// signal bit-identically, plus deterministic solver statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: SimConfig,
    pub seed: u64,
    /// NR iterations histogram: entry i = number of steps that used i
    /// iterations.
    pub iteration_histogram: Vec<u64>,
    pub discarded_samples: usize,
    pub mesh_frequency_hz: f64,
    /// Output (gear) shaft frequency, Hz.
    pub output_speed_hz: f64,
}

/// Stages 7–8: integrate and emit the signal. Returns the result and the
/// integration wall time in seconds (reported separately so artifacts stay
/// byte-reproducible).
pub fn run_model(model: &Model) -> Result<(SimulationResult, f64)> {
    let config = &model.config;
    let rate = config.conditions.sampling_rate_hz;
    let dt = 1.0 / rate;
    let mut settings = SolverSettings::with_dt(dt);
    settings.nr_rel_tol = config.nr_rel_tol;
    settings.nr_max_iter = config.nr_max_iter;
    settings.discard_output_revs = config.discard_output_revs;

    let cache = precompute_cycle_jacobians(&model.system, &settings)?;
    let n_steps = (config.conditions.duration_s * rate).ceil() as usize;
    use DofLayout as D;
    let record = [
        D::CASING_X,
        D::CASING_Y,
        D::CASING_Z,
        D::PINION_THETA,
        D::GEAR_THETA,
    ];
    let out = march(
        &model.system,
        &settings,
        &JacobianMode::Cached(&cache),
        n_steps,
        &record,
    )?;

    let f_in = config.conditions.input_speed_hz;
    let f_out = f_in * config.pinion.tooth_count as f64 / config.gear.tooth_count as f64;
    let t_discard = config.discard_output_revs / f_out;
    let skip = out.time.iter().take_while(|&&t| t < t_discard).count();

    let n_keep = out.time.len() - skip;
    let mut result = SimulationResult {
        time: out.time[skip..].to_vec(),
        accel_x: out.accelerations[0][skip..].to_vec(),
        accel_y: out.accelerations[1][skip..].to_vec(),
        accel_z: out.accelerations[2][skip..].to_vec(),
        pinion_angle: Vec::with_capacity(n_keep),
        gear_angle: Vec::with_capacity(n_keep),
        tach_pulses: Vec::new(),
        metadata: RunMetadata {
            config: config.clone(),
            seed: config.seed,
            iteration_histogram: out.iteration_histogram.clone(),
            discarded_samples: skip,
            mesh_frequency_hz: config.conditions.mesh_frequency_hz(config.pinion.tooth_count),
            output_speed_hz: f_out,
        },
    };
    let tau = std::f64::consts::TAU;
    for (i, &t) in out.time[skip..].iter().enumerate() {
        let idx = skip + i;
        result
            .pinion_angle
            .push(tau * f_in * t + out.displacements[3][idx]);
        result
            .gear_angle
            .push(tau * f_out * t + out.displacements[4][idx]);
    }
    // Once-per-revolution pulses relative to the first emitted sample's
    // revolution count.
    let start_rev = (result.pinion_angle[0] / tau).ceil();
    let mut next = start_rev * tau;
    for i in 1..result.pinion_angle.len() {
        while result.pinion_angle[i] >= next {
            result.tach_pulses.push(i);
            next += tau;
        }
    }

    // Accelerometer noise, seeded per channel.
    if config.sensor_noise > 0.0 {
        let normal = rand_distr::StandardNormal;
        for (c, channel) in [
            &mut result.accel_x,
            &mut result.accel_y,
            &mut result.accel_z,
        ]
        .into_iter()
        .enumerate()
        {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 0xACCE_1000 + c as u64));
            for v in channel.iter_mut() {
                *v += config.sensor_noise
                    * <rand_distr::StandardNormal as Distribution<f64>>::sample(
                        &normal, &mut rng,
                    );
            }
        }
    }
    Ok((result, out.wall_seconds))
}

/// Build and run in one call.
pub fn simulate(config: &SimConfig) -> Result<(SimulationResult, f64)> {
    let model = build_model(config)?;
    run_model(&model)
}

/// Convert a simulation result into a recorded signal for the processing
/// pipeline, tracking either the pinion or the gear shaft.
pub fn to_recorded_signal(
    result: &SimulationResult,
    shaft: crate::profile_errors::Wheel,
) -> crate::sigproc::RecordedSignal {
    use crate::profile_errors::Wheel;
    let tau = std::f64::consts::TAU;
    let (angles, label) = match shaft {
        Wheel::Pinion => (&result.pinion_angle, "pinion"),
        Wheel::Gear => (&result.gear_angle, "gear"),
    };
    let mut tach = Vec::new();
    let start_rev = (angles[0] / tau).ceil();
    let mut next = start_rev * tau;
    for i in 1..angles.len() {
        while angles[i] >= next {
            tach.push(i);
            next += tau;
        }
    }
    crate::sigproc::RecordedSignal {
        samples: result.accel_y.clone(),
        rate: result.metadata.config.conditions.sampling_rate_hz,
        tach,
        shaft_label: label.into(),
    }
}

/// Content hash of a profile-error field (for shared-error batch manifests).
pub fn error_field_hash(errors: &ProfileErrorField) -> u64 {
    // FNV-1a over the raw trace bits; stable across runs and platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: f64| {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
    };
    for wheel in [&errors.pinion, &errors.gear] {
        for trace in wheel {
            for &v in trace {
                eat(v);
            }
        }
    }
    h
}
