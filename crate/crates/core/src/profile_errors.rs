//! Manufacturing tooth-flank deviations graded per DIN 3962.
//!
//! Each tooth of each wheel gets a deviation trace over its mesh window: a
//! low-order harmonic component with a seeded random phase plus a seeded white
//! component, peak-scaled to stay inside the grade tolerance. Regeneration
//! with the same seed is bit-identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GearWheelSpec;

/// Total profile deviation tolerance F_f (µm) per DIN 3962-1 for quality
/// grades 5–9, medium module band (3 < m ≤ 6, 50 < d ≤ 125 mm).
const DIN_3962_PROFILE_TOLERANCE_UM: [(u8, f64); 5] =
    [(5, 6.0), (6, 8.0), (7, 11.0), (8, 16.0), (9, 22.0)];

/// Tolerance bound (µm) for a supported DIN 3962 grade.
pub fn din_tolerance_um(grade: u8) -> Result<f64> {
    DIN_3962_PROFILE_TOLERANCE_UM
        .iter()
        .find(|(g, _)| *g == grade)
        .map(|(_, tol)| *tol)
        .ok_or_else(|| {
            Error::InvalidConfig(format!("unsupported DIN 3962 grade {grade}, expected 5..=9"))
        })
}

/// Per-tooth flank deviation traces for both wheels of a pair (µm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileErrorField {
    /// `pinion[tooth][mesh_point]`, µm, positive = excess material.
    pub pinion: Vec<Vec<f64>>,
    /// `gear[tooth][mesh_point]`, µm.
    pub gear: Vec<Vec<f64>>,
    pub din_grade: u8,
    pub seed: u64,
    /// Mesh points per tooth trace.
    pub points_per_tooth: usize,
}

impl ProfileErrorField {
    /// Largest absolute deviation over both wheels (µm).
    pub fn max_abs_um(&self) -> f64 {
        self.pinion
            .iter()
            .chain(self.gear.iter())
            .flat_map(|t| t.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Linear interpolation of a tooth trace at fractional position
    /// `pos ∈ [0, 1]` along the mesh window, in meters.
    pub fn deviation_m(&self, wheel: Wheel, tooth: usize, pos: f64) -> f64 {
        let traces = match wheel {
            Wheel::Pinion => &self.pinion,
            Wheel::Gear => &self.gear,
        };
        let trace = &traces[tooth];
        let n = trace.len();
        if n == 1 {
            return trace[0] * 1e-6;
        }
        let s = pos.clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (s as usize).min(n - 2);
        let w = s - i as f64;
        (trace[i] + w * (trace[i + 1] - trace[i])) * 1e-6
    }

    /// An all-zero field (ideal flanks), useful for isolating fault effects.
    pub fn zero(pinion_teeth: u32, gear_teeth: u32, points_per_tooth: usize) -> Self {
        Self {
            pinion: vec![vec![0.0; points_per_tooth]; pinion_teeth as usize],
            gear: vec![vec![0.0; points_per_tooth]; gear_teeth as usize],
            din_grade: 5,
            seed: 0,
            points_per_tooth,
        }
    }
}

/// Which wheel of the pair a fault or trace refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wheel {
    Pinion,
    Gear,
}

/// Generate the deviation field for a pair at the given surface grade.
///
/// Each wheel gets a common flank-form deviation (the cutting tool leaves the
/// same systematic profile on every tooth, which is what feeds the mesh
/// harmonics) plus a smaller per-tooth component of low-order waviness and
/// filtered roughness (which is what feeds the sidebands). Every tooth trace
/// is rescaled so the wheel peak sits at a random fraction (25–50%) of the
/// grade tolerance; typical flank accuracy is well inside the grade ceiling.
/// Draw order is fixed, so equal `(pair, grade, seed)` inputs give
/// bit-identical fields.
pub fn generate_profile_errors(
    pinion: &GearWheelSpec,
    gear: &GearWheelSpec,
    din_grade: u8,
    seed: u64,
    points_per_tooth: usize,
) -> Result<ProfileErrorField> {
    let tolerance = din_tolerance_um(din_grade)?;
    if points_per_tooth < 8 {
        return Err(Error::InvalidConfig(
            "points_per_tooth must be at least 8".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut wheel = |teeth: u32| -> Vec<Vec<f64>> {
        let common_phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let second_phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let second_amp: f64 = rng.random_range(0.2..0.4);
        let common_frac: f64 = rng.random_range(0.6..0.8);
        let peak_frac: f64 = rng.random_range(0.25..0.5);
        // Once-per-engagement form error dominates the tool signature; a
        // weaker second-order term rides on it.
        let common: Vec<f64> = (0..points_per_tooth)
            .map(|i| {
                let s = i as f64 / (points_per_tooth - 1) as f64;
                (std::f64::consts::TAU * s + common_phase).sin()
                    + second_amp * (2.0 * std::f64::consts::TAU * s + second_phase).sin()
            })
            .collect();
        let mut traces: Vec<Vec<f64>> = (0..teeth)
            .map(|_| {
                let order = rng.random_range(1..=3u32);
                let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let rough_frac: f64 = rng.random_range(0.1..0.25);
                // First-order filtered roughness keeps the trace flank-like.
                let mut rough = 0.0;
                (0..points_per_tooth)
                    .map(|i| {
                        let s = i as f64 / (points_per_tooth - 1) as f64;
                        let harmonic = (std::f64::consts::TAU * order as f64 * s + phase).sin();
                        let white: f64 = rng.random_range(-1.0..1.0);
                        rough = 0.7 * rough + 0.3 * white;
                        let individual = (1.0 - rough_frac) * harmonic + rough_frac * rough;
                        common_frac * common[i] + (1.0 - common_frac) * individual
                    })
                    .collect()
            })
            .collect();
        let peak = traces
            .iter()
            .flat_map(|t| t.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        let scale = if peak > 0.0 {
            tolerance * peak_frac / peak
        } else {
            0.0
        };
        for t in &mut traces {
            for v in t {
                *v *= scale;
            }
        }
        traces
    };
    let pinion_traces = wheel(pinion.tooth_count);
    let gear_traces = wheel(gear.tooth_count);
    Ok(ProfileErrorField {
        pinion: pinion_traces,
        gear: gear_traces,
        din_grade,
        seed,
        points_per_tooth,
    })
}
