//! Local tooth faults and their effect on per-tooth geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GearWheelSpec, ToothProfile};
use crate::profile_errors::{ProfileErrorField, Wheel};

/// Fault description applied to one wheel of the pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultSpec {
    Healthy,
    /// Tip breakage: the top `tip_loss_fraction` of the active flank of one
    /// tooth is gone.
    ToothBreakage {
        tip_loss_fraction: f64,
        tooth_index: u32,
        wheel: Wheel,
    },
    /// Surface pitting: contact is lost over part of the face width inside a
    /// band of the flank.
    Pitting {
        pit_depth_mm: f64,
        /// Band center along the active flank, 0 = root end, 1 = tip.
        flank_position: f64,
        /// Fraction of the face width covered by the pits at band center.
        axial_extent_fraction: f64,
        tooth_indices: Vec<u32>,
        wheel: Wheel,
    },
    /// Destroyed involute: a deterministic flank-shape perturbation replaces
    /// the manufacturing-grade deviation on the listed teeth.
    InvoluteDestruction {
        deviation_amplitude_um: f64,
        tooth_indices: Vec<u32>,
        wheel: Wheel,
    },
}

impl FaultSpec {
    pub fn is_healthy(&self) -> bool {
        matches!(self, FaultSpec::Healthy)
    }

    /// Wheel carrying the fault, if any.
    pub fn wheel(&self) -> Option<Wheel> {
        match self {
            FaultSpec::Healthy => None,
            FaultSpec::ToothBreakage { wheel, .. }
            | FaultSpec::Pitting { wheel, .. }
            | FaultSpec::InvoluteDestruction { wheel, .. } => Some(*wheel),
        }
    }

    /// Short label for dataset grouping (health-state matching).
    pub fn state_label(&self) -> String {
        match self {
            FaultSpec::Healthy => "healthy".into(),
            FaultSpec::ToothBreakage {
                tip_loss_fraction, ..
            } => format!("breakage_{tip_loss_fraction:.3}"),
            FaultSpec::Pitting {
                pit_depth_mm,
                axial_extent_fraction,
                ..
            } => format!("pitting_{pit_depth_mm:.3}_{axial_extent_fraction:.3}"),
            FaultSpec::InvoluteDestruction {
                deviation_amplitude_um,
                ..
            } => format!("involute_{deviation_amplitude_um:.1}"),
        }
    }

    pub fn validate(&self, pinion: &GearWheelSpec, gear: &GearWheelSpec) -> Result<()> {
        let teeth_of = |w: &Wheel| match w {
            Wheel::Pinion => pinion.tooth_count,
            Wheel::Gear => gear.tooth_count,
        };
        match self {
            FaultSpec::Healthy => Ok(()),
            FaultSpec::ToothBreakage {
                tip_loss_fraction,
                tooth_index,
                wheel,
            } => {
                if !(0.0..=1.0).contains(tip_loss_fraction) {
                    return Err(Error::InvalidFault(format!(
                        "tip_loss_fraction {tip_loss_fraction} outside [0, 1]"
                    )));
                }
                if *tooth_index >= teeth_of(wheel) {
                    return Err(Error::InvalidFault(format!(
                        "tooth_index {tooth_index} out of range for {wheel:?}"
                    )));
                }
                Ok(())
            }
            FaultSpec::Pitting {
                pit_depth_mm,
                flank_position,
                axial_extent_fraction,
                tooth_indices,
                wheel,
            } => {
                if !(*pit_depth_mm > 0.0) {
                    return Err(Error::InvalidFault("pit_depth_mm must be > 0".into()));
                }
                if !(0.0..=1.0).contains(flank_position) {
                    return Err(Error::InvalidFault("flank_position outside [0, 1]".into()));
                }
                if !(*axial_extent_fraction > 0.0 && *axial_extent_fraction <= 1.0) {
                    return Err(Error::InvalidFault(
                        "axial_extent_fraction outside (0, 1]".into(),
                    ));
                }
                for &t in tooth_indices {
                    if t >= teeth_of(wheel) {
                        return Err(Error::InvalidFault(format!(
                            "tooth index {t} out of range for {wheel:?}"
                        )));
                    }
                }
                Ok(())
            }
            FaultSpec::InvoluteDestruction {
                deviation_amplitude_um,
                tooth_indices,
                wheel,
            } => {
                if !(*deviation_amplitude_um >= 0.0) {
                    return Err(Error::InvalidFault(
                        "deviation_amplitude_um must be ≥ 0".into(),
                    ));
                }
                for &t in tooth_indices {
                    if t >= teeth_of(wheel) {
                        return Err(Error::InvalidFault(format!(
                            "tooth index {t} out of range for {wheel:?}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Pit band on a tooth flank: a smooth quartic dip of the effective face
/// width, centered at `flank_center` with half-width `flank_half_width`
/// (both as fractions of the active flank), amplitude = lost width fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitBand {
    pub flank_center: f64,
    pub flank_half_width: f64,
    pub lost_width_fraction: f64,
}

impl PitBand {
    /// Effective-width factor W_eff/W at flank position `pos ∈ [0, 1]`.
    pub fn width_factor(&self, pos: f64) -> f64 {
        let t = (pos - self.flank_center) / self.flank_half_width;
        if t.abs() >= 1.0 {
            1.0
        } else {
            let b = (1.0 - t * t).powi(2);
            1.0 - self.lost_width_fraction * b
        }
    }
}

/// One tooth's geometry after fault application. Healthy teeth reference the
/// shared wheel profile and carry the manufacturing deviation trace only.
#[derive(Debug, Clone, PartialEq)]
pub struct ToothGeometry {
    /// Replacement profile for a broken tooth; `None` = shared healthy profile.
    pub profile_override: Option<ToothProfile>,
    /// Flank deviation trace (µm) over the mesh window.
    pub deviation_um: Vec<f64>,
    pub pit: Option<PitBand>,
    /// Fraction of the active flank kept after tip loss (1.0 = whole flank).
    pub active_flank_kept: f64,
}

/// Per-tooth geometry of one wheel.
#[derive(Debug, Clone, PartialEq)]
pub struct WheelGeometry {
    pub spec: GearWheelSpec,
    pub healthy_profile: ToothProfile,
    pub teeth: Vec<ToothGeometry>,
}

impl WheelGeometry {
    pub fn profile_of(&self, tooth: usize) -> &ToothProfile {
        self.teeth[tooth]
            .profile_override
            .as_ref()
            .unwrap_or(&self.healthy_profile)
    }
}

/// Both wheels of the pair with faults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct GearPairGeometry {
    pub pinion: WheelGeometry,
    pub gear: WheelGeometry,
}

/// Ratio of pit flank-band arc length to pit depth. Stand-in aspect ratio of
/// a shallow spalled cap; the fault description does not fix one.
const PIT_BAND_LENGTH_PER_DEPTH: f64 = 10.0;

/// Apply `fault` on top of the manufacturing deviations, producing per-tooth
/// geometry for both wheels. Only the teeth named in the fault differ from
/// the healthy geometry.
pub fn apply_fault(
    pinion_spec: &GearWheelSpec,
    gear_spec: &GearWheelSpec,
    pinion_profile: &ToothProfile,
    gear_profile: &ToothProfile,
    errors: &ProfileErrorField,
    fault: &FaultSpec,
) -> Result<GearPairGeometry> {
    fault.validate(pinion_spec, gear_spec)?;

    let build_wheel = |spec: &GearWheelSpec, profile: &ToothProfile, traces: &[Vec<f64>]| {
        WheelGeometry {
            spec: spec.clone(),
            healthy_profile: profile.clone(),
            teeth: traces
                .iter()
                .map(|t| ToothGeometry {
                    profile_override: None,
                    deviation_um: t.clone(),
                    pit: None,
                    active_flank_kept: 1.0,
                })
                .collect(),
        }
    };
    let mut pinion = build_wheel(pinion_spec, pinion_profile, &errors.pinion);
    let mut gear = build_wheel(gear_spec, gear_profile, &errors.gear);

    match fault {
        FaultSpec::Healthy => {}
        FaultSpec::ToothBreakage {
            tip_loss_fraction,
            tooth_index,
            wheel,
        } => {
            let f = *tip_loss_fraction;
            if f > 0.0 {
                let target = match wheel {
                    Wheel::Pinion => &mut pinion,
                    Wheel::Gear => &mut gear,
                };
                let truncated = truncate_tip(&target.healthy_profile, f)?;
                let tooth = &mut target.teeth[*tooth_index as usize];
                tooth.profile_override = Some(truncated);
                tooth.active_flank_kept = 1.0 - f;
            }
        }
        FaultSpec::Pitting {
            pit_depth_mm,
            flank_position,
            axial_extent_fraction,
            tooth_indices,
            wheel,
        } => {
            let target = match wheel {
                Wheel::Pinion => &mut pinion,
                Wheel::Gear => &mut gear,
            };
            // Band arc length along the flank, as a fraction of the active
            // involute flank length of this wheel.
            let profile = &target.healthy_profile;
            let flank_len =
                profile.x.last().unwrap() - profile.x[profile.involute_start];
            let band_half = (PIT_BAND_LENGTH_PER_DEPTH * pit_depth_mm * 1e-3 / 2.0 / flank_len)
                .min(0.5)
                .max(1e-3);
            let band = PitBand {
                flank_center: *flank_position,
                flank_half_width: band_half,
                lost_width_fraction: *axial_extent_fraction,
            };
            for &t in tooth_indices {
                target.teeth[t as usize].pit = Some(band);
            }
        }
        FaultSpec::InvoluteDestruction {
            deviation_amplitude_um,
            tooth_indices,
            wheel,
        } => {
            let target = match wheel {
                Wheel::Pinion => &mut pinion,
                Wheel::Gear => &mut gear,
            };
            for &t in tooth_indices {
                let tooth = &mut target.teeth[t as usize];
                let n = tooth.deviation_um.len();
                // Deterministic destroyed-flank shape: a steep third-order
                // ripple phased by the tooth index, replacing grade-level
                // accuracy on that tooth.
                for (i, v) in tooth.deviation_um.iter_mut().enumerate() {
                    let s = i as f64 / (n - 1) as f64;
                    let phase = t as f64 * 0.7;
                    *v += deviation_amplitude_um
                        * (std::f64::consts::TAU * 3.0 * s + phase).sin();
                }
            }
        }
    }

    Ok(GearPairGeometry { pinion, gear })
}

/// Remove the top `fraction` of the active (involute) flank of a tooth.
fn truncate_tip(profile: &ToothProfile, fraction: f64) -> Result<ToothProfile> {
    let x_start = profile.x[profile.involute_start];
    let x_tip = *profile.x.last().unwrap();
    let x_cut = x_start + (1.0 - fraction) * (x_tip - x_start);
    let keep = profile.x.iter().take_while(|&&x| x <= x_cut).count();
    if keep <= profile.involute_start + 1 {
        return Err(Error::InvalidFault(format!(
            "tip_loss_fraction {fraction} leaves no active flank"
        )));
    }
    let mut out = profile.clone();
    out.x.truncate(keep);
    out.half_thickness.truncate(keep);
    out.area.truncate(keep);
    out.second_moment.truncate(keep);
    // Flank-point radius at the cut section.
    let t = out.x[keep - 1] + out.root_section_radius;
    let y = out.half_thickness[keep - 1];
    out.tip_radius = (t * t + y * y).sqrt();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_tooth_profile;
    use crate::profile_errors::generate_profile_errors;

    fn setup() -> (GearWheelSpec, GearWheelSpec, ToothProfile, ToothProfile, ProfileErrorField) {
        let p = GearWheelSpec::standard(17, 3.0, 25.0);
        let g = GearWheelSpec::standard(38, 3.0, 25.0);
        let pp = build_tooth_profile(&p, 400).unwrap();
        let gp = build_tooth_profile(&g, 400).unwrap();
        let errors = generate_profile_errors(&p, &g, 7, 42, 64).unwrap();
        (p, g, pp, gp, errors)
    }

    #[test]
    fn healthy_is_identity() {
        let (p, g, pp, gp, errors) = setup();
        let out = apply_fault(&p, &g, &pp, &gp, &errors, &FaultSpec::Healthy).unwrap();
        assert!(out.pinion.teeth.iter().all(|t| t.profile_override.is_none()
            && t.pit.is_none()
            && t.active_flank_kept == 1.0));
        for (i, tooth) in out.gear.teeth.iter().enumerate() {
            assert_eq!(tooth.deviation_um, errors.gear[i]);
        }
    }

    #[test]
    fn zero_severity_breakage_equals_healthy() {
        let (p, g, pp, gp, errors) = setup();
        let healthy = apply_fault(&p, &g, &pp, &gp, &errors, &FaultSpec::Healthy).unwrap();
        let zero = apply_fault(
            &p,
            &g,
            &pp,
            &gp,
            &errors,
            &FaultSpec::ToothBreakage {
                tip_loss_fraction: 0.0,
                tooth_index: 3,
                wheel: Wheel::Gear,
            },
        )
        .unwrap();
        assert_eq!(healthy, zero);
    }

    #[test]
    fn breakage_changes_only_named_tooth() {
        let (p, g, pp, gp, errors) = setup();
        let healthy = apply_fault(&p, &g, &pp, &gp, &errors, &FaultSpec::Healthy).unwrap();
        let faulted = apply_fault(
            &p,
            &g,
            &pp,
            &gp,
            &errors,
            &FaultSpec::ToothBreakage {
                tip_loss_fraction: 0.5,
                tooth_index: 3,
                wheel: Wheel::Gear,
            },
        )
        .unwrap();
        assert_eq!(healthy.pinion, faulted.pinion);
        for i in 0..38 {
            if i == 3 {
                let prof = faulted.gear.profile_of(i);
                assert!(prof.tip_radius < healthy.gear.profile_of(i).tip_radius);
                assert!(prof.n_points() < healthy.gear.profile_of(i).n_points());
            } else {
                assert_eq!(healthy.gear.teeth[i], faulted.gear.teeth[i]);
            }
        }
    }

    #[test]
    fn full_tip_loss_rejected() {
        let (p, g, pp, gp, errors) = setup();
        let out = apply_fault(
            &p,
            &g,
            &pp,
            &gp,
            &errors,
            &FaultSpec::ToothBreakage {
                tip_loss_fraction: 1.0,
                tooth_index: 0,
                wheel: Wheel::Pinion,
            },
        );
        assert!(matches!(out, Err(Error::InvalidFault(_))));
    }

    #[test]
    fn fault_indices_validated() {
        let (p, g, pp, gp, errors) = setup();
        let out = apply_fault(
            &p,
            &g,
            &pp,
            &gp,
            &errors,
            &FaultSpec::ToothBreakage {
                tip_loss_fraction: 0.2,
                tooth_index: 17,
                wheel: Wheel::Pinion,
            },
        );
        assert!(out.is_err());
    }

    #[test]
    fn pit_band_factor_shape() {
        let band = PitBand {
            flank_center: 0.5,
            flank_half_width: 0.1,
            lost_width_fraction: 0.4,
        };
        assert_eq!(band.width_factor(0.0), 1.0);
        assert_eq!(band.width_factor(1.0), 1.0);
        assert!((band.width_factor(0.5) - 0.6).abs() < 1e-12);
        assert!(band.width_factor(0.55) > 0.6);
        assert!(band.width_factor(0.55) < 1.0);
    }
}
