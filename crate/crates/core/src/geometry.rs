//! Involute spur gear geometry: wheel specifications, healthy tooth profiles,
//! and contact-line properties of a meshing pair.
//!
//! A tooth profile is described in a tooth-fixed section frame: `x` runs along
//! the tooth centerline from the root section outward, `y` is the flank
//! half-thickness at that section. Cross-section properties follow directly
//! from the half-thickness and the face width (`A = 2yW`, `I_z = (2y)³W/12`),
//! which is what the strain-energy integrals consume.
//!
//! All lengths are SI (meters) internally; specification structs carry the
//! conventional millimeter fields and convert on demand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic elastic material of a gear wheel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Young's modulus (Pa).
    pub young_modulus: f64,
    /// Poisson's ratio (dimensionless, 0 < ν < 0.5).
    pub poisson_ratio: f64,
    /// Density (kg/m³).
    pub density: f64,
}

impl Material {
    /// Structural steel defaults.
    pub fn steel() -> Self {
        Self {
            young_modulus: 206e9,
            poisson_ratio: 0.3,
            density: 7850.0,
        }
    }

    /// Shear modulus G = E / (2(1+ν)).
    pub fn shear_modulus(&self) -> f64 {
        self.young_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }
}

/// Geometry and material of one gear wheel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GearWheelSpec {
    pub tooth_count: u32,
    /// Module (mm).
    pub module_mm: f64,
    /// Pressure angle (degrees). 20° for all standard presets.
    pub pressure_angle_deg: f64,
    /// Face width (mm).
    pub face_width_mm: f64,
    /// Addendum coefficient (addendum = coeff × module).
    pub addendum_coeff: f64,
    /// Dedendum coefficient (dedendum = coeff × module).
    pub dedendum_coeff: f64,
    pub material: Material,
    /// Hub bore radius (mm); the gear body is treated as a ring between the
    /// bore and the root circle for the fillet-foundation compliance.
    pub hub_bore_radius_mm: f64,
}

impl GearWheelSpec {
    /// Standard-proportion steel wheel: 20° pressure angle, addendum 1.0,
    /// dedendum 1.25.
    pub fn standard(tooth_count: u32, module_mm: f64, face_width_mm: f64) -> Self {
        Self {
            tooth_count,
            module_mm,
            pressure_angle_deg: 20.0,
            face_width_mm,
            addendum_coeff: 1.0,
            dedendum_coeff: 1.25,
            material: Material::steel(),
            hub_bore_radius_mm: 0.4 * module_mm * tooth_count as f64 / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tooth_count < 6 {
            return Err(Error::InvalidConfig(format!(
                "tooth_count {} < 6",
                self.tooth_count
            )));
        }
        if !(self.module_mm > 0.0) {
            return Err(Error::InvalidConfig("module_mm must be > 0".into()));
        }
        if !(self.face_width_mm > 0.0) {
            return Err(Error::InvalidConfig("face_width_mm must be > 0".into()));
        }
        if !(self.pressure_angle_deg > 0.0 && self.pressure_angle_deg < 90.0) {
            return Err(Error::InvalidConfig(format!(
                "pressure_angle_deg {} outside (0, 90): degenerate line of action",
                self.pressure_angle_deg
            )));
        }
        if !(self.material.poisson_ratio > 0.0 && self.material.poisson_ratio < 0.5) {
            return Err(Error::InvalidConfig(
                "poisson_ratio must lie in (0, 0.5)".into(),
            ));
        }
        if !(self.material.young_modulus > 0.0) || !(self.material.density > 0.0) {
            return Err(Error::InvalidConfig(
                "young_modulus and density must be > 0".into(),
            ));
        }
        if !(self.addendum_coeff > 0.0) || !(self.dedendum_coeff > 0.0) {
            return Err(Error::InvalidConfig(
                "addendum and dedendum coefficients must be > 0".into(),
            ));
        }
        let k = self.kinematics();
        // Base circle strictly inside pitch circle requires α > 0, checked above;
        // keep the derived invariant explicit anyway.
        if !(k.base_radius < k.pitch_radius) {
            return Err(Error::InvalidConfig(
                "base radius must be strictly below pitch radius".into(),
            ));
        }
        if !(self.hub_bore_radius_mm > 0.0) || self.hub_bore_radius_mm * 1e-3 >= k.root_radius {
            return Err(Error::InvalidConfig(
                "hub bore radius must be positive and below the root radius".into(),
            ));
        }
        Ok(())
    }

    /// Derived circle radii and flank angles, in meters/radians.
    pub fn kinematics(&self) -> WheelKinematics {
        let z = self.tooth_count as f64;
        let m = self.module_mm * 1e-3;
        let alpha = self.pressure_angle_deg.to_radians();
        let pitch_radius = 0.5 * m * z;
        let base_radius = pitch_radius * alpha.cos();
        let tip_radius = pitch_radius + self.addendum_coeff * m;
        let root_radius = pitch_radius - self.dedendum_coeff * m;
        // Half-thickness angle where the involute leaves the base circle:
        // half the angular tooth thickness at pitch plus the involute function.
        let psi_base = std::f64::consts::PI / (2.0 * z) + involute(alpha);
        WheelKinematics {
            pitch_radius,
            base_radius,
            tip_radius,
            root_radius,
            pressure_angle: alpha,
            psi_base,
            tooth_count: self.tooth_count,
            face_width: self.face_width_mm * 1e-3,
        }
    }

    /// Practical minimum tooth count before rack-generation undercut destroys
    /// the involute flank. The theoretical limit 2·h_a/sin²α is relaxed by the
    /// customary 5/6 allowance (slight undercut is tolerated in practice).
    pub fn undercut_minimum(&self) -> u32 {
        let alpha = self.pressure_angle_deg.to_radians();
        let theoretical = 2.0 * self.addendum_coeff / (alpha.sin() * alpha.sin());
        (theoretical * 5.0 / 6.0).ceil() as u32
    }
}

/// Derived wheel geometry (meters / radians).
#[derive(Debug, Clone, Copy)]
pub struct WheelKinematics {
    pub pitch_radius: f64,
    pub base_radius: f64,
    pub tip_radius: f64,
    pub root_radius: f64,
    pub pressure_angle: f64,
    /// Angular flank half-thickness at the base circle.
    pub psi_base: f64,
    pub tooth_count: u32,
    pub face_width: f64,
}

impl WheelKinematics {
    /// Angular half-thickness of the flank at radius `r ≥ base_radius`.
    pub fn half_thickness_angle(&self, r: f64) -> f64 {
        let alpha_r = (self.base_radius / r).min(1.0).acos();
        self.psi_base - involute(alpha_r)
    }

    /// Distance from wheel center to the section plane through the flank
    /// point at radius `r` (projection onto the tooth centerline).
    pub fn section_position(&self, r: f64) -> f64 {
        r * self.half_thickness_angle(r).cos()
    }

    /// Flank half-thickness at radius `r` (chordal).
    pub fn half_thickness(&self, r: f64) -> f64 {
        r * self.half_thickness_angle(r).sin()
    }
}

/// Operating point of the transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingConditions {
    /// Input (pinion) shaft rotational frequency (Hz).
    pub input_speed_hz: f64,
    /// Output load torque (N·m).
    pub output_load_nm: f64,
    /// Output sampling rate (samples/s).
    pub sampling_rate_hz: f64,
    /// Signal duration (s).
    pub duration_s: f64,
}

impl OperatingConditions {
    /// Validate against the pinion that sets the mesh frequency.
    pub fn validate(&self, pinion_teeth: u32) -> Result<()> {
        for (name, v) in [
            ("input_speed_hz", self.input_speed_hz),
            ("output_load_nm", self.output_load_nm),
            ("sampling_rate_hz", self.sampling_rate_hz),
            ("duration_s", self.duration_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be > 0")));
            }
        }
        let mesh_freq = self.input_speed_hz * pinion_teeth as f64;
        if self.sampling_rate_hz < 20.0 * mesh_freq {
            return Err(Error::InvalidConfig(format!(
                "sampling_rate_hz {} below anti-aliasing guard 20 × mesh frequency = {}",
                self.sampling_rate_hz,
                20.0 * mesh_freq
            )));
        }
        Ok(())
    }

    /// Mesh (tooth-passing) frequency in Hz.
    pub fn mesh_frequency_hz(&self, pinion_teeth: u32) -> f64 {
        self.input_speed_hz * pinion_teeth as f64
    }
}

/// Sampled cross-section description of one tooth, root section to tip.
#[derive(Debug, Clone, PartialEq)]
pub struct ToothProfile {
    /// Tooth-axis coordinate from the root section (m), strictly increasing,
    /// first entry 0.
    pub x: Vec<f64>,
    /// Flank half-thickness at each section (m).
    pub half_thickness: Vec<f64>,
    /// Section area A = 2yW (m²).
    pub area: Vec<f64>,
    /// Section second moment I_z = (2y)³W/12 (m⁴).
    pub second_moment: Vec<f64>,
    /// Distance from the wheel center to the x = 0 section (m).
    pub root_section_radius: f64,
    /// First grid index lying on the involute flank (earlier points are the
    /// fillet / dedendum flank).
    pub involute_start: usize,
    /// Flank-point radius of the last grid point (m); the tip radius for a
    /// healthy tooth, lower after tip-loss truncation.
    pub tip_radius: f64,
    pub face_width: f64,
    pub material: Material,
}

impl ToothProfile {
    pub fn n_points(&self) -> usize {
        self.x.len()
    }

    /// Radius of the flank point belonging to the section at `x` within the
    /// involute region (inverse of the section-position map), by bisection.
    pub fn flank_radius_at(&self, kin: &WheelKinematics, x: f64) -> f64 {
        let target = x + self.root_section_radius;
        let mut lo = kin.base_radius.max(kin.root_radius);
        let mut hi = self.tip_radius;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if kin.section_position(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Contact-line properties of a meshing pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactProperties {
    /// Contact ratio ε (average simultaneous tooth pairs).
    pub contact_ratio: f64,
    /// Distance along the line of action from the pinion base-circle tangent
    /// point to the first contact point (gear tip engagement), m.
    pub initial_contact_point: f64,
    /// Angular extent of one mesh cycle on the pinion shaft (rad).
    pub mesh_period_rad: f64,
    /// Base pitch p_b = π·m·cosα (m).
    pub base_pitch: f64,
    /// Center distance (m).
    pub center_distance: f64,
    /// Length of the active contact segment along the line of action (m).
    pub contact_length: f64,
}

/// Involute function inv(θ) = tan θ − θ.
pub fn involute(theta: f64) -> f64 {
    theta.tan() - theta
}

/// Build the healthy tooth profile of `spec` with `n_points` sections from
/// the root circle to the tip.
///
/// The flank consists of the involute from the base circle to the tip, a
/// straight dedendum segment between root and base circle when the root
/// circle lies below the base circle, and a circular root fillet of radius
/// 0.38·module blended additively onto the flank near the root section.
pub fn build_tooth_profile(spec: &GearWheelSpec, n_points: usize) -> Result<ToothProfile> {
    spec.validate()?;
    if n_points < 50 {
        return Err(Error::InvalidConfig(format!(
            "n_points {n_points} < 50 gives an unusable section grid"
        )));
    }
    let minimum = spec.undercut_minimum();
    if spec.tooth_count < minimum {
        return Err(Error::Undercut {
            tooth_count: spec.tooth_count,
            minimum,
            pressure_angle_deg: spec.pressure_angle_deg,
        });
    }

    let kin = spec.kinematics();
    let module = spec.module_mm * 1e-3;
    let fillet_radius = 0.38 * module;

    // The involute flank starts at the base circle or, for fine-pitch wheels
    // whose root circle lies above it, at the root circle.
    let r_inv_start = kin.base_radius.max(kin.root_radius);
    let t_inv_start = kin.section_position(r_inv_start);
    let t_tip = kin.section_position(kin.tip_radius);
    // Root section plane: at the root circle for the straight-flank case,
    // at the involute start section otherwise.
    let t_root = if kin.root_radius < kin.base_radius {
        kin.root_radius
    } else {
        t_inv_start
    };
    let x_inv_start = t_inv_start - t_root;
    let x_tip = t_tip - t_root;
    if !(x_tip > 0.0) {
        return Err(Error::InvalidConfig(
            "degenerate profile: tip section at or below root section".into(),
        ));
    }

    // Distribute sections uniformly in x over the whole profile.
    let mut x = Vec::with_capacity(n_points);
    let mut half = Vec::with_capacity(n_points);
    let half_at_base = kin.half_thickness(r_inv_start);
    for i in 0..n_points {
        let xi = x_tip * i as f64 / (n_points - 1) as f64;
        let yi = if xi < x_inv_start {
            // Straight dedendum flank below the base circle.
            half_at_base
        } else {
            // Invert the section-position map onto the involute.
            let target = xi + t_root;
            let mut lo = r_inv_start;
            let mut hi = kin.tip_radius;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if kin.section_position(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            kin.half_thickness(0.5 * (lo + hi))
        };
        // Root fillet: circular arc of radius ρ tangent to the flank at x = ρ
        // and to the root land at x = 0, added onto the flank half-thickness.
        let yi = if xi < fillet_radius {
            let d = fillet_radius - xi;
            yi + fillet_radius - (fillet_radius * fillet_radius - d * d).max(0.0).sqrt()
        } else {
            yi
        };
        x.push(xi);
        half.push(yi);
    }
    // Force the last point exactly onto the tip flank point.
    *half.last_mut().unwrap() = kin.half_thickness(kin.tip_radius);

    let involute_start = x
        .iter()
        .position(|&xi| xi >= x_inv_start)
        .unwrap_or(n_points - 1);

    let w = kin.face_width;
    let area = half.iter().map(|&y| 2.0 * y * w).collect();
    let second_moment = half
        .iter()
        .map(|&y| {
            let t = 2.0 * y;
            t * t * t * w / 12.0
        })
        .collect();

    Ok(ToothProfile {
        x,
        half_thickness: half,
        area,
        second_moment,
        root_section_radius: t_root,
        involute_start,
        tip_radius: kin.tip_radius,
        face_width: w,
        material: spec.material,
    })
}

/// Contact-line properties of the pair `(pinion, gear)` from the line-of-action
/// geometry of standard involute meshing.
pub fn contact_properties(pinion: &GearWheelSpec, gear: &GearWheelSpec) -> Result<ContactProperties> {
    pinion.validate()?;
    gear.validate()?;
    if (pinion.module_mm - gear.module_mm).abs() > 1e-12
        || (pinion.pressure_angle_deg - gear.pressure_angle_deg).abs() > 1e-12
    {
        return Err(Error::InvalidConfig(
            "pinion and gear must share module and pressure angle".into(),
        ));
    }
    let kp = pinion.kinematics();
    let kg = gear.kinematics();
    let alpha = kp.pressure_angle;
    let center_distance = kp.pitch_radius + kg.pitch_radius;
    let tangent_length = center_distance * alpha.sin();

    // Tip-circle intersections with the line of action, via roll angles: the
    // distance from a wheel's base tangent point to its tip contact point is
    // r_b·tan(α_tip).
    let roll_tip = |k: &WheelKinematics| {
        let alpha_tip = (k.base_radius / k.tip_radius).acos();
        k.base_radius * alpha_tip.tan()
    };
    let pinion_tip_reach = roll_tip(&kp);
    let gear_tip_reach = roll_tip(&kg);

    let initial_contact_point = tangent_length - gear_tip_reach;
    let final_contact_point = pinion_tip_reach;
    let contact_length = final_contact_point - initial_contact_point;
    let base_pitch = std::f64::consts::PI * pinion.module_mm * 1e-3 * alpha.cos();
    let contact_ratio = contact_length / base_pitch;

    if !(contact_ratio > 1.0) {
        return Err(Error::ContactLost {
            ratio: contact_ratio,
        });
    }
    if initial_contact_point < 0.0 {
        return Err(Error::InvalidConfig(
            "gear tip reaches past the pinion base tangent point (interference)".into(),
        ));
    }

    Ok(ContactProperties {
        contact_ratio,
        initial_contact_point,
        mesh_period_rad: 2.0 * std::f64::consts::PI / pinion.tooth_count as f64,
        base_pitch,
        center_distance,
        contact_length,
    })
}
