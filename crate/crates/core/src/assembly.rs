//! Assembly of the 13-DOF equations of motion: mass, damping,
//! cycle-dependent stiffness matrices, and external forces.
//!
//! Layout: pinion {x, y, z, θ}, gear {x, y, z, θ}, motor θ, load θ,
//! casing {x, y, z}. Gear-side angles are measured positive in the driven
//! rotation direction, which makes the resisting load torque entry negative
//! and the torsional rigid-body mode exactly unforced when the motor torque
//! balances the load through the base-radius ratio.
//!
//! The mesh couples the pair through a rank-one projection of the
//! line-of-action approach. The cycle-dependent part is assembled two ways:
//! a reference double loop over cycle points and a uniform z-grid across the
//! face width, and a fast path that replaces the z loop with the analytic
//! expectation of the axial contact-density polynomial.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faults::GearPairGeometry;
use crate::geometry::OperatingConditions;
use crate::stiffness::GmsCurve;

/// Number of generalized coordinates.
pub const NDOF: usize = 13;

/// Named index map of the generalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofLayout;

impl DofLayout {
    pub const PINION_X: usize = 0;
    pub const PINION_Y: usize = 1;
    pub const PINION_Z: usize = 2;
    pub const PINION_THETA: usize = 3;
    pub const GEAR_X: usize = 4;
    pub const GEAR_Y: usize = 5;
    pub const GEAR_Z: usize = 6;
    pub const GEAR_THETA: usize = 7;
    pub const MOTOR_THETA: usize = 8;
    pub const LOAD_THETA: usize = 9;
    pub const CASING_X: usize = 10;
    pub const CASING_Y: usize = 11;
    pub const CASING_Z: usize = 12;

    pub const NAMES: [&'static str; NDOF] = [
        "pinion_x",
        "pinion_y",
        "pinion_z",
        "pinion_theta",
        "gear_x",
        "gear_y",
        "gear_z",
        "gear_theta",
        "motor_theta",
        "load_theta",
        "casing_x",
        "casing_y",
        "casing_z",
    ];

    pub fn index(name: &str) -> Option<usize> {
        Self::NAMES.iter().position(|&n| n == name)
    }

    /// Accelerometer home: the casing translational set.
    pub fn accelerometer_dofs() -> [usize; 3] {
        [Self::CASING_X, Self::CASING_Y, Self::CASING_Z]
    }
}

/// Lumped masses and inertias of the drivetrain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertiaConfig {
    pub pinion_mass: f64,
    pub pinion_inertia: f64,
    pub gear_mass: f64,
    pub gear_inertia: f64,
    pub motor_inertia: f64,
    pub load_inertia: f64,
    pub casing_mass: f64,
}

impl InertiaConfig {
    /// Wheel masses/inertias from solid-disc geometry (bore subtracted),
    /// motor/load/casing from the structural defaults.
    pub fn from_pair(geometry: &GearPairGeometry, params: &StructuralParams) -> Self {
        let wheel = |spec: &crate::geometry::GearWheelSpec| {
            let k = spec.kinematics();
            let r = k.pitch_radius;
            let r_bore = spec.hub_bore_radius_mm * 1e-3;
            let w = k.face_width;
            let rho = spec.material.density;
            let mass = rho * std::f64::consts::PI * (r * r - r_bore * r_bore) * w;
            let inertia = 0.5 * rho * std::f64::consts::PI * w * (r.powi(4) - r_bore.powi(4));
            (mass, inertia)
        };
        let (pm, pj) = wheel(&geometry.pinion.spec);
        let (gm, gj) = wheel(&geometry.gear.spec);
        Self {
            pinion_mass: pm,
            pinion_inertia: pj,
            gear_mass: gm,
            gear_inertia: gj,
            motor_inertia: params.motor_inertia,
            load_inertia: params.load_inertia,
            casing_mass: params.casing_mass,
        }
    }

    fn diagonal(&self) -> [f64; NDOF] {
        [
            self.pinion_mass,
            self.pinion_mass,
            self.pinion_mass,
            self.pinion_inertia,
            self.gear_mass,
            self.gear_mass,
            self.gear_mass,
            self.gear_inertia,
            self.motor_inertia,
            self.load_inertia,
            self.casing_mass,
            self.casing_mass,
            self.casing_mass,
        ]
    }
}

/// Structural constants of shafts, bearings, and casing supports. These are
/// rig-level defaults, not values pinned by any measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralParams {
    /// Bearing radial stiffness per wheel (N/m).
    pub bearing_radial: f64,
    /// Bearing axial stiffness per wheel (N/m).
    pub bearing_axial: f64,
    /// Casing-to-ground support stiffness per axis (N/m).
    pub casing_ground: f64,
    pub casing_mass: f64,
    /// Motor-shaft torsional stiffness (N·m/rad).
    pub shaft_torsion_motor: f64,
    /// Load-shaft torsional stiffness (N·m/rad).
    pub shaft_torsion_load: f64,
    pub motor_inertia: f64,
    pub load_inertia: f64,
    /// Rayleigh damping C = a·M + b·K̄.
    pub rayleigh_a: f64,
    pub rayleigh_b: f64,
    /// Face edge-relief depth of the axial contact-density polynomial
    /// s(ζ) = 1 − c·(2ζ/W)⁴; 0 = uniform distribution.
    pub edge_relief: f64,
    pub gravity: f64,
}

impl Default for StructuralParams {
    fn default() -> Self {
        Self {
            bearing_radial: 5e8,
            bearing_axial: 2e8,
            casing_ground: 1e8,
            casing_mass: 10.0,
            shaft_torsion_motor: 8e5,
            shaft_torsion_load: 8e5,
            motor_inertia: 0.01,
            load_inertia: 0.02,
            rayleigh_a: 5.0,
            // Puts the dominant mesh-mode damping ratio near 0.05 for the
            // shipped bearing and mesh stiffness levels.
            rayleigh_b: 4e-6,
            edge_relief: 0.0,
            gravity: 9.81,
        }
    }
}

/// z-dependent and z-independent geometric coefficients of the mesh
/// projection, with the analytic expectation of the z-polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct GeomCoefficients {
    /// Coefficient matrix of the z-dependent density term.
    pub geom_z_dep: DMatrix<f64>,
    /// Coefficient matrix of the z-independent density term.
    pub geom_z_indep: DMatrix<f64>,
    /// Entrywise analytic mean of the z-polynomial over [−W/2, W/2].
    pub expectation_matrix: DMatrix<f64>,
    /// Mesh projection vector (line-of-action approach = vᵀu).
    pub projection: DVector<f64>,
    /// Edge-relief depth of the density polynomial.
    pub edge_relief: f64,
    pub face_width: f64,
}

impl GeomCoefficients {
    /// Axial contact density s(ζ) = 1 − c·(2ζ/W)⁴.
    pub fn density(&self, zeta: f64) -> f64 {
        let t = 2.0 * zeta / self.face_width;
        1.0 - self.edge_relief * t.powi(4)
    }

    /// Geometric coefficient matrix of one z-slice.
    pub fn geom_at(&self, zeta: f64) -> DMatrix<f64> {
        let t = 2.0 * zeta / self.face_width;
        &self.geom_z_indep + &self.geom_z_dep * (-self.edge_relief * t.powi(4))
    }

    /// Analytic mean of the density polynomial: ∫(2ζ/W)⁴dζ/W = 1/5.
    pub fn mean_density(&self) -> f64 {
        1.0 - self.edge_relief / 5.0
    }
}

/// The assembled equation-of-motion components.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub mass: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    /// Cycle-independent structural stiffness.
    pub k_const: DMatrix<f64>,
    /// K at every cycle grid point of the stiffness period.
    pub k_cycle: Vec<DMatrix<f64>>,
    /// External force vector at every cycle grid point (reference
    /// engagement; the solver re-evaluates the error excitation with
    /// hunting-true tooth indices).
    pub f_ex: Vec<DVector<f64>>,
}

/// Mesh projection vector v: the line-of-action approach is δ = vᵀu.
pub fn mesh_projection(geometry: &GearPairGeometry) -> DVector<f64> {
    let kp = geometry.pinion.spec.kinematics();
    let kg = geometry.gear.spec.kinematics();
    let alpha = kp.pressure_angle;
    let mut v = DVector::zeros(NDOF);
    v[DofLayout::PINION_X] = alpha.sin();
    v[DofLayout::PINION_Y] = alpha.cos();
    v[DofLayout::PINION_THETA] = kp.base_radius;
    v[DofLayout::GEAR_X] = -alpha.sin();
    v[DofLayout::GEAR_Y] = -alpha.cos();
    v[DofLayout::GEAR_THETA] = -kg.base_radius;
    v
}

/// Build the geometric coefficients for the pair.
pub fn geom_coefficients(geometry: &GearPairGeometry, edge_relief: f64) -> GeomCoefficients {
    let v = mesh_projection(geometry);
    let vvt = &v * v.transpose();
    let width = geometry
        .pinion
        .spec
        .face_width_mm
        .min(geometry.gear.spec.face_width_mm)
        * 1e-3;
    GeomCoefficients {
        geom_z_dep: vvt.clone(),
        geom_z_indep: vvt,
        expectation_matrix: DMatrix::from_element(NDOF, NDOF, -edge_relief / 5.0),
        projection: v,
        edge_relief,
        face_width: width,
    }
}

/// Diagonal lumped mass matrix over the DOF layout.
pub fn assemble_mass(inertias: &InertiaConfig) -> Result<DMatrix<f64>> {
    let diag = inertias.diagonal();
    if diag.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::InvalidConfig(
            "all masses and inertias must be > 0".into(),
        ));
    }
    Ok(DMatrix::from_diagonal(&DVector::from_row_slice(&diag)))
}

/// Rayleigh damping C = a·M + b·K̄ with K̄ the cycle-mean stiffness.
pub fn assemble_damping(
    mass: &DMatrix<f64>,
    mean_stiffness: &DMatrix<f64>,
    rayleigh_a: f64,
    rayleigh_b: f64,
) -> Result<DMatrix<f64>> {
    if rayleigh_a < 0.0 || rayleigh_b < 0.0 {
        return Err(Error::InvalidConfig(
            "Rayleigh coefficients must be ≥ 0".into(),
        ));
    }
    Ok(mass * rayleigh_a + mean_stiffness * rayleigh_b)
}

/// Cycle-independent structural stiffness: shafts, bearings, casing supports.
pub fn assemble_structural_stiffness(params: &StructuralParams) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(NDOF, NDOF);
    let mut spring = |i: usize, j: usize, kij: f64| {
        k[(i, i)] += kij;
        k[(j, j)] += kij;
        k[(i, j)] -= kij;
        k[(j, i)] -= kij;
    };
    use DofLayout as D;
    // Torsional shafts.
    spring(D::MOTOR_THETA, D::PINION_THETA, params.shaft_torsion_motor);
    spring(D::GEAR_THETA, D::LOAD_THETA, params.shaft_torsion_load);
    // Bearings: wheel to casing.
    for (w, c, kb) in [
        (D::PINION_X, D::CASING_X, params.bearing_radial),
        (D::PINION_Y, D::CASING_Y, params.bearing_radial),
        (D::PINION_Z, D::CASING_Z, params.bearing_axial),
        (D::GEAR_X, D::CASING_X, params.bearing_radial),
        (D::GEAR_Y, D::CASING_Y, params.bearing_radial),
        (D::GEAR_Z, D::CASING_Z, params.bearing_axial),
    ] {
        spring(w, c, kb);
    }
    // Casing to ground.
    for c in [D::CASING_X, D::CASING_Y, D::CASING_Z] {
        k[(c, c)] += params.casing_ground;
    }
    k
}

/// Reference assembly of the cycle-dependent stiffness: for every cycle point
/// the z-dependent geometric coefficient is averaged over a uniform grid of
/// `m_z` points (midpoint positions) across the face width.
pub fn assemble_stiffness_cycle_naive(
    gms: &GmsCurve,
    geom: &GeomCoefficients,
    k_const: &DMatrix<f64>,
    m_z: usize,
) -> Result<Vec<DMatrix<f64>>> {
    if m_z < 1 {
        return Err(Error::InvalidConfig("z grid needs at least 1 point".into()));
    }
    let w = geom.face_width;
    let mut out = Vec::with_capacity(gms.len());
    for i in 0..gms.len() {
        let mut acc = DMatrix::zeros(NDOF, NDOF);
        for j in 0..m_z {
            let zeta = -w / 2.0 + (j as f64 + 0.5) * w / m_z as f64;
            acc += geom.geom_at(zeta) * gms.total[i];
        }
        out.push(k_const + acc / m_z as f64);
    }
    Ok(out)
}

/// Fast assembly: K(cyc) = K_const + [geom_zdep ∘ E(z) + geom_zindep]·gms(cyc),
/// with the z loop replaced by the precomputed analytic expectation.
pub fn assemble_stiffness_cycle_fast(
    gms: &GmsCurve,
    geom: &GeomCoefficients,
    k_const: &DMatrix<f64>,
) -> Vec<DMatrix<f64>> {
    let combined = geom
        .geom_z_dep
        .component_mul(&geom.expectation_matrix)
        + &geom.geom_z_indep;
    gms.total
        .iter()
        .map(|&k| k_const + &combined * k)
        .collect()
}

/// Static external forces: motor and load torques plus gravity. The mesh
/// transmission-error excitation is cycle-dependent and evaluated by the
/// solver; it shares the expectation-matrix treatment through the projection
/// vector and the mean density.
pub fn assemble_static_forces(
    geometry: &GearPairGeometry,
    conditions: &OperatingConditions,
    inertias: &InertiaConfig,
    gravity: f64,
) -> DVector<f64> {
    let kp = geometry.pinion.spec.kinematics();
    let kg = geometry.gear.spec.kinematics();
    let mut f = DVector::zeros(NDOF);
    use DofLayout as D;
    let t_load = conditions.output_load_nm;
    // Balanced drive: rigid torsional mode carries no net torque.
    f[D::MOTOR_THETA] = t_load * kp.base_radius / kg.base_radius;
    f[D::LOAD_THETA] = -t_load;
    f[D::PINION_Y] = -inertias.pinion_mass * gravity;
    f[D::GEAR_Y] = -inertias.gear_mass * gravity;
    f[D::CASING_Y] = -inertias.casing_mass * gravity;
    f
}

/// Per-cycle-point external force vectors: static part plus the mesh
/// transmission-error excitation of the reference engagement (mesh cycle 0
/// of the stored period), z-averaged analytically.
pub fn assemble_external_forces(
    geometry: &GearPairGeometry,
    conditions: &OperatingConditions,
    inertias: &InertiaConfig,
    geom: &GeomCoefficients,
    gms: &GmsCurve,
    errors_zero: bool,
    gravity: f64,
) -> Vec<DVector<f64>> {
    let f_static = assemble_static_forces(geometry, conditions, inertias, gravity);
    let mean_density = geom.mean_density();
    (0..gms.len())
        .map(|i| {
            let mut f = f_static.clone();
            if !errors_zero {
                for slot in &gms.pairs[i] {
                    if !slot.active {
                        continue;
                    }
                    let pos = slot.window_pos / gms.contact_ratio;
                    let e_p = trace_at(&geometry.pinion, slot.pinion_tooth as usize, pos);
                    let e_g = trace_at(&geometry.gear, slot.gear_tooth as usize, 1.0 - pos);
                    let e = e_p + e_g;
                    let share = crate::stiffness::error_transmission_share(
                        slot.window_pos,
                        gms.contact_ratio,
                    );
                    f -= &geom.projection * (slot.stiffness * mean_density * e * share);
                }
            }
            f
        })
        .collect()
}

fn trace_at(wheel: &crate::faults::WheelGeometry, tooth: usize, pos: f64) -> f64 {
    let trace = &wheel.teeth[tooth].deviation_um;
    let n = trace.len();
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return trace[0] * 1e-6;
    }
    let s = pos.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = (s as usize).min(n - 2);
    let w = s - i as f64;
    (trace[i] + w * (trace[i + 1] - trace[i])) * 1e-6
}
