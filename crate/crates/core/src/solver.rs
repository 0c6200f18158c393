//! Transient integration of M·ü + C·u̇ + K(t)·u = F(t) with the Newmark
//! scheme refined by Newton-Raphson iterations.
//!
//! K(t) is periodic over the stiffness cycle, so the effective-matrix
//! inverses are precomputed once per cycle grid point and looked up per time
//! step. Within a step the cached inverse acts as a modified-Newton Jacobian
//! against the residual built from the exact (interpolated) stiffness, which
//! is what makes the iteration do real work: the Jacobian is approximate, the
//! residual is not.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stiffness::PairSample;

/// Newmark/Newton integration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub newmark_beta: f64,
    pub newmark_gamma: f64,
    /// Time step (s); 1/sampling_rate for signal generation.
    pub dt: f64,
    /// Newton-Raphson relative residual tolerance.
    pub nr_rel_tol: f64,
    pub nr_max_iter: usize,
    /// Initial conditions (defaults: zero).
    pub initial_displacement: Option<Vec<f64>>,
    pub initial_velocity: Option<Vec<f64>>,
    /// Start-up transient to drop, in output-shaft revolutions.
    pub discard_output_revs: f64,
}

impl SolverSettings {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            newmark_beta: 0.25,
            newmark_gamma: 0.5,
            dt,
            nr_rel_tol: 1e-8,
            nr_max_iter: 20,
            initial_displacement: None,
            initial_velocity: None,
            discard_output_revs: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be > 0".into()));
        }
        let (b, g) = (self.newmark_beta, self.newmark_gamma);
        if !(g >= 0.5 && 2.0 * b >= g) {
            return Err(Error::InvalidConfig(format!(
                "Newmark parameters β={b}, γ={g} violate 2β ≥ γ ≥ 1/2 (unconditional stability)"
            )));
        }
        if !(self.nr_rel_tol > 0.0) || self.nr_max_iter == 0 {
            return Err(Error::InvalidConfig(
                "nr_rel_tol must be > 0 and nr_max_iter ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

/// Mesh transmission-error excitation data: per-pair stiffness samples plus
/// the per-tooth deviation traces they act through.
#[derive(Debug, Clone)]
pub struct ErrorExcitation {
    pub projection: DVector<f64>,
    pub mean_density: f64,
    pub contact_ratio: f64,
    /// Deviation traces (µm) per tooth over the mesh window.
    pub pinion_traces: Vec<Vec<f64>>,
    pub gear_traces: Vec<Vec<f64>>,
}

/// The assembled time-varying system in solver form:
/// K(t) = k_const + κ(t)·mesh_matrix, F(t) = f_static + error excitation.
#[derive(Debug, Clone)]
pub struct SolverSystem {
    pub mass: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    pub k_const: DMatrix<f64>,
    /// Cycle-scalar coefficient matrix (zero for constant-K systems).
    pub mesh_matrix: DMatrix<f64>,
    /// κ samples over the stiffness period (`period_cycles × n_cyc` points).
    pub gms_total: Vec<f64>,
    pub pair_samples: Vec<[PairSample; 2]>,
    pub n_cyc: usize,
    pub period_cycles: usize,
    /// Mesh cycles per second (0 → κ constant at sample 0).
    pub mesh_freq_hz: f64,
    pub f_static: DVector<f64>,
    pub excitation: Option<ErrorExcitation>,
}

impl SolverSystem {
    pub fn ndof(&self) -> usize {
        self.f_static.len()
    }

    /// A constant-coefficient system (tests, reductions to SDOF).
    pub fn constant(
        mass: DMatrix<f64>,
        damping: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        f_static: DVector<f64>,
    ) -> Self {
        let n = f_static.len();
        Self {
            mass,
            damping,
            k_const: stiffness,
            mesh_matrix: DMatrix::zeros(n, n),
            gms_total: vec![0.0],
            pair_samples: vec![[PairSample {
                stiffness: 0.0,
                active: false,
                window_pos: 0.0,
                pinion_tooth: 0,
                gear_tooth: 0,
            }; 2]],
            n_cyc: 1,
            period_cycles: 1,
            mesh_freq_hz: 0.0,
            f_static,
            excitation: None,
        }
    }

    /// Absolute grid coordinate (fractional) at time `t`.
    fn grid_coord(&self, t: f64) -> f64 {
        t * self.mesh_freq_hz * self.n_cyc as f64
    }

    /// Nearest stored pattern index for time `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        if self.mesh_freq_hz == 0.0 {
            return 0;
        }
        let g = self.grid_coord(t).round() as u64;
        (g % self.gms_total.len() as u64) as usize
    }

    /// Interpolated κ(t) with periodic wrap.
    pub fn kappa_at(&self, t: f64) -> f64 {
        let n = self.gms_total.len();
        if self.mesh_freq_hz == 0.0 || n == 1 {
            return self.gms_total[0];
        }
        let g = self.grid_coord(t);
        let i0 = g.floor() as u64 as usize % n;
        let i1 = (i0 + 1) % n;
        let w = g - g.floor();
        self.gms_total[i0] + w * (self.gms_total[i1] - self.gms_total[i0])
    }

    /// External force at time `t`, written into `out`.
    pub fn force_into(&self, t: f64, out: &mut DVector<f64>) {
        out.copy_from(&self.f_static);
        let Some(exc) = &self.excitation else {
            return;
        };
        if self.mesh_freq_hz == 0.0 {
            return;
        }
        // Nearest grid sample; tooth identities from the absolute mesh cycle
        // so the per-tooth error pattern follows the true hunting period.
        let g = self.grid_coord(t).round() as u64;
        let n_total = self.gms_total.len() as u64;
        let m_abs = g / self.n_cyc as u64;
        let pattern = (g % n_total) as usize;
        let z_p = exc.pinion_traces.len() as u64;
        let z_g = exc.gear_traces.len() as u64;
        for (c, slot) in self.pair_samples[pattern].iter().enumerate() {
            if !slot.active {
                continue;
            }
            let c = c as u64;
            let pin_tooth = ((m_abs + z_p - c) % z_p) as usize;
            let gear_tooth = ((m_abs + z_g - c) % z_g) as usize;
            let pos = slot.window_pos / exc.contact_ratio;
            let e = trace_interp(&exc.pinion_traces[pin_tooth], pos)
                + trace_interp(&exc.gear_traces[gear_tooth], 1.0 - pos);
            let share = crate::stiffness::error_transmission_share(
                slot.window_pos,
                exc.contact_ratio,
            );
            let scale = slot.stiffness * exc.mean_density * e * share;
            out.axpy(-scale, &exc.projection, 1.0);
        }
    }
}

fn trace_interp(trace: &[f64], pos: f64) -> f64 {
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

/// Per-cycle-point inverses of the Newmark effective matrix
/// A = K(cyc) + (γ/βΔt)·C + (1/βΔt²)·M.
#[derive(Debug, Clone)]
pub struct CycleJacobianCache {
    pub inverses: Vec<DMatrix<f64>>,
    pub dt: f64,
    pub c_vel: f64,
    pub c_acc: f64,
}

/// Factorize (invert) the effective matrix at every cycle grid point.
pub fn precompute_cycle_jacobians(
    sys: &SolverSystem,
    settings: &SolverSettings,
) -> Result<CycleJacobianCache> {
    settings.validate()?;
    let dt = settings.dt;
    let c_vel = settings.newmark_gamma / (settings.newmark_beta * dt);
    let c_acc = 1.0 / (settings.newmark_beta * dt * dt);
    let base = &sys.k_const + &sys.damping * c_vel + &sys.mass * c_acc;
    let mut inverses = Vec::with_capacity(sys.gms_total.len());
    for (i, &kappa) in sys.gms_total.iter().enumerate() {
        let a = &base + &sys.mesh_matrix * kappa;
        let inv = a
            .try_inverse()
            .ok_or(Error::SingularMatrix { cycle_index: i })?;
        inverses.push(inv);
    }
    Ok(CycleJacobianCache {
        inverses,
        dt,
        c_vel,
        c_acc,
    })
}

/// Integration state.
#[derive(Debug, Clone)]
pub struct State {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub a: DVector<f64>,
}

/// Preallocated step buffers.
pub struct Workspace {
    f_next: DVector<f64>,
    u_pred: DVector<f64>,
    v_pred: DVector<f64>,
    r: DVector<f64>,
    tmp: DVector<f64>,
    accel: DVector<f64>,
    vel: DVector<f64>,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        Self {
            f_next: DVector::zeros(n),
            u_pred: DVector::zeros(n),
            v_pred: DVector::zeros(n),
            r: DVector::zeros(n),
            tmp: DVector::zeros(n),
            accel: DVector::zeros(n),
            vel: DVector::zeros(n),
        }
    }
}

/// How the step obtains its Jacobian.
pub enum JacobianMode<'a> {
    /// Cycle-cached inverse (production path).
    Cached(&'a CycleJacobianCache),
    /// Assemble and invert the effective matrix afresh at this step, the way
    /// the unoptimized model runs.
    PerStepInverse,
}

/// Advance one Newmark step to `t_next`, refining with Newton-Raphson until
/// the residual is below `nr_rel_tol` relative to the external force.
///
/// Returns the number of NR iterations spent.
pub fn newmark_nr_step(
    sys: &SolverSystem,
    settings: &SolverSettings,
    mode: &JacobianMode,
    t_next: f64,
    state: &mut State,
    ws: &mut Workspace,
) -> Result<usize> {
    let dt = settings.dt;
    let beta = settings.newmark_beta;
    let gamma = settings.newmark_gamma;
    let c_acc = 1.0 / (beta * dt * dt);
    let c_vel = gamma / (beta * dt);

    sys.force_into(t_next, &mut ws.f_next);
    let kappa = sys.kappa_at(t_next);

    // Newmark predictors.
    ws.u_pred.copy_from(&state.u);
    ws.u_pred.axpy(dt, &state.v, 1.0);
    ws.u_pred.axpy(dt * dt * (0.5 - beta), &state.a, 1.0);
    ws.v_pred.copy_from(&state.v);
    ws.v_pred.axpy(dt * (1.0 - gamma), &state.a, 1.0);

    let force_norm = ws.f_next.norm();

    let fresh_inverse = |kappa: f64| -> Result<DMatrix<f64>> {
        let a = &sys.k_const
            + &sys.mesh_matrix * kappa
            + &sys.damping * c_vel
            + &sys.mass * c_acc;
        a.try_inverse().ok_or(Error::SingularMatrix { cycle_index: 0 })
    };
    let per_step_inv = match mode {
        JacobianMode::Cached(_) => None,
        JacobianMode::PerStepInverse => Some(fresh_inverse(kappa)?),
    };
    let jacobian: &DMatrix<f64> = match mode {
        JacobianMode::Cached(cache) => &cache.inverses[sys.nearest_index(t_next)],
        JacobianMode::PerStepInverse => per_step_inv.as_ref().unwrap(),
    };

    // Residual of the new-state equation, with acceleration and velocity
    // expressed through the Newmark relations:
    //   r(u) = F − M·a(u) − C·v(u) − K(t)·u.
    // Returns (‖r‖, largest term norm) so convergence can be judged relative
    // to the equation scale even with zero external force.
    let residual = |u: &DVector<f64>, ws: &mut Workspace| -> (f64, f64) {
        ws.accel.copy_from(u);
        ws.accel -= &ws.u_pred;
        ws.accel *= c_acc;
        ws.vel.copy_from(&ws.v_pred);
        ws.vel.axpy(gamma * dt, &ws.accel, 1.0);
        ws.r.copy_from(&ws.f_next);
        let mut scale = force_norm;
        ws.tmp.gemv(1.0, &sys.mass, &ws.accel, 0.0);
        scale = scale.max(ws.tmp.norm());
        ws.r -= &ws.tmp;
        ws.tmp.gemv(1.0, &sys.damping, &ws.vel, 0.0);
        scale = scale.max(ws.tmp.norm());
        ws.r -= &ws.tmp;
        ws.tmp.gemv(1.0, &sys.k_const, u, 0.0);
        scale = scale.max(ws.tmp.norm());
        ws.r -= &ws.tmp;
        if kappa != 0.0 {
            ws.tmp.gemv(kappa, &sys.mesh_matrix, u, 0.0);
            scale = scale.max(ws.tmp.norm());
            ws.r -= &ws.tmp;
        }
        (ws.r.norm(), scale)
    };

    let mut u_new = state.u.clone();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..settings.nr_max_iter {
        let (rnorm, scale) = residual(&u_new, ws);
        history.push(if scale > 0.0 { rnorm / scale } else { 0.0 });
        if rnorm <= settings.nr_rel_tol * scale {
            converged = true;
            break;
        }
        iterations += 1;
        ws.tmp.gemv(1.0, jacobian, &ws.r, 0.0);
        u_new += &ws.tmp;
    }
    if !converged {
        // One retry with a freshly factorized Jacobian before giving up.
        let exact = fresh_inverse(kappa)?;
        let (rnorm, scale) = residual(&u_new, ws);
        if rnorm > settings.nr_rel_tol * scale {
            iterations += 1;
            ws.tmp.gemv(1.0, &exact, &ws.r, 0.0);
            u_new += &ws.tmp;
            let (rnorm, scale) = residual(&u_new, ws);
            history.push(if scale > 0.0 { rnorm / scale } else { 0.0 });
            if rnorm > settings.nr_rel_tol * scale {
                return Err(Error::NonConvergence {
                    time: t_next,
                    iterations,
                    history,
                });
            }
        }
    }
    if u_new.iter().any(|x| !x.is_finite()) {
        return Err(Error::Divergence { time: t_next });
    }

    // Final kinematic update.
    ws.accel.copy_from(&u_new);
    ws.accel -= &ws.u_pred;
    ws.accel *= c_acc;
    ws.vel.copy_from(&ws.v_pred);
    ws.vel.axpy(gamma * dt, &ws.accel, 1.0);
    state.u.copy_from(&u_new);
    state.v.copy_from(&ws.vel);
    state.a.copy_from(&ws.accel);
    Ok(iterations)
}

/// Initial acceleration a₀ = M⁻¹(F(0) − C·v₀ − K(0)·u₀).
pub fn initial_state(sys: &SolverSystem, settings: &SolverSettings) -> Result<State> {
    let n = sys.ndof();
    let u = settings
        .initial_displacement
        .as_ref()
        .map(|v| DVector::from_row_slice(v))
        .unwrap_or_else(|| DVector::zeros(n));
    let v = settings
        .initial_velocity
        .as_ref()
        .map(|v| DVector::from_row_slice(v))
        .unwrap_or_else(|| DVector::zeros(n));
    if u.len() != n || v.len() != n {
        return Err(Error::InvalidConfig(
            "initial condition length does not match the DOF count".into(),
        ));
    }
    let mut f0 = DVector::zeros(n);
    sys.force_into(0.0, &mut f0);
    let k0 = &sys.k_const + &sys.mesh_matrix * sys.kappa_at(0.0);
    let rhs = f0 - &sys.damping * &v - k0 * &u;
    let a = sys
        .mass
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularMatrix { cycle_index: 0 })?;
    Ok(State { u, v, a })
}

/// Raw time march output.
#[derive(Debug, Clone)]
pub struct MarchOutput {
    /// Displacement/velocity/acceleration rows requested by the caller
    /// (`record_dofs`), sampled every step.
    pub time: Vec<f64>,
    pub displacements: Vec<Vec<f64>>,
    pub accelerations: Vec<Vec<f64>>,
    /// NR iteration histogram: index = iterations in a step.
    pub iteration_histogram: Vec<u64>,
    pub wall_seconds: f64,
}

/// March `n_steps` steps, recording the listed DOFs.
pub fn march(
    sys: &SolverSystem,
    settings: &SolverSettings,
    mode: &JacobianMode,
    n_steps: usize,
    record_dofs: &[usize],
) -> Result<MarchOutput> {
    settings.validate()?;
    let start = std::time::Instant::now();
    let mut state = initial_state(sys, settings)?;
    let mut ws = Workspace::new(sys.ndof());
    let mut out = MarchOutput {
        time: Vec::with_capacity(n_steps + 1),
        displacements: vec![Vec::with_capacity(n_steps + 1); record_dofs.len()],
        accelerations: vec![Vec::with_capacity(n_steps + 1); record_dofs.len()],
        iteration_histogram: vec![0; settings.nr_max_iter + 2],
        wall_seconds: 0.0,
    };
    let record = |t: f64, s: &State, out: &mut MarchOutput| {
        out.time.push(t);
        for (k, &d) in record_dofs.iter().enumerate() {
            out.displacements[k].push(s.u[d]);
            out.accelerations[k].push(s.a[d]);
        }
    };
    record(0.0, &state, &mut out);
    for i in 1..=n_steps {
        let t = i as f64 * settings.dt;
        let iters = newmark_nr_step(sys, settings, mode, t, &mut state, &mut ws)?;
        let slot = iters.min(out.iteration_histogram.len() - 1);
        out.iteration_histogram[slot] += 1;
        record(t, &state, &mut out);
    }
    out.wall_seconds = start.elapsed().as_secs_f64();
    Ok(out)
}
