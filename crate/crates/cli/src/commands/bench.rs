//! `bench`: in-repo benchmark harness comparing the naive and optimized
//! numerical kernels, with numerical-equivalence verification before any
//! timing and hard speedup floors on the meaningful sizes.

use anyhow::bail;
use clap::Args;
use gearsim_core::assembly::{
    assemble_stiffness_cycle_fast, assemble_stiffness_cycle_naive, assemble_structural_stiffness,
    geom_coefficients, StructuralParams,
};
use gearsim_core::faults::{apply_fault, FaultSpec};
use gearsim_core::geometry::{
    build_tooth_profile, contact_properties, GearWheelSpec, OperatingConditions,
};
use gearsim_core::pipeline::{build_model, SimConfig};
use gearsim_core::profile_errors::ProfileErrorField;
use gearsim_core::solver::{march, precompute_cycle_jacobians, JacobianMode, SolverSettings};
use gearsim_core::stiffness::{
    axial_shear_energies, axial_shear_energies_naive, bending_energy_fast, bending_energy_naive,
    gms_over_cycle, LoadDecomposition,
};
use std::path::PathBuf;
use std::time::Instant;

use crate::io::{fmt_f64, resolve_out_dir, write_atomic};

/// Speedup floor: the optimized path must be at least this many times faster
/// on assertion-eligible sizes (the conservative end of the expected
/// order-of-magnitude gain).
const SPEEDUP_FLOOR: f64 = 10.0;
/// Strain-energy sizes below this are reported but not asserted.
const STRAIN_ASSERT_MIN_N: usize = 4000;
const JACOBIAN_SPEEDUP_FLOOR: f64 = 5.0;
const JACOBIAN_ASSERT_MIN_STEPS_PER_CYCLE: usize = 50;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Strain-energy profile sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [16usize, 2000, 8000])]
    pub strain_sizes: Vec<usize>,
    /// Cycle points for the stiffness-assembly benchmark.
    #[arg(long, default_value_t = 512)]
    pub assembly_cycles: usize,
    /// z-grid points for the naive stiffness assembly.
    #[arg(long, default_value_t = 1000)]
    pub assembly_z: usize,
    /// Time steps per mesh cycle for the Jacobian-cache benchmark.
    #[arg(long, default_value_t = 50)]
    pub jacobian_steps_per_cycle: usize,
    /// Report file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub kernel: String,
    pub param: String,
    pub baseline_s: f64,
    pub fast_s: f64,
    pub floor: Option<f64>,
    pub pass: bool,
}

impl BenchRow {
    pub fn speedup(&self) -> f64 {
        self.baseline_s / self.fast_s
    }
}

fn time_min<F: FnMut()>(reps: usize, mut f: F) -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..reps {
        let t = Instant::now();
        f();
        best = best.min(t.elapsed().as_secs_f64());
    }
    best
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let d = a.abs().max(b.abs());
    if d == 0.0 {
        0.0
    } else {
        (a - b).abs() / d
    }
}

fn bench_profile(n: usize) -> anyhow::Result<gearsim_core::geometry::ToothProfile> {
    let spec = GearWheelSpec::standard(17, 3.0, 25.0);
    Ok(build_tooth_profile(&spec, n)?)
}

/// Strain-energy benchmark at one size: verify fast == naive (bending, axial,
/// shear) to 1e-10, then time both paths.
pub fn bench_strain(n: usize) -> anyhow::Result<BenchRow> {
    let profile = bench_profile(n)?;
    let load = LoadDecomposition {
        axial_force: 60.0,
        shear_force: 175.0,
        application_point_index: n - 1,
    };
    let nb = bending_energy_naive(&profile, &load)?;
    let fb = bending_energy_fast(&profile, &load)?;
    let (na, ns) = axial_shear_energies_naive(&profile, &load)?;
    let (fa, fs) = axial_shear_energies(&profile, &load)?;
    for i in 0..n {
        for (kind, a, b) in [
            ("bending", nb[i], fb[i]),
            ("axial", na[i], fa[i]),
            ("shear", ns[i], fs[i]),
        ] {
            if rel_diff(a, b) >= 1e-10 {
                bail!(
                    "strain equivalence failed at N={n}, {kind}[{i}]: naive {a:.17e} vs fast {b:.17e}"
                );
            }
        }
    }
    let reps = if n >= 4000 { 3 } else { 10 };
    let baseline = time_min(reps, || {
        std::hint::black_box(bending_energy_naive(&profile, &load).unwrap());
        std::hint::black_box(axial_shear_energies_naive(&profile, &load).unwrap());
    });
    let fast = time_min(reps.max(20), || {
        std::hint::black_box(bending_energy_fast(&profile, &load).unwrap());
        std::hint::black_box(axial_shear_energies(&profile, &load).unwrap());
    });
    let floor = (n >= STRAIN_ASSERT_MIN_N).then_some(SPEEDUP_FLOOR);
    let pass = floor.map(|f| baseline / fast >= f).unwrap_or(true);
    Ok(BenchRow {
        kernel: "strain_energy".into(),
        param: format!("N={n}"),
        baseline_s: baseline,
        fast_s: fast,
        floor,
        pass,
    })
}

/// Sub-quadratic growth of the fast path: runtime(4N)/runtime(N) stays below
/// 8 where the naive path exceeds it.
pub fn bench_complexity(n: usize) -> anyhow::Result<Vec<BenchRow>> {
    let small = bench_strain(n)?;
    let large = bench_strain(4 * n)?;
    let fast_growth = large.fast_s / small.fast_s;
    let naive_growth = large.baseline_s / small.baseline_s;
    Ok(vec![
        BenchRow {
            kernel: "strain_growth_fast".into(),
            param: format!("N={n}→{}", 4 * n),
            baseline_s: small.fast_s,
            fast_s: large.fast_s,
            floor: Some(8.0),
            pass: fast_growth < 8.0,
        },
        BenchRow {
            kernel: "strain_growth_naive".into(),
            param: format!("N={n}→{}", 4 * n),
            baseline_s: small.baseline_s,
            fast_s: large.baseline_s,
            floor: Some(8.0),
            pass: naive_growth > 8.0,
        },
    ])
}

/// Stiffness-assembly benchmark: verify the analytic-expectation path
/// against the z-grid path at the bench resolution, then time both.
pub fn bench_assembly(n_cyc: usize, m_z: usize) -> anyhow::Result<BenchRow> {
    let pinion = GearWheelSpec::standard(17, 3.0, 25.0);
    let gear = GearWheelSpec::standard(38, 3.0, 25.0);
    let pp = build_tooth_profile(&pinion, 300)?;
    let gp = build_tooth_profile(&gear, 300)?;
    let errors = ProfileErrorField::zero(17, 38, 32);
    let geometry = apply_fault(&pinion, &gear, &pp, &gp, &errors, &FaultSpec::Healthy)?;
    let props = contact_properties(&pinion, &gear)?;
    let gms = gms_over_cycle(&geometry, &props, n_cyc)?;
    let geom = geom_coefficients(&geometry, 0.3);
    let k_const = assemble_structural_stiffness(&StructuralParams::default());

    let naive = assemble_stiffness_cycle_naive(&gms, &geom, &k_const, m_z)?;
    let fast = assemble_stiffness_cycle_fast(&gms, &geom, &k_const);
    for (i, (a, b)) in naive.iter().zip(fast.iter()).enumerate() {
        let rel = (a - b).norm() / b.norm();
        if rel >= 1e-6 {
            bail!("assembly equivalence failed at cycle {i}: relative Frobenius {rel:.3e}");
        }
    }
    let baseline = time_min(3, || {
        std::hint::black_box(
            assemble_stiffness_cycle_naive(&gms, &geom, &k_const, m_z).unwrap(),
        );
    });
    let fast_t = time_min(10, || {
        std::hint::black_box(assemble_stiffness_cycle_fast(&gms, &geom, &k_const));
    });
    let floor = (n_cyc >= 256 && m_z >= 500).then_some(SPEEDUP_FLOOR);
    let pass = floor.map(|f| baseline / fast_t >= f).unwrap_or(true);
    Ok(BenchRow {
        kernel: "stiffness_assembly".into(),
        param: format!("N_cyc={n_cyc},M={m_z}"),
        baseline_s: baseline,
        fast_s: fast_t,
        floor,
        pass,
    })
}

/// Cycle-cached Jacobian inverses vs per-step assembly-and-inversion over a
/// ten-mesh-cycle march. Verifies identical trajectories (1e-8 relative to
/// the response scale) before timing the step loops; the cache construction
/// is timed separately and reported in the row's parameter field.
pub fn bench_jacobian(steps_per_cycle: usize) -> anyhow::Result<BenchRow> {
    let rate = 25_000.0;
    let mesh_freq = rate / steps_per_cycle as f64;
    let input_speed = mesh_freq / 17.0;
    let config = SimConfig {
        pinion: GearWheelSpec::standard(17, 3.0, 25.0),
        gear: GearWheelSpec::standard(38, 3.0, 25.0),
        conditions: OperatingConditions {
            input_speed_hz: input_speed,
            output_load_nm: 10.0,
            sampling_rate_hz: rate,
            duration_s: 1.0,
        },
        din_grade: 7,
        fault: FaultSpec::Healthy,
        seed: 4,
        error_seed: None,
        n_cyc: 64,
        profile_points: 300,
        error_points_per_tooth: 64,
        structural: StructuralParams::default(),
        nr_rel_tol: 1e-10,
        nr_max_iter: 20,
        discard_output_revs: 1.0,
        sensor_noise: 0.0,
    };
    let model = build_model(&config)?;
    let mut settings = SolverSettings::with_dt(1.0 / rate);
    settings.nr_rel_tol = 1e-10;
    let steps = 10 * steps_per_cycle;
    let record = [gearsim_core::assembly::DofLayout::CASING_Y];

    let t_cache = Instant::now();
    let cache = precompute_cycle_jacobians(&model.system, &settings)?;
    let cache_s = t_cache.elapsed().as_secs_f64();

    let cached = march(
        &model.system,
        &settings,
        &JacobianMode::Cached(&cache),
        steps,
        &record,
    )?;
    let fresh = march(
        &model.system,
        &settings,
        &JacobianMode::PerStepInverse,
        steps,
        &record,
    )?;
    let scale = fresh.displacements[0]
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    for (i, (a, b)) in cached.displacements[0]
        .iter()
        .zip(fresh.displacements[0].iter())
        .enumerate()
    {
        if (a - b).abs() > 1e-8 * scale {
            bail!("jacobian trajectories diverge at step {i}: {a:.17e} vs {b:.17e}");
        }
    }

    let fast = time_min(7, || {
        std::hint::black_box(
            march(
                &model.system,
                &settings,
                &JacobianMode::Cached(&cache),
                steps,
                &record,
            )
            .unwrap(),
        );
    });
    let baseline = time_min(5, || {
        std::hint::black_box(
            march(
                &model.system,
                &settings,
                &JacobianMode::PerStepInverse,
                steps,
                &record,
            )
            .unwrap(),
        );
    });
    let floor = (steps_per_cycle >= JACOBIAN_ASSERT_MIN_STEPS_PER_CYCLE)
        .then_some(JACOBIAN_SPEEDUP_FLOOR);
    let pass = floor.map(|f| baseline / fast >= f).unwrap_or(true);
    Ok(BenchRow {
        kernel: "jacobian_cache".into(),
        param: format!(
            "steps_per_cycle={steps_per_cycle},cycles=10,cache_build_s={cache_s:.6}"
        ),
        baseline_s: baseline,
        fast_s: fast,
        floor,
        pass,
    })
}

pub fn report_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("kernel,param,baseline_s,fast_s,speedup,floor,asserted,pass\n");
    for r in rows {
        out.push_str(&format!(
            "{},\"{}\",{},{},{},{},{},{}\n",
            r.kernel,
            r.param,
            fmt_f64(r.baseline_s),
            fmt_f64(r.fast_s),
            fmt_f64(r.speedup()),
            r.floor.map(|f| f.to_string()).unwrap_or_default(),
            r.floor.is_some(),
            r.pass
        ));
    }
    out
}

pub fn run(args: &BenchArgs) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    for &n in &args.strain_sizes {
        if n < 2 {
            bail!("strain size must be ≥ 2");
        }
        let row = bench_strain(n)?;
        eprintln!(
            "strain N={n}: naive {:.4}s fast {:.6}s speedup {:.1}x",
            row.baseline_s,
            row.fast_s,
            row.speedup()
        );
        rows.push(row);
    }
    rows.extend(bench_complexity(2000)?);
    let row = bench_assembly(args.assembly_cycles, args.assembly_z)?;
    eprintln!(
        "assembly {}: naive {:.4}s fast {:.6}s speedup {:.1}x",
        row.param,
        row.baseline_s,
        row.fast_s,
        row.speedup()
    );
    rows.push(row);
    let row = bench_jacobian(args.jacobian_steps_per_cycle)?;
    eprintln!(
        "jacobian {}: per-step {:.4}s cached {:.4}s speedup {:.1}x",
        row.param,
        row.baseline_s,
        row.fast_s,
        row.speedup()
    );
    rows.push(row);

    let out = resolve_out_dir(args.out.clone(), "gearsim-bench");
    let path = if out.extension().is_some() {
        out
    } else {
        out.join("bench.csv")
    };
    write_atomic(&path, report_csv(&rows).as_bytes())?;
    eprintln!("bench report -> {}", path.display());

    let failures: Vec<&BenchRow> = rows.iter().filter(|r| !r.pass).collect();
    if !failures.is_empty() {
        for f in &failures {
            eprintln!(
                "FAIL {} {}: speedup {:.2}x below floor {:?}",
                f.kernel,
                f.param,
                f.speedup(),
                f.floor
            );
        }
        return Err(anyhow::Error::new(gearsim_core::Error::Signal(format!(
            "{} benchmark floor(s) not met",
            failures.len()
        )))
        .context("benchmark assertion failed"));
    }
    Ok(())
}
