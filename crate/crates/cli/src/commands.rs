//! The four subcommands. Each writes its files into the output directory and
//! returns whether every check passed.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use freestream::collision::{apply_k, GradKernelModel};
use freestream::counterexample::{
    alpha_sweep, default_codim_alphas, default_test_set, finite_codim_combination, ly2_gap_sweep,
    manufactured_solution_check, moment_functionals, CodimReport, ManufacturedCase,
};
use freestream::transport::{bounded_case_constant, sigma_integral_divergence, sigma_profile, TransportKernel};
use freestream::velocity::{log_spaced, weight_triangle_check, CollisionFrequencyModel, Velocity, VelocityGrid};
use freestream::SpatialProfile;

use crate::config::RunConfig;
use crate::report::{write_csv, write_json, Checks, Measured, VerificationReport};
use crate::usage;

/// Tolerance of the L¹ identity and the constant-input resolvent checks.
const IDENTITY_TOL: f64 = 1e-10;

struct Models {
    nu: CollisionFrequencyModel,
    k: GradKernelModel,
    grid: VelocityGrid,
}

fn models(cfg: &RunConfig) -> Result<Models> {
    Ok(Models {
        nu: CollisionFrequencyModel::new(cfg.nu0).map_err(usage)?,
        k: GradKernelModel::new(cfg.c_amp, cfg.c_decay).map_err(usage)?,
        grid: VelocityGrid::product(cfg.r_max, cfg.n_axial, cfg.n_transverse).map_err(usage)?,
    })
}

/// Velocities off the `ξ₁ = 0` plane used by the pointwise resolvent checks.
fn sample_velocities() -> Vec<Velocity> {
    [
        [1.0, 0.0, 0.0],
        [-0.5, 2.0, 0.0],
        [1e-4, 1.0, 0.0],
        [3.0, -1.0, 2.0],
        [-20.0, 0.5, 0.5],
    ]
    .into_iter()
    .map(Velocity::from)
    .collect()
}

pub fn verify(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let m = models(cfg)?;
    let kernel = TransportKernel::new(m.nu);
    let mut checks = Checks::new(cfg.record_timings);

    checks.run("l1_identity", || {
        let mut worst: f64 = 0.0;
        for xi in m.grid.nodes().iter().filter(|v| v.xi1 != 0.0) {
            let quad = kernel.l1_norm_by_quadrature(xi, cfg.quad_tol)?;
            worst = worst.max((quad.value - 1.0 / m.nu.nu(xi)).abs());
        }
        Ok(Measured::within(worst, 0.0, IDENTITY_TOL))
    });

    checks.run("resolvent_of_constant", || {
        let mut worst: f64 = 0.0;
        for xi in sample_velocities() {
            let exact = 1.0 / m.nu.nu(&xi);
            for x in [-1.0, 0.0, 2.5] {
                let closed = kernel.apply(&SpatialProfile::Constant { amplitude: 1.0 }, &xi, x, cfg.quad_tol)?;
                let quad = kernel.apply_fn(|_| 1.0, &xi, x, &[], cfg.quad_tol)?;
                worst = worst.max((closed - exact).abs()).max((quad - exact).abs());
            }
        }
        Ok(Measured::within(worst, 0.0, IDENTITY_TOL))
    });

    checks.run("inverse_pair", || {
        let case = ManufacturedCase::gaussian(None, m.nu);
        let r = manufactured_solution_check(&case, &default_test_set(), cfg.quad_tol)?;
        Ok(Measured::within(r.max_residual, 0.0, 1e-8))
    });

    checks.run("weight_triangle", || {
        let t = weight_triangle_check(cfg.triangle_samples, cfg.seed)?;
        Ok(Measured {
            measured: t.worst_ratio,
            target: SQRT_2,
            tolerance: 1e-12,
            pass: t.passed && t.worst_ratio <= SQRT_2 + 1e-12,
        })
    });

    checks.run("k_constant", || {
        let est = apply_k(
            |_| 1.0,
            &Velocity::from([0.3, -0.2, 0.7]),
            &m.k,
            cfg.quad_tol.max(1e-12),
        )?;
        Ok(Measured::within(est.value, m.k.total_mass(), 1e-6))
    });

    checks.run("k_gaussian_origin", || {
        let est = apply_k(|v| (-v.norm_sq()).exp(), &Velocity::ZERO, &m.k, cfg.quad_tol.max(1e-12))?;
        let exact = 2.0 * PI * m.k.c_amp() / (m.k.c_decay() + 1.0);
        Ok(Measured::within(est.value, exact, 1e-6))
    });

    checks.run("bounded_case_constant", || {
        Ok(Measured::within(
            bounded_case_constant(&m.grid, &m.nu),
            SQRT_2 / cfg.nu0,
            1e-6,
        ))
    });

    checks.run("manufactured_solution", || {
        let case = ManufacturedCase::gaussian(Some(m.k), m.nu);
        let r = manufactured_solution_check(&case, &default_test_set(), cfg.quad_tol.max(1e-12))?;
        Ok(Measured::within(r.max_residual, 0.0, 1e-6))
    });

    let pass = checks.records.iter().all(|r| r.pass);
    for r in checks.records.iter().filter(|r| !r.pass) {
        eprintln!(
            "check `{}` failed: measured {:e}, target {:e}, tolerance {:e}{}",
            r.name,
            r.measured,
            r.target,
            r.tolerance,
            r.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
        );
    }
    let report = VerificationReport {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        checks: checks.records,
        pass,
    };
    write_json(&out.join("verify_report.json"), &report)?;
    Ok(pass)
}

#[derive(Serialize)]
struct SweepVerdict<'a> {
    q: f64,
    fitted_slope: f64,
    target: f64,
    tolerance: f64,
    lq_norm: f64,
    reasons: &'a [String],
    codim: Option<&'a CodimReport>,
    pass: bool,
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let m = models(cfg)?;
    let report = alpha_sweep(cfg.q, cfg.alpha_min, cfg.alpha_max, cfg.n_points, &m.nu).map_err(usage)?;
    let rows: Vec<Vec<f64>> = (0..report.alphas.len())
        .map(|i| {
            let (a, w) = (report.alphas[i], report.weighted_probe_values[i]);
            vec![a, report.probe_values[i], w, report.lq_norms[i], a.ln(), w.ln()]
        })
        .collect();
    write_csv(
        &out.join("sweep.csv"),
        &[
            "alpha",
            "probe",
            "weighted_probe",
            "lq_norm",
            "log_alpha",
            "log_weighted_probe",
        ],
        &rows,
    )?;

    let codim = if cfg.codim {
        let functionals = moment_functionals(0.0, Velocity::from([0.3, 0.2, 0.1]));
        Some(finite_codim_combination(
            &functionals,
            &default_codim_alphas(),
            cfg.q,
            cfg.codim_scales,
            &m.nu,
        )?)
    } else {
        None
    };
    let mut reasons = report.verdict.reasons.clone();
    if let Some(c) = &codim {
        reasons.extend(c.verdict.reasons.iter().map(|r| format!("finite codimension: {r}")));
    }
    let pass = reasons.is_empty();
    let verdict = SweepVerdict {
        q: cfg.q,
        fitted_slope: report.fitted_slope,
        target: report.slope_target,
        tolerance: report.slope_tol,
        lq_norm: report.lq_norms[0],
        reasons: &reasons,
        codim: codim.as_ref(),
        pass,
    };
    write_json(&out.join("sweep_verdict.json"), &verdict)?;
    for r in &reasons {
        eprintln!("sweep check failed: {r}");
    }
    Ok(pass)
}

#[derive(Serialize)]
struct Check {
    measured: f64,
    target: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct SigmaVerdict {
    /// Smallest θ of the profile.
    theta: f64,
    /// `σ(θ)θ` there against the configured target (relative tolerance).
    sigma_times_theta: Check,
    /// Whether `σ` is nonincreasing along the profile.
    monotone: bool,
    /// `(I(ε_last) - I(ε_first)) / (I(ε_mid) - I(ε_first))`, 2 for logarithmic growth.
    divergence_ratio: Check,
    /// Mean increment of `∫_ε¹ σ` per halving of `ε`, for reference.
    mean_increment_per_halving: f64,
    pass: bool,
}

pub fn profile_sigma(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let m = models(cfg)?;
    let thetas = log_spaced(cfg.theta_min, cfg.theta_max, cfg.theta_points);
    let profile = thetas
        .iter()
        .map(|&t| sigma_profile(t, &m.grid, &m.nu))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let rows: Vec<Vec<f64>> = profile
        .iter()
        .map(|e| vec![e.theta, e.sigma, e.sigma * e.theta, e.tail_limit])
        .collect();
    write_csv(
        &out.join("sigma_profile.csv"),
        &["theta", "sigma", "sigma_times_theta", "tail_limit"],
        &rows,
    )?;

    let table = sigma_integral_divergence(&cfg.eps_list, &m.grid, &m.nu).map_err(usage)?;
    let mut prev = 0.0;
    let rows: Vec<Vec<f64>> = table
        .iter()
        .map(|r| {
            let inc = r.integral - prev;
            prev = r.integral;
            vec![r.eps, r.integral, inc]
        })
        .collect();
    write_csv(
        &out.join("sigma_integral.csv"),
        &["eps", "integral", "increment"],
        &rows,
    )?;

    let first = &profile[0];
    let st = first.sigma * first.theta;
    let st_check = Check {
        measured: st,
        target: cfg.sigma_target,
        tolerance: cfg.sigma_tol,
        pass: (st / cfg.sigma_target - 1.0).abs() <= cfg.sigma_tol,
    };
    let monotone = profile.windows(2).all(|w| w[1].sigma <= w[0].sigma);
    let last = table.len() - 1;
    let mid = last / 2;
    let ratio = (table[last].integral - table[0].integral) / (table[mid].integral - table[0].integral);
    let expected = (cfg.eps_list[0] / cfg.eps_list[last]).ln() / (cfg.eps_list[0] / cfg.eps_list[mid]).ln();
    let ratio_check = Check {
        measured: ratio,
        target: expected,
        tolerance: cfg.divergence_ratio_tol,
        pass: (ratio / expected - 1.0).abs() <= cfg.divergence_ratio_tol,
    };
    let halvings = (cfg.eps_list[0] / cfg.eps_list[last]).ln() / LN_2;
    let mean_increment_per_halving = (table[last].integral - table[0].integral) / halvings;
    let pass = st_check.pass && monotone && ratio_check.pass;
    if !st_check.pass {
        eprintln!(
            "sigma check failed: sigma*theta = {st} at theta = {}, target {} (relative tolerance {})",
            first.theta, cfg.sigma_target, cfg.sigma_tol
        );
    }
    if !monotone {
        eprintln!("sigma check failed: profile is not nonincreasing");
    }
    if !ratio_check.pass {
        eprintln!("sigma check failed: divergence ratio {ratio}, expected {expected}");
    }
    let verdict = SigmaVerdict {
        theta: first.theta,
        sigma_times_theta: st_check,
        monotone,
        divergence_ratio: ratio_check,
        mean_increment_per_halving,
        pass,
    };
    write_json(&out.join("sigma_verdict.json"), &verdict)?;
    Ok(pass)
}

#[derive(Serialize)]
struct GapVerdict<'a> {
    fitted_slope: f64,
    target: f64,
    tolerance: f64,
    reasons: &'a [String],
    pass: bool,
}

pub fn gap_demo(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let table = ly2_gap_sweep(&cfg.xi1_list).map_err(usage)?;
    let rows: Vec<Vec<f64>> = table.xi1.iter().zip(&table.ratio).map(|(a, r)| vec![*a, *r]).collect();
    write_csv(&out.join("gap.csv"), &["xi1", "ratio"], &rows)?;
    let verdict = GapVerdict {
        fitted_slope: table.fitted_slope,
        target: table.slope_target,
        tolerance: table.slope_tol,
        reasons: &table.verdict.reasons,
        pass: table.verdict.pass,
    };
    write_json(&out.join("gap_verdict.json"), &verdict)?;
    for r in &table.verdict.reasons {
        eprintln!("gap check failed: {r}");
    }
    Ok(table.verdict.pass)
}
