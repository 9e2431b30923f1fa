//! The test family `g_α(x, ξ) = ⟨ξ⟩⁻² α^{-1/q} e^{-|x|/α}` and the quantities
//! that witness unboundedness of `𝒮` from `L^q(ℝ, L∞_2)` to `L∞(ℝ, L∞_3)`.
//!
//! The probe is `𝒮g_α` at `x = 0`, `ξ_α = (α, 1, 0)`. Its closed form grows
//! like `α^{-1/q}` while `‖g_α‖` stays fixed, so a log-log fit of the weighted
//! probe against `α` has slope `-1/q`.

mod codim;
mod manufactured;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::regression::fit_log_log;
use crate::transport::{SpatialProfile, TransportKernel};
use crate::velocity::{CollisionFrequencyModel, Velocity};

pub use codim::{
    default_codim_alphas, finite_codim_combination, moment_functionals, null_vector, CodimConstruction, CodimReport,
    Functional, FunctionalTerm, NullVector, CODIM_SLOPE_TOL, NULL_RESIDUAL_TOL,
};
pub use manufactured::{default_test_set, manufactured_solution_check, ManufacturedCase, ManufacturedResult};

/// Slope tolerance of [`alpha_sweep`].
pub const SWEEP_SLOPE_TOL: f64 = 0.02;

/// Allowed relative spread of the L^q norms across a sweep.
pub const NORM_SPREAD_TOL: f64 = 1e-10;

/// Slope tolerance of [`ly2_gap_sweep`].
pub const GAP_SLOPE_TOL: f64 = 1e-3;

/// Parameters of one member `g_α` of the test family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFamilyParams {
    alpha: f64,
    q: f64,
}

impl TestFamilyParams {
    pub fn new(alpha: f64, q: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(invalid("alpha", format!("must be positive, got {alpha}")));
        }
        if !(q.is_finite() && q >= 1.0) {
            return Err(invalid("q", format!("must be finite and at least 1, got {q}")));
        }
        Ok(Self { alpha, q })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `α^{-1/q}`, the spatial amplitude.
    pub fn amplitude(&self) -> f64 {
        self.alpha.powf(-1.0 / self.q)
    }

    /// The spatial factor `α^{-1/q} e^{-|x|/α}`.
    pub fn spatial_profile(&self) -> SpatialProfile {
        SpatialProfile::TwoSidedExponential {
            amplitude: self.amplitude(),
            rate: self.alpha,
        }
    }

    /// The probe velocity `ξ_α = (α, 1, 0)`.
    pub fn probe_velocity(&self) -> Velocity {
        Velocity::from([self.alpha, 1.0, 0.0])
    }
}

pub fn g_alpha_eval(p: &TestFamilyParams, x: f64, xi: &Velocity) -> f64 {
    p.spatial_profile().value(x) / (1.0 + xi.norm_sq())
}

/// `‖g_α‖_{L^q(ℝ, L∞_2)} = 2·(2/q)^{1/q}`, independent of `α`.
///
/// The velocity sup of `(1+|ξ|)²⟨ξ⟩⁻²` is 2, reached at `|ξ| = 1`.
pub fn g_alpha_lq_norm(p: &TestFamilyParams) -> f64 {
    2.0 * (2.0 / p.q).powf(1.0 / p.q)
}

/// `(𝒮g_α)(0, ξ_α) = ⟨ξ_α⟩⁻² α^{-1/q} / (ν(ξ_α) + 1)`.
pub fn probe_value(p: &TestFamilyParams, model: &CollisionFrequencyModel) -> f64 {
    let xi = p.probe_velocity();
    p.amplitude() / ((1.0 + xi.norm_sq()) * (model.nu(&xi) + 1.0))
}

/// `(1+|ξ_α|)³ (𝒮g_α)(0, ξ_α)`, a lower bound on `‖𝒮g_α(0,·)‖_{L∞_3}`.
pub fn weighted_probe_value(p: &TestFamilyParams, model: &CollisionFrequencyModel) -> f64 {
    (1.0 + p.probe_velocity().norm()).powi(3) * probe_value(p, model)
}

/// The probe computed through the general resolvent instead of the formula
/// in [`probe_value`].
pub fn probe_value_via_resolvent(p: &TestFamilyParams, model: &CollisionFrequencyModel) -> Result<f64> {
    let xi = p.probe_velocity();
    let profile = p.spatial_profile();
    let s = TransportKernel::new(*model).apply_exponential(&profile, &xi, 0.0)?;
    Ok(s / (1.0 + xi.norm_sq()))
}

/// `(𝒮g_c)(0, ξ)` for `g_c = Σ c_j g_{α_j}`, by linearity.
pub(crate) fn probe_value_via_resolvent_sum(
    params: &[TestFamilyParams],
    c: &[f64],
    xi: &Velocity,
    model: &CollisionFrequencyModel,
) -> Result<f64> {
    let kernel = TransportKernel::new(*model);
    let mut total = 0.0;
    for (p, cj) in params.iter().zip(c) {
        total += cj * kernel.apply_exponential(&p.spatial_profile(), xi, 0.0)?;
    }
    Ok(total / (1.0 + xi.norm_sq()))
}

/// Pass/fail with the reasons for failure (empty when passing).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub reasons: Vec<String>,
}

impl Verdict {
    pub fn from_reasons(reasons: Vec<String>) -> Self {
        Self {
            pass: reasons.is_empty(),
            reasons,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub q: f64,
    pub alphas: Vec<f64>,
    pub probe_values: Vec<f64>,
    pub weighted_probe_values: Vec<f64>,
    pub lq_norms: Vec<f64>,
    pub fitted_slope: f64,
    pub slope_target: f64,
    pub slope_tol: f64,
    pub verdict: Verdict,
}

/// Geometric sequence from `hi` down to `lo`, `n ≥ 2` points, endpoints exact.
///
/// Built as `hi·rⁱ`, so a ratio that is a power of two gives exact values.
pub fn geometric_decreasing(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![hi; n];
    }
    let r = (lo / hi).powf(1.0 / (n - 1) as f64);
    (0..n)
        .map(|i| if i + 1 == n { lo } else { hi * r.powi(i as i32) })
        .collect()
}

/// Probes `g_α` on `n_points` geometrically spaced `α` from `alpha_max` down
/// to `alpha_min` and fits the log-log slope of the weighted probe.
pub fn alpha_sweep(
    q: f64,
    alpha_min: f64,
    alpha_max: f64,
    n_points: usize,
    model: &CollisionFrequencyModel,
) -> Result<SweepReport> {
    if n_points < 2 {
        return Err(Error::DegenerateFit { distinct: n_points });
    }
    if n_points < 4 {
        return Err(invalid("n_points", format!("need at least 4, got {n_points}")));
    }
    if !(alpha_min > 0.0 && alpha_min < alpha_max && alpha_max.is_finite()) {
        return Err(invalid(
            "alpha_min",
            format!("need 0 < alpha_min < alpha_max, got {alpha_min}, {alpha_max}"),
        ));
    }
    let alphas = geometric_decreasing(alpha_min, alpha_max, n_points);
    let params = alphas
        .iter()
        .map(|&a| TestFamilyParams::new(a, q))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<(f64, f64, f64)> = params
        .par_iter()
        .map(|p| {
            (
                probe_value(p, model),
                weighted_probe_value(p, model),
                g_alpha_lq_norm(p),
            )
        })
        .collect();
    let probe_values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let weighted_probe_values: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let lq_norms: Vec<f64> = rows.iter().map(|r| r.2).collect();

    let fit = fit_log_log(&alphas, &weighted_probe_values)?;
    let slope_target = -1.0 / q;
    let mut reasons = Vec::new();
    if !((fit.slope - slope_target).abs() <= SWEEP_SLOPE_TOL) {
        reasons.push(format!(
            "fitted slope {} differs from {} by more than {}",
            fit.slope, slope_target, SWEEP_SLOPE_TOL
        ));
    }
    let spread = norm_spread(&lq_norms);
    if !(spread <= NORM_SPREAD_TOL) {
        reasons.push(format!("L^q norms vary by {spread} across the sweep"));
    }
    Ok(SweepReport {
        q,
        alphas,
        probe_values,
        weighted_probe_values,
        lq_norms,
        fitted_slope: fit.slope,
        slope_target,
        slope_tol: SWEEP_SLOPE_TOL,
        verdict: Verdict::from_reasons(reasons),
    })
}

/// `max/min - 1` of positive values.
fn norm_spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min - 1.0
}

/// `(1+|ξ|)/|ξ₁|`.
pub fn ly2_gap_ratio(xi: &Velocity) -> Result<f64> {
    let xi1 = xi.transport_component()?;
    Ok((1.0 + xi.norm()) / xi1.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapTable {
    pub xi1: Vec<f64>,
    pub ratio: Vec<f64>,
    pub fitted_slope: f64,
    pub slope_target: f64,
    pub slope_tol: f64,
    pub verdict: Verdict,
}

/// `ξ₁ = 10^{-k/2}`, `k = 4..=12`.
pub fn default_gap_xi1() -> Vec<f64> {
    (4..=12).map(|k| 10f64.powf(-(k as f64) / 2.0)).collect()
}

/// Tabulates [`ly2_gap_ratio`] along `ξ = (ξ₁, 1, 0)` and fits its log-log
/// slope in `ξ₁`. The list must be positive and strictly decreasing.
pub fn ly2_gap_sweep(xi1_list: &[f64]) -> Result<GapTable> {
    if xi1_list.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(invalid("xi1", "values must be positive and finite"));
    }
    if xi1_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("xi1", "values must be strictly decreasing"));
    }
    let ratio = xi1_list
        .iter()
        .map(|&v| ly2_gap_ratio(&Velocity::from([v, 1.0, 0.0])))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_log_log(xi1_list, &ratio)?;
    let mut reasons = Vec::new();
    if !((fit.slope + 1.0).abs() <= GAP_SLOPE_TOL) {
        reasons.push(format!(
            "fitted slope {} differs from -1 by more than {}",
            fit.slope, GAP_SLOPE_TOL
        ));
    }
    Ok(GapTable {
        xi1: xi1_list.to_vec(),
        ratio,
        fitted_slope: fit.slope,
        slope_target: -1.0,
        slope_tol: GAP_SLOPE_TOL,
        verdict: Verdict::from_reasons(reasons),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_with_breaks, QuadOptions};
    use crate::transport::bounded_case_constant;
    use crate::velocity::{weighted_sup_norm, VelocityGrid, WeightOrder};
    use proptest::prelude::*;

    fn unit() -> CollisionFrequencyModel {
        CollisionFrequencyModel::default()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn g_alpha_examples() {
        let p = TestFamilyParams::new(1.0, 3.0).unwrap();
        assert_eq!(g_alpha_eval(&p, 0.0, &Velocity::ZERO), 1.0);
        let v = Velocity::from([0.0, 3f64.sqrt(), 0.0]);
        assert!(close(g_alpha_eval(&p, 0.0, &v), 0.25, 1e-15));
        let p = TestFamilyParams::new(0.01, 2.0).unwrap();
        assert!(close(
            g_alpha_eval(&p, 0.01, &Velocity::ZERO),
            10.0 / std::f64::consts::E,
            1e-15
        ));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(TestFamilyParams::new(0.0, 2.0).is_err());
        assert!(TestFamilyParams::new(1.0, 0.5).is_err());
        assert!(TestFamilyParams::new(1.0, f64::INFINITY).is_err());
    }

    /// `2 · (2 ∫₀^∞ |α^{-1/q} e^{-x/α}|^q dx)^{1/q}` by quadrature, with the
    /// velocity sup taken over a fine radial scan.
    fn lq_norm_oracle(p: &TestFamilyParams) -> f64 {
        let sup = (0..=200_000)
            .map(|i| {
                let t = i as f64 * 1e-4;
                (1.0 + t).powi(2) / (1.0 + t * t)
            })
            .fold(0.0, f64::max);
        let a = p.alpha();
        let f = |x: f64| p.spatial_profile().value(x).powf(p.q());
        let breaks: Vec<f64> = (0..=8).map(|k| a * 8f64.powi(k) / 8.0).collect();
        let mut pts = vec![0.0];
        pts.extend(breaks.iter().copied().filter(|&b| b < 200.0 * a));
        pts.push(200.0 * a);
        let int = integrate_with_breaks(f, &pts, &QuadOptions::with_tol(1e-13 * p.amplitude().powf(p.q()) * a))
            .unwrap()
            .value;
        sup * (2.0 * int).powf(1.0 / p.q())
    }

    #[test]
    fn lq_norm_matches_quadrature() {
        for (q, exact) in [(1.0, 4.0), (2.0, 2.0)] {
            let p = TestFamilyParams::new(0.3, q).unwrap();
            assert!(close(g_alpha_lq_norm(&p), exact, 1e-15));
            assert!(close(lq_norm_oracle(&p), exact, 1e-9));
        }
        for q in [1.0, 1.5, 2.0, 4.0] {
            let base = g_alpha_lq_norm(&TestFamilyParams::new(1.0, q).unwrap());
            for a in [1.0, 1e-2, 1e-6] {
                let p = TestFamilyParams::new(a, q).unwrap();
                assert!((g_alpha_lq_norm(&p) - base).abs() <= 1e-12);
                assert!(close(lq_norm_oracle(&p), base, 1e-9), "q={q} a={a}");
            }
        }
    }

    #[test]
    fn probe_examples() {
        let p = TestFamilyParams::new(1e-4, 2.0).unwrap();
        let a2 = 1e-8;
        let exact = 100.0 / ((2.0 + a2) * ((2.0f64 + a2).sqrt() + 1.0));
        assert!(close(probe_value(&p, &unit()), exact, 1e-14));
        assert!(close(
            probe_value(&p, &unit()),
            100.0 / (2.0 * (2f64.sqrt() + 1.0)),
            1e-6
        ));
        assert!(close(probe_value_via_resolvent(&p, &unit()).unwrap(), exact, 1e-13));

        let limit = 1.0 / (2.0 * (2f64.sqrt() + 1.0));
        let p = TestFamilyParams::new(2f64.powi(-40), 3.0).unwrap();
        assert!(close(
            probe_value(&p, &unit()) * p.alpha().powf(1.0 / 3.0),
            limit,
            1e-12
        ));
    }

    #[test]
    fn probe_matches_displacement_quadrature() {
        let kernel = TransportKernel::new(unit());
        for (a, q) in [(0.5, 1.0), (1e-2, 2.0), (1e-3, 4.0)] {
            let p = TestFamilyParams::new(a, q).unwrap();
            let xi = p.probe_velocity();
            let prof = p.spatial_profile();
            let s = kernel.apply_fn(|y| prof.value(y), &xi, 0.0, &[0.0], 1e-13).unwrap();
            let quad = s / (1.0 + xi.norm_sq());
            assert!(close(quad, probe_value(&p, &unit()), 1e-10), "{quad}");
        }
    }

    #[test]
    fn probe_ratio_across_q() {
        for a in [0.7, 1e-3, 1e-9] {
            let p1 = TestFamilyParams::new(a, 1.5).unwrap();
            let p2 = TestFamilyParams::new(a, 4.0).unwrap();
            let ratio = probe_value(&p1, &unit()) / probe_value(&p2, &unit());
            assert!(close(ratio, a.powf(1.0 / 4.0 - 1.0 / 1.5), 1e-13));
        }
    }

    #[test]
    fn sweep_slopes() {
        for q in [1.0, 2.0, 4.0] {
            let r = alpha_sweep(q, 2f64.powi(-14), 2f64.powi(-4), 11, &unit()).unwrap();
            assert!(r.verdict.pass, "{:?}", r.verdict);
            assert!((r.fitted_slope + 1.0 / q).abs() <= 0.02);
            assert_eq!(r.alphas.len(), 11);
            assert!(r.alphas.windows(2).all(|w| w[1] < w[0]));
            assert_eq!(r.alphas[0], 2f64.powi(-4));
        }
    }

    #[test]
    fn sweep_rejects_bad_input() {
        assert!(matches!(
            alpha_sweep(2.0, 1e-3, 1e-1, 1, &unit()),
            Err(Error::DegenerateFit { .. })
        ));
        assert!(alpha_sweep(2.0, 1e-3, 1e-1, 3, &unit()).is_err());
        assert!(alpha_sweep(2.0, 1e-1, 1e-3, 5, &unit()).is_err());
    }

    #[test]
    fn gap_examples() {
        assert_eq!(ly2_gap_ratio(&Velocity::from([1.0, 0.0, 0.0])).unwrap(), 2.0);
        let r = ly2_gap_ratio(&Velocity::from([1e-6, 1.0, 0.0])).unwrap();
        assert!(close(r, (1.0 + (1.0f64 + 1e-12).sqrt()) / 1e-6, 1e-15));
        assert!(close(r, 2e6, 1e-9));
        assert!(ly2_gap_ratio(&Velocity::from([0.0, 1.0, 0.0])).is_err());
        let t = ly2_gap_sweep(&default_gap_xi1()).unwrap();
        assert!(t.verdict.pass, "{}", t.fitted_slope);
        assert!(ly2_gap_sweep(&[1e-3]).is_err());
        assert!(ly2_gap_sweep(&[1e-3, 1e-2]).is_err());
    }

    #[test]
    fn weighted_probe_below_grid_sup() {
        let model = unit();
        let kernel = TransportKernel::new(model);
        let r3 = WeightOrder::new(3.0).unwrap();
        for a in [0.25, 1e-2, 1e-4] {
            let p = TestFamilyParams::new(a, 2.0).unwrap();
            let grid = VelocityGrid::default();
            let mut nodes: Vec<Velocity> = grid.nodes().to_vec();
            nodes.push(p.probe_velocity());
            let samples: Vec<(Velocity, f64)> = nodes
                .iter()
                .filter(|v| v.xi1 != 0.0)
                .map(|v| {
                    let s = kernel.apply_exponential(&p.spatial_profile(), v, 0.0).unwrap();
                    (*v, s / (1.0 + v.norm_sq()))
                })
                .collect();
            let sup = weighted_sup_norm(&samples, r3).unwrap();
            assert!(sup >= weighted_probe_value(&p, &model));
        }
    }

    /// With `q = ∞` (unit spatial amplitude) the weighted output is bounded
    /// by `√2` times the `L∞(ℝ, L∞_2)` norm of the input, which is 2.
    #[test]
    fn q_infinity_control_is_bounded() {
        let model = unit();
        let kernel = TransportKernel::new(model);
        let bound = bounded_case_constant(&VelocityGrid::default(), &model);
        assert!((bound - 2f64.sqrt()).abs() < 1e-6);
        for a in [1.0, 1e-2, 1e-4, 1e-8] {
            let prof = SpatialProfile::exponential(1.0, a).unwrap();
            let xi = Velocity::from([a, 1.0, 0.0]);
            let out =
                (1.0 + xi.norm()).powi(3) * kernel.apply_exponential(&prof, &xi, 0.0).unwrap() / (1.0 + xi.norm_sq());
            assert!(out <= bound * 2.0, "a={a} out={out}");
        }
    }

    proptest! {
        #[test]
        fn probe_increases_as_alpha_decreases(a in 1e-8f64..10.0, f in 0.01f64..0.99, q in 1.0f64..8.0) {
            let big = TestFamilyParams::new(a, q).unwrap();
            let small = TestFamilyParams::new(a * f, q).unwrap();
            prop_assert!(probe_value(&small, &unit()) > probe_value(&big, &unit()));
        }

        #[test]
        fn slope_identity(q1 in 1.0f64..8.0, q2 in 1.0f64..8.0, n in 4usize..20) {
            let a = alpha_sweep(q1, 2f64.powi(-14), 2f64.powi(-4), n, &unit()).unwrap();
            let b = alpha_sweep(q2, 2f64.powi(-14), 2f64.powi(-4), n, &unit()).unwrap();
            prop_assert!((a.fitted_slope - b.fitted_slope - (1.0 / q2 - 1.0 / q1)).abs() <= 1e-6);
        }

        #[test]
        fn resolvent_and_formula_agree(a in 1e-10f64..5.0, q in 1.0f64..6.0, nu0 in 0.2f64..5.0) {
            let model = CollisionFrequencyModel::new(nu0).unwrap();
            let p = TestFamilyParams::new(a, q).unwrap();
            prop_assert!(close(probe_value_via_resolvent(&p, &model).unwrap(), probe_value(&p, &model), 1e-12));
        }
    }
}
