//! Model collision operator `K` with the Grad-bound kernel
//! `k(ξ, ξ*) = C |ξ-ξ*|⁻¹ e^{-c|ξ-ξ*|²}`.
//!
//! `(Kf)(ξ)` is computed in spherical coordinates centred at `ξ`: with
//! `ξ* = ξ + ρω` the volume element `ρ²dρdω` cancels the `ρ⁻¹` singularity
//! and the integrand becomes `C ρ e^{-cρ²} f(ξ + ρω)`. The radial integral
//! is cut at `R = 6/√c`, where `e^{-cR²} = e^{-36}`.
//!
//! The product rule uses Gauss–Legendre in `ρ` (split at `ρ = |ξ|`, where
//! `ξ*` can reach the origin), Gauss–Legendre in the polar direction about
//! `ξ`, and the periodic trapezoid rule in azimuth. The polar variable is the
//! distance `|ξ*|`, which runs over `[|a-ρ|, a+ρ]` for `a = |ξ|`; weights like
//! `(1+|ξ*|)^{-r}` are then smooth on every panel. The order is doubled until
//! two successive results agree to the requested tolerance.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{gauss_legendre, gauss_legendre_on};
use crate::velocity::{radial_sup, radial_weight, Velocity, VelocityGrid, WeightOrder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradKernelModel {
    c_amp: f64,
    c_decay: f64,
}

impl Default for GradKernelModel {
    fn default() -> Self {
        Self {
            c_amp: 1.0,
            c_decay: 1.0,
        }
    }
}

impl GradKernelModel {
    pub fn new(c_amp: f64, c_decay: f64) -> Result<Self> {
        if !(c_amp.is_finite() && c_amp > 0.0) {
            return Err(invalid("c_amp", format!("must be positive, got {c_amp}")));
        }
        if !(c_decay.is_finite() && c_decay > 0.0) {
            return Err(invalid("c_decay", format!("must be positive, got {c_decay}")));
        }
        Ok(Self { c_amp, c_decay })
    }

    pub fn c_amp(&self) -> f64 {
        self.c_amp
    }

    pub fn c_decay(&self) -> f64 {
        self.c_decay
    }

    /// `k` as a function of `ρ = |ξ-ξ*| > 0`.
    pub fn radial(&self, rho: f64) -> f64 {
        self.c_amp / rho * (-self.c_decay * rho * rho).exp()
    }

    pub fn eval(&self, xi: &Velocity, xi_star: &Velocity) -> Result<f64> {
        let rho = xi.sub(xi_star).norm();
        if rho == 0.0 {
            return Err(Error::CoincidentVelocities);
        }
        Ok(self.radial(rho))
    }

    /// Radial cutoff of the quadrature.
    pub fn cutoff(&self) -> f64 {
        6.0 / self.c_decay.sqrt()
    }

    /// `∫ k(ξ, ξ*) dξ* = 2πC/c`, independent of `ξ`.
    pub fn total_mass(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.c_amp / self.c_decay
    }
}

pub fn k_eval(xi: &Velocity, xi_star: &Velocity, model: &GradKernelModel) -> Result<f64> {
    model.eval(xi, xi_star)
}

/// Result of [`apply_k`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KEstimate {
    pub value: f64,
    /// Difference between the last two orders.
    pub error: f64,
    /// Per-direction order of the accepted rule.
    pub order: usize,
}

const START_ORDER: usize = 8;
const MAX_ORDER: usize = 128;

/// Orthonormal frame whose first vector is the direction of `xi`.
fn frame(xi: &Velocity) -> [[f64; 3]; 3] {
    let n = xi.norm();
    let e = if n > 0.0 {
        [xi.xi1 / n, xi.xi2 / n, xi.xi3 / n]
    } else {
        [0.0, 0.0, 1.0]
    };
    // Pick the coordinate axis least aligned with e.
    let pick = if e[0].abs() <= e[1].abs() && e[0].abs() <= e[2].abs() {
        [1.0, 0.0, 0.0]
    } else if e[1].abs() <= e[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let dot = e[0] * pick[0] + e[1] * pick[1] + e[2] * pick[2];
    let mut a = [pick[0] - dot * e[0], pick[1] - dot * e[1], pick[2] - dot * e[2]];
    let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    a.iter_mut().for_each(|c| *c /= na);
    let b = [
        e[1] * a[2] - e[2] * a[1],
        e[2] * a[0] - e[0] * a[2],
        e[0] * a[1] - e[1] * a[0],
    ];
    [e, a, b]
}

/// Polar cosine and weight for the Gauss node `x` on `[-1, 1]`, with the
/// distance `|ξ*| = s` as the integration variable:
/// `s² = a² + ρ² + 2aρu`, `du = s ds / (aρ)`. The two branches are the same
/// map written without cancellation for `ρ ≥ a` and `ρ < a`.
fn polar_node(a: f64, rho: f64, x: f64, w_x: f64) -> (f64, f64) {
    let (u, du_dx) = if rho >= a {
        let s = rho + a * x;
        ((2.0 * rho * x + a * x * x - a) / (2.0 * rho), s / rho)
    } else {
        let s = a + rho * x;
        ((2.0 * a * x + rho * x * x - rho) / (2.0 * a), s / a)
    };
    (u.clamp(-1.0, 1.0), w_x * du_dx)
}

fn apply_k_fixed<F: Fn(&Velocity) -> f64>(f: &F, xi: &Velocity, model: &GradKernelModel, order: usize) -> f64 {
    let cutoff = model.cutoff();
    let split = xi.norm();
    let mut radial = Vec::with_capacity(2 * order);
    if split > 0.0 && split < cutoff {
        radial.extend(gauss_legendre_on(order, 0.0, split));
        radial.extend(gauss_legendre_on(order, split, cutoff));
    } else {
        radial.extend(gauss_legendre_on(order, 0.0, cutoff));
    }
    let (xs, wxs) = gauss_legendre(order);
    let n_az = 2 * order;
    let w_az = std::f64::consts::TAU / n_az as f64;
    let azimuth: Vec<(f64, f64)> = (0..n_az)
        .map(|k| {
            let phi = w_az * k as f64;
            (phi.cos(), phi.sin())
        })
        .collect();
    let [e, a, b] = frame(xi);
    let x0 = xi.as_array();

    let mut total = 0.0;
    for &(rho, w_rho) in &radial {
        let radial_factor = w_rho * rho * (-model.c_decay * rho * rho).exp();
        let mut shell = 0.0;
        for (&x, &w_x) in xs.iter().zip(&wxs) {
            let (u, w_u) = polar_node(split, rho, x, w_x);
            let s = (1.0 - u * u).max(0.0).sqrt();
            let mut ring = 0.0;
            for &(c, sn) in &azimuth {
                let dir = [
                    u * e[0] + s * (c * a[0] + sn * b[0]),
                    u * e[1] + s * (c * a[1] + sn * b[1]),
                    u * e[2] + s * (c * a[2] + sn * b[2]),
                ];
                let p = Velocity::from([x0[0] + rho * dir[0], x0[1] + rho * dir[1], x0[2] + rho * dir[2]]);
                ring += f(&p);
            }
            shell += w_u * ring;
        }
        total += radial_factor * shell;
    }
    model.c_amp * w_az * total
}

/// `(Kf)(ξ) = ∫ k(ξ, ξ*) f(ξ*) dξ*`, doubling the order from 8 until two
/// successive rules agree to `tol` (absolute).
pub fn apply_k<F: Fn(&Velocity) -> f64>(f: F, xi: &Velocity, model: &GradKernelModel, tol: f64) -> Result<KEstimate> {
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let mut order = START_ORDER;
    let mut prev = apply_k_fixed(&f, xi, model, order);
    let mut err = f64::INFINITY;
    while order < MAX_ORDER {
        order *= 2;
        let next = apply_k_fixed(&f, xi, model, order);
        err = (next - prev).abs();
        prev = next;
        if err <= tol {
            return Ok(KEstimate {
                value: next,
                error: err,
                order,
            });
        }
    }
    Err(Error::QuadratureNotConverged {
        estimate: err,
        target: tol,
    })
}

/// Weighted operator-norm estimate of `K` on `L∞_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorNormEstimate {
    pub value: f64,
    /// `|ξ|` where the sup was found.
    pub argmax_radius: f64,
    /// Value at `ξ = 0`, a lower bound independent of the grid.
    pub at_origin: f64,
}

/// `sup_ξ (1+|ξ|)^r (K(1+|·|)^{-r})(ξ)`, which for a positive kernel is the
/// `L∞_r` operator norm of `K`.
///
/// Both `k` and the weight are rotation invariant, so the function of `ξ`
/// depends on `|ξ|` only: it is scanned over the distinct grid radii
/// (evaluated at `(|ξ|, 0, 0)`) and refined by golden section.
pub fn k_opnorm_weighted(
    r: WeightOrder,
    model: &GradKernelModel,
    grid: &VelocityGrid,
    tol: f64,
) -> Result<OperatorNormEstimate> {
    let g = |t: f64| -> Result<f64> {
        let xi = Velocity::from([t, 0.0, 0.0]);
        let inner = apply_k(|p: &Velocity| radial_weight(p.norm(), r).recip(), &xi, model, tol)?;
        Ok(radial_weight(t, r) * inner.value)
    };
    let mut radii = vec![0.0];
    radii.extend(grid.radii());
    radii.dedup();
    // Surface quadrature failures from the scan before refining.
    radii
        .par_iter()
        .map(|&t| g(t).map(|_| ()))
        .collect::<Result<Vec<()>>>()?;
    let (argmax_radius, value) = radial_sup(|t| g(t).unwrap_or(f64::NEG_INFINITY), &radii, grid.r_max());
    Ok(OperatorNormEstimate {
        value,
        argmax_radius,
        at_origin: g(0.0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn unit() -> GradKernelModel {
        GradKernelModel::default()
    }

    #[test]
    fn kernel_examples() {
        let m = unit();
        let k = k_eval(&Velocity::from([1.0, 0.0, 0.0]), &Velocity::ZERO, &m).unwrap();
        assert!((k - 0.367_879_4).abs() < 1e-7);
        let shifted = k_eval(&Velocity::from([3.0, 2.0, -1.0]), &Velocity::from([3.0, 2.0, 0.0]), &m).unwrap();
        assert_eq!(k, shifted);
        let doubled = GradKernelModel::new(2.0, 1.0).unwrap();
        assert_eq!(
            k_eval(&Velocity::from([1.0, 0.0, 0.0]), &Velocity::ZERO, &doubled).unwrap(),
            2.0 * k
        );
        assert_eq!(
            k_eval(&Velocity::ZERO, &Velocity::ZERO, &m),
            Err(Error::CoincidentVelocities)
        );
        assert!(GradKernelModel::new(0.0, 1.0).is_err());
        assert!(GradKernelModel::new(1.0, -1.0).is_err());
    }

    /// 1D oracle for the radial reduction: 4πC ∫₀^∞ ρ e^{-cρ²} dρ = 2πC/c.
    #[test]
    fn radial_reduction_oracle() {
        use crate::quadrature::{integrate, QuadOptions};
        for (c_amp, c_decay) in [(1.0f64, 1.0f64), (0.5, 3.0), (2.0, 0.25)] {
            let q = integrate(
                |rho: f64| 4.0 * PI * c_amp * rho * (-c_decay * rho * rho).exp(),
                0.0,
                40.0 / c_decay.sqrt(),
                &QuadOptions::with_tol(1e-13),
            )
            .unwrap();
            let m = GradKernelModel::new(c_amp, c_decay).unwrap();
            assert!((q.value - m.total_mass()).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_to_constant_is_two_pi() {
        let m = unit();
        for xi in [
            Velocity::ZERO,
            Velocity::from([0.3, -2.0, 5.0]),
            Velocity::from([40.0, 0.0, 0.0]),
        ] {
            let est = apply_k(|_: &Velocity| 1.0, &xi, &m, 1e-10).unwrap();
            assert!((est.value - 2.0 * PI).abs() < 1e-9, "{xi:?}: {}", est.value);
        }
        let scaled = GradKernelModel::new(1.5, 2.0).unwrap();
        let est = apply_k(|_: &Velocity| 1.0, &Velocity::ZERO, &scaled, 1e-10).unwrap();
        assert!((est.value - 1.5 * PI).abs() < 1e-9);
    }

    #[test]
    fn apply_examples() {
        let m = unit();
        let zero = apply_k(|_: &Velocity| 0.0, &Velocity::from([1.0, 2.0, 3.0]), &m, 1e-10).unwrap();
        assert_eq!(zero.value, 0.0);
        let gauss = apply_k(|p: &Velocity| (-p.norm_sq()).exp(), &Velocity::ZERO, &m, 1e-10).unwrap();
        assert!((gauss.value - PI).abs() < 1e-9);
    }

    /// Off-centre Gaussian, reduced analytically to a 1D radial integral.
    ///
    /// For `f = e^{-|ξ*|²}` and `|ξ| = a`, averaging over the sphere gives
    /// `∫ k f = 2πC ∫₀^∞ e^{-cρ²} e^{-(a²+ρ²)} sinh(2aρ)/a dρ`.
    #[test]
    fn off_centre_gaussian_matches_radial_oracle() {
        use crate::quadrature::{integrate, QuadOptions};
        let m = unit();
        for a in [0.5f64, 1.7, 4.0] {
            let oracle = integrate(
                |rho: f64| 2.0 * PI * (-(rho * rho) - (a * a + rho * rho)).exp() * (2.0 * a * rho).sinh() / a,
                0.0,
                30.0,
                &QuadOptions::with_tol(1e-13),
            )
            .unwrap()
            .value;
            let xi = Velocity::from([0.0, a / 2f64.sqrt(), -a / 2f64.sqrt()]);
            let est = apply_k(|p: &Velocity| (-p.norm_sq()).exp(), &xi, &m, 1e-11).unwrap();
            assert!((est.value - oracle).abs() < 1e-9, "{a}: {} vs {oracle}", est.value);
        }
    }

    #[test]
    fn opnorm_unweighted_is_total_mass() {
        let grid = VelocityGrid::product(50.0, 6, 1).unwrap();
        let est = k_opnorm_weighted(WeightOrder::new(0.0).unwrap(), &unit(), &grid, 1e-9).unwrap();
        assert!((est.value - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn opnorm_dominates_origin_value() {
        let grid = VelocityGrid::product(50.0, 8, 2).unwrap();
        let est = k_opnorm_weighted(WeightOrder::new(3.0).unwrap(), &unit(), &grid, 1e-8).unwrap();
        assert!(est.value >= est.at_origin);
        assert!(est.value.is_finite());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn kernel_is_symmetric(a in prop::array::uniform3(-5.0..5.0f64), b in prop::array::uniform3(-5.0..5.0f64)) {
            let (x, y) = (Velocity::from(a), Velocity::from(b));
            prop_assume!(x != y);
            prop_assert_eq!(k_eval(&x, &y, &unit()).unwrap(), k_eval(&y, &x, &unit()).unwrap());
        }

        #[test]
        fn apply_is_positive_and_linear(
            center in prop::array::uniform3(-3.0..3.0f64),
            alpha in -2.0..2.0f64,
            beta in -2.0..2.0f64,
        ) {
            let xi = Velocity::from(center);
            let m = unit();
            let f = |p: &Velocity| (-0.5 * p.norm_sq()).exp();
            let g = |p: &Velocity| 1.0 / (1.0 + p.norm_sq());
            let kf = apply_k(f, &xi, &m, 1e-10).unwrap().value;
            let kg = apply_k(g, &xi, &m, 1e-10).unwrap().value;
            prop_assert!(kf >= 0.0 && kg >= 0.0);
            let kc = apply_k(|p: &Velocity| alpha * f(p) + beta * g(p), &xi, &m, 1e-10).unwrap().value;
            prop_assert!((kc - (alpha * kf + beta * kg)).abs() < 1e-8);
        }
    }
}
