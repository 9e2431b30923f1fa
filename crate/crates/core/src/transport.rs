//! The free-streaming resolvent `𝒮 = (ξ₁∂ₓ + ν(ξ))⁻¹`.
//!
//! For fixed `ξ` the resolvent is a convolution in `x` with
//!
//! ```text
//! S_ξ(θ) = |ξ₁|⁻¹ exp(-ν(ξ)|θ|/|ξ₁|)   if θξ₁ > 0,   0 otherwise,
//! ```
//!
//! so `(𝒮g)(x, ξ) = ∫ S_ξ(x-y) g(y, ξ) dy`. For `ξ₁ > 0` the solution only
//! sees data upstream (`y < x`), for `ξ₁ < 0` only downstream. `‖S_ξ‖_{L¹} = 1/ν(ξ)`.
//!
//! Closed forms are given for two-sided exponential and constant profiles;
//! everything else goes through adaptive quadrature in the displacement
//! `s = |x-y|`, where the support edge of the kernel is an endpoint.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{gauss_legendre_on, integrate_with_breaks, Estimate, QuadOptions};
use crate::search::golden_section_max;
use crate::velocity::{radial_sup, CollisionFrequencyModel, Velocity, VelocityGrid};

/// `κ·s` at which the kernel tail is dropped; `e^{-60} ≈ 8.8e-27`.
const TAIL_EXPONENT: f64 = 60.0;

/// The free-streaming kernel for a collision-frequency model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TransportKernel {
    pub model: CollisionFrequencyModel,
}

/// A one-dimensional profile in `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SpatialProfile {
    /// `amplitude · e^{-|x|/rate}`.
    TwoSidedExponential { amplitude: f64, rate: f64 },
    /// `amplitude`, the infinite-rate limit of the exponential, kept separate
    /// so the resolvent is `amplitude/ν` with no cancellation.
    Constant { amplitude: f64 },
    /// `amplitude · e^{-(x/width)²}`.
    Gaussian { amplitude: f64, width: f64 },
    /// Piecewise-linear interpolation of samples, zero outside the grid.
    Sampled(SampledProfile),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledProfile {
    xs: Vec<f64>,
    values: Vec<f64>,
}

impl SampledProfile {
    pub fn new(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.len() != values.len() || xs.len() < 2 {
            return Err(invalid("sampled profile", "need at least two (x, value) pairs"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("sampled profile", "x must be finite and strictly increasing"));
        }
        Ok(Self { xs, values })
    }

    /// Samples `f` on `n` equispaced points of `[lo, hi]`.
    pub fn from_fn<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(invalid("sampled profile", "need n >= 2 and lo < hi"));
        }
        let h = (hi - lo) / (n - 1) as f64;
        let xs: Vec<f64> = (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + h * i as f64 })
            .collect();
        let values = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, values)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return 0.0;
        }
        let i = self.xs.partition_point(|&p| p <= x).clamp(1, n - 1);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let w = (x - x0) / (x1 - x0);
        self.values[i - 1] * (1.0 - w) + self.values[i] * w
    }
}

impl SpatialProfile {
    pub fn exponential(amplitude: f64, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(invalid("rate", format!("must be positive, got {rate}")));
        }
        Ok(Self::TwoSidedExponential { amplitude, rate })
    }

    pub fn gaussian(amplitude: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(invalid("width", format!("must be positive, got {width}")));
        }
        Ok(Self::Gaussian { amplitude, width })
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::TwoSidedExponential { amplitude, rate } => amplitude * (-x.abs() / rate).exp(),
            Self::Constant { amplitude } => *amplitude,
            Self::Gaussian { amplitude, width } => amplitude * (-(x / width).powi(2)).exp(),
            Self::Sampled(s) => s.value(x),
        }
    }

    /// Closed-form `d/dx`. Sampled profiles have none; the exponential has a
    /// kink at the origin.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        match self {
            Self::TwoSidedExponential { rate, .. } => {
                if x == 0.0 {
                    Err(Error::NotDifferentiable { x })
                } else {
                    Ok(-x.signum() / rate * self.value(x))
                }
            }
            Self::Constant { .. } => Ok(0.0),
            Self::Gaussian { width, .. } => Ok(-2.0 * x / (width * width) * self.value(x)),
            Self::Sampled(_) => Err(Error::NotDifferentiable { x }),
        }
    }

    /// Interval outside which `|value| ≤ tol`, or `None` if unbounded.
    fn effective_support(&self, tol: f64) -> Option<(f64, f64)> {
        match self {
            Self::TwoSidedExponential { amplitude, rate } => {
                let l = rate * (amplitude.abs() / tol).max(1.0).ln() + rate;
                Some((-l, l))
            }
            Self::Constant { .. } => None,
            Self::Gaussian { amplitude, width } => {
                let l = width * ((amplitude.abs() / tol).max(1.0).ln() + 1.0).sqrt();
                Some((-l, l))
            }
            Self::Sampled(s) => Some((s.xs[0], s.xs[s.xs.len() - 1])),
        }
    }
}

impl TransportKernel {
    pub fn new(model: CollisionFrequencyModel) -> Self {
        Self { model }
    }

    /// `ν(ξ)/|ξ₁|`, the decay rate of the kernel in `|θ|`.
    pub fn decay_rate(&self, xi: &Velocity) -> Result<f64> {
        Ok(self.model.nu(xi) / xi.transport_component()?.abs())
    }

    pub fn eval(&self, xi: &Velocity, theta: f64) -> Result<f64> {
        let xi1 = xi.transport_component()?;
        if theta * xi1 <= 0.0 {
            return Ok(0.0);
        }
        Ok((-self.decay_rate(xi)? * theta.abs()).exp() / xi1.abs())
    }

    /// `‖S_ξ‖_{L¹(ℝ)} = 1/ν(ξ)`.
    pub fn l1_norm(&self, xi: &Velocity) -> Result<f64> {
        xi.transport_component()?;
        Ok(1.0 / self.model.nu(xi))
    }

    /// Adaptive quadrature of `|S_ξ|` over its support, as an independent
    /// check on [`Self::l1_norm`].
    pub fn l1_norm_by_quadrature(&self, xi: &Velocity, tol: f64) -> Result<Estimate> {
        let sign = xi.transport_component()?.signum();
        let end = TAIL_EXPONENT / self.decay_rate(xi)?;
        let f = |s: f64| self.eval(xi, sign * s).unwrap_or(0.0);
        integrate_with_breaks(f, &[0.0, end], &QuadOptions::with_tol(tol))
    }

    /// `(𝒮g)(x, ξ)` for `g = A e^{-|y|/λ}` (or a constant), in closed form.
    ///
    /// With `κ = ν/|ξ₁|`, `μ = 1/λ` and `z = x·sign(ξ₁)` (the coordinate along
    /// the transport direction):
    ///
    /// ```text
    /// z ≤ 0:  A e^{-μ|z|} / (|ξ₁|(κ+μ))
    /// z > 0:  A/|ξ₁| · [ (e^{-κz} - e^{-μz})/(μ-κ) + e^{-κz}/(κ+μ) ]
    /// ```
    ///
    /// At `x = 0` both reduce to `Aλ/(λν + |ξ₁|)`.
    pub fn apply_exponential(&self, profile: &SpatialProfile, xi: &Velocity, x: f64) -> Result<f64> {
        let xi1 = xi.transport_component()?;
        match *profile {
            SpatialProfile::Constant { amplitude } => Ok(amplitude / self.model.nu(xi)),
            SpatialProfile::TwoSidedExponential { amplitude, rate } => {
                if !(rate > 0.0) {
                    return Err(invalid("rate", "must be positive"));
                }
                let a = xi1.abs();
                let kappa = self.model.nu(xi) / a;
                let mu = 1.0 / rate;
                let z = x * xi1.signum();
                if z <= 0.0 {
                    return Ok(amplitude * (-mu * z.abs()).exp() / (a * (kappa + mu)));
                }
                // (e^{-κz} - e^{-μz})/(μ-κ), written to avoid cancellation when μ ≈ κ.
                let (slow, fast) = if kappa <= mu { (kappa, mu) } else { (mu, kappa) };
                let d = fast - slow;
                let ramp = if d == 0.0 {
                    z * (-slow * z).exp()
                } else {
                    (-slow * z).exp() * (-(-d * z).exp_m1()) / d
                };
                Ok(amplitude / a * (ramp + (-kappa * z).exp() / (kappa + mu)))
            }
            _ => Err(invalid(
                "profile",
                "closed form needs an exponential or constant profile",
            )),
        }
    }

    /// `(𝒮f)(x, ξ)` by adaptive quadrature in the displacement, for any
    /// profile. `support` limits where `f` is nonnegligible and `breaks` adds
    /// interior kinks (in `y`).
    fn apply_by_quadrature<F: Fn(f64) -> f64>(
        &self,
        f: F,
        xi: &Velocity,
        x: f64,
        support: Option<(f64, f64)>,
        breaks: &[f64],
        tol: f64,
    ) -> Result<f64> {
        let xi1 = xi.transport_component()?;
        let sign = xi1.signum();
        let kappa = self.decay_rate(xi)?;
        let inv = 1.0 / xi1.abs();
        // y = x - sign·s, s ≥ 0.
        let mut lo: f64 = 0.0;
        let mut hi = TAIL_EXPONENT / kappa;
        if let Some((a, b)) = support {
            let (s1, s2) = if sign > 0.0 { (x - b, x - a) } else { (a - x, b - x) };
            lo = lo.max(s1);
            hi = hi.min(s2);
        }
        if hi <= lo {
            return Ok(0.0);
        }
        let mut points = vec![lo];
        points.extend(breaks.iter().map(|&y| sign * (x - y)).filter(|&s| s > lo && s < hi));
        points.push(hi);
        points.sort_by(f64::total_cmp);
        let integrand = |s: f64| inv * (-kappa * s).exp() * f(x - sign * s);
        Ok(integrate_with_breaks(integrand, &points, &QuadOptions::with_tol(tol))?.value)
    }

    /// `(𝒮f)(x, ξ)` for a closed-form `f` given as a function of `y`.
    pub fn apply_fn<F: Fn(f64) -> f64>(&self, f: F, xi: &Velocity, x: f64, breaks: &[f64], tol: f64) -> Result<f64> {
        self.apply_by_quadrature(f, xi, x, None, breaks, tol)
    }

    /// `(𝒮g)(x, ξ)` for a sampled profile, integrating the piecewise-linear
    /// interpolant with every sample node as a breakpoint.
    pub fn apply_sampled(&self, profile: &SampledProfile, xi: &Velocity, x: f64, tol: f64) -> Result<f64> {
        xi.transport_component()?;
        let ends = [profile.values[0], profile.values[profile.values.len() - 1]];
        if ends.iter().any(|v| v.abs() > tol) {
            return Err(invalid(
                "profile",
                "sampled profile must decay below tol at its grid ends",
            ));
        }
        let support = (profile.xs[0], profile.xs[profile.xs.len() - 1]);
        self.apply_by_quadrature(|y| profile.value(y), xi, x, Some(support), &profile.xs, tol)
    }

    /// `(𝒮g)(x, ξ)` for any profile: closed form where available, quadrature
    /// otherwise.
    pub fn apply(&self, profile: &SpatialProfile, xi: &Velocity, x: f64, tol: f64) -> Result<f64> {
        match profile {
            SpatialProfile::TwoSidedExponential { .. } | SpatialProfile::Constant { .. } => {
                self.apply_exponential(profile, xi, x)
            }
            SpatialProfile::Sampled(s) => self.apply_sampled(s, xi, x, tol),
            SpatialProfile::Gaussian { .. } => {
                let support = profile.effective_support(tol * 1e-3);
                self.apply_by_quadrature(|y| profile.value(y), xi, x, support, &[0.0], tol)
            }
        }
    }

    /// `(ξ₁∂ₓ + ν(ξ)) h` at `(x, ξ)` for `h(x, ξ) = p(x)·φ(ξ)`.
    pub fn transport_apply(
        &self,
        profile: &SpatialProfile,
        velocity_factor: f64,
        xi: &Velocity,
        x: f64,
    ) -> Result<f64> {
        let dp = profile.derivative(x)?;
        Ok((xi.xi1 * dp + self.model.nu(xi) * profile.value(x)) * velocity_factor)
    }
}

pub fn kernel_s(xi: &Velocity, theta: f64, model: &CollisionFrequencyModel) -> Result<f64> {
    TransportKernel::new(*model).eval(xi, theta)
}

pub fn l1_norm_s(xi: &Velocity, model: &CollisionFrequencyModel) -> Result<f64> {
    TransportKernel::new(*model).l1_norm(xi)
}

pub fn apply_s_exponential(
    profile: &SpatialProfile,
    xi: &Velocity,
    x: f64,
    model: &CollisionFrequencyModel,
) -> Result<f64> {
    TransportKernel::new(*model).apply_exponential(profile, xi, x)
}

pub fn apply_s_sampled(
    profile: &SampledProfile,
    xi: &Velocity,
    x: f64,
    tol: f64,
    model: &CollisionFrequencyModel,
) -> Result<f64> {
    TransportKernel::new(*model).apply_sampled(profile, xi, x, tol)
}

pub fn transport_apply(
    profile: &SpatialProfile,
    velocity_factor: f64,
    xi: &Velocity,
    x: f64,
    model: &CollisionFrequencyModel,
) -> Result<f64> {
    TransportKernel::new(*model).transport_apply(profile, velocity_factor, xi, x)
}

/// `σ(θ)` together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaEstimate {
    pub theta: f64,
    /// Max of the refined value and the tail limit.
    pub sigma: f64,
    /// Best value over grid nodes alone.
    pub grid_value: f64,
    /// Best value after golden-section refinement in `(ln ξ₁, |ξ⊥|)`.
    pub refined_value: f64,
    /// `e^{-ν₀θ}`, the limit along `ξ = (t, 0, 0)`, `t → ∞`.
    pub tail_limit: f64,
    /// `(ξ₁, |ξ⊥|)` of the refined maximizer.
    pub argmax: (f64, f64),
}

/// `ln[(1+|ξ|) S_ξ(θ)]` for `ξ = (t, u, 0)`, `t > 0`, `θ > 0`.
fn log_weighted_kernel(t: f64, u: f64, theta: f64, nu0: f64) -> f64 {
    let r2 = t * t + u * u;
    (1.0 + r2.sqrt()).ln() - t.ln() - nu0 * (1.0 + r2).sqrt() * theta / t
}

/// `σ(θ) = sup_ξ (1+|ξ|) S_ξ(θ)`, the norm of `g ↦ S_·(θ) g` from `L∞_2` to `L∞_3`.
///
/// The weight and `ν` depend on `|ξ|` only, and the kernel on `ξ₁`, so the sup
/// reduces to `ξ = (t, u, 0)`. The grid supplies candidate `(t, u)` pairs; the
/// best one is refined by alternating golden-section searches in `ln t` and
/// `u` over brackets that halve each sweep. The tail limit covers the sup
/// approached at infinity.
pub fn sigma_profile(theta: f64, grid: &VelocityGrid, model: &CollisionFrequencyModel) -> Result<SigmaEstimate> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(invalid("theta", format!("must be positive, got {theta}")));
    }
    let nu0 = model.nu0();
    let mut ts: Vec<f64> = grid.nodes().iter().filter(|v| v.xi1 > 0.0).map(|v| v.xi1).collect();
    let mut us: Vec<f64> = grid.nodes().iter().map(Velocity::transverse).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    us.sort_by(f64::total_cmp);
    us.dedup();

    let mut best = (f64::NEG_INFINITY, 1.0, 0.0);
    for v in grid.nodes().iter().filter(|v| v.xi1 > 0.0) {
        let val = log_weighted_kernel(v.xi1, v.transverse(), theta, nu0);
        if val > best.0 {
            best = (val, v.xi1, v.transverse());
        }
    }
    let grid_log = best.0;

    let gap = |vals: &[f64], at: f64, floor: f64| {
        let i = vals.partition_point(|&p| p < at);
        let left = if i > 0 { at - vals[i - 1] } else { floor };
        let right = vals.get(i + 1).map_or(floor, |&p| p - at);
        left.max(right).max(floor)
    };
    let mut ds = gap(&ts.iter().map(|t| t.ln()).collect::<Vec<_>>(), best.1.ln(), 0.5);
    let mut du = gap(&us, best.2, 0.25);
    let (mut log_t, mut u) = (best.1.ln(), best.2);
    let mut value = best.0;
    for _ in 0..60 {
        let (s_new, v1) = golden_section_max(
            &|s: f64| log_weighted_kernel(s.exp(), u, theta, nu0),
            log_t - ds,
            log_t + ds,
            1e-13,
            200,
        );
        if v1 >= value {
            log_t = s_new;
            value = v1;
        }
        let t = log_t.exp();
        let (u_new, v2) = golden_section_max(
            &|w: f64| log_weighted_kernel(t, w, theta, nu0),
            (u - du).max(0.0),
            u + du,
            1e-13,
            200,
        );
        if v2 >= value {
            u = u_new;
            value = v2;
        }
        ds *= 0.5;
        du *= 0.5;
    }

    let tail_limit = (-nu0 * theta).exp();
    let refined_value = value.exp();
    Ok(SigmaEstimate {
        theta,
        sigma: refined_value.max(tail_limit),
        grid_value: grid_log.exp(),
        refined_value,
        tail_limit,
        argmax: (log_t.exp(), u),
    })
}

/// One row of the `∫_ε¹ σ` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaIntegral {
    pub eps: f64,
    pub integral: f64,
}

/// `∫_ε¹ σ(θ) dθ` for each `ε` in a strictly decreasing list in `(0, 1]`.
///
/// Each segment between consecutive `ε` is integrated in `ln θ` with 8-point
/// Gauss–Legendre panels no wider than `ln 2 / 4`; `σ(θ)θ` is bounded, so the
/// log-variable integrand is smooth.
pub fn sigma_integral_divergence(
    eps_list: &[f64],
    grid: &VelocityGrid,
    model: &CollisionFrequencyModel,
) -> Result<Vec<SigmaIntegral>> {
    if eps_list.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(invalid("eps_list", "values must lie in (0, 1]"));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("eps_list", "values must be strictly decreasing"));
    }
    let mut bounds = vec![1.0];
    bounds.extend_from_slice(eps_list);
    let mut panels = Vec::new();
    for w in bounds.windows(2) {
        let (hi, lo) = (w[0].ln(), w[1].ln());
        if hi > lo {
            let n = ((hi - lo) / (std::f64::consts::LN_2 / 4.0)).ceil() as usize;
            let h = (hi - lo) / n as f64;
            for k in 0..n {
                panels.push((lo + k as f64 * h, lo + (k + 1) as f64 * h));
            }
        }
    }
    let nodes: Vec<(f64, f64)> = panels.iter().flat_map(|&(a, b)| gauss_legendre_on(8, a, b)).collect();
    let values: Vec<f64> = nodes
        .par_iter()
        .map(|&(s, w)| {
            let theta = s.exp();
            sigma_profile(theta, grid, model).map(|e| w * e.sigma * theta)
        })
        .collect::<Result<_>>()?;

    // Accumulate from θ = 1 downwards in a fixed order.
    let mut out = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let ln_eps = eps.ln();
        let integral: f64 = nodes
            .iter()
            .zip(&values)
            .filter(|((s, _), _)| *s > ln_eps)
            .map(|(_, v)| v)
            .sum();
        out.push(SigmaIntegral { eps, integral });
    }
    Ok(out)
}

/// `sup_ξ (1+|ξ|)/ν(ξ)`, the bound on `𝒮` from `L∞(ℝ, L∞_2)` to `L∞(ℝ, L∞_3)`.
///
/// Radial, so the scan runs over the distinct grid radii (with the origin)
/// and is refined by golden section; for `ν = ν₀⟨ξ⟩` the value is `√2/ν₀`
/// at `|ξ| = 1`.
pub fn bounded_case_constant(grid: &VelocityGrid, model: &CollisionFrequencyModel) -> f64 {
    let mut radii = vec![0.0];
    radii.extend(grid.radii());
    radii.dedup();
    radial_sup(|t| (1.0 + t) / model.nu_radial(t), &radii, grid.r_max()).1
}
