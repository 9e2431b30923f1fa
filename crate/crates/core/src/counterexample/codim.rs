//! Blow-up inside a finite-codimension subspace.
//!
//! Given functionals `ℓ_1..ℓ_m` and scales `α_1 > .. > α_N`, a combination
//! `g_c = Σ c_j g_{α_j}` with `ℓ_i(g_c) = 0` for all `i` is built from the
//! null space of `M_{ij} = ℓ_i(g_{α_j})`. Repeating the construction with all
//! `α_j` scaled by `2^{-k}` shows that the normalized probe still grows like
//! `α^{-1/q}` in the smallest active scale.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{probe_value_via_resolvent_sum, TestFamilyParams, Verdict};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::regression::fit_log_log;
use crate::velocity::{log_spaced, CollisionFrequencyModel, Velocity};

/// Bound on `|Σ_j c_j ℓ_i(g_{α_j})|`.
pub const NULL_RESIDUAL_TOL: f64 = 1e-10;

/// Slope tolerance across a family of constructions.
pub const CODIM_SLOPE_TOL: f64 = 0.05;

/// Coefficients below this fraction of the largest are treated as zero when
/// locating the smallest active scale.
const ACTIVE_COEFF: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalTerm {
    pub x: f64,
    pub xi: Velocity,
    pub coeff: f64,
}

/// `ℓ(g) = Σ coeff · g(x, ξ)` over a finite list of nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Functional {
    terms: Vec<FunctionalTerm>,
}

impl Functional {
    pub fn new(terms: Vec<FunctionalTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("functional", "needs at least one node"));
        }
        if terms.iter().any(|t| !(t.coeff.is_finite() && t.x.is_finite())) {
            return Err(invalid("functional", "coefficients and nodes must be finite"));
        }
        Ok(Self { terms })
    }

    /// Point evaluation `g ↦ g(x, ξ)`.
    pub fn point(x: f64, xi: Velocity) -> Self {
        Self {
            terms: vec![FunctionalTerm { x, xi, coeff: 1.0 }],
        }
    }

    pub fn terms(&self) -> &[FunctionalTerm] {
        &self.terms
    }

    pub fn apply<G: Fn(f64, &Velocity) -> f64>(&self, g: G) -> f64 {
        self.terms.iter().map(|t| t.coeff * g(t.x, &t.xi)).sum()
    }
}

/// The moments `1, ξ₁, ξ₂, ξ₃, |ξ|²` of `g(x, ·)` against the Gaussian
/// `e^{-|ξ-u|²/2}`, sampled on the nodes `{-1, 0, 1}³`.
pub fn moment_functionals(x: f64, bulk: Velocity) -> Vec<Functional> {
    let lattice = [-1.0, 0.0, 1.0];
    let mut nodes = Vec::with_capacity(27);
    for &a in &lattice {
        for &b in &lattice {
            for &c in &lattice {
                nodes.push(Velocity::from([a, b, c]));
            }
        }
    }
    let moments: [fn(&Velocity) -> f64; 5] = [|_| 1.0, |v| v.xi1, |v| v.xi2, |v| v.xi3, |v| v.norm_sq()];
    moments
        .iter()
        .map(|m| Functional {
            terms: nodes
                .iter()
                .map(|v| FunctionalTerm {
                    x,
                    xi: *v,
                    coeff: m(v) * (-0.5 * v.sub(&bulk).norm_sq()).exp(),
                })
                .collect(),
        })
        .collect()
}

/// `2^{-4}, .., 2^{-9}`.
pub fn default_codim_alphas() -> Vec<f64> {
    (4..=9).map(|k| 2f64.powi(-k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullVector {
    /// Unit-norm coefficients.
    pub coefficients: Vec<f64>,
    /// `|Σ_j M_{ij} c_j|` for each functional.
    pub residuals: Vec<f64>,
    /// Numerical rank of the row-equilibrated matrix.
    pub rank: usize,
}

/// A unit null vector of the `m × N` matrix given by `rows`.
///
/// Rows are scaled to unit length (which leaves the null space unchanged)
/// and zero rows dropped. When the numerical null space has dimension above
/// one, the result is the normalized projection of `e_preferred` onto it;
/// if that projection vanishes, the right singular vector of the smallest
/// singular value is used. The sign makes the preferred (or largest)
/// component positive.
pub fn null_vector(rows: &[Vec<f64>], n: usize, preferred: usize) -> Result<NullVector> {
    if n == 0 || preferred >= n {
        return Err(invalid(
            "alphas",
            "need at least one column and a valid preferred index",
        ));
    }
    if rows.iter().any(|r| r.len() != n || r.iter().any(|v| !v.is_finite())) {
        return Err(invalid("matrix", "rows must be finite and of equal length"));
    }
    let scaled: Vec<Vec<f64>> = rows
        .iter()
        .filter_map(|r| {
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            (norm > 0.0).then(|| r.iter().map(|v| v / norm).collect())
        })
        .collect();

    let mut c = vec![0.0; n];
    let rank;
    if scaled.is_empty() {
        c[preferred] = 1.0;
        rank = 0;
    } else {
        let size = scaled.len().max(n);
        let padded = DMatrix::from_fn(size, n, |i, j| scaled.get(i).map_or(0.0, |r| r[j]));
        let svd = padded.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors were requested");
        let sv = &svd.singular_values;
        let smax = sv.max();
        let thresh = size as f64 * f64::EPSILON * smax;
        rank = sv.iter().filter(|&&s| s > thresh).count();
        if rank >= n {
            return Err(Error::NullSpaceEmpty {
                rows: rows.len(),
                cols: n,
            });
        }
        for (k, &s) in sv.iter().enumerate() {
            if s <= thresh {
                let weight = v_t[(k, preferred)];
                for (j, cj) in c.iter_mut().enumerate() {
                    *cj += weight * v_t[(k, j)];
                }
            }
        }
        let mut sign_index = preferred;
        if norm2(&c) <= 1e-8 {
            let kmin = (0..sv.len()).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap_or(0);
            c = (0..n).map(|j| v_t[(kmin, j)]).collect();
            sign_index = (0..n).max_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs())).unwrap_or(0);
        }
        let scale = norm2(&c) * if c[sign_index] < 0.0 { -1.0 } else { 1.0 };
        c.iter_mut().for_each(|v| *v /= scale);
    }

    let residuals = rows
        .iter()
        .map(|r| r.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>().abs())
        .collect();
    Ok(NullVector {
        coefficients: c,
        residuals,
        rank,
    })
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One combination `g_c` and its probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodimConstruction {
    /// Factor applied to the base scales.
    pub scale: f64,
    pub alphas: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rank: usize,
    /// Smallest `α_j` with a nonvanishing coefficient.
    pub leading_alpha: f64,
    /// `(1+|ξ|)³ |𝒮g_c(0, ξ)|` at `ξ = (leading_alpha, 1, 0)`.
    pub weighted_probe: f64,
    /// `‖g_c‖_{L^q(ℝ, L∞_2)}`, by quadrature.
    pub lq_norm: f64,
    /// `weighted_probe / lq_norm`.
    pub normalized_probe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodimReport {
    pub q: f64,
    pub constructions: Vec<CodimConstruction>,
    pub max_residual: f64,
    pub fitted_slope: f64,
    pub slope_target: f64,
    pub slope_tol: f64,
    pub verdict: Verdict,
}

/// `‖Σ c_j g_{α_j}‖_{L^q(ℝ, L∞_2)} = 2 (2 ∫₀^∞ |Σ c_j α_j^{-1/q} e^{-x/α_j}|^q dx)^{1/q}`.
fn combination_lq_norm(params: &[TestFamilyParams], c: &[f64], q: f64) -> Result<f64> {
    let p = |x: f64| -> f64 {
        params
            .iter()
            .zip(c)
            .map(|(t, cj)| cj * t.amplitude() * (-x / t.alpha()).exp())
            .sum()
    };
    let a_min = params.iter().map(|t| t.alpha()).fold(f64::INFINITY, f64::min);
    let a_max = params.iter().map(|t| t.alpha()).fold(0.0, f64::max);
    let end = 80.0 * a_max;
    let n_breaks = ((end / (0.25 * a_min)).log2() * 4.0).ceil().max(2.0) as usize;
    let mut points = vec![0.0];
    points.extend(log_spaced(0.25 * a_min, end, n_breaks));
    // Scale of the integral: each unit term contributes about 1/q.
    let opts = QuadOptions {
        abs_tol: 1e-12,
        max_subdivisions: 20_000,
    };
    let integral = integrate_with_breaks(|x| p(x).abs().powf(q), &points, &opts)?.value;
    Ok(2.0 * (2.0 * integral).powf(1.0 / q))
}

fn construct(
    functionals: &[Functional],
    alphas: &[f64],
    q: f64,
    scale: f64,
    model: &CollisionFrequencyModel,
) -> Result<CodimConstruction> {
    let params = alphas
        .iter()
        .map(|&a| TestFamilyParams::new(a, q))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<f64>> = functionals
        .iter()
        .map(|l| {
            params
                .iter()
                .map(|p| l.apply(|x, xi| super::g_alpha_eval(p, x, xi)))
                .collect()
        })
        .collect();
    let smallest = (0..alphas.len())
        .min_by(|&a, &b| alphas[a].total_cmp(&alphas[b]))
        .unwrap_or(0);
    let nv = null_vector(&rows, alphas.len(), smallest)?;
    let c = nv.coefficients;

    let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let leading = (0..c.len())
        .filter(|&j| c[j].abs() > ACTIVE_COEFF * cmax)
        .min_by(|&a, &b| alphas[a].total_cmp(&alphas[b]))
        .expect("unit vector has an active coefficient");
    let leading_alpha = alphas[leading];
    let xi = Velocity::from([leading_alpha, 1.0, 0.0]);
    let probe = probe_value_via_resolvent_sum(&params, &c, &xi, model)?;
    let weighted_probe = (1.0 + xi.norm()).powi(3) * probe.abs();
    let lq_norm = combination_lq_norm(&params, &c, q)?;
    Ok(CodimConstruction {
        scale,
        alphas: alphas.to_vec(),
        coefficients: c,
        residuals: nv.residuals,
        rank: nv.rank,
        leading_alpha,
        weighted_probe,
        lq_norm,
        normalized_probe: weighted_probe / lq_norm,
    })
}

/// Builds the annihilating combination for `alphas · 2^{-k}`,
/// `k = 0..n_scales`, and fits the log-log slope of the normalized probe
/// against the leading scale.
pub fn finite_codim_combination(
    functionals: &[Functional],
    alphas: &[f64],
    q: f64,
    n_scales: usize,
    model: &CollisionFrequencyModel,
) -> Result<CodimReport> {
    if alphas.is_empty() || alphas.iter().any(|&a| !(a.is_finite() && a > 0.0)) {
        return Err(invalid("alphas", "need at least one positive scale"));
    }
    if n_scales < 2 {
        return Err(Error::DegenerateFit { distinct: n_scales });
    }
    let constructions = (0..n_scales)
        .map(|k| {
            let s = 2f64.powi(-(k as i32));
            let scaled: Vec<f64> = alphas.iter().map(|a| a * s).collect();
            construct(functionals, &scaled, q, s, model)
        })
        .collect::<Result<Vec<_>>>()?;

    let xs: Vec<f64> = constructions.iter().map(|c| c.leading_alpha).collect();
    let ys: Vec<f64> = constructions.iter().map(|c| c.normalized_probe).collect();
    let fit = fit_log_log(&xs, &ys)?;
    let max_residual = constructions
        .iter()
        .flat_map(|c| c.residuals.iter().copied())
        .fold(0.0, f64::max);
    let slope_target = -1.0 / q;
    let mut reasons = Vec::new();
    if !(max_residual <= NULL_RESIDUAL_TOL) {
        reasons.push(format!(
            "null-space residual {max_residual} exceeds {NULL_RESIDUAL_TOL}"
        ));
    }
    if !((fit.slope - slope_target).abs() <= CODIM_SLOPE_TOL) {
        reasons.push(format!(
            "fitted slope {} differs from {} by more than {}",
            fit.slope, slope_target, CODIM_SLOPE_TOL
        ));
    }
    Ok(CodimReport {
        q,
        constructions,
        max_residual,
        fitted_slope: fit.slope,
        slope_target,
        slope_tol: CODIM_SLOPE_TOL,
        verdict: Verdict::from_reasons(reasons),
    })
}
