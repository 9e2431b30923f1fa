//! Run configuration: a flat JSON object whose fields are all optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Collision frequency scale in `ν = ν₀⟨ξ⟩`.
    pub nu0: f64,
    /// Amplitude `C` of the model collision kernel.
    pub c_amp: f64,
    /// Gaussian decay `c` of the model collision kernel.
    pub c_decay: f64,
    pub q: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub n_points: usize,
    /// Absolute tolerance handed to every adaptive quadrature.
    pub quad_tol: f64,
    pub r_max: f64,
    pub n_axial: usize,
    pub n_transverse: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_points: usize,
    /// Lower limits for `∫_ε¹ σ`, strictly decreasing.
    pub eps_list: Vec<f64>,
    /// Expected small-θ limit of `σ(θ)θ`.
    pub sigma_target: f64,
    /// Relative tolerance on `σ(θ)θ` at the smallest θ.
    pub sigma_tol: f64,
    /// Relative tolerance on the log-divergence doubling ratio.
    pub divergence_ratio_tol: f64,
    pub triangle_samples: usize,
    pub seed: u64,
    pub xi1_list: Vec<f64>,
    /// Also run the finite-codimension construction in `sweep`.
    pub codim: bool,
    pub codim_scales: usize,
    /// Record wall-clock runtimes in reports (breaks byte-identical output).
    pub record_timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nu0: 1.0,
            c_amp: 1.0,
            c_decay: 1.0,
            q: 2.0,
            alpha_min: 2f64.powi(-14),
            alpha_max: 2f64.powi(-4),
            n_points: 11,
            quad_tol: 1e-12,
            r_max: 50.0,
            n_axial: 24,
            n_transverse: 4,
            theta_min: 1e-5,
            theta_max: 10.0,
            theta_points: 60,
            eps_list: (0..=8).map(|k| 1e-2 * 2f64.powi(-k)).collect(),
            sigma_target: (-1.0f64).exp(),
            sigma_tol: 0.01,
            divergence_ratio_tol: 0.05,
            triangle_samples: 1_000_000,
            seed: 20_240_601,
            xi1_list: freestream::counterexample::default_gap_xi1(),
            codim: true,
            codim_scales: 8,
            record_timings: false,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), UsageError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(UsageError(format!(
            "`{name}` must be a positive finite number, got {v}"
        )))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| UsageError(format!("malformed config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        for (name, v) in [
            ("nu0", self.nu0),
            ("c_amp", self.c_amp),
            ("c_decay", self.c_decay),
            ("alpha_min", self.alpha_min),
            ("alpha_max", self.alpha_max),
            ("quad_tol", self.quad_tol),
            ("r_max", self.r_max),
            ("theta_min", self.theta_min),
            ("theta_max", self.theta_max),
            ("sigma_target", self.sigma_target),
            ("sigma_tol", self.sigma_tol),
            ("divergence_ratio_tol", self.divergence_ratio_tol),
        ] {
            positive(name, v)?;
        }
        if !(self.q.is_finite() && self.q >= 1.0) {
            return Err(UsageError(format!("`q` must be finite and at least 1, got {}", self.q)));
        }
        if self.alpha_min >= self.alpha_max {
            return Err(UsageError(format!(
                "`alpha_min` ({}) must be below `alpha_max` ({})",
                self.alpha_min, self.alpha_max
            )));
        }
        if self.quad_tol > 1e-2 {
            return Err(UsageError(format!(
                "`quad_tol` must lie in (0, 1e-2], got {}",
                self.quad_tol
            )));
        }
        if self.theta_min >= self.theta_max || self.theta_points < 2 {
            return Err(UsageError(
                "theta range needs theta_min < theta_max and at least 2 points".into(),
            ));
        }
        if self.n_axial == 0 || self.n_transverse == 0 {
            return Err(UsageError("grid counts must be positive".into()));
        }
        if self.eps_list.len() < 3 {
            return Err(UsageError("`eps_list` needs at least 3 values".into()));
        }
        if self.triangle_samples == 0 {
            return Err(UsageError("`triangle_samples` must be positive".into()));
        }
        Ok(())
    }
}
