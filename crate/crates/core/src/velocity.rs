//! Velocity-space primitives.
//!
//! Two weights coexist and are never interchanged: the norm weight
//! `(1+|ξ|)^r` of `L∞_r`, and the Japanese bracket `⟨ξ⟩ = (1+|ξ|²)^{1/2}`
//! used by the collision frequency and by the test family.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point of `ℝ³`; the first component is the transport direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Velocity {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
}

impl Velocity {
    pub const ZERO: Velocity = Velocity {
        xi1: 0.0,
        xi2: 0.0,
        xi3: 0.0,
    };

    pub fn new(xi1: f64, xi2: f64, xi3: f64) -> Result<Self> {
        if !(xi1.is_finite() && xi2.is_finite() && xi3.is_finite()) {
            return Err(invalid("velocity", "components must be finite"));
        }
        Ok(Self { xi1, xi2, xi3 })
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.xi1 * self.xi1 + self.xi2 * self.xi2 + self.xi3 * self.xi3
    }

    /// Length of the component orthogonal to the transport direction.
    pub fn transverse(&self) -> f64 {
        self.xi2.hypot(self.xi3)
    }

    /// `⟨ξ⟩ = (1+|ξ|²)^{1/2}`.
    pub fn bracket(&self) -> f64 {
        (1.0 + self.norm_sq()).sqrt()
    }

    /// Returns `xi1`, or an error when it vanishes.
    pub fn transport_component(&self) -> Result<f64> {
        if self.xi1 == 0.0 {
            Err(Error::ZeroTransportDirection)
        } else {
            Ok(self.xi1)
        }
    }

    /// Velocity with the transport component negated.
    pub fn reflected(&self) -> Self {
        Self {
            xi1: -self.xi1,
            ..*self
        }
    }

    pub fn sub(&self, other: &Velocity) -> Velocity {
        Velocity {
            xi1: self.xi1 - other.xi1,
            xi2: self.xi2 - other.xi2,
            xi3: self.xi3 - other.xi3,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.xi1, self.xi2, self.xi3]
    }
}

impl From<[f64; 3]> for Velocity {
    fn from(v: [f64; 3]) -> Self {
        Velocity {
            xi1: v[0],
            xi2: v[1],
            xi3: v[2],
        }
    }
}

/// Exponent `r ≥ 0` of the weight `(1+|ξ|)^r`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct WeightOrder(f64);

impl WeightOrder {
    pub fn new(r: f64) -> Result<Self> {
        if r.is_finite() && r >= 0.0 {
            Ok(Self(r))
        } else {
            Err(invalid(
                "r",
                format!("weight order must be finite and nonnegative, got {r}"),
            ))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `(1+|ξ|)^r`.
pub fn weight(xi: &Velocity, r: WeightOrder) -> f64 {
    radial_weight(xi.norm(), r)
}

/// `(1+t)^r` for `t = |ξ|`.
pub fn radial_weight(t: f64, r: WeightOrder) -> f64 {
    (1.0 + t).powf(r.0)
}

/// Collision frequency `ν(ξ) = ν₀⟨ξ⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionFrequencyModel {
    nu0: f64,
}

impl CollisionFrequencyModel {
    pub fn new(nu0: f64) -> Result<Self> {
        if nu0.is_finite() && nu0 > 0.0 {
            Ok(Self { nu0 })
        } else {
            Err(invalid("nu0", format!("must be positive, got {nu0}")))
        }
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn nu(&self, xi: &Velocity) -> f64 {
        self.nu0 * xi.bracket()
    }

    /// `ν` as a function of `|ξ|`.
    pub fn nu_radial(&self, t: f64) -> f64 {
        self.nu0 * (1.0 + t * t).sqrt()
    }
}

impl Default for CollisionFrequencyModel {
    fn default() -> Self {
        Self { nu0: 1.0 }
    }
}

pub fn nu(xi: &Velocity, model: &CollisionFrequencyModel) -> f64 {
    model.nu(xi)
}

/// `max (1+|ξ|)^r |value|` over the samples.
///
/// This is a lower bound for the sup over `ℝ³` of the sampled function.
pub fn weighted_sup_norm(samples: &[(Velocity, f64)], r: WeightOrder) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(samples
        .iter()
        .map(|(xi, v)| weight(xi, r) * v.abs())
        .fold(0.0, f64::max))
}

/// Outcome of [`weight_triangle_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangleCheck {
    pub passed: bool,
    /// Largest observed `⟨ξ⟩ / (⟨ξ-ξ*⟩⟨ξ*⟩)`.
    pub worst_ratio: f64,
    pub samples: usize,
}

/// `⟨ξ⟩ / (⟨ξ-ξ*⟩⟨ξ*⟩)`.
pub fn bracket_ratio(xi: &Velocity, xi_star: &Velocity) -> f64 {
    xi.bracket() / (xi.sub(xi_star).bracket() * xi_star.bracket())
}

/// Samples pairs `(ξ, ξ*)` and checks `⟨ξ⟩ ≤ √2 ⟨ξ-ξ*⟩⟨ξ*⟩` on each.
///
/// Both velocities are drawn independently: a direction uniform on the unit
/// sphere times a magnitude `10^U` with `U` uniform on `[-3, 3]`. The
/// generator is ChaCha8 seeded with `seed`.
pub fn weight_triangle_check(n_samples: usize, seed: u64) -> Result<TriangleCheck> {
    if n_samples == 0 {
        return Err(invalid("n_samples", "need at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let mag = 10f64.powf(rng.gen_range(-3.0..=3.0));
        let s = (1.0 - z * z).max(0.0).sqrt();
        Velocity::from([mag * z, mag * s * phi.cos(), mag * s * phi.sin()])
    };
    let bound = std::f64::consts::SQRT_2;
    let mut worst: f64 = 0.0;
    let mut passed = true;
    for _ in 0..n_samples {
        let xi = draw();
        let xi_star = draw();
        let lhs = xi.bracket();
        let rhs = bound * xi.sub(&xi_star).bracket() * xi_star.bracket();
        passed &= lhs <= rhs;
        worst = worst.max(bracket_ratio(&xi, &xi_star));
    }
    Ok(TriangleCheck {
        passed,
        worst_ratio: worst,
        samples: n_samples,
    })
}

/// Product velocity grid.
///
/// `|ξ₁|` is log-spaced on `[1e-6, r_max]` with both signs; `ξ₂` and `ξ₃`
/// each take `0` and `±` log-spaced magnitudes on `[0.25, r_max]`. Nodes
/// outside the ball of radius `r_max` are dropped. Refinement doubles both
/// per-axis counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityGrid {
    nodes: Vec<Velocity>,
    r_max: f64,
    n_axial: usize,
    n_transverse: usize,
    level: u32,
}

pub const AXIAL_FLOOR: f64 = 1e-6;
pub const TRANSVERSE_FLOOR: f64 = 0.25;

impl VelocityGrid {
    pub const DEFAULT_R_MAX: f64 = 50.0;
    pub const DEFAULT_AXIAL: usize = 24;
    pub const DEFAULT_TRANSVERSE: usize = 4;

    pub fn product(r_max: f64, n_axial: usize, n_transverse: usize) -> Result<Self> {
        Self::with_level(r_max, n_axial, n_transverse, 0)
    }

    fn with_level(r_max: f64, n_axial: usize, n_transverse: usize, level: u32) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 1.0) {
            return Err(invalid("r_max", format!("must exceed 1, got {r_max}")));
        }
        if n_axial < 2 {
            return Err(invalid("n_axial", "need at least two axial magnitudes"));
        }
        let axial = log_spaced(AXIAL_FLOOR, r_max, n_axial);
        let mut transverse = vec![0.0];
        if n_transverse > 0 {
            for m in log_spaced(TRANSVERSE_FLOOR, r_max, n_transverse) {
                transverse.push(-m);
                transverse.push(m);
            }
        }
        transverse.sort_by(f64::total_cmp);

        let mut nodes = Vec::with_capacity(2 * axial.len() * transverse.len().pow(2));
        for sign in [-1.0, 1.0] {
            for &a in &axial {
                for &b in &transverse {
                    for &c in &transverse {
                        let xi = Velocity::from([sign * a, b, c]);
                        if xi.norm() <= r_max * (1.0 + 1e-12) {
                            nodes.push(xi);
                        }
                    }
                }
            }
        }
        Ok(Self {
            nodes,
            r_max,
            n_axial,
            n_transverse,
            level,
        })
    }

    pub fn nodes(&self) -> &[Velocity] {
        &self.nodes
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn n_axial(&self) -> usize {
        self.n_axial
    }

    pub fn n_transverse(&self) -> usize {
        self.n_transverse
    }

    /// Grid with both per-axis counts doubled.
    pub fn refined(&self) -> Self {
        Self::with_level(
            self.r_max,
            2 * self.n_axial,
            (2 * self.n_transverse).max(1),
            self.level + 1,
        )
        .expect("refining a valid grid")
    }

    /// Same counts, different truncation radius.
    pub fn with_r_max(&self, r_max: f64) -> Result<Self> {
        Self::with_level(r_max, self.n_axial, self.n_transverse, self.level)
    }

    /// Sorted distinct values of `|ξ|` over the nodes.
    pub fn radii(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.nodes.iter().map(Velocity::norm).collect();
        r.sort_by(f64::total_cmp);
        r.dedup();
        r
    }
}

impl Default for VelocityGrid {
    fn default() -> Self {
        Self::product(Self::DEFAULT_R_MAX, Self::DEFAULT_AXIAL, Self::DEFAULT_TRANSVERSE)
            .expect("default grid parameters are valid")
    }
}

/// `n ≥ 2` points geometrically spaced from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Sup over `t ∈ [0, t_max]` of a radial function, by grid scan followed by
/// a golden-section pass on the bracket around the best grid point.
///
/// Returns `(t, f(t))`. Grid values are computed in parallel and reduced in
/// grid order.
pub(crate) fn radial_sup<F: Fn(f64) -> f64 + Sync>(f: F, grid: &[f64], t_max: f64) -> (f64, f64) {
    let values: Vec<f64> = grid.par_iter().map(|&t| f(t)).collect();
    let (best_idx, best_val) =
        values.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
    let lo = if best_idx == 0 { 0.0 } else { grid[best_idx - 1] };
    let hi = grid.get(best_idx + 1).copied().unwrap_or(t_max);
    let refined = crate::search::golden_section_max(&f, lo, hi, 1e-10, 200);
    if refined.1 >= best_val {
        refined
    } else {
        (grid[best_idx], best_val)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(v: f64) -> WeightOrder {
        WeightOrder::new(v).unwrap()
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight(&Velocity::ZERO, r(3.0)), 1.0);
        assert_eq!(weight(&Velocity::from([1.0, 0.0, 0.0]), r(2.0)), 4.0);
        assert!((weight(&Velocity::from([3.0, 4.0, 0.0]), r(3.0)) - 216.0).abs() < 1e-12);
    }

    #[test]
    fn weight_order_rejects_negative() {
        assert!(WeightOrder::new(-0.5).is_err());
        assert!(WeightOrder::new(f64::NAN).is_err());
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn nu_examples() {
        let m = CollisionFrequencyModel::default();
        assert_eq!(nu(&Velocity::ZERO, &m), 1.0);
        assert!((nu(&Velocity::from([1.0, 0.0, 0.0]), &m) - 1.414_213_6).abs() < 1e-7);
        for alpha in [1e-3, 0.5, 2.0] {
            let v = nu(&Velocity::from([alpha, 1.0, 0.0]), &m);
            assert!((v - (2.0 + alpha * alpha).sqrt()).abs() < 1e-15);
        }
        assert!(CollisionFrequencyModel::new(0.0).is_err());
    }

    #[test]
    fn sup_norm_examples() {
        let grid = VelocityGrid::default();
        let ones: Vec<_> = grid.nodes().iter().map(|&xi| (xi, 1.0)).collect();
        assert_eq!(weighted_sup_norm(&ones, r(0.0)).unwrap(), 1.0);

        let mut nodes = grid.nodes().to_vec();
        nodes.push(Velocity::from([0.0, 1.0, 0.0]));
        let brackets: Vec<_> = nodes.iter().map(|&xi| (xi, 1.0 / (1.0 + xi.norm_sq()))).collect();
        assert!((weighted_sup_norm(&brackets, r(2.0)).unwrap() - 2.0).abs() < 1e-15);

        let cancel: Vec<_> = nodes.iter().map(|&xi| (xi, (1.0 + xi.norm()).powf(-2.5))).collect();
        assert!((weighted_sup_norm(&cancel, r(2.5)).unwrap() - 1.0).abs() < 1e-12);

        assert_eq!(weighted_sup_norm(&[], r(1.0)), Err(Error::EmptySamples));
    }

    #[test]
    fn triangle_ratio_special_cases() {
        let xi = Velocity::from([0.3, -2.0, 7.0]);
        assert_eq!(bracket_ratio(&xi, &Velocity::ZERO), 1.0);
        assert!((bracket_ratio(&xi, &xi) - 1.0).abs() < 1e-15);
    }

    /// Brute-force oracle: the worst ratio is attained for aligned vectors of
    /// equal length `1/√2`, where it equals `2/√3`.
    #[test]
    fn triangle_ratio_supremum_by_enumeration() {
        let mut best: f64 = 0.0;
        for i in 0..=400 {
            for j in 0..=400 {
                let (s, t) = (i as f64 * 0.01, j as f64 * 0.01);
                let xi = Velocity::from([s + t, 0.0, 0.0]);
                let xs = Velocity::from([t, 0.0, 0.0]);
                best = best.max(bracket_ratio(&xi, &xs));
            }
        }
        assert!((best - 2.0 / 3f64.sqrt()).abs() < 1e-4, "{best}");
        assert!(best < std::f64::consts::SQRT_2);
    }

    #[test]
    fn triangle_check_is_deterministic() {
        let a = weight_triangle_check(10_000, 7).unwrap();
        let b = weight_triangle_check(10_000, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.passed);
        assert!(a.worst_ratio <= std::f64::consts::SQRT_2 + 1e-12);
        assert!(weight_triangle_check(0, 1).is_err());
    }

    #[test]
    fn grid_invariants() {
        let g = VelocityGrid::default();
        assert!(g.nodes().iter().all(|xi| xi.xi1 != 0.0));
        assert!(g.nodes().iter().any(|xi| xi.xi1 > 0.0));
        assert!(g.nodes().iter().any(|xi| xi.xi1 < 0.0));
        assert!(g.nodes().iter().all(|xi| xi.norm() <= 50.0 * (1.0 + 1e-12)));
        let f = g.refined();
        assert_eq!(f.level(), 1);
        assert!(f.nodes().len() > g.nodes().len());
    }

    #[test]
    fn velocity_rejects_nonfinite() {
        assert!(Velocity::new(f64::INFINITY, 0.0, 0.0).is_err());
        assert_eq!(
            Velocity::from([0.0, 1.0, 0.0]).transport_component(),
            Err(Error::ZeroTransportDirection)
        );
    }

    fn velocity() -> impl Strategy<Value = Velocity> {
        (-1e3..1e3f64, -1e3..1e3f64, -1e3..1e3f64).prop_map(|(a, b, c)| Velocity::from([a, b, c]))
    }

    proptest! {
        #[test]
        fn weight_zero_order_is_one(xi in velocity()) {
            prop_assert_eq!(weight(&xi, r(0.0)), 1.0);
        }

        #[test]
        fn weight_is_radial(xi in velocity(), order in 0.0..6.0f64) {
            let rotated = Velocity::from([xi.xi2, xi.xi3, xi.xi1]);
            let (a, b) = (weight(&xi, r(order)), weight(&rotated, r(order)));
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn nu_brackets_norm_weight(xi in velocity(), nu0 in 0.1..10.0f64) {
            let m = CollisionFrequencyModel::new(nu0).unwrap();
            let v = m.nu(&xi) / nu0;
            prop_assert!(v >= 1.0);
            let ratio = v / (1.0 + xi.norm());
            prop_assert!((std::f64::consts::FRAC_1_SQRT_2 - 1e-15..=1.0 + 1e-15).contains(&ratio));
            prop_assert!((m.nu(&xi) / nu0 / xi.bracket() - 1.0).abs() < 1e-15);
        }

        #[test]
        fn sup_norm_is_monotone(
            values in prop::collection::vec((velocity(), -5.0..5.0f64), 1..30),
            extra in (velocity(), -5.0..5.0f64),
        ) {
            let before = weighted_sup_norm(&values, r(2.0)).unwrap();
            let mut more = values.clone();
            more.push(extra);
            prop_assert!(weighted_sup_norm(&more, r(2.0)).unwrap() >= before);
        }

        #[test]
        fn triangle_check_never_exceeds_bound(seed in any::<u64>()) {
            let c = weight_triangle_check(2_000, seed).unwrap();
            prop_assert!(c.passed);
            prop_assert!(c.worst_ratio <= std::f64::consts::SQRT_2 + 1e-12);
        }
    }
}
