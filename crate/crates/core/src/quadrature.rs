//! One-dimensional quadrature.
//!
//! [`integrate`] is a globally adaptive interval-halving scheme built on the
//! 7-point Gauss / 15-point Kronrod pair. The error of a panel is estimated
//! by the raw difference of the two rules, and the panel with the largest
//! estimate is halved until the summed estimate meets an absolute target.
//! Known kinks (for example the support edge of the transport kernel) are
//! passed as breakpoints so that every panel sees a smooth integrand.
//!
//! [`gauss_legendre`] produces fixed-order Gauss–Legendre rules, used for the
//! product rules of the velocity-space integrals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Target for the summed absolute error estimate.
    pub abs_tol: f64,
    /// Upper bound on the number of panel halvings.
    pub max_subdivisions: usize,
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_subdivisions: 4000,
        }
    }
}

/// Integral value together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // Largest error first; ties broken by position so the order is total.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Applies the Gauss–Kronrod pair on `[a, b]`, returning `(kronrod, |kronrod - gauss|)`.
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let (value, error) = gauss_kronrod_15(f, a, b);
    Panel { a, b, value, error }
}

/// Integrates `f` over `[a, b]` to an absolute error target.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Estimate> {
    integrate_with_breaks(f, &[a, b], opts)
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the panels
/// delimited by `points`, which must be nondecreasing. Zero-width panels are
/// dropped.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: &QuadOptions) -> Result<Estimate> {
    if points.len() < 2 {
        return Err(invalid("points", "need at least two breakpoints"));
    }
    if !(opts.abs_tol > 0.0) {
        return Err(invalid("abs_tol", "must be positive"));
    }
    if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("points", "breakpoints must be finite and nondecreasing"));
    }

    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(panel(&f, w[0], w[1]));
        }
    }
    let mut evals = 15 * heap.len();
    let exact_sums = |heap: &BinaryHeap<Panel>| {
        heap.iter()
            .fold((0.0, 0.0), |(v, e), p: &Panel| (v + p.value, e + p.error))
    };
    let mut running_error = exact_sums(&heap).1;
    let mut splits = 0;

    loop {
        if running_error <= opts.abs_tol {
            let (value, error) = exact_sums(&heap);
            if error <= opts.abs_tol {
                return Ok(Estimate { value, error, evals });
            }
            running_error = error;
        }
        if splits >= opts.max_subdivisions {
            return Err(Error::QuadratureNotConverged {
                estimate: exact_sums(&heap).1,
                target: opts.abs_tol,
            });
        }
        let worst = heap.pop().expect("nonempty while error is positive");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel is at floating-point resolution; cannot split further.
            heap.push(worst);
            return Err(Error::QuadratureNotConverged {
                estimate: exact_sums(&heap).1,
                target: opts.abs_tol,
            });
        }
        let left = panel(&f, worst.a, mid);
        let right = panel(&f, mid, worst.b);
        running_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        evals += 30;
        splits += 1;
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d.is_finite() { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// A Gauss–Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    x.iter().zip(&w).map(|(xi, wi)| (c + h * xi, h * wi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_pair_integrates_polynomials() {
        let (v, e) = gauss_kronrod_15(&|x: f64| x.powi(6) - 3.0 * x * x + 1.0, -1.0, 2.0);
        let exact = (2f64.powi(7) + 1.0) / 7.0 - (8.0 + 1.0) + 3.0;
        assert!((v - exact).abs() < 1e-13);
        assert!(e < 1e-12);
    }

    #[test]
    fn adaptive_handles_kink_with_breakpoint() {
        let f = |x: f64| (-x.abs()).exp();
        let est = integrate_with_breaks(f, &[-30.0, 0.0, 30.0], &QuadOptions::with_tol(1e-13)).unwrap();
        let exact = 2.0 * (1.0 - (-30f64).exp());
        assert!((est.value - exact).abs() < 1e-13, "{}", est.value - exact);
    }

    #[test]
    fn adaptive_reports_nonconvergence() {
        let f = |x: f64| x.abs().sqrt().recip();
        let opts = QuadOptions {
            abs_tol: 1e-14,
            max_subdivisions: 20,
        };
        match integrate(f, -1.0, 1.0, &opts) {
            Err(Error::QuadratureNotConverged { estimate, target }) => {
                assert!(estimate > target)
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(integrate_with_breaks(|x| x, &[1.0, 0.0], &QuadOptions::default()).is_err());
        assert!(integrate_with_breaks(|x| x, &[1.0], &QuadOptions::default()).is_err());
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in [1usize, 2, 5, 16, 33, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * n).min(40) {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }
}
