//! Golden-section search.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes a unimodal `f` on `[a, b]`.
///
/// Stops when the bracket is narrower than `tol` (absolute) or after
/// `max_iter` shrink steps. Returns `(x_best, f(x_best))` over every point
/// evaluated, including the endpoints.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut best = [(lo, f(lo)), (hi, f(hi))]
        .into_iter()
        .fold((lo, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });
    let mut keep = |x: f64, v: f64| {
        if v > best.1 {
            best = (x, v);
        }
    };

    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    keep(x1, f1);
    keep(x2, f2);

    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
            keep(x1, f1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
            keep(x2, f2);
        }
    }
    best
}
