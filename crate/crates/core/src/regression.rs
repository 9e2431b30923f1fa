//! Least-squares line fits, used for log-log rate estimates.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Unweighted least-squares fit of `y = slope * x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    assert_eq!(xs.len(), ys.len(), "abscissae and ordinates must pair up");
    let mut distinct: Vec<f64> = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateFit {
            distinct: distinct.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (sxy, sxx) = xs.iter().zip(ys).fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx) * (x - mx))
    });
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Fits `ln y` against `ln x`. All inputs must be positive.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_line(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let xs: Vec<f64> = (1..10).map(|k| 2f64.powi(-k)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-0.75)).collect();
        let fit = fit_log_log(&xs, &ys).unwrap();
        assert!((fit.slope + 0.75).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(
            fit_line(&[1.0, 1.0], &[2.0, 3.0]),
            Err(Error::DegenerateFit { distinct: 1 })
        );
        assert_eq!(fit_line(&[], &[]), Err(Error::DegenerateFit { distinct: 0 }));
    }

    proptest! {
        #[test]
        fn recovers_any_line(slope in -5.0..5.0f64, icpt in -5.0..5.0f64, n in 2usize..20) {
            let xs: Vec<f64> = (0..n).map(|i| i as f64 * 0.7 - 1.0).collect();
            let ys: Vec<f64> = xs.iter().map(|x| slope * x + icpt).collect();
            let fit = fit_line(&xs, &ys).unwrap();
            prop_assert!((fit.slope - slope).abs() < 1e-9);
            prop_assert!((fit.intercept - icpt).abs() < 1e-9);
        }
    }
}
