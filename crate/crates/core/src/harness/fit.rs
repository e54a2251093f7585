use crate::error::{Error, Result};

/// Least-squares line `log e = slope log h + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_slope(h: &[f64], errors: &[f64]) -> Result<SlopeFit> {
    if h.len() != errors.len() {
        return Err(Error::DegenerateFit(format!("{} step sizes but {} errors", h.len(), errors.len())));
    }
    if h.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {}", h.len())));
    }
    if let Some((x, y)) = h.iter().zip(errors).find(|(x, y)| !(**x > 0.0 && **y > 0.0)) {
        return Err(Error::DegenerateFit(format!("nonpositive pair ({x}, {y})")));
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all step sizes are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(SlopeFit { slope, intercept: my - slope * mx })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_laws() {
        let h = [0.1, 0.2, 0.4, 0.8];
        let lin: Vec<f64> = h.iter().map(|x| 3.0 * x).collect();
        let fit = fit_slope(&h, &lin).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        let quad: Vec<f64> = h.iter().map(|x| x * x).collect();
        assert!((fit_slope(&h, &quad).unwrap().slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tabulated_small_h_errors_fit_first_order() {
        let h = [3.333e-4, 6.667e-4, 1.667e-3, 4.667e-3, 1.167e-2, 2.833e-2];
        let e1 = [5.530e-2, 1.675e-1, 2.502e-1, 7.118e-1, 2.150e0, 4.826e0];
        let slope = fit_slope(&h, &e1).unwrap().slope;
        assert!((slope - 1.0).abs() <= 0.3, "slope {slope}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_slope(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::DegenerateFit(_))));
        assert!(matches!(fit_slope(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]), Err(Error::DegenerateFit(_))));
        assert!(matches!(fit_slope(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::DegenerateFit(_))));
        assert!(matches!(fit_slope(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(Error::DegenerateFit(_))));
    }

    proptest! {
        #[test]
        fn recovers_any_power_law(p in -3.0f64..3.0, c in 0.01f64..100.0) {
            let h: [f64; 5] = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
            let e: Vec<f64> = h.iter().map(|x| c * x.powf(p)).collect();
            let fit = fit_slope(&h, &e).unwrap();
            prop_assert!((fit.slope - p).abs() < 1e-9);
        }
    }
}
