use crate::error::{Error, Result};

/// Least-squares slope of `log value` against `log t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    /// Half-width of the 95% interval (normal approximation).
    pub confidence: f64,
    pub prefactor: f64,
    pub points: usize,
}

pub fn fit_decay_exponent(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .map(|&(t, v)| {
            if !(v > 0.0) || !(t > 0.0) {
                return Err(Error::InvalidArgument(format!("decay fit needs positive data, got ({t}, {v})")));
            }
            Ok((t.ln(), v.ln()))
        })
        .collect::<Result<_>>()?;
    let n = pts.len();
    if n < 4 {
        return Err(Error::InsufficientWindow(n));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientWindow(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let se = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(DecayFit { exponent: slope, confidence: 1.96 * se, prefactor: intercept.exp(), points: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..60).map(|i| 1.0 + i as f64).map(|t| (t, f(t))).collect()
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_decay_exponent(&series(|t| 3.0 * t.powi(-2)), (1.0, 60.0)).unwrap();
        assert!((fit.exponent + 2.0).abs() < 1e-12);
        assert!((fit.prefactor - 3.0).abs() < 1e-10);
    }

    #[test]
    fn perturbed_power_law() {
        let fit = fit_decay_exponent(&series(|t| t.powi(-2) * (1.0 + 0.1 * t.ln().sin())), (1.0, 60.0)).unwrap();
        assert!((fit.exponent + 2.0).abs() < 0.1, "{}", fit.exponent);
    }

    #[test]
    fn constant_series() {
        let fit = fit_decay_exponent(&series(|_| 0.7), (1.0, 60.0)).unwrap();
        assert!(fit.exponent.abs() < 1e-14);
    }

    #[test]
    fn short_window_is_rejected() {
        let e = fit_decay_exponent(&series(|t| 1.0 / t), (10.0, 12.5)).unwrap_err();
        assert_eq!(e, Error::InsufficientWindow(3));
    }
}
