//! Least-squares rate fits of measured values against `ε`.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    /// `s` in `value ≈ c·ε^s`.
    pub slope: f64,
    /// `ln c`.
    pub intercept: f64,
    pub r2: f64,
    /// Sum of squared log residuals of the power fit.
    pub residual: f64,
    /// Slope of `ln value` against `ln(ε·ln(1/ε + 2))`.
    pub alt_slope: f64,
    pub alt_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FitError {
    TooFewRows(usize),
    NonPositive { epsilon: f64, value: f64 },
}

impl std::error::Error for FitError {}

impl std::fmt::Display for FitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::TooFewRows(n) => write!(f, "a rate fit needs at least 3 rows, got {n}"),
            Self::NonPositive { epsilon, value } => write!(f, "value {value} at epsilon {epsilon} is not positive"),
        }
    }
}

/// Ordinary least squares `y ≈ a + s·x`; returns `(s, a, R², Σ residual²)`.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let s = sxy / sxx;
    let a = my - s * mx;
    let res: f64 = x.iter().zip(y).map(|(a0, b)| (b - a - s * a0).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - res / syy).clamp(0.0, 1.0) } else { 1.0 };
    (s, a, r2, res)
}

pub fn fit_rate(epsilons: &[f64], values: &[f64]) -> Result<RateFit, FitError> {
    if epsilons.len() < 3 || epsilons.len() != values.len() {
        return Err(FitError::TooFewRows(epsilons.len().min(values.len())));
    }
    if let Some((&epsilon, &value)) = epsilons.iter().zip(values).find(|(e, v)| !(**v > 0.0) || !(**e > 0.0)) {
        return Err(FitError::NonPositive { epsilon, value });
    }
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let lx: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
    let (slope, intercept, r2, residual) = ols(&lx, &ly);
    let lalt: Vec<f64> = epsilons.iter().map(|e| (e * (1.0 / e + 2.0).ln()).ln()).collect();
    let (alt_slope, _, _, alt_residual) = ols(&lalt, &ly);
    Ok(RateFit { slope, intercept, r2, residual, alt_slope, alt_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: [f64; 4] = [0.125, 0.0625, 0.03125, 0.015625];

    #[test]
    fn pure_powers() {
        for s in [1.0, 0.5] {
            let v: Vec<f64> = EPS.iter().map(|e: &f64| 3.0 * e.powf(s)).collect();
            let f = fit_rate(&EPS, &v).unwrap();
            assert!((f.slope - s).abs() < 1e-12);
            assert!((f.r2 - 1.0).abs() < 1e-12);
            assert!((f.intercept - 3.0f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn logarithmic_data_prefers_the_alternate_model() {
        let v: Vec<f64> = EPS.iter().map(|e| e * (1.0 / e).ln()).collect();
        let f = fit_rate(&EPS, &v).unwrap();
        // ln v = ln ε + ln ln(1/ε): the OLS slope over equally spaced ln ε
        // is 1 − Σ t_k ln ln 2^{k+3} / Σ t_k² with centered t = (−1.5, …, 1.5)
        let ll: Vec<f64> = (3..7).map(|k| (k as f64 * 2f64.ln()).ln()).collect();
        let t = [-1.5, -0.5, 0.5, 1.5];
        let d: f64 = t.iter().zip(&ll).map(|(a, b)| a * b).sum::<f64>() / (5.0 * 2f64.ln());
        assert!((f.slope - (1.0 - d)).abs() < 1e-12);
        assert!((f.slope - 0.667807).abs() < 1e-6);
        assert!(f.alt_residual < f.residual);
    }

    #[test]
    fn rejects_bad_rows() {
        assert_eq!(fit_rate(&EPS[..2], &[1.0, 0.5]), Err(FitError::TooFewRows(2)));
        assert!(matches!(fit_rate(&EPS, &[1.0, 0.0, 0.5, 0.2]), Err(FitError::NonPositive { .. })));
    }
}
