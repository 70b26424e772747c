use serde::{Deserialize, Serialize};

use crate::error::{BbhcError, Result};

/// Parameters of `f(x) = a * x^b * ln(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    /// Sum of squared residuals of `ln f` over the fitted points.
    pub residual: f64,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.a * x.powf(self.b) * x.ln()
    }
}

/// Least-squares fit of `y = a * x^b * ln(x)` to `(x, y)` points.
///
/// Taking logs gives `ln y - ln ln x = ln a + b ln x`, which is linear in
/// `(ln a, b)` and is solved in closed form.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(BbhcError::InvalidInput(format!(
            "need at least 2 points to fit, got {}",
            points.len()
        )));
    }
    for &(x, y) in points {
        if !(x > 1.0 && x.is_finite()) {
            return Err(BbhcError::InvalidInput(format!("size {x} must be > 1")));
        }
        if !(y > 0.0 && y.is_finite()) {
            return Err(BbhcError::InvalidInput(format!("value {y} must be positive")));
        }
    }
    let xs: Vec<f64> = points.iter().map(|&(x, _)| x.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(x, y)| y.ln() - x.ln().ln()).collect();
    let n = points.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) {
        return Err(BbhcError::InvalidInput("need at least 2 distinct sizes".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let log_a = my - b * mx;
    let residual = xs.iter().zip(&ys).map(|(x, y)| (y - log_a - b * x).powi(2)).sum();
    Ok(FitResult {
        a: log_a.exp(),
        b,
        residual,
    })
}
