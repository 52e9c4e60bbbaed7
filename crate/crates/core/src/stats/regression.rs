use serde::{Deserialize, Serialize};

use super::{check_pair, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    /// In-sample `1 - SSE/SST`; 0 when the response is constant.
    pub r2: f64,
    /// `sqrt(SSE / n)`.
    pub rmse: f64,
    pub n: usize,
}

/// Least-squares fit of `y = slope * x + intercept`.
pub fn ols_simple(x: &[f64], y: &[f64]) -> Result<RegressionResult, StatsError> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(StatsError::Degenerate);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - (slope * a + intercept);
            e * e
        })
        .sum();
    let r2 = if syy == 0.0 { 0.0 } else { 1.0 - sse / syy };
    Ok(RegressionResult { slope, intercept, r2, rmse: (sse / n).sqrt(), n: x.len() })
}
