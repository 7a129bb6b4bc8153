use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::MetricsError;

/// Mean with the half-width of its two-sided 95% Student-t interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

/// `t_{0.975, dof}`
pub fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("dof >= 1")
        .inverse_cdf(0.975)
}

/// `mean ± t_{0.975, n-1} · s / √n` with the sample standard deviation.
pub fn aggregate_ci(values: &[f64]) -> Result<ConfidenceInterval, MetricsError> {
    let n = values.len();
    if n < 2 {
        return Err(MetricsError::TooFewSeeds(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let half_width = if var == 0.0 {
        0.0
    } else {
        t_quantile_975(n - 1) * var.sqrt() / (n as f64).sqrt()
    };
    Ok(ConfidenceInterval { mean, half_width, n })
}
