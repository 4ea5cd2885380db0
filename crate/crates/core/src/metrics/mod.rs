//! Image and track quality measures and the per-run summary table.

mod report;
mod ssim;

pub use report::{rmse, tabulate_run, FrameOutcome, RunReport, TrajectoryReport};
pub use ssim::{image_ssim, resample_db, ssim, to_db, Grid, SsimConfig};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("grid dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("image has no power")]
    ZeroImage,
    #[error("invalid SSIM configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed frame log line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Shannon entropy (nats) of the power distribution over image cells.
pub fn image_entropy(powers: &[f64]) -> Result<f64, MetricsError> {
    let total: f64 = powers.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(MetricsError::ZeroImage);
    }
    let h = powers
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| {
            let q = p / total;
            -q * q.ln()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}
