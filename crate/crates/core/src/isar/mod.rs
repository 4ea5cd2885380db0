//! Receive-side processing: motion compensation, dechirp, 2D DFT imaging,
//! interferometric elevation, OS-CFAR detection and clustering.

mod cfar;
mod cluster;
mod image;
mod interferogram;

pub use cfar::{os_cfar_detect, os_cfar_detect_with, os_cfar_scale, CfarConfig, Detection};
pub use cluster::{
    cluster_detections, cluster_measurements, cluster_to_measurement, ClusterConfig,
    RadarMeasurement,
};
pub use image::{
    compensate_and_stretch, compensate_and_stretch_with, form_image, form_image_with,
    motion_compensate, stretch_process, Compensation, IsarImage, StretchConfig, Window,
};
pub use interferogram::{interferogram, noise_floor, Interferogram};

use thiserror::Error;

/// Turn rates below this give crossrange cells too coarse to image.
pub const MIN_TURN_RATE: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum IsarError {
    #[error("turn rate {omega} rad/s is below the imaging threshold")]
    GateRejected { omega: f64 },
    #[error("invalid processing configuration: {0}")]
    InvalidConfig(String),
    #[error("image dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
}

/// Accepts a CPI for crossrange imaging when the turn rate is large enough.
pub fn image_gate(omega: f64) -> bool {
    omega.is_finite() && omega.abs() >= MIN_TURN_RATE
}

/// Crossrange cell size of a target turning at `omega` over `cpi`.
pub fn crossrange_resolution(wavelength: f64, omega: f64, cpi: f64) -> f64 {
    wavelength / (2.0 * omega.abs() * cpi)
}
