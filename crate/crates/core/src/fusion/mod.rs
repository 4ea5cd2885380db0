//! CTRV extended Kalman filter fusing radar range/Doppler with the camera's
//! lateral pixel coordinate.
//!
//! The state lives in the radar frame: `[x, y, vx, vy, omega]` with x along
//! the radar boresight and y to its left.

mod ctrv;
mod ekf;
mod gate;
mod measurement;
mod track;

pub use ctrv::{noise_gain, predict, process_noise, transition, transition_jacobian};
pub use ekf::{ekf_step, update, GainReport};
pub use gate::{gate, GateConfig, GateOutcome};
pub use measurement::{
    initial_position, measurement_jacobian, measurement_model, DopplerConvention,
    MeasurementModel,
};
pub use track::{InitConfig, TrackRecord, TrackStatus, Tracker};

use nalgebra::{Matrix3, SMatrix, SVector};
use thiserror::Error;

pub type StateVector = SVector<f64, 5>;
pub type StateMatrix = SMatrix<f64, 5, 5>;

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("target at the radar origin: range is zero")]
    ZeroRange,
    #[error("innovation covariance is not invertible")]
    SingularInnovation,
    #[error("invalid noise configuration: {0}")]
    InvalidNoise(String),
}

/// Filter estimate after processing CPI `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusedState {
    pub x: StateVector,
    pub p: StateMatrix,
    pub k: usize,
}

impl FusedState {
    pub fn range(&self) -> f64 {
        self.x[0].hypot(self.x[1])
    }

    pub fn radial_velocity(&self) -> f64 {
        let r = self.range();
        if r > 0.0 {
            (self.x[0] * self.x[2] + self.x[1] * self.x[3]) / r
        } else {
            0.0
        }
    }

    pub fn omega(&self) -> f64 {
        self.x[4]
    }

    /// Turn rate of the line of sight, rad/s.
    pub fn bearing_rate(&self) -> f64 {
        let (x, y, vx, vy) = (self.x[0], self.x[1], self.x[2], self.x[3]);
        let r2 = x * x + y * y;
        if r2 > 0.0 {
            (x * vy - y * vx) / r2
        } else {
            0.0
        }
    }

    /// Rotation rate of the target aspect seen by the radar: own yaw rate
    /// minus the line-of-sight rate.
    pub fn aspect_rate(&self) -> f64 {
        self.omega() - self.bearing_rate()
    }

    /// Smallest eigenvalue of the covariance.
    pub fn min_eigenvalue(&self) -> f64 {
        self.p.symmetric_eigen().eigenvalues.min()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Acceleration noise, m/s^2.
    pub sigma_a: f64,
    /// Yaw acceleration noise, rad/s^2.
    pub sigma_alpha: f64,
    /// Range measurement standard deviation, m.
    pub sigma_range: f64,
    /// Doppler measurement standard deviation, Hz.
    pub sigma_doppler: f64,
    /// Lateral pixel standard deviation.
    pub sigma_pixel: f64,
    /// Update interval, s.
    pub dt: f64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        let all = [
            self.sigma_a,
            self.sigma_alpha,
            self.sigma_range,
            self.sigma_doppler,
            self.sigma_pixel,
            self.dt,
        ];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(FusionError::InvalidNoise(format!("all noise terms must be positive: {all:?}")))
        }
    }

    pub fn measurement_covariance(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&nalgebra::Vector3::new(
            self.sigma_range.powi(2),
            self.sigma_doppler.powi(2),
            self.sigma_pixel.powi(2),
        ))
    }
}

/// Gated observation for one CPI; any component may be missing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FusedMeasurement {
    pub range: Option<f64>,
    pub doppler: Option<f64>,
    pub pixel: Option<f64>,
    pub k: usize,
}

impl FusedMeasurement {
    pub fn components(&self) -> [Option<f64>; 3] {
        [self.range, self.doppler, self.pixel]
    }

    pub fn is_empty(&self) -> bool {
        self.components().iter().all(Option::is_none)
    }
}
