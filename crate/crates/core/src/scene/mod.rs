//! Ground truth: target kinematics on the junction trajectories, the cuboid
//! target geometry, and the ego vehicle's sensor mounts.

mod layout;
mod target;
mod trajectory;

pub use layout::EgoSensorLayout;
pub use target::{
    body_to_world, facet_rcs, scatterer_snapshot, Facet, Scatterer, SnapshotOptions, TargetModel,
};
pub use trajectory::{sample_state, TargetState, Trajectory, TrajectoryKind, TrajectorySpec};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("time {t} s outside trajectory duration [0, {duration}] s")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("invalid target model: {0}")]
    InvalidTarget(String),
}
