//! Radar-camera fusion for automotive ISAR imaging: a deterministic
//! simulator of a turning vehicle seen by a two-channel FMCW radar and a
//! monocular camera, the receive-side imaging chain, and the CTRV tracker
//! whose state drives motion compensation.

pub mod camera;
pub mod config;
pub mod radar;
pub mod exec;
pub mod fusion;
pub mod isar;
pub mod metrics;
pub mod output;
pub mod pipeline;
pub mod rng;
pub mod scene;
pub mod sweep;
pub mod sync;

/// m/s
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
