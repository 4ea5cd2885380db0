//! Dual-channel FMCW receive-signal synthesis for one coherent processing
//! interval, plus the static clutter model and the binary cube format.

mod clutter;
mod cube;
mod io;
mod synth;

pub use clutter::{spawn_clutter, ClutterField, ClutterParams, CoverageRegion};
pub use cube::RadarCube;
pub use io::{decode_cube, encode_cube, ingest_cube, read_cube, write_cube, CubeIoError, CUBE_FORMAT_VERSION};
pub use synth::{synthesize_cpi, synthesize_cpi_with, synthesize_targets, RadarTarget};

use thiserror::Error;

use crate::SPEED_OF_LIGHT;

/// Range at which a unit-RCS point has unit amplitude.
pub const REFERENCE_RANGE: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum RadarError {
    #[error("invalid radar configuration: {0}")]
    InvalidConfig(String),
    #[error("scatterer {index} at {range} m exceeds the unambiguous range {limit} m")]
    RangeAmbiguity { index: usize, range: f64, limit: f64 },
    #[error("non-finite scatterer {index}")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarConfig {
    /// Carrier frequency, Hz.
    pub carrier: f64,
    /// Chirp rate, Hz/s.
    pub chirp_rate: f64,
    /// Pulse repetition interval, s.
    pub pri: f64,
    /// Coherent processing interval, s.
    pub cpi: f64,
    /// Fast-time ADC rate, Hz.
    pub sample_rate: f64,
    pub fast_samples: usize,
    pub channels: usize,
    /// Vertical separation of the receive elements, m.
    pub baseline: f64,
    /// Scalar power gain applied to every return.
    pub tx_power: f64,
    /// Complex noise power per sample.
    pub noise_power: f64,
    /// Per-scatterer detection probability.
    pub p_d: f64,
    /// Per-cell false-alarm probability.
    pub p_fa: f64,
    /// Instrumented range; returns from farther away are not digitised.
    pub max_range: f64,
    /// Azimuth half-width of the field of view, rad.
    pub fov_half_angle: f64,
}

impl RadarConfig {
    /// 77 GHz, 1.5 GHz sweep (0.1 m bins), 1024 pulses in a 0.1 s CPI,
    /// 512 fast-time samples.
    pub fn desk_scale() -> Self {
        let pri = 0.1 / 1024.0;
        let carrier = 77e9;
        RadarConfig {
            carrier,
            chirp_rate: 1.5e9 / pri,
            pri,
            cpi: 0.1,
            sample_rate: 512.0 / pri,
            fast_samples: 512,
            channels: 2,
            baseline: SPEED_OF_LIGHT / carrier / 2.0,
            tx_power: 1.0,
            noise_power: 1.0,
            p_d: 0.9,
            p_fa: 1e-6,
            max_range: 40.0,
            fov_half_angle: 60f64.to_radians(),
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier
    }

    pub fn pulses(&self) -> usize {
        (self.cpi / self.pri).round() as usize
    }

    /// Swept bandwidth seen by the ADC window.
    pub fn bandwidth(&self) -> f64 {
        self.chirp_rate * self.fast_samples as f64 / self.sample_rate
    }

    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth())
    }

    pub fn doppler_resolution(&self) -> f64 {
        1.0 / self.cpi
    }

    pub fn prf(&self) -> f64 {
        1.0 / self.pri
    }

    /// Range at which the round-trip delay equals one PRI.
    pub fn unambiguous_range(&self) -> f64 {
        SPEED_OF_LIGHT * self.pri / 2.0
    }

    pub fn validate(&self) -> Result<(), RadarError> {
        let bad = |m: String| Err(RadarError::InvalidConfig(m));
        let positive = [
            ("carrier", self.carrier),
            ("chirp_rate", self.chirp_rate),
            ("pri", self.pri),
            ("cpi", self.cpi),
            ("sample_rate", self.sample_rate),
            ("baseline", self.baseline),
            ("max_range", self.max_range),
            ("fov_half_angle", self.fov_half_angle),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.tx_power >= 0.0 && self.noise_power >= 0.0) {
            return bad("tx_power and noise_power must be non-negative".into());
        }
        let ratio = self.cpi / self.pri;
        if (ratio - ratio.round()).abs() > 1e-6 || ratio.round() < 1.0 {
            return bad(format!("cpi {} is not an integer multiple of pri {}", self.cpi, self.pri));
        }
        if self.fast_samples == 0 {
            return bad("fast_samples must be positive".into());
        }
        if self.fast_samples as f64 / self.sample_rate > self.pri * (1.0 + 1e-9) {
            return bad("fast-time window is longer than the PRI".into());
        }
        if !(1..=2).contains(&self.channels) {
            return bad(format!("channels must be 1 or 2, got {}", self.channels));
        }
        for (name, p) in [("p_d", self.p_d), ("p_fa", self.p_fa)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    /// FNV-1a over the little-endian encoding of every field.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for v in self.float_fields() {
            eat(&v.to_le_bytes());
        }
        eat(&(self.fast_samples as u64).to_le_bytes());
        eat(&(self.channels as u64).to_le_bytes());
        h
    }

    pub(crate) fn float_fields(&self) -> [f64; 12] {
        [
            self.carrier,
            self.chirp_rate,
            self.pri,
            self.cpi,
            self.sample_rate,
            self.baseline,
            self.tx_power,
            self.noise_power,
            self.p_d,
            self.p_fa,
            self.max_range,
            self.fov_half_angle,
        ]
    }

    pub(crate) fn from_fields(f: [f64; 12], fast_samples: usize, channels: usize) -> Self {
        RadarConfig {
            carrier: f[0],
            chirp_rate: f[1],
            pri: f[2],
            cpi: f[3],
            sample_rate: f[4],
            baseline: f[5],
            tx_power: f[6],
            noise_power: f[7],
            p_d: f[8],
            p_fa: f[9],
            max_range: f[10],
            fov_half_angle: f[11],
            fast_samples,
            channels,
        }
    }
}
