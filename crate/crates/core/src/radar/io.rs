//! Flat binary cube file: a little-endian header followed by interleaved
//! (re, im) f64 samples in `[channel][pulse][fast]` order.
//!
//! Header layout: magic `ISARCUBE`, version u32, channels u32, pulses u32,
//! fast u32, cpi index u64, twelve f64 config fields, config hash u64.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use super::{RadarConfig, RadarCube};

pub const CUBE_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"ISARCUBE";
const HEADER_LEN: usize = 8 + 4 * 4 + 8 + 12 * 8 + 8;
/// Refuse cubes above 2^31 complex samples (32 GiB).
const MAX_SAMPLES: u64 = 1 << 31;

#[derive(Debug, Error)]
pub enum CubeIoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a radar cube file (bad magic)")]
    BadMagic,
    #[error("unsupported cube format version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated cube file: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("cube file has {extra} unexpected trailing bytes")]
    TrailingData { extra: u64 },
    #[error("cube dimensions {channels} x {pulses} x {fast} are too large")]
    DimensionOverflow { channels: u32, pulses: u32, fast: u32 },
    #[error("malformed cube header: {0}")]
    MalformedHeader(String),
    #[error("config hash mismatch: header says {stored:#018x}, fields give {computed:#018x}")]
    HashMismatch { stored: u64, computed: u64 },
}

pub fn encode_cube(cube: &RadarCube) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + cube.data.len() * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CUBE_FORMAT_VERSION.to_le_bytes());
    for d in [cube.channels, cube.pulses, cube.fast] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(cube.cpi_index as u64).to_le_bytes());
    for v in cube.config.float_fields() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&cube.config.hash().to_le_bytes());
    for z in &cube.data {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn write_cube(path: &Path, cube: &RadarCube) -> Result<(), CubeIoError> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    f.write_all(&encode_cube(cube))?;
    f.flush()?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let b: [u8; N] = self.buf[self.pos..self.pos + N].try_into().expect("length checked");
        self.pos += N;
        b
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn decode_cube(bytes: &[u8]) -> Result<RadarCube, CubeIoError> {
    if bytes.len() >= MAGIC.len() && &bytes[..MAGIC.len()] != MAGIC {
        return Err(CubeIoError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        if bytes.len() < MAGIC.len() && !MAGIC.starts_with(bytes) {
            return Err(CubeIoError::BadMagic);
        }
        return Err(CubeIoError::Truncated {
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let mut r = Reader { buf: bytes, pos: MAGIC.len() };
    let version = r.u32();
    if version != CUBE_FORMAT_VERSION {
        return Err(CubeIoError::UnsupportedVersion(version));
    }
    let (channels, pulses, fast) = (r.u32(), r.u32(), r.u32());
    let cpi_index = r.u64();
    let fields: [f64; 12] = std::array::from_fn(|_| r.f64());
    let stored = r.u64();

    let samples = (channels as u64)
        .checked_mul(pulses as u64)
        .and_then(|n| n.checked_mul(fast as u64))
        .filter(|n| *n <= MAX_SAMPLES)
        .ok_or(CubeIoError::DimensionOverflow { channels, pulses, fast })?;
    let config = RadarConfig::from_fields(fields, fast as usize, channels as usize);
    let computed = config.hash();
    if computed != stored {
        return Err(CubeIoError::HashMismatch { stored, computed });
    }
    config
        .validate()
        .map_err(|e| CubeIoError::MalformedHeader(e.to_string()))?;
    if config.pulses() != pulses as usize {
        return Err(CubeIoError::MalformedHeader(format!(
            "{pulses} pulses recorded but the config implies {}",
            config.pulses()
        )));
    }
    let expected = HEADER_LEN as u64 + samples * 16;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(CubeIoError::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(CubeIoError::TrailingData { extra: actual - expected });
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("chunk of 16"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("chunk of 16"));
            Complex64::new(re, im)
        })
        .collect();
    Ok(RadarCube {
        config,
        cpi_index: cpi_index as usize,
        channels: channels as usize,
        pulses: pulses as usize,
        fast: fast as usize,
        data,
    })
}

pub fn read_cube(path: &Path) -> Result<RadarCube, CubeIoError> {
    decode_cube(&fs::read(path)?)
}

/// Loads an externally recorded or previously simulated cube.
pub fn ingest_cube(path: &Path) -> Result<RadarCube, CubeIoError> {
    read_cube(path)
}
