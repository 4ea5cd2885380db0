use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{image_gate, IsarError};
use crate::exec::Exec;
use crate::radar::RadarCube;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rect,
    Hann,
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * (i as f64 + 0.5) / n as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchConfig {
    /// Reference range at the centre of the range axis, m.
    pub r_ref: f64,
    /// Reference chirp duration, s (at least one PRI).
    pub t_ref: f64,
    /// DFT lengths; larger than the data means zero padding.
    pub fft_fast: usize,
    pub fft_slow: usize,
    pub window: Window,
}

impl StretchConfig {
    /// Unpadded transform with the reference at the middle of the ADC window.
    pub fn for_cube(cube: &RadarCube) -> Self {
        let cfg = &cube.config;
        let span = cfg.range_resolution() * cube.fast as f64;
        StretchConfig {
            r_ref: span / 2.0,
            t_ref: cfg.pri,
            fft_fast: cube.fast,
            fft_slow: cube.pulses,
            window: Window::Rect,
        }
    }

    pub fn validate(&self, cube: &RadarCube) -> Result<(), IsarError> {
        let bad = |m: String| Err(IsarError::InvalidConfig(m));
        if self.t_ref < cube.config.pri * (1.0 - 1e-12) {
            return bad(format!("reference duration {} is shorter than the PRI", self.t_ref));
        }
        if self.fft_fast < cube.fast || self.fft_slow < cube.pulses {
            return bad(format!(
                "DFT sizes {}x{} smaller than data {}x{}",
                self.fft_slow, self.fft_fast, cube.pulses, cube.fast
            ));
        }
        if !self.r_ref.is_finite() {
            return bad("reference range must be finite".into());
        }
        Ok(())
    }
}

/// Bulk motion used to compensate one CPI: range `r0` at the first pulse and
/// constant range rate `vr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compensation {
    pub r0: f64,
    pub vr: f64,
    /// Also slide the dechirp reference along with the target so its
    /// returns stay in one range cell for the whole CPI.
    pub align_range: bool,
}

/// Removes the bulk phase history `2 (r0 + vr t) / lambda` from every pulse.
pub fn motion_compensate(cube: &RadarCube, r0: f64, vr: f64) -> RadarCube {
    let mut out = cube.clone();
    let lambda = cube.config.wavelength();
    let pri = cube.config.pri;
    let fast = cube.fast;
    let pulses = cube.pulses;
    Exec::default().for_each_chunk_mut(&mut out.data, fast, |row, samples| {
        let t = (row % pulses) as f64 * pri;
        let cycles = (2.0 * (r0 + vr * t) / lambda).rem_euclid(1.0);
        let rot = Complex64::from_polar(1.0, 2.0 * PI * cycles);
        samples.iter_mut().for_each(|s| *s *= rot);
    });
    out
}

/// Mixes every pulse with the conjugate reference chirp.
pub fn stretch_process(cube: &RadarCube, cfg: &StretchConfig) -> Result<RadarCube, IsarError> {
    compensate_and_stretch(cube, cfg, None)
}

pub fn compensate_and_stretch(
    cube: &RadarCube,
    cfg: &StretchConfig,
    comp: Option<&Compensation>,
) -> Result<RadarCube, IsarError> {
    compensate_and_stretch_with(Exec::default(), cube, cfg, comp)
}

/// Motion compensation and dechirp in one pass over the cube.
pub fn compensate_and_stretch_with(
    exec: Exec,
    cube: &RadarCube,
    cfg: &StretchConfig,
    comp: Option<&Compensation>,
) -> Result<RadarCube, IsarError> {
    cfg.validate(cube)?;
    let rc = &cube.config;
    let (fs, beta, lambda) = (rc.sample_rate, rc.chirp_rate, rc.wavelength());
    let (pri, cpi) = (rc.pri, rc.cpi);
    let pulses = cube.pulses;
    let mut out = cube.clone();
    let static_ref = (!comp.is_some_and(|c| c.align_range)).then(|| reference_row(cube.fast, fs, beta, 2.0 * cfg.r_ref / SPEED_OF_LIGHT));
    exec.for_each_chunk_mut(&mut out.data, cube.fast, |row, samples| {
        let t = (row % pulses) as f64 * pri;
        let mut bulk = Complex64::new(1.0, 0.0);
        let mut moving = None;
        if let Some(c) = comp {
            let cycles = (2.0 * (c.r0 + c.vr * t) / lambda).rem_euclid(1.0);
            bulk = Complex64::from_polar(1.0, 2.0 * PI * cycles);
            if c.align_range {
                // Reference range is quoted at the CPI centre.
                let r = cfg.r_ref + c.vr * (t - cpi / 2.0);
                moving = Some(reference_row(samples.len(), fs, beta, 2.0 * r / SPEED_OF_LIGHT));
            }
        }
        let reference = moving.as_deref().or(static_ref.as_deref()).expect("one reference");
        for (s, r) in samples.iter_mut().zip(reference) {
            *s *= bulk * r;
        }
    });
    Ok(out)
}

/// Conjugate reference chirp `exp(-j pi beta (tau - tau_ref)^2)` on the ADC grid.
fn reference_row(n: usize, fs: f64, beta: f64, tau_ref: f64) -> Vec<Complex64> {
    (0..n)
        .map(|m| {
            let d = m as f64 / fs - tau_ref;
            Complex64::from_polar(1.0, -PI * beta * d * d)
        })
        .collect()
}

/// Range-Doppler or range-crossrange image of one receive channel, stored
/// `[doppler][range]` with both axes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct IsarImage {
    pub data: Vec<Complex64>,
    pub n_doppler: usize,
    pub n_range: usize,
    /// Range of each column, m.
    pub range_axis: Vec<f64>,
    /// Doppler frequency of each row, Hz (positive for receding motion).
    pub doppler_axis: Vec<f64>,
    /// Crossrange of each row, m; present when a turn rate was supplied.
    pub crossrange_axis: Option<Vec<f64>>,
    pub omega: Option<f64>,
    pub cpi_index: usize,
    pub channel: usize,
    pub wavelength: f64,
}

impl IsarImage {
    pub fn at(&self, doppler: usize, range: usize) -> Complex64 {
        self.data[doppler * self.n_range + range]
    }

    pub fn power(&self, doppler: usize, range: usize) -> f64 {
        self.at(doppler, range).norm_sqr()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_doppler, self.n_range)
    }

    pub fn range_spacing(&self) -> f64 {
        if self.n_range > 1 {
            self.range_axis[1] - self.range_axis[0]
        } else {
            0.0
        }
    }

    pub fn doppler_spacing(&self) -> f64 {
        if self.n_doppler > 1 {
            self.doppler_axis[1] - self.doppler_axis[0]
        } else {
            0.0
        }
    }

    /// Index and power of the strongest cell.
    pub fn peak(&self) -> (usize, usize, f64) {
        let (idx, p) = self
            .data
            .iter()
            .map(|z| z.norm_sqr())
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, (i, p)| if p > a.1 { (i, p) } else { a });
        (idx / self.n_range, idx % self.n_range, p)
    }

    /// Maps the Doppler rows to crossrange with turn rate `omega`.
    pub fn with_crossrange(mut self, omega: f64) -> Result<Self, IsarError> {
        if !image_gate(omega) {
            return Err(IsarError::GateRejected { omega });
        }
        let scale = self.wavelength / (2.0 * omega);
        self.crossrange_axis = Some(self.doppler_axis.iter().map(|f| f * scale).collect());
        self.omega = Some(omega);
        Ok(self)
    }
}

/// FFT output index holding display index `j` of an `n`-point ascending
/// axis whose physical value decreases with FFT frequency.
fn reversed_bin(j: usize, n: usize) -> usize {
    (n / 2 + n - j) % n
}

pub fn form_image(
    cube: &RadarCube,
    cfg: &StretchConfig,
    omega: Option<f64>,
) -> Result<Vec<IsarImage>, IsarError> {
    form_image_with(Exec::default(), cube, cfg, omega)
}

/// 2D DFT of a dechirped cube, one image per channel.
pub fn form_image_with(
    exec: Exec,
    cube: &RadarCube,
    cfg: &StretchConfig,
    omega: Option<f64>,
) -> Result<Vec<IsarImage>, IsarError> {
    cfg.validate(cube)?;
    if let Some(w) = omega {
        if !image_gate(w) {
            return Err(IsarError::GateRejected { omega: w });
        }
    }
    let rc = &cube.config;
    let (nf, ns) = (cfg.fft_fast, cfg.fft_slow);
    let mut planner = FftPlanner::<f64>::new();
    let fft_fast: Arc<dyn Fft<f64>> = planner.plan_fft_forward(nf);
    let fft_slow: Arc<dyn Fft<f64>> = planner.plan_fft_forward(ns);
    let w_fast = cfg.window.weights(cube.fast);
    let w_slow = cfg.window.weights(cube.pulses);

    let dr = SPEED_OF_LIGHT * rc.sample_rate / (2.0 * rc.chirp_rate * nf as f64);
    let range_axis: Vec<f64> = (0..nf)
        .map(|j| cfg.r_ref + (j as f64 - (nf / 2) as f64) * dr)
        .collect();
    let df = rc.prf() / ns as f64;
    let doppler_axis: Vec<f64> = (0..ns).map(|i| (i as f64 - (ns / 2) as f64) * df).collect();

    let mut images = Vec::with_capacity(cube.channels);
    for ch in 0..cube.channels {
        let src = cube.channel(ch);
        // Rows: pulses, zero padded to [ns][nf].
        let mut grid = vec![Complex64::new(0.0, 0.0); ns * nf];
        exec.for_each_chunk_mut(&mut grid, nf, |p, row| {
            if p < cube.pulses {
                let s = &src[p * cube.fast..(p + 1) * cube.fast];
                for (m, (o, v)) in row.iter_mut().zip(s).enumerate() {
                    *o = v * (w_fast[m] * w_slow[p]);
                }
                fft_fast.process(row);
            }
        });
        // Transpose to [range bin][pulse] and transform along slow time.
        let mut cols = vec![Complex64::new(0.0, 0.0); nf * ns];
        exec.for_each_chunk_mut(&mut cols, ns, |k, col| {
            for (p, c) in col.iter_mut().enumerate() {
                *c = grid[p * nf + k];
            }
            fft_slow.process(col);
        });
        let mut data = vec![Complex64::new(0.0, 0.0); ns * nf];
        exec.for_each_chunk_mut(&mut data, nf, |i, row| {
            let q = reversed_bin(i, ns);
            for (j, o) in row.iter_mut().enumerate() {
                *o = cols[reversed_bin(j, nf) * ns + q];
            }
        });
        let img = IsarImage {
            data,
            n_doppler: ns,
            n_range: nf,
            range_axis: range_axis.clone(),
            doppler_axis: doppler_axis.clone(),
            crossrange_axis: None,
            omega: None,
            cpi_index: cube.cpi_index,
            channel: ch,
            wavelength: rc.wavelength(),
        };
        images.push(match omega {
            Some(w) => img.with_crossrange(w)?,
            None => img,
        });
    }
    Ok(images)
}
