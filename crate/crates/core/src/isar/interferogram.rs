use std::f64::consts::{LN_2, PI};

use super::{IsarError, IsarImage};

/// Per-bin elevation angle from the phase difference of the two channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferogram {
    /// Elevation, rad, `[doppler][range]`; zero where masked.
    pub theta: Vec<f64>,
    pub valid: Vec<bool>,
    pub n_doppler: usize,
    pub n_range: usize,
    /// Bins dropped because the unwrapped phase implied |sin| > 1.
    pub out_of_domain: usize,
}

impl Interferogram {
    pub fn at(&self, doppler: usize, range: usize) -> Option<f64> {
        let i = doppler * self.n_range + range;
        self.valid[i].then_some(self.theta[i])
    }
}

/// Mean noise power per cell estimated from the median cell power, which for
/// exponentially distributed noise equals mean * ln 2.
pub fn noise_floor(img: &IsarImage) -> f64 {
    let mut p = img.powers();
    if p.is_empty() {
        return 0.0;
    }
    let mid = p.len() / 2;
    let (_, m, _) = p.select_nth_unstable_by(mid, f64::total_cmp);
    *m / LN_2
}

fn wrap(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Elevation map `asin(lambda * dphi / (2 pi d))`. Bins where either channel
/// is at or below `gate_power` are masked.
pub fn interferogram(
    img1: &IsarImage,
    img2: &IsarImage,
    baseline: f64,
    gate_power: f64,
) -> Result<Interferogram, IsarError> {
    if img1.dims() != img2.dims() {
        return Err(IsarError::DimensionMismatch(img1.dims(), img2.dims()));
    }
    if !(baseline > 0.0) {
        return Err(IsarError::InvalidConfig("baseline must be positive".into()));
    }
    let lambda = img1.wavelength;
    let (nd, nr) = img1.dims();
    let n = nd * nr;
    let mut valid: Vec<bool> = img1
        .data
        .iter()
        .zip(&img2.data)
        .map(|(a, b)| a.norm_sqr() > gate_power && b.norm_sqr() > gate_power)
        .collect();
    let mut phase: Vec<f64> = img1
        .data
        .iter()
        .zip(&img2.data)
        .map(|(a, b)| wrap((b * a.conj()).arg()))
        .collect();

    // Phase can only wrap when the baseline exceeds half a wavelength; then
    // unwrap along range across each run of consecutive valid bins.
    if baseline > lambda / 2.0 {
        for row in 0..nd {
            let base = row * nr;
            for j in 1..nr {
                let (a, b) = (base + j - 1, base + j);
                if valid[a] && valid[b] {
                    phase[b] = phase[a] + wrap(phase[b] - phase[a]);
                }
            }
        }
    }

    let mut theta = vec![0.0; n];
    let mut out_of_domain = 0;
    for i in 0..n {
        if !valid[i] {
            continue;
        }
        let s = lambda * phase[i] / (2.0 * PI * baseline);
        if s.abs() > 1.0 {
            valid[i] = false;
            out_of_domain += 1;
        } else {
            theta[i] = s.asin();
        }
    }
    Ok(Interferogram { theta, valid, n_doppler: nd, n_range: nr, out_of_domain })
}
