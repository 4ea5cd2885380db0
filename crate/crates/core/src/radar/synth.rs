use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ClutterField, RadarConfig, RadarCube, RadarError, REFERENCE_RANGE};
use crate::exec::Exec;
use crate::rng::{rng_for, Stream};
use crate::scene::Scatterer;
use crate::SPEED_OF_LIGHT;

/// A point return as the radar sees it at the centre of the CPI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarTarget {
    pub range: f64,
    pub radial_velocity: f64,
    /// Sine of the elevation angle above the receiver.
    pub sin_elevation: f64,
    /// Received amplitude including propagation loss and transmit gain.
    pub amplitude: f64,
}

fn in_view(cfg: &RadarConfig, rel: &Vector3<f64>) -> bool {
    let range = rel.norm();
    range <= cfg.max_range && rel.x > 0.0 && rel.y.atan2(rel.x).abs() <= cfg.fov_half_angle
}

/// Converts scene scatterers and clutter into radar returns: drops hidden
/// points and those outside the field of view, applies propagation loss and
/// the per-scatterer detection draw.
fn collect_targets(
    cfg: &RadarConfig,
    radar: &Vector3<f64>,
    scatterers: &[Scatterer],
    clutter: &ClutterField,
    seed: u64,
    cpi_index: usize,
) -> Result<Vec<RadarTarget>, RadarError> {
    let limit = cfg.unambiguous_range();
    let gain = cfg.tx_power.sqrt();
    let mut gate = rng_for(seed, Stream::RadarGating, &[cpi_index as u64]);
    let mut out = Vec::new();
    let clutter_iter = clutter.points.iter().map(|(p, a)| Scatterer {
        position: *p,
        reflectivity: *a,
        radial_velocity: 0.0,
        visible: true,
    });
    for (index, s) in scatterers.iter().copied().chain(clutter_iter).enumerate() {
        // One draw per scatterer regardless of outcome keeps the stream aligned.
        let detected = gate.random::<f64>() < cfg.p_d;
        if !s.position.iter().all(|v| v.is_finite())
            || !s.radial_velocity.is_finite()
            || !s.reflectivity.is_finite()
        {
            return Err(RadarError::NonFinite { index });
        }
        let rel = s.position - radar;
        let range = rel.norm();
        if range >= limit {
            return Err(RadarError::RangeAmbiguity { index, range, limit });
        }
        if !s.visible || !detected || !in_view(cfg, &rel) || range <= 0.0 {
            continue;
        }
        let loss = (REFERENCE_RANGE / range).powi(2);
        out.push(RadarTarget {
            range,
            radial_velocity: s.radial_velocity,
            sin_elevation: rel.z / range,
            amplitude: gain * s.reflectivity * loss,
        });
    }
    Ok(out)
}

/// Synthesizes one CPI. `scatterers` describe the target at the CPI centre;
/// ranges evolve linearly with their radial velocity across the pulses
/// (stop-and-hop within each pulse).
pub fn synthesize_cpi(
    cfg: &RadarConfig,
    radar: &Vector3<f64>,
    scatterers: &[Scatterer],
    clutter: &ClutterField,
    seed: u64,
    cpi_index: usize,
) -> Result<RadarCube, RadarError> {
    synthesize_cpi_with(Exec::default(), cfg, radar, scatterers, clutter, seed, cpi_index)
}

pub fn synthesize_cpi_with(
    exec: Exec,
    cfg: &RadarConfig,
    radar: &Vector3<f64>,
    scatterers: &[Scatterer],
    clutter: &ClutterField,
    seed: u64,
    cpi_index: usize,
) -> Result<RadarCube, RadarError> {
    cfg.validate()?;
    let targets = collect_targets(cfg, radar, scatterers, clutter, seed, cpi_index)?;
    Ok(synthesize_targets(exec, cfg, &targets, seed, cpi_index))
}

/// Sum of dechirp-ready chirp returns plus noise; one row per (channel, pulse).
pub fn synthesize_targets(
    exec: Exec,
    cfg: &RadarConfig,
    targets: &[RadarTarget],
    seed: u64,
    cpi_index: usize,
) -> RadarCube {
    let mut cube = RadarCube::zeros(*cfg, cpi_index);
    let pulses = cube.pulses;
    let fast = cube.fast;
    let fs = cfg.sample_rate;
    let beta = cfg.chirp_rate;
    let lambda = cfg.wavelength();
    let sigma = (cfg.noise_power / 2.0).sqrt();
    // Phase step of the quadratic chirp term grows by this factor per sample.
    let q = Complex64::from_polar(1.0, 2.0 * PI * beta / (fs * fs));

    exec.for_each_chunk_mut(&mut cube.data, fast, |row_index, row| {
        let channel = row_index / pulses;
        let pulse = row_index % pulses;
        let t = pulse as f64 * cfg.pri - cfg.cpi / 2.0;
        for tg in targets {
            let range = tg.range + tg.radial_velocity * t;
            let mut path = 2.0 * range;
            if channel == 1 {
                // The upper element is closer to an elevated point.
                path -= cfg.baseline * tg.sin_elevation;
            }
            let tau = path / SPEED_OF_LIGHT;
            let m0 = (tau * fs).ceil().max(0.0) as usize;
            if m0 >= fast {
                continue;
            }
            let carrier_cycles = (path / lambda).fract();
            let dt0 = m0 as f64 / fs - tau;
            let phase0 = -2.0 * PI * carrier_cycles + PI * beta * dt0 * dt0;
            let mut z = Complex64::from_polar(tg.amplitude, phase0);
            let mut w = Complex64::from_polar(1.0, PI * beta * (2.0 * dt0 / fs + 1.0 / (fs * fs)));
            for s in &mut row[m0..] {
                *s += z;
                z *= w;
                w *= q;
            }
        }
        if sigma > 0.0 {
            let mut rng = rng_for(
                seed,
                Stream::RadarNoise,
                &[cpi_index as u64, channel as u64, pulse as u64],
            );
            for s in row.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *s += Complex64::new(sigma * re, sigma * im);
            }
        }
    });
    cube
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::ClutterField;

    fn quiet() -> RadarConfig {
        let mut c = RadarConfig::desk_scale();
        c.pri = 0.1 / 128.0;
        c.chirp_rate = 1.5e9 / c.pri;
        c.sample_rate = 512.0 / c.pri;
        c.noise_power = 0.0;
        c.p_d = 1.0;
        c
    }

    fn point(x: f64, y: f64, z: f64, vr: f64, amp: f64) -> Scatterer {
        Scatterer {
            position: Vector3::new(x, y, z),
            reflectivity: amp,
            radial_velocity: vr,
            visible: true,
        }
    }

    #[test]
    fn recursion_matches_direct_evaluation() {
        let cfg = quiet();
        let tg = RadarTarget { range: 12.3, radial_velocity: 1.7, sin_elevation: 0.03, amplitude: 2.0 };
        let cube = synthesize_targets(Exec::Sequential, &cfg, &[tg], 0, 0);
        let fs = cfg.sample_rate;
        for (ch, p) in [(0, 0), (1, 77), (0, 127)] {
            let t = p as f64 * cfg.pri - cfg.cpi / 2.0;
            let mut path = 2.0 * (tg.range + tg.radial_velocity * t);
            if ch == 1 {
                path -= cfg.baseline * tg.sin_elevation;
            }
            let tau = path / SPEED_OF_LIGHT;
            for m in [0usize, 1, 2, 100, 511] {
                let tm = m as f64 / fs;
                let expect = if tm >= tau {
                    Complex64::from_polar(
                        2.0,
                        -2.0 * PI * cfg.carrier * tau + PI * cfg.chirp_rate * (tm - tau).powi(2),
                    )
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let got = cube.at(ch, p, m);
                assert!((got - expect).norm() < 1e-8, "ch {ch} p {p} m {m}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn noise_only_power() {
        let mut cfg = quiet();
        cfg.noise_power = 3.0;
        let cube = synthesize_cpi(&cfg, &Vector3::zeros(), &[], &ClutterField::empty(), 4, 0).unwrap();
        let n = cube.data.len() as f64;
        assert!(n >= 1e5);
        let mean = cube.power() / n;
        assert!((mean / 3.0 - 1.0).abs() < 0.05, "mean power {mean}");
    }

    #[test]
    fn linear_in_scatterers() {
        let cfg = quiet();
        let radar = Vector3::new(0.0, 0.0, 0.1);
        let a = [point(10.0, 1.0, 0.5, 0.3, 1.0), point(14.0, -2.0, 1.1, -0.7, 0.4)];
        let b = [point(20.0, 3.0, 0.2, 1.1, 2.0)];
        let none = ClutterField::empty();
        let ca = synthesize_cpi(&cfg, &radar, &a, &none, 1, 0).unwrap();
        let cb = synthesize_cpi(&cfg, &radar, &b, &none, 1, 0).unwrap();
        let all: Vec<_> = a.iter().chain(&b).copied().collect();
        let cab = synthesize_cpi(&cfg, &radar, &all, &none, 1, 0).unwrap();
        let scale = cab.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..cab.data.len() {
            assert!((cab.data[i] - ca.data[i] - cb.data[i]).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn channels_agree_at_zero_elevation() {
        let cfg = quiet();
        let radar = Vector3::new(0.0, 0.0, 0.3);
        let pts = [point(15.0, 2.0, 0.3, 2.0, 1.0), point(9.0, -1.0, 0.3, -1.0, 1.0)];
        let c = synthesize_cpi(&cfg, &radar, &pts, &ClutterField::empty(), 0, 0).unwrap();
        for (a, b) in c.channel(0).iter().zip(c.channel(1)) {
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn deterministic_and_policy_independent() {
        let mut cfg = quiet();
        cfg.noise_power = 0.5;
        cfg.p_d = 0.6;
        let radar = Vector3::zeros();
        let pts: Vec<_> = (0..10).map(|i| point(8.0 + i as f64, 0.5, 0.4, 0.1 * i as f64, 1.0)).collect();
        let none = ClutterField::empty();
        let a = synthesize_cpi_with(Exec::Sequential, &cfg, &radar, &pts, &none, 9, 3).unwrap();
        let b = synthesize_cpi_with(Exec::Parallel, &cfg, &radar, &pts, &none, 9, 3).unwrap();
        let c = synthesize_cpi(&cfg, &radar, &pts, &none, 9, 3).unwrap();
        assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.re.to_bits() == y.re.to_bits()
            && x.im.to_bits() == y.im.to_bits()));
        assert_eq!(a, c);
    }

    #[test]
    fn ambiguous_range_is_an_error() {
        let cfg = quiet();
        let far = [point(1.0, 0.0, 0.0, 0.0, 1.0), point(cfg.unambiguous_range() + 1.0, 0.0, 0.0, 0.0, 1.0)];
        let err = synthesize_cpi(&cfg, &Vector3::zeros(), &far, &ClutterField::empty(), 0, 0).unwrap_err();
        assert!(matches!(err, RadarError::RangeAmbiguity { index: 1, .. }));
    }

    #[test]
    fn out_of_view_points_are_silent() {
        let cfg = quiet();
        let pts = [point(-10.0, 0.0, 0.0, 0.0, 1.0), point(50.0, 0.0, 0.0, 0.0, 1.0), point(2.0, 10.0, 0.0, 0.0, 1.0)];
        let c = synthesize_cpi(&cfg, &Vector3::zeros(), &pts, &ClutterField::empty(), 0, 0).unwrap();
        assert_eq!(c.power(), 0.0);
    }
}
