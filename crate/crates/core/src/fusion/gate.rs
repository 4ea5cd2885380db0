use super::{measurement_jacobian, measurement_model, FusedMeasurement, FusedState, MeasurementModel, NoiseConfig};
use crate::camera::CameraDetection;
use crate::isar::RadarMeasurement;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateConfig {
    /// Gate half-width in standard deviations of the prediction.
    pub sigmas: f64,
    /// Floor on the radar position gate, m.
    pub min_radius: f64,
    /// Floor on the radar Doppler gate, Hz.
    pub min_doppler: f64,
    /// Radar centroids within this many Hz of zero Doppler are taken to be
    /// static clutter (the radar itself does not move).
    pub clutter_notch: f64,
    /// Floor on the camera gate, pixels.
    pub min_pixels: f64,
    /// Report the detection-weighted mean of every radar centroid inside the
    /// gate instead of the nearest one. Centroids of one extended target
    /// spread over its body; their mean sits near its centre.
    pub merge_radar: bool,
    /// Width of the camera image. Boxes cut by its left or right edge have
    /// the wrong centre; the tracker rebuilds or drops them before gating.
    pub image_width: Option<f64>,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig { sigmas: 3.0, min_radius: 3.0, min_doppler: f64::INFINITY, clutter_notch: 0.0, min_pixels: 30.0, merge_radar: false, image_width: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateOutcome {
    pub measurement: FusedMeasurement,
    pub radar: Option<RadarMeasurement>,
    pub camera: Option<CameraDetection>,
    pub radar_accepted: usize,
    pub radar_rejected: usize,
    pub camera_accepted: usize,
    pub camera_rejected: usize,
}

/// Keeps the candidates that fall near the predicted target and picks the
/// nearest one per sensor. A radar centroid is placed along the predicted
/// bearing at its measured range, so its distance from the predicted
/// position is the range difference; its Doppler must also lie inside the
/// Doppler gate.
pub fn gate(
    prediction: &FusedState,
    radar: &[RadarMeasurement],
    camera: &[CameraDetection],
    model: &MeasurementModel,
    noise: &NoiseConfig,
    cfg: &GateConfig,
) -> GateOutcome {
    let r_pred = prediction.range();
    let pos_sigma = (prediction.p[(0, 0)] + prediction.p[(1, 1)]).max(0.0).sqrt();
    let radius = (cfg.sigmas * pos_sigma).max(cfg.min_radius);
    let mut out = GateOutcome {
        measurement: FusedMeasurement { k: prediction.k, ..Default::default() },
        radar: None,
        camera: None,
        radar_accepted: 0,
        radar_rejected: 0,
        camera_accepted: 0,
        camera_rejected: 0,
    };

    let h = measurement_jacobian(&prediction.x, model).ok();
    let sigma_of = |i: usize, floor: f64, r: f64| {
        h.map(|h| {
            let row = h.row(i);
            let s = (row * prediction.p * row.transpose())[(0, 0)] + r * r;
            (cfg.sigmas * s.max(0.0).sqrt()).max(floor)
        })
        .unwrap_or(floor)
    };
    let fd_pred = measurement_model(&prediction.x, model).ok().map(|z| z[1]);
    let doppler_gate = sigma_of(1, cfg.min_doppler, noise.sigma_doppler);
    let doppler_ok = |fd: f64| {
        if fd.abs() < cfg.clutter_notch {
            return false;
        }
        fd_pred.is_none_or(|p| {
            let mut d = fd - p;
            if let Some(prf) = model.prf {
                d -= prf * (d / prf).round();
            }
            d.abs() <= doppler_gate
        })
    };
    let mut best = f64::INFINITY;
    let (mut weight, mut range, mut doppler) = (0.0, 0.0, 0.0);
    for m in radar {
        let d = (m.range - r_pred).abs();
        if d <= radius && doppler_ok(m.doppler) {
            out.radar_accepted += 1;
            let w = m.count as f64;
            weight += w;
            range += w * m.range;
            // Unfolded about the first accepted centroid.
            let fd = match (out.radar, model.prf) {
                (Some(first), Some(prf)) => m.doppler - prf * ((m.doppler - first.doppler) / prf).round(),
                _ => m.doppler,
            };
            doppler += w * fd;
            if d < best {
                best = d;
                out.radar = Some(*m);
            }
        } else {
            out.radar_rejected += 1;
        }
    }

    let u_pred = model.pixel(&prediction.x);
    let pixel_gate = sigma_of(2, cfg.min_pixels, noise.sigma_pixel);
    let mut best = f64::INFINITY;
    for d in camera {
        let dist = u_pred.map_or(f64::INFINITY, |u| (d.u - u).abs());
        if dist < pixel_gate {
            out.camera_accepted += 1;
            if dist < best {
                best = dist;
                out.camera = Some(*d);
            }
        } else {
            out.camera_rejected += 1;
        }
    }

    out.measurement.range = out.radar.map(|m| m.range);
    out.measurement.doppler = out.radar.map(|m| m.doppler);
    if cfg.merge_radar && weight > 0.0 {
        out.measurement.range = Some(range / weight);
        out.measurement.doppler = Some(doppler / weight);
    }
    out.measurement.pixel = out.camera.map(|d| d.u);
    out
}
