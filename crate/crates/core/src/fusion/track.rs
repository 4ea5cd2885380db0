use super::{
    gate, initial_position, predict, update, FusedMeasurement, FusedState, FusionError,
    GainReport, GateConfig, MeasurementModel, NoiseConfig, StateMatrix, StateVector,
};
use crate::camera::CameraDetection;
use crate::isar::RadarMeasurement;

/// Prior used when the track is started.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitConfig {
    pub var_position: f64,
    pub var_velocity: f64,
    pub var_omega: f64,
    /// Non-zero so the first prediction avoids the straight-line branch.
    pub omega: f64,
    /// When set, a camera detection only starts the track if the previous
    /// frame had one within this many pixels of it.
    pub confirm_pixels: Option<f64>,
    /// After this many frames without a camera-backed start, a radar
    /// centroid alone starts the track on the radar boresight.
    pub radar_only_after: Option<usize>,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            var_position: 100.0,
            var_velocity: 100.0,
            var_omega: 1.0,
            omega: 1e-3,
            confirm_pixels: None,
            radar_only_after: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    /// No frame with both sensors has been seen yet.
    Waiting,
    /// Started on this frame from a radar range and a camera pixel.
    Started,
    Updated,
}

/// Everything the tracker did on one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRecord {
    pub k: usize,
    pub status: TrackStatus,
    pub state: Option<FusedState>,
    pub measurement: FusedMeasurement,
    pub gains: GainReport,
    pub radar_accepted: usize,
    pub radar_rejected: usize,
    pub camera_accepted: usize,
    pub camera_rejected: usize,
}

/// Single-target CTRV track advanced one CPI at a time.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub model: MeasurementModel,
    pub noise: NoiseConfig,
    pub gate: GateConfig,
    pub init: InitConfig,
    state: Option<FusedState>,
    /// Camera pixels of the last frame seen while waiting to start.
    previous_pixels: Option<(usize, Vec<f64>)>,
    /// Box width times range of the last whole box accepted, px m.
    box_extent: Option<f64>,
    /// Frames spent waiting to start.
    waited: usize,
}

impl Tracker {
    pub fn new(
        model: MeasurementModel,
        noise: NoiseConfig,
        gate: GateConfig,
        init: InitConfig,
    ) -> Result<Self, FusionError> {
        noise.validate()?;
        Ok(Tracker { model, noise, gate, init, state: None, previous_pixels: None, box_extent: None, waited: 0 })
    }

    pub fn state(&self) -> Option<&FusedState> {
        self.state.as_ref()
    }

    /// Starts the track at a known state, bypassing sensor-based start.
    pub fn start_at(&mut self, state: FusedState) {
        self.state = Some(state);
    }

    /// Processes frame `k`. Frames must be fed in increasing order; skipped
    /// frames are bridged with pure predictions.
    pub fn step(
        &mut self,
        k: usize,
        radar: &[RadarMeasurement],
        camera: &[CameraDetection],
    ) -> Result<TrackRecord, FusionError> {
        let mut rec = TrackRecord {
            k,
            status: TrackStatus::Waiting,
            state: None,
            measurement: FusedMeasurement { k, ..Default::default() },
            gains: GainReport { condition: 1.0, ..Default::default() },
            radar_accepted: 0,
            radar_rejected: radar.len(),
            camera_accepted: 0,
            camera_rejected: camera.len(),
        };

        let Some(mut current) = self.state else {
            let started = self.try_start(k, radar, camera);
            self.previous_pixels = Some((k, camera.iter().map(|d| d.u).collect()));
            self.waited += 1;
            if let Some((s, c)) = started {
                self.state = Some(s);
                rec.status = TrackStatus::Started;
                rec.state = Some(s);
                rec.radar_accepted = 1;
                rec.radar_rejected = radar.len() - 1;
                rec.measurement.range = radar.first().map(|m| m.range);
                rec.measurement.doppler = radar.first().map(|m| m.doppler);
                if let Some(c) = c {
                    rec.camera_accepted = 1;
                    rec.camera_rejected = camera.len() - 1;
                    rec.measurement.pixel = Some(c.u);
                }
            }
            return Ok(rec);
        };

        while current.k + 1 < k {
            current = predict(&current, &self.noise);
        }
        let pred = predict(&current, &self.noise);
        let camera = self.restore_cut_boxes(camera, pred.range());
        let g = gate(&pred, radar, &camera, &self.model, &self.noise, &self.gate);
        let (next, gains) = update(&pred, &g.measurement, &self.noise, &self.model)?;
        self.state = Some(next);
        if let Some(c) = g.camera.filter(|c| !self.cut_by_edge(c)) {
            self.box_extent = Some(c.bbox.width() * next.range());
        }
        rec.status = TrackStatus::Updated;
        rec.state = Some(next);
        rec.measurement = g.measurement;
        rec.gains = gains;
        rec.radar_accepted = g.radar_accepted;
        rec.radar_rejected = g.radar_rejected;
        rec.camera_accepted = g.camera_accepted;
        rec.camera_rejected = g.camera_rejected;
        Ok(rec)
    }

    fn cut_by_edge(&self, d: &CameraDetection) -> bool {
        self.gate.image_width.is_some_and(|w| d.bbox.u_min <= 0.5 || d.bbox.u_max >= w - 0.5)
    }

    /// A box cut by the image edge keeps its inner edge. With the target's
    /// width known from earlier whole boxes, the centre is rebuilt from that
    /// edge; otherwise the box is used as it is.
    fn restore_cut_boxes(&self, camera: &[CameraDetection], range: f64) -> Vec<CameraDetection> {
        camera
            .iter()
            .map(|d| {
                let Some(extent) = self.box_extent.filter(|_| self.cut_by_edge(d)) else {
                    return *d;
                };
                let half = 0.5 * extent / range;
                let mut r = *d;
                if d.bbox.u_min <= 0.5 {
                    r.bbox.u_min = d.bbox.u_max - 2.0 * half;
                    r.u = d.bbox.u_max - half;
                } else {
                    r.bbox.u_max = d.bbox.u_min + 2.0 * half;
                    r.u = d.bbox.u_min + half;
                }
                r
            })
            .collect()
    }

    fn try_start(
        &self,
        k: usize,
        radar: &[RadarMeasurement],
        camera: &[CameraDetection],
    ) -> Option<(FusedState, Option<CameraDetection>)> {
        // Clusters arrive sorted by size.
        let r = radar.first()?;
        let i = &self.init;
        let p = StateMatrix::from_diagonal(&StateVector::new(
            i.var_position,
            i.var_position,
            i.var_velocity,
            i.var_velocity,
            i.var_omega,
        ));
        // Only the radial part of the velocity is observed at the start.
        let vr = r.doppler / self.model.doppler_scale();
        let start = |x: f64, y: f64| {
            let (ux, uy) = (x / r.range, y / r.range);
            FusedState { x: StateVector::new(x, y, vr * ux, vr * uy, i.omega), p, k }
        };
        let confirmed = |d: &&CameraDetection| match (self.init.confirm_pixels, &self.previous_pixels) {
            (None, _) => true,
            (Some(tol), Some((prev_k, pixels))) if prev_k + 1 == k => {
                pixels.iter().any(|u| (u - d.u).abs() <= tol)
            }
            _ => false,
        };
        let c = camera
            .iter()
            .filter(confirmed)
            .max_by(|a, b| a.bbox.area().total_cmp(&b.bbox.area()));
        if let Some(&c) = c {
            let (x, y) = initial_position(r.range, c.u, &self.model)?;
            return Some((start(x, y), Some(c)));
        }
        if i.radar_only_after.is_some_and(|n| self.waited >= n) {
            return Some((start(r.range, 0.0), None));
        }
        None
    }
}
