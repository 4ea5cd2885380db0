//! Detection-probability sweeps: tracking error as one sensor degrades
//! while the other stays healthy.

use crate::config::ScenarioConfig;
use crate::exec::Exec;
use crate::metrics::{rmse, FrameOutcome};
use crate::pipeline::{run_scenario_with, PipelineError};

/// Camera detection probabilities of the camera sweep.
pub const CAMERA_PD: [f64; 3] = [0.5, 0.75, 0.99];
/// Radar (P_d, P_fa) pairs of the radar sweep.
pub const RADAR_PD_PFA: [(f64, f64); 3] = [(0.5, 1e-5), (0.75, 1e-6), (0.9, 1e-7)];
/// Detection probability of the sensor held healthy.
pub const HEALTHY_PD: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub camera_pd: f64,
    pub radar_pd: f64,
    pub radar_pfa: f64,
    pub runs: usize,
    /// Pooled over every tracked frame of every run.
    pub rmse_x: Option<f64>,
    pub rmse_y: Option<f64>,
    pub rmse_position: Option<f64>,
}

impl SweepPoint {
    pub fn csv_header() -> &'static str {
        "camera_pd,radar_pd,radar_pfa,runs,rmse_x,rmse_y,rmse_position"
    }

    pub fn to_csv_row(&self) -> String {
        let o = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.camera_pd,
            self.radar_pd,
            self.radar_pfa,
            self.runs,
            o(self.rmse_x),
            o(self.rmse_y),
            o(self.rmse_position)
        )
    }
}

pub fn to_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from(SweepPoint::csv_header());
    s.push('\n');
    for p in points {
        s.push_str(&p.to_csv_row());
        s.push('\n');
    }
    s
}

pub fn to_table(points: &[SweepPoint]) -> String {
    let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    let mut s = format!(
        "{:>9} {:>8} {:>9} {:>5} {:>8} {:>8} {:>8}\n",
        "camera_pd", "radar_pd", "radar_pfa", "runs", "rmse_x", "rmse_y", "rmse_pos"
    );
    for p in points {
        s.push_str(&format!(
            "{:>9} {:>8} {:>9.0e} {:>5} {:>8} {:>8} {:>8}\n",
            p.camera_pd,
            p.radar_pd,
            p.radar_pfa,
            p.runs,
            f(p.rmse_x),
            f(p.rmse_y),
            f(p.rmse_position)
        ));
    }
    s
}

/// Runs `base` once per seed with the given detection statistics and pools
/// the position errors. Imaging is switched off: only the track matters.
pub fn sweep_point(
    exec: Exec,
    base: &ScenarioConfig,
    camera_pd: f64,
    radar_pd: f64,
    radar_pfa: f64,
    seeds: &[u64],
) -> Result<SweepPoint, PipelineError> {
    let mut frames: Vec<FrameOutcome> = Vec::new();
    for &seed in seeds {
        let mut cfg = base.clone();
        cfg.seed = seed;
        cfg.detection.p_d = camera_pd;
        cfg.radar.p_d = radar_pd;
        cfg.radar.p_fa = radar_pfa;
        cfg.imaging.enabled = false;
        cfg.output = None;
        cfg.sync();
        frames.extend(run_scenario_with(exec, &cfg, |_, _| Ok(()))?.frames);
    }
    let tracked = || frames.iter().filter_map(|f| Some((f, f.est_x?, f.est_y?)));
    let rmse_x = rmse(tracked().map(|(f, x, _)| (x, f.truth_x)));
    let rmse_y = rmse(tracked().map(|(f, _, y)| (y, f.truth_y)));
    let rmse_position = rmse(tracked().map(|(f, x, y)| ((x - f.truth_x).hypot(y - f.truth_y), 0.0)));
    Ok(SweepPoint { camera_pd, radar_pd, radar_pfa, runs: seeds.len(), rmse_x, rmse_y, rmse_position })
}

/// Camera P_d grid with a perfect radar (every scatterer detected).
pub fn camera_sweep(
    exec: Exec,
    base: &ScenarioConfig,
    pds: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepPoint>, PipelineError> {
    pds.iter()
        .map(|&pd| sweep_point(exec, base, pd, 1.0, base.radar.p_fa, seeds))
        .collect()
}

/// Radar (P_d, P_fa) grid with a good camera.
pub fn radar_sweep(
    exec: Exec,
    base: &ScenarioConfig,
    pairs: &[(f64, f64)],
    seeds: &[u64],
) -> Result<Vec<SweepPoint>, PipelineError> {
    pairs
        .iter()
        .map(|&(pd, pfa)| sweep_point(exec, base, HEALTHY_PD, pd, pfa, seeds))
        .collect()
}
