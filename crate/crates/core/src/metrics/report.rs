use std::fmt::Write as _;

use super::MetricsError;
use crate::isar::image_gate;

/// Root mean square of paired differences; `None` when empty.
pub fn rmse(pairs: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for (a, b) in pairs {
        s += (a - b).powi(2);
        n += 1;
    }
    (n > 0).then(|| (s / n as f64).sqrt())
}

/// Per-CPI outcome of a run. Positions are in the radar frame; rates are
/// the aspect rates that scale crossrange.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameOutcome {
    pub k: usize,
    /// Truth is inside a turn segment.
    pub turning: bool,
    pub truth_x: f64,
    pub truth_y: f64,
    pub truth_omega: f64,
    pub truth_rate: f64,
    pub est_x: Option<f64>,
    pub est_y: Option<f64>,
    pub est_omega: Option<f64>,
    pub est_rate: Option<f64>,
    pub ssim: Option<f64>,
    pub entropy_compensated: Option<f64>,
    pub entropy_raw: Option<f64>,
}

const HEADER: &str = "k,turning,truth_x,truth_y,truth_omega,truth_rate,est_x,est_y,est_omega,est_rate,ssim,entropy_compensated,entropy_raw";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl FrameOutcome {
    pub fn csv_header() -> &'static str {
        HEADER
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.turning as u8,
            self.truth_x,
            self.truth_y,
            self.truth_omega,
            self.truth_rate,
            opt(self.est_x),
            opt(self.est_y),
            opt(self.est_omega),
            opt(self.est_rate),
            opt(self.ssim),
            opt(self.entropy_compensated),
            opt(self.entropy_raw),
        )
    }

    pub fn write_csv(frames: &[FrameOutcome]) -> String {
        let mut s = String::from(HEADER);
        s.push('\n');
        for f in frames {
            s.push_str(&f.to_csv_row());
            s.push('\n');
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Vec<FrameOutcome>, MetricsError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == HEADER => {}
            _ => return Err(MetricsError::Parse { line: 1, reason: "missing or unknown header".into() }),
        }
        let mut out = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = |reason: String| MetricsError::Parse { line: i + 1, reason };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 13 {
                return Err(err(format!("expected 13 fields, found {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
            let maybe = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
            out.push(FrameOutcome {
                k: f[0].parse().map_err(|e| err(format!("{:?}: {e}", f[0])))?,
                turning: match f[1] {
                    "0" => false,
                    "1" => true,
                    other => return Err(err(format!("turning flag {other:?}"))),
                },
                truth_x: num(f[2])?,
                truth_y: num(f[3])?,
                truth_omega: num(f[4])?,
                truth_rate: num(f[5])?,
                est_x: maybe(f[6])?,
                est_y: maybe(f[7])?,
                est_omega: maybe(f[8])?,
                est_rate: maybe(f[9])?,
                ssim: maybe(f[10])?,
                entropy_compensated: maybe(f[11])?,
                entropy_raw: maybe(f[12])?,
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryReport {
    pub name: String,
    pub frames: usize,
    /// Frames whose true aspect rate passes the imaging gate.
    pub gt_images: usize,
    /// Frames whose estimated aspect rate passes the imaging gate.
    pub fused_images: usize,
    /// Mean over frames imaged under both; `None` if there are none.
    pub mean_ssim: Option<f64>,
    pub rmse_x: Option<f64>,
    pub rmse_y: Option<f64>,
    pub rmse_omega: Option<f64>,
    pub entropy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub trajectories: Vec<TrajectoryReport>,
}

pub fn tabulate_run(name: &str, frames: &[FrameOutcome]) -> TrajectoryReport {
    let ssims: Vec<f64> = frames.iter().filter_map(|f| f.ssim).collect();
    let est = || frames.iter().filter(|f| f.est_x.is_some());
    TrajectoryReport {
        name: name.to_string(),
        frames: frames.len(),
        gt_images: frames.iter().filter(|f| image_gate(f.truth_rate)).count(),
        fused_images: frames.iter().filter(|f| f.est_rate.is_some_and(image_gate)).count(),
        mean_ssim: (!ssims.is_empty()).then(|| ssims.iter().sum::<f64>() / ssims.len() as f64),
        rmse_x: rmse(est().map(|f| (f.est_x.unwrap(), f.truth_x))),
        rmse_y: rmse(est().filter_map(|f| f.est_y.map(|y| (y, f.truth_y)))),
        rmse_omega: rmse(est().filter_map(|f| f.est_omega.map(|w| (w, f.truth_omega)))),
        entropy: frames.iter().filter_map(|f| f.entropy_compensated).collect(),
    }
}

fn cell(v: Option<f64>, scale: f64, prec: usize) -> String {
    v.map(|x| format!("{:.*}", prec, x * scale)).unwrap_or_else(|| "n/a".into())
}

impl RunReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("trajectory,frames,gt_images,fused_images,mean_ssim,rmse_x,rmse_y,rmse_omega,mean_entropy\n");
        for t in &self.trajectories {
            let me = (!t.entropy.is_empty()).then(|| t.entropy.iter().sum::<f64>() / t.entropy.len() as f64);
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                t.name,
                t.frames,
                t.gt_images,
                t.fused_images,
                opt(t.mean_ssim),
                opt(t.rmse_x),
                opt(t.rmse_y),
                opt(t.rmse_omega),
                opt(me)
            );
        }
        s
    }

    /// Fixed-width table. SSIM is the arithmetic mean over frames imaged
    /// under both the true and the estimated turn rate, in percent.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# SSIM: mean over frames imaged under both true and fused turn rate");
        let _ = writeln!(
            s,
            "{:<10} {:>6} {:>10} {:>12} {:>9} {:>9} {:>9} {:>11}",
            "trajectory", "frames", "GT images", "fused images", "SSIM (%)", "x RMSE", "y RMSE", "w RMSE"
        );
        for t in &self.trajectories {
            let _ = writeln!(
                s,
                "{:<10} {:>6} {:>10} {:>12} {:>9} {:>9} {:>9} {:>11}",
                t.name,
                t.frames,
                t.gt_images,
                t.fused_images,
                cell(t.mean_ssim, 100.0, 1),
                cell(t.rmse_x, 1.0, 3),
                cell(t.rmse_y, 1.0, 3),
                cell(t.rmse_omega, 1.0, 4),
            );
        }
        s
    }
}
