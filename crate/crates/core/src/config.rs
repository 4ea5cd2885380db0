//! Scenario configuration as plain `dotted.key = value` text.

use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::Vector3;
use thiserror::Error;

use crate::camera::{CameraIntrinsics, DetectionModel};
use crate::fusion::{DopplerConvention, GateConfig, InitConfig, NoiseConfig};
use crate::isar::{CfarConfig, ClusterConfig, Window};
use crate::metrics::SsimConfig;
use crate::radar::{ClutterParams, CoverageRegion, RadarConfig};
use crate::scene::{EgoSensorLayout, TargetModel, TrajectoryKind, TrajectorySpec};

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {reason}")]
    BadValue { line: usize, key: String, reason: String },
    #[error("unsupported config version {0}")]
    UnsupportedVersion(u32),
    #[error("missing version line")]
    MissingVersion,
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetConfig {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    /// 0 places one scatterer at each facet centroid.
    pub points_per_facet: usize,
    pub model_seed: u64,
    pub shadowing: bool,
}

impl TargetConfig {
    pub fn model(&self) -> Result<TargetModel, ConfigError> {
        TargetModel::cuboid(self.length, self.width, self.height, self.points_per_facet, self.model_seed)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

/// Clutter region is an annular sector in front of the radar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterConfig {
    pub params: ClutterParams,
    pub min_range: f64,
    pub max_range: f64,
    pub half_angle: f64,
    pub height: f64,
}

impl ClutterConfig {
    pub fn region(&self, radar: &Vector3<f64>) -> CoverageRegion {
        CoverageRegion {
            origin: *radar,
            min_range: self.min_range,
            max_range: self.max_range,
            half_angle: self.half_angle,
            height: self.height,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagingConfig {
    /// Form compensated images, interferograms and SSIM each CPI.
    pub enabled: bool,
    pub window: Window,
    pub align_range: bool,
    pub ssim: SsimConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub frames: usize,
    pub trajectory: TrajectorySpec,
    pub target: TargetConfig,
    pub layout: EgoSensorLayout,
    pub radar: RadarConfig,
    pub camera: CameraIntrinsics,
    pub detection: DetectionModel,
    pub noise: NoiseConfig,
    pub doppler: DopplerConvention,
    pub clutter: ClutterConfig,
    /// Detection threshold follows `radar.p_fa`.
    pub cfar: CfarConfig,
    /// Range cut follows `radar.max_range`.
    pub cluster: ClusterConfig,
    pub gate: GateConfig,
    pub init: InitConfig,
    pub imaging: ImagingConfig,
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Desk-scale scenario for one junction manoeuvre.
    pub fn for_kind(kind: TrajectoryKind) -> Self {
        let radar = RadarConfig::desk_scale();
        let trajectory = TrajectorySpec::canonical(kind);
        let frames = (trajectory.duration / radar.cpi).round() as usize;
        ScenarioConfig {
            seed: 1,
            frames,
            trajectory,
            target: TargetConfig {
                length: 4.7,
                width: 1.8,
                height: 1.4,
                points_per_facet: 0,
                model_seed: 0,
                shadowing: true,
            },
            layout: EgoSensorLayout::junction_default(radar.wavelength()),
            radar,
            camera: CameraIntrinsics::default(),
            detection: DetectionModel::default(),
            noise: NoiseConfig {
                sigma_a: 3.0,
                sigma_alpha: 3.0,
                sigma_range: radar.range_resolution(),
                sigma_doppler: radar.doppler_resolution(),
                sigma_pixel: 7.5,
                dt: radar.cpi,
            },
            doppler: DopplerConvention::Standard,
            clutter: ClutterConfig {
                params: ClutterParams { cells: 10_000, p: 1e-3, amplitude: 1.0 },
                min_range: 2.0,
                max_range: 40.0,
                half_angle: 60f64.to_radians(),
                height: 0.0,
            },
            cfar: CfarConfig { p_fa: radar.p_fa, ..CfarConfig::default() },
            // A car turning at 3 rad/s spreads over +-3.5 kHz; its scattered
            // detections should still form one cluster.
            cluster: ClusterConfig {
                max_range: radar.max_range,
                link_doppler_bins: 400,
                ..ClusterConfig::default()
            },
            gate: GateConfig {
                clutter_notch: 2.5 * radar.doppler_resolution(),
                merge_radar: true,
                min_pixels: 60.0,
                image_width: Some(CameraIntrinsics::default().width),
                ..GateConfig::default()
            },
            init: InitConfig {
                confirm_pixels: Some(40.0),
                radar_only_after: Some(30),
                ..InitConfig::default()
            },
            imaging: ImagingConfig {
                enabled: true,
                window: Window::Rect,
                align_range: true,
                ssim: SsimConfig::default(),
            },
            output: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |e: String| ConfigError::Invalid(e);
        self.trajectory.validate().map_err(|e| inv(e.to_string()))?;
        self.target.model()?.validate().map_err(|e| inv(e.to_string()))?;
        self.layout.validate().map_err(inv)?;
        self.radar.validate().map_err(|e| inv(e.to_string()))?;
        self.camera.validate().map_err(|e| inv(e.to_string()))?;
        self.detection.validate().map_err(inv)?;
        self.noise.validate().map_err(|e| inv(e.to_string()))?;
        self.imaging.ssim.validate().map_err(|e| inv(e.to_string()))?;
        if self.frames == 0 {
            return Err(inv("frames must be positive".into()));
        }
        let needed = self.frames as f64 * self.radar.cpi;
        if needed > self.trajectory.duration + 1e-9 {
            return Err(inv(format!(
                "{} frames need {needed} s but the trajectory lasts {} s",
                self.frames, self.trajectory.duration
            )));
        }
        if (self.noise.dt - self.radar.cpi).abs() > 1e-12 {
            return Err(inv("noise.dt must equal radar.cpi".into()));
        }
        if self.clutter.params.p < 0.0 || self.clutter.params.p > 1.0 {
            return Err(inv("clutter.p must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Copies values that are shared between sub-configs.
    pub fn sync(&mut self) {
        self.cfar.p_fa = self.radar.p_fa;
        self.cluster.max_range = self.radar.max_range;
        self.layout.baseline = self.radar.baseline;
        self.gate.image_width = Some(self.camera.width);
    }

    pub fn to_text(&self) -> String {
        let mut c = self.clone();
        let mut s = format!("version = {CONFIG_FORMAT_VERSION}\n");
        for (key, field) in c.fields() {
            let _ = writeln!(s, "{key} = {}", field.render());
        }
        s
    }

    /// Parses a config. Keys not given keep the desk-scale defaults of the
    /// named trajectory kind.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        let mut version = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: i + 1, reason: format!("expected key = value, got {line:?}") });
            };
            let (k, v) = (k.trim(), v.trim());
            if k == "version" {
                let n: u32 = v.parse().map_err(|_| ConfigError::Syntax { line: i + 1, reason: format!("bad version {v:?}") })?;
                if n != CONFIG_FORMAT_VERSION {
                    return Err(ConfigError::UnsupportedVersion(n));
                }
                version = Some(n);
                continue;
            }
            entries.push((i + 1, k.to_string(), v.to_string()));
        }
        if version.is_none() {
            return Err(ConfigError::MissingVersion);
        }
        let kind = match entries.iter().find(|e| e.1 == "trajectory.kind") {
            Some((line, key, v)) => v.parse::<TrajectoryKind>().map_err(|e| ConfigError::BadValue {
                line: *line,
                key: key.clone(),
                reason: e.to_string(),
            })?,
            None => TrajectoryKind::Ssut,
        };
        let mut cfg = ScenarioConfig::for_kind(kind);
        for (line, key, value) in &entries {
            let mut fields = cfg.fields();
            let Some((_, field)) = fields.iter_mut().find(|(k, _)| k == key) else {
                return Err(ConfigError::UnknownKey { line: *line, key: key.clone() });
            };
            field.set(value).map_err(|reason| ConfigError::BadValue { line: *line, key: key.clone(), reason })?;
        }
        cfg.sync();
        Ok(cfg)
    }

    fn fields(&mut self) -> Vec<(&'static str, Field<'_>)> {
        use Field::*;
        let t = &mut self.trajectory;
        let (start, end) = (&mut t.start, &mut t.end);
        let [sx, sy, _] = start.as_mut_slice() else { unreachable!() };
        let [ex, ey, _] = end.as_mut_slice() else { unreachable!() };
        let r = &mut self.radar;
        let l = &mut self.layout;
        let [ecx, ecy, ecz] = l.ego_centroid.as_mut_slice() else { unreachable!() };
        let [edx, edy, edz] = l.ego_dims.as_mut_slice() else { unreachable!() };
        let [rx, ry, rz] = l.radar_position.as_mut_slice() else { unreachable!() };
        let [cx, cy, cz] = l.camera_position.as_mut_slice() else { unreachable!() };
        let n = &mut self.noise;
        let cl = &mut self.clutter;
        let im = &mut self.imaging;
        vec![
            ("seed", U64(&mut self.seed)),
            ("frames", Usize(&mut self.frames)),
            ("output", Path(&mut self.output)),
            ("trajectory.kind", Kind(&mut t.kind)),
            ("trajectory.start.x", F64(sx)),
            ("trajectory.start.y", F64(sy)),
            ("trajectory.end.x", F64(ex)),
            ("trajectory.end.y", F64(ey)),
            ("trajectory.speed", F64(&mut t.speed)),
            ("trajectory.duration", F64(&mut t.duration)),
            ("trajectory.waypoints", Points(&mut t.waypoints)),
            ("target.length", F64(&mut self.target.length)),
            ("target.width", F64(&mut self.target.width)),
            ("target.height", F64(&mut self.target.height)),
            ("target.points_per_facet", Usize(&mut self.target.points_per_facet)),
            ("target.model_seed", U64(&mut self.target.model_seed)),
            ("target.shadowing", Bool(&mut self.target.shadowing)),
            ("ego.centroid.x", F64(ecx)),
            ("ego.centroid.y", F64(ecy)),
            ("ego.centroid.z", F64(ecz)),
            ("ego.length", F64(edx)),
            ("ego.width", F64(edy)),
            ("ego.height", F64(edz)),
            ("ego.radar.x", F64(rx)),
            ("ego.radar.y", F64(ry)),
            ("ego.radar.z", F64(rz)),
            ("ego.camera.x", F64(cx)),
            ("ego.camera.y", F64(cy)),
            ("ego.camera.z", F64(cz)),
            ("radar.carrier", F64(&mut r.carrier)),
            ("radar.chirp_rate", F64(&mut r.chirp_rate)),
            ("radar.pri", F64(&mut r.pri)),
            ("radar.cpi", F64(&mut r.cpi)),
            ("radar.sample_rate", F64(&mut r.sample_rate)),
            ("radar.fast_samples", Usize(&mut r.fast_samples)),
            ("radar.channels", Usize(&mut r.channels)),
            ("radar.baseline", F64(&mut r.baseline)),
            ("radar.tx_power", F64(&mut r.tx_power)),
            ("radar.noise_power", F64(&mut r.noise_power)),
            ("radar.p_d", F64(&mut r.p_d)),
            ("radar.p_fa", F64(&mut r.p_fa)),
            ("radar.max_range", F64(&mut r.max_range)),
            ("radar.fov_half_angle", F64(&mut r.fov_half_angle)),
            ("camera.focal_u", F64(&mut self.camera.focal_u)),
            ("camera.focal_v", F64(&mut self.camera.focal_v)),
            ("camera.principal_u", F64(&mut self.camera.principal_u)),
            ("camera.principal_v", F64(&mut self.camera.principal_v)),
            ("camera.width", F64(&mut self.camera.width)),
            ("camera.height", F64(&mut self.camera.height)),
            ("camera.p_d", F64(&mut self.detection.p_d)),
            ("camera.fp_rate", F64(&mut self.detection.fp_rate)),
            ("camera.min_box", F64(&mut self.detection.min_box)),
            ("camera.max_range", F64(&mut self.detection.max_range)),
            ("camera.centroid_sigma", F64(&mut self.detection.centroid_sigma)),
            ("noise.sigma_a", F64(&mut n.sigma_a)),
            ("noise.sigma_alpha", F64(&mut n.sigma_alpha)),
            ("noise.sigma_range", F64(&mut n.sigma_range)),
            ("noise.sigma_doppler", F64(&mut n.sigma_doppler)),
            ("noise.sigma_pixel", F64(&mut n.sigma_pixel)),
            ("noise.dt", F64(&mut n.dt)),
            ("fusion.doppler", Doppler(&mut self.doppler)),
            ("clutter.cells", U64(&mut cl.params.cells)),
            ("clutter.p", F64(&mut cl.params.p)),
            ("clutter.amplitude", F64(&mut cl.params.amplitude)),
            ("clutter.min_range", F64(&mut cl.min_range)),
            ("clutter.max_range", F64(&mut cl.max_range)),
            ("clutter.half_angle", F64(&mut cl.half_angle)),
            ("clutter.height", F64(&mut cl.height)),
            ("cfar.train", Usize(&mut self.cfar.train)),
            ("cfar.guard", Usize(&mut self.cfar.guard)),
            ("cfar.rank", OptUsize(&mut self.cfar.rank)),
            ("cluster.link_bins", Usize(&mut self.cluster.link_bins)),
            ("cluster.link_doppler_bins", Usize(&mut self.cluster.link_doppler_bins)),
            ("gate.sigmas", F64(&mut self.gate.sigmas)),
            ("gate.min_radius", F64(&mut self.gate.min_radius)),
            ("gate.min_doppler", F64(&mut self.gate.min_doppler)),
            ("gate.clutter_notch", F64(&mut self.gate.clutter_notch)),
            ("gate.min_pixels", F64(&mut self.gate.min_pixels)),
            ("gate.merge_radar", Bool(&mut self.gate.merge_radar)),
            ("init.var_position", F64(&mut self.init.var_position)),
            ("init.var_velocity", F64(&mut self.init.var_velocity)),
            ("init.var_omega", F64(&mut self.init.var_omega)),
            ("init.omega", F64(&mut self.init.omega)),
            ("init.confirm_pixels", OptF64(&mut self.init.confirm_pixels)),
            ("init.radar_only_after", OptUsize(&mut self.init.radar_only_after)),
            ("imaging.enabled", Bool(&mut im.enabled)),
            ("imaging.window", Win(&mut im.window)),
            ("imaging.align_range", Bool(&mut im.align_range)),
            ("imaging.ssim.window", Usize(&mut im.ssim.window)),
            ("imaging.ssim.c1", F64(&mut im.ssim.c1)),
            ("imaging.ssim.c2", F64(&mut im.ssim.c2)),
            ("imaging.ssim.dynamic_range", F64(&mut im.ssim.dynamic_range)),
        ]
    }
}

enum Field<'a> {
    F64(&'a mut f64),
    Usize(&'a mut usize),
    OptUsize(&'a mut Option<usize>),
    OptF64(&'a mut Option<f64>),
    U64(&'a mut u64),
    Bool(&'a mut bool),
    Kind(&'a mut TrajectoryKind),
    Win(&'a mut Window),
    Doppler(&'a mut DopplerConvention),
    Path(&'a mut Option<PathBuf>),
    Points(&'a mut Vec<Vector3<f64>>),
}

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("{v:?}: {e}"))
}

impl Field<'_> {
    fn render(&self) -> String {
        match self {
            Field::F64(v) => v.to_string(),
            Field::Usize(v) => v.to_string(),
            Field::OptUsize(v) => v.map(|x| x.to_string()).unwrap_or_else(|| "auto".into()),
            Field::OptF64(v) => v.map(|x| x.to_string()).unwrap_or_else(|| "off".into()),
            Field::U64(v) => v.to_string(),
            Field::Bool(v) => v.to_string(),
            Field::Kind(v) => v.to_string(),
            Field::Win(v) => match v {
                Window::Rect => "rect".into(),
                Window::Hann => "hann".into(),
            },
            Field::Doppler(v) => match v {
                DopplerConvention::Standard => "standard".into(),
                DopplerConvention::Doubled => "doubled".into(),
            },
            Field::Path(v) => v.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            Field::Points(v) => v
                .iter()
                .map(|p| format!("{}:{}", p.x, p.y))
                .collect::<Vec<_>>()
                .join(" "),
        }
    }

    fn set(&mut self, v: &str) -> Result<(), String> {
        match self {
            Field::F64(x) => **x = num(v)?,
            Field::Usize(x) => **x = num(v)?,
            Field::OptUsize(x) => **x = if v == "auto" { None } else { Some(num(v)?) },
            Field::OptF64(x) => **x = if v == "off" { None } else { Some(num(v)?) },
            Field::U64(x) => **x = num(v)?,
            Field::Bool(x) => **x = num(v)?,
            Field::Kind(x) => **x = v.parse().map_err(|e: crate::scene::SceneError| e.to_string())?,
            Field::Win(x) => {
                **x = match v {
                    "rect" => Window::Rect,
                    "hann" => Window::Hann,
                    _ => return Err(format!("unknown window {v:?}")),
                }
            }
            Field::Doppler(x) => {
                **x = match v {
                    "standard" => DopplerConvention::Standard,
                    "doubled" => DopplerConvention::Doubled,
                    _ => return Err(format!("unknown Doppler convention {v:?}")),
                }
            }
            Field::Path(x) => **x = (!v.is_empty()).then(|| PathBuf::from(v)),
            Field::Points(x) => {
                **x = v
                    .split_whitespace()
                    .map(|p| {
                        let (a, b) = p.split_once(':').ok_or_else(|| format!("point {p:?} is not x:y"))?;
                        Ok(Vector3::new(num(a)?, num(b)?, 0.0))
                    })
                    .collect::<Result<_, String>>()?
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        for kind in TrajectoryKind::CANONICAL {
            let cfg = ScenarioConfig::for_kind(kind);
            cfg.validate().unwrap();
            assert_eq!(cfg.frames, 60);
            assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
        }
    }

    #[test]
    fn partial_file_takes_kind_defaults() {
        let cfg = ScenarioConfig::parse("version = 1\ntrajectory.kind = ENRT\nradar.p_fa = 1e-5 # sweep\n").unwrap();
        assert_eq!(cfg.trajectory, TrajectorySpec::canonical(TrajectoryKind::Enrt));
        assert_eq!(cfg.cfar.p_fa, 1e-5);
    }

    #[test]
    fn rejects_bad_files() {
        assert_eq!(ScenarioConfig::parse("seed = 3\n"), Err(ConfigError::MissingVersion));
        assert_eq!(ScenarioConfig::parse("version = 2\n"), Err(ConfigError::UnsupportedVersion(2)));
        assert!(matches!(
            ScenarioConfig::parse("version = 1\nradar.colour = red\n"),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            ScenarioConfig::parse("version = 1\nseed = -4\n"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(ScenarioConfig::parse("version = 1\nnonsense\n"), Err(ConfigError::Syntax { line: 2, .. })));
    }

    #[test]
    fn too_many_frames_is_invalid() {
        let mut cfg = ScenarioConfig::for_kind(TrajectoryKind::Ssut);
        cfg.frames = 61;
        assert!(cfg.validate().is_err());
    }

    proptest! {
        #[test]
        fn arbitrary_values_round_trip(
            seed in any::<u64>(),
            pd in 0.0f64..=1.0,
            sigma in 1e-6f64..1e3,
            rank in proptest::option::of(1usize..64),
            pts in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 0..4),
            hann in any::<bool>(),
        ) {
            let mut cfg = ScenarioConfig::for_kind(TrajectoryKind::Custom);
            cfg.seed = seed;
            cfg.detection.p_d = pd;
            cfg.noise.sigma_alpha = sigma;
            cfg.cfar.rank = rank;
            cfg.trajectory.waypoints = pts.iter().map(|(x, y)| Vector3::new(*x, *y, 0.0)).collect();
            cfg.imaging.window = if hann { Window::Hann } else { Window::Rect };
            cfg.output = Some(PathBuf::from("out/run 1"));
            prop_assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
        }
    }
}
