//! Per-CPI orchestration: scene, sensors, range-Doppler measurements, fusion,
//! compensated imaging and scoring.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::camera::{detect, project, projection_matrix, CameraDetection, CameraExtrinsics, Pixel, Projection};
use crate::config::{ConfigError, ScenarioConfig};
use crate::exec::Exec;
use crate::fusion::{
    FusedState, MeasurementModel, TrackRecord, Tracker,
};
use crate::isar::{
    cluster_measurements, compensate_and_stretch_with, form_image_with, image_gate,
    interferogram, noise_floor, os_cfar_detect_with, Compensation, Interferogram, IsarImage,
    RadarMeasurement, StretchConfig,
};
use crate::metrics::{image_entropy, image_ssim, tabulate_run, FrameOutcome, RunReport, TrajectoryReport};
use crate::output;
use crate::radar::{spawn_clutter, synthesize_cpi_with, write_cube, RadarCube};
use crate::scene::{body_to_world, scatterer_snapshot, SnapshotOptions, TargetModel, TargetState, Trajectory};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("CPI {k}, stage {stage}: {message}")]
    Stage { k: usize, stage: &'static str, message: String },
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn stage<E: std::fmt::Display>(k: usize, stage: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Stage { k, stage, message: e.to_string() }
}

/// Interferogram cells must exceed the noise floor by this factor (10 dB).
const INTERFEROGRAM_SNR: f64 = 10.0;

/// Everything produced for one CPI.
#[derive(Debug, Clone)]
pub struct FrameProducts {
    pub truth: TargetState,
    pub cube: RadarCube,
    pub radar: Vec<RadarMeasurement>,
    pub camera: Vec<CameraDetection>,
    pub record: TrackRecord,
    /// Compensation predicted from the previous CPI's estimate.
    pub compensation: Option<(Compensation, f64)>,
    /// Channel-0 image compensated with the fused prediction; crossrange axis
    /// attached when the predicted aspect rate passes the imaging gate.
    pub fused_image: Option<IsarImage>,
    pub fused_interferogram: Option<Interferogram>,
    /// Channel-0 image compensated with the true motion, formed only when
    /// both rates pass the gate.
    pub gt_image: Option<IsarImage>,
    pub outcome: FrameOutcome,
}

#[derive(Debug, Clone)]
pub struct CubeImages {
    pub raw: IsarImage,
    pub compensated: Option<IsarImage>,
    pub interferogram: Option<Interferogram>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub name: String,
    pub frames: Vec<FrameOutcome>,
    pub track: Vec<TrackRecord>,
    pub radar: Vec<RadarMeasurement>,
    pub camera: Vec<CameraDetection>,
    pub report: TrajectoryReport,
}

/// Fixed per-run geometry and models.
pub struct Scenario {
    pub cfg: ScenarioConfig,
    pub trajectory: Trajectory,
    pub target: TargetModel,
    pub projection: Projection,
    pub model: MeasurementModel,
}

impl Scenario {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let trajectory = Trajectory::new(cfg.trajectory.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let target = cfg.target.model()?;
        let extr = CameraExtrinsics::aligned(&cfg.layout.radar_position, &cfg.layout.camera_position);
        let projection = projection_matrix(&cfg.camera, &extr);
        let model = MeasurementModel {
            carrier: cfg.radar.carrier,
            projection,
            reference_height: cfg.target.height / 2.0 - cfg.layout.radar_position.z,
            doppler: cfg.doppler,
            prf: Some(cfg.radar.prf()),
        };
        Ok(Scenario { cfg: cfg.clone(), trajectory, target, projection, model })
    }

    pub fn tracker(&self) -> Result<Tracker, PipelineError> {
        Tracker::new(self.model, self.cfg.noise, self.cfg.gate, self.cfg.init).map_err(stage(0, "fusion"))
    }

    /// Centre of CPI `k`, s.
    pub fn cpi_time(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.cfg.radar.cpi
    }

    pub fn truth(&self, k: usize) -> Result<TargetState, PipelineError> {
        self.trajectory.sample(self.cpi_time(k)).map_err(stage(k, "scene"))
    }

    /// Truth in the radar frame as `[x, y, vx, vy, omega]`.
    pub fn truth_radar(&self, s: &TargetState) -> [f64; 5] {
        let r = &self.cfg.layout.radar_position;
        [s.x - r.x, s.y - r.y, s.vx, s.vy, s.omega]
    }

    pub fn turning(&self, k: usize) -> bool {
        let t = self.cpi_time(k);
        self.trajectory.turn_intervals().iter().any(|(a, b)| t >= *a && t <= *b)
    }

    /// Synthesized CPI of the target (and clutter) at frame `k`.
    pub fn synthesize(&self, exec: Exec, k: usize, truth: &TargetState) -> Result<RadarCube, PipelineError> {
        let cfg = &self.cfg;
        let radar_pos = cfg.layout.radar_position;
        let opts = SnapshotOptions { wavelength: cfg.radar.wavelength(), shadowing: cfg.target.shadowing };
        let scatterers = scatterer_snapshot(&self.target, truth, &radar_pos, &opts);
        let clutter = spawn_clutter(&cfg.clutter.params, &cfg.clutter.region(&radar_pos), cfg.seed, k);
        synthesize_cpi_with(exec, &cfg.radar, &radar_pos, &scatterers, &clutter, cfg.seed, k)
            .map_err(stage(k, "radar_synth"))
    }

    /// Uncompensated range-Doppler images of all channels.
    pub fn range_doppler(&self, exec: Exec, k: usize, cube: &RadarCube) -> Result<Vec<IsarImage>, PipelineError> {
        let sc = self.stretch(cube);
        let d = compensate_and_stretch_with(exec, cube, &sc, None).map_err(stage(k, "isar"))?;
        form_image_with(exec, &d, &sc, None).map_err(stage(k, "isar"))
    }

    pub fn compensated(
        &self,
        exec: Exec,
        k: usize,
        cube: &RadarCube,
        comp: &Compensation,
    ) -> Result<Vec<IsarImage>, PipelineError> {
        let sc = self.stretch(cube);
        let d = compensate_and_stretch_with(exec, cube, &sc, Some(comp)).map_err(stage(k, "isar"))?;
        form_image_with(exec, &d, &sc, None).map_err(stage(k, "isar"))
    }

    fn stretch(&self, cube: &RadarCube) -> StretchConfig {
        StretchConfig { window: self.cfg.imaging.window, ..StretchConfig::for_cube(cube) }
    }

    /// Radar centroids from CFAR detections on the range-Doppler map.
    pub fn radar_measurements(&self, k: usize, exec: Exec, rd: &[IsarImage]) -> Result<Vec<RadarMeasurement>, PipelineError> {
        let dets = os_cfar_detect_with(exec, &rd[0], &self.cfg.cfar).map_err(stage(k, "cfar"))?;
        let interf = self.interferogram(rd);
        Ok(cluster_measurements(&dets, &rd[0], interf.as_ref(), &self.cfg.cluster))
    }

    pub fn interferogram(&self, images: &[IsarImage]) -> Option<Interferogram> {
        if images.len() < 2 {
            return None;
        }
        let gate = noise_floor(&images[0]) * INTERFEROGRAM_SNR;
        interferogram(&images[0], &images[1], self.cfg.radar.baseline, gate).ok()
    }

    /// Projections of the target's corners in the radar-frame camera model,
    /// or `None` when any corner is behind the camera.
    pub fn corner_pixels(&self, truth: &TargetState) -> Option<Vec<Pixel>> {
        let r = self.cfg.layout.radar_position;
        self.target
            .corners()
            .iter()
            .map(|c| project(&self.projection, &(body_to_world(truth, c) - r)).ok())
            .collect()
    }

    pub fn camera_detections(&self, k: usize, truth: &TargetState) -> Vec<CameraDetection> {
        let corners = self.corner_pixels(truth);
        detect(corners.as_deref(), k, &self.cfg.camera, &self.cfg.detection, self.cfg.seed)
    }

    /// Compensation for the CPI centred on `state`, plus its aspect rate.
    pub fn compensation_from(&self, state: &FusedState) -> (Compensation, f64) {
        let half = self.cfg.radar.cpi / 2.0;
        let vr = state.radial_velocity();
        (
            Compensation { r0: state.range() - vr * half, vr, align_range: self.cfg.imaging.align_range },
            state.aspect_rate(),
        )
    }

    /// Images of one cube, recorded or synthesized: the raw range-Doppler map
    /// and, given a track state for its CPI, the compensated image with its
    /// interferogram.
    pub fn image_cube(&self, exec: Exec, cube: &RadarCube, state: Option<&FusedState>) -> Result<CubeImages, PipelineError> {
        let k = cube.cpi_index;
        let raw = self.range_doppler(exec, k, cube)?.swap_remove(0);
        let Some(state) = state else {
            return Ok(CubeImages { raw, compensated: None, interferogram: None });
        };
        let (comp, rate) = self.compensation_from(state);
        let imgs = self.compensated(exec, k, cube, &comp)?;
        let interferogram = self.interferogram(&imgs);
        let mut img = imgs.into_iter().next().expect("at least one channel");
        if image_gate(rate) {
            img = img.with_crossrange(rate).map_err(stage(k, "isar"))?;
        }
        Ok(CubeImages { raw, compensated: Some(img), interferogram })
    }

    pub fn truth_state(&self, s: &TargetState, k: usize) -> FusedState {
        let [x, y, vx, vy, w] = self.truth_radar(s);
        FusedState {
            x: crate::fusion::StateVector::new(x, y, vx, vy, w),
            p: crate::fusion::StateMatrix::zeros(),
            k,
        }
    }
}

/// Runs every frame through the pipeline, handing each frame's products to
/// `sink` before moving on.
pub fn run_scenario_with(
    exec: Exec,
    cfg: &ScenarioConfig,
    mut sink: impl FnMut(&Scenario, &FrameProducts) -> Result<(), PipelineError>,
) -> Result<RunOutput, PipelineError> {
    let sc = Scenario::new(cfg)?;
    let mut tracker = sc.tracker()?;
    let mut out = RunOutput {
        name: cfg.trajectory.kind.to_string(),
        frames: Vec::with_capacity(cfg.frames),
        track: Vec::with_capacity(cfg.frames),
        radar: Vec::new(),
        camera: Vec::new(),
        report: tabulate_run("", &[]),
    };

    for k in 0..cfg.frames {
        let truth = sc.truth(k)?;
        let cube = sc.synthesize(exec, k, &truth)?;
        let rd = sc.range_doppler(exec, k, &cube)?;
        let radar = sc.radar_measurements(k, exec, &rd)?;
        let camera = sc.camera_detections(k, &truth);

        let record = tracker.step(k, &radar, &camera).map_err(stage(k, "fusion"))?;
        let compensation = record.state.as_ref().map(|s| sc.compensation_from(s));

        let t = sc.truth_radar(&truth);
        let truth_fs = sc.truth_state(&truth, k);
        let truth_rate = truth_fs.aspect_rate();
        let mut products = FrameProducts {
            truth,
            cube: RadarCube::zeros(cfg.radar, k),
            radar,
            camera,
            record,
            compensation,
            fused_image: None,
            fused_interferogram: None,
            gt_image: None,
            outcome: FrameOutcome {
                k,
                turning: sc.turning(k),
                truth_x: t[0],
                truth_y: t[1],
                truth_omega: t[4],
                truth_rate,
                ..Default::default()
            },
        };
        let o = &mut products.outcome;
        if let Some(s) = &products.record.state {
            o.est_x = Some(s.x[0]);
            o.est_y = Some(s.x[1]);
            o.est_omega = Some(s.omega());
        }
        o.est_rate = compensation.map(|c| c.1);

        if cfg.imaging.enabled {
            o.entropy_raw = image_entropy(&rd[0].powers()).ok();
            if let Some((comp, rate)) = compensation {
                let imgs = sc.compensated(exec, k, &cube, &comp)?;
                o.entropy_compensated = image_entropy(&imgs[0].powers()).ok();
                products.fused_interferogram = sc.interferogram(&imgs);
                let mut fused = imgs.into_iter().next().expect("at least one channel");
                if image_gate(rate) {
                    fused = fused.with_crossrange(rate).map_err(stage(k, "isar"))?;
                    if image_gate(truth_rate) {
                        let (gc, _) = sc.compensation_from(&truth_fs);
                        let gt = sc.compensated(exec, k, &cube, &gc)?.swap_remove(0);
                        let gt = gt.with_crossrange(truth_rate).map_err(stage(k, "isar"))?;
                        o.ssim = Some(image_ssim(&fused, &gt, &cfg.imaging.ssim).map_err(stage(k, "metrics"))?);
                        products.gt_image = Some(gt);
                    }
                }
                products.fused_image = Some(fused);
            }
        }
        products.cube = cube;
        sink(&sc, &products)?;

        out.radar.extend(products.radar.iter().copied());
        out.camera.extend(products.camera.iter().copied());
        out.frames.push(products.outcome);
        out.track.push(products.record);
    }
    out.report = tabulate_run(&out.name, &out.frames);
    Ok(out)
}

/// Runs a scenario, writing logs, images and the report under
/// `cfg.output` when it is set.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, PipelineError> {
    run_scenario_exec(Exec::default(), cfg)
}

pub fn run_scenario_exec(exec: Exec, cfg: &ScenarioConfig) -> Result<RunOutput, PipelineError> {
    match &cfg.output {
        Some(dir) => write_run(exec, cfg, dir, false),
        None => run_scenario_with(exec, cfg, |_, _| Ok(())),
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError {
    let path = path.to_path_buf();
    move |source| PipelineError::Io { path, source }
}

/// Runs a scenario and writes its artifacts under `dir`; with `cubes`, each
/// CPI's raw cube is saved as well.
pub fn write_run(exec: Exec, cfg: &ScenarioConfig, dir: &Path, cubes: bool) -> Result<RunOutput, PipelineError> {
    let images = dir.join("images");
    std::fs::create_dir_all(&images).map_err(io(&images))?;
    let cube_dir = dir.join("cubes");
    if cubes {
        std::fs::create_dir_all(&cube_dir).map_err(io(&cube_dir))?;
    }
    let out = run_scenario_with(exec, cfg, |_, p| {
        let k = p.outcome.k;
        if cubes {
            let path = cube_dir.join(format!("cube_{k:03}.bin"));
            write_cube(&path, &p.cube).map_err(|e| PipelineError::Stage { k, stage: "output", message: e.to_string() })?;
        }
        if let Some(img) = &p.fused_image {
            let path = images.join(format!("fused_{k:03}.pgm"));
            output::write_image_pgm(&path, img, cfg.imaging.ssim.dynamic_range).map_err(io(&path))?;
        }
        if let Some(img) = &p.gt_image {
            let path = images.join(format!("gt_{k:03}.pgm"));
            output::write_image_pgm(&path, img, cfg.imaging.ssim.dynamic_range).map_err(io(&path))?;
        }
        if let Some(ifg) = &p.fused_interferogram {
            let path = images.join(format!("elevation_{k:03}.pgm"));
            output::write_interferogram_pgm(&path, ifg).map_err(io(&path))?;
        }
        Ok(())
    })?;
    let report = RunReport { trajectories: vec![out.report.clone()] };
    let files: [(&str, String); 7] = [
        ("config.txt", cfg.to_text()),
        ("track.csv", output::track_csv(&out.track)),
        ("frames.csv", FrameOutcome::write_csv(&out.frames)),
        ("radar_measurements.csv", output::radar_csv(&out.radar)),
        ("camera_detections.csv", output::camera_csv(&out.camera)),
        ("report.csv", report.to_csv()),
        ("report.txt", report.to_table()),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(io(&path))?;
    }
    Ok(out)
}
