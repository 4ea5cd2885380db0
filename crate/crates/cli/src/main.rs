use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use isar_fusion::config::ScenarioConfig;
use isar_fusion::exec::Exec;
use isar_fusion::fusion::{FusedState, StateMatrix};
use isar_fusion::metrics::{image_entropy, tabulate_run, FrameOutcome, RunReport};
use isar_fusion::output::{self, parse_track_csv};
use isar_fusion::pipeline::{run_scenario_with, write_run, Scenario};
use isar_fusion::radar::ingest_cube;
use isar_fusion::scene::TrajectoryKind;
use isar_fusion::sweep::{self, CAMERA_PD, RADAR_PD_PFA};

/// Radar-camera fusion and ISAR imaging of a turning vehicle.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (dotted key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the number of CPI frames.
    #[arg(long, global = true)]
    frames: Option<usize>,
    /// Run on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the full pipeline on a scenario.
    Run {
        /// Canonical manoeuvre to use when no --config is given.
        #[arg(long, default_value = "SSUT")]
        trajectory: TrajectoryKind,
        /// Also save every CPI's raw cube under OUT/cubes.
        #[arg(long)]
        cubes: bool,
    },
    /// Forms images from recorded cubes using a track log.
    Isar {
        /// Cube files, or directories holding them.
        #[arg(required = true)]
        cubes: Vec<PathBuf>,
        /// Track log giving the state for each CPI.
        #[arg(long)]
        track: PathBuf,
    },
    /// Tabulates frame logs of finished runs.
    Report {
        /// frames.csv files, or run directories holding one.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
    /// Tracking error against camera or radar detection probability.
    Sweep {
        #[arg(long, value_enum, default_value_t = Which::Both)]
        sensor: Which,
        /// Seeds per grid point, counted up from the master seed.
        #[arg(long, default_value_t = 3)]
        runs: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Which {
    Camera,
    Radar,
    Both,
}

impl Common {
    fn exec(&self) -> Exec {
        if self.sequential { Exec::Sequential } else { Exec::default() }
    }

    fn scenario(&self, kind: TrajectoryKind) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ScenarioConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ScenarioConfig::for_kind(kind),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(frames) = self.frames {
            cfg.frames = frames;
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let c = &cli.common;
    match &cli.command {
        Command::Run { trajectory, cubes } => run(c, *trajectory, *cubes),
        Command::Isar { cubes, track } => isar(c, cubes, track),
        Command::Report { runs } => report(c, runs),
        Command::Sweep { sensor, runs } => sweep_cmd(c, *sensor, *runs),
    }
}

fn run(c: &Common, kind: TrajectoryKind, cubes: bool) -> Result<()> {
    let cfg = c.scenario(kind)?;
    let out = match &cfg.output {
        Some(dir) => write_run(c.exec(), &cfg, dir, cubes)?,
        None if cubes => bail!("--cubes needs an output directory"),
        None => run_scenario_with(c.exec(), &cfg, |_, _| Ok(()))?,
    };
    print!("{}", RunReport { trajectories: vec![out.report] }.to_table());
    Ok(())
}

fn cube_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<_> = fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()?;
            found.retain(|f| f.extension().is_some_and(|x| x == "bin"));
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn isar(c: &Common, cubes: &[PathBuf], track: &Path) -> Result<()> {
    let Some(out) = &c.out else { bail!("isar needs --out") };
    let cfg = c.scenario(TrajectoryKind::Ssut)?;
    let text = fs::read_to_string(track).with_context(|| format!("reading {}", track.display()))?;
    let rows = parse_track_csv(&text).map_err(anyhow::Error::msg).with_context(|| format!("parsing {}", track.display()))?;
    let states: BTreeMap<usize, _> = rows.into_iter().filter_map(|r| Some((r.k, r.state?))).collect();
    fs::create_dir_all(out)?;

    let floor = cfg.imaging.ssim.dynamic_range;
    println!("{:>4} {:>10} {:>10} {:>8}", "k", "H_raw", "H_comp", "crossrng");
    for path in cube_files(cubes)? {
        let cube = ingest_cube(&path).with_context(|| format!("reading {}", path.display()))?;
        // The recorded radar parameters replace the scenario's.
        let mut cfg = cfg.clone();
        cfg.radar = cube.config;
        cfg.sync();
        let sc = Scenario::new(&cfg)?;
        let k = cube.cpi_index;
        let state = states.get(&k).map(|x| FusedState { x: *x, p: StateMatrix::zeros(), k });
        let imgs = sc.image_cube(c.exec(), &cube, state.as_ref())?;
        output::write_image_pgm(&out.join(format!("raw_{k:03}.pgm")), &imgs.raw, floor)?;
        let h_raw = image_entropy(&imgs.raw.powers())?;
        let mut h_comp = None;
        let mut crossrange = false;
        if let Some(img) = &imgs.compensated {
            output::write_image_pgm(&out.join(format!("compensated_{k:03}.pgm")), img, floor)?;
            h_comp = Some(image_entropy(&img.powers())?);
            crossrange = img.crossrange_axis.is_some();
        }
        if let Some(ifg) = &imgs.interferogram {
            output::write_interferogram_pgm(&out.join(format!("elevation_{k:03}.pgm")), ifg)?;
        }
        let h = h_comp.map_or("-".to_string(), |h| format!("{h:.4}"));
        println!("{k:>4} {h_raw:>10.4} {h:>10} {:>8}", if crossrange { "yes" } else { "no" });
    }
    Ok(())
}

/// Name of a run: its configured manoeuvre when the directory keeps its
/// config, otherwise the directory name.
fn run_name(frames_csv: &Path) -> String {
    let dir = frames_csv.parent().unwrap_or(Path::new("."));
    fs::read_to_string(dir.join("config.txt"))
        .ok()
        .and_then(|t| ScenarioConfig::parse(&t).ok())
        .map(|cfg| cfg.trajectory.kind.to_string())
        .or_else(|| dir.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "run".into())
}

fn report(c: &Common, runs: &[PathBuf]) -> Result<()> {
    let mut report = RunReport { trajectories: Vec::new() };
    for p in runs {
        let file = if p.is_dir() { p.join("frames.csv") } else { p.clone() };
        let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        let frames = FrameOutcome::parse_csv(&text).with_context(|| format!("parsing {}", file.display()))?;
        report.trajectories.push(tabulate_run(&run_name(&file), &frames));
    }
    print!("{}", report.to_table());
    if let Some(out) = &c.out {
        fs::create_dir_all(out)?;
        fs::write(out.join("report.csv"), report.to_csv())?;
        fs::write(out.join("report.txt"), report.to_table())?;
    }
    Ok(())
}

fn sweep_cmd(c: &Common, which: Which, runs: u64) -> Result<()> {
    let cfg = c.scenario(TrajectoryKind::Ssut)?;
    let seeds: Vec<u64> = (0..runs.max(1)).map(|i| cfg.seed + i).collect();
    let mut sections = Vec::new();
    if which != Which::Radar {
        sections.push(("camera", sweep::camera_sweep(c.exec(), &cfg, &CAMERA_PD, &seeds)?));
    }
    if which != Which::Camera {
        sections.push(("radar", sweep::radar_sweep(c.exec(), &cfg, &RADAR_PD_PFA, &seeds)?));
    }
    for (name, points) in &sections {
        println!("{name} sweep, {} on {} seed(s)", cfg.trajectory.kind, seeds.len());
        print!("{}", sweep::to_table(points));
        if let Some(out) = &c.out {
            fs::create_dir_all(out)?;
            fs::write(out.join(format!("sweep_{name}.csv")), sweep::to_csv(points))?;
        }
    }
    Ok(())
}
