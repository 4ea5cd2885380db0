//! Text and image artifacts: CSV logs and 16-bit PGM images.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::camera::CameraDetection;
use crate::fusion::{StateVector, TrackRecord, TrackStatus};
use crate::isar::{Interferogram, IsarImage, RadarMeasurement};
use crate::metrics::to_db;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

const MEAS: [&str; 3] = ["r", "d", "u"];
const STATE: [&str; 5] = ["x", "y", "vx", "vy", "w"];

pub fn track_csv_header() -> String {
    let mut h = String::from("k,status,x,y,vx,vy,omega,p_x,p_y,p_vx,p_vy,p_w");
    for m in MEAS {
        for s in STATE {
            let _ = write!(h, ",k_{m}_{s}");
        }
    }
    h.push_str(",cond_s,radar_accepted,radar_rejected,camera_accepted,camera_rejected");
    h
}

/// One row per frame: state mean, covariance diagonal, the gain in
/// measurement-by-state order and gate counts. Fields are empty before the
/// track starts.
pub fn track_csv(records: &[TrackRecord]) -> String {
    let mut s = track_csv_header();
    s.push('\n');
    for r in records {
        let status = match r.status {
            TrackStatus::Waiting => "waiting",
            TrackStatus::Started => "started",
            TrackStatus::Updated => "updated",
        };
        let _ = write!(s, "{},{status}", r.k);
        match &r.state {
            Some(st) => {
                for v in st.x.iter() {
                    let _ = write!(s, ",{v}");
                }
                for i in 0..5 {
                    let _ = write!(s, ",{}", st.p[(i, i)]);
                }
            }
            None => s.push_str(&",".repeat(10)),
        }
        for g in r.gains.flat() {
            let _ = write!(s, ",{g}");
        }
        let _ = writeln!(
            s,
            ",{},{},{},{},{}",
            r.gains.condition, r.radar_accepted, r.radar_rejected, r.camera_accepted, r.camera_rejected
        );
    }
    s
}

/// Frame index and state mean of each row of a track log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRow {
    pub k: usize,
    pub state: Option<StateVector>,
}

pub fn parse_track_csv(text: &str) -> Result<Vec<TrackRow>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == track_csv_header() => {}
        _ => return Err("line 1: not a track log header".into()),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 7 {
            return Err(format!("line {}: too few fields", i + 1));
        }
        let k = f[0].parse().map_err(|e| format!("line {}: {e}", i + 1))?;
        let state = if f[2].is_empty() {
            None
        } else {
            let mut x = StateVector::zeros();
            for j in 0..5 {
                x[j] = f[2 + j].parse().map_err(|e| format!("line {}: {e}", i + 1))?;
            }
            Some(x)
        };
        out.push(TrackRow { k, state });
    }
    Ok(out)
}

pub fn radar_csv(ms: &[RadarMeasurement]) -> String {
    let mut s = String::from("k,range,doppler,elevation,count,power\n");
    for m in ms {
        let _ = writeln!(s, "{},{},{},{},{},{}", m.cpi_index, m.range, m.doppler, opt(m.elevation), m.count, m.power);
    }
    s
}

pub fn camera_csv(ds: &[CameraDetection]) -> String {
    let mut s = String::from("k,u,v,u_min,v_min,u_max,v_max,false_positive\n");
    for d in ds {
        let b = &d.bbox;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            d.k, d.u, d.v, b.u_min, b.v_min, b.u_max, b.v_max, d.false_positive as u8
        );
    }
    s
}

/// 16-bit binary PGM with `# key value` comment lines after the magic.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u16], comments: &[String]) -> Vec<u8> {
    let mut out = String::from("P5\n");
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = write!(out, "{width} {height}\n65535\n");
    let mut bytes = out.into_bytes();
    for p in pixels {
        bytes.extend_from_slice(&p.to_be_bytes());
    }
    bytes
}

/// Decoded 16-bit PGM: width, height, comments, pixels.
pub type Pgm = (usize, usize, Vec<String>, Vec<u16>);

pub fn decode_pgm(bytes: &[u8]) -> Result<Pgm, String> {
    let mut pos = 0;
    let mut next_line = || -> Result<String, String> {
        let end = bytes[pos..].iter().position(|b| *b == b'\n').ok_or("truncated header")?;
        let line = String::from_utf8_lossy(&bytes[pos..pos + end]).into_owned();
        pos += end + 1;
        Ok(line)
    };
    if next_line()? != "P5" {
        return Err("not a binary PGM".into());
    }
    let mut comments = Vec::new();
    let mut line = next_line()?;
    while let Some(c) = line.strip_prefix('#') {
        comments.push(c.trim().to_string());
        line = next_line()?;
    }
    let mut dims = line.split_whitespace().map(|v| v.parse::<usize>());
    let (Some(Ok(w)), Some(Ok(h))) = (dims.next(), dims.next()) else {
        return Err(format!("bad dimensions {line:?}"));
    };
    if next_line()?.trim() != "65535" {
        return Err("only 16-bit PGM is supported".into());
    }
    let body = &bytes[pos..];
    if body.len() != 2 * w * h {
        return Err(format!("expected {} pixel bytes, found {}", 2 * w * h, body.len()));
    }
    let px = body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
    Ok((w, h, comments, px))
}

fn axis_comment(name: &str, axis: &[f64]) -> String {
    let step = if axis.len() > 1 { axis[1] - axis[0] } else { 0.0 };
    format!("{name} first={} step={} count={}", axis.first().copied().unwrap_or(0.0), step, axis.len())
}

/// Image power in dB over `floor_db` below peak, scaled to the 16-bit range.
/// Columns are range, rows are crossrange (or Doppler) in ascending order.
pub fn write_image_pgm(path: &Path, img: &IsarImage, floor_db: f64) -> io::Result<()> {
    let db = to_db(&img.powers(), floor_db).unwrap_or_else(|_| vec![0.0; img.data.len()]);
    let px: Vec<u16> = db.iter().map(|v| (v / floor_db * 65535.0).round() as u16).collect();
    let mut comments = vec![
        format!("cpi {}", img.cpi_index),
        format!("channel {}", img.channel),
        format!("scale dB span={floor_db}"),
        axis_comment("columns range_m", &img.range_axis),
    ];
    comments.push(match &img.crossrange_axis {
        Some(a) => axis_comment("rows crossrange_m", a),
        None => axis_comment("rows doppler_hz", &img.doppler_axis),
    });
    fs::write(path, encode_pgm(img.n_range, img.n_doppler, &px, &comments))
}

/// Elevation map, -90..90 degrees mapped to 1..65535; 0 marks gated cells.
pub fn write_interferogram_pgm(path: &Path, ifg: &Interferogram) -> io::Result<()> {
    let px: Vec<u16> = ifg
        .theta
        .iter()
        .zip(&ifg.valid)
        .map(|(t, v)| {
            if *v {
                (1.0 + (t.to_degrees() + 90.0) / 180.0 * 65534.0).round().clamp(1.0, 65535.0) as u16
            } else {
                0
            }
        })
        .collect();
    let comments = vec!["scale elevation_deg -90=1 90=65535 gated=0".to_string()];
    fs::write(path, encode_pgm(ifg.n_range, ifg.n_doppler, &px, &comments))
}
