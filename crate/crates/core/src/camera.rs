//! Pinhole camera: calibration matrices, projection, and the statistical
//! object detector used in simulation.
//!
//! Camera frame axes: x along the optical axis (depth), y lateral (left),
//! z up. The homogeneous image point is `[depth, depth * p_u, depth * p_v]`,
//! so `p_u` is the lateral pixel coordinate and `p_v` the vertical one.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Vector3, Vector4};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::rng::{rng_for, Stream};

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("point is behind the camera (depth {depth} m)")]
    BehindCamera { depth: f64 },
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid extrinsics: {0}")]
    InvalidExtrinsics(String),
    #[error("calibration file: {0}")]
    Calibration(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    /// m_u * f, pixels
    pub focal_u: f64,
    /// m_v * f, pixels
    pub focal_v: f64,
    pub principal_u: f64,
    pub principal_v: f64,
    /// Image extent along p_u (lateral), pixels.
    pub width: f64,
    /// Image extent along p_v (vertical), pixels.
    pub height: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        CameraIntrinsics {
            focal_u: 800.0,
            focal_v: 800.0,
            principal_u: 320.0,
            principal_v: 240.0,
            width: 640.0,
            height: 480.0,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), CameraError> {
        let bad = |m: &str| Err(CameraError::InvalidIntrinsics(m.into()));
        if !(self.focal_u > 0.0 && self.focal_v > 0.0) {
            return bad("focal products must be positive");
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return bad("image size must be positive");
        }
        if !(0.0..=self.width).contains(&self.principal_u)
            || !(0.0..=self.height).contains(&self.principal_v)
        {
            return bad("principal point outside the image");
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3x4<f64> {
        Matrix3x4::new(
            1.0, 0.0, 0.0, 0.0,
            self.principal_u, self.focal_u, 0.0, 0.0,
            self.principal_v, 0.0, self.focal_v, 0.0,
        )
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        (0.0..self.width).contains(&u) && (0.0..self.height).contains(&v)
    }
}

/// Rigid transform from the radar frame into the camera frame:
/// `x_cam = rotation * x_radar + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraExtrinsics {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl CameraExtrinsics {
    pub fn identity() -> Self {
        CameraExtrinsics {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Axis-aligned mount: camera at `camera`, radar at `radar`, both in the
    /// same world frame.
    pub fn aligned(radar: &Vector3<f64>, camera: &Vector3<f64>) -> Self {
        CameraExtrinsics {
            rotation: Matrix3::identity(),
            translation: radar - camera,
        }
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        let r = &self.rotation;
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if err > 1e-10 {
            return Err(CameraError::InvalidExtrinsics(format!(
                "rotation is not orthonormal (|RtR - I| = {err:e})"
            )));
        }
        if (r.determinant() - 1.0).abs() > 1e-10 {
            return Err(CameraError::InvalidExtrinsics("rotation determinant is not +1".into()));
        }
        if !self.translation.iter().all(|t| t.is_finite()) {
            return Err(CameraError::InvalidExtrinsics("translation not finite".into()));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

pub type Projection = Matrix3x4<f64>;

pub fn projection_matrix(intr: &CameraIntrinsics, extr: &CameraExtrinsics) -> Projection {
    intr.matrix() * extr.matrix()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

pub fn project(p: &Projection, x: &Vector3<f64>) -> Result<Pixel, CameraError> {
    let h = p * Vector4::new(x.x, x.y, x.z, 1.0);
    let depth = h[0];
    if !(depth > 0.0) {
        return Err(CameraError::BehindCamera { depth });
    }
    Ok(Pixel {
        u: h[1] / depth,
        v: h[2] / depth,
        depth,
    })
}

/// Camera centre and viewing direction (radar frame) of an image point.
pub fn back_project(p: &Projection, u: f64, v: f64) -> Option<(Vector3<f64>, Vector3<f64>)> {
    let m = p.fixed_view::<3, 3>(0, 0).into_owned();
    let inv = m.try_inverse()?;
    let centre = -(inv * p.column(3));
    let dir = inv * Vector3::new(1.0, u, v);
    Some((centre, dir.normalize()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl BoundingBox {
    pub fn width(&self) -> f64 {
        self.u_max - self.u_min
    }

    pub fn height(&self) -> f64 {
        self.v_max - self.v_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    fn clip(&self, intr: &CameraIntrinsics) -> Option<BoundingBox> {
        let b = BoundingBox {
            u_min: self.u_min.max(0.0),
            v_min: self.v_min.max(0.0),
            u_max: self.u_max.min(intr.width),
            v_max: self.v_max.min(intr.height),
        };
        (b.u_max > b.u_min && b.v_max > b.v_min).then_some(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraDetection {
    pub k: usize,
    pub u: f64,
    pub v: f64,
    pub bbox: BoundingBox,
    /// Simulation annotation; the fusion stage never reads it.
    pub false_positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionModel {
    pub p_d: f64,
    /// Probability of one spurious detection per frame.
    pub fp_rate: f64,
    /// Smallest detectable box side, pixels.
    pub min_box: f64,
    /// Detector range limit, m.
    pub max_range: f64,
    /// Standard deviation of the centroid jitter on genuine detections, pixels.
    pub centroid_sigma: f64,
}

impl Default for DetectionModel {
    fn default() -> Self {
        DetectionModel {
            p_d: 0.9,
            fp_rate: 0.1,
            min_box: 15.0,
            max_range: 100.0,
            centroid_sigma: 1.0,
        }
    }
}

impl DetectionModel {
    pub fn validate(&self) -> Result<(), String> {
        for (name, p) in [("p_d", self.p_d), ("fp_rate", self.fp_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("camera {name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.min_box > 0.0 && self.max_range > 0.0 && self.centroid_sigma >= 0.0) {
            return Err("camera detector sizes must be positive".into());
        }
        Ok(())
    }
}

/// Simulated detector output for one frame. `corners` are the projections of
/// the target's 8 corners (`None` when the target is out of reach: behind the
/// camera or beyond the range limit).
pub fn detect(
    corners: Option<&[Pixel]>,
    k: usize,
    intr: &CameraIntrinsics,
    model: &DetectionModel,
    seed: u64,
) -> Vec<CameraDetection> {
    let mut rng = rng_for(seed, Stream::Camera, &[k as u64]);
    let mut out = Vec::new();
    // Draw every random number unconditionally so the stream layout does not
    // depend on geometry.
    let hit: f64 = rng.random();
    let jitter = Normal::new(0.0, 1.0).expect("unit normal");
    let (ju, jv) = (jitter.sample(&mut rng), jitter.sample(&mut rng));
    let fp: f64 = rng.random();
    let fp_geom: [f64; 4] = std::array::from_fn(|_| rng.random());

    if let Some(corners) = corners.filter(|c| !c.is_empty()) {
        let reachable = corners.iter().all(|p| p.depth > 0.0 && p.depth <= model.max_range);
        let bbox = BoundingBox {
            u_min: corners.iter().map(|p| p.u).fold(f64::INFINITY, f64::min),
            v_min: corners.iter().map(|p| p.v).fold(f64::INFINITY, f64::min),
            u_max: corners.iter().map(|p| p.u).fold(f64::NEG_INFINITY, f64::max),
            v_max: corners.iter().map(|p| p.v).fold(f64::NEG_INFINITY, f64::max),
        };
        let big_enough = bbox.width() >= model.min_box && bbox.height() >= model.min_box;
        if let (true, true, Some(clipped)) = (reachable, big_enough, bbox.clip(intr)) {
            if hit < model.p_d {
                let s = model.centroid_sigma;
                let u = ((clipped.u_min + clipped.u_max) / 2.0 + s * ju).clamp(0.0, intr.width);
                let v = ((clipped.v_min + clipped.v_max) / 2.0 + s * jv).clamp(0.0, intr.height);
                out.push(CameraDetection { k, u, v, bbox: clipped, false_positive: false });
            }
        }
    }

    if fp < model.fp_rate {
        let size = |x: f64| model.min_box + x * (80.0 - model.min_box).max(0.0);
        let (w, h) = (size(fp_geom[2]), size(fp_geom[3]));
        let cu = fp_geom[0] * intr.width;
        let cv = fp_geom[1] * intr.height;
        let raw = BoundingBox {
            u_min: cu - w / 2.0,
            v_min: cv - h / 2.0,
            u_max: cu + w / 2.0,
            v_max: cv + h / 2.0,
        };
        if let Some(b) = raw.clip(intr) {
            out.push(CameraDetection {
                k,
                u: (b.u_min + b.u_max) / 2.0,
                v: (b.v_min + b.v_max) / 2.0,
                bbox: b,
                false_positive: true,
            });
        }
    }
    out
}

/// Intrinsics and extrinsics as a plain-text key-value file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: CameraExtrinsics,
}

const CALIBRATION_VERSION: u32 = 1;

impl Calibration {
    pub fn to_text(&self) -> String {
        let i = &self.intrinsics;
        let e = &self.extrinsics;
        let mut s = String::new();
        let _ = writeln!(s, "version = {CALIBRATION_VERSION}");
        let _ = writeln!(s, "focal_u = {}", i.focal_u);
        let _ = writeln!(s, "focal_v = {}", i.focal_v);
        let _ = writeln!(s, "principal_u = {}", i.principal_u);
        let _ = writeln!(s, "principal_v = {}", i.principal_v);
        let _ = writeln!(s, "width = {}", i.width);
        let _ = writeln!(s, "height = {}", i.height);
        let rot: Vec<String> = (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .map(|(r, c)| e.rotation[(r, c)].to_string())
            .collect();
        let _ = writeln!(s, "rotation = {}", rot.join(" "));
        let _ = writeln!(
            s,
            "translation = {} {} {}",
            e.translation.x, e.translation.y, e.translation.z
        );
        s
    }

    pub fn parse(text: &str) -> Result<Self, CameraError> {
        let err = |m: String| CameraError::Calibration(m);
        let mut intr = CameraIntrinsics::default();
        let mut extr = CameraExtrinsics::identity();
        let mut version = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, val) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected key = value", n + 1)))?;
            let nums: Vec<f64> = val
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| err(format!("line {}: {e}", n + 1)))?;
            let scalar = || -> Result<f64, CameraError> {
                match nums.as_slice() {
                    [x] => Ok(*x),
                    _ => Err(err(format!("line {}: expected one number", n + 1))),
                }
            };
            match key.trim() {
                "version" => version = Some(scalar()?),
                "focal_u" => intr.focal_u = scalar()?,
                "focal_v" => intr.focal_v = scalar()?,
                "principal_u" => intr.principal_u = scalar()?,
                "principal_v" => intr.principal_v = scalar()?,
                "width" => intr.width = scalar()?,
                "height" => intr.height = scalar()?,
                "rotation" if nums.len() == 9 => {
                    extr.rotation = Matrix3::from_row_slice(&nums);
                }
                "translation" if nums.len() == 3 => {
                    extr.translation = Vector3::from_column_slice(&nums);
                }
                other => return Err(err(format!("line {}: unexpected entry {other:?}", n + 1))),
            }
        }
        match version {
            Some(v) if v == CALIBRATION_VERSION as f64 => {}
            Some(v) => return Err(err(format!("unsupported version {v}"))),
            None => return Err(err("missing version".into())),
        }
        intr.validate()?;
        extr.validate()?;
        Ok(Calibration { intrinsics: intr, extrinsics: extr })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    fn identity_projection() -> Projection {
        projection_matrix(&CameraIntrinsics::default(), &CameraExtrinsics::identity())
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let px = project(&identity_projection(), &Vector3::new(7.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(px.u, 320.0, epsilon = 1e-12);
        assert_abs_diff_eq!(px.v, 240.0, epsilon = 1e-12);
    }

    #[test]
    fn lateral_pixel_by_hand() {
        let p = identity_projection();
        let a = project(&p, &Vector3::new(10.0, 1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(a.u, 400.0, epsilon = 1e-12);
        let b = project(&p, &Vector3::new(20.0, 1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(b.u - 320.0, (a.u - 320.0) / 2.0, epsilon = 1e-12);
        assert!(matches!(
            project(&p, &Vector3::new(-5.0, 0.0, 0.0)),
            Err(CameraError::BehindCamera { .. })
        ));
    }

    #[test]
    fn translated_and_rotated_camera_matches_direct_formula() {
        let rot = *Rotation3::from_euler_angles(0.02, -0.05, 0.1).matrix();
        let extr = CameraExtrinsics { rotation: rot, translation: Vector3::new(0.9, -0.2, -1.2) };
        let intr = CameraIntrinsics::default();
        let p = projection_matrix(&intr, &extr);
        let xw = Vector3::new(12.0, -3.0, 0.6);
        let xc = rot * xw + extr.translation;
        let px = project(&p, &xw).unwrap();
        assert_abs_diff_eq!(px.u, 800.0 * xc.y / xc.x + 320.0, epsilon = 1e-9);
        assert_abs_diff_eq!(px.v, 800.0 * xc.z / xc.x + 240.0, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn back_projected_ray_passes_through_point(
            x in 1.0f64..80.0, y in -20.0f64..20.0, z in -3.0f64..3.0,
            yaw in -0.3f64..0.3, tx in -2.0f64..2.0,
        ) {
            let rot = *Rotation3::from_euler_angles(0.0, 0.0, yaw).matrix();
            let extr = CameraExtrinsics { rotation: rot, translation: Vector3::new(tx, 0.3, -1.0) };
            let p = projection_matrix(&CameraIntrinsics::default(), &extr);
            let xw = Vector3::new(x, y, z);
            if let Ok(px) = project(&p, &xw) {
                let (c, d) = back_project(&p, px.u, px.v).unwrap();
                let w = xw - c;
                let miss = (w - d * w.dot(&d)).norm();
                prop_assert!(miss < 1e-9, "miss distance {}", miss);
                // Homogeneous scale invariance.
                let h = p * Vector4::new(x, y, z, 1.0) * 3.7;
                prop_assert!((h[1] / h[0] - px.u).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lateral_order_preserved_at_equal_depth() {
        let p = identity_projection();
        let left = project(&p, &Vector3::new(15.0, 2.0, 0.0)).unwrap();
        let right = project(&p, &Vector3::new(15.0, -1.0, 0.0)).unwrap();
        assert!(left.u > right.u);
    }

    fn square(cu: f64, cv: f64, side: f64) -> Vec<Pixel> {
        let h = side / 2.0;
        [(-h, -h), (h, -h), (-h, h), (h, h)]
            .iter()
            .map(|(du, dv)| Pixel { u: cu + du, v: cv + dv, depth: 10.0 })
            .collect()
    }

    #[test]
    fn perfect_detector_reports_box_centre() {
        let model = DetectionModel { p_d: 1.0, fp_rate: 0.0, centroid_sigma: 0.0, ..Default::default() };
        let intr = CameraIntrinsics::default();
        let c = square(300.0, 200.0, 40.0);
        let d = detect(Some(&c), 3, &intr, &model, 1);
        assert_eq!(d.len(), 1);
        assert_abs_diff_eq!(d[0].u, 300.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[0].v, 200.0, epsilon = 1e-12);
        assert!(!d[0].false_positive);
        let small = square(300.0, 200.0, 12.0);
        assert!(detect(Some(&small), 3, &intr, &model, 1).is_empty());
    }

    #[test]
    fn detection_rate_matches_probability() {
        let model = DetectionModel { p_d: 0.5, fp_rate: 0.0, ..Default::default() };
        let intr = CameraIntrinsics::default();
        let c = square(320.0, 240.0, 50.0);
        let hits: usize = (0..2000).map(|k| detect(Some(&c), k, &intr, &model, 77).len()).sum();
        let rate = hits as f64 / 2000.0;
        assert!((rate - 0.5).abs() < 0.03, "rate {rate}");
    }

    #[test]
    fn detection_is_deterministic_and_false_positives_stay_in_image() {
        let model = DetectionModel { p_d: 0.9, fp_rate: 1.0, ..Default::default() };
        let intr = CameraIntrinsics::default();
        let c = square(320.0, 240.0, 50.0);
        for k in 0..200 {
            let a = detect(Some(&c), k, &intr, &model, 5);
            assert_eq!(a, detect(Some(&c), k, &intr, &model, 5));
            for d in a {
                assert!(d.bbox.u_min >= 0.0 && d.bbox.u_max <= intr.width);
                assert!(d.bbox.v_min >= 0.0 && d.bbox.v_max <= intr.height);
            }
        }
    }

    #[test]
    fn calibration_round_trip() {
        let rot = *Rotation3::from_euler_angles(0.01, 0.02, 0.03).matrix();
        let cal = Calibration {
            intrinsics: CameraIntrinsics::default(),
            extrinsics: CameraExtrinsics { rotation: rot, translation: Vector3::new(0.9, 0.0, -1.2) },
        };
        assert_eq!(Calibration::parse(&cal.to_text()).unwrap(), cal);
        assert!(Calibration::parse("focal_u = 800\n").is_err());
        assert!(Calibration::parse("version = 2\n").is_err());
    }
}
