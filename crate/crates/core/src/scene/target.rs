use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};
use rand::Rng;

use super::{SceneError, TargetState};
use crate::rng::{rng_for, Stream};

/// One triangle of the target mesh, in the body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub vertices: [Vector3<f64>; 3],
    /// Outward unit normal.
    pub normal: Vector3<f64>,
    /// Material/antenna amplitude scale applied on top of the plate RCS.
    pub reflectivity: f64,
}

impl Facet {
    fn new(vertices: [Vector3<f64>; 3]) -> Self {
        let n = (vertices[1] - vertices[0]).cross(&(vertices[2] - vertices[0]));
        Facet {
            vertices,
            normal: n.normalize(),
            reflectivity: 1.0,
        }
    }

    pub fn area(&self) -> f64 {
        triangle_area(&self.vertices)
    }

    pub fn centroid(&self) -> Vector3<f64> {
        (self.vertices[0] + self.vertices[1] + self.vertices[2]) / 3.0
    }
}

fn triangle_area(v: &[Vector3<f64>; 3]) -> f64 {
    0.5 * (v[1] - v[0]).cross(&(v[2] - v[0])).norm()
}

/// Body frame: x forward, y left, z up; origin at the footprint centre on the
/// ground, so the body spans x in ±length/2, y in ±width/2, z in [0, height].
#[derive(Debug, Clone, PartialEq)]
pub struct TargetModel {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub facets: Vec<Facet>,
    /// Scattering points per facet; 0 places one point at each facet centroid.
    pub points_per_facet: usize,
    points: Vec<(Vector3<f64>, usize)>,
}

impl TargetModel {
    /// The 4.7 x 1.8 x 1.4 m passenger-car cuboid.
    pub fn sedan() -> Self {
        Self::cuboid(4.7, 1.8, 1.4, 0, 0).expect("valid default dimensions")
    }

    /// Closed cuboid of 12 outward-facing triangles. `seed` fixes the
    /// interior sample locations in dense mode.
    pub fn cuboid(
        length: f64,
        width: f64,
        height: f64,
        points_per_facet: usize,
        seed: u64,
    ) -> Result<Self, SceneError> {
        if !(length > 0.0 && width > 0.0 && height > 0.0)
            || !(length.is_finite() && width.is_finite() && height.is_finite())
        {
            return Err(SceneError::InvalidTarget(format!(
                "dimensions must be positive, got {length} x {width} x {height}"
            )));
        }
        let (hx, hy) = (length / 2.0, width / 2.0);
        let c = |i: usize| {
            Vector3::new(
                if i & 1 == 0 { -hx } else { hx },
                if i & 2 == 0 { -hy } else { hy },
                if i & 4 == 0 { 0.0 } else { height },
            )
        };
        // Each face as a counter-clockwise quad seen from outside.
        let faces: [[usize; 4]; 6] = [
            [1, 3, 7, 5], // +x front
            [0, 4, 6, 2], // -x rear
            [2, 6, 7, 3], // +y left
            [0, 1, 5, 4], // -y right
            [4, 5, 7, 6], // +z roof
            [0, 2, 3, 1], // -z floor
        ];
        let mut facets = Vec::with_capacity(12);
        for q in faces {
            facets.push(Facet::new([c(q[0]), c(q[1]), c(q[2])]));
            facets.push(Facet::new([c(q[0]), c(q[2]), c(q[3])]));
        }
        let mut model = TargetModel {
            length,
            width,
            height,
            facets,
            points_per_facet,
            points: Vec::new(),
        };
        model.resample_points(seed);
        Ok(model)
    }

    fn resample_points(&mut self, seed: u64) {
        self.points.clear();
        if self.points_per_facet == 0 {
            self.points
                .extend(self.facets.iter().enumerate().map(|(i, f)| (f.centroid(), i)));
            return;
        }
        let mut rng = rng_for(seed, Stream::TargetPoints, &[]);
        for (i, f) in self.facets.iter().enumerate() {
            let [a, b, c] = f.vertices;
            for _ in 0..self.points_per_facet {
                let r1: f64 = rng.random::<f64>().sqrt();
                let r2: f64 = rng.random();
                let p = a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
                self.points.push((p, i));
            }
        }
    }

    /// Body-frame scattering points and the facet each belongs to.
    pub fn points(&self) -> &[(Vector3<f64>, usize)] {
        &self.points
    }

    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let (hx, hy, h) = (self.length / 2.0, self.width / 2.0, self.height);
        std::array::from_fn(|i| {
            Vector3::new(
                if i & 1 == 0 { -hx } else { hx },
                if i & 2 == 0 { -hy } else { hy },
                if i & 4 == 0 { 0.0 } else { h },
            )
        })
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.facets.len() != 12 {
            return Err(SceneError::InvalidTarget(format!(
                "expected 12 facets, found {}",
                self.facets.len()
            )));
        }
        if !(self.length > 0.0 && self.width > 0.0 && self.height > 0.0) {
            return Err(SceneError::InvalidTarget("dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Body-to-world placement for a target state: yaw about z, centre on the ground.
pub fn body_to_world(state: &TargetState, p: &Vector3<f64>) -> Vector3<f64> {
    Rotation3::from_axis_angle(&Vector3::z_axis(), state.yaw) * p
        + Vector3::new(state.x, state.y, 0.0)
}

/// Flat-plate physical-optics RCS (m^2) of a triangle at the given incidence
/// angle from its normal.
pub fn facet_rcs(triangle: &[Vector3<f64>; 3], wavelength: f64, incidence_angle: f64) -> f64 {
    let area = triangle_area(triangle);
    if area <= f64::EPSILON * 1e3 || wavelength <= 0.0 {
        return 0.0;
    }
    let theta = incidence_angle.abs();
    if theta >= PI / 2.0 {
        return 0.0;
    }
    let c = theta.cos();
    4.0 * PI * area * area / (wavelength * wavelength) * c * c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotOptions {
    pub wavelength: f64,
    /// Back-face culling plus body occlusion when true; every facet
    /// reflects from either side when false.
    pub shadowing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub position: Vector3<f64>,
    /// Complex-envelope amplitude, sqrt(m^2) before propagation loss.
    pub reflectivity: f64,
    /// Range rate with respect to the sensor, m/s (positive receding).
    pub radial_velocity: f64,
    pub visible: bool,
}

fn segment_hits_triangle(
    origin: &Vector3<f64>,
    end: &Vector3<f64>,
    tri: &[Vector3<f64>; 3],
) -> bool {
    // Moller-Trumbore on the open segment origin -> end.
    let dir = end - origin;
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return false;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    let t = e2.dot(&q) * inv;
    t > 1e-9 && t < 1.0 - 1e-9
}

/// World-frame scatterers of the target at `state` as seen from `sensor`.
pub fn scatterer_snapshot(
    model: &TargetModel,
    state: &TargetState,
    sensor: &Vector3<f64>,
    opts: &SnapshotOptions,
) -> Vec<Scatterer> {
    let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), state.yaw);
    let centre = Vector3::new(state.x, state.y, 0.0);
    let world_tris: Vec<[Vector3<f64>; 3]> = model
        .facets
        .iter()
        .map(|f| f.vertices.map(|v| rot * v + centre))
        .collect();

    // Facet-level amplitude and front-facing test, evaluated at the centroid.
    let per_facet: Vec<(f64, bool)> = model
        .facets
        .iter()
        .zip(&world_tris)
        .map(|(f, tri)| {
            let n = rot * f.normal;
            let c = (tri[0] + tri[1] + tri[2]) / 3.0;
            let to_sensor = (sensor - c).normalize();
            let cos_inc = n.dot(&to_sensor);
            let front = cos_inc > 0.0;
            let lit = front || !opts.shadowing;
            let theta = cos_inc.abs().min(1.0).acos();
            let rcs = if lit {
                facet_rcs(tri, opts.wavelength, theta)
            } else {
                0.0
            };
            (rcs.sqrt() * f.reflectivity, front)
        })
        .collect();

    let counts = model.points_per_facet.max(1) as f64;
    let omega = state.omega;
    model
        .points()
        .iter()
        .map(|(pb, fi)| {
            let position = rot * pb + centre;
            let lever = position - centre;
            let vel = Vector3::new(state.vx - omega * lever.y, state.vy + omega * lever.x, 0.0);
            let los = position - sensor;
            let radial_velocity = los.dot(&vel) / los.norm();
            let (amp, front) = per_facet[*fi];
            let visible = if opts.shadowing {
                front
                    && !world_tris.iter().enumerate().any(|(j, tri)| {
                        j != *fi && segment_hits_triangle(sensor, &position, tri)
                    })
            } else {
                true
            };
            Scatterer {
                position,
                reflectivity: amp / counts,
                radial_velocity,
                visible,
            }
        })
        .collect()
}
