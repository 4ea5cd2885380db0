use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Vector2, Vector3};

use super::SceneError;

/// The four junction manoeuvres plus free-form polylines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrajectoryKind {
    /// South lane to south lane U-turn.
    Ssut,
    /// North lane to north lane U-turn.
    Nnut,
    /// East lane to north lane right turn.
    Enrt,
    /// West lane to south lane right turn.
    Wsrt,
    Custom,
}

impl TrajectoryKind {
    pub const CANONICAL: [TrajectoryKind; 4] = [
        TrajectoryKind::Ssut,
        TrajectoryKind::Nnut,
        TrajectoryKind::Enrt,
        TrajectoryKind::Wsrt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TrajectoryKind::Ssut => "SSUT",
            TrajectoryKind::Nnut => "NNUT",
            TrajectoryKind::Enrt => "ENRT",
            TrajectoryKind::Wsrt => "WSRT",
            TrajectoryKind::Custom => "CUSTOM",
        }
    }
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrajectoryKind {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SSUT" => Ok(TrajectoryKind::Ssut),
            "NNUT" => Ok(TrajectoryKind::Nnut),
            "ENRT" => Ok(TrajectoryKind::Enrt),
            "WSRT" => Ok(TrajectoryKind::Wsrt),
            "CUSTOM" => Ok(TrajectoryKind::Custom),
            other => Err(SceneError::InvalidTrajectory(format!(
                "unknown trajectory kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    pub start: Vector3<f64>,
    pub end: Vector3<f64>,
    /// m/s, constant along the path.
    pub speed: f64,
    /// s
    pub duration: f64,
    /// Intermediate polyline vertices, only used by [`TrajectoryKind::Custom`].
    pub waypoints: Vec<Vector3<f64>>,
}

impl TrajectorySpec {
    /// Junction manoeuvre with the canonical endpoints, 6 m/s for 6 s.
    pub fn canonical(kind: TrajectoryKind) -> Self {
        let (start, end) = match kind {
            TrajectoryKind::Ssut => ([20.0, 39.5], [20.0, 35.4]),
            TrajectoryKind::Nnut => ([58.0, 39.0], [58.0, 42.6]),
            TrajectoryKind::Enrt => ([39.0, 20.0], [58.0, 42.6]),
            TrajectoryKind::Wsrt => ([39.0, 58.0], [20.0, 35.4]),
            TrajectoryKind::Custom => ([0.0, 0.0], [36.0, 0.0]),
        };
        TrajectorySpec {
            kind,
            start: Vector3::new(start[0], start[1], 0.0),
            end: Vector3::new(end[0], end[1], 0.0),
            speed: 6.0,
            duration: 6.0,
            waypoints: Vec::new(),
        }
    }

    pub fn path_length(&self) -> f64 {
        self.speed * self.duration
    }

    /// Lane headings at entry and exit (unit vectors in the ground plane).
    fn lane_headings(&self) -> Option<(Vector2<f64>, Vector2<f64>)> {
        let (h0, h1) = match self.kind {
            TrajectoryKind::Ssut => ([1.0, 0.0], [-1.0, 0.0]),
            TrajectoryKind::Nnut => ([-1.0, 0.0], [1.0, 0.0]),
            TrajectoryKind::Enrt => ([0.0, 1.0], [1.0, 0.0]),
            TrajectoryKind::Wsrt => ([0.0, -1.0], [-1.0, 0.0]),
            TrajectoryKind::Custom => return None,
        };
        Some((Vector2::new(h0[0], h0[1]), Vector2::new(h1[0], h1[1])))
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: &str| Err(SceneError::InvalidTrajectory(m.to_string()));
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return bad("speed must be positive");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration must be positive");
        }
        if !self.start.iter().chain(self.end.iter()).all(|v| v.is_finite()) {
            return bad("endpoints must be finite");
        }
        Ok(())
    }
}

/// Kinematic state of the target's geometric centre at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    /// Yaw rate, rad/s (positive counter-clockwise seen from above).
    pub omega: f64,
    /// Heading, rad; `atan2(vy, vx)`.
    pub yaw: f64,
    pub t: f64,
}

impl TargetState {
    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Segment {
    Line {
        start: Vector2<f64>,
        dir: Vector2<f64>,
        length: f64,
    },
    Arc {
        center: Vector2<f64>,
        radius: f64,
        start_angle: f64,
        /// +1 counter-clockwise, -1 clockwise.
        sense: f64,
        length: f64,
    },
}

impl Segment {
    fn length(&self) -> f64 {
        match *self {
            Segment::Line { length, .. } | Segment::Arc { length, .. } => length,
        }
    }

    /// Position, unit heading and yaw rate factor (omega / speed) at arc length `s`.
    fn eval(&self, s: f64) -> (Vector2<f64>, Vector2<f64>, f64) {
        match *self {
            Segment::Line { start, dir, .. } => (start + dir * s, dir, 0.0),
            Segment::Arc {
                center,
                radius,
                start_angle,
                sense,
                ..
            } => {
                let th = start_angle + sense * s / radius;
                let (sn, cs) = th.sin_cos();
                let pos = center + Vector2::new(cs, sn) * radius;
                let dir = Vector2::new(-sn, cs) * sense;
                (pos, dir, sense / radius)
            }
        }
    }
}

fn left_normal(h: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-h.y, h.x)
}

fn cross2(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// A constant-speed path made of straight lines and circular arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    spec: TrajectorySpec,
    segments: Vec<Segment>,
}

const GEOM_EPS: f64 = 1e-9;

impl Trajectory {
    pub fn new(spec: TrajectorySpec) -> Result<Self, SceneError> {
        spec.validate()?;
        let segments = match spec.lane_headings() {
            Some((h0, h1)) => Self::turn_segments(&spec, h0, h1)?,
            None => Self::polyline_segments(&spec)?,
        };
        Ok(Trajectory { spec, segments })
    }

    pub fn spec(&self) -> &TrajectorySpec {
        &self.spec
    }

    pub fn duration(&self) -> f64 {
        self.spec.duration
    }

    /// Line-arc-line path with one arc tangent to both lanes whose radius
    /// makes the total length equal `speed * duration`.
    fn turn_segments(
        spec: &TrajectorySpec,
        h0: Vector2<f64>,
        h1: Vector2<f64>,
    ) -> Result<Vec<Segment>, SceneError> {
        let p0 = spec.start.xy();
        let p1 = spec.end.xy();
        let total = spec.path_length();
        let err = |m: String| SceneError::InvalidTrajectory(m);
        let turn = cross2(h0, h1);

        if turn.abs() < GEOM_EPS {
            if h0.dot(&h1) > 0.0 {
                return Err(err("entry and exit lanes are parallel".into()));
            }
            // U-turn: a semicircle joins the two antiparallel lanes.
            let offset = p1 - p0;
            let lateral = cross2(h0, offset);
            if lateral.abs() < GEOM_EPS {
                return Err(err("U-turn lanes coincide".into()));
            }
            let radius = lateral.abs() / 2.0;
            let sense = lateral.signum();
            let along = offset.dot(&h0);
            let entry = (total - PI * radius + along) / 2.0;
            let exit = (total - PI * radius - along) / 2.0;
            if entry < -GEOM_EPS || exit < -GEOM_EPS {
                return Err(err(format!(
                    "path length {total} m too short for a U-turn of radius {radius} m"
                )));
            }
            let (entry, exit) = (entry.max(0.0), exit.max(0.0));
            let arc_start = p0 + h0 * entry;
            let center = arc_start + left_normal(h0) * (sense * radius);
            let d = arc_start - center;
            let arc_end = center - d;
            return Ok(vec![
                Segment::Line { start: p0, dir: h0, length: entry },
                Segment::Arc {
                    center,
                    radius,
                    start_angle: d.y.atan2(d.x),
                    sense,
                    length: PI * radius,
                },
                Segment::Line { start: arc_end, dir: h1, length: exit },
            ]);
        }

        // Intersecting lanes: p0 + u h0 = corner = p1 - w h1.
        let rhs = p1 - p0;
        let u = cross2(rhs, h1) / turn;
        let w = cross2(h0, rhs) / turn;
        if u <= 0.0 || w <= 0.0 {
            return Err(err("exit lane is not ahead of the entry lane".into()));
        }
        let delta = h0.dot(&h1).clamp(-1.0, 1.0).acos();
        let tan_half = (delta / 2.0).tan();
        let radius = (u + w - total) / (2.0 * tan_half - delta);
        if !(radius > 0.0) {
            return Err(err(format!(
                "path length {total} m incompatible with a tangent arc (radius {radius})"
            )));
        }
        let tangent = radius * tan_half;
        if tangent > u + GEOM_EPS || tangent > w + GEOM_EPS {
            return Err(err(format!(
                "turn radius {radius} m does not fit between the endpoints"
            )));
        }
        let sense = turn.signum();
        let arc_start = p0 + h0 * (u - tangent);
        let center = arc_start + left_normal(h0) * (sense * radius);
        let d = arc_start - center;
        let corner = p0 + h0 * u;
        let arc_end = corner + h1 * tangent;
        Ok(vec![
            Segment::Line { start: p0, dir: h0, length: (u - tangent).max(0.0) },
            Segment::Arc {
                center,
                radius,
                start_angle: d.y.atan2(d.x),
                sense,
                length: radius * delta,
            },
            Segment::Line { start: arc_end, dir: h1, length: (w - tangent).max(0.0) },
        ])
    }

    fn polyline_segments(spec: &TrajectorySpec) -> Result<Vec<Segment>, SceneError> {
        let mut pts = vec![spec.start.xy()];
        pts.extend(spec.waypoints.iter().map(|w| w.xy()));
        pts.push(spec.end.xy());
        let mut segs = Vec::new();
        for pair in pts.windows(2) {
            let d = pair[1] - pair[0];
            let len = d.norm();
            if len < GEOM_EPS {
                continue;
            }
            segs.push(Segment::Line { start: pair[0], dir: d / len, length: len });
        }
        if segs.is_empty() {
            return Err(SceneError::InvalidTrajectory("custom path has zero length".into()));
        }
        let len: f64 = segs.iter().map(Segment::length).sum();
        let want = spec.path_length();
        if (len - want).abs() > 1e-6 * want.max(1.0) {
            return Err(SceneError::InvalidTrajectory(format!(
                "custom polyline is {len} m long but speed * duration is {want} m"
            )));
        }
        Ok(segs)
    }

    pub fn sample(&self, t: f64) -> Result<TargetState, SceneError> {
        let duration = self.spec.duration;
        if !(t >= 0.0 && t <= duration) {
            return Err(SceneError::TimeOutOfRange { t, duration });
        }
        let v = self.spec.speed;
        let mut s = v * t;
        let last = self.segments.len() - 1;
        for (i, seg) in self.segments.iter().enumerate() {
            let len = seg.length();
            if s <= len || i == last {
                let (p, dir, curvature) = seg.eval(s.min(len));
                let (vx, vy) = (dir.x * v, dir.y * v);
                return Ok(TargetState {
                    x: p.x,
                    y: p.y,
                    vx,
                    vy,
                    omega: curvature * v,
                    yaw: vy.atan2(vx),
                    t,
                });
            }
            s -= len;
        }
        unreachable!("trajectory has at least one segment")
    }

    /// Time intervals spent on constant-turn-rate arcs.
    pub fn turn_intervals(&self) -> Vec<(f64, f64)> {
        let v = self.spec.speed;
        let mut out = Vec::new();
        let mut s = 0.0;
        for seg in &self.segments {
            if let Segment::Arc { length, .. } = seg {
                out.push((s / v, (s + length) / v));
            }
            s += seg.length();
        }
        out
    }

    /// Yaw rate magnitude of the first arc, if any.
    pub fn turn_rate(&self) -> Option<f64> {
        self.segments.iter().find_map(|s| match s {
            Segment::Arc { radius, sense, .. } => Some(sense * self.spec.speed / radius),
            _ => None,
        })
    }
}

pub fn sample_state(spec: &TrajectorySpec, t: f64) -> Result<TargetState, SceneError> {
    Trajectory::new(spec.clone())?.sample(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ssut_endpoints_match_canonical_coordinates() {
        let tr = Trajectory::new(TrajectorySpec::canonical(TrajectoryKind::Ssut)).unwrap();
        let s0 = tr.sample(0.0).unwrap();
        let s6 = tr.sample(6.0).unwrap();
        assert_abs_diff_eq!(s0.x, 20.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s0.y, 39.5, epsilon = 1e-9);
        assert_abs_diff_eq!(s6.x, 20.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s6.y, 35.4, epsilon = 1e-9);
    }

    #[test]
    fn all_canonical_endpoints() {
        for kind in TrajectoryKind::CANONICAL {
            let spec = TrajectorySpec::canonical(kind);
            let tr = Trajectory::new(spec.clone()).unwrap();
            let a = tr.sample(0.0).unwrap();
            let b = tr.sample(spec.duration).unwrap();
            assert_abs_diff_eq!(a.x, spec.start.x, epsilon = 1e-9);
            assert_abs_diff_eq!(a.y, spec.start.y, epsilon = 1e-9);
            assert_abs_diff_eq!(b.x, spec.end.x, epsilon = 1e-9);
            assert_abs_diff_eq!(b.y, spec.end.y, epsilon = 1e-9);
        }
    }

    #[test]
    fn speed_is_constant() {
        for kind in TrajectoryKind::CANONICAL {
            let tr = Trajectory::new(TrajectorySpec::canonical(kind)).unwrap();
            for i in 0..=600 {
                let s = tr.sample(i as f64 * 0.01).unwrap();
                assert_abs_diff_eq!(s.speed(), 6.0, epsilon = 1e-9);
                assert_abs_diff_eq!(s.yaw, s.vy.atan2(s.vx), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn right_turns_are_clockwise_and_u_turn_radius_is_half_the_lane_offset() {
        let enrt = Trajectory::new(TrajectorySpec::canonical(TrajectoryKind::Enrt)).unwrap();
        assert!(enrt.turn_rate().unwrap() < 0.0);
        let ssut = Trajectory::new(TrajectorySpec::canonical(TrajectoryKind::Ssut)).unwrap();
        assert_abs_diff_eq!(ssut.turn_rate().unwrap(), -6.0 / 2.05, epsilon = 1e-12);
        let nnut = Trajectory::new(TrajectorySpec::canonical(TrajectoryKind::Nnut)).unwrap();
        assert_abs_diff_eq!(nnut.turn_rate().unwrap().abs(), 6.0 / 1.8, epsilon = 1e-12);
    }

    #[test]
    fn out_of_range_time_is_rejected() {
        let spec = TrajectorySpec::canonical(TrajectoryKind::Ssut);
        assert!(matches!(
            sample_state(&spec, 6.01),
            Err(SceneError::TimeOutOfRange { .. })
        ));
        assert!(sample_state(&spec, -0.1).is_err());
    }

    #[test]
    fn custom_polyline_must_match_length() {
        let mut spec = TrajectorySpec::canonical(TrajectoryKind::Custom);
        assert!(Trajectory::new(spec.clone()).is_ok());
        spec.speed = 5.0;
        assert!(Trajectory::new(spec).is_err());
    }

    #[test]
    fn invalid_speed_is_rejected() {
        let mut spec = TrajectorySpec::canonical(TrajectoryKind::Ssut);
        spec.speed = 0.0;
        assert!(Trajectory::new(spec).is_err());
    }
}
