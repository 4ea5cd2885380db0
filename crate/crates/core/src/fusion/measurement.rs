use nalgebra::{SMatrix, Vector3, Vector4};

use super::{FusionError, StateVector};
use crate::camera::Projection;
use crate::SPEED_OF_LIGHT;

/// Scale of the Doppler measurement function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DopplerConvention {
    /// `f_D = (2 f_c / c) * v_r`.
    Standard,
    /// Twice the standard value, an alternative convention.
    Doubled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementModel {
    pub carrier: f64,
    pub projection: Projection,
    /// Height of the tracked point in the radar frame, m.
    pub reference_height: f64,
    pub doppler: DopplerConvention,
    /// Doppler innovations are folded into +-prf/2 when set.
    pub prf: Option<f64>,
}

impl MeasurementModel {
    /// Hz of Doppler per m/s of radial velocity.
    pub fn doppler_scale(&self) -> f64 {
        let k = 2.0 * self.carrier / SPEED_OF_LIGHT;
        match self.doppler {
            DopplerConvention::Standard => k,
            DopplerConvention::Doubled => 2.0 * k,
        }
    }

    fn homogeneous(&self, x: &StateVector) -> Vector3<f64> {
        self.projection * Vector4::new(x[0], x[1], self.reference_height, 1.0)
    }

    /// Predicted lateral pixel, if the point is in front of the camera.
    pub fn pixel(&self, x: &StateVector) -> Option<f64> {
        let h = self.homogeneous(x);
        (h[0] > 0.0).then(|| h[1] / h[0])
    }
}

/// Predicted `[range, doppler, lateral pixel]`. The pixel entry is NaN when
/// the point lies behind the camera.
pub fn measurement_model(x: &StateVector, m: &MeasurementModel) -> Result<Vector3<f64>, FusionError> {
    let r = x[0].hypot(x[1]);
    if !(r > 1e-9) {
        return Err(FusionError::ZeroRange);
    }
    let fd = m.doppler_scale() * (x[0] * x[2] + x[1] * x[3]) / r;
    Ok(Vector3::new(r, fd, m.pixel(x).unwrap_or(f64::NAN)))
}

pub fn measurement_jacobian(
    x: &StateVector,
    m: &MeasurementModel,
) -> Result<SMatrix<f64, 3, 5>, FusionError> {
    let (px, py, vx, vy) = (x[0], x[1], x[2], x[3]);
    let r = px.hypot(py);
    if !(r > 1e-9) {
        return Err(FusionError::ZeroRange);
    }
    let k = m.doppler_scale();
    let g = px * vx + py * vy;
    let r3 = r * r * r;
    let mut h = SMatrix::<f64, 3, 5>::zeros();
    h[(0, 0)] = px / r;
    h[(0, 1)] = py / r;
    h[(1, 0)] = k * (vx / r - g * px / r3);
    h[(1, 1)] = k * (vy / r - g * py / r3);
    h[(1, 2)] = k * px / r;
    h[(1, 3)] = k * py / r;
    let hp = m.homogeneous(x);
    let p = &m.projection;
    let (num, den) = (hp[1], hp[0]);
    for c in 0..2 {
        h[(2, c)] = (p[(1, c)] * den - num * p[(0, c)]) / (den * den);
    }
    Ok(h)
}

/// Ground position from a range and a lateral pixel: intersection of the
/// range circle with the pixel's bearing line, taking the root in front of
/// the camera (the farthest one if both are).
pub fn initial_position(range: f64, pixel: f64, m: &MeasurementModel) -> Option<(f64, f64)> {
    let p = &m.projection;
    let z = m.reference_height;
    // (row1 - u row0) . [x, y, z, 1] = 0  ->  a x + b y + c = 0
    let row = |j: usize| p[(1, j)] - pixel * p[(0, j)];
    let (a, b, c) = (row(0), row(1), row(2) * z + row(3));
    let n2 = a * a + b * b;
    if n2 == 0.0 {
        return None;
    }
    // Foot of the perpendicular from the origin, then +- along the line.
    let (fx, fy) = (-a * c / n2, -b * c / n2);
    let d2 = range * range - c * c / n2;
    if d2 < 0.0 {
        return None;
    }
    let d = d2.sqrt() / n2.sqrt();
    let (tx, ty) = (-b * d, a * d);
    let depth = |x: f64, y: f64| p[(0, 0)] * x + p[(0, 1)] * y + p[(0, 2)] * z + p[(0, 3)];
    [(fx + tx, fy + ty), (fx - tx, fy - ty)]
        .into_iter()
        .filter(|&(x, y)| depth(x, y) > 0.0)
        .max_by(|a, b| depth(a.0, a.1).total_cmp(&depth(b.0, b.1)))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::camera::{projection_matrix, CameraExtrinsics, CameraIntrinsics};
    use proptest::prelude::*;

    pub(crate) fn model() -> MeasurementModel {
        let extr = CameraExtrinsics::aligned(
            &nalgebra::Vector3::new(12.35, 42.6, 0.1),
            &nalgebra::Vector3::new(11.45, 42.6, 1.3),
        );
        MeasurementModel {
            carrier: 77e9,
            projection: projection_matrix(&CameraIntrinsics::default(), &extr),
            reference_height: 0.6,
            doppler: DopplerConvention::Standard,
            prf: None,
        }
    }

    #[test]
    fn range_and_doppler_values() {
        let m = model();
        let z = measurement_model(&StateVector::new(3.0, 4.0, 0.0, 0.0, 0.0), &m).unwrap();
        assert!((z[0] - 5.0).abs() < 1e-12);
        let z = measurement_model(&StateVector::new(10.0, 0.0, -6.0, 0.0, 0.0), &m).unwrap();
        let expect = -2.0 * 6.0 * 77e9 / SPEED_OF_LIGHT;
        assert!((z[1] - expect).abs() < 1e-9);
        assert!((z[1] + 3082.1).abs() < 0.1);
        let z = measurement_model(&StateVector::new(10.0, 0.0, 0.0, 6.0, 0.0), &m).unwrap();
        assert_eq!(z[1], 0.0);
        assert_eq!(
            measurement_model(&StateVector::zeros(), &m),
            Err(FusionError::ZeroRange)
        );
    }

    #[test]
    fn doubled_convention_doubles() {
        let mut m = model();
        let x = StateVector::new(7.0, 2.0, -3.0, 1.0, 0.0);
        let a = measurement_model(&x, &m).unwrap()[1];
        m.doppler = DopplerConvention::Doubled;
        assert!((measurement_model(&x, &m).unwrap()[1] - 2.0 * a).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn jacobian_matches_finite_differences(
            px in 2.0f64..40.0, py in -20.0f64..20.0,
            vx in -8.0f64..8.0, vy in -8.0f64..8.0, w in -3.0f64..3.0,
        ) {
            let m = model();
            let x = StateVector::new(px, py, vx, vy, w);
            let h = measurement_jacobian(&x, &m).unwrap();
            for c in 0..5 {
                let step = 1e-6 * x[c].abs().max(1e-2);
                let mut a = x;
                let mut b = x;
                a[c] += step;
                b[c] -= step;
                let d = (measurement_model(&a, &m).unwrap() - measurement_model(&b, &m).unwrap())
                    / (2.0 * step);
                for r in 0..3 {
                    let tol = 1e-6 * h[(r, c)].abs().max(1.0);
                    prop_assert!((h[(r, c)] - d[r]).abs() <= tol,
                        "H[{},{}] = {} vs {}", r, c, h[(r, c)], d[r]);
                }
            }
        }

        #[test]
        fn initial_position_inverts_the_model(px in 3.0f64..40.0, py in -15.0f64..15.0) {
            let m = model();
            let x = StateVector::new(px, py, 0.0, 0.0, 0.0);
            let z = measurement_model(&x, &m).unwrap();
            let (ex, ey) = initial_position(z[0], z[2], &m).unwrap();
            prop_assert!((ex - px).abs() < 1e-6 && (ey - py).abs() < 1e-6);
        }
    }
}
