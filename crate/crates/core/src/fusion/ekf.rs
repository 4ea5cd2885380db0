use nalgebra::{DMatrix, DVector};

use super::{
    measurement_jacobian, measurement_model, predict, FusedMeasurement, FusedState, FusionError,
    MeasurementModel, NoiseConfig,
};

/// Kalman gain of one update, indexed `[measurement][state]`; rows of
/// missing measurements are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GainReport {
    pub gains: [[f64; 5]; 3],
    pub innovation: [Option<f64>; 3],
    /// Condition number of the innovation covariance (1 when nothing was used).
    pub condition: f64,
}

impl GainReport {
    pub fn flat(&self) -> [f64; 15] {
        std::array::from_fn(|i| self.gains[i / 5][i % 5])
    }
}

fn fold(v: f64, period: f64) -> f64 {
    v - period * (v / period).round()
}

/// Measurement update of a predicted state. Missing components are removed
/// from the update, so their gain rows are exactly zero.
pub fn update(
    predicted: &FusedState,
    z: &FusedMeasurement,
    noise: &NoiseConfig,
    model: &MeasurementModel,
) -> Result<(FusedState, GainReport), FusionError> {
    let mut report = GainReport { condition: 1.0, ..Default::default() };
    let zhat = measurement_model(&predicted.x, model)?;
    let h_full = measurement_jacobian(&predicted.x, model)?;
    let r_full = noise.measurement_covariance();

    let mut used = Vec::with_capacity(3);
    let mut nu = Vec::with_capacity(3);
    for (i, c) in z.components().iter().enumerate() {
        let Some(value) = c else { continue };
        if !zhat[i].is_finite() {
            continue;
        }
        let mut v = value - zhat[i];
        if i == 1 {
            if let Some(prf) = model.prf {
                v = fold(v, prf);
            }
        }
        used.push(i);
        nu.push(v);
    }
    if used.is_empty() {
        return Ok((*predicted, report));
    }

    let m = used.len();
    let h = DMatrix::from_fn(m, 5, |r, c| h_full[(used[r], c)]);
    let r = DMatrix::from_fn(m, m, |a, b| r_full[(used[a], used[b])]);
    let p = DMatrix::from_fn(5, 5, |a, b| predicted.p[(a, b)]);
    let s = &h * &p * h.transpose() + &r;
    let s = (&s + s.transpose()) * 0.5;
    let eig = s.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) {
        return Err(FusionError::SingularInnovation);
    }
    let s_inv = s.try_inverse().ok_or(FusionError::SingularInnovation)?;
    let k = &p * h.transpose() * s_inv;
    let dx = &k * DVector::from_vec(nu.clone());

    let i_kh = DMatrix::<f64>::identity(5, 5) - &k * &h;
    let p_new = &i_kh * &p * i_kh.transpose() + &k * &r * k.transpose();
    let p_new = (&p_new + p_new.transpose()) * 0.5;

    let mut out = *predicted;
    for a in 0..5 {
        out.x[a] += dx[a];
        for b in 0..5 {
            out.p[(a, b)] = p_new[(a, b)];
        }
    }
    for (col, &meas) in used.iter().enumerate() {
        for state in 0..5 {
            report.gains[meas][state] = k[(state, col)];
        }
        report.innovation[meas] = Some(nu[col]);
    }
    report.condition = hi / lo;
    Ok((out, report))
}

/// Prediction to CPI `state.k + 1` followed by the measurement update.
pub fn ekf_step(
    state: &FusedState,
    z: &FusedMeasurement,
    noise: &NoiseConfig,
    model: &MeasurementModel,
) -> Result<(FusedState, GainReport), FusionError> {
    update(&predict(state, noise), z, noise, model)
}
