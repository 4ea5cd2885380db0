use nalgebra::SMatrix;

use super::{FusedState, NoiseConfig, StateMatrix, StateVector};

/// Below this |omega T| the straight-line limit of the turn equations is used.
const SMALL_TURN: f64 = 1e-6;

/// Constant turn rate and velocity motion over `t` seconds.
pub fn transition(x: &StateVector, t: f64) -> StateVector {
    let (px, py, vx, vy, w) = (x[0], x[1], x[2], x[3], x[4]);
    let wt = w * t;
    if wt.abs() < SMALL_TURN {
        return StateVector::new(
            px + vx * t - vy * wt * t / 2.0,
            py + vy * t + vx * wt * t / 2.0,
            vx - vy * wt,
            vy + vx * wt,
            w,
        );
    }
    let (s, c) = wt.sin_cos();
    StateVector::new(
        px + (vx * s - vy * (1.0 - c)) / w,
        py + (vx * (1.0 - c) + vy * s) / w,
        vx * c - vy * s,
        vx * s + vy * c,
        w,
    )
}

pub fn transition_jacobian(x: &StateVector, t: f64) -> StateMatrix {
    let (vx, vy, w) = (x[2], x[3], x[4]);
    let wt = w * t;
    let mut f = StateMatrix::identity();
    if wt.abs() < SMALL_TURN {
        f[(0, 2)] = t;
        f[(0, 3)] = -wt * t / 2.0;
        f[(1, 2)] = wt * t / 2.0;
        f[(1, 3)] = t;
        f[(2, 3)] = -wt;
        f[(3, 2)] = wt;
        f[(0, 4)] = -vy * t * t / 2.0;
        f[(1, 4)] = vx * t * t / 2.0;
        f[(2, 4)] = -t * vy;
        f[(3, 4)] = t * vx;
        return f;
    }
    let (s, c) = wt.sin_cos();
    f[(0, 2)] = s / w;
    f[(0, 3)] = -(1.0 - c) / w;
    f[(1, 2)] = (1.0 - c) / w;
    f[(1, 3)] = s / w;
    f[(2, 2)] = c;
    f[(2, 3)] = -s;
    f[(3, 2)] = s;
    f[(3, 3)] = c;
    f[(0, 4)] = t * (vx * c - vy * s) / w - (vx * s - vy * (1.0 - c)) / (w * w);
    f[(1, 4)] = t * (vx * s + vy * c) / w - (vx * (1.0 - c) + vy * s) / (w * w);
    f[(2, 4)] = -t * (vx * s + vy * c);
    f[(3, 4)] = t * (vx * c - vy * s);
    f
}

/// Maps (acceleration, yaw acceleration) noise into the state.
pub fn noise_gain(x: &StateVector, t: f64) -> SMatrix<f64, 5, 2> {
    let (s, c) = (x[4] * t).sin_cos();
    SMatrix::<f64, 5, 2>::new(
        t * t / 2.0 * c, 0.0,
        t * t / 2.0 * s, 0.0,
        t * c, 0.0,
        t * s, 0.0,
        0.0, t,
    )
}

pub fn process_noise(x: &StateVector, noise: &NoiseConfig) -> StateMatrix {
    let g = noise_gain(x, noise.dt);
    let q = SMatrix::<f64, 2, 2>::new(noise.sigma_a.powi(2), 0.0, 0.0, noise.sigma_alpha.powi(2));
    g * q * g.transpose()
}

/// Time update to the next CPI.
pub fn predict(state: &FusedState, noise: &NoiseConfig) -> FusedState {
    let f = transition_jacobian(&state.x, noise.dt);
    let p = f * state.p * f.transpose() + process_noise(&state.x, noise);
    FusedState {
        x: transition(&state.x, noise.dt),
        p: (p + p.transpose()) * 0.5,
        k: state.k + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn quarter_turn_oracle() {
        let x = StateVector::new(0.0, 0.0, 6.0, 0.0, PI / 2.0);
        let y = transition(&x, 1.0);
        // Quarter circle of radius v / omega = 12 / pi.
        let r = 12.0 / PI;
        assert!((y[0] - r).abs() < 1e-12);
        assert!((y[1] - r).abs() < 1e-12);
        assert!(y[2].abs() < 1e-12);
        assert!((y[3] - 6.0).abs() < 1e-12);
        assert_eq!(y[4], PI / 2.0);
    }

    #[test]
    fn straight_line_limit() {
        let x = StateVector::new(1.0, 2.0, 3.0, -4.0, 0.0);
        let y = transition(&x, 0.5);
        assert_eq!(y, StateVector::new(2.5, 0.0, 3.0, -4.0, 0.0));
    }

    #[test]
    fn substeps_compose_exactly() {
        let x = StateVector::new(3.0, -1.0, 5.0, 2.0, 0.8);
        let once = transition(&x, 0.1);
        for n in [2, 5, 10, 100] {
            let mut y = x;
            for _ in 0..n {
                y = transition(&y, 0.1 / n as f64);
            }
            assert!((y - once).norm() < 1e-9, "n = {n}");
        }
    }

    fn finite_difference(x: &StateVector, t: f64) -> StateMatrix {
        let mut j = StateMatrix::zeros();
        for c in 0..5 {
            let h = 1e-6 * x[c].abs().max(1e-2);
            let mut a = *x;
            let mut b = *x;
            a[c] += h;
            b[c] -= h;
            j.set_column(c, &((transition(&a, t) - transition(&b, t)) / (2.0 * h)));
        }
        j
    }

    proptest! {
        #[test]
        fn jacobian_matches_finite_differences(
            px in -50.0f64..50.0, py in -50.0f64..50.0,
            vx in -10.0f64..10.0, vy in -10.0f64..10.0,
            w in prop_oneof![-3.0f64..-0.05, 0.05f64..3.0],
        ) {
            let x = StateVector::new(px, py, vx, vy, w);
            let a = transition_jacobian(&x, 0.1);
            let n = finite_difference(&x, 0.1);
            for i in 0..5 {
                for c in 0..5 {
                    let tol = 1e-6 * a[(i, c)].abs().max(1.0);
                    prop_assert!((a[(i, c)] - n[(i, c)]).abs() <= tol,
                        "F[{},{}] = {} vs {}", i, c, a[(i, c)], n[(i, c)]);
                }
            }
        }
    }

    #[test]
    fn prediction_keeps_covariance_symmetric() {
        let noise = NoiseConfig {
            sigma_a: 2.0,
            sigma_alpha: 1.0,
            sigma_range: 0.1,
            sigma_doppler: 10.0,
            sigma_pixel: 7.5,
            dt: 0.1,
        };
        let mut s = FusedState {
            x: StateVector::new(8.0, -3.0, 6.0, 0.0, -2.9),
            p: StateMatrix::identity(),
            k: 0,
        };
        for _ in 0..100 {
            s = predict(&s, &noise);
            assert_eq!(s.p, s.p.transpose());
        }
        assert_eq!(s.k, 100);
        assert!(s.min_eigenvalue() > 0.0);
    }
}
