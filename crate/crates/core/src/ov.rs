//! Optimal-velocity car-following model on a ring road, in headway form.
//!
//! With `Δx_j = x_{j+1} - x_j` the equations of motion are
//!
//! ```text
//! d²Δx_j/dt² = â (V(Δx_{j+1}) - V(Δx_j) - dΔx_j/dt),   j = 0..N-1 (mod N)
//! V(Δx) = (v_max/2) (tanh(Δx - h_c) + tanh(h_c)).
//! ```
//!
//! The uniform flow `Δx_j = h` is linearly stable for `â > 2V'(h)`; just
//! inside that boundary the slow dynamics reduce to a perturbed KdV
//! equation whose coefficients come from [`kdv_coeffs_from_h`].

use serde::{Deserialize, Serialize};

use crate::cnoidal::KdVCoeffs;
use crate::error::{Error, Result};

pub const DEFAULT_V_MAX: f64 = 2.0;
pub const DEFAULT_H_C: f64 = 4.0;

/// Parameters of one ring-road configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OvParams {
    pub v_max: f64,
    /// Safety distance.
    pub h_c: f64,
    /// Uniform headway.
    pub h: f64,
    pub n_cars: usize,
    /// Driver sensitivity `â = 1/τ`.
    pub sensitivity: f64,
}

impl OvParams {
    pub fn new(v_max: f64, h_c: f64, h: f64, n_cars: usize, sensitivity: f64) -> Result<Self> {
        if !(v_max > 0.0) || !v_max.is_finite() {
            return Err(Error::domain(
                "v_max",
                format!("need v_max > 0, got {v_max}"),
            ));
        }
        if !h_c.is_finite() || !h.is_finite() {
            return Err(Error::domain(
                "headway",
                format!("need finite h and h_c (h = {h}, h_c = {h_c})"),
            ));
        }
        if n_cars < 3 {
            return Err(Error::domain("n_cars", format!("need N ≥ 3, got {n_cars}")));
        }
        if !(sensitivity > 0.0) || !sensitivity.is_finite() {
            return Err(Error::domain(
                "sensitivity",
                format!("need â > 0, got {sensitivity}"),
            ));
        }
        Ok(Self {
            v_max,
            h_c,
            h,
            n_cars,
            sensitivity,
        })
    }

    /// `v_max = 2`, `h_c = 4`.
    pub fn with_defaults(h: f64, n_cars: usize, sensitivity: f64) -> Result<Self> {
        Self::new(DEFAULT_V_MAX, DEFAULT_H_C, h, n_cars, sensitivity)
    }

    pub fn tau(&self) -> f64 {
        1.0 / self.sensitivity
    }

    /// `â_s = 2V'(h)`; the uniform flow is linearly stable above it.
    pub fn neutral_sensitivity(&self) -> f64 {
        2.0 * ov_derivatives(self.h, self).0
    }

    pub fn is_metastable(&self) -> bool {
        self.sensitivity > self.neutral_sensitivity()
    }
}

/// Snapshot of the ring: headways and their rates of change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingState {
    pub t: f64,
    pub headway: Vec<f64>,
    pub headway_rate: Vec<f64>,
}

impl RingState {
    pub fn new(t: f64, headway: Vec<f64>, headway_rate: Vec<f64>) -> Result<Self> {
        if headway.len() != headway_rate.len() {
            return Err(Error::domain(
                "RingState",
                format!(
                    "headway has {} entries but headway_rate has {}",
                    headway.len(),
                    headway_rate.len()
                ),
            ));
        }
        Ok(Self {
            t,
            headway,
            headway_rate,
        })
    }

    pub fn uniform(t: f64, h: f64, n_cars: usize) -> Self {
        Self {
            t,
            headway: vec![h; n_cars],
            headway_rate: vec![0.0; n_cars],
        }
    }

    pub fn len(&self) -> usize {
        self.headway.len()
    }

    pub fn is_empty(&self) -> bool {
        self.headway.is_empty()
    }

    /// Flat `[headway.., headway_rate..]` layout used by the integrator.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(2 * self.len());
        y.extend_from_slice(&self.headway);
        y.extend_from_slice(&self.headway_rate);
        y
    }

    pub fn from_flat(t: f64, y: &[f64]) -> Result<Self> {
        if !y.len().is_multiple_of(2) {
            return Err(Error::domain(
                "RingState::from_flat",
                format!("odd state length {}", y.len()),
            ));
        }
        let (headway, rate) = y.split_at(y.len() / 2);
        Ok(Self {
            t,
            headway: headway.to_vec(),
            headway_rate: rate.to_vec(),
        })
    }
}

/// `V(Δx) = (v_max/2)(tanh(Δx - h_c) + tanh(h_c))`.
#[inline]
pub fn optimal_velocity(dx: f64, params: &OvParams) -> f64 {
    0.5 * params.v_max * ((dx - params.h_c).tanh() + params.h_c.tanh())
}

/// `(V'(h), V''(h))`.
///
/// Both are evaluated at `|h - h_c|` with the sign of `V''` restored
/// afterwards, so values mirrored about `h_c` agree bit for bit.
pub fn ov_derivatives(h: f64, params: &OvParams) -> (f64, f64) {
    let offset = h - params.h_c;
    let t = offset.abs().tanh();
    let sech2 = 1.0 - t * t;
    let sech2 = if sech2 > 0.5 {
        sech2
    } else {
        // 1 - tanh² loses digits once tanh is close to one
        let c = offset.abs().cosh();
        1.0 / (c * c)
    };
    let v1 = 0.5 * params.v_max * sech2;
    let v2 = -params.v_max * sech2 * t.copysign(offset);
    (v1, v2)
}

/// `τ_s = 1 / (2V'(h))`, the neutral-stability delay.
pub fn tau_neutral(h: f64, params: &OvParams) -> Result<f64> {
    let (v1, _) = ov_derivatives(h, params);
    if !(v1 > 0.0) {
        return Err(Error::domain(
            "tau_neutral",
            format!("V'({h}) = {v1} is not positive"),
        ));
    }
    Ok(0.5 / v1)
}

/// `ε = sqrt(1 - τ/τ_s)`, the distance from neutral stability.
pub fn epsilon_of(tau: f64, tau_s: f64) -> Result<f64> {
    if !(tau > 0.0) || !(tau_s > 0.0) {
        return Err(Error::domain(
            "epsilon_of",
            format!("need τ > 0 and τ_s > 0 (τ = {tau}, τ_s = {tau_s})"),
        ));
    }
    if tau > tau_s {
        return Err(Error::domain(
            "epsilon_of",
            format!("τ = {tau} exceeds τ_s = {tau_s}: the uniform flow is unstable"),
        ));
    }
    Ok((1.0 - tau / tau_s).sqrt())
}

/// KdV coefficients of the reduced headway equation at headway `h`.
pub fn kdv_coeffs_from_h(h: f64, params: &OvParams) -> Result<KdVCoeffs> {
    let (v1, _) = ov_derivatives(h, params);
    if !(v1 > 0.0) {
        return Err(Error::domain(
            "kdv_coeffs_from_h",
            format!("V'({h}) = {v1} is not positive"),
        ));
    }
    let root = (1.5 / v1).sqrt();
    KdVCoeffs::new(1.0, 1.0, -(1.5 * v1).sqrt(), 1.5 * root, 0.5 * root)
}

/// Time derivative of a ring state.
pub fn ring_rhs(state: &RingState, params: &OvParams) -> RingState {
    let n = state.len();
    let mut accel = vec![0.0; n];
    headway_accel(&state.headway, &state.headway_rate, params, &mut accel);
    RingState {
        t: state.t,
        headway: state.headway_rate.clone(),
        headway_rate: accel,
    }
}

/// Right-hand side on the flat `[headway.., rate..]` layout.
pub fn ring_rhs_flat(y: &[f64], dydt: &mut [f64], params: &OvParams) {
    let n = y.len() / 2;
    let (headway, rate) = y.split_at(n);
    let (d_headway, d_rate) = dydt.split_at_mut(n);
    d_headway.copy_from_slice(rate);
    headway_accel(headway, rate, params, d_rate);
}

fn headway_accel(headway: &[f64], rate: &[f64], params: &OvParams, out: &mut [f64]) {
    let n = headway.len();
    if n == 0 {
        return;
    }
    let a = params.sensitivity;
    let first = optimal_velocity(headway[0], params);
    let mut here = first;
    for j in 0..n {
        let ahead = if j + 1 < n {
            optimal_velocity(headway[j + 1], params)
        } else {
            first
        };
        out[j] = a * (ahead - here - rate[j]);
        here = ahead;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn defaults(h: f64) -> OvParams {
        OvParams::with_defaults(h, 100, 1.59).unwrap()
    }

    #[test]
    fn velocity_reference_values() {
        let p = defaults(3.5);
        assert!((optimal_velocity(4.0, &p) - 4f64.tanh()).abs() < 1e-15);
        assert!((optimal_velocity(1e3, &p) - (1.0 + 4f64.tanh())).abs() < 1e-15);
        assert!((optimal_velocity(3.5, &p) - 0.537_212).abs() < 1e-6);
    }

    #[test]
    fn neutral_sensitivity_at_reference_headways() {
        assert!((defaults(3.5).neutral_sensitivity() - 1.5729).abs() < 5e-5);
        assert!((defaults(2.5).neutral_sensitivity() - 0.36141).abs() < 5e-6);
        assert!((tau_neutral(3.5, &defaults(3.5)).unwrap() - 0.635_770).abs() < 1e-6);
        assert!((tau_neutral(4.0, &defaults(4.0)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivatives_mirror_about_safety_distance() {
        let p = defaults(3.5);
        let (a1, a2) = ov_derivatives(3.5, &p);
        let (b1, b2) = ov_derivatives(4.5, &p);
        assert_eq!(a1, b1);
        assert_eq!(a2, -b2);
        assert!(a2 > 0.0);
        assert_eq!(tau_neutral(2.5, &p).unwrap(), tau_neutral(5.5, &p).unwrap());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = defaults(3.5);
        for h in [1.0, 3.2, 4.0, 4.7, 9.0] {
            let (v1, v2) = ov_derivatives(h, &p);
            let step = 1e-5;
            let fd1 =
                (optimal_velocity(h + step, &p) - optimal_velocity(h - step, &p)) / (2.0 * step);
            let fd2 = (optimal_velocity(h + step, &p) - 2.0 * optimal_velocity(h, &p)
                + optimal_velocity(h - step, &p))
                / (step * step);
            assert!((v1 - fd1).abs() < 1e-9, "V' at {h}");
            assert!((v2 - fd2).abs() < 1e-5, "V'' at {h}");
        }
    }

    #[test]
    fn epsilon_at_reference_sensitivities() {
        let p = defaults(3.5);
        let tau_s = tau_neutral(3.5, &p).unwrap();
        assert!((epsilon_of(1.0 / 1.59, tau_s).unwrap() - 0.10372).abs() < 5e-6);
        assert!((epsilon_of(1.0 / 1.65, tau_s).unwrap() - 0.21617).abs() < 5e-6);
        assert_eq!(epsilon_of(tau_s, tau_s).unwrap(), 0.0);
        assert!(epsilon_of(1.1 * tau_s, tau_s).is_err());
    }

    #[test]
    fn traffic_coefficients() {
        let p = defaults(3.5);
        let c = kdv_coeffs_from_h(3.5, &p).unwrap();
        assert_eq!((c.lambda, c.nu), (1.0, 1.0));
        assert!((c.gamma - 3.0 * c.eta).abs() < 1e-15);
        assert!((c.mu * c.gamma + 2.25).abs() < 1e-14);
        assert!((c.mu * c.eta + 0.75).abs() < 1e-14);
        assert!((c.mu + 1.086_127).abs() < 1e-6);
    }

    #[test]
    fn uniform_state_is_fixed_point() {
        let p = defaults(3.5);
        let d = ring_rhs(&RingState::uniform(0.0, 3.5, 100), &p);
        assert!(d.headway.iter().chain(&d.headway_rate).all(|&v| v == 0.0));
    }

    #[test]
    fn three_car_hand_evaluation() {
        let p = OvParams::with_defaults(3.5, 3, 2.0).unwrap();
        let s = RingState::new(0.0, vec![3.0, 4.0, 5.0], vec![0.1, -0.2, 0.3]).unwrap();
        let d = ring_rhs(&s, &p);
        let v = |x: f64| (x - 4.0).tanh() + 4f64.tanh();
        let expected = [
            2.0 * (v(4.0) - v(3.0) - 0.1),
            2.0 * (v(5.0) - v(4.0) + 0.2),
            2.0 * (v(3.0) - v(5.0) - 0.3),
        ];
        assert_eq!(d.headway, s.headway_rate);
        for (got, want) in d.headway_rate.iter().zip(expected) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_layout_round_trip() {
        let s = RingState::new(1.5, vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]).unwrap();
        assert_eq!(RingState::from_flat(1.5, &s.to_flat()).unwrap(), s);
        assert!(RingState::new(0.0, vec![1.0], vec![]).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(OvParams::with_defaults(3.5, 2, 1.0).is_err());
        assert!(OvParams::with_defaults(3.5, 10, 0.0).is_err());
        assert!(OvParams::new(-1.0, 4.0, 3.5, 10, 1.0).is_err());
        assert!(defaults(3.5).is_metastable());
        assert!(!OvParams::with_defaults(3.5, 100, 1.5)
            .unwrap()
            .is_metastable());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn accelerations_telescope(
            headway in prop::collection::vec(0.0f64..10.0, 3..40),
            seed_rates in prop::collection::vec(-1.0f64..1.0, 40),
            a in 0.1f64..5.0,
        ) {
            let n = headway.len();
            let rate = seed_rates[..n].to_vec();
            let p = OvParams::with_defaults(3.5, n, a).unwrap();
            let d = ring_rhs(&RingState::new(0.0, headway, rate.clone()).unwrap(), &p);
            let total: f64 = d.headway_rate.iter().sum();
            let expected = -a * rate.iter().sum::<f64>();
            let scale = a * (4.0 * n as f64 + rate.iter().map(|r| r.abs()).sum::<f64>());
            prop_assert!((total - expected).abs() <= 8.0 * f64::EPSILON * scale);
        }

        #[test]
        fn mirrored_states_mirror_velocity_differences(
            offsets in prop::collection::vec(-3.0f64..3.0, 3..20),
        ) {
            let p = OvParams::with_defaults(4.0, offsets.len(), 1.0).unwrap();
            let up: Vec<f64> = offsets.iter().map(|o| 4.0 + o).collect();
            let down: Vec<f64> = offsets.iter().map(|o| 4.0 - o).collect();
            let zero = vec![0.0; offsets.len()];
            let du = ring_rhs(&RingState::new(0.0, up, zero.clone()).unwrap(), &p);
            let dd = ring_rhs(&RingState::new(0.0, down, zero).unwrap(), &p);
            for (x, y) in du.headway_rate.iter().zip(&dd.headway_rate) {
                prop_assert!((x + y).abs() < 1e-13);
            }
        }
    }
}
