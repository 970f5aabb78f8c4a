//! Time integration of the ring and comparison with the asymptotic wave.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::FamilySolution;
use crate::ode::{integrate, IntegratorConfig, IntegratorStats, OdeSystem};
use crate::ov::{ring_rhs_flat, OvParams, RingState};

/// Minimum number of samples in the phase-estimation window.
pub const MIN_WINDOW_SAMPLES: usize = 16;

struct RingSystem<'a> {
    params: &'a OvParams,
    n: usize,
}

impl OdeSystem for RingSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        ring_rhs_flat(y, dydt, self.params);
    }
}

/// Ring states sampled on the configured output grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: OvParams,
    pub config: IntegratorConfig,
    pub samples: Vec<RingState>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

fn check_initial(initial: &RingState, params: &OvParams) -> Result<()> {
    if initial.len() != params.n_cars || initial.headway_rate.len() != params.n_cars {
        return Err(Error::domain(
            "integrate_ring",
            format!(
                "state has {} cars but the road has {}",
                initial.len(),
                params.n_cars
            ),
        ));
    }
    Ok(())
}

/// Integrates the `2N` headway equations from `initial` and keeps every
/// sample in memory.
pub fn integrate_ring(
    initial: &RingState,
    params: &OvParams,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    let mut samples = Vec::with_capacity(config.t_samples.len());
    let stats = integrate_ring_streaming(initial, params, config, |t, headway, rate| {
        samples.push(RingState {
            t,
            headway: headway.to_vec(),
            headway_rate: rate.to_vec(),
        });
        Ok(())
    })?;
    Ok(Trajectory {
        params: *params,
        config: config.clone(),
        samples,
        stats,
    })
}

/// Integrates the ring and hands each sample to `sink` as
/// `(t, headways, headway rates)` without retaining it.
pub fn integrate_ring_streaming<F>(
    initial: &RingState,
    params: &OvParams,
    config: &IntegratorConfig,
    mut sink: F,
) -> Result<IntegratorStats>
where
    F: FnMut(f64, &[f64], &[f64]) -> Result<()>,
{
    check_initial(initial, params)?;
    let n = params.n_cars;
    let sys = RingSystem { params, n };
    integrate(&sys, initial.t, &initial.to_flat(), config, |t, y| {
        let (headway, rate) = y.split_at(n);
        sink(t, headway, rate)
    })
}

/// The asymptotic headways and rates at `t = 0`, the simulator's initial
/// condition.
pub fn initial_from_family(sol: &FamilySolution) -> RingState {
    asymptotic_state(sol, 0.0)
}

/// The asymptotic field at time `t`.
pub fn asymptotic_state(sol: &FamilySolution, t: f64) -> RingState {
    let n = sol.n_cars;
    RingState {
        t,
        headway: (0..n).map(|j| sol.headway_at(j as f64, t)).collect(),
        headway_rate: (0..n).map(|j| sol.headway_rate_at(j as f64, t)).collect(),
    }
}

/// A trajectory made of asymptotic states; comparing it against the same
/// solution gives zero error.
pub fn asymptotic_trajectory(sol: &FamilySolution, config: &IntegratorConfig) -> Trajectory {
    Trajectory {
        params: sol.ov,
        config: config.clone(),
        samples: config
            .t_samples
            .iter()
            .map(|&t| asymptotic_state(sol, t))
            .collect(),
        stats: IntegratorStats::default(),
    }
}

/// Agreement between a simulated and the asymptotic headway field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareMetrics {
    /// `‖num - asym‖₂ / ‖asym - h‖₂` over all cars and samples.
    pub l2_rel_error: f64,
    /// Largest pointwise `|num - asym|`.
    pub linf_error: f64,
    /// Spatial peak-to-trough of the final sample, numeric over asymptotic.
    pub amplitude_ratio: f64,
    /// Time lag of car 0 relative to the asymptotic series over the final
    /// window; positive when the simulation trails.
    pub phase_shift: f64,
    /// Start and end of the window used for the phase estimate.
    pub window: (f64, f64),
}

/// Compares `traj` with the asymptotic field of `sol`.
///
/// The phase shift is found over the last temporal period of samples (or
/// all samples when fewer were taken) by minimising the squared mismatch
/// between the simulated car-0 series and the shifted asymptotic one. The
/// window must cover at least half a period and [`MIN_WINDOW_SAMPLES`]
/// samples.
pub fn compare_metrics(traj: &Trajectory, sol: &FamilySolution) -> Result<CompareMetrics> {
    if traj.samples.is_empty() {
        return Err(Error::WindowTooShort("trajectory has no samples".into()));
    }
    if traj.samples.iter().any(|s| s.len() != sol.n_cars) {
        return Err(Error::domain(
            "compare_metrics",
            "trajectory and family solution differ in car count",
        ));
    }

    let (mut err_sq, mut ref_sq, mut linf) = (0.0, 0.0, 0.0f64);
    for s in &traj.samples {
        for (j, &num) in s.headway.iter().enumerate() {
            let asym = sol.headway_at(j as f64, s.t);
            let e = num - asym;
            err_sq += e * e;
            ref_sq += (asym - sol.h).powi(2);
            linf = linf.max(e.abs());
        }
    }
    if !(ref_sq > 0.0) {
        return Err(Error::Degenerate(
            "asymptotic field has zero amplitude".into(),
        ));
    }

    let last = traj.samples.last().expect("non-empty");
    let spread = |v: &[f64]| {
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    };
    let asym_last: Vec<f64> = (0..sol.n_cars)
        .map(|j| sol.headway_at(j as f64, last.t))
        .collect();
    let amplitude_ratio = spread(&last.headway) / spread(&asym_last);

    let period = sol.temporal_period();
    let t_end = last.t;
    let window: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .filter(|s| s.t >= t_end - period)
        .map(|s| (s.t, s.headway[0]))
        .collect();
    let span = window.last().map_or(0.0, |w| w.0) - window.first().map_or(0.0, |w| w.0);
    if window.len() < MIN_WINDOW_SAMPLES || span < 0.5 * period {
        return Err(Error::WindowTooShort(format!(
            "{} samples spanning {span} time units; need {MIN_WINDOW_SAMPLES} samples over at \
             least half the period {period}",
            window.len()
        )));
    }
    let phase_shift = best_shift(&window, sol, period);

    Ok(CompareMetrics {
        l2_rel_error: (err_sq / ref_sq).sqrt(),
        linf_error: linf,
        amplitude_ratio,
        phase_shift,
        window: (window[0].0, t_end),
    })
}

fn best_shift(series: &[(f64, f64)], sol: &FamilySolution, period: f64) -> f64 {
    let mismatch = |s: f64| -> f64 {
        series
            .iter()
            .map(|&(t, y)| (y - sol.headway_at(0.0, t - s)).powi(2))
            .sum()
    };
    const COARSE: usize = 720;
    let step = period / COARSE as f64;
    let (mut best, mut best_val) = (0.0, mismatch(0.0));
    for i in 1..=COARSE {
        let s = -0.5 * period + step * i as f64;
        let v = mismatch(s);
        if v < best_val {
            best = s;
            best_val = v;
        }
    }
    // golden-section refinement inside the neighbouring coarse cells
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (best - step, best + step);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (mismatch(x1), mismatch(x2));
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = mismatch(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = mismatch(x2);
        }
    }
    let refined = 0.5 * (lo + hi);
    if mismatch(refined) <= best_val {
        refined
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::solve_m;

    fn single_hump() -> FamilySolution {
        let road = OvParams::with_defaults(3.5, 100, 1.59).unwrap();
        solve_m(1.59, 1, 100, &road).unwrap()
    }

    #[test]
    fn uniform_ring_stays_uniform() {
        let p = OvParams::with_defaults(3.5, 20, 1.59).unwrap();
        let cfg = IntegratorConfig::uniform(0.0, 50.0, 5.0).unwrap();
        let traj = integrate_ring(&RingState::uniform(0.0, 3.5, 20), &p, &cfg).unwrap();
        assert_eq!(traj.samples.len(), 11);
        for s in &traj.samples {
            assert!(s.headway.iter().all(|&h| (h - 3.5).abs() <= cfg.atol));
            assert!(s.headway_rate.iter().all(|&r| r.abs() <= cfg.atol));
        }
    }

    #[test]
    fn initial_state_has_edge_at_uniform_headway() {
        let sol = single_hump();
        let s = initial_from_family(&sol);
        assert_eq!(s.len(), 100);
        assert!((s.headway[0] - 3.5).abs() < 1e-9);
        let peak = s.headway.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let expected = sol.epsilon.powi(2) / sol.v2 * sol.wave.a;
        assert!((peak - 3.5 - expected).abs() < 1e-3 * expected);
    }

    #[test]
    fn self_comparison_is_exact() {
        let sol = single_hump();
        let cfg = IntegratorConfig::uniform(0.0, 200.0, 0.5).unwrap();
        let m = compare_metrics(&asymptotic_trajectory(&sol, &cfg), &sol).unwrap();
        assert_eq!(m.l2_rel_error, 0.0);
        assert_eq!(m.linf_error, 0.0);
        assert_eq!(m.amplitude_ratio, 1.0);
        assert!(m.phase_shift.abs() < 1e-6, "{}", m.phase_shift);
    }

    #[test]
    fn known_lag_is_recovered() {
        let sol = single_hump();
        let cfg = IntegratorConfig::uniform(0.0, 150.0, 0.5).unwrap();
        let mut traj = asymptotic_trajectory(&sol, &cfg);
        for s in &mut traj.samples {
            s.headway = (0..100)
                .map(|j| sol.headway_at(j as f64, s.t - 1.3))
                .collect();
        }
        let m = compare_metrics(&traj, &sol).unwrap();
        assert!((m.phase_shift - 1.3).abs() < 1e-6, "{}", m.phase_shift);
    }

    #[test]
    fn short_window_is_rejected() {
        let sol = single_hump();
        let cfg = IntegratorConfig::uniform(0.0, 20.0, 0.5).unwrap();
        let err = compare_metrics(&asymptotic_trajectory(&sol, &cfg), &sol).unwrap_err();
        assert!(matches!(err, Error::WindowTooShort(_)));
    }

    #[test]
    fn mismatched_car_count_is_rejected() {
        let p = OvParams::with_defaults(3.5, 10, 1.59).unwrap();
        let cfg = IntegratorConfig::uniform(0.0, 1.0, 0.5).unwrap();
        assert!(integrate_ring(&RingState::uniform(0.0, 3.5, 11), &p, &cfg).is_err());
    }
}
