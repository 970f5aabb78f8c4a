//! Explicit Dormand-Prince 5(4) integrator with PI step control and the
//! pair's native fourth-order continuous extension for output sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A first-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]);
}

/// Tolerances, step limits and the output time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// First step to try; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub max_step: f64,
    pub max_steps: usize,
    /// Output times, strictly increasing and not before the initial time.
    pub t_samples: Vec<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            initial_step: None,
            max_step: f64::INFINITY,
            max_steps: 50_000_000,
            t_samples: Vec::new(),
        }
    }
}

impl IntegratorConfig {
    /// Default tolerances with samples `t_start, t_start + step, ...` up to
    /// and including `t_end` (within rounding).
    pub fn uniform(t_start: f64, t_end: f64, step: f64) -> Result<Self> {
        Ok(Self {
            t_samples: uniform_grid(t_start, t_end, step)?,
            ..Self::default()
        })
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::domain(
                "IntegratorConfig",
                format!(
                    "need rtol, atol > 0 (rtol = {}, atol = {})",
                    self.rtol, self.atol
                ),
            ));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::domain("IntegratorConfig", "need max_step > 0"));
        }
        if let Some(h0) = self.initial_step {
            if !(h0 > 0.0) || !h0.is_finite() {
                return Err(Error::domain("IntegratorConfig", "need initial_step > 0"));
            }
        }
        if self.t_samples.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("IntegratorConfig", "non-finite sample time"));
        }
        if self.t_samples.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain(
                "IntegratorConfig",
                "t_samples must be strictly increasing",
            ));
        }
        Ok(())
    }
}

/// `t_start, t_start + step, ...` through `t_end`; the last point is
/// snapped onto `t_end` when it falls within a thousandth of a step.
pub fn uniform_grid(t_start: f64, t_end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(t_end >= t_start) || !t_start.is_finite() || !t_end.is_finite() {
        return Err(Error::domain(
            "uniform_grid",
            format!("need step > 0 and t_end ≥ t_start (got {t_start}, {t_end}, {step})"),
        ));
    }
    let count = ((t_end - t_start) / step + 1e-3).floor() as usize;
    Ok((0..=count).map(|i| t_start + step * i as f64).collect())
}

/// Step counters of one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 0.2;
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// fifth-order weights; also the last row of the tableau
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// fifth-order minus fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

struct Work {
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    y_new: Vec<f64>,
    cont: [Vec<f64>; 5],
}

impl Work {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            stage: vec![0.0; n],
            y_new: vec![0.0; n],
            cont: std::array::from_fn(|_| vec![0.0; n]),
        }
    }
}

fn rms_norm(v: &[f64], y: &[f64], cfg: &IntegratorConfig) -> f64 {
    let sum: f64 = v
        .iter()
        .zip(y)
        .map(|(vi, yi)| {
            let sc = cfg.atol + cfg.rtol * yi.abs();
            (vi / sc).powi(2)
        })
        .sum();
    (sum / v.len().max(1) as f64).sqrt()
}

fn initial_step<S: OdeSystem>(
    sys: &S,
    t: f64,
    y: &[f64],
    f0: &[f64],
    cfg: &IntegratorConfig,
    stats: &mut IntegratorStats,
) -> f64 {
    let d0 = rms_norm(y, y, cfg);
    let d1 = rms_norm(f0, y, cfg);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(cfg.max_step);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(yi, fi)| yi + h0 * fi).collect();
    let mut f1 = vec![0.0; y.len()];
    sys.rhs(t + h0, &y1, &mut f1);
    stats.rhs_evals += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_norm(&diff, y, cfg) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(cfg.max_step)
}

/// Integrates `sys` from `(t0, y0)` and calls `sink(t, y)` at each sample
/// time in `cfg.t_samples`, in order. A sample equal to `t0` is emitted
/// from the initial state. Results are bit-reproducible for identical
/// inputs.
pub fn integrate<S, F>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    cfg: &IntegratorConfig,
    mut sink: F,
) -> Result<IntegratorStats>
where
    S: OdeSystem,
    F: FnMut(f64, &[f64]) -> Result<()>,
{
    cfg.validate()?;
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::domain(
            "integrate",
            format!(
                "state length {} does not match system dimension {n}",
                y0.len()
            ),
        ));
    }
    if let Some(&first) = cfg.t_samples.first() {
        if first < t0 {
            return Err(Error::domain(
                "integrate",
                format!("first sample {first} precedes the initial time {t0}"),
            ));
        }
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: t0 });
    }

    let mut stats = IntegratorStats::default();
    let mut samples = cfg.t_samples.iter().copied().peekable();
    while let Some(&ts) = samples.peek() {
        if ts > t0 {
            break;
        }
        sink(ts, y0)?;
        samples.next();
    }
    let Some(&t_end) = cfg.t_samples.last() else {
        return Ok(stats);
    };
    if samples.peek().is_none() {
        return Ok(stats);
    }

    let mut w = Work::new(n);
    let mut y = y0.to_vec();
    let mut t = t0;
    sys.rhs(t, &y, &mut w.k[0]);
    stats.rhs_evals += 1;
    let mut h = match cfg.initial_step {
        Some(h0) => h0.min(cfg.max_step),
        None => initial_step(sys, t, &y, &w.k[0].clone(), cfg, &mut stats),
    };
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut dense_y = vec![0.0; n];

    loop {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::TooManySteps {
                t,
                max_steps: cfg.max_steps,
            });
        }
        let min_step = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < min_step {
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(Error::NonFinite { t });
            }
            return Err(Error::StepSizeUnderflow { t, norm, step: h });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        step_stages(sys, t, h, &y, &mut w);
        stats.rhs_evals += 6;

        for i in 0..n {
            let mut e = 0.0;
            for (s, ei) in E.iter().enumerate() {
                e += ei * w.k[s][i];
            }
            w.stage[i] = h * e;
        }
        let err = {
            let sum: f64 = (0..n)
                .map(|i| {
                    let sc = cfg.atol + cfg.rtol * y[i].abs().max(w.y_new[i].abs());
                    (w.stage[i] / sc).powi(2)
                })
                .sum();
            (sum / n.max(1) as f64).sqrt()
        };

        if !err.is_finite() {
            stats.rejected += 1;
            last_rejected = true;
            h *= FAC_MIN;
            continue;
        }

        let fac11 = err.powf(0.2 - 0.75 * BETA);
        if err <= 1.0 {
            let fac = (fac11 / err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            err_old = err.max(1e-4);
            stats.accepted += 1;

            let t_new = if last { t_end } else { t + h };
            build_dense(h, &y, &mut w);
            while let Some(&ts) = samples.peek() {
                if ts > t_new {
                    break;
                }
                let theta = (ts - t) / h;
                dense_eval(theta, &w.cont, &mut dense_y);
                if ts == t_new {
                    sink(ts, &w.y_new)?;
                } else {
                    sink(ts, &dense_y)?;
                }
                samples.next();
            }

            std::mem::swap(&mut y, &mut w.y_new);
            w.k.swap(0, 6);
            t = t_new;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { t });
            }
            if samples.peek().is_none() {
                return Ok(stats);
            }
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new.min(cfg.max_step);
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }
}

fn step_stages<S: OdeSystem>(sys: &S, t: f64, h: f64, y: &[f64], w: &mut Work) {
    let n = y.len();
    let Work {
        k, stage, y_new, ..
    } = w;

    for i in 0..n {
        stage[i] = y[i] + h * A21 * k[0][i];
    }
    sys.rhs(t + C[1] * h, stage, &mut k[1]);

    for i in 0..n {
        stage[i] = y[i] + h * (A3[0] * k[0][i] + A3[1] * k[1][i]);
    }
    sys.rhs(t + C[2] * h, stage, &mut k[2]);

    for i in 0..n {
        stage[i] = y[i] + h * (A4[0] * k[0][i] + A4[1] * k[1][i] + A4[2] * k[2][i]);
    }
    sys.rhs(t + C[3] * h, stage, &mut k[3]);

    for i in 0..n {
        stage[i] =
            y[i] + h * (A5[0] * k[0][i] + A5[1] * k[1][i] + A5[2] * k[2][i] + A5[3] * k[3][i]);
    }
    sys.rhs(t + C[4] * h, stage, &mut k[4]);

    for i in 0..n {
        stage[i] = y[i]
            + h * (A6[0] * k[0][i]
                + A6[1] * k[1][i]
                + A6[2] * k[2][i]
                + A6[3] * k[3][i]
                + A6[4] * k[4][i]);
    }
    sys.rhs(t + C[5] * h, stage, &mut k[5]);

    for i in 0..n {
        y_new[i] = y[i]
            + h * (B[0] * k[0][i]
                + B[2] * k[2][i]
                + B[3] * k[3][i]
                + B[4] * k[4][i]
                + B[5] * k[5][i]);
    }
    sys.rhs(t + h, y_new, &mut k[6]);
}

fn build_dense(h: f64, y: &[f64], w: &mut Work) {
    let Work { k, y_new, cont, .. } = w;
    for i in 0..y.len() {
        let diff = y_new[i] - y[i];
        let bspl = h * k[0][i] - diff;
        cont[0][i] = y[i];
        cont[1][i] = diff;
        cont[2][i] = bspl;
        cont[3][i] = diff - h * k[6][i] - bspl;
        let mut dsum = 0.0;
        for (s, di) in D.iter().enumerate() {
            dsum += di * k[s][i];
        }
        cont[4][i] = h * dsum;
    }
}

fn dense_eval(theta: f64, cont: &[Vec<f64>; 5], out: &mut [f64]) {
    let theta1 = 1.0 - theta;
    for (i, o) in out.iter_mut().enumerate() {
        *o = cont[0][i]
            + theta
                * (cont[1][i] + theta1 * (cont[2][i] + theta * (cont[3][i] + theta1 * cont[4][i])));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay(f64);

    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
            dydt[0] = -self.0 * y[0];
        }
    }

    struct Oscillator;

    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
            dydt[0] = y[1];
            dydt[1] = -y[0];
        }
    }

    fn collect<S: OdeSystem>(sys: &S, y0: &[f64], cfg: &IntegratorConfig) -> Vec<(f64, Vec<f64>)> {
        let mut out = Vec::new();
        integrate(sys, 0.0, y0, cfg, |t, y| {
            out.push((t, y.to_vec()));
            Ok(())
        })
        .unwrap();
        out
    }

    #[test]
    fn exponential_decay_within_tolerance() {
        let cfg = IntegratorConfig::uniform(0.0, 10.0, 0.25).unwrap();
        let rate = 1.59;
        for (t, y) in collect(&Decay(rate), &[1.0], &cfg) {
            let exact = (-rate * t).exp();
            assert!(
                (y[0] - exact).abs() <= 10.0 * cfg.rtol * exact.max(1e-2),
                "t = {t}"
            );
        }
    }

    #[test]
    fn dense_output_tracks_oscillator() {
        let mut cfg = IntegratorConfig::uniform(0.0, 20.0, 0.01).unwrap();
        cfg.rtol = 1e-10;
        cfg.atol = 1e-12;
        let out = collect(&Oscillator, &[0.0, 1.0], &cfg);
        assert_eq!(out.len(), 2001);
        for (t, y) in out {
            assert!((y[0] - t.sin()).abs() < 1e-8, "t = {t}");
            assert!((y[1] - t.cos()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn samples_include_initial_time_and_endpoint() {
        let cfg = IntegratorConfig::uniform(0.0, 1.0, 0.5).unwrap();
        let out = collect(&Decay(1.0), &[2.0], &cfg);
        let times: Vec<f64> = out.iter().map(|(t, _)| *t).collect();
        assert_eq!(times, vec![0.0, 0.5, 1.0]);
        assert_eq!(out[0].1, vec![2.0]);
    }

    #[test]
    fn runs_are_bit_identical() {
        let cfg = IntegratorConfig::uniform(0.0, 15.0, 0.3).unwrap();
        let a = collect(&Oscillator, &[0.3, -0.2], &cfg);
        let b = collect(&Oscillator, &[0.3, -0.2], &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_configuration() {
        let mut cfg = IntegratorConfig::uniform(0.0, 1.0, 0.1).unwrap();
        cfg.t_samples.swap(1, 2);
        assert!(integrate(&Decay(1.0), 0.0, &[1.0], &cfg, |_, _| Ok(())).is_err());
        let cfg = IntegratorConfig::uniform(0.0, 1.0, 0.1)
            .unwrap()
            .with_tolerances(0.0, 1e-9);
        assert!(integrate(&Decay(1.0), 0.0, &[1.0], &cfg, |_, _| Ok(())).is_err());
        let cfg = IntegratorConfig::uniform(0.0, 1.0, 0.1).unwrap();
        assert!(integrate(&Decay(1.0), 0.5, &[1.0], &cfg, |_, _| Ok(())).is_err());
    }

    struct Blowup;

    impl OdeSystem for Blowup {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
            dydt[0] = y[0] * y[0];
        }
    }

    #[test]
    fn finite_time_blowup_is_reported() {
        let cfg = IntegratorConfig::uniform(0.0, 2.0, 0.5).unwrap();
        let err = integrate(&Blowup, 0.0, &[1.0], &cfg, |_, _| Ok(())).unwrap_err();
        assert!(
            matches!(
                err,
                Error::StepSizeUnderflow { .. }
                    | Error::NonFinite { .. }
                    | Error::TooManySteps { .. }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn step_counts_drop_with_looser_tolerance() {
        let tight = IntegratorConfig::uniform(0.0, 20.0, 1.0)
            .unwrap()
            .with_tolerances(1e-10, 1e-12);
        let loose = IntegratorConfig::uniform(0.0, 20.0, 1.0)
            .unwrap()
            .with_tolerances(1e-5, 1e-7);
        let s_tight = integrate(&Oscillator, 0.0, &[0.0, 1.0], &tight, |_, _| Ok(())).unwrap();
        let s_loose = integrate(&Oscillator, 0.0, &[0.0, 1.0], &loose, |_, _| Ok(())).unwrap();
        assert!(s_loose.accepted < s_tight.accepted);
    }
}
