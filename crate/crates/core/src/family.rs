//! Spatially periodic traveling-wave headway solutions on the ring.
//!
//! With `k = 1` a member of the family is fixed by the oscillation count
//! `n`, the car count `N`, the headway `h` and the modulus `m`. Three
//! conditions tie the remaining constants together: the half-period makes
//! `n` waves fit the ring, the profile vanishes at car 0 at `t = 0`
//! (`ab + d = 0`, `θ0 = P`) and the modulus does not drift (`M̃ = 0`).
//! Together they fix the delay `τ(m)`; [`solve_m`] inverts that map.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cnoidal::{kappa_from_wavenumber, shape, CnoidalParams, KdVCoeffs};
use crate::elliptic::EllipticModulus;
use crate::error::{Error, Result};
use crate::ov::{epsilon_of, kdv_coeffs_from_h, ov_derivatives, tau_neutral, OvParams};
use crate::roots::{brent, sign_changes};

/// Smallest `1 - m` the solver scans.
pub const M_COMP_FLOOR: f64 = 1e-15;
/// Largest `1 - m` the solver scans (`m = 0.1`).
pub const M_COMP_CEIL: f64 = 0.9;
/// Below this `1 - m` a solution carries a precision warning.
pub const PRECISION_WARNING_M_COMP: f64 = 1e-13;

const SCAN_POINTS: usize = 400;
const TAU_TOL: f64 = 1e-12;

/// One member of the traveling-wave family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySolution {
    /// Number of oscillations around the ring.
    pub n: u32,
    pub n_cars: usize,
    pub h: f64,
    pub modulus: EllipticModulus,
    pub tau: f64,
    pub tau_s: f64,
    pub sensitivity: f64,
    pub epsilon: f64,
    pub s1: f64,
    pub half_period: f64,
    pub kappa: f64,
    pub wave_speed: f64,
    pub theta0: f64,
    /// `V''(h)`; its sign decides between a headway hump and a dip.
    pub v2: f64,
    pub coeffs: KdVCoeffs,
    pub wave: CnoidalParams,
    pub ov: OvParams,
    /// Set when `1 - m` is so small that `m` itself carries few digits.
    pub precision_warning: bool,
}

/// Outcome of [`solve_m_report`]: the chosen root and every root found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: FamilySolution,
    /// All roots in increasing `m`; the chosen one is the last.
    pub roots: Vec<EllipticModulus>,
}

/// Row of an `â(m)` / wave-speed table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n: u32,
    pub modulus: EllipticModulus,
    pub sensitivity: f64,
    pub wave_speed: f64,
    /// `â > â_s`, i.e. the point lies inside the family.
    pub valid: bool,
    pub error: Option<String>,
}

fn check_counts(n: u32, n_cars: usize) -> Result<()> {
    if n == 0 || 4 * n as usize > n_cars {
        return Err(Error::domain(
            "oscillation count",
            format!("need 1 ≤ n ≤ N/4, got n = {n} with N = {n_cars}"),
        ));
    }
    Ok(())
}

fn check_off_critical(params: &OvParams) -> Result<f64> {
    let (_, v2) = ov_derivatives(params.h, params);
    if v2 == 0.0 {
        return Err(Error::Degenerate(format!(
            "h = h_c = {}: V''(h) vanishes and the headway scaling is singular",
            params.h_c
        )));
    }
    Ok(v2)
}

/// `P = (N / 2n) sqrt(12 (τ_s - τ))`.
pub fn half_period(n: u32, n_cars: usize, tau: f64, tau_s: f64) -> Result<f64> {
    if n == 0 || n_cars == 0 {
        return Err(Error::domain("half_period", "need n ≥ 1 and N ≥ 1"));
    }
    if !(tau < tau_s) {
        return Err(Error::domain(
            "half_period",
            format!("need τ < τ_s (τ = {tau}, τ_s = {tau_s})"),
        ));
    }
    Ok(n_cars as f64 / (2.0 * n as f64) * (12.0 * (tau_s - tau)).sqrt())
}

/// Speed constant `s1` that makes the profile vanish at the trough edge,
/// i.e. `ab + d = 0`. Reduces to `2a (2m² - 1) / m²`.
pub fn s1_boundary(modulus: &EllipticModulus, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::domain(
            "s1_boundary",
            format!("need κ > 0, got {kappa}"),
        ));
    }
    let x = modulus.parameter();
    let a = kappa.sqrt() * shape(modulus).h1;
    Ok(2.0 * a * (2.0 * x - 1.0) / x)
}

/// `τ(m)`: the delay at which the member with modulus `m` and `n`
/// oscillations exists.
///
/// The bracket `15/(7ρ̄) + 6m²K²(b + H3/H1)` is evaluated as
/// `K² (5N2/(7N1) + 2(1 - 2m²))`, which stays finite at both ends.
pub fn tau_of_m(
    modulus: &EllipticModulus,
    n: u32,
    n_cars: usize,
    params: &OvParams,
) -> Result<f64> {
    if n == 0 || n_cars == 0 {
        return Err(Error::domain("tau_of_m", "need n ≥ 1 and N ≥ 1"));
    }
    let (v1, _) = ov_derivatives(params.h, params);
    let tau_s = tau_neutral(params.h, params)?;
    Ok(tau_s + tau_offset(modulus, n, n_cars, v1)?)
}

fn tau_offset(modulus: &EllipticModulus, n: u32, n_cars: usize, v1: f64) -> Result<f64> {
    let s = shape(modulus);
    let kk = s.integrals.k;
    let ratio = s.rho_ratio().ok_or(Error::Singular {
        what: "tau_of_m",
        m: modulus.modulus(),
        m_comp: modulus.complement(),
    })?;
    let x = modulus.parameter();
    let bracket = 5.0 / (7.0 * ratio) + 2.0 * (1.0 - 2.0 * x);
    let n_ratio = n as f64 / n_cars as f64;
    Ok(2.0 * n_ratio * n_ratio * kk * kk / (3.0 * v1) * bracket)
}

/// `V'(h) + (s1/6)(τ_s - τ)/τ_s`.
pub fn wave_speed(sol: &FamilySolution) -> f64 {
    speed_from(
        sol.ov.neutral_sensitivity() * 0.5,
        sol.s1,
        sol.tau,
        sol.tau_s,
    )
}

fn speed_from(v1: f64, s1: f64, tau: f64, tau_s: f64) -> f64 {
    v1 + s1 / 6.0 * (tau_s - tau) / tau_s
}

/// Assembles the family member with modulus `m` at delay `τ`.
///
/// `τ` is taken as given rather than recomputed from `m`, so a solution
/// returned by [`solve_m`] carries the requested sensitivity exactly.
pub fn family_member(
    modulus: EllipticModulus,
    n: u32,
    n_cars: usize,
    tau: f64,
    params: &OvParams,
) -> Result<FamilySolution> {
    check_counts(n, n_cars)?;
    let v2 = check_off_critical(params)?;
    let (v1, _) = ov_derivatives(params.h, params);
    let tau_s = tau_neutral(params.h, params)?;
    let epsilon = epsilon_of(tau, tau_s)?;
    let p = half_period(n, n_cars, tau, tau_s)?;
    let coeffs = kdv_coeffs_from_h(params.h, params)?;
    let kappa = kappa_from_wavenumber(1.0, &modulus, p, &coeffs)?;
    let s1 = s1_boundary(&modulus, kappa)?;
    let wave = CnoidalParams::from_wavenumber(modulus, s1, 1.0, p, p, &coeffs)?;
    let ov = OvParams {
        n_cars,
        sensitivity: 1.0 / tau,
        ..*params
    };
    Ok(FamilySolution {
        n,
        n_cars,
        h: params.h,
        modulus,
        tau,
        tau_s,
        sensitivity: 1.0 / tau,
        epsilon,
        s1,
        half_period: p,
        kappa,
        wave_speed: speed_from(v1, s1, tau, tau_s),
        theta0: p,
        v2,
        coeffs,
        wave,
        ov,
        precision_warning: modulus.complement() < PRECISION_WARNING_M_COMP,
    })
}

/// Finds the member with `1/τ(m) = sensitivity`, taking the largest-`m`
/// root when there are several.
pub fn solve_m(
    sensitivity: f64,
    n: u32,
    n_cars: usize,
    params: &OvParams,
) -> Result<FamilySolution> {
    solve_m_report(sensitivity, n, n_cars, params).map(|r| r.solution)
}

/// As [`solve_m`], also reporting every root found on the scan.
///
/// The scan runs over `ℓ = ln(1 - m)` on `[ln 1e-15, ln 0.9]`, so roots
/// with `1 - m` near `1e-14` are located without ever forming `m²` from a
/// rounded `m`.
pub fn solve_m_report(
    sensitivity: f64,
    n: u32,
    n_cars: usize,
    params: &OvParams,
) -> Result<SolveReport> {
    check_counts(n, n_cars)?;
    check_off_critical(params)?;
    if !(sensitivity > 0.0) || !sensitivity.is_finite() {
        return Err(Error::domain(
            "sensitivity",
            format!("need â > 0, got {sensitivity}"),
        ));
    }
    let (v1, _) = ov_derivatives(params.h, params);
    let tau_s = tau_neutral(params.h, params)?;
    let target = 1.0 / sensitivity;
    if !(target < tau_s) {
        return Err(Error::NoSolution {
            sensitivity,
            n,
            detail: format!(
                "â must exceed the neutral value â_s = {} for a metastable wave",
                1.0 / tau_s
            ),
        });
    }
    let offset_target = target - tau_s;

    let g = |ell: f64| -> f64 {
        match EllipticModulus::from_ln_complement(ell) {
            Ok(md) => tau_offset(&md, n, n_cars, v1)
                .map(|off| off - offset_target)
                .unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    };

    let lo = M_COMP_FLOOR.ln();
    let hi = M_COMP_CEIL.ln();
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let brackets = sign_changes(g, &grid);

    if brackets.is_empty() {
        let at_floor = g(lo);
        return Err(if at_floor > 0.0 {
            Error::PrecisionLimit {
                floor: M_COMP_FLOOR,
            }
        } else {
            Error::NoSolution {
                sensitivity,
                n,
                detail: format!(
                    "1/τ(m) does not reach â on 1 - m ∈ [{M_COMP_FLOOR:e}, {M_COMP_CEIL}]"
                ),
            }
        });
    }

    // decreasing ℓ is increasing m
    let mut roots: Vec<EllipticModulus> = brackets
        .iter()
        .rev()
        .map(|&(a, b, fa, fb)| brent(g, a, b, fa, fb, 1e-14, TAU_TOL))
        .map(EllipticModulus::from_ln_complement)
        .collect::<Result<_>>()?;
    roots.reverse();
    roots.sort_by(|p, q| q.complement().total_cmp(&p.complement()));

    let chosen = *roots.last().expect("non-empty bracket list");
    let solution = family_member(chosen, n, n_cars, target, params)?;
    Ok(SolveReport { solution, roots })
}

/// Tabulates `â(m)` and the wave speed for every `n` in `n_list` over
/// `m_grid`. Rows are ordered by `n`, then by grid position; points outside
/// the family are flagged, not dropped.
pub fn family_curves(
    n_list: &[u32],
    m_grid: &[EllipticModulus],
    n_cars: usize,
    params: &OvParams,
) -> Result<Vec<CurveRow>> {
    for &n in n_list {
        check_counts(n, n_cars)?;
    }
    let (v1, _) = ov_derivatives(params.h, params);
    let tau_s = tau_neutral(params.h, params)?;
    let coeffs = kdv_coeffs_from_h(params.h, params)?;

    let jobs: Vec<(u32, EllipticModulus)> = n_list
        .iter()
        .flat_map(|&n| m_grid.iter().map(move |&m| (n, m)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|&(n, modulus)| curve_row(n, modulus, n_cars, v1, tau_s, &coeffs))
        .collect())
}

fn curve_row(
    n: u32,
    modulus: EllipticModulus,
    n_cars: usize,
    v1: f64,
    tau_s: f64,
    coeffs: &KdVCoeffs,
) -> CurveRow {
    let flagged = |msg: String| CurveRow {
        n,
        modulus,
        sensitivity: f64::NAN,
        wave_speed: f64::NAN,
        valid: false,
        error: Some(msg),
    };
    let offset = match tau_offset(&modulus, n, n_cars, v1) {
        Ok(v) if v.is_finite() => v,
        Ok(v) => return flagged(format!("non-finite τ offset {v}")),
        Err(e) => return flagged(e.to_string()),
    };
    let tau = tau_s + offset;
    let sensitivity = 1.0 / tau;
    if !(offset < 0.0 && tau > 0.0) {
        return CurveRow {
            n,
            modulus,
            sensitivity,
            wave_speed: f64::NAN,
            valid: false,
            error: None,
        };
    }
    let speed = half_period(n, n_cars, tau, tau_s)
        .and_then(|p| kappa_from_wavenumber(1.0, &modulus, p, coeffs))
        .and_then(|kappa| s1_boundary(&modulus, kappa))
        .map(|s1| speed_from(v1, s1, tau, tau_s));
    match speed {
        Ok(c) => CurveRow {
            n,
            modulus,
            sensitivity,
            wave_speed: c,
            valid: true,
            error: None,
        },
        Err(e) => flagged(e.to_string()),
    }
}

impl FamilySolution {
    /// `θ` for car position `j` at time `t`, reduced to one period; the
    /// profile shifts it by `θ0` itself.
    fn phase(&self, j: f64, t: f64) -> f64 {
        let cycles = self.n as f64 * (j + t * self.wave_speed) / self.n_cars as f64;
        2.0 * self.half_period * (cycles - cycles.floor())
    }

    /// `sqrt(12 (τ_s - τ))`, the rate of change of `θ` per car.
    fn theta_per_car(&self) -> f64 {
        2.0 * self.n as f64 * self.half_period / self.n_cars as f64
    }

    /// Asymptotic headway at real car position `j`.
    pub fn headway_at(&self, j: f64, t: f64) -> f64 {
        let u0 = self.wave.profile(self.phase(j, t));
        self.h + self.epsilon * self.epsilon / self.v2 * u0
    }

    /// Time derivative of [`FamilySolution::headway_at`].
    pub fn headway_rate_at(&self, j: f64, t: f64) -> f64 {
        let (_, du, _) = self.wave.profile_derivatives(self.phase(j, t));
        self.epsilon * self.epsilon / self.v2 * du * self.theta_per_car() * self.wave_speed
    }

    /// Headways of all cars at time `t`.
    pub fn headway_field(&self, t: f64) -> Vec<f64> {
        (0..self.n_cars)
            .map(|j| self.headway_at(j as f64, t))
            .collect()
    }

    /// Recomputes `τ(m)` from the modulus alone.
    pub fn tau_from_modulus(&self) -> Result<f64> {
        tau_of_m(&self.modulus, self.n, self.n_cars, &self.ov)
    }

    /// Temporal period of the headway at a fixed car.
    pub fn temporal_period(&self) -> f64 {
        self.n_cars as f64 / (self.n as f64 * self.wave_speed)
    }
}

/// Asymptotic headway of car `j` at time `t`.
pub fn headway_asymptotic(j: i64, t: f64, sol: &FamilySolution) -> f64 {
    sol.headway_at(j as f64, t)
}

/// Rate of change of the asymptotic headway of car `j` at time `t`.
pub fn headway_rate_asymptotic(j: i64, t: f64, sol: &FamilySolution) -> f64 {
    sol.headway_rate_at(j as f64, t)
}

/// `1 - m` grid with `count` points, logarithmic between the complements of
/// `hi` and `lo` when `hi > 0.999`, linear in `m` otherwise.
pub fn modulus_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<EllipticModulus>> {
    if !(lo > 0.0 && hi < 1.0 && lo < hi) || count < 2 {
        return Err(Error::domain(
            "modulus_grid",
            format!("need 0 < lo < hi < 1 and count ≥ 2 (lo = {lo}, hi = {hi}, count = {count})"),
        ));
    }
    let step = |i: usize| i as f64 / (count - 1) as f64;
    if hi > 0.999 {
        let (c_lo, c_hi) = ((1.0 - hi).ln(), (1.0 - lo).ln());
        (0..count)
            .map(|i| EllipticModulus::from_ln_complement(c_hi + (c_lo - c_hi) * step(i)))
            .collect()
    } else {
        (0..count)
            .map(|i| EllipticModulus::new(lo + (hi - lo) * step(i)))
            .collect()
    }
}
