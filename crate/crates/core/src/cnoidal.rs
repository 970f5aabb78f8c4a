//! The KdV cnoidal wave and the steady reduction of its perturbed Whitham
//! modulation system.
//!
//! For `u_t + ν u u_x + λ u_xxx + ε V̄(u) = 0` with
//! `V̄(u) = μ u_xx + γ u_xxxx + η (u²)_xx`, the leading-order wave is
//!
//! ```text
//! u0(θ) = a b + d + a cn²(β (θ - θ0); m),   β = K(m) / P,
//! ```
//!
//! periodic with period `2P` in `θ`. A wave of constant modulus exists when
//! the averaged forcing `M̃` vanishes; expressed through the constants
//! `(m, s1, κ)` this is the fixed-point criterion evaluated by
//! [`steady_residual`].

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::elliptic::{complete_integrals, sn_cn_dn, CompleteIntegrals, EllipticModulus};
use crate::error::{Error, Result};

/// Coefficients of the perturbed KdV equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdVCoeffs {
    /// Dispersion.
    pub lambda: f64,
    /// Nonlinearity.
    pub nu: f64,
    /// Second-derivative perturbation.
    pub mu: f64,
    /// Fourth-derivative perturbation.
    pub gamma: f64,
    /// Nonlinear-diffusion perturbation.
    pub eta: f64,
}

impl KdVCoeffs {
    pub fn new(lambda: f64, nu: f64, mu: f64, gamma: f64, eta: f64) -> Result<Self> {
        let all_finite = [lambda, nu, mu, gamma, eta].iter().all(|v| v.is_finite());
        if !all_finite || lambda <= 0.0 || nu == 0.0 {
            return Err(Error::domain(
                "KdVCoeffs",
                format!("need finite values with λ > 0, ν ≠ 0 (λ = {lambda}, ν = {nu})"),
            ));
        }
        Ok(Self {
            lambda,
            nu,
            mu,
            gamma,
            eta,
        })
    }

    /// Plain KdV, `μ = γ = η = 0`.
    pub fn unperturbed(lambda: f64, nu: f64) -> Result<Self> {
        Self::new(lambda, nu, 0.0, 0.0, 0.0)
    }
}

/// Shape functions of the `(m, s1, κ)` parameterisation.
///
/// `a = √κ H1`, `d = s1/6 + √κ H3`, `D̂ = κ^{3/2} H2 - (s1/6)(κ - s1²/216)`.
/// The combinations `3H2 + 2H3` and `3H2 H3 + 4` both vanish as `m -> 1`
/// and as `m -> 0`; they are evaluated from rearranged forms that carry no
/// cancellation, see [`shape`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    /// Mean-offset factor `b = (1 - m²)/m² - E/(m² K)`.
    pub b: f64,
    /// `3 H2 + 2 H3`.
    pub sum_32: f64,
    /// `3 H2 H3 + 4`.
    pub prod_34: f64,
    /// `K(m)`, `E(m)` and friends at the same modulus.
    pub integrals: CompleteIntegrals,
    rho_numer: f64,
    rho_denom: f64,
}

impl Shape {
    /// `N1 / N2`, the cancellation-free core of `ρ̄`; `None` where `N2`
    /// underflows.
    pub fn rho_ratio(&self) -> Option<f64> {
        let r = self.rho_numer / self.rho_denom;
        (self.rho_denom.abs() > f64::MIN_POSITIVE && r.is_finite()).then_some(r)
    }
}

/// Evaluates all shape functions at one modulus.
pub fn shape(modulus: &EllipticModulus) -> Shape {
    let ci = complete_integrals(modulus);
    let x = modulus.parameter();
    let q = modulus.comp_parameter();
    let dd = 1.0 - x * q;
    let sqrt_dd = dd.sqrt();
    let poly = -2.0 + x * (3.0 + x * (3.0 - 2.0 * x));

    let h1 = 18f64.sqrt() * x / sqrt_dd;
    let h2 = SQRT_2 / 3.0 * poly / (dd * sqrt_dd);
    let h3 = SQRT_2 * (3.0 * ci.e_over_k + x - 2.0) / sqrt_dd;

    // N1 = ((3H2 + 2H3) / 3√2) D^{3/2},  N2 = (3H2H3 + 4) D² / 6
    let (b, n1, n2) = if x < 0.5 {
        let r = ci.small_m_tail;
        let b = r / x - 0.5;
        let n1 = x * x * (2.0 - x) - 2.0 * dd * r;
        let n2 = x * x * (2.5 - 2.5 * x + x * x) - poly * r;
        (b, n1, n2)
    } else {
        let eok = ci.e_over_k;
        let b = (q - eok) / x;
        let n1 = 2.0 * eok * dd - q * (1.0 + q);
        let n2 = poly * eok - q * (1.0 - 4.0 * q + q * q);
        (b, n1, n2)
    };

    Shape {
        h1,
        h2,
        h3,
        b,
        sum_32: 3.0 * SQRT_2 * n1 / (dd * sqrt_dd),
        prod_34: 6.0 * n2 / (dd * dd),
        integrals: ci,
        rho_numer: n1,
        rho_denom: n2,
    }
}

/// `(H1, H2, H3)` at the given modulus.
pub fn shape_h(modulus: &EllipticModulus) -> (f64, f64, f64) {
    let s = shape(modulus);
    (s.h1, s.h2, s.h3)
}

/// Mean-offset factor `b`, chosen so that the mean of `u0` is `d`.
pub fn offset_b(modulus: &EllipticModulus) -> f64 {
    shape(modulus).b
}

/// `κ = (k K / P)⁴ (12 λ / ν)² (m⁴ - m² + 1) / 18`.
pub fn kappa_from_wavenumber(
    k: f64,
    modulus: &EllipticModulus,
    half_period: f64,
    coeffs: &KdVCoeffs,
) -> Result<f64> {
    if !(k > 0.0) || !(half_period > 0.0) {
        return Err(Error::domain(
            "kappa_from_wavenumber",
            format!("need k > 0 and P > 0 (k = {k}, P = {half_period})"),
        ));
    }
    let kk = complete_integrals(modulus).k;
    let x = modulus.parameter();
    let dd = 1.0 - x * modulus.comp_parameter();
    let ratio = k * kk / half_period;
    let scale = 12.0 * coeffs.lambda / coeffs.nu;
    Ok(ratio.powi(4) * scale * scale * dd / 18.0)
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::domain("kappa", format!("need κ ≥ 0, got {kappa}")));
    }
    Ok(())
}

/// Amplitude `a = √κ H1(m)`.
pub fn amplitude_a(modulus: &EllipticModulus, kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    Ok(kappa.sqrt() * shape(modulus).h1)
}

/// Mean `d = s1/6 + √κ H3(m)`.
pub fn mean_d(modulus: &EllipticModulus, s1: f64, kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    Ok(s1 / 6.0 + kappa.sqrt() * shape(modulus).h3)
}

/// `(U, Ĉ, D̂)` from the symmetric functions of the Riemann invariants.
pub fn integration_constants(s1: f64, s2: f64, s3: f64) -> (f64, f64, f64) {
    let u = s1 / 6.0;
    let c_hat = -s2 / 6.0 + s1 * s1 / 24.0;
    let d_hat = -s3 / 6.0 + s1 / 48.0 * (4.0 * s2 - s1 * s1);
    (u, c_hat, d_hat)
}

/// `(Ĉ, D̂)` from the wave parameters `(a, b, d, U, m)`.
///
/// Second, independent route to the constants of the first integral
/// `(λk²/ν) u0_θ² = 2D̂ + 2Ĉ u0 + U u0² - u0³/3`: the quadratic form in
/// `ab + d` is `Ĉ`, the cubic one `D̂`.
pub fn integration_constants_from_wave(
    a: f64,
    b: f64,
    d: f64,
    u: f64,
    modulus: &EllipticModulus,
) -> (f64, f64) {
    let x = modulus.parameter();
    let base = a * b + d;
    let stretch = a * a * modulus.comp_parameter() / (6.0 * x);
    let c_hat = 0.5 * base * base - u * base + stretch;
    let d_hat = -base.powi(3) / 3.0 + 0.5 * u * base * base - stretch * base;
    (c_hat, d_hat)
}

fn check_spread(s1: f64, s2: f64) -> Result<f64> {
    let spread = s1 * s1 - 3.0 * s2;
    if !(spread > 0.0) {
        return Err(Error::domain(
            "s3",
            format!("need s1² - 3 s2 > 0, got {spread}"),
        ));
    }
    Ok(spread)
}

/// `s3 = r1 r2 r3` as a function of the modulus for fixed `s1`, `s2`.
pub fn s3_of_m(modulus: &EllipticModulus, s1: f64, s2: f64) -> Result<f64> {
    let spread = check_spread(s1, s2)?;
    let x = modulus.parameter();
    let dd = 1.0 - x * modulus.comp_parameter();
    let poly = -2.0 + x * (3.0 + x * (3.0 - 2.0 * x));
    Ok(-(spread / dd).powf(1.5) * poly / 27.0 + s1 * s2 / 3.0 - 2.0 * s1.powi(3) / 27.0)
}

/// `ds3/dm = (s1² - 3s2)^{3/2} m³ (m² - 1) / (m⁴ - m² + 1)^{5/2}`.
pub fn ds3_dm(modulus: &EllipticModulus, s1: f64, s2: f64) -> Result<f64> {
    let spread = check_spread(s1, s2)?;
    let m = modulus.modulus();
    let q = modulus.comp_parameter();
    let dd = 1.0 - m * m * q;
    Ok(-spread.powf(1.5) * m.powi(3) * q / dd.powf(2.5))
}

/// `ρ̄(m) = H1/(mK)² · (3H2 + 2H3)/(3H2H3 + 4)`, which reduces to
/// `3 N1 / (K² N2)` with the cancellation-free numerators of [`shape`].
pub fn rho_bar(modulus: &EllipticModulus) -> Result<f64> {
    let s = shape(modulus);
    let ratio = s.rho_ratio().ok_or(Error::Singular {
        what: "rho_bar",
        m: modulus.modulus(),
        m_comp: modulus.complement(),
    })?;
    let kk = s.integrals.k;
    Ok(3.0 * ratio / (kk * kk))
}

/// `M̃` from the `(m, s1, κ)` reduction.
pub fn mtilde(params: &CnoidalParams, coeffs: &KdVCoeffs) -> f64 {
    mtilde_reduced(&shape(&params.modulus), params.s1, params.kappa, coeffs)
}

fn mtilde_reduced(s: &Shape, s1: f64, kappa: f64, c: &KdVCoeffs) -> f64 {
    let forcing = -2.0
        * (c.mu + s1 * c.eta / 3.0)
        * (2.0 * c.nu * kappa.powf(1.5) / (5.0 * c.lambda))
        * s.sum_32;
    let dispersive = 2.0
        * (c.gamma - 2.0 * c.lambda * c.eta / c.nu)
        * (c.nu * c.nu * kappa * kappa / (7.0 * c.lambda * c.lambda))
        * 2.0
        * s.prod_34;
    forcing + dispersive
}

/// `M̃` from the integration constants `(U, Ĉ, D̂, d)` and the moment
/// identities, without the shape-function reduction.
pub fn mtilde_from_constants(params: &CnoidalParams, coeffs: &KdVCoeffs) -> f64 {
    let c = coeffs;
    let (i1, i2) = params.moment_identities();
    -(c.mu + 2.0 * params.u * c.eta) * (2.0 * c.nu / c.lambda) * i1
        + (c.gamma - 2.0 * c.lambda * c.eta / c.nu)
            * (2.0 * c.nu * c.nu / (c.lambda * c.lambda))
            * i2
}

/// Left-hand side of the constant-modulus criterion (`M̃ / 2`) with `κ`
/// tied to the wavenumber through [`kappa_from_wavenumber`].
pub fn steady_residual(
    modulus: &EllipticModulus,
    s1: f64,
    k: f64,
    half_period: f64,
    coeffs: &KdVCoeffs,
) -> Result<f64> {
    let kappa = kappa_from_wavenumber(k, modulus, half_period, coeffs)?;
    Ok(0.5 * mtilde_reduced(&shape(modulus), s1, kappa, coeffs))
}

/// Slow drift of the modulus along `Θ`,
/// `dm/dΘ = -(3/kν) (m⁴-m²+1)^{5/2} / ((s1²-3s2)^{3/2} m³ (m²-1)) · M̃`.
pub fn dm_dtheta(
    modulus: &EllipticModulus,
    s1: f64,
    s2: f64,
    k: f64,
    coeffs: &KdVCoeffs,
) -> Result<f64> {
    let slope = ds3_dm(modulus, s1, s2)?;
    if slope == 0.0 || !slope.is_finite() {
        return Err(Error::Singular {
            what: "dm_dtheta",
            m: modulus.modulus(),
            m_comp: modulus.complement(),
        });
    }
    let kappa = s1 * s1 / 18.0 - s2 / 6.0;
    let mt = mtilde_reduced(&shape(modulus), s1, kappa, coeffs);
    Ok(-3.0 / (k * coeffs.nu) * mt / slope)
}

/// Full parameter set of one cnoidal wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnoidalParams {
    pub modulus: EllipticModulus,
    pub a: f64,
    pub b: f64,
    pub d: f64,
    /// Internal wavenumber `K(m) / P`.
    pub beta: f64,
    /// Half-period `P` in `θ`.
    pub half_period: f64,
    pub k: f64,
    pub theta0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub kappa: f64,
    /// `U = s1 / 6`.
    pub u: f64,
    pub c_hat: f64,
    pub d_hat: f64,
    /// Speed in the KdV frame, `c = ν U`.
    pub c: f64,
    pub omega: f64,
}

impl CnoidalParams {
    /// Wave with given wavenumber and half-period; `κ` follows from both.
    pub fn from_wavenumber(
        modulus: EllipticModulus,
        s1: f64,
        k: f64,
        half_period: f64,
        theta0: f64,
        coeffs: &KdVCoeffs,
    ) -> Result<Self> {
        let kappa = kappa_from_wavenumber(k, &modulus, half_period, coeffs)?;
        Self::assemble(modulus, kappa, s1, k, half_period, theta0, coeffs)
    }

    /// Wave with given `κ > 0`; the half-period follows from the wavenumber.
    pub fn from_kappa(
        modulus: EllipticModulus,
        kappa: f64,
        s1: f64,
        k: f64,
        theta0: f64,
        coeffs: &KdVCoeffs,
    ) -> Result<Self> {
        if !(kappa > 0.0) || !(k > 0.0) {
            return Err(Error::domain(
                "CnoidalParams::from_kappa",
                format!("need κ > 0 and k > 0 (κ = {kappa}, k = {k})"),
            ));
        }
        let x = modulus.parameter();
        let dd = 1.0 - x * modulus.comp_parameter();
        let scale = 12.0 * coeffs.lambda / coeffs.nu;
        let kk = complete_integrals(&modulus).k;
        let half_period = k * kk * (scale * scale * dd / (18.0 * kappa)).powf(0.25);
        Self::assemble(modulus, kappa, s1, k, half_period, theta0, coeffs)
    }

    fn assemble(
        modulus: EllipticModulus,
        kappa: f64,
        s1: f64,
        k: f64,
        half_period: f64,
        theta0: f64,
        coeffs: &KdVCoeffs,
    ) -> Result<Self> {
        if coeffs.nu <= 0.0 {
            return Err(Error::domain(
                "CnoidalParams",
                "a positive-amplitude wave needs ν > 0",
            ));
        }
        if !(kappa > 0.0) || !kappa.is_finite() || !s1.is_finite() || !theta0.is_finite() {
            return Err(Error::domain(
                "CnoidalParams",
                format!("need finite s1, θ0 and κ > 0 (κ = {kappa})"),
            ));
        }
        let sh = shape(&modulus);
        let root_kappa = kappa.sqrt();
        let s2 = s1 * s1 / 3.0 - 6.0 * kappa;
        let s3 = s3_of_m(&modulus, s1, s2)?;
        let (u, c_hat, d_hat) = integration_constants(s1, s2, s3);
        let c = coeffs.nu * u;
        Ok(Self {
            modulus,
            a: root_kappa * sh.h1,
            b: sh.b,
            d: s1 / 6.0 + root_kappa * sh.h3,
            beta: sh.integrals.k / half_period,
            half_period,
            k,
            theta0,
            s1,
            s2,
            s3,
            kappa,
            u,
            c_hat,
            d_hat,
            c,
            omega: k * c,
        })
    }

    /// Cnoidal argument `β (θ - θ0)`, reduced into `[0, 2K)` through the
    /// `2P` period of `cn²`.
    fn argument(&self, theta: f64) -> f64 {
        let span = 2.0 * self.half_period;
        self.beta * (theta - self.theta0).rem_euclid(span)
    }

    /// `u0(θ) = ab + d + a cn²(β(θ - θ0); m)`.
    pub fn profile(&self, theta: f64) -> f64 {
        let (_, cn, _) = sn_cn_dn(self.argument(theta), &self.modulus);
        self.a * self.b + self.d + self.a * cn * cn
    }

    /// `(u0, u0_θ, u0_θθ)` from the analytic derivatives of `cn²`.
    pub fn profile_derivatives(&self, theta: f64) -> (f64, f64, f64) {
        let (sn, cn, dn) = sn_cn_dn(self.argument(theta), &self.modulus);
        let x = self.modulus.parameter();
        let u0 = self.a * self.b + self.d + self.a * cn * cn;
        let u1 = -2.0 * self.a * self.beta * sn * cn * dn;
        let u2 = -2.0
            * self.a
            * self.beta
            * self.beta
            * (cn * cn * dn * dn - sn * sn * dn * dn - x * sn * sn * cn * cn);
        (u0, u1, u2)
    }

    /// Closed forms for `(1/2P)(λk²/ν)∫u0_θ²` and
    /// `(1/2P)(λ²k⁴/ν²)∫u0_θθ²` over one period.
    pub fn moment_identities(&self) -> (f64, f64) {
        moment_identities(self.c_hat, self.d_hat, self.u, self.d)
    }
}

/// `u0(θ)` for the given wave; see [`CnoidalParams::profile`].
pub fn u0_profile(theta: f64, params: &CnoidalParams) -> f64 {
    params.profile(theta)
}

/// Moment identities `(I1, I2)` in terms of the integration constants.
pub fn moment_identities(c_hat: f64, d_hat: f64, u: f64, d: f64) -> (f64, f64) {
    let i1 = 0.4 * (3.0 * d_hat + 2.0 * c_hat * d + u * (c_hat + u * d));
    let i2 = (6.0 * d_hat * d
        + 8.0 * c_hat * c_hat
        + u * (-6.0 * d_hat + 6.0 * c_hat * d + 2.0 * u * c_hat + 2.0 * u * u * d))
        / 7.0;
    (i1, i2)
}

/// Ordered Riemann invariants `r1 ≤ r2 ≤ r3` of the modulation system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannTriple {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl RiemannTriple {
    pub fn new(r1: f64, r2: f64, r3: f64) -> Result<Self> {
        if !(r1 <= r2 && r2 <= r3) || ![r1, r2, r3].iter().all(|r| r.is_finite()) {
            return Err(Error::domain(
                "RiemannTriple",
                format!("need finite r1 ≤ r2 ≤ r3, got ({r1}, {r2}, {r3})"),
            ));
        }
        Ok(Self { r1, r2, r3 })
    }

    pub fn s1(&self) -> f64 {
        self.r1 + self.r2 + self.r3
    }

    pub fn s2(&self) -> f64 {
        self.r1 * self.r2 + self.r1 * self.r3 + self.r2 * self.r3
    }

    pub fn s3(&self) -> f64 {
        self.r1 * self.r2 * self.r3
    }

    /// `κ = s1²/18 - s2/6`, summed as pairwise squared gaps.
    pub fn kappa(&self) -> f64 {
        let (g12, g13, g23) = (self.r2 - self.r1, self.r3 - self.r1, self.r3 - self.r2);
        (g12 * g12 + g13 * g13 + g23 * g23) / 36.0
    }

    /// Modulus from `m² = (r2 - r1) / (r3 - r1)`.
    pub fn modulus(&self) -> Result<EllipticModulus> {
        let span = self.r3 - self.r1;
        if !(self.r2 > self.r1) || !(self.r3 > self.r2) {
            return Err(Error::Degenerate(format!(
                "Riemann invariants ({}, {}, {}) do not define a modulus in (0, 1)",
                self.r1, self.r2, self.r3
            )));
        }
        let x = (self.r2 - self.r1) / span;
        let m = x.sqrt();
        let comp = (self.r3 - self.r2) / span / (1.0 + m);
        EllipticModulus::from_complement(comp)
    }
}

/// Riemann invariants of a cnoidal wave: `r2 - r1 = a`, `r3 - r1 = a/m²`,
/// `(r1 + r3 - r2)/2 = ab + d`.
pub fn cnoidal_to_riemann(params: &CnoidalParams) -> Result<RiemannTriple> {
    if !(params.a > 0.0) {
        return Err(Error::Degenerate(format!(
            "zero-amplitude wave (a = {}) has no modulus",
            params.a
        )));
    }
    let base = params.a * params.b + params.d;
    let x = params.modulus.parameter();
    let r1 = 2.0 * base - params.a * params.modulus.comp_parameter() / x;
    RiemannTriple::new(r1, r1 + params.a, 2.0 * base + params.a)
}

/// Cnoidal wave with the given invariants and wavenumber.
///
/// The half-period is not free: it follows from `β = sqrt(ν(r3-r1)/(12λk²))`.
pub fn riemann_to_cnoidal(
    triple: &RiemannTriple,
    k: f64,
    theta0: f64,
    coeffs: &KdVCoeffs,
) -> Result<CnoidalParams> {
    let modulus = triple.modulus()?;
    CnoidalParams::from_kappa(modulus, triple.kappa(), triple.s1(), k, theta0, coeffs)
}
