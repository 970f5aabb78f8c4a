//! Complete elliptic integrals and Jacobi elliptic functions.
//!
//! Every function here takes the **modulus** `m` (not the parameter `m²`):
//! the first-kind integrand is `1 / sqrt(1 - m² sin²φ)`, so that
//! `sn(K) = 1`, `cn(K) = 0` and `dn(K) = sqrt(1 - m²)`.
//!
//! Cnoidal waves in the soliton regime need `1 - m` as small as `4e-14`,
//! where `1 - m*m` has lost almost all of its digits. [`EllipticModulus`]
//! therefore carries `1 - m` explicitly and every complementary quantity is
//! built from it.

use std::f64::consts::{FRAC_PI_2, LN_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this `1 - m` the first-kind integral switches from the AGM to its
/// logarithmic expansion about `m = 1`.
pub const LOG_SERIES_THRESHOLD: f64 = 1e-8;

const MAX_AGM_STEPS: usize = 40;

/// Elliptic modulus `m` in `(0, 1)` together with its complement `1 - m`.
///
/// The complement is the authoritative value when the modulus is built with
/// [`EllipticModulus::from_complement`]; `m` itself may then round to `1.0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModulus")]
pub struct EllipticModulus {
    m: f64,
    m_comp: f64,
}

#[derive(Deserialize)]
struct RawModulus {
    m: f64,
    m_comp: f64,
}

impl TryFrom<RawModulus> for EllipticModulus {
    type Error = Error;

    fn try_from(raw: RawModulus) -> Result<Self> {
        let built = EllipticModulus::from_complement(raw.m_comp)?;
        if (built.m - raw.m).abs() > 4.0 * f64::EPSILON {
            return Err(Error::domain(
                "EllipticModulus",
                format!("m = {} inconsistent with 1 - m = {:e}", raw.m, raw.m_comp),
            ));
        }
        Ok(built)
    }
}

impl EllipticModulus {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 0.0 && m < 1.0) {
            return Err(Error::domain("modulus", format!("need 0 < m < 1, got {m}")));
        }
        Ok(Self { m, m_comp: 1.0 - m })
    }

    /// Builds the modulus from `1 - m`, which is stored exactly.
    pub fn from_complement(m_comp: f64) -> Result<Self> {
        if !(m_comp > 0.0 && m_comp < 1.0) {
            return Err(Error::domain(
                "modulus complement",
                format!("need 0 < 1 - m < 1, got {m_comp:e}"),
            ));
        }
        Ok(Self {
            m: 1.0 - m_comp,
            m_comp,
        })
    }

    pub fn from_ln_complement(ln_m_comp: f64) -> Result<Self> {
        Self::from_complement(ln_m_comp.exp())
    }

    #[inline]
    pub fn modulus(&self) -> f64 {
        self.m
    }

    /// `1 - m`.
    #[inline]
    pub fn complement(&self) -> f64 {
        self.m_comp
    }

    /// `m²`.
    #[inline]
    pub fn parameter(&self) -> f64 {
        self.m * self.m
    }

    /// `1 - m²`, evaluated as `(1 - m)(1 + m)`.
    #[inline]
    pub fn comp_parameter(&self) -> f64 {
        self.m_comp * (1.0 + self.m)
    }

    /// Complementary modulus `sqrt(1 - m²)`.
    #[inline]
    pub fn k_prime(&self) -> f64 {
        self.comp_parameter().sqrt()
    }
}

/// `K`, `E` and two derived quantities that the cnoidal closed forms need
/// without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompleteIntegrals {
    pub k: f64,
    pub e: f64,
    /// `E / K`.
    pub e_over_k: f64,
    /// `1 - E/K - m²/2`, which is `O(m⁴)` as `m -> 0`. Computed directly from
    /// the AGM differences so it keeps full relative accuracy there.
    pub small_m_tail: f64,
}

/// Evaluates both complete integrals.
///
/// Uses the arithmetic-geometric mean with the differences `c_n` propagated
/// as `c_{n+1} = c_n² / (4 a_{n+1})`; for `1 - m < 1e-8` the logarithmic
/// expansion in `k' = sqrt(1 - m²)` takes over.
pub fn complete_integrals(modulus: &EllipticModulus) -> CompleteIntegrals {
    if modulus.complement() < LOG_SERIES_THRESHOLD {
        log_series_integrals(modulus)
    } else {
        agm_integrals(modulus)
    }
}

fn log_series_integrals(modulus: &EllipticModulus) -> CompleteIntegrals {
    let x = modulus.parameter();
    let q = modulus.comp_parameter();
    // ln(4 / k') with k'² = q
    let l = 2.0 * LN_2 - 0.5 * q.ln();
    let k = l + 0.25 * q * (l - 1.0) + 9.0 / 64.0 * q * q * (l - 7.0 / 6.0);
    let e = 1.0 + 0.5 * q * (l - 0.5) + 3.0 / 16.0 * q * q * (l - 13.0 / 12.0);
    let e_over_k = e / k;
    CompleteIntegrals {
        k,
        e,
        e_over_k,
        small_m_tail: 1.0 - e_over_k - 0.5 * x,
    }
}

fn agm_integrals(modulus: &EllipticModulus) -> CompleteIntegrals {
    let x = modulus.parameter();
    let mut a = 1.0;
    let mut b = modulus.k_prime();
    let mut c = modulus.modulus();
    let mut weight = 1.0;
    let mut tail = 0.0;
    for _ in 0..MAX_AGM_STEPS {
        let a_next = 0.5 * (a + b);
        b = (a * b).sqrt();
        c = c * c / (4.0 * a_next);
        a = a_next;
        tail += weight * c * c;
        weight *= 2.0;
        if c <= f64::EPSILON * a {
            break;
        }
    }
    let k = FRAC_PI_2 / a;
    let e_over_k = 1.0 - 0.5 * x - tail;
    CompleteIntegrals {
        k,
        e: k * e_over_k,
        e_over_k,
        small_m_tail: tail,
    }
}

/// Complete elliptic integral of the first kind, `K(m)`.
pub fn complete_k(modulus: &EllipticModulus) -> f64 {
    complete_integrals(modulus).k
}

/// Complete elliptic integral of the second kind, `E(m)`.
pub fn complete_e(modulus: &EllipticModulus) -> f64 {
    complete_integrals(modulus).e
}

/// Jacobi elliptic functions `(sn, cn, dn)` at real argument `u`.
///
/// Descending AGM / Landen recursion (A&S 16.4). The argument is first
/// reduced into one `4K` period, and `dn` is recovered as
/// `sqrt(1 - m² + m² cn²)` so that it keeps its relative accuracy near the
/// quarter period when `m -> 1`.
pub fn jacobi_scd(u: f64, modulus: &EllipticModulus) -> Result<(f64, f64, f64)> {
    if !u.is_finite() {
        return Err(Error::domain("jacobi_scd", format!("argument u = {u}")));
    }
    Ok(sn_cn_dn(u, modulus))
}

/// Unchecked kernel of [`jacobi_scd`]; non-finite `u` yields NaNs.
pub(crate) fn sn_cn_dn(u: f64, modulus: &EllipticModulus) -> (f64, f64, f64) {
    let x = modulus.parameter();
    let q = modulus.comp_parameter();

    let mut a_seq = [0.0; MAX_AGM_STEPS + 1];
    let mut c_seq = [0.0; MAX_AGM_STEPS + 1];
    let (mut a, mut b, mut c) = (1.0, q.sqrt(), modulus.modulus());
    a_seq[0] = a;
    c_seq[0] = c;
    let mut depth = 0;
    while depth < MAX_AGM_STEPS {
        let a_next = 0.5 * (a + b);
        b = (a * b).sqrt();
        c = c * c / (4.0 * a_next);
        a = a_next;
        depth += 1;
        a_seq[depth] = a;
        c_seq[depth] = c;
        if c <= f64::EPSILON * a {
            break;
        }
    }

    let quarter = FRAC_PI_2 / a;
    let period = 4.0 * quarter;
    let reduced = u - period * (u / period).round();

    let mut phi = (1u64 << depth) as f64 * a * reduced;
    for n in (1..=depth).rev() {
        phi = 0.5 * (phi + (c_seq[n] * phi.sin() / a_seq[n]).asin());
    }
    let (sn, cn) = phi.sin_cos();
    let dn = (q + x * cn * cn).sqrt();
    (sn, cn, dn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_out_of_range_moduli() {
        assert!(EllipticModulus::new(0.0).is_err());
        assert!(EllipticModulus::new(1.0).is_err());
        assert!(EllipticModulus::new(-0.2).is_err());
        assert!(EllipticModulus::new(f64::NAN).is_err());
        assert!(EllipticModulus::from_complement(0.0).is_err());
        assert!(EllipticModulus::from_complement(1.5).is_err());
    }

    #[test]
    fn complement_is_stored_not_recomputed() {
        let md = EllipticModulus::from_complement(3.7e-14).unwrap();
        assert_eq!(md.complement(), 3.7e-14);
        let q = md.comp_parameter();
        assert!((q / (2.0 * 3.7e-14) - 1.0).abs() < 1e-13);
        // m + m_comp == 1 within one unit
        assert!((md.modulus() + md.complement() - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn small_modulus_limits() {
        let md = EllipticModulus::new(1e-9).unwrap();
        let ci = complete_integrals(&md);
        assert!((ci.k - PI / 2.0).abs() < 1e-15);
        assert!((ci.e - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn log_series_matches_agm_near_threshold() {
        for m_comp in [1e-8, 3e-9, 1e-9] {
            let md = EllipticModulus::from_complement(m_comp).unwrap();
            let series = log_series_integrals(&md);
            let agm = agm_integrals(&md);
            assert!((series.k / agm.k - 1.0).abs() < 1e-14, "{m_comp:e}");
            assert!((series.e / agm.e - 1.0).abs() < 1e-14, "{m_comp:e}");
        }
    }

    #[test]
    fn quarter_period_identities() {
        let md = EllipticModulus::new(0.5).unwrap();
        let k = complete_k(&md);
        let (sn, cn, dn) = jacobi_scd(k, &md).unwrap();
        assert!((sn - 1.0).abs() < 1e-14);
        assert!(cn.abs() < 1e-7, "cn(K) = {cn}");
        assert!((dn - (1.0f64 - 0.25).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn origin_values() {
        for m in [1e-6, 0.3, 0.9, 1.0 - 1e-12] {
            let md = EllipticModulus::new(m).unwrap();
            let (sn, cn, dn) = jacobi_scd(0.0, &md).unwrap();
            assert_eq!((sn, cn), (0.0, 1.0));
            assert!((dn - 1.0).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn non_finite_argument_rejected() {
        let md = EllipticModulus::new(0.5).unwrap();
        assert!(jacobi_scd(f64::INFINITY, &md).is_err());
    }
}
