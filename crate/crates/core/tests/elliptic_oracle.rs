use cnoidal_core::elliptic::{
    complete_e, complete_integrals, complete_k, jacobi_scd, EllipticModulus,
};
use cnoidal_oracle as oracle;
use proptest::prelude::*;

fn modulus(m: f64) -> EllipticModulus {
    EllipticModulus::new(m).unwrap()
}

#[test]
fn complete_integrals_at_half() {
    let md = modulus(0.5);
    assert!((complete_k(&md) - 1.685_750_354_812_596).abs() < 1e-14);
    assert!((complete_e(&md) - 1.467_462_209_339_427).abs() < 1e-14);
}

#[test]
fn complete_integrals_match_quadrature() {
    for i in 1..60 {
        let m = i as f64 / 60.0;
        let md = modulus(m);
        let ci = complete_integrals(&md);
        assert!(
            (ci.k / oracle::elliptic_k(m) - 1.0).abs() < 1e-13,
            "K at {m}"
        );
        assert!(
            (ci.e / oracle::elliptic_e(m) - 1.0).abs() < 1e-13,
            "E at {m}"
        );
    }
}

#[test]
fn jacobi_matches_amplitude_inversion() {
    let (u, m) = (0.7, 0.8);
    let phi = oracle::jacobi_amplitude(u, m);
    let (sn, cn, dn) = jacobi_scd(u, &modulus(m)).unwrap();
    assert!((sn - phi.sin()).abs() < 1e-12);
    assert!((cn - phi.cos()).abs() < 1e-12);
    assert!((dn - (1.0 - m * m * phi.sin().powi(2)).sqrt()).abs() < 1e-12);
    assert!((sn * sn + cn * cn - 1.0).abs() < 1e-12);
    assert!((dn * dn + m * m * sn * sn - 1.0).abs() < 1e-12);
}

#[test]
fn quarter_period_values_near_unit_modulus() {
    for m_comp in [1e-6, 1e-10, 3.7e-14] {
        let md = EllipticModulus::from_complement(m_comp).unwrap();
        let k = complete_k(&md);
        let (sn, cn, dn) = jacobi_scd(k, &md).unwrap();
        assert!((sn - 1.0).abs() < 1e-12, "{m_comp:e}");
        assert!(cn.abs() < 1e-6, "{m_comp:e}: {cn}");
        assert!((dn / md.k_prime() - 1.0).abs() < 1e-3, "{m_comp:e}");
    }
}

#[test]
fn integrals_are_monotone() {
    let mut prev_k = 0.0;
    let mut prev_e = f64::INFINITY;
    for i in 1..=1000 {
        let md = EllipticModulus::from_complement(1.0 - i as f64 / 1001.0).unwrap();
        let ci = complete_integrals(&md);
        assert!(ci.k > prev_k && ci.e < prev_e, "step {i}");
        prev_k = ci.k;
        prev_e = ci.e;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn pythagorean_identities(u in -50.0f64..50.0, m in 0.001f64..0.999_999) {
        let (sn, cn, dn) = jacobi_scd(u, &modulus(m)).unwrap();
        prop_assert!((sn * sn + cn * cn - 1.0).abs() < 1e-12);
        prop_assert!((dn * dn + m * m * sn * sn - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cn_squared_derivative(u in -10.0f64..10.0, m in 0.01f64..0.99) {
        let md = modulus(m);
        let cn2 = |v: f64| jacobi_scd(v, &md).unwrap().1.powi(2);
        let (sn, cn, dn) = jacobi_scd(u, &md).unwrap();
        let fd = oracle::central_diff(cn2, u, 1e-6);
        prop_assert!((fd + 2.0 * sn * cn * dn).abs() < 1e-6);
    }

    #[test]
    fn cn_squared_has_period_two_k(u in -20.0f64..20.0, m in 0.01f64..0.999) {
        let md = modulus(m);
        let k = complete_k(&md);
        let a = jacobi_scd(u, &md).unwrap().1.powi(2);
        let b = jacobi_scd(u + 2.0 * k, &md).unwrap().1.powi(2);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn jacobi_matches_oracle_on_first_quarter(frac in 0.0f64..1.0, m in 0.05f64..0.95) {
        let md = modulus(m);
        let u = frac * complete_k(&md);
        let phi = oracle::jacobi_amplitude(u, m);
        let (sn, cn, _) = jacobi_scd(u, &md).unwrap();
        prop_assert!((sn - phi.sin()).abs() < 1e-11);
        prop_assert!((cn - phi.cos()).abs() < 1e-11);
    }
}
