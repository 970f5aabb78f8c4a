//! Reference computations used only by tests.
//!
//! Nothing here shares code with `cnoidal-core`: the elliptic integrals are
//! evaluated by brute-force quadrature of their defining integrals, and
//! derivatives by central differences. Slow, but independent.

use std::f64::consts::FRAC_PI_2;

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]` to absolute
/// tolerance `tol`, by recursive bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gk15(f, a, b);
        if err <= tol.max(1e-15 * value.abs()) || depth >= 50 {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth + 1) + recurse(f, mid, b, 0.5 * tol, depth + 1)
    }
    recurse(&f, a, b, tol, 0)
}

/// Mean of `f` over `[a, b]`, splitting the interval into `pieces` panels
/// first so sharply peaked integrands are resolved.
pub fn mean_over<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let width = (b - a) / pieces as f64;
    let total: f64 = (0..pieces)
        .map(|i| {
            let lo = a + width * i as f64;
            integrate(&f, lo, lo + width, tol / pieces as f64)
        })
        .sum();
    total / (b - a)
}

/// Complete integral of the first kind with modulus `k`, by quadrature.
pub fn elliptic_k(k: f64) -> f64 {
    integrate(
        |phi| 1.0 / (1.0 - k * k * phi.sin().powi(2)).sqrt(),
        0.0,
        FRAC_PI_2,
        1e-15,
    )
}

/// Complete integral of the second kind with modulus `k`, by quadrature.
pub fn elliptic_e(k: f64) -> f64 {
    integrate(
        |phi| (1.0 - k * k * phi.sin().powi(2)).sqrt(),
        0.0,
        FRAC_PI_2,
        1e-15,
    )
}

/// Incomplete integral of the first kind F(phi; k), by quadrature.
pub fn elliptic_f(phi: f64, k: f64) -> f64 {
    integrate(
        |t| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt(),
        0.0,
        phi,
        1e-15,
    )
}

/// Jacobi amplitude am(u; k) for `0 <= u <= K(k)`, found by bisecting
/// F(phi; k) = u over `[0, pi/2]`.
pub fn jacobi_amplitude(u: f64, k: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, FRAC_PI_2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if elliptic_f(mid, k) < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Second-order central difference.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, step: f64) -> f64 {
    (f(x + step) - f(x - step)) / (2.0 * step)
}
