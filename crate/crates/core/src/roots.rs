//! Scalar root bracketing and Brent refinement.

/// Consecutive grid intervals over which `f` changes sign. Points where `f`
/// is not finite are skipped, so a bracket never straddles a failed
/// evaluation. An exact zero at a grid point is returned as a degenerate
/// bracket `(x, x)`.
pub(crate) fn sign_changes<F>(f: F, grid: &[f64]) -> Vec<(f64, f64, f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &x in grid {
        let fx = f(x);
        if !fx.is_finite() {
            prev = None;
            continue;
        }
        if fx == 0.0 {
            out.push((x, x, 0.0, 0.0));
            prev = None;
            continue;
        }
        if let Some((xp, fp)) = prev {
            if fp.signum() != fx.signum() {
                out.push((xp, x, fp, fx));
            }
        }
        prev = Some((x, fx));
    }
    out
}

/// Brent's method on a sign-changing bracket `[a, b]`.
///
/// Stops when `|f| <= ftol`, when the bracket is narrower than `xtol`, or
/// after `max_iter` iterations; returns the best abscissa found.
pub(crate) fn brent<F>(f: F, a: f64, b: f64, fa: f64, fb: f64, xtol: f64, ftol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    const MAX_ITER: usize = 200;
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let half = 0.5 * (c - b);
        if fb.abs() <= ftol || half.abs() <= tol {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * half * s, 1.0 - s)
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0)),
                    (qa - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * half * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = half;
                e = d;
            }
        } else {
            d = half;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(half) };
        fb = f(b);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cubic_root() {
        let f = |x: f64| x * x * x - 2.0 * x - 5.0;
        let root = brent(f, 2.0, 3.0, f(2.0), f(3.0), 1e-15, 0.0);
        assert!((root - 2.094_551_481_542_326_6).abs() < 1e-14);
    }

    #[test]
    fn scan_reports_every_crossing_and_skips_gaps() {
        let grid: Vec<f64> = (0..=100).map(|i| 0.1 * i as f64).collect();
        let f = |x: f64| {
            if (4.0..4.5).contains(&x) {
                f64::NAN
            } else {
                x.sin()
            }
        };
        let brackets = sign_changes(f, &grid);
        // roots at π, 2π, 3π with 0 exactly on the grid
        assert_eq!(brackets.len(), 4);
        assert_eq!(brackets[0].0, 0.0);
        assert!(brackets[1].0 < std::f64::consts::PI && brackets[1].1 > std::f64::consts::PI);
    }

    #[test]
    fn flat_function_stops_on_tolerance() {
        let f = |x: f64| 1e-20 * (x - 0.3);
        let root = brent(f, 0.0, 1.0, f(0.0), f(1.0), 1e-12, 0.0);
        assert!((root - 0.3).abs() < 1e-11);
    }
}
