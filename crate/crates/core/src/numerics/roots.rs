//! Safeguarded scalar root finding (bracketing + Brent).

use crate::error::CoreError;

/// Expand an interval around `x0` until `f` changes sign.
///
/// Doubles the half-width geometrically, up to `max_expand` times.
pub fn expand_bracket<F: Fn(f64) -> f64>(
    f: &F,
    x0: f64,
    half_width: f64,
    max_expand: u32,
) -> Result<(f64, f64), CoreError> {
    let mut h = half_width.abs().max(f64::MIN_POSITIVE);
    for _ in 0..max_expand {
        let (a, b) = (x0 - h, x0 + h);
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            return Ok((a, a));
        }
        if fb == 0.0 {
            return Ok((b, b));
        }
        if fa.signum() != fb.signum() {
            return Ok((a, b));
        }
        h *= 4.0;
    }
    Err(CoreError::NoBracket {
        center: x0,
        half_width: h,
    })
}

/// Brent's method on a sign-changing bracket `[a, b]`.
///
/// Converges to relative tolerance `rel_tol` (floored near zero by a tiny
/// absolute term). The bracket must hold a sign change.
pub fn brent<F: Fn(f64) -> f64>(
    f: &F,
    a0: f64,
    b0: f64,
    rel_tol: f64,
) -> Result<f64, CoreError> {
    let (mut a, mut b) = (a0, b0);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(CoreError::NoBracket {
            center: 0.5 * (a + b),
            half_width: 0.5 * (b - a).abs(),
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * rel_tol * b.abs().max(1e-300);
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() < tol || fa.abs() <= fb.abs() {
            d = m;
            e = m;
        } else {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                // secant
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                // inverse quadratic
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol {
            d
        } else if m > 0.0 {
            tol
        } else {
            -tol
        };
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Ok(b)
}

/// Ordinary least-squares line fit; returns `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let f = |x: f64| x * x * x - 2.0;
        let root = brent(&f, 1.0, 2.0, 1e-15).unwrap();
        assert!((root - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn bracket_expands_to_sign_change() {
        let f = |x: f64| x - 100.0;
        let (a, b) = expand_bracket(&f, 0.0, 1.0, 20).unwrap();
        assert!(f(a) < 0.0 && f(b) > 0.0);
    }

    #[test]
    fn bracket_failure_reported() {
        let f = |_x: f64| 1.0;
        assert!(expand_bracket(&f, 0.0, 1.0, 8).is_err());
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let (m, b) = linear_fit(&xs, &ys);
        assert!((m - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    }
}
