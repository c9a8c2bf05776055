//! Bracketed scalar root finding and a real cubic solver.

use crate::error::{Error, Result};

/// Bisection on `(lo, hi)` where `f(lo)` and `f(hi)` have opposite signs.
///
/// The endpoints are never evaluated, so they may sit on poles. Iterates
/// until the bracket is a few ulps wide or narrower than `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, sign_lo: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= tol {
            return mid;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == (sign_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root of a function that is strictly decreasing from `+inf` at `lo` to
/// `-inf` at `hi`; the interval is first scanned at `samples` interior
/// points to tighten the bracket.
pub fn decreasing_root<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, samples: usize) -> Result<f64> {
    let width = hi - lo;
    if !(width > 0.0) {
        return Err(Error::Solver {
            lo,
            hi,
            detail: "empty interval".into(),
        });
    }
    let mut a = lo;
    let mut b = hi;
    for k in 1..samples {
        let x = lo + width * k as f64 / samples as f64;
        if x <= lo || x >= hi {
            continue;
        }
        let v = f(x);
        if v.is_nan() {
            return Err(Error::Solver {
                lo,
                hi,
                detail: format!("NaN at {x}"),
            });
        }
        if v > 0.0 {
            a = x;
        } else {
            b = x;
            break;
        }
    }
    Ok(bisect(f, a, b, 1.0, 0.0))
}

/// Real roots of `x^3 + a x^2 + b x + c`, ascending, polished by Newton steps.
pub fn real_cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if disc < 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let theta = (3.0 * q / (p * m)).clamp(-1.0, 1.0).acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect::<Vec<_>>()
    } else {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() - shift]
    };
    for x in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((*x + a) * *x + b) * *x + c;
            let df = (3.0 * *x + 2.0 * a) * *x + b;
            if df == 0.0 {
                break;
            }
            *x -= f / df;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_with_three_real_roots() {
        // (x - 1)(x + 2)(x - 3) = x^3 - 2x^2 - 5x + 6
        let r = real_cubic_roots(-2.0, -5.0, 6.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn cubic_with_one_real_root() {
        let r = real_cubic_roots(0.0, 1.0, -2.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decreasing_root_near_pole() {
        let f = |x: f64| 1e-12 / x - 1.0;
        let r = decreasing_root(f, 0.0, 1.0, 64).unwrap();
        assert!((r - 1e-12).abs() < 1e-24);
    }
}
