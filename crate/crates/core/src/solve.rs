//! Scalar bracketing helpers shared by the root and curve solvers.

use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 400;

/// Bisection on `[a, b]` until the bracket is narrower than `width`.
///
/// `f(a)` and `f(b)` must have opposite signs (a zero at either end is
/// returned immediately).
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, width: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(Error::convergence(format!(
            "non-finite value at bracket [{lo}, {hi}]"
        )));
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::convergence(format!(
            "no sign change on [{lo}, {hi}]: f = {f_lo}, {f_hi}"
        )));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= width || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A few Newton steps that are only accepted while they stay inside
/// `[lo, hi]` and reduce `|f|`.
pub(crate) fn newton_polish<F, D>(f: F, df: D, mut x: f64, lo: f64, hi: f64, steps: usize) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut fx = f(x);
    for _ in 0..steps {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - fx / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        let f_next = f(next);
        if f_next.abs() > fx.abs() {
            break;
        }
        x = next;
        fx = f_next;
        if fx == 0.0 {
            break;
        }
    }
    x
}

/// Steps `x` away from `start` in direction `dir` (doubling the distance)
/// until `pred` holds. Returns `None` after `max_doublings`.
pub(crate) fn march_until<P: Fn(f64) -> bool>(
    start: f64,
    first_step: f64,
    dir: f64,
    max_doublings: usize,
    pred: P,
) -> Option<f64> {
    let mut step = first_step;
    for _ in 0..max_doublings {
        let x = start + dir * step;
        if pred(x) {
            return Some(x);
        }
        step *= 2.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn polish_stays_in_bracket() {
        let x = newton_polish(|x| x * x - 2.0, |x| 2.0 * x, 1.4, 1.0, 2.0, 5);
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn march_doubles() {
        let x = march_until(0.0, 1.0, -1.0, 10, |x| x < -5.0).unwrap();
        assert_eq!(x, -8.0);
    }
}
