//! Bracketing root finding and golden-section search.

use crate::error::{Error, Result};

/// Result of a bisection: the root estimate and the work spent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

/// Bisection on a fallible function until the bracket is shorter than
/// `xtol` or |f| < `ftol`.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, xtol: f64, ftol: f64, max_iter: usize) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(Root { x: lo, iterations: 0, bracket: (lo, lo) });
    }
    if f_hi == 0.0 {
        return Ok(Root { x: hi, iterations: 0, bracket: (hi, hi) });
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::BracketInvalid { lo, hi, f_lo, f_hi });
    }
    let mut iterations = 0;
    while (hi - lo).abs() > xtol && iterations < max_iter {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        iterations += 1;
        if f_mid.abs() < ftol {
            return Ok(Root { x: mid, iterations, bracket: (lo, hi) });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Root { x: 0.5 * (lo + hi), iterations, bracket: (lo, hi) })
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimize a unimodal function on [a, b]; returns (x, f(x)).
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Maximize a unimodal function on [a, b]; returns (x, f(x)).
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_min(|x| -f(x), a, b, tol);
    (x, -v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-12, 0.0, 200).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn bisection_rejects_bad_bracket() {
        let err = bisect(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-6, 0.0, 100).unwrap_err();
        assert!(matches!(err, Error::BracketInvalid { .. }));
    }

    #[test]
    fn golden_section_parabola() {
        let (x, v) = golden_max(|x| 1.0 - (x - 0.3).powi(2), 0.0, 1.0, 1e-8);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-12);
    }
}
