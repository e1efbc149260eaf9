//! Special functions needed by the closed-form coefficient formulas.


use crate::quadrature::integrate_adaptive;

/// First positive zero of the Bessel function J₀.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// First positive zero of the Bessel function J₂.
pub const BESSEL_J2_FIRST_ZERO: f64 = 5.135_622_301_840_683;

/// Gamma function (Lanczos approximation).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Sine integral Si(x) = ∫₀ˣ sin(t)/t dt.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x <= 8.0 {
        // Alternating power series; the largest term stays below 1e3 on [0, 8].
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut k = 0usize;
        loop {
            let a = (2 * k + 2) as f64;
            let b = (2 * k + 3) as f64;
            term *= -x2 / (a * b);
            let add = term / b;
            sum += add;
            if add.abs() <= 1e-18 * sum.abs() || k > 200 {
                break;
            }
            k += 1;
        }
        sum
    } else {
        let tail = integrate_adaptive(|t| t.sin() / t, 8.0, x, 1e-15, 1e-14)
            .map(|e| e.value)
            .unwrap_or(f64::NAN);
        sine_integral(8.0) + tail
    }
}

/// Bessel function of the first kind of integer order by its power series.
///
/// Adequate for moderate arguments (|x| ≲ 20), which is all the eigenvalue
/// checks use.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(order as i32) / factorial(order);
    let mut sum = term;
    let q = -half * half;
    for k in 1..200 {
        term *= q / (k as f64 * (k as f64 + order as f64));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
