//! Closed-form coefficients of the bent strip with v_α = sin(πr)/r^α.
//!
//! All quantities reduce to the cosine moments w_ν(q) = ∫₀¹ r^{−ν} cos(qr) dr
//! and the tails w̃_ν(q) = ∫₁^∞ r^{−ν} cos(qr) dr.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optimize::golden_max;
use crate::quadrature::integrate_adaptive_split;
use crate::special::{gamma, sine_integral};

/// Above this frequency w_ν uses the asymptotic expansion of its tail.
const ASYMPTOTIC_Q: f64 = 50.0;

fn check_nu(nu: f64) -> Result<()> {
    if !(nu < 1.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("w_ν needs ν < 1, got {nu}")));
    }
    Ok(())
}

/// C_ν = ∫₀^∞ r^{−ν} cos r dr = Γ(1−ν) sin(πν/2), for 0 < ν < 1.
pub fn full_line_moment(nu: f64) -> f64 {
    gamma(1.0 - nu) * (0.5 * PI * nu).sin()
}

/// w_ν(q) = ∫₀¹ r^{−ν} cos(qr) dr.
pub fn w_nu(nu: f64, q: f64) -> Result<f64> {
    check_nu(nu)?;
    let q = q.abs();
    if q == 0.0 {
        return Ok(1.0 / (1.0 - nu));
    }
    if nu > 0.0 && q >= ASYMPTOTIC_Q {
        return Ok(full_line_moment(nu) * q.powf(nu - 1.0) - tail_series(nu, q, 1.0));
    }
    w_nu_quadrature(nu, q)
}

/// w_ν(q) by quadrature alone.
pub fn w_nu_quadrature(nu: f64, q: f64) -> Result<f64> {
    check_nu(nu)?;
    let q = q.abs();
    let pieces = (q / PI).ceil() as usize + 1;
    if nu <= 0.0 {
        return Ok(integrate_adaptive_split(|r| r.powf(-nu) * (q * r).cos(), 0.0, 1.0, pieces, 1e-15, 1e-13)?.value);
    }
    // Near 0 substitute t = r^{1−ν}, which removes the singularity.
    let r1 = (1.0 / q.max(1.0)).min(1.0);
    let p = 1.0 - nu;
    let head = integrate_adaptive_split(
        |t| (q * t.powf(1.0 / p)).cos() / p,
        0.0,
        r1.powf(p),
        4,
        1e-15,
        1e-13,
    )?
    .value;
    let body = integrate_adaptive_split(|r| r.powf(-nu) * (q * r).cos(), r1, 1.0, pieces, 1e-15, 1e-13)?.value;
    Ok(head + body)
}

/// ∫_R^∞ r^{−ν} cos(qr) dr from the integration-by-parts series
/// −Re[e^{iqR} Σ_k (ν)_k R^{−ν−k} (iq)^{−k−1}]; needs qR ≳ 40.
fn tail_series(nu: f64, q: f64, r: f64) -> f64 {
    // (re, im) of Σ; i^{−m} cycles through 1, −i, −1, i.
    let (mut re, mut im) = (0.0, 0.0);
    let mut mag = r.powf(-nu) / q;
    for k in 0..400usize {
        match (k + 1) % 4 {
            0 => re += mag,
            1 => im -= mag,
            2 => re -= mag,
            _ => im += mag,
        }
        let next = mag * (nu + k as f64) / (q * r);
        if next.abs() >= mag.abs() && k > 0 {
            break;
        }
        if next.abs() <= 1e-18 * (re.abs() + im.abs()) {
            break;
        }
        mag = next;
    }
    let (c, s) = ((q * r).cos(), (q * r).sin());
    -(c * re - s * im)
}

/// w̃_ν(q) = ∫₁^∞ r^{−ν} cos(qr) dr, by quadrature on [1, R] and the
/// asymptotic series beyond R.
pub fn w_tilde(nu: f64, q: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("w̃_ν diverges for ν = {nu} ≤ 0")));
    }
    let q = q.abs();
    if q == 0.0 {
        return Err(Error::InvalidParameter("w̃_ν(0) diverges".into()));
    }
    let r_cut = (80.0 / q).max(1.0);
    let near = if r_cut > 1.0 {
        let pieces = ((r_cut - 1.0) * q / PI).ceil() as usize + 1;
        integrate_adaptive_split(|r| r.powf(-nu) * (q * r).cos(), 1.0, r_cut, pieces, 1e-15, 1e-13)?.value
    } else {
        0.0
    };
    Ok(near + tail_series(nu, q, r_cut))
}

/// lim_{α→½} w_{2α−1}(2π)/(2α−1) = Si(2π)/(2π).
pub fn half_alpha_limit() -> f64 {
    sine_integral(2.0 * PI) / (2.0 * PI)
}

/// w_{2α−1}(2π)/(2α−1), continuous through α = ½.
fn w_ratio(alpha: f64) -> Result<f64> {
    if (alpha - 0.5).abs() < 1e-6 {
        return Ok(half_alpha_limit());
    }
    Ok(w_nu(2.0 * alpha - 1.0, 2.0 * PI)? / (2.0 * alpha - 1.0))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("α = {alpha} outside (0, 1)")));
    }
    Ok(())
}

/// (v, v)_Ω and (∇v, ∇v)_Ω.
pub fn integrals(alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let h = 0.5 / (1.0 - alpha);
    let r = w_ratio(alpha)?;
    // w_{2α−1}(2π) = (2α−1)·ratio keeps both forms finite at α = ½.
    let vv = 0.25 * PI * (h - (2.0 * alpha - 1.0) * r);
    let gg = 0.25 * PI.powi(3) * (h - r);
    Ok((vv, gg))
}

/// β = π²(v,v) − (∇v,∇v) = (π³/4)(2−2α)/(2α−1) · w_{2α−1}(2π).
pub fn beta(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(0.25 * PI.powi(3) * (2.0 - 2.0 * alpha) * w_ratio(alpha)?)
}

/// σ = ½(1/(1−α) − w_α(2π))².
pub fn sigma(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(0.5 * (1.0 / (1.0 - alpha) - w_nu(alpha, 2.0 * PI)?).powi(2))
}

/// (v, sin πnr) on the interface: ½[w_α(π(n−1)) − w_α(π(n+1))].
pub fn projection(alpha: f64, n: usize) -> Result<f64> {
    check_alpha(alpha)?;
    let n = n as f64;
    Ok(0.5 * (w_nu(alpha, PI * (n - 1.0))? - w_nu(alpha, PI * (n + 1.0))?))
}

fn d_prefactor(alpha: f64) -> f64 {
    PI.powf(alpha - 0.5) * gamma(0.5 * (1.0 - alpha)) / (2f64.powf(1.0 + alpha) * gamma(0.5 * alpha))
}

/// Leading part d_n of the projection, from the full-line moments.
pub fn d_n(alpha: f64, n: usize) -> f64 {
    let n = n as f64;
    d_prefactor(alpha) * ((n - 1.0).powf(alpha - 1.0) - (n + 1.0).powf(alpha - 1.0))
}

/// Lower and upper bounds (e_n⁻, e_n⁺) of e_n = ½[w̃_α(π(n−1)) − w̃_α(π(n+1))].
pub fn e_bounds(alpha: f64, n: usize) -> (f64, f64) {
    let c1 = alpha / (PI * PI);
    let c3 = alpha * (alpha + 1.0) * (alpha + 2.0) / PI.powi(4);
    let (m, p) = ((n - 1) as f64, (n + 1) as f64);
    let sm = if (n - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let sp = sm;
    // α cos q/q² − c(cos q ± 1)/q⁴ bracket w̃_α(q) at q = πk.
    let lo_m = c1 * sm / (m * m) - c3 * (sm + 1.0) / m.powi(4);
    let hi_m = c1 * sm / (m * m) - c3 * (sm - 1.0) / m.powi(4);
    let lo_p = c1 * sp / (p * p) - c3 * (sp + 1.0) / p.powi(4);
    let hi_p = c1 * sp / (p * p) - c3 * (sp - 1.0) / p.powi(4);
    (0.5 * (lo_m - hi_p), 0.5 * (hi_m - lo_p))
}

/// Default number of series terms.
pub const DEFAULT_TERMS: usize = 1000;

/// Series data behind the κ bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaSeries {
    pub a1: f64,
    pub a2_minus: f64,
    pub a3_plus: f64,
    /// Σ√(n²−1) max((e_n⁻)², (e_n⁺)²), which bounds Σ√(n²−1)e_n² for every n;
    /// A₃⁺ alone does not when e_n < −e_n⁺ (even n).
    pub a3_strict: f64,
    pub terms: usize,
    /// Bound on the contribution of n > terms, already included in κ.
    pub tail: f64,
    pub kappa: f64,
}

/// κ ≤ 2π(A₁ − 2A₂⁻ + A₃⁺) with the sums to `terms` and an integral tail bound.
pub fn kappa_bound(alpha: f64, terms: usize) -> Result<KappaSeries> {
    check_alpha(alpha)?;
    if terms < 2 {
        return Err(Error::InvalidParameter("κ series needs at least two terms".into()));
    }
    let (mut a1, mut a2, mut a3, mut a3s) = (0.0, 0.0, 0.0, 0.0);
    for n in 2..=terms {
        let w = ((n * n - 1) as f64).sqrt();
        let d = d_n(alpha, n);
        let (em, ep) = e_bounds(alpha, n);
        a1 += w * d * d;
        a2 += w * d * em;
        a3 += w * ep * ep;
        a3s += w * (ep * ep).max(em * em);
    }
    // With m = n−1 ≥ N: d_n ≤ C m^{α−2}, |e_n^±| ≤ E/m² and √(n²−1) ≤
    // (1 + 1/N) m; then Σ_{m≥N} m^{−s} ≤ N^{−s} + N^{1−s}/(s−1).
    let big_n = terms as f64;
    let c = d_prefactor(alpha) * 2.0 * (1.0 - alpha);
    let e = alpha / (PI * PI) + 2.0 * alpha * (alpha + 1.0) * (alpha + 2.0) / PI.powi(4);
    let zeta_tail = |s: f64| big_n.powf(-s) + big_n.powf(1.0 - s) / (s - 1.0);
    let scale = 1.0 + 1.0 / big_n;
    let t1 = c * c * zeta_tail(3.0 - 2.0 * alpha);
    let t2 = c * e * zeta_tail(3.0 - alpha);
    let t3 = e * e * zeta_tail(3.0);
    let tail = 2.0 * PI * scale * (t1 + 2.0 * t2 + t3);
    Ok(KappaSeries {
        a1,
        a2_minus: a2,
        a3_plus: a3,
        a3_strict: a3s,
        terms,
        tail,
        kappa: 2.0 * PI * (a1 - 2.0 * a2 + a3) + tail,
    })
}

/// κ = 2π Σ √(n²−1) (v, sin πnr)² summed directly, with the n^{2α−3}
/// tail extrapolated from the last term. Returns (κ, tail).
pub fn kappa_direct(alpha: f64, terms: usize) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if terms < 2 {
        return Err(Error::InvalidParameter("κ series needs at least two terms".into()));
    }
    let mut sum = 0.0;
    let mut last = 0.0;
    for n in 2..=terms {
        let p = projection(alpha, n)?;
        last = ((n * n - 1) as f64).sqrt() * p * p;
        sum += last;
    }
    let tail = 2.0 * PI * last * terms as f64 / (2.0 - 2.0 * alpha);
    Ok((2.0 * PI * sum + tail, tail))
}

/// Every coefficient of the bent strip at one α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BentCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub kappa_bound: f64,
    pub kappa_direct: f64,
    /// (β − 2(1+ε)κ_bound)/σ
    pub eta_bound: f64,
    /// (β − 2(1+ε)κ_direct)/σ
    pub eta_direct: f64,
    /// 2/η_bound when η_bound > 0.
    pub a_threshold: Option<f64>,
    pub eps_coth: f64,
    pub series: KappaSeries,
    pub direct_tail: f64,
}

pub fn bent_coefficients(alpha: f64, eps_coth: f64, terms: usize) -> Result<BentCoefficients> {
    if eps_coth < 0.0 {
        return Err(Error::InvalidParameter(format!("ε = {eps_coth} must be nonnegative")));
    }
    let beta = beta(alpha)?;
    let sigma = sigma(alpha)?;
    let series = kappa_bound(alpha, terms)?;
    let (kappa_direct, direct_tail) = kappa_direct(alpha, terms)?;
    let eta = |k: f64| (beta - 2.0 * (1.0 + eps_coth) * k) / sigma;
    let eta_bound = eta(series.kappa);
    Ok(BentCoefficients {
        alpha,
        beta,
        sigma,
        kappa_bound: series.kappa,
        kappa_direct,
        eta_bound,
        eta_direct: eta(kappa_direct),
        a_threshold: (eta_bound > 0.0).then(|| 2.0 / eta_bound),
        eps_coth,
        series,
        direct_tail,
    })
}

/// Which κ enters η.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMethod {
    Bound,
    Direct,
}

/// η(α) = (β − 2(1+ε)κ)/σ with κ from `method`.
pub fn eta(alpha: f64, method: EtaMethod, eps_coth: f64, terms: usize) -> Result<f64> {
    let k = match method {
        EtaMethod::Bound => kappa_bound(alpha, terms)?.kappa,
        EtaMethod::Direct => kappa_direct(alpha, terms)?.0,
    };
    Ok((beta(alpha)? - 2.0 * (1.0 + eps_coth) * k) / sigma(alpha)?)
}

/// Golden-section maximization of η(α) over α ∈ [0.05, 0.95] to |Δα| < 1e−4.
pub fn maximize_eta(method: EtaMethod, eps_coth: f64, terms: usize) -> Result<BentCoefficients> {
    let mut failure = None;
    let (alpha, _) = golden_max(
        |a| match eta(a, method, eps_coth, terms) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        0.05,
        0.95,
        5e-5,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    bent_coefficients(alpha, eps_coth, terms)
}
