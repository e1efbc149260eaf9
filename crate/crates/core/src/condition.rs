//! Variational sufficient condition for trapped modes.
//!
//! For a trial function v on Ω vanishing on the exterior boundary, with
//! β = ν₁(v,v) − (∇v,∇v), σ_i = (v,ψ₁)²_{Γ_i} and
//! κ_i = Σ_{n≥2} √(ν_n − ν₁)(v,ψ_n)²_{Γ_i}, a trapped mode exists whenever
//!
//!   Σ σ_i/a_i < β − Σ κ_i coth(a_i √(ν₂ − ν₁)).
//!
//! Everything is stored in the orthonormal convention ψ_n = √2 sin(πny).

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{BasicDomainSpec, Point, Side, WaveguideSpec};
use crate::optimize::bisect;
use crate::quadrature::{integrate_adaptive_split, GaussLegendre};
use crate::transverse::TransverseBasis;

/// Closed-form integrals of a trial function over Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticIntegrals {
    /// (v, v)_Ω
    pub vv: f64,
    /// (∇v, ∇v)_Ω
    pub gg: f64,
}

pub trait TrialFunction: Send + Sync {
    fn name(&self) -> &str;
    fn value(&self, p: Point) -> f64;
    fn gradient(&self, p: Point) -> [f64; 2];

    /// Closed forms of (v,v) and (∇v,∇v), if known.
    fn integrals(&self) -> Option<AnalyticIntegrals> {
        None
    }

    /// Closed form of (v, ψ_n) on the interface along `side`, if known.
    fn trace_coefficient(&self, _side: Side, _n: usize) -> Option<f64> {
        None
    }
}

/// v = (1+x) sin(πy) + (1+y) sin(πx) on the unit square.
#[derive(Debug, Clone, Copy, Default)]
pub struct LShapeTrial;

impl TrialFunction for LShapeTrial {
    fn name(&self) -> &str {
        "l_shape"
    }

    fn value(&self, [x, y]: Point) -> f64 {
        (1.0 + x) * (PI * y).sin() + (1.0 + y) * (PI * x).sin()
    }

    fn gradient(&self, [x, y]: Point) -> [f64; 2] {
        [
            (PI * y).sin() + PI * (1.0 + y) * (PI * x).cos(),
            PI * (1.0 + x) * (PI * y).cos() + (PI * x).sin(),
        ]
    }

    fn integrals(&self) -> Option<AnalyticIntegrals> {
        Some(AnalyticIntegrals { vv: 1.0 / 3.0 + 2.0 / (PI * PI), gg: PI * PI / 3.0 + 1.0 })
    }

    fn trace_coefficient(&self, side: Side, n: usize) -> Option<f64> {
        // On x = 0 and y = 0 the trace is −sin(πs) = −ψ₁/√2; it vanishes on
        // the other two sides.
        Some(match side {
            Side::Right | Side::Top if n == 1 => -FRAC_1_SQRT_2,
            _ => 0.0,
        })
    }
}

/// v = sin(πx) sin(πy), the first Dirichlet mode of the square.
#[derive(Debug, Clone, Copy, Default)]
pub struct SquareTrial;

impl TrialFunction for SquareTrial {
    fn name(&self) -> &str {
        "unit_square"
    }

    fn value(&self, [x, y]: Point) -> f64 {
        (PI * x).sin() * (PI * y).sin()
    }

    fn gradient(&self, [x, y]: Point) -> [f64; 2] {
        [PI * (PI * x).cos() * (PI * y).sin(), PI * (PI * x).sin() * (PI * y).cos()]
    }

    fn integrals(&self) -> Option<AnalyticIntegrals> {
        Some(AnalyticIntegrals { vv: 0.25, gg: PI * PI / 2.0 })
    }

    fn trace_coefficient(&self, _side: Side, _n: usize) -> Option<f64> {
        Some(0.0)
    }
}

/// v = x(1+x) + y(1+y), vanishing only at the corners of the square.
#[derive(Debug, Clone, Copy, Default)]
pub struct CrossTrial;

impl TrialFunction for CrossTrial {
    fn name(&self) -> &str {
        "cross"
    }

    fn value(&self, [x, y]: Point) -> f64 {
        x * (1.0 + x) + y * (1.0 + y)
    }

    fn gradient(&self, [x, y]: Point) -> [f64; 2] {
        [1.0 + 2.0 * x, 1.0 + 2.0 * y]
    }

    fn integrals(&self) -> Option<AnalyticIntegrals> {
        Some(AnalyticIntegrals { vv: 11.0 / 90.0, gg: 2.0 / 3.0 })
    }

    fn trace_coefficient(&self, _side: Side, n: usize) -> Option<f64> {
        // Every side carries the trace −s(1 − s).
        let n3 = (n as f64).powi(3);
        let parity = if n % 2 == 1 { 2.0 } else { 0.0 };
        Some(-SQRT_2 * 2.0 * parity / (PI.powi(3) * n3))
    }
}

/// v_α = sin(πr)/r^α on the quarter disk.
#[derive(Debug, Clone, Copy)]
pub struct BentTrial {
    pub alpha: f64,
}

impl Default for BentTrial {
    fn default() -> Self {
        Self { alpha: 1.0 / 3.0 }
    }
}

impl TrialFunction for BentTrial {
    fn name(&self) -> &str {
        "bent_strip"
    }

    fn value(&self, [x, y]: Point) -> f64 {
        let r = x.hypot(y);
        if r == 0.0 {
            return 0.0;
        }
        (PI * r).sin() / r.powf(self.alpha)
    }

    fn gradient(&self, [x, y]: Point) -> [f64; 2] {
        let r = x.hypot(y);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let a = self.alpha;
        let dr = PI * (PI * r).cos() / r.powf(a) - a * (PI * r).sin() / r.powf(a + 1.0);
        [dr * x / r, dr * y / r]
    }
}

/// The built-in trial function of a catalog domain, if there is one.
pub fn catalog_trial(spec: &WaveguideSpec) -> Option<Box<dyn TrialFunction>> {
    let family = spec.name.split('(').next().unwrap_or("");
    match family {
        "l_shape" => Some(Box::new(LShapeTrial)),
        "cross" => Some(Box::new(CrossTrial)),
        "bent_strip" => Some(Box::new(BentTrial::default())),
        "unit_square" => Some(Box::new(SquareTrial)),
        _ => None,
    }
}

/// β, σ_i, κ_i of a trial function with the data needed for μ(v).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCoefficients {
    pub beta: f64,
    pub sigma: Vec<f64>,
    pub kappa: Vec<f64>,
    pub truncation: usize,
    /// Estimated bound on the omitted κ tail, summed over branches.
    pub tail_bound: f64,
    /// (v, v)_Ω
    pub vv: f64,
    pub nu1: f64,
    pub nu2: f64,
    /// (v, ψ_n)_{Γ_i} for n = 1..N, when known mode by mode.
    #[serde(skip)]
    pub projections: Option<Vec<Vec<f64>>>,
}

impl ConditionCoefficients {
    /// Assemble from integrals and per-branch projections (v, ψ_n), n = 1..N.
    pub fn from_projections(vv: f64, gg: f64, projections: Vec<Vec<f64>>, basis: &TransverseBasis) -> Self {
        let nu1 = basis.nu(1);
        let nu2 = basis.nu(2);
        let truncation = projections.first().map_or(0, |p| p.len());
        let mut sigma = Vec::new();
        let mut kappa = Vec::new();
        let mut tail_bound = 0.0;
        for proj in &projections {
            sigma.push(proj.first().map_or(0.0, |c| c * c));
            let terms: Vec<f64> = proj
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| (basis.nu(k + 1) - nu1).sqrt() * c * c)
                .collect();
            kappa.push(terms.iter().sum());
            tail_bound += tail_estimate(&terms);
        }
        Self {
            beta: nu1 * vv - gg,
            sigma,
            kappa,
            truncation,
            tail_bound,
            vv,
            nu1,
            nu2,
            projections: Some(projections),
        }
    }

    /// Three-dimensional L-shape (unit cube with two unit-square branches)
    /// with v = [(1+x) sin πy + (1+y) sin πx] sin πz; known analytically only.
    pub fn three_d_l_shape() -> Self {
        let pi2 = PI * PI;
        let vv = 1.0 / 6.0 + 1.0 / pi2;
        let gg = pi2 / 3.0 + 1.5;
        let nu1 = 2.0 * pi2;
        Self {
            beta: nu1 * vv - gg,
            sigma: vec![0.25, 0.25],
            kappa: vec![0.0, 0.0],
            truncation: 0,
            tail_bound: 0.0,
            vv,
            nu1,
            nu2: 5.0 * pi2,
            projections: None,
        }
    }

    pub fn branch_count(&self) -> usize {
        self.sigma.len()
    }
}

/// Dyadic-block estimate of Σ_{n>N} t_n with a factor-2 safety margin.
fn tail_estimate(terms: &[f64]) -> f64 {
    let n = terms.len();
    if n < 8 {
        return 0.0;
    }
    let s2: f64 = terms[n / 2..].iter().sum();
    let s1: f64 = terms[n / 4..n / 2].iter().sum();
    // Projections that vanish analytically come out as rounding noise.
    if s2 <= 1e-24 {
        return s2;
    }
    if s1 <= 0.0 {
        return 2.0 * s2;
    }
    let r = s2 / s1;
    if r >= 1.0 {
        // Not visibly summable; report the last block as a floor.
        return f64::INFINITY;
    }
    2.0 * s2 * r / (1.0 - r)
}

/// Default mode truncation for traces and κ sums.
pub const DEFAULT_TRUNCATION: usize = 32;

/// Coefficients of `trial` on `spec`, using closed forms where available.
pub fn coefficients(trial: &dyn TrialFunction, spec: &WaveguideSpec, modes: usize) -> Result<ConditionCoefficients> {
    coefficients_with(trial, spec, modes, true)
}

/// Coefficients by quadrature only (closed forms ignored).
pub fn coefficients_numeric(trial: &dyn TrialFunction, spec: &WaveguideSpec, modes: usize) -> Result<ConditionCoefficients> {
    coefficients_with(trial, spec, modes, false)
}

fn coefficients_with(
    trial: &dyn TrialFunction,
    spec: &WaveguideSpec,
    modes: usize,
    closed_forms: bool,
) -> Result<ConditionCoefficients> {
    if modes < 2 {
        return Err(Error::InvalidParameter(format!("truncation N = {modes} must be at least 2")));
    }
    spec.validate()?;
    let basis = TransverseBasis::default();
    let (vv, gg) = match trial.integrals().filter(|_| closed_forms) {
        Some(c) => (c.vv, c.gg),
        None => {
            let vv = integrate_basic(&spec.basic, &|p| trial.value(p).powi(2))?;
            let gg = integrate_basic(&spec.basic, &|p| {
                let g = trial.gradient(p);
                g[0] * g[0] + g[1] * g[1]
            })?;
            (vv, gg)
        }
    };
    let mut projections = Vec::with_capacity(spec.branches.len());
    for branch in &spec.branches {
        let mut proj = Vec::with_capacity(modes);
        for n in 1..=modes {
            let closed = if closed_forms { trial.trace_coefficient(branch.attachment, n) } else { None };
            let c = match closed {
                Some(c) => c,
                None => {
                    integrate_adaptive_split(
                        |s| trial.value(branch.to_global(0.0, s)) * basis.psi(n, s),
                        0.0,
                        1.0,
                        n + 1,
                        1e-15,
                        1e-13,
                    )?
                    .value
                }
            };
            proj.push(c);
        }
        projections.push(proj);
    }
    let coeffs = ConditionCoefficients::from_projections(vv, gg, projections, &basis);
    if !coeffs.tail_bound.is_finite() {
        return Err(Error::Series(format!(
            "κ tail does not decay within N = {modes} modes for trial `{}`",
            trial.name()
        )));
    }
    Ok(coeffs)
}

/// Tensor or polar Gauss quadrature over Ω, refined until two successive
/// levels agree to 1e−10 relative.
pub fn integrate_basic(basic: &BasicDomainSpec, f: &dyn Fn(Point) -> f64) -> Result<f64> {
    let rule = GaussLegendre::new(10);
    let level_value = |level: u32| -> Result<f64> {
        match basic {
            BasicDomainSpec::UnitSquare | BasicDomainSpec::CoupledSquare { .. } => {
                let cells = 1usize << level;
                let h = 1.0 / cells as f64;
                let mut sum = 0.0;
                for i in 0..cells {
                    let x0 = -1.0 + i as f64 * h;
                    for j in 0..cells {
                        let y0 = -1.0 + j as f64 * h;
                        for (x, wx) in rule.mapped(x0, x0 + h) {
                            for (y, wy) in rule.mapped(y0, y0 + h) {
                                sum += wx * wy * f([x, y]);
                            }
                        }
                    }
                }
                Ok(sum)
            }
            BasicDomainSpec::QuarterDisk => {
                // Geometric grading towards the centre absorbs r^{−α} factors.
                let rings = 24 + 8 * level as usize;
                let mut radial = vec![0.0];
                radial.extend((0..=rings).rev().map(|k| 0.5f64.powi(k as i32)));
                let sectors = 1usize << level;
                let dphi = 0.5 * PI / sectors as f64;
                let mut sum = 0.0;
                for w in radial.windows(2) {
                    for (r, wr) in rule.mapped(w[0], w[1]) {
                        for s in 0..sectors {
                            let p0 = s as f64 * dphi;
                            for (phi, wp) in rule.mapped(p0, p0 + dphi) {
                                sum += wr * wp * r * f([-r * phi.sin(), -r * phi.cos()]);
                            }
                        }
                    }
                }
                Ok(sum)
            }
            other => Err(Error::InvalidParameter(format!("no trial-function quadrature for {other:?}"))),
        }
    };
    let mut prev = level_value(1)?;
    for level in 2..=7 {
        let cur = level_value(level)?;
        if (cur - prev).abs() <= 1e-10 * cur.abs().max(1e-300) || (cur - prev).abs() < 1e-15 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!("integral over {basic:?} did not settle (last {prev:e})")))
}

/// Sample points on ∂Ω away from every interface.
pub fn exterior_boundary_samples(spec: &WaveguideSpec, count: usize) -> Vec<Point> {
    let attached: Vec<Side> = spec.branches.iter().map(|b| b.attachment).collect();
    let mut pieces: Vec<Box<dyn Fn(f64) -> Point>> = Vec::new();
    let straight = |side: Side| -> Box<dyn Fn(f64) -> Point> {
        let seg = side.segment();
        Box::new(move |t| seg.point_at(t))
    };
    match spec.basic {
        BasicDomainSpec::QuarterDisk => {
            pieces.push(Box::new(|t| {
                let phi = 0.5 * PI * t;
                [-phi.sin(), -phi.cos()]
            }));
            for side in [Side::Right, Side::Top] {
                if !attached.contains(&side) {
                    pieces.push(straight(side));
                }
            }
        }
        BasicDomainSpec::UnitSquare | BasicDomainSpec::CoupledSquare { .. } => {
            for side in [Side::Right, Side::Top, Side::Left, Side::Bottom] {
                if !attached.contains(&side) {
                    pieces.push(straight(side));
                }
            }
        }
        _ => {}
    }
    if pieces.is_empty() {
        return Vec::new();
    }
    let per = count.div_ceil(pieces.len());
    pieces
        .iter()
        .flat_map(|p| (0..per).map(move |k| p((k as f64 + 0.5) / per as f64)))
        .collect()
}

/// Check that `trial` vanishes on the exterior boundary of Ω.
pub fn check_admissible(trial: &dyn TrialFunction, spec: &WaveguideSpec) -> Result<()> {
    for p in exterior_boundary_samples(spec, 1000) {
        let v = trial.value(p);
        if v.abs() >= 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "trial `{}` is {v:e} at boundary point {p:?}",
                trial.name()
            )));
        }
    }
    Ok(())
}

/// Evaluation of the sufficient condition for given branch lengths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub beta: f64,
    pub sigma: Vec<f64>,
    pub kappa: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub eta: Option<f64>,
    pub a_th: Option<f64>,
    pub mu_of_v: f64,
    pub decay_lower_bound: Option<f64>,
    pub truncation: usize,
    pub tail_bound: f64,
}

/// Default ε in coth(·) ≤ 1 + ε for the threshold η.
pub const DEFAULT_EPS_COTH: f64 = 1e-3;

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// Evaluate Σσ_i/a_i < β − Σκ_i coth(a_i√(ν₂−ν₁)).
pub fn check(coeffs: &ConditionCoefficients, lengths: &[f64]) -> Result<ConditionReport> {
    if lengths.len() != coeffs.branch_count() {
        return Err(Error::InvalidParameter(format!(
            "{} branch lengths given for {} branches",
            lengths.len(),
            coeffs.branch_count()
        )));
    }
    if let Some(a) = lengths.iter().find(|a| !(**a > 0.0)) {
        return Err(Error::InvalidParameter(format!("branch length {a} must be positive")));
    }
    let gap = (coeffs.nu2 - coeffs.nu1).sqrt();
    let lhs: f64 = coeffs.sigma.iter().zip(lengths).map(|(s, a)| s / a).sum();
    let rhs = coeffs.beta - coeffs.kappa.iter().zip(lengths).map(|(k, a)| k * coth(a * gap)).sum::<f64>();
    let satisfied = lhs < rhs;
    let mu_of_v = rayleigh_value(coeffs, lengths);
    let decay_lower_bound = (mu_of_v < coeffs.nu1).then(|| 2.0 * (coeffs.nu1 - mu_of_v).sqrt());
    let eta = threshold_eta(coeffs, DEFAULT_EPS_COTH).ok();
    let a_th = a_threshold(coeffs, coeffs.branch_count()).ok();
    Ok(ConditionReport {
        beta: coeffs.beta,
        sigma: coeffs.sigma.clone(),
        kappa: coeffs.kappa.clone(),
        lhs,
        rhs,
        satisfied,
        eta,
        a_th,
        mu_of_v,
        decay_lower_bound,
        truncation: coeffs.truncation,
        tail_bound: coeffs.tail_bound,
    })
}

/// Rayleigh quotient μ(v) of the reduced problem at λ = ν₁.
///
/// With per-mode projections this is exact up to truncation; otherwise the
/// κ form with coth(a√(ν₂−ν₁)) gives an upper bound.
pub fn rayleigh_value(coeffs: &ConditionCoefficients, lengths: &[f64]) -> f64 {
    let gg = coeffs.nu1 * coeffs.vv - coeffs.beta;
    let boundary: f64 = match &coeffs.projections {
        Some(projs) => {
            let basis = TransverseBasis::default();
            projs
                .iter()
                .zip(lengths)
                .map(|(proj, &a)| {
                    proj.iter()
                        .enumerate()
                        .map(|(k, c)| {
                            let n = k + 1;
                            let g = (basis.nu(n) - coeffs.nu1).max(0.0).sqrt();
                            crate::transverse::gamma_coth(g, a) * c * c
                        })
                        .sum::<f64>()
                })
                .sum()
        }
        None => {
            let gap = (coeffs.nu2 - coeffs.nu1).sqrt();
            coeffs
                .sigma
                .iter()
                .zip(&coeffs.kappa)
                .zip(lengths)
                .map(|((s, k), a)| s / a + k * coth(a * gap))
                .sum()
        }
    };
    (gg + boundary) / coeffs.vv
}

fn common_sigma(coeffs: &ConditionCoefficients) -> Result<f64> {
    let s0 = *coeffs
        .sigma
        .first()
        .ok_or_else(|| Error::InvalidParameter("no branches".into()))?;
    if coeffs.sigma.iter().any(|s| (s - s0).abs() > 1e-12 * s0.abs().max(1e-300)) {
        return Err(Error::UnequalSigma(coeffs.sigma.clone()));
    }
    if !(s0 > 0.0) {
        return Err(Error::InvalidParameter("σ = 0: the trial function does not reach the branches".into()));
    }
    Ok(s0)
}

/// η = β/σ − (1 + ε)Σκ_i/σ; the condition reads Σ 1/a_i < η.
pub fn threshold_eta(coeffs: &ConditionCoefficients, eps_coth: f64) -> Result<f64> {
    if eps_coth < 0.0 {
        return Err(Error::InvalidParameter(format!("ε = {eps_coth} must be nonnegative")));
    }
    let sigma = common_sigma(coeffs)?;
    let kappa: f64 = coeffs.kappa.iter().sum();
    Ok(coeffs.beta / sigma - (1.0 + eps_coth) * kappa / sigma)
}

/// Equal-length threshold: the root a of M/a = β/σ − (κ/σ) M coth(a√(ν₂−ν₁)).
pub fn a_threshold(coeffs: &ConditionCoefficients, branches: usize) -> Result<f64> {
    let sigma = common_sigma(coeffs)?;
    let m = branches as f64;
    let kappa = coeffs.kappa.iter().sum::<f64>() / coeffs.kappa.len().max(1) as f64;
    if kappa == 0.0 {
        if !(coeffs.beta > 0.0) {
            return Err(Error::NoRoot(format!("β = {} is not positive", coeffs.beta)));
        }
        return Ok(m * sigma / coeffs.beta);
    }
    let gap = (coeffs.nu2 - coeffs.nu1).sqrt();
    let limit = coeffs.beta / sigma - kappa / sigma * m;
    if !(limit > 0.0) {
        return Err(Error::NoRoot(format!("β/σ − Mκ/σ = {limit} is not positive")));
    }
    let f = |a: f64| Ok(coeffs.beta / sigma - kappa / sigma * m * coth(a * gap) - m / a);
    let mut hi = m / limit;
    while f(hi)? <= 0.0 {
        hi *= 2.0;
    }
    let root = bisect(f, 1e-12 * hi, hi, 1e-15 * hi, 0.0, 200)?;
    Ok(root.x)
}
