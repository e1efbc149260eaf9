//! Branch cross-section analysis: transverse modes, decay exponents,
//! Dirichlet-to-Neumann coefficients and decay profiles along branches.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::WaveguideSpec;
use crate::mesh::{Mesh, PointLocator};
use crate::optimize::golden_min;
use crate::quadrature::GaussLegendre;

/// Dirichlet eigenbasis of the cross-section [0, b].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseBasis {
    pub width: f64,
}

impl Default for TransverseBasis {
    fn default() -> Self {
        Self { width: 1.0 }
    }
}

impl TransverseBasis {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidParameter(format!("cross-section width {width} must be positive")));
        }
        Ok(Self { width })
    }

    /// ν_n = π²n²/b²
    pub fn nu(&self, n: usize) -> f64 {
        let k = PI * n as f64 / self.width;
        k * k
    }

    /// ψ_n(y) = √(2/b)·sin(πny/b)
    pub fn psi(&self, n: usize, y: f64) -> f64 {
        (2.0 / self.width).sqrt() * (PI * n as f64 * y / self.width).sin()
    }
}

/// Longitudinal exponent of branch mode n at spectral parameter λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    /// λ ≤ ν_n: γ = √(ν_n − λ), the mode decays like e^{−γx}.
    Decaying(f64),
    /// λ > ν_n: the mode oscillates with wavenumber √(λ − ν_n).
    Oscillatory(f64),
}

impl Gamma {
    pub fn magnitude(self) -> f64 {
        match self {
            Gamma::Decaying(g) | Gamma::Oscillatory(g) => g,
        }
    }
}

pub fn gamma(n: usize, lambda: f64, basis: &TransverseBasis) -> Gamma {
    let d = basis.nu(n) - lambda;
    if d >= 0.0 {
        Gamma::Decaying(d.sqrt())
    } else {
        Gamma::Oscillatory((-d).sqrt())
    }
}

/// γ·coth(γa), continuous through γ = 0.
pub fn gamma_coth(g: f64, a: f64) -> f64 {
    let x = g * a;
    if x.abs() < 1e-4 {
        let x2 = x * x;
        (1.0 + x2 / 3.0 - x2 * x2 / 45.0) / a
    } else {
        g / x.tanh()
    }
}

/// DtN coefficient γ_n coth(γ_n a) of a branch of length `a`.
pub fn dtn_coefficient(n: usize, lambda: f64, a: f64, basis: &TransverseBasis) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("branch length {a} must be positive")));
    }
    match gamma(n, lambda, basis) {
        Gamma::Decaying(g) => Ok(gamma_coth(g, a)),
        Gamma::Oscillatory(_) => Err(Error::InvalidParameter(format!(
            "λ = {lambda} exceeds ν_{n}; the DtN map is only used below the cut-off"
        ))),
    }
}

/// e^{−2γx} decay rate 2√(ν₁ − λ) of the energy on cross-sections.
pub fn decay_rate_bound(lambda: f64, basis: &TransverseBasis) -> Result<f64> {
    let nu1 = basis.nu(1);
    if lambda >= nu1 {
        return Err(Error::InvalidParameter(format!(
            "λ = {lambda} is not below the cut-off {nu1}; no exponential decay"
        )));
    }
    Ok(2.0 * (nu1 - lambda).sqrt())
}

/// Transverse mode coefficients c_n = (u|Γ_i, ψ_n) of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchTrace {
    pub branch: usize,
    pub coefficients: Vec<f64>,
    pub basis: TransverseBasis,
}

impl BranchTrace {
    pub fn new(branch: usize, coefficients: Vec<f64>, basis: TransverseBasis) -> Self {
        Self { branch, coefficients, basis }
    }

    /// Project a piecewise linear trace given by (s, value) samples, s ∈ [0,1].
    pub fn from_samples(branch: usize, samples: &[(f64, f64)], modes: usize, basis: TransverseBasis) -> Self {
        let rule = GaussLegendre::new(6);
        let b = basis.width;
        let coefficients = (1..=modes)
            .map(|n| {
                samples
                    .windows(2)
                    .map(|w| {
                        let ((s0, u0), (s1, u1)) = (w[0], w[1]);
                        rule.integrate(
                            |s| {
                                let t = (s - s0) / (s1 - s0);
                                (u0 + t * (u1 - u0)) * basis.psi(n, s * b)
                            },
                            s0,
                            s1,
                        ) * b
                    })
                    .sum()
            })
            .collect();
        Self { branch, coefficients, basis }
    }

    /// Trace of a nodal field on branch `branch`'s interface.
    pub fn from_mesh(mesh: &Mesh, values: &[f64], branch: usize, modes: usize) -> Result<Self> {
        let points = mesh.interface_trace(branch)?;
        let samples: Vec<(f64, f64)> = points.iter().map(|p| (p.s, values[p.node])).collect();
        Ok(Self::from_samples(branch, &samples, modes, TransverseBasis::default()))
    }

    pub fn truncation(&self) -> usize {
        self.coefficients.len()
    }

    /// |c_N|, the last retained coefficient.
    pub fn tail_magnitude(&self) -> f64 {
        self.coefficients.last().map_or(0.0, |c| c.abs())
    }
}

/// sinh(γ(a−x))/sinh(γa) without overflow; the γ → 0 limit is (a−x)/a.
fn sinh_ratio(g: f64, a: f64, x: f64) -> f64 {
    if g * a < 1e-8 {
        return (a - x) / a;
    }
    if g * a > 20.0 {
        let num = 1.0 - (-2.0 * g * (a - x)).exp();
        let den = 1.0 - (-2.0 * g * a).exp();
        (-g * x).exp() * num / den
    } else {
        (g * (a - x)).sinh() / (g * a).sinh()
    }
}

/// Branch solution Σ c_n · sinh(γ_n(a−x))/sinh(γ_n a) · ψ_n(y).
pub fn evaluate_branch_mode(trace: &BranchTrace, lambda: f64, a: f64, x: f64, y: f64) -> Result<f64> {
    if trace.coefficients.is_empty() {
        return Err(Error::InvalidParameter("branch trace has no modes".into()));
    }
    if !(a > 0.0) || x < -1e-12 || x > a + 1e-12 {
        return Err(Error::InvalidParameter(format!("x = {x} outside branch [0, {a}]")));
    }
    let mut sum = 0.0;
    for (k, c) in trace.coefficients.iter().enumerate() {
        let n = k + 1;
        let ratio = match gamma(n, lambda, &trace.basis) {
            Gamma::Decaying(g) => sinh_ratio(g, a, x),
            Gamma::Oscillatory(q) => (q * (a - x)).sin() / (q * a).sin(),
        };
        sum += c * ratio * trace.basis.psi(n, y);
    }
    Ok(sum)
}

/// Cross-section energies I_i(x) = ∫ u(x, y)² dy of a nodal field.
pub struct BranchProfiler<'a> {
    mesh: &'a Mesh,
    spec: &'a WaveguideSpec,
    locator: PointLocator<'a>,
    rule: GaussLegendre,
}

impl<'a> BranchProfiler<'a> {
    pub fn new(mesh: &'a Mesh, spec: &'a WaveguideSpec) -> Self {
        Self { mesh, spec, locator: PointLocator::new(mesh), rule: GaussLegendre::new(3) }
    }

    /// I_i(x) by composite Gauss quadrature of the linear interpolant.
    pub fn norm(&self, values: &[f64], branch: usize, x: f64) -> Result<f64> {
        let b = self.spec.branch(branch)?;
        if x < -1e-12 || x > b.length + 1e-12 {
            return Err(Error::InvalidParameter(format!("x = {x} outside branch [0, {}]", b.length)));
        }
        let x = x.clamp(0.0, b.length);
        // Four panels per mesh cell keep the kinks of the interpolant resolved.
        let panels = 4 * ((b.width / self.mesh.h).round() as usize).max(1);
        let dy = b.width / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let y0 = k as f64 * dy;
            let mut err = None;
            total += self.rule.integrate(
                |y| {
                    let p = b.to_global(x, y);
                    match self.locator.interpolate(values, p) {
                        Some(u) => u * u,
                        None => {
                            err = Some(p);
                            0.0
                        }
                    }
                },
                y0,
                y0 + dy,
            );
            if let Some(p) = err {
                return Err(Error::Mesh(format!("point {p:?} not covered by the mesh")));
            }
        }
        Ok(total)
    }

    /// I_i sampled at `count` equispaced positions on [0, a_i].
    pub fn profile(&self, values: &[f64], branch: usize, count: usize) -> Result<Vec<(f64, f64)>> {
        let a = self.spec.branch(branch)?.length;
        (0..count)
            .map(|k| {
                let x = a * k as f64 / (count - 1).max(1) as f64;
                self.norm(values, branch, x).map(|v| (x, v))
            })
            .collect()
    }
}

/// Decay rate estimates from a sampled cross-section energy profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// 2γ from the finite-branch model I(x) = C·sinh²(γ(a − x)).
    pub rate: f64,
    /// Least-squares slope of ln I(x), i.e. minus the apparent rate.
    pub log_slope: f64,
    pub samples: usize,
}

/// Fit the window [x0, x1] of a profile on a branch of length `a`.
///
/// On a finite branch the leading mode is sinh(γ(a − x)), not e^{−γx}; the
/// plain log slope overestimates the rate by coth(γ(a − x)), which matters on
/// short branches.
pub fn fit_decay(profile: &[(f64, f64)], a: f64, x0: f64, x1: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|(x, v)| *x >= x0 - 1e-12 && *x <= x1 + 1e-12 && *v > 0.0 && *x < a)
        .map(|&(x, v)| (x, v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidParameter("decay fit needs at least three positive samples".into()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let log_slope = sxy / sxx;

    // Residual of the sinh² model with the amplitude eliminated.
    let misfit = |g: f64| {
        let r: Vec<f64> = pts.iter().map(|&(x, ly)| ly - 2.0 * ln_sinh(g * (a - x))).collect();
        let mean = r.iter().sum::<f64>() / m;
        r.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    };
    let guess = (-0.5 * log_slope).max(1e-6);
    let (g, _) = golden_min(misfit, 0.1 * guess, 3.0 * guess + 1.0, 1e-10);
    Ok(DecayFit { rate: 2.0 * g, log_slope, samples: pts.len() })
}

fn ln_sinh(z: f64) -> f64 {
    if z > 20.0 {
        z - std::f64::consts::LN_2
    } else {
        z.sinh().ln()
    }
}
