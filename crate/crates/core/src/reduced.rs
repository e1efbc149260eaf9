//! Reduced eigenproblem on Ω with Dirichlet-to-Neumann boundary terms.
//!
//! For 0 < λ ≤ π² the branches are replaced by
//! T_i(λ)u = Σ_n γ_n coth(γ_n a_i) (u, ψ_n)_{Γ_i} ψ_n, and μ₁(λ) is the
//! smallest eigenvalue of (∇u,∇v) + Σ_i (T_i(λ)u, v) = μ(u, v) on Ω.
//! A trapped mode exists iff μ₁(π²) < π², and then λ = μ₁(λ) has a root.

use serde::Serialize;

use crate::eigensolver::{smallest_eigenpairs, EigenOptions};
use crate::error::{Error, Result};
use crate::fem::{assemble, System};
use crate::geometry::WaveguideSpec;
use crate::mesh::{generate_mesh, Mesh, Region};
use crate::quadrature::GaussLegendre;
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::transverse::{dtn_coefficient, TransverseBasis};
use crate::CUTOFF;

/// Default number of DtN modes per branch.
pub const DEFAULT_MODES: usize = 32;

/// p with pᵀu ≈ (u|_Γ, ψ_n)_Γ for the P1 trace of u, in dof numbering.
#[derive(Debug, Clone)]
pub struct BoundaryProjection {
    pub branch: usize,
    pub mode: usize,
    /// (dof, weight) pairs; only interface dofs appear.
    pub weights: Vec<(usize, f64)>,
}

impl BoundaryProjection {
    pub fn apply(&self, u: &[f64]) -> f64 {
        self.weights.iter().map(|&(d, w)| w * u[d]).sum()
    }
}

fn projections_for(mesh: &Mesh, sys: &System, branch: usize, width: f64, modes: usize) -> Result<Vec<BoundaryProjection>> {
    let basis = TransverseBasis::new(width)?;
    let trace = mesh.interface_trace(branch)?;
    let rule = GaussLegendre::new(8);
    let mut out = Vec::with_capacity(modes);
    for n in 1..=modes {
        let mut acc = vec![0.0; trace.len()];
        for (k, pair) in trace.windows(2).enumerate() {
            let (y0, y1) = (pair[0].s * width, pair[1].s * width);
            for (y, w) in rule.mapped(y0, y1) {
                let t = (y - y0) / (y1 - y0);
                let psi = basis.psi(n, y);
                acc[k] += w * (1.0 - t) * psi;
                acc[k + 1] += w * t * psi;
            }
        }
        let weights = trace
            .iter()
            .zip(acc)
            .filter_map(|(p, w)| sys.dofs.node_dof[p.node].map(|d| (d, w)))
            .collect();
        out.push(BoundaryProjection { branch, mode: n, weights });
    }
    Ok(out)
}

/// Stiffness and mass on Ω with the boundary projections of every branch.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    pub spec: WaveguideSpec,
    pub mesh: Mesh,
    pub system: System,
    /// projections[i][n−1]
    pub projections: Vec<Vec<BoundaryProjection>>,
    pub modes: usize,
    /// +1 normally; −1 flips every DtN coefficient (negative control only).
    pub coefficient_sign: f64,
    bases: Vec<TransverseBasis>,
}

impl ReducedProblem {
    pub fn new(spec: &WaveguideSpec, h: f64, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidParameter("DtN truncation must be at least 1".into()));
        }
        let mesh = generate_mesh(spec, h, Region::BasicOnly)?;
        let system = assemble(&mesh)?;
        let mut projections = Vec::with_capacity(spec.branches.len());
        let mut bases = Vec::with_capacity(spec.branches.len());
        for (i, b) in spec.branches.iter().enumerate() {
            projections.push(projections_for(&mesh, &system, i, b.width, modes)?);
            bases.push(TransverseBasis::new(b.width)?);
        }
        Ok(Self { spec: spec.clone(), mesh, system, projections, modes, coefficient_sign: 1.0, bases })
    }

    /// The same problem with every DtN coefficient negated.
    pub fn negated(&self) -> Self {
        Self { coefficient_sign: -self.coefficient_sign, ..self.clone() }
    }

    fn check_lambda(&self, lambda: f64) -> Result<()> {
        let cutoff = self.bases.iter().map(|b| b.nu(1)).fold(f64::INFINITY, f64::min);
        if !(lambda > 0.0 && lambda <= cutoff * (1.0 + 1e-14)) {
            return Err(Error::InvalidParameter(format!("λ = {lambda} outside (0, {cutoff}]")));
        }
        Ok(())
    }

    /// γ_n coth(γ_n a_i) for each branch and mode.
    pub fn coefficients(&self, lambda: f64) -> Result<Vec<Vec<f64>>> {
        self.check_lambda(lambda)?;
        self.spec
            .branches
            .iter()
            .zip(&self.bases)
            .map(|(b, basis)| {
                (1..=self.modes)
                    .map(|n| {
                        // Round λ down onto ν₁ so γ₁ = 0 at the cut-off.
                        let l = lambda.min(basis.nu(1));
                        dtn_coefficient(n, l, b.length, basis).map(|c| c * self.coefficient_sign)
                    })
                    .collect()
            })
            .collect()
    }

    /// Σ_i (T_i(λ)u, u) for a dof vector u.
    pub fn boundary_form(&self, lambda: f64, u: &[f64]) -> Result<f64> {
        let coeffs = self.coefficients(lambda)?;
        Ok(self
            .projections
            .iter()
            .zip(&coeffs)
            .flat_map(|(ps, cs)| ps.iter().zip(cs).map(|(p, c)| c * p.apply(u).powi(2)))
            .sum())
    }

    /// K + Σ c_{i,n} p_{i,n} p_{i,n}ᵀ.
    pub fn operator(&self, lambda: f64) -> Result<CsrMatrix> {
        let coeffs = self.coefficients(lambda)?;
        let k = &self.system.stiffness;
        let mut b = TripletBuilder::new(k.dim());
        for (ps, cs) in self.projections.iter().zip(&coeffs) {
            for (p, &c) in ps.iter().zip(cs) {
                for &(i, wi) in &p.weights {
                    for &(j, wj) in &p.weights {
                        b.push(i, j, c * wi * wj);
                    }
                }
            }
        }
        Ok(k.add_scaled(&b.build(), 1.0))
    }

    /// Smallest eigenvalue μ₁(λ).
    pub fn mu1(&self, lambda: f64) -> Result<f64> {
        let a = self.operator(lambda)?;
        let opts = EigenOptions::default();
        let pairs = smallest_eigenpairs(&a, &self.system.mass, 1, opts.tol)?;
        Ok(pairs.values[0])
    }
}

/// μ₁(λ) on a fresh mesh of Ω.
pub fn mu1(lambda: f64, spec: &WaveguideSpec, h: f64, modes: usize) -> Result<f64> {
    ReducedProblem::new(spec, h, modes)?.mu1(lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneCheck {
    pub monotone: bool,
    /// (λ, μ₁(λ))
    pub samples: Vec<(f64, f64)>,
}

/// Sample μ₁ on an increasing grid and check it is nonincreasing up to
/// solver tolerance.
pub fn verify_monotone(problem: &ReducedProblem, grid: &[f64]) -> Result<MonotoneCheck> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("λ grid must be strictly increasing".into()));
    }
    let samples = grid
        .iter()
        .map(|&l| problem.mu1(l).map(|m| (l, m)))
        .collect::<Result<Vec<_>>>()?;
    let monotone = samples
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 + 1e-8 * w[0].1.abs().max(1.0));
    Ok(MonotoneCheck { monotone, samples })
}

/// Evenly spaced grid of `count` points in (0, π²], ending at π².
pub fn lambda_grid(count: usize) -> Vec<f64> {
    (1..=count).map(|k| CUTOFF * k as f64 / count as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPoint {
    pub mu1_at_pi2: f64,
    /// Root of μ₁(λ) = λ, if μ₁(π²) < π².
    pub lambda: Option<f64>,
    pub iterations: usize,
}

/// Solve μ₁(λ) = λ by bisection on g(λ) = μ₁(λ) − λ.
pub fn fixed_point(problem: &ReducedProblem, tol: f64) -> Result<FixedPoint> {
    let g = |l: f64| problem.mu1(l).map(|m| m - l);
    let at_cutoff = g(CUTOFF)?;
    let mu1_at_pi2 = at_cutoff + CUTOFF;
    if at_cutoff >= 0.0 {
        return Ok(FixedPoint { mu1_at_pi2, lambda: None, iterations: 0 });
    }
    let mut lo = CUTOFF / 2.0;
    let mut halvings = 0;
    while g(lo)? <= 0.0 {
        halvings += 1;
        if halvings > 20 {
            return Err(Error::NoRoot(format!("μ₁(λ) − λ stays negative down to λ = {lo:e}")));
        }
        lo /= 2.0;
    }
    let root = crate::optimize::bisect(g, lo, CUTOFF, 1e-12 * CUTOFF, tol, 200)?;
    Ok(FixedPoint { mu1_at_pi2, lambda: Some(root.x), iterations: root.iterations + halvings })
}
