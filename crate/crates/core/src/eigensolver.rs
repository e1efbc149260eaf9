//! Smallest Dirichlet eigenpairs of catalog waveguides.
//!
//! The generalized problem K x = λ M x is solved by shift-invert block Krylov
//! iteration: the operator (K − σM)⁻¹M is self-adjoint in the M inner product,
//! its largest eigenvalues θ = 1/(λ − σ) belong to the smallest λ, and an
//! envelope Cholesky factorization makes each application two triangular
//! sweeps. The basis is kept M-orthonormal by classical Gram–Schmidt with
//! reorthogonalization and compressed by thick restarts onto Ritz vectors.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{assemble, DofMap};
use crate::geometry::{BasicDomainSpec, WaveguideSpec};
use crate::mesh::{generate_mesh, Mesh, Region, Snap};
use crate::optimize::bisect;
use crate::sparse::{rcm_ordering, CsrMatrix, EnvelopeCholesky};
use crate::transverse::{fit_decay, BranchProfiler, TransverseBasis};
use crate::CUTOFF;

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Relative residual target ‖Kx − λMx‖/max(|λ|, 1).
    pub tol: f64,
    /// Block size; defaults to clamp(count, 2, 4).
    pub block: Option<usize>,
    /// Maximum basis size before a thick restart.
    pub basis: usize,
    pub max_applications: usize,
    /// Fixed shift; by default σ = 0, lowered if K is not positive definite.
    pub shift: Option<f64>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-8, block: None, basis: 48, max_applications: 6000, shift: None }
    }
}

/// Eigenpairs in the unknown (free dof) numbering, ascending.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub applications: usize,
    pub shift: f64,
}

impl EigenPairs {
    /// Index pairs (i, i+1) whose eigenvalues agree within `rel`.
    pub fn degenerate_pairs(&self, rel: f64) -> Vec<(usize, usize)> {
        degenerate_pairs(&self.values, rel)
    }
}

fn degenerate_pairs(values: &[f64], rel: f64) -> Vec<(usize, usize)> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[1] - w[0]).abs() <= rel * w[0].abs().max(w[1].abs()))
        .map(|(i, _)| (i, i + 1))
        .collect()
}

/// Deterministic linear congruential fill for start vectors.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    fn vector(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next()).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn combine(vs: &[Vec<f64>], coeffs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0; vs[0].len()];
    for (v, c) in vs.iter().zip(coeffs) {
        if c != 0.0 {
            axpy(c, v, &mut out);
        }
    }
    out
}

/// Factor K − σM, lowering σ below the spectrum if K is not positive definite.
fn factor_shifted(k: &CsrMatrix, m: &CsrMatrix, shift: Option<f64>) -> Result<(EnvelopeCholesky, f64)> {
    let pattern = k.add_scaled(m, 0.0);
    let perm = rcm_ordering(&pattern);
    if let Some(s) = shift {
        return Ok((EnvelopeCholesky::with_ordering(&k.add_scaled(m, -s), perm)?, s));
    }
    match EnvelopeCholesky::with_ordering(&pattern, perm.clone()) {
        Ok(c) => return Ok((c, 0.0)),
        Err(Error::Factorization { .. }) => {}
        Err(e) => return Err(e),
    }
    // λ_min(K, M) ≥ g / λ_min(M) for a Gershgorin bound g < 0, and the P1
    // mass matrix satisfies λ_min(M) ≥ min(lumped)/4.
    let min_lumped = m.row_sums().into_iter().fold(f64::INFINITY, f64::min);
    let floor = k.gershgorin_lower().min(0.0) / (0.25 * min_lumped) - 1.0;
    let mut s = -1.0;
    loop {
        match EnvelopeCholesky::with_ordering(&k.add_scaled(m, -s), perm.clone()) {
            Ok(c) => return Ok((c, s)),
            Err(e @ Error::Factorization { .. }) => {
                if s < floor {
                    return Err(e);
                }
                s *= 4.0;
            }
            Err(e) => return Err(e),
        }
    }
}

/// The `count` smallest eigenpairs of K x = λ M x.
pub fn smallest_eigenpairs(k: &CsrMatrix, m: &CsrMatrix, count: usize, tol: f64) -> Result<EigenPairs> {
    smallest_eigenpairs_with(k, m, count, &EigenOptions { tol, ..EigenOptions::default() })
}

pub fn smallest_eigenpairs_with(k: &CsrMatrix, m: &CsrMatrix, count: usize, opts: &EigenOptions) -> Result<EigenPairs> {
    let n = k.dim();
    if count == 0 || n == 0 {
        return Err(Error::InvalidParameter("need at least one eigenpair and one unknown".into()));
    }
    let count = count.min(n);
    let lumped = m.row_sums();
    let mut pairs = if n <= 120 {
        dense_eigenpairs(k, m, count)?
    } else {
        krylov(k, m, count, opts, &lumped)?
    };
    for x in &mut pairs.vectors {
        normalize_sign(x);
    }
    pairs.residuals = pairs
        .values
        .iter()
        .zip(&pairs.vectors)
        .map(|(&l, x)| residual(k, m, &lumped, l, x))
        .collect();
    Ok(pairs)
}

/// ‖Kx − λMx‖ in the lumped M⁻¹ norm, relative to max(|λ|, 1).
fn residual(k: &CsrMatrix, m: &CsrMatrix, lumped: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let kx = k.mul_vec(x);
    let mx = m.mul_vec(x);
    let s: f64 = kx.iter().zip(&mx).zip(lumped).map(|((a, b), w)| (a - lambda * b).powi(2) / w).sum();
    s.sqrt() / lambda.abs().max(1.0)
}

/// Make the largest-magnitude entry (lowest index on ties) positive.
fn normalize_sign(x: &mut [f64]) {
    let mut best = 0usize;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() * (1.0 + 1e-9) {
            best = i;
        }
    }
    if x.get(best).is_some_and(|v| *v < 0.0) {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

fn to_dense(a: &CsrMatrix) -> DMatrix<f64> {
    let n = a.dim();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, v) in a.row(i) {
            d[(i, j)] = v;
        }
    }
    d
}

/// Small problems: reduce to a standard symmetric problem with Cholesky of M.
fn dense_eigenpairs(k: &CsrMatrix, m: &CsrMatrix, count: usize) -> Result<EigenPairs> {
    let kd = to_dense(k);
    let md = to_dense(m);
    let chol = md
        .cholesky()
        .ok_or_else(|| Error::Factorization { row: 0, pivot: f64::NAN })?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Factorization { row: 0, pivot: f64::NAN })?;
    let c = &linv * kd * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lt_inv = linv.transpose();
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    for &i in order.iter().take(count) {
        values.push(eig.eigenvalues[i]);
        let y = &lt_inv * eig.eigenvectors.column(i);
        vectors.push(y.iter().copied().collect());
    }
    Ok(EigenPairs { values, vectors, residuals: Vec::new(), applications: 0, shift: 0.0 })
}

fn krylov(k: &CsrMatrix, m: &CsrMatrix, count: usize, opts: &EigenOptions, lumped: &[f64]) -> Result<EigenPairs> {
    let n = k.dim();
    let (chol, shift) = factor_shifted(k, m, opts.shift)?;
    let block = opts.block.unwrap_or(count.clamp(2, 4)).max(1);
    let basis_cap = opts.basis.max(count + 3 * block + 4).min(n);
    let keep = (count + block).max(basis_cap / 2).min(basis_cap - block);
    let apply = |x: &[f64]| chol.solve(&m.mul_vec(x));

    let mut rng = Lcg(0x7261_7070_6564);
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(basis_cap);
    let mut mv: Vec<Vec<f64>> = Vec::with_capacity(basis_cap);
    let mut w: Vec<Vec<f64>> = Vec::with_capacity(basis_cap);
    let mut h = DMatrix::<f64>::zeros(basis_cap, basis_cap);
    let mut applications = 0usize;
    let mut candidates: Vec<Vec<f64>> = (0..block).map(|_| rng.vector(n)).collect();

    loop {
        // Expand the basis with the orthogonalized candidates.
        let first_new = v.len();
        for cand in candidates.drain(..) {
            if v.len() >= basis_cap {
                break;
            }
            let mut x = cand;
            let mut accepted = false;
            for _attempt in 0..4 {
                let norm0 = dot(&x, &m.mul_vec(&x)).sqrt();
                let mut prev = norm0;
                let mut mx = m.mul_vec(&x);
                let mut norm = norm0;
                // Repeat Gram–Schmidt until a pass no longer cancels much.
                for _pass in 0..4 {
                    let coeffs: Vec<f64> = mv.iter().map(|q| dot(q, &x)).collect();
                    for (q, c) in v.iter().zip(coeffs) {
                        axpy(-c, q, &mut x);
                    }
                    mx = m.mul_vec(&x);
                    norm = dot(&x, &mx).sqrt();
                    if norm > 0.5 * prev {
                        break;
                    }
                    prev = norm;
                }
                if norm > 1e-14 * norm0 && norm > 0.0 {
                    let inv = 1.0 / norm;
                    x.iter_mut().for_each(|e| *e *= inv);
                    v.push(x);
                    mv.push(mx.into_iter().map(|e| e * inv).collect());
                    accepted = true;
                    break;
                }
                x = rng.vector(n);
            }
            if !accepted {
                break;
            }
        }
        for j in first_new..v.len() {
            let wj = apply(&v[j]);
            applications += 1;
            for i in 0..=j {
                let hij = dot(&mv[i], &wj);
                h[(i, j)] = hij;
                h[(j, i)] = hij;
            }
            w.push(wj);
        }
        let dim = v.len();

        // Rayleigh–Ritz on the projected operator.
        let hs = h.view((0, 0), (dim, dim)).into_owned();
        let eig = SymmetricEigen::new((&hs + hs.transpose()) * 0.5);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let wanted = count.min(dim);
        let mut values = Vec::with_capacity(wanted);
        let mut vectors = Vec::with_capacity(wanted);
        let mut residuals = Vec::with_capacity(wanted);
        for &idx in order.iter().take(wanted) {
            let theta = eig.eigenvalues[idx];
            let lambda = shift + 1.0 / theta;
            let y = combine(&v, eig.eigenvectors.column(idx).iter().copied());
            residuals.push(residual(k, m, lumped, lambda, &y));
            values.push(lambda);
            vectors.push(y);
        }
        let worst = residuals.iter().cloned().fold(0.0, f64::max);
        if wanted == count && worst < opts.tol {
            return Ok(EigenPairs { values, vectors, residuals, applications, shift });
        }
        if applications >= opts.max_applications || (dim == n && first_new == dim) {
            return Err(Error::NonConvergence { applications, residual: worst });
        }

        // Next block: images of the leading unconverged Ritz vectors.
        let mut picks: Vec<usize> = (0..wanted).filter(|&i| residuals[i] >= opts.tol).collect();
        picks.extend(wanted..dim.min(wanted + block));
        picks.truncate(block);
        if picks.is_empty() {
            picks.push(0);
        }
        candidates = picks
            .iter()
            .map(|&i| combine(&w, eig.eigenvectors.column(order[i]).iter().copied()))
            .collect();

        // Thick restart onto the leading Ritz vectors.
        if dim + block > basis_cap {
            let kept = keep.min(dim);
            let mut nv = Vec::with_capacity(basis_cap);
            let mut nmv = Vec::with_capacity(basis_cap);
            let mut nw = Vec::with_capacity(basis_cap);
            h.fill(0.0);
            for (slot, &idx) in order.iter().take(kept).enumerate() {
                let s = eig.eigenvectors.column(idx);
                nv.push(combine(&v, s.iter().copied()));
                nmv.push(combine(&mv, s.iter().copied()));
                nw.push(combine(&w, s.iter().copied()));
                h[(slot, slot)] = eig.eigenvalues[idx];
            }
            v = nv;
            mv = nmv;
            w = nw;
        }
    }
}

/// Default element size: 1/32 for rectilinear domains, 1/48 with a curved arc.
pub fn default_h(spec: &WaveguideSpec) -> f64 {
    match spec.basic {
        BasicDomainSpec::QuarterDisk => 1.0 / 48.0,
        _ => 1.0 / 32.0,
    }
}

/// Eigenvalues computed on one mesh.
#[derive(Debug, Clone, Serialize)]
pub struct Level {
    pub h: f64,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub unknowns: usize,
    pub applications: usize,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub domain: String,
    /// One level at h, or two (h and h/2) when extrapolating.
    pub levels: Vec<Level>,
    /// Richardson values (4λ_{h/2} − λ_h)/3.
    pub extrapolated: Option<Vec<f64>>,
    pub degenerate: Vec<(usize, usize)>,
    /// Finest mesh and its nodal eigenvectors (M-normalized).
    pub mesh: Mesh,
    pub eigenvectors: Vec<Vec<f64>>,
    pub snaps: Vec<Snap>,
}

impl SpectrumResult {
    pub fn h(&self) -> f64 {
        self.levels[0].h
    }

    /// Extrapolated eigenvalues when available, else those of the finest mesh.
    pub fn eigenvalues(&self) -> &[f64] {
        self.extrapolated
            .as_deref()
            .unwrap_or(&self.levels.last().expect("at least one level").eigenvalues)
    }

    pub fn over_pi2(&self) -> Vec<f64> {
        self.eigenvalues().iter().map(|l| l / (PI * PI)).collect()
    }

    /// |λ_extrap − λ_{h/2}|, an estimate of the remaining discretization error.
    pub fn extrapolation_error(&self) -> Option<Vec<f64>> {
        let ex = self.extrapolated.as_ref()?;
        let fine = &self.levels.last()?.eigenvalues;
        Some(ex.iter().zip(fine).map(|(a, b)| (a - b).abs()).collect())
    }

    pub fn max_residual(&self) -> f64 {
        self.levels.iter().flat_map(|l| l.residuals.iter().copied()).fold(0.0, f64::max)
    }
}

/// Eigenpairs of one mesh, with nodal eigenvectors.
pub fn solve_mesh(mesh: &Mesh, count: usize) -> Result<(Level, Vec<Vec<f64>>, DofMap)> {
    let sys = assemble(mesh)?;
    let pairs = smallest_eigenpairs(&sys.stiffness, &sys.mass, count, EigenOptions::default().tol)?;
    let vectors = pairs.vectors.iter().map(|x| sys.dofs.expand(x)).collect();
    let level = Level {
        h: mesh.h,
        eigenvalues: pairs.values,
        residuals: pairs.residuals,
        unknowns: sys.dofs.len(),
        applications: pairs.applications,
    };
    Ok((level, vectors, sys.dofs))
}

/// Solve at h only, without extrapolation.
pub fn solve_domain_single(spec: &WaveguideSpec, h: f64, count: usize) -> Result<SpectrumResult> {
    let mesh = generate_mesh(spec, h, Region::FullDomain)?;
    let (level, vectors, _) = solve_mesh(&mesh, count)?;
    Ok(SpectrumResult {
        domain: spec.name.clone(),
        degenerate: degenerate_pairs(&level.eigenvalues, 1e-8),
        levels: vec![level],
        extrapolated: None,
        snaps: mesh.snaps.clone(),
        mesh,
        eigenvectors: vectors,
    })
}

/// Solve at h and h/2 and attach Richardson-extrapolated eigenvalues.
pub fn solve_domain(spec: &WaveguideSpec, h: f64, count: usize) -> Result<SpectrumResult> {
    let coarse = generate_mesh(spec, h, Region::FullDomain)?;
    let (coarse_level, _, _) = solve_mesh(&coarse, count)?;
    let fine = generate_mesh(spec, h / 2.0, Region::FullDomain)?;
    let (fine_level, vectors, _) = solve_mesh(&fine, count)?;
    let extrapolated = coarse_level
        .eigenvalues
        .iter()
        .zip(&fine_level.eigenvalues)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    let mut snaps = coarse.snaps.clone();
    snaps.extend(fine.snaps.iter().cloned());
    Ok(SpectrumResult {
        domain: spec.name.clone(),
        degenerate: degenerate_pairs(&fine_level.eigenvalues, 1e-8),
        levels: vec![coarse_level, fine_level],
        extrapolated: Some(extrapolated),
        mesh: fine,
        eigenvectors: vectors,
        snaps,
    })
}

/// Branch length at which the extrapolated λ₁ crosses π².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AMin {
    pub a: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

/// Bisection for a_min on a one-parameter family a ↦ spec(a).
pub fn find_a_min<F>(family: F, bracket: (f64, f64), h: f64) -> Result<AMin>
where
    F: Fn(f64) -> Result<WaveguideSpec>,
{
    let root = bisect(
        |a| {
            let spec = family(a)?;
            Ok(solve_domain(&spec, h, 1)?.eigenvalues()[0] - CUTOFF)
        },
        bracket.0,
        bracket.1,
        5e-3,
        0.0,
        60,
    )?;
    Ok(AMin { a: root.x, iterations: root.iterations, bracket: root.bracket })
}

/// Cross-section energy profile of one branch with decay diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct DecayProfile {
    pub branch: usize,
    /// (x, I(x), I(0)·e^{−2γ₁x})
    pub samples: Vec<(f64, f64, f64)>,
    /// 2√(π² − λ).
    pub expected_rate: f64,
    /// 2γ from fitting C·sinh²(γ(a − x)) on the middle half of the branch.
    pub fitted_rate: f64,
    /// Plain least-squares slope of ln I on the middle half.
    pub log_slope: f64,
    /// max over samples of I(x) / (I(0)·e^{−2γ₁x}).
    pub bound_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeVerdict {
    pub index: usize,
    pub lambda: f64,
    pub trapped: bool,
    pub profiles: Vec<DecayProfile>,
}

const PROFILE_SAMPLES: usize = 81;

/// Classify modes as trapped (λ < π²) and attach branch decay profiles.
pub fn localization_verdict(result: &SpectrumResult, spec: &WaveguideSpec) -> Result<Vec<ModeVerdict>> {
    let basis = TransverseBasis::default();
    let profiler = BranchProfiler::new(&result.mesh, spec);
    let mut out = Vec::new();
    for (index, &lambda) in result.eigenvalues().iter().enumerate() {
        let trapped = lambda < basis.nu(1);
        let mut profiles = Vec::new();
        if trapped {
            let expected = 2.0 * (basis.nu(1) - lambda).sqrt();
            for (b, branch) in spec.branches.iter().enumerate() {
                let prof = profiler.profile(&result.eigenvectors[index], b, PROFILE_SAMPLES)?;
                let i0 = prof[0].1;
                let a = branch.length;
                let fit = fit_decay(&prof, a, 0.25 * a, 0.75 * a)?;
                let samples: Vec<(f64, f64, f64)> =
                    prof.iter().map(|&(x, i)| (x, i, i0 * (-expected * x).exp())).collect();
                let bound_ratio = samples
                    .iter()
                    .filter(|s| s.2 > 0.0)
                    .map(|s| s.1 / s.2)
                    .fold(0.0, f64::max);
                profiles.push(DecayProfile {
                    branch: b,
                    samples,
                    expected_rate: expected,
                    fitted_rate: fit.rate,
                    log_slope: fit.log_slope,
                    bound_ratio,
                });
            }
        }
        out.push(ModeVerdict { index, lambda, trapped, profiles });
    }
    Ok(out)
}
