//! Invariants that hold independently of any reference values.

use std::f64::consts::PI;

use proptest::prelude::*;
use trapmode::bentstrip::{self, EtaMethod};
use trapmode::condition::{self, CrossTrial, LShapeTrial, TrialFunction};
use trapmode::eigensolver::{solve_domain, solve_domain_single};
use trapmode::quadrature::{integrate_adaptive_split, GaussLegendre};
use trapmode::reduced::{fixed_point, ReducedProblem};
use trapmode::transverse::{dtn_coefficient, gamma, Gamma, TransverseBasis};
use trapmode::{build_domain, generate_mesh, Region, CUTOFF};

// ---------- transverse ----------

#[test]
fn transverse_modes_orthonormal() {
    let basis = TransverseBasis::default();
    let rule = GaussLegendre::new(64);
    for m in 1..=40 {
        for n in m..=40 {
            let ip: f64 = (0..8)
                .map(|k| rule.integrate(|y| basis.psi(m, y) * basis.psi(n, y), k as f64 / 8.0, (k + 1) as f64 / 8.0))
                .sum();
            let expect = if m == n { 1.0 } else { 0.0 };
            assert!((ip - expect).abs() < 1e-12, "(ψ_{m}, ψ_{n}) = {ip}");
        }
    }
}

#[test]
fn gamma_at_cutoff() {
    let basis = TransverseBasis::default();
    for n in 1..=10 {
        let g = gamma(n, CUTOFF, &basis);
        assert!(matches!(g, Gamma::Decaying(_)));
        assert!((g.magnitude() - PI * ((n * n - 1) as f64).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn dtn_continuous_at_cutoff() {
    let basis = TransverseBasis::default();
    for a in [0.5, 1.0, 3.0] {
        let mut prev = f64::INFINITY;
        for k in 4..=10 {
            let v = dtn_coefficient(1, CUTOFF - 10f64.powi(-k), a, &basis).unwrap();
            let err = (v - 1.0 / a).abs();
            assert!(err <= prev + 1e-15);
            prev = err;
        }
        assert!(prev < 1e-9);
    }
}

#[test]
fn dtn_saturates_for_long_branches() {
    let basis = TransverseBasis::default();
    let l = CUTOFF / 2.0;
    let v = dtn_coefficient(1, l, 10.0, &basis).unwrap();
    assert!((v - (CUTOFF - l).sqrt()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn dtn_decreasing_in_lambda(n in 1usize..20, a in 0.05f64..30.0, l1 in 0.01f64..0.99, dl in 0.001f64..0.5) {
        let basis = TransverseBasis::default();
        let lo = l1 * CUTOFF;
        let hi = (l1 + dl).min(1.0) * CUTOFF;
        prop_assume!(hi > lo * (1.0 + 1e-9));
        let c_lo = dtn_coefficient(n, lo, a, &basis).unwrap();
        let c_hi = dtn_coefficient(n, hi, a, &basis).unwrap();
        prop_assert!(c_hi < c_lo);
        prop_assert!(c_hi >= 0.0);
    }
}

// ---------- condition ----------

fn l_coeffs() -> condition::ConditionCoefficients {
    let spec = build_domain("l_shape", &[1.0, 1.0]).unwrap();
    condition::coefficients(&LShapeTrial, &spec, 32).unwrap()
}

fn cross_coeffs() -> condition::ConditionCoefficients {
    let spec = build_domain("cross", &[1.0; 4]).unwrap();
    condition::coefficients(&CrossTrial, &spec, 64).unwrap()
}

proptest! {
    #[test]
    fn condition_report_consistent(a in proptest::collection::vec(0.05f64..10.0, 4)) {
        for (c, lengths) in [(l_coeffs(), &a[..2]), (cross_coeffs(), &a[..])] {
            let r = condition::check(&c, lengths).unwrap();
            prop_assert_eq!(r.satisfied, r.lhs < r.rhs);
            if r.satisfied {
                prop_assert!(r.mu_of_v < c.nu1);
                prop_assert!(r.decay_lower_bound.unwrap() > 0.0);
            }
            prop_assert!(c.sigma.iter().chain(&c.kappa).all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn condition_monotone_in_lengths(a in proptest::collection::vec(0.05f64..5.0, 4), grow in 0.0f64..3.0, which in 0usize..4) {
        let c = cross_coeffs();
        let r0 = condition::check(&c, &a).unwrap();
        let mut b = a.clone();
        b[which] += grow;
        let r1 = condition::check(&c, &b).unwrap();
        prop_assert!(r1.lhs <= r0.lhs + 1e-15);
        prop_assert!(r1.rhs >= r0.rhs - 1e-15);
        prop_assert!(!r0.satisfied || r1.satisfied);
        prop_assert!(r1.mu_of_v <= r0.mu_of_v + 1e-12);
    }
}

#[test]
fn kappa_partial_sums_nondecreasing() {
    let spec = build_domain("cross", &[1.0; 4]).unwrap();
    let mut prev = 0.0;
    for n in [2, 4, 8, 16, 32, 64] {
        let k = condition::coefficients(&CrossTrial, &spec, n).unwrap().kappa[0];
        assert!(k >= prev);
        prev = k;
    }
}

#[test]
fn kappa_tail_bound_covers_doubling() {
    let spec = build_domain("cross", &[1.0; 4]).unwrap();
    let c32 = condition::coefficients(&CrossTrial, &spec, 32).unwrap();
    let c64 = condition::coefficients(&CrossTrial, &spec, 64).unwrap();
    let change: f64 = c64.kappa.iter().zip(&c32.kappa).map(|(a, b)| a - b).sum();
    assert!(change <= c32.tail_bound, "{change} > {}", c32.tail_bound);
}

#[test]
fn eta_shrinks_with_eps() {
    let c = cross_coeffs();
    let e0 = condition::threshold_eta(&c, 0.0).unwrap();
    let e1 = condition::threshold_eta(&c, 1e-2).unwrap();
    assert!(e1 < e0);
}

#[test]
fn a_threshold_is_boundary_of_condition() {
    let c = cross_coeffs();
    let a = condition::a_threshold(&c, 4).unwrap();
    assert!(!condition::check(&c, &[a * 0.999; 4]).unwrap().satisfied);
    assert!(condition::check(&c, &[a * 1.001; 4]).unwrap().satisfied);
}

// ---------- bent strip ----------

fn grid19() -> Vec<f64> {
    (1..=19).map(|k| 0.05 * k as f64).collect()
}

#[test]
fn split_identity_for_w() {
    // w_ν(q) = q^{ν−1} √π Γ((1−ν)/2)/(2^ν Γ(ν/2)) − w̃_ν(q)
    use trapmode::special::gamma;
    for nu in [0.1, 1.0 / 3.0, 0.5, 0.7] {
        let c = PI.sqrt() * gamma(0.5 * (1.0 - nu)) / (2f64.powf(nu) * gamma(0.5 * nu));
        for q in [PI, 2.0 * PI, 3.0 * PI] {
            let lhs = bentstrip::w_nu_quadrature(nu, q).unwrap();
            let rhs = c * q.powf(nu - 1.0) - bentstrip::w_tilde(nu, q).unwrap();
            assert!((lhs - rhs).abs() < 1e-9, "ν={nu} q={q}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn e_bounds_bracket_tail_differences() {
    for alpha in [0.2, 1.0 / 3.0, 0.5, 0.8] {
        for n in 2..=50usize {
            let e = 0.5
                * (bentstrip::w_tilde(alpha, PI * (n - 1) as f64).unwrap()
                    - bentstrip::w_tilde(alpha, PI * (n + 1) as f64).unwrap());
            let (lo, hi) = bentstrip::e_bounds(alpha, n);
            assert!(lo <= e + 1e-13 && e <= hi + 1e-13, "α={alpha} n={n}: {lo} ≤ {e} ≤ {hi}");
            assert!(e * e <= (hi * hi).max(lo * lo) + 1e-15, "α={alpha} n={n}");
        }
    }
}

#[test]
fn projection_matches_brute_force_quadrature() {
    // (v_α, sin 2πr) with 10⁵ Gauss panels after t = r^{1−α}.
    let alpha = 1.0 / 3.0;
    let p = 1.0 - alpha;
    let rule = GaussLegendre::new(4);
    let panels = 100_000;
    let mut sum = 0.0;
    for k in 0..panels {
        let (a, b) = (k as f64 / panels as f64, (k + 1) as f64 / panels as f64);
        sum += rule.integrate(
            |t| {
                let r = t.powf(1.0 / p);
                (PI * r).sin() * (2.0 * PI * r).sin() / p
            },
            a,
            b,
        );
    }
    let proj = bentstrip::projection(alpha, 2).unwrap();
    assert!((proj - sum).abs() < 1e-8 * sum.abs(), "{proj} vs {sum}");
}

#[test]
fn closed_forms_match_polar_quadrature() {
    let spec = build_domain("bent_strip", &[1.0, 1.0]).unwrap();
    for alpha in [0.2, 1.0 / 3.0, 0.6] {
        let trial = condition::BentTrial { alpha };
        let c = condition::coefficients_numeric(&trial, &spec, 24).unwrap();
        let (vv, _) = bentstrip::integrals(alpha).unwrap();
        assert!((c.vv - vv).abs() < 1e-8 * vv);
        assert!((c.beta - bentstrip::beta(alpha).unwrap()).abs() < 1e-7);
        assert!((c.sigma[0] - bentstrip::sigma(alpha).unwrap()).abs() < 1e-9);
        let partial: f64 = (2..=24)
            .map(|n| 2.0 * PI * ((n * n - 1) as f64).sqrt() * bentstrip::projection(alpha, n).unwrap().powi(2))
            .sum();
        assert!((c.kappa[0] - partial).abs() < 1e-8, "{} vs {partial}", c.kappa[0]);
    }
}

#[test]
fn d_n_power_law() {
    for alpha in [0.2, 1.0 / 3.0, 0.7] {
        let n = 1000usize;
        let ratio = bentstrip::d_n(alpha, n) / bentstrip::d_n(alpha, 2 * n);
        let expect = 2f64.powf(2.0 - alpha);
        assert!((ratio / expect - 1.0).abs() < 0.05);
    }
}

#[test]
fn bound_dominance_on_grid() {
    for alpha in grid19() {
        let c = bentstrip::bent_coefficients(alpha, 0.0, 1000).unwrap();
        assert!(c.kappa_direct <= c.kappa_bound, "α={alpha}");
        assert!(c.eta_bound <= c.eta_direct, "α={alpha}");
        assert!(c.sigma > 0.0);
    }
}

#[test]
fn eta_unimodal_on_grid() {
    let etas: Vec<f64> = grid19()
        .iter()
        .map(|&a| bentstrip::eta(a, EtaMethod::Bound, 1e-3, 1000).unwrap())
        .collect();
    let peak = etas.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(etas[..=peak].windows(2).all(|w| w[1] >= w[0]));
    assert!(etas[peak..].windows(2).all(|w| w[1] <= w[0]));
    let best = bentstrip::maximize_eta(EtaMethod::Bound, 1e-3, 1000).unwrap();
    assert!(best.eta_bound >= etas[peak] - 1e-12);
}

#[test]
fn w_limit_at_half() {
    let lim = bentstrip::half_alpha_limit();
    for d in [1e-3, 1e-4] {
        let nu: f64 = 2.0 * d;
        let r = bentstrip::w_nu(nu, 2.0 * PI).unwrap() / nu;
        assert!((r - lim).abs() < 10.0 * d);
    }
}

// ---------- reduced ----------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn boundary_operator_nonnegative(seed in proptest::collection::vec(-1.0f64..1.0, 64), frac in 0.01f64..1.0) {
        let spec = build_domain("cross", &[1.0, 2.0, 0.5, 3.0]).unwrap();
        let p = ReducedProblem::new(&spec, 1.0 / 8.0, 16).unwrap();
        let u: Vec<f64> = (0..p.system.dofs.len()).map(|i| seed[i % seed.len()]).collect();
        prop_assert!(p.boundary_form(frac * CUTOFF, &u).unwrap() >= 0.0);
    }
}

#[test]
fn mu1_continuous_and_saturates() {
    let spec = build_domain("l_shape", &[2.0, 2.0]).unwrap();
    let p = ReducedProblem::new(&spec, 1.0 / 16.0, 16).unwrap();
    let base = p.mu1(0.8 * CUTOFF).unwrap();
    let mut prev = f64::INFINITY;
    for k in 2..=6 {
        let d = (p.mu1(0.8 * CUTOFF + 10f64.powi(-k)).unwrap() - base).abs();
        assert!(d <= prev + 1e-9);
        prev = d;
    }
    assert!(prev < 1e-5);
    let long = |a: f64| {
        let spec = build_domain("l_shape", &[a, a]).unwrap();
        ReducedProblem::new(&spec, 1.0 / 16.0, 16).unwrap().mu1(0.8 * CUTOFF).unwrap()
    };
    assert!((long(50.0) - long(100.0)).abs() < 1e-6);
}

#[test]
fn reduced_truncation_stability() {
    let spec = build_domain("l_shape", &[2.0, 2.0]).unwrap();
    let l16 = fixed_point(&ReducedProblem::new(&spec, 1.0 / 16.0, 16).unwrap(), 1e-10).unwrap().lambda.unwrap();
    let l32 = fixed_point(&ReducedProblem::new(&spec, 1.0 / 16.0, 32).unwrap(), 1e-10).unwrap().lambda.unwrap();
    assert!((l16 - l32).abs() / l32 < 1e-3);
}

// ---------- eigensolver ----------

/// Rayleigh quotient on D of v extended into each branch by
/// Σ c_n sinh(γ_n(a−x))/sinh(γ_n a) ψ_n with γ_n = γ_n(π²).
fn extension_rayleigh(c: &condition::ConditionCoefficients, lengths: &[f64]) -> f64 {
    let basis = TransverseBasis::default();
    let mu = condition::check(c, lengths).unwrap().mu_of_v;
    let mut branch_mass = 0.0;
    for (proj, &a) in c.projections.as_ref().unwrap().iter().zip(lengths) {
        for (k, cn) in proj.iter().enumerate() {
            let g = gamma(k + 1, CUTOFF, &basis).magnitude();
            // ∫₀ᵃ sinh²(g(a−x)) dx / sinh²(ga), or a/3 at g = 0.
            let m = if g == 0.0 {
                a / 3.0
            } else {
                ((2.0 * g * a).sinh() / (4.0 * g) - a / 2.0) / (g * a).sinh().powi(2)
            };
            branch_mass += cn * cn * m;
        }
    }
    // Each extension satisfies −Δ = π² in Q_i, so its energy is π²‖·‖² plus the
    // boundary term already counted in μ(v).
    (mu * c.vv + CUTOFF * branch_mass) / (c.vv + branch_mass)
}

#[test]
fn rayleigh_upper_bound_chain() {
    let cases: [(&str, Vec<f64>, Box<dyn TrialFunction>); 3] = [
        ("l_shape", vec![2.0, 2.0], Box::new(LShapeTrial)),
        ("cross", vec![1.0; 4], Box::new(CrossTrial)),
        ("bent_strip", vec![3.0, 3.0], Box::new(condition::BentTrial::default())),
    ];
    for (name, lengths, trial) in cases {
        let spec = build_domain(name, &lengths).unwrap();
        let c = condition::coefficients(trial.as_ref(), &spec, 32).unwrap();
        let mu = condition::check(&c, &lengths).unwrap().mu_of_v;
        let bound = extension_rayleigh(&c, &lengths);
        assert!(mu <= bound && bound < CUTOFF, "{name}");
        let h = if name == "bent_strip" { 1.0 / 16.0 } else { 1.0 / 8.0 };
        let l1 = solve_domain(&spec, h, 1).unwrap().eigenvalues()[0];
        assert!(l1 <= bound * (1.0 + 2e-3), "{name}: λ₁ = {l1} > R = {bound}");
        // μ(v) bounds the reduced problem's μ₁(π²) instead.
        let mu1 = ReducedProblem::new(&spec, h, 32).unwrap().mu1(CUTOFF).unwrap();
        assert!(mu1 <= mu * (1.0 + 2e-3), "{name}: μ₁(π²) = {mu1} > μ(v) = {mu}");
    }
}

#[test]
fn mesh_refinement_lowers_eigenvalues() {
    for (name, params) in [("l_shape", vec![1.0, 1.0]), ("cross", vec![1.0; 4]), ("truncated_l", vec![0.5, 1.0, 1.0])] {
        let spec = build_domain(name, &params).unwrap();
        let r = solve_domain(&spec, 1.0 / 8.0, 3).unwrap();
        for (c, f) in r.levels[0].eigenvalues.iter().zip(&r.levels[1].eigenvalues) {
            assert!(f <= c, "{name}: {f} > {c}");
        }
    }
}

#[test]
fn enlarging_basic_domain_lowers_lambda() {
    let mut prev = f64::INFINITY;
    for ell in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let spec = build_domain("truncated_l", &[ell, 2.0, 2.0]).unwrap();
        let l = solve_domain(&spec, 1.0 / 8.0, 1).unwrap().eigenvalues()[0];
        assert!(l <= prev * (1.0 + 1e-4), "ℓ={ell}: {l} > {prev}");
        prev = l;
    }
}

#[test]
fn lambda_nonincreasing_in_branch_length() {
    let mut prev = f64::INFINITY;
    for a in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let spec = build_domain("l_shape", &[a, a]).unwrap();
        let l = solve_domain(&spec, 1.0 / 8.0, 1).unwrap().eigenvalues()[0];
        assert!(l <= prev, "a={a}");
        prev = l;
    }
}

#[test]
fn rectangle_never_trapped() {
    for a in [0.5, 2.0, 6.0] {
        let spec = build_domain("rectangle", &[a]).unwrap();
        let l = solve_domain(&spec, 1.0 / 16.0, 1).unwrap().eigenvalues()[0];
        let exact = CUTOFF * (1.0 + 1.0 / ((a + 1.0) * (a + 1.0)));
        assert!(l > CUTOFF);
        assert!((l - exact).abs() < 1e-3 * exact, "a={a}: {l} vs {exact}");
    }
}

#[test]
fn equal_cross_arms_give_degenerate_pair() {
    let spec = build_domain("cross", &[2.0; 4]).unwrap();
    let r = solve_domain_single(&spec, 1.0 / 8.0, 3).unwrap();
    let l = &r.levels[0].eigenvalues;
    assert!((l[1] - l[2]).abs() < 1e-6 * l[1]);
}

// ---------- geometry ----------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn mesh_area_matches_spec(a in proptest::collection::vec(prop_oneof![Just(0.0), 0.1f64..3.0], 4), k in 2usize..4) {
        let h = 1.0 / (4 * k) as f64;
        let spec = build_domain("cross", &a).unwrap();
        let mesh = generate_mesh(&spec, h, Region::FullDomain).unwrap();
        mesh.check_conformity().unwrap();
        prop_assert!((mesh.total_area() - spec.area()).abs() < 1e-10);
        prop_assert!((spec.area() - 1.0 - a.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn trial_traces_agree_with_quadrature(n in 1usize..12) {
        let spec = build_domain("cross", &[1.0; 4]).unwrap();
        let basis = TransverseBasis::default();
        for b in &spec.branches {
            let closed = CrossTrial.trace_coefficient(b.attachment, n).unwrap();
            let quad = integrate_adaptive_split(|s| CrossTrial.value(b.to_global(0.0, s)) * basis.psi(n, s), 0.0, 1.0, n + 1, 1e-15, 1e-13).unwrap().value;
            prop_assert!((closed - quad).abs() < 1e-12);
        }
    }
}
