//! The experiments behind each subcommand.

use rayon::prelude::*;
use serde_json::json;
use trapmode::bentstrip;
use trapmode::condition;
use trapmode::eigensolver::{default_h, find_a_min, localization_verdict, solve_domain, solve_domain_single, SpectrumResult};
use trapmode::reduced::{fixed_point, lambda_grid, verify_monotone, ReducedProblem};
use trapmode::{Error, WaveguideSpec, CUTOFF};

use crate::config::{Experiment, ExperimentConfig, Geometry, SweepVariable};
use crate::error::CliError;
use crate::output::{num, opt, Artifact, Table};

pub fn run(kind: Experiment, cfg: &ExperimentConfig) -> Result<Artifact, CliError> {
    cfg.validate(kind)?;
    match kind {
        Experiment::Condition => condition(cfg),
        Experiment::Spectrum => spectrum(cfg),
        Experiment::Sweep => sweep(cfg),
        Experiment::Reduced => reduced(cfg),
        Experiment::BentCoeffs => bent_coeffs(cfg),
        Experiment::Decay => decay(cfg),
        Experiment::Amin => amin(cfg),
    }
}

fn mesh_size(cfg: &ExperimentConfig, spec: &WaveguideSpec) -> f64 {
    cfg.solver.h.unwrap_or_else(|| default_h(spec))
}

pub fn solve(cfg: &ExperimentConfig, spec: &WaveguideSpec, h: f64, k: usize) -> Result<SpectrumResult, CliError> {
    Ok(if cfg.solver.extrapolate { solve_domain(spec, h, k)? } else { solve_domain_single(spec, h, k)? })
}

/// Map in parallel, keep input order, report the first failure by position.
pub fn ordered_map<T, U, F>(items: &[T], f: F) -> Result<Vec<U>, CliError>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U, CliError> + Sync + Send,
{
    items.par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

fn condition(cfg: &ExperimentConfig) -> Result<Artifact, CliError> {
    let spec = cfg.geometry()?.build()?;
    let trial = condition::catalog_trial(&spec)
        .ok_or_else(|| CliError::validation(format!("no built-in trial function for `{}`", spec.name)))?;
    let coeffs = condition::coefficients(trial.as_ref(), &spec, cfg.solver.modes)?;
    let report = condition::check(&coeffs, &spec.lengths())?;
    let join = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";");
    let mut table = Table::new([
        "beta", "sigma", "kappa", "lhs", "rhs", "satisfied", "eta", "a_th", "mu_of_v", "decay_lower_bound", "truncation",
        "tail_bound",
    ]);
    table.push(vec![
        num(report.beta),
        join(&report.sigma),
        join(&report.kappa),
        num(report.lhs),
        num(report.rhs),
        report.satisfied.to_string(),
        opt(report.eta),
        opt(report.a_th),
        num(report.mu_of_v),
        opt(report.decay_lower_bound),
        report.truncation.to_string(),
        num(report.tail_bound),
    ]);
    Ok(Artifact { stem: "condition".into(), json: serde_json::to_value(&report).expect("serializes"), table, extra: vec![] })
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Artifact, CliError> {
    let spec = cfg.geometry()?.build()?;
    let h = mesh_size(cfg, &spec);
    let r = solve(cfg, &spec, h, cfg.solver.k)?;
    let ev = r.eigenvalues().to_vec();
    let over = r.over_pi2();
    let trapped: Vec<bool> = ev.iter().map(|l| *l < CUTOFF).collect();
    let mut table = Table::new(["index", "lambda", "lambda_over_pi2", "trapped"]);
    for (i, (l, o)) in ev.iter().zip(&over).enumerate() {
        table.push(vec![(i + 1).to_string(), num(*l), num(*o), trapped[i].to_string()]);
    }
    let json = json!({
        "domain": spec.name,
        "h": h,
        "extrapolated": r.extrapolated.is_some(),
        "eigenvalues": ev,
        "over_pi2": over,
        "trapped": trapped,
        "degenerate": r.degenerate,
        "extrapolation_error": r.extrapolation_error(),
        "levels": r.levels,
        "snaps": r.snaps,
    });
    let mut extra = Vec::new();
    if cfg.output.mesh {
        let mut buf = Vec::new();
        r.mesh.write_text(&mut buf)?;
        extra.push(("mesh.txt".to_string(), String::from_utf8(buf).expect("mesh text is ASCII")));
    }
    Ok(Artifact { stem: "spectrum".into(), json, table, extra })
}

/// λ₁..λ_k along a one-parameter family.
pub fn sweep_points(cfg: &ExperimentConfig, geometry: &Geometry, var: SweepVariable, values: &[f64]) -> Result<Vec<Vec<f64>>, CliError> {
    ordered_map(values, |&v| {
        let spec = var.apply(geometry, v).build()?;
        let h = mesh_size(cfg, &spec);
        Ok(solve(cfg, &spec, h, cfg.solver.k)?.eigenvalues().to_vec())
    })
}

pub fn sweep_table(variable: &str, values: &[f64], points: &[Vec<f64>], k: usize) -> Table {
    let mut headers = vec![variable.to_string()];
    for i in 1..=k {
        headers.push(format!("lambda{i}"));
        headers.push(format!("lambda{i}_over_pi2"));
    }
    headers.push("trapped".into());
    let mut table = Table::new(headers);
    for (v, ls) in values.iter().zip(points) {
        let mut row = vec![num(*v)];
        for l in ls {
            row.push(num(*l));
            row.push(num(l / CUTOFF));
        }
        row.push((ls[0] < CUTOFF).to_string());
        table.push(row);
    }
    table
}

fn sweep(cfg: &ExperimentConfig) -> Result<Artifact, CliError> {
    let g = cfg.geometry()?;
    let sw = cfg.sweep()?;
    let var = SweepVariable::parse(&sw.variable, Some(g))?;
    let values = sw.values();
    let points = sweep_points(cfg, g, var, &values)?;
    let table = sweep_table(&sw.variable, &values, &points, cfg.solver.k);
    let json = json!({
        "family": g.name,
        "variable": sw.variable,
        "h": cfg.solver.h,
        "points": values.iter().zip(&points).map(|(v, ls)| json!({
            "value": v,
            "eigenvalues": ls,
            "over_pi2": ls.iter().map(|l| l / CUTOFF).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });
    Ok(Artifact { stem: "sweep".into(), json, table, extra: vec![] })
}

fn reduced(cfg: &ExperimentConfig) -> Result<Artifact, CliError> {
    let spec = cfg.geometry()?.build()?;
    let h = mesh_size(cfg, &spec);
    let problem = ReducedProblem::new(&spec, h, cfg.solver.modes)?;
    let fp = fixed_point(&problem, cfg.solver.tol)?;
    let mono = verify_monotone(&problem, &lambda_grid(cfg.solver.grid))?;
    let mut table = Table::new(["lambda", "mu1", "lambda_over_pi2", "mu1_over_pi2"]);
    for (l, m) in &mono.samples {
        table.push(vec![num(*l), num(*m), num(l / CUTOFF), num(m / CUTOFF)]);
    }
    let json = json!({
        "mu1_at_pi2": fp.mu1_at_pi2,
        "fixed_point": fp.lambda,
        "iterations": fp.iterations,
        "N": cfg.solver.modes,
        "h": h,
        "monotone_check": mono,
    });
    Ok(Artifact { stem: "reduced".into(), json, table, extra: vec![] })
}

/// Default α grid: 0.05, 0.10, …, 0.95.
pub fn default_alphas() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 20.0).collect()
}

fn bent_coeffs(cfg: &ExperimentConfig) -> Result<Artifact, CliError> {
    let alphas = cfg.sweep.as_ref().map(|s| s.values()).unwrap_or_else(default_alphas);
    let rows = ordered_map(&alphas, |&a| Ok(bentstrip::bent_coefficients(a, cfg.solver.eps_coth, cfg.solver.terms)?))?;
    let mut table =
        Table::new(["alpha", "beta", "sigma", "kappa_bound", "kappa_direct", "eta_bound", "eta_direct", "a_th"]);
    for b in &rows {
        table.push(vec![
            num(b.alpha),
            num(b.beta),
            num(b.sigma),
            num(b.kappa_bound),
            num(b.kappa_direct),
            num(b.eta_bound),
            num(b.eta_direct),
            opt(b.a_threshold),
        ]);
    }
    Ok(Artifact { stem: "bent-coeffs".into(), json: serde_json::to_value(&rows).expect("serializes"), table, extra: vec![] })
}

fn decay(cfg: &ExperimentConfig) -> Result<Artifact, CliError> {
    let spec = cfg.geometry()?.build()?;
    let h = mesh_size(cfg, &spec);
    let r = solve(cfg, &spec, h, cfg.solver.k)?;
    let verdicts = localization_verdict(&r, &spec)?;
    let mut table = Table::new([
        "mode", "lambda", "lambda_over_pi2", "trapped", "branch", "expected_rate", "fitted_rate", "log_slope", "bound_ratio",
    ]);
    let mut extra = Vec::new();
    for v in &verdicts {
        let head = vec![(v.index + 1).to_string(), num(v.lambda), num(v.lambda / CUTOFF), v.trapped.to_string()];
        if v.profiles.is_empty() {
            table.push([head.clone(), vec![String::new(); 5]].concat());
        }
        for p in &v.profiles {
            let row = vec![p.branch.to_string(), num(p.expected_rate), num(p.fitted_rate), num(p.log_slope), num(p.bound_ratio)];
            table.push([head.clone(), row].concat());
            let mut csv = Table::new(["x", "I", "bound"]);
            for (x, i, b) in &p.samples {
                csv.push(vec![num(*x), num(*i), num(*b)]);
            }
            extra.push((format!("decay_mode{}_branch{}.csv", v.index + 1, p.branch), csv.to_csv()));
        }
    }
    let json = json!({ "domain": spec.name, "h": h, "modes": verdicts });
    Ok(Artifact { stem: "decay".into(), json, table, extra })
}

fn amin(cfg: &ExperimentConfig) -> Result<Artifact, CliError> {
    let g = cfg.geometry()?;
    let sw = cfg.sweep()?;
    let var = SweepVariable::parse(&sw.variable, Some(g))?;
    let h = match cfg.solver.h {
        Some(h) => h,
        None => default_h(&var.apply(g, sw.start).build()?),
    };
    let family = |a: f64| {
        let geo = var.apply(g, a);
        trapmode::build_domain(&geo.name, &geo.params)
    };
    let (a_min, iterations, bracket, f) = match find_a_min(family, (sw.start, sw.stop), h) {
        Ok(r) => (Some(r.a), r.iterations, r.bracket, None),
        Err(Error::BracketInvalid { lo, hi, f_lo, f_hi }) => (None, 0, (lo, hi), Some((f_lo, f_hi))),
        Err(e) => return Err(e.into()),
    };
    let mut table = Table::new(["family", "variable", "h", "a_min", "iterations", "lo", "hi"]);
    table.push(vec![g.name.clone(), sw.variable.clone(), num(h), opt(a_min), iterations.to_string(), num(bracket.0), num(bracket.1)]);
    let json = json!({
        "family": g.name,
        "variable": sw.variable,
        "h": h,
        "a_min": a_min,
        "crossing": a_min.is_some(),
        "iterations": iterations,
        "bracket": [bracket.0, bracket.1],
        "lambda1_minus_pi2_at_ends": f.map(|(a, b)| [a, b]),
    });
    Ok(Artifact { stem: "amin".into(), json, table, extra: vec![] })
}
