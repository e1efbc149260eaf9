//! Experiment configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trapmode::{build_domain, WaveguideSpec};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Condition,
    Spectrum,
    Sweep,
    Reduced,
    BentCoeffs,
    Decay,
    Amin,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Condition => "condition",
            Experiment::Spectrum => "spectrum",
            Experiment::Sweep => "sweep",
            Experiment::Reduced => "reduced",
            Experiment::BentCoeffs => "bent-coeffs",
            Experiment::Decay => "decay",
            Experiment::Amin => "amin",
        }
    }

    fn default_format(self) -> Format {
        match self {
            Experiment::Condition | Experiment::Reduced | Experiment::Amin => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Catalog name: l_shape, cross, bent_strip, truncated_l, coupled_cross, …
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl Geometry {
    /// Parse `name(p1,p2,…)`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        trapmode::parse_domain(text)?;
        let text = text.trim();
        let name = text.split('(').next().unwrap_or("").trim().to_string();
        let params = match (text.find('('), text.rfind(')')) {
            (Some(open), Some(close)) => text[open + 1..close]
                .split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| p.trim().parse::<f64>().expect("validated by parse_domain"))
                .collect(),
            _ => Vec::new(),
        };
        Ok(Self { name, params })
    }

    pub fn build(&self) -> Result<WaveguideSpec, CliError> {
        Ok(build_domain(&self.name, &self.params)?)
    }

    pub fn with_params(&self, params: Vec<f64>) -> Self {
        Self { name: self.name.clone(), params }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Solver {
    /// Mesh size; defaults to the per-domain value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Number of eigenvalues.
    pub k: usize,
    /// Truncation N of trace and DtN sums.
    pub modes: usize,
    /// Series terms for the bent-strip κ sums.
    pub terms: usize,
    pub eps_coth: f64,
    /// Richardson extrapolation from h and h/2.
    pub extrapolate: bool,
    /// Fixed-point tolerance of the reduced problem.
    pub tol: f64,
    /// λ grid size for the reduced monotonicity check.
    pub grid: usize,
}

impl Default for Solver {
    fn default() -> Self {
        Self {
            h: None,
            k: 1,
            modes: trapmode::reduced::DEFAULT_MODES,
            terms: trapmode::bentstrip::DEFAULT_TERMS,
            eps_coth: trapmode::condition::DEFAULT_EPS_COTH,
            extrapolate: true,
            tol: 1e-10,
            grid: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// `a` (all branch lengths), `alpha`, `ell`, `epsilon` or `p<i>`.
    #[serde(default = "default_variable")]
    pub variable: String,
    pub start: f64,
    pub stop: f64,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_variable() -> String {
    "a".into()
}

fn default_step() -> f64 {
    0.1
}

const MAX_SWEEP_POINTS: usize = 100_000;

impl Sweep {
    /// start, start + step, … up to stop (inclusive within rounding).
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Also write the finest mesh (spectrum only).
    pub mesh: bool,
    /// Worker threads; 0 or absent means available parallelism.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

/// What a sweep variable changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Every branch length.
    Length,
    /// Bent-strip trial exponent.
    Alpha,
    /// One catalog parameter by index.
    Param(usize),
}

/// Indices of the branch-length parameters of a catalog domain.
fn branch_params(name: &str) -> std::ops::Range<usize> {
    match name {
        "l_shape" | "bent_strip" => 0..2,
        "cross" => 0..4,
        "truncated_l" => 1..3,
        "coupled_cross" => 1..5,
        "rectangle" => 0..1,
        _ => 0..0,
    }
}

impl SweepVariable {
    pub fn parse(text: &str, geometry: Option<&Geometry>) -> Result<Self, CliError> {
        let family = geometry.map(|g| g.name.as_str()).unwrap_or("");
        let v = match text {
            "a" => SweepVariable::Length,
            "alpha" => SweepVariable::Alpha,
            "ell" if family == "truncated_l" => SweepVariable::Param(0),
            "epsilon" if family == "coupled_cross" => SweepVariable::Param(0),
            p if p.starts_with('p') && p[1..].parse::<usize>().is_ok() => SweepVariable::Param(p[1..].parse().unwrap()),
            _ => return Err(CliError::validation(format!("unknown sweep variable `{text}` for `{family}`"))),
        };
        match (v, geometry) {
            (SweepVariable::Length, Some(g)) if branch_params(&g.name).is_empty() => {
                Err(CliError::validation(format!("`{}` has no branches to sweep", g.name)))
            }
            (SweepVariable::Param(i), Some(g)) if i >= g.params.len() => Err(CliError::validation(format!(
                "parameter index {i} out of range for `{}` ({} parameters)",
                g.name,
                g.params.len()
            ))),
            _ => Ok(v),
        }
    }

    /// The geometry at one sweep value.
    pub fn apply(self, geometry: &Geometry, value: f64) -> Geometry {
        let mut params = geometry.params.clone();
        match self {
            SweepVariable::Length => branch_params(&geometry.name).for_each(|i| params[i] = value),
            SweepVariable::Param(i) => params[i] = value,
            SweepVariable::Alpha => {}
        }
        geometry.with_params(params)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::validation(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn format(&self, kind: Experiment) -> Format {
        self.output.format.unwrap_or(kind.default_format())
    }

    pub fn geometry(&self) -> Result<&Geometry, CliError> {
        self.geometry
            .as_ref()
            .ok_or_else(|| CliError::validation("a [geometry] section is required".to_string()))
    }

    pub fn sweep(&self) -> Result<&Sweep, CliError> {
        self.sweep
            .as_ref()
            .ok_or_else(|| CliError::validation("a [sweep] section is required".to_string()))
    }

    /// Schema checks that do not need a solve.
    pub fn validate(&self, kind: Experiment) -> Result<(), CliError> {
        if let Some(e) = self.experiment {
            if e != kind {
                return Err(CliError::validation(format!(
                    "config is for `{}` but `{}` was requested",
                    e.name(),
                    kind.name()
                )));
            }
        }
        let s = &self.solver;
        if let Some(h) = s.h {
            if !(h.is_finite() && h > 0.0 && h <= 0.25) {
                return Err(CliError::validation(format!("h = {h} must lie in (0, 1/4]")));
            }
            if ((1.0 / h) - (1.0 / h).round()).abs() > 1e-9 / h {
                return Err(CliError::validation(format!("h = {h} must divide the unit branch width")));
            }
        }
        if s.k == 0 || s.modes == 0 || s.terms == 0 {
            return Err(CliError::validation("k, modes and terms must be positive".to_string()));
        }
        if !(s.eps_coth.is_finite() && s.eps_coth >= 0.0) {
            return Err(CliError::validation(format!("eps_coth = {} must be ≥ 0", s.eps_coth)));
        }
        if !(s.tol.is_finite() && s.tol > 0.0) || s.grid < 2 {
            return Err(CliError::validation("tol must be positive and grid at least 2".to_string()));
        }
        if kind != Experiment::BentCoeffs {
            self.geometry()?.build()?;
        }
        if matches!(kind, Experiment::Sweep | Experiment::Amin) {
            self.sweep()?;
        }
        if let Some(sw) = &self.sweep {
            if !(sw.start.is_finite() && sw.stop.is_finite() && sw.stop >= sw.start) {
                return Err(CliError::validation(format!("sweep range [{}, {}] is invalid", sw.start, sw.stop)));
            }
            if !(sw.step.is_finite() && sw.step > 0.0) {
                return Err(CliError::validation(format!("sweep step {} must be positive", sw.step)));
            }
            if (sw.stop - sw.start) / sw.step >= MAX_SWEEP_POINTS as f64 {
                return Err(CliError::validation(format!("sweep exceeds {MAX_SWEEP_POINTS} points")));
            }
            let var = SweepVariable::parse(&sw.variable, self.geometry.as_ref())?;
            match (kind, var) {
                (Experiment::BentCoeffs, SweepVariable::Alpha) => {
                    if sw.start <= 0.0 || sw.stop >= 1.0 {
                        return Err(CliError::validation("α must lie in (0, 1)".to_string()));
                    }
                }
                (Experiment::BentCoeffs, _) => {
                    return Err(CliError::validation("bent-coeffs sweeps `alpha` only".to_string()))
                }
                (_, SweepVariable::Alpha) if matches!(kind, Experiment::Sweep | Experiment::Amin) => {
                    return Err(CliError::validation("`alpha` applies to bent-coeffs only".to_string()))
                }
                _ => {}
            }
            if matches!(kind, Experiment::Sweep | Experiment::Amin) {
                let g = self.geometry()?;
                for v in [sw.start, sw.stop] {
                    var.apply(g, v).build()?;
                }
            }
        }
        Ok(())
    }
}
