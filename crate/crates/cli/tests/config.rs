use proptest::prelude::*;
use trapmode_cli::config::{Geometry, Output, Solver, Sweep, SweepVariable};
use trapmode_cli::{CliError, Experiment, ExperimentConfig, Format};

const FULL: &str = r#"
experiment = "sweep"

[geometry]
name = "l_shape"
params = [1.0, 1.0]

[solver]
h = 0.0625
k = 2
modes = 16

[sweep]
variable = "a"
start = 0.2
stop = 3.0
step = 0.2

[output]
dir = "out"
format = "csv"
jobs = 2
"#;

#[test]
fn full_config_parses() {
    let cfg = ExperimentConfig::from_toml(FULL).unwrap();
    assert_eq!(cfg.experiment, Some(Experiment::Sweep));
    assert_eq!(cfg.solver.k, 2);
    assert_eq!(cfg.solver.terms, Solver::default().terms);
    assert_eq!(cfg.sweep.as_ref().unwrap().values().len(), 15);
    cfg.validate(Experiment::Sweep).unwrap();
}

#[test]
fn unknown_keys_rejected_at_every_level() {
    for bad in [
        "colour = 1",
        "[geometry]\nname = \"l_shape\"\nparams = [1, 1]\nextra = 2",
        "[solver]\nhh = 0.1",
        "[sweep]\nstart = 0\nstop = 1\nstride = 0.1",
        "[output]\npath = \"x\"",
        "[plot]\n",
    ] {
        let err = ExperimentConfig::from_toml(bad).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{bad}");
    }
}

#[test]
fn validation_errors() {
    let mut cfg = ExperimentConfig::from_toml(FULL).unwrap();
    assert!(cfg.validate(Experiment::Spectrum).is_err(), "experiment mismatch");
    cfg.solver.h = Some(0.03);
    assert!(cfg.validate(Experiment::Sweep).is_err(), "h must divide 1");
    cfg.solver.h = Some(0.0625);
    cfg.sweep.as_mut().unwrap().step = 0.0;
    assert!(cfg.validate(Experiment::Sweep).is_err());
    cfg.sweep.as_mut().unwrap().step = 0.1;
    cfg.sweep.as_mut().unwrap().variable = "epsilon".into();
    assert!(cfg.validate(Experiment::Sweep).is_err(), "l_shape has no ε");
    cfg.experiment = None;
    cfg.sweep = None;
    assert!(cfg.validate(Experiment::Sweep).is_err(), "sweep section required");
    cfg.validate(Experiment::Spectrum).unwrap();
    cfg.geometry = None;
    assert!(cfg.validate(Experiment::Spectrum).is_err());
    cfg.validate(Experiment::BentCoeffs).unwrap();
}

#[test]
fn sweep_variables_map_to_parameters() {
    let g = Geometry::parse("truncated_l(0.5, 2, 3)").unwrap();
    assert_eq!(g.params, vec![0.5, 2.0, 3.0]);
    let a = SweepVariable::parse("a", Some(&g)).unwrap();
    assert_eq!(a.apply(&g, 7.0).params, vec![0.5, 7.0, 7.0]);
    let ell = SweepVariable::parse("ell", Some(&g)).unwrap();
    assert_eq!(ell.apply(&g, 0.25).params, vec![0.25, 2.0, 3.0]);
    assert!(SweepVariable::parse("p3", Some(&g)).is_err());
    let square = Geometry::parse("unit_square").unwrap();
    assert!(SweepVariable::parse("a", Some(&square)).is_err());
}

#[test]
fn solver_failures_exit_3() {
    let e: CliError = trapmode::Error::NonConvergence { applications: 10, residual: 1.0 }.into();
    assert_eq!(e.exit_code(), 3);
    let e: CliError = trapmode::Error::UnknownDomain("x".into()).into();
    assert_eq!(e.exit_code(), 2);
    assert!(e.diagnostic().contains("\"exit_code\":2"));
}

fn finite() -> impl Strategy<Value = f64> {
    (-1e6..1e6f64).prop_filter("finite", |x| x.is_finite())
}

prop_compose! {
    fn configs()(
        experiment in proptest::option::of(prop_oneof![
            Just(Experiment::Condition), Just(Experiment::Spectrum), Just(Experiment::Sweep),
            Just(Experiment::Reduced), Just(Experiment::BentCoeffs), Just(Experiment::Decay), Just(Experiment::Amin),
        ]),
        geometry in proptest::option::of(("[a-z_]{1,12}", proptest::collection::vec(finite(), 0..6))),
        h in proptest::option::of(1e-3..0.25f64),
        k in 1usize..20, modes in 1usize..200, terms in 1usize..5000,
        eps in 0.0..1.0f64, extrapolate in any::<bool>(), tol in 1e-14..1e-2f64, grid in 2usize..50,
        sweep in proptest::option::of(("[a-z0-9]{1,6}", finite(), finite(), 1e-6..10.0f64)),
        dir in proptest::option::of("[a-z/]{1,10}"),
        format in proptest::option::of(prop_oneof![Just(Format::Csv), Just(Format::Json)]),
        mesh in any::<bool>(),
        jobs in proptest::option::of(0usize..64),
    ) -> ExperimentConfig {
        ExperimentConfig {
            experiment,
            geometry: geometry.map(|(name, params)| Geometry { name, params }),
            solver: Solver { h, k, modes, terms, eps_coth: eps, extrapolate, tol, grid },
            sweep: sweep.map(|(variable, start, stop, step)| Sweep { variable, start, stop, step }),
            output: Output { dir: dir.map(Into::into), format, mesh, jobs },
        }
    }
}

proptest! {
    #[test]
    fn config_round_trips(cfg in configs()) {
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml(), text);
    }
}
