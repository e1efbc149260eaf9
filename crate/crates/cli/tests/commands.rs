use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn trapmode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trapmode")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn condition_l_shape() {
    let v = json(&trapmode(&["condition", "--domain", "l_shape(2,2)"]));
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    let mut expected = vec![
        "beta", "sigma", "kappa", "lhs", "rhs", "satisfied", "eta", "a_th", "mu_of_v", "decay_lower_bound", "truncation",
        "tail_bound",
    ];
    expected.sort();
    assert_eq!(keys, expected);
    assert_eq!(v["satisfied"], true);
    assert!((v["a_th"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn spectrum_cross_five_values() {
    let out = stdout(&trapmode(&["spectrum", "--domain", "cross(5,5,5,5)", "--k", "5", "--h", "0.0625"]));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("index,lambda,lambda_over_pi2,trapped"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    let over: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!((over[0] - 0.661).abs() < 1e-2, "{over:?}");
    assert_eq!(rows.iter().filter(|r| r[3] == "true").count(), 1);
}

#[test]
fn reduced_json_shape() {
    let v = json(&trapmode(&["reduced", "--domain", "l_shape(2,2)", "--h", "0.0625", "--modes", "16"]));
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["N", "fixed_point", "h", "iterations", "monotone_check", "mu1_at_pi2"]);
    assert_eq!(v["N"], 16);
    assert_eq!(v["monotone_check"]["monotone"], true);
    let lambda = v["fixed_point"].as_f64().unwrap() / std::f64::consts::PI.powi(2);
    assert!((lambda - 0.9357).abs() < 0.01, "{lambda}");
    let t = json(&trapmode(&["reduced", "--domain", "truncated_l(0,2,2)", "--h", "0.0625"]));
    assert!(t["fixed_point"].is_null());
}

#[test]
fn bent_coeffs_csv() {
    let out = stdout(&trapmode(&["bent-coeffs"]));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("alpha,beta,sigma,kappa_bound,kappa_direct,eta_bound,eta_direct,a_th"));
    assert_eq!(lines.count(), 19);
}

#[test]
fn sweep_is_ordered_and_independent_of_jobs() {
    let dir = scratch("sweep");
    let cfg = dir.join("sweep.toml");
    fs::write(
        &cfg,
        "experiment = \"sweep\"\n[geometry]\nname = \"l_shape\"\nparams = [1, 1]\n[solver]\nh = 0.125\n\
         [sweep]\nstart = 0.5\nstop = 2.0\nstep = 0.25\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let one = stdout(&trapmode(&["sweep", "--config", cfg, "--jobs", "1"]));
    let four = stdout(&trapmode(&["sweep", "--config", cfg, "--jobs", "4"]));
    assert_eq!(one, four);
    let rows: Vec<Vec<f64>> = one
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(3).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 7);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0] && w[1][1] <= w[0][1]));
}

#[test]
fn outputs_are_deterministic_and_written() {
    let dir = scratch("determinism");
    let out = dir.to_str().unwrap();
    let args = ["decay", "--domain", "l_shape(2,2)", "--h", "0.125", "--out", out];
    let first = stdout(&trapmode(&args));
    let saved = fs::read_to_string(dir.join("decay.csv")).unwrap();
    assert_eq!(first, saved);
    assert_eq!(first, stdout(&trapmode(&args)));
    let profile = fs::read_to_string(dir.join("decay_mode1_branch0.csv")).unwrap();
    assert!(profile.starts_with("x,I,bound\n"));
}

#[test]
fn mesh_dump_header() {
    let dir = scratch("mesh");
    let cfg = dir.join("m.toml");
    fs::write(&cfg, "[geometry]\nname = \"l_shape\"\nparams = [1, 1]\n[solver]\nh = 0.25\n[output]\nmesh = true\n").unwrap();
    let o = trapmode(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    stdout(&o);
    let mesh = fs::read_to_string(dir.join("mesh.txt")).unwrap();
    assert!(mesh.starts_with("nodes "), "{}", &mesh[..40]);
    assert!(mesh.lines().next().unwrap().contains(" triangles "));
}

#[test]
fn amin_reports_crossing_or_none() {
    let dir = scratch("amin");
    let cfg = dir.join("a.toml");
    fs::write(&cfg, "[geometry]\nname = \"l_shape\"\nparams = [1, 1]\n[solver]\nh = 0.0625\n[sweep]\nstart = 0.5\nstop = 1.5\n").unwrap();
    let v = json(&trapmode(&["amin", "--config", cfg.to_str().unwrap()]));
    assert!((v["a_min"].as_f64().unwrap() - 0.84).abs() < 0.03, "{v}");
    let v = json(&trapmode(&["amin", "--config", cfg.to_str().unwrap(), "--domain", "truncated_l(0,1,1)"]));
    assert_eq!(v["crossing"], false);
    assert!(v["a_min"].is_null());
}

#[test]
fn reproduce_table_bent_passes() {
    let v = json(&trapmode(&["reproduce", "table-bent", "--format", "json"]));
    assert_eq!(v["failed"], 0, "{v}");
}

#[test]
fn exit_codes_and_diagnostics() {
    let o = trapmode(&["spectrum", "--domain", "blob(1)"]);
    assert_eq!(o.status.code(), Some(2));
    let d: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(d["error"], "validation");
    assert_eq!(d["exit_code"], 2);

    let o = trapmode(&["spectrum", "--domain", "l_shape(1,1)", "--h", "0.03"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = scratch("badcfg");
    let cfg = dir.join("bad.toml");
    fs::write(&cfg, "experiment = \"sweep\"\nunknown = 1\n").unwrap();
    assert_eq!(trapmode(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    fs::write(&cfg, "experiment = \"reduced\"\n").unwrap();
    assert_eq!(trapmode(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));

    let blocker = dir.join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    let o = trapmode(&["bent-coeffs", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let d: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(d["exit_code"], 3);
}
