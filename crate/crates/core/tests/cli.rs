use std::path::Path;
use std::process::{Command, Output};

fn bgs(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bgs"));
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn config(dir: &Path, data: &str, extra: &str) -> std::path::PathBuf {
    let text = format!(
        r#"{{"mesh": {{"nx": 3, "ny": 3, "gamma1_sides": ["left"]}},
           "coefficients": {{"viscosity": {{"kind": "tanh", "low": 0.5, "high": 2.0}},
                             "conductivity": {{"kind": "constant", "value": 1.0}}}},
           "physics": {{"beta": 1.0, "gravity": [0.0, -1.0]}},
           "data": "{data}",
           "time": {{"dt": 0.05, "t_end": 0.1}},
           "output": {{"directory": "{}", "vtk_every": 1}}{extra}}}"#,
        dir.join("out").display()
    );
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn zero_run_writes_zero_diagnostics_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = bgs(&["run"], Some(&config(dir.path(), "zero", "")));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("out/diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,kinetic,thermal,rot_seminorm2,grad_w_norm2,z_L4,w_L4,Re,Ra,Re_plus_Ra,div_residual,picard_iters"
    );
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for (n, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), 12);
        assert!((r[0] - 0.05 * n as f64).abs() < 1e-15);
        assert!(r[1..11].iter().all(|v| *v == 0.0), "{r:?}");
    }
    for n in 1..=2 {
        let vtk = std::fs::read_to_string(dir.path().join(format!("out/fields_{n:06}.vtk"))).unwrap();
        assert!(vtk.starts_with("# vtk DataFile Version 3.0"));
        assert!(vtk.contains("CELLS 18 126") && vtk.contains("SCALARS head double 1"));
    }
}

#[test]
fn missing_and_invalid_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bgs(&["run"], None);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.starts_with("ERROR: ") && err.trim_end().lines().count() == 1, "{err}");

    let path = config(dir.path(), "zero", r#", "surprise": 1"#);
    let out = bgs(&["run"], Some(&path));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("surprise"));

    let out = bgs(&["run"], Some(&dir.path().join("absent.json")));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let out = bgs(&["frobnicate"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_level_study_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = config(dir.path(), "mms", r#", "study": {"levels": 1}"#);
    let out = bgs(&["mms"], Some(&path));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn default_form_audit_passes() {
    let out = bgs(&["check-forms", "--seed", "7"], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    let skew: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("max_skew_violation,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(skew <= 1e-13);
}

#[test]
fn reports_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = config(dir.path(), "mms", r#", "solver": {"constants": "estimate"}, "study": {"trials": 5}"#);
    let out = bgs(&["estimate-constants"], Some(&path));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = std::fs::read_to_string(dir.path().join("out/report_estimate-constants.csv")).unwrap();
    let values: Vec<f64> = report.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(values.len() == 3 && values.iter().all(|v| *v > 0.0));

    let out = bgs(&["contract"], Some(&path));
    assert!(matches!(out.status.code(), Some(0 | 4)), "{}", stderr(&out));
    let report = std::fs::read_to_string(dir.path().join("out/report_contract.csv")).unwrap();
    assert!(report.starts_with('#'));
    assert_eq!(report.lines().count(), 2 + 3);

    let out = bgs(&["check-forms"], Some(&path));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("out/report_check-forms.csv").exists());
}
