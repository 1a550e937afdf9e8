use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pinchlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pinchlab"))
        .args(args)
        .env_remove("RUST_LOG")
        .env_remove("PINCHLAB_MAX_VERTICES")
        .output()
        .expect("spawn pinchlab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_sphere_writes_off() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.off");
    let o = pinchlab(&[
        "generate",
        "--shape",
        "sphere",
        "--radius",
        "1",
        "--res",
        "4",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("2562 vertices, 5120 faces, χ = 2"));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("OFF"));
    assert_eq!(lines.next(), Some("2562 5120 0"));
}

#[test]
fn generate_torus_prints_zero_euler_characteristic() {
    let o = pinchlab(&[
        "generate", "--shape", "torus", "--R", "2", "--r", "0.5", "--res", "64",
    ]);
    assert!(o.status.success());
    assert!(
        stdout(&o).contains("4096 vertices, 8192 faces, χ = 0"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn invalid_descriptor_exits_2() {
    let o = pinchlab(&["generate", "--shape", "torus", "--r", "3", "--R", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("major > minor"), "{}", stderr(&o));

    let o = pinchlab(&["generate", "--shape", "sphere", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn vertex_cap_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_pinchlab"))
        .args(["generate", "--shape", "sphere", "--res", "3"])
        .env("PINCHLAB_MAX_VERTICES", "100")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cap 100"), "{}", stderr(&o));
}

#[test]
fn analyze_sphere_summary_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = pinchlab(&[
        "analyze",
        "--shape",
        "sphere",
        "--res",
        "4",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("λ1"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let lambda = report["spectral"]["lambda1"].as_f64().unwrap();
    assert!((lambda - 2.0).abs() < 0.02);
    assert!(report["theta_hat"].as_f64().unwrap() < 0.02);
    let keys: Vec<_> = report.as_object().unwrap().keys().cloned().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    for key in [
        "sphere",
        "radii",
        "theta_hat",
        "deviations",
        "cmc",
        "functionals",
        "provenance",
    ] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn analyze_torus_mesh_flags_star_shapedness() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("torus.off");
    let g = pinchlab(&[
        "generate",
        "--shape",
        "torus",
        "--res",
        "32",
        "--out",
        p(&mesh),
    ]);
    assert!(g.status.success());
    let o = pinchlab(&["analyze", "--mesh", p(&mesh)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("θ̂ undefined: not star-shaped"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn small_q_warns_but_runs() {
    let o = pinchlab(&["analyze", "--shape", "sphere", "--res", "2", "--q", "0.9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("q = 0.9 ≤ n/2"), "{}", stderr(&o));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"p": 3, "r": 1, "q": 4}"#).unwrap();
    let out = dir.path().join("r.json");
    let o = pinchlab(&[
        "analyze",
        "--shape",
        "sphere",
        "--res",
        "2",
        "--config",
        p(&cfg),
        "--q",
        "3",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let c = &report["provenance"]["config"];
    assert_eq!(c["p"], 3.0);
    assert_eq!(c["r"], 1);
    assert_eq!(c["q"], 3.0);

    fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let o = pinchlab(&[
        "analyze",
        "--shape",
        "sphere",
        "--res",
        "2",
        "--config",
        p(&cfg),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = pinchlab(&["analyze", "--mesh", p(&dir.path().join("missing.off"))]);
    assert_eq!(o.status.code(), Some(1));

    let open = dir.path().join("open.off");
    fs::write(&open, "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
    let o = pinchlab(&["analyze", "--mesh", p(&open)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("boundary"), "{}", stderr(&o));

    let o = pinchlab(&["analyze"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn pipeline_failure_exits_3_and_names_stage() {
    let o = pinchlab(&[
        "analyze",
        "--shape",
        "sphere",
        "--res",
        "2",
        "--max-iter",
        "1",
        "--tol",
        "1e-15",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("stage `spectral`"), "{}", stderr(&o));
}

#[test]
fn repeated_analyze_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let oa = pinchlab(&[
        "analyze",
        "--shape",
        "ellipsoid",
        "--res",
        "3",
        "--out",
        p(&a),
    ]);
    let ob = pinchlab(&[
        "analyze",
        "--shape",
        "ellipsoid",
        "--res",
        "3",
        "--out",
        p(&b),
    ]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(oa.stdout, ob.stdout);
}

#[test]
fn sweep_csv_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("res.csv");
    let o = pinchlab(&[
        "sweep",
        "--shape",
        "sphere",
        "--param",
        "res",
        "--values",
        "1,2,3",
        "--out",
        p(&csv),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("param,lambda1,k_pr,pinching_deficit,hm_residual,einstein_dev,tau_2q,h2_dev,theta_hat,cmc_eps,scal_eps,lemma_gap,notes")
    );
    let hm: Vec<f64> = lines
        .map(|l| l.split(',').nth(4).unwrap().parse::<f64>().unwrap().abs())
        .collect();
    assert_eq!(hm.len(), 3);
    assert!(hm.windows(2).all(|w| w[1] < w[0]), "{hm:?}");
    for group in ["spectral", "functionals", "deviations", "cmc"] {
        let svg = fs::read_to_string(dir.path().join(format!("res_{group}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"));
    }
}

#[test]
fn sweep_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let csv = dir.path().join("d.csv");
    fs::write(
        &spec,
        format!(
            r#"{{"shape": {{"kind": "perturbed_sphere", "params": {{"delta": 0}}}}, "resolution": 2,
                "param": "delta", "values": [0, 0.1], "out": {:?}}}"#,
            p(&csv)
        ),
    )
    .unwrap();
    let o = pinchlab(&["sweep", "--spec", p(&spec)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 3);
}

#[test]
fn sweep_validation_exits_2_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"shape": {"kind": "sphere", "params": {"radius": 1}}, "param": "res", "values": []}"#,
    )
    .unwrap();
    let o = pinchlab(&["sweep", "--spec", p(&spec), "--out", p(&csv)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!csv.exists());

    for values in ["0.1,0.05", "3"] {
        let o = pinchlab(&[
            "sweep",
            "--shape",
            "perturbed",
            "--param",
            "delta",
            "--values",
            values,
            "--out",
            p(&csv),
        ]);
        assert_eq!(o.status.code(), Some(2), "{values}");
    }
    let o = pinchlab(&[
        "sweep",
        "--shape",
        "sphere",
        "--param",
        "delta",
        "--values",
        "0,1",
        "--out",
        p(&csv),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!csv.exists());
}

#[test]
fn failed_rows_become_nan_with_notes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let o = pinchlab(&[
        "sweep",
        "--shape",
        "perturbed",
        "--param",
        "delta",
        "--values",
        "0.1,1.5",
        "--res",
        "1",
        "--out",
        p(&csv),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("1.5,NaN,NaN"), "{last}");
    assert!(last.contains("perturbation amplitude"), "{last}");

    let o = pinchlab(&[
        "sweep",
        "--shape",
        "perturbed",
        "--param",
        "delta",
        "--values",
        "1.5,2",
        "--res",
        "1",
        "--out",
        p(&csv),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn version_subcommand() {
    let o = pinchlab(&["version"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o).trim(),
        format!("pinchlab {}", env!("CARGO_PKG_VERSION"))
    );
}
