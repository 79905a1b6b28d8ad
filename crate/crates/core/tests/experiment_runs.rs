use std::fs;

use msle_core::experiment::{execute, parse_config_str, run, ExperimentKind};

fn config(text: &str, out: &std::path::Path) -> msle_core::experiment::ExperimentConfig {
    let over = vec![("out".to_string(), out.display().to_string())];
    parse_config_str(text, &over).unwrap()
}

#[test]
fn forward_run_matches_the_slit_map() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("kind = forward\nforces = constant\na = 0,0\ngrid = -1,1,2.5,3.5,3,2\n", dir.path());
    let manifest = run(&cfg).unwrap();
    assert!(manifest.pass);
    assert_eq!(manifest.exit_code(), 0);
    assert_eq!(manifest.claims.len(), 1);
    let csv = fs::read_to_string(dir.path().join("trajectory_000.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,re,im,swallowed"));
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    // z = -1 + 2.5i at T = 1.
    let expected = num_complex::Complex64::new(-1.0, 2.5).powi(2) + 4.0;
    let expected = if expected.sqrt().im < 0.0 { -expected.sqrt() } else { expected.sqrt() };
    assert!((last[1] - expected.re).abs() < 1e-9 && (last[2] - expected.im).abs() < 1e-9);
    let manifest_json = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest_json.contains("\"tool_version\""));
    assert!(manifest_json.contains("trajectory_005.csv"));
}

#[test]
fn reruns_are_byte_identical() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let text = "kind = perturb-init\neps = 0.05\nn_paths = 6\nseed = 9\n";
    let m1 = run(&config(text, d1.path())).unwrap();
    let m2 = run(&config(text, d2.path())).unwrap();
    assert_eq!(m1.artifacts, m2.artifacts);
    for name in &m1.artifacts {
        assert_eq!(fs::read(d1.path().join(name)).unwrap(), fs::read(d2.path().join(name)).unwrap(), "{name}");
    }
    let mut c = m1.config.clone();
    c.remove("out");
    let mut c2 = m2.config.clone();
    c2.remove("out");
    assert_eq!(c, c2);
}

#[test]
fn worker_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("kind = perturb-kappa\nkappa = 2\nkappa_star = 3\nT_long = 3\nn_paths = 6\n", dir.path());
    cfg.workers = Some(1);
    let serial = execute(&cfg).unwrap();
    cfg.workers = Some(4);
    assert_eq!(serial, execute(&cfg).unwrap());
}

#[test]
fn every_kind_but_verify_produces_artifacts() {
    for (kind, extra) in [
        (ExperimentKind::SimulateDyson, "n_paths = 2\na = 1,0,-1\nkappa = 2"),
        (ExperimentKind::Trace, "trace_samples = 20"),
        (ExperimentKind::Hausdorff, "n_paths = 2\ntrace_samples = 20"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(&format!("kind = {kind}\n{extra}\n"), dir.path());
        let m = run(&cfg).unwrap();
        assert!(!m.artifacts.is_empty(), "{kind}");
        for name in &m.artifacts {
            assert!(dir.path().join(name).is_file(), "{kind}: {name}");
        }
    }
}

#[test]
fn dyson_dump_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("kind = simulate-dyson\nn_paths = 1\na = 1,0,-1\nkappa = 2\n", dir.path());
    run(&cfg).unwrap();
    let csv = fs::read_to_string(dir.path().join("dyson_0000.csv")).unwrap();
    assert!(csv.starts_with("t,value,value2,value3\n"));
    assert_eq!(csv.lines().count(), 1 + 1001);
    let sidecar = fs::read_to_string(dir.path().join("dyson.json")).unwrap();
    assert!(sidecar.contains("\"seeds\""));
}

#[test]
fn exit_codes_follow_claims() {
    use msle_core::experiment::{ClaimOutcome, RunManifest};
    let mut m = RunManifest {
        config: Default::default(),
        tool_version: "0".into(),
        wall_time_s: 0.0,
        claims: vec![ClaimOutcome { claim: "c".into(), pass: true }],
        artifacts: vec![],
        pass: true,
    };
    assert_eq!(m.exit_code(), 0);
    m.pass = false;
    assert_eq!(m.exit_code(), 1);
    let err = parse_config_str("kind = forward\nkappa = 5\n", &[]).and_then(|c| execute(&c).map(|_| ()));
    assert_eq!(err.unwrap_err().exit_code(), 2);
}
