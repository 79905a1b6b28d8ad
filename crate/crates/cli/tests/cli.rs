use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn msle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msle")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn forward_oracle_run_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = msle(&["forward", "-s", "forces=constant", "-s", "a=0,0", "-o", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("PASS forward map matches the slit map"));
    assert!(dir.path().join("manifest.json").is_file());
    assert!(dir.path().join("trajectory_014.csv").is_file());
}

#[test]
fn config_file_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# coupled Dyson pairs\nkind = perturb-init\neps = 0.05\nn_paths = 4\nseed = 3\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (target, workers) in [(&a, "1"), (&b, "2")] {
        let out = msle(&["run", "-c", path(&cfg), "-o", path(target), "-w", workers]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["paths.csv", "report.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn invalid_kappa_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = msle(&["perturb-init", "-s", "kappa=5", "-s", "eps=0.05", "-o", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa must lie in (0,4]"));
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn epsilon_precondition_is_reported() {
    let out = msle(&["perturb-init", "-s", "eps=1", "-o", "unused"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon must satisfy"));
}

#[test]
fn kind_mismatch_and_bad_flags_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "kind = trace\n").unwrap();
    assert_eq!(msle(&["forward", "-c", path(&cfg)]).status.code(), Some(2));
    assert_eq!(msle(&["run"]).status.code(), Some(2));
    assert_eq!(msle(&["forward", "-s", "nonsense"]).status.code(), Some(2));
    assert_eq!(msle(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn keys_lists_configuration_keys() {
    let out = msle(&["keys"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "kappa_star"));
    assert!(text.lines().any(|l| l == "T_long"));
}
