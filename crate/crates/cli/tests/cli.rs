use std::path::Path;
use std::process::{Command, Output};

fn flexure(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexure"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn version_prints_build_metadata() {
    let o = Command::new(env!("CARGO_BIN_EXE_flexure")).arg("--version").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains(env!("CARGO_PKG_VERSION")) && s.contains("target") && s.contains("profile"), "{s}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexure(&["solve", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_config_value_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexure(&["solve", "--tau", "2.5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[solver]\nunknown_key = 1\n").unwrap();
    let o = flexure(&["eig", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unperturbed_solve_succeeds_with_zero_solution() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexure(&["solve", "--epsilon", "0", "--omega", "2.5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("converged = true"), "{s}");
    assert!(s.contains("strong_residual = 0.00000000000000000e0"), "{s}");
    for f in ["stages.csv", "mode_residuals.csv", "solution.csv"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
}

#[test]
fn near_resonant_solve_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexure(&["solve", "--epsilon", "1e-3", "--omega", "1.0001"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not certified"));
}

#[test]
fn eig_lists_near_fourth_powers() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexure(&["eig", "--J", "4"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let l2: f64 = s.lines().find_map(|l| l.strip_prefix("lambda_2 = ")).unwrap().parse().unwrap();
    assert!((l2 - 16.0).abs() < 1e-2, "{l2}");
    assert!(dir.path().join("eig.csv").is_file());
}

#[test]
fn qsolve_at_zero_epsilon_returns_zero_mean() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexure(&["qsolve", "--epsilon", "0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("v_h2_norm = 0.00000000000000000e0"));
}

#[test]
fn linop_check_agrees_between_inversions() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexure(&["linop-check", "--epsilon", "1e-3", "--omega", "2.3", "--N", "6", "--J", "8"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let d: f64 = s.lines().find_map(|l| l.strip_prefix("direct_vs_preconditioned = ")).unwrap().parse().unwrap();
    assert!(d < 1e-8, "{d}");
    assert!(dir.path().join("neumann.csv").is_file());
}

#[test]
fn sieve_writes_excluded_intervals_and_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexure(&["sieve", "--epsilon", "0", "--gamma", "0.04", "--gamma-ladder"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("excluded.csv")).unwrap();
    assert!(csv.starts_with("lo,hi,center,halfwidth,causes"));
    assert!(csv.lines().count() > 1);
    assert!(dir.path().join("gamma_ladder.csv").is_file());
}

#[test]
fn sweep_emits_events_and_sorted_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_flexure"))
        .args(["sweep", "--epsilon-range", "0,1e-3", "--epsilon-steps", "2", "--omega-range", "2.2,2.3", "--omega-steps", "2", "--J", "8"])
        .arg("--out")
        .arg(dir.path())
        .env("FLEXURE_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let events: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(events.len(), 5);
    assert_eq!(events[4]["event"], "done");
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let keys: Vec<(usize, usize)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',');
            (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
        })
        .collect();
    assert_eq!(keys, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
}
