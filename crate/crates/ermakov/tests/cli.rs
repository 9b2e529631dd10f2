//! End-to-end runs of the `ermakov` binary: exit codes, output routing,
//! environment overrides, the branch flag, and sweep mode.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ermakov"))
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const EQUILIBRIUM: &str = r#"
[system]
a = "0"
b = "-1"
c = "1"

[time]
t0 = 0.0
t1 = 1.0
step = 1e-2

[action]
kind = "integrate"
x0 = 1.0
v0 = 0.0
"#;

fn run(args: &[&std::ffi::OsStr], envs: &[(&str, &str)]) -> Output {
    let mut cmd = bin();
    cmd.args(args).env_remove("ERMAKOV_XMIN");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn run_config(path: &Path, extra: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut args: Vec<&std::ffi::OsStr> = vec!["--config".as_ref(), path.as_os_str()];
    args.extend(extra.iter().map(|s| -> &std::ffi::OsStr { s.as_ref() }));
    run(&args, envs)
}

#[test]
fn successful_run_prints_csv_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), "eq.toml", EQUILIBRIUM);
    let out = run_config(&cfg, &[], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,x,v\n"));
    assert_eq!(text.lines().count(), 102);
}

#[test]
fn output_flag_routes_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), "eq.toml", EQUILIBRIUM);
    let dest = dir.path().join("run.csv");
    let out = run_config(&cfg, &["--out", dest.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&dest).unwrap();
    assert!(text.starts_with("t,x,v\n"));
}

#[test]
fn missing_config_file_is_exit_two() {
    let out = run(&["--config".as_ref(), "/nonexistent/f.toml".as_ref()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn unknown_config_key_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(
        dir.path(),
        "typo.toml",
        &EQUILIBRIUM.replace("v0 = 0.0", "v0 = 0.0\nvel = 1"),
    );
    assert_eq!(run_config(&cfg, &[], &[]).status.code(), Some(2));
}

#[test]
fn unknown_flag_is_exit_two() {
    let out = run(&["--frobnicate".as_ref()], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_is_exit_zero() {
    let out = run(&["--help".as_ref()], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("--config"));
}

#[test]
fn singularity_guard_env_override_trips_integration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), "eq.toml", EQUILIBRIUM);
    // The equilibrium orbit sits at x = 1; a guard band wider than that
    // must abort the run as a math error.
    let out = run_config(&cfg, &[], &[("ERMAKOV_XMIN", "1.5")]);
    assert_eq!(out.status.code(), Some(3));

    // A tightened band is harmless.
    let out = run_config(&cfg, &[], &[("ERMAKOV_XMIN", "1e-12")]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn invalid_guard_env_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), "eq.toml", EQUILIBRIUM);
    for bad in ["banana", "-1.0", "0", "inf"] {
        let out = run_config(&cfg, &[], &[("ERMAKOV_XMIN", bad)]);
        assert_eq!(out.status.code(), Some(2), "ERMAKOV_XMIN={bad}");
    }

    // Even for actions that never touch the guard: a broken environment
    // fails fast instead of biting later when the action kind changes.
    let verify = write_scenario(
        dir.path(),
        "verify.toml",
        "[action]\nkind = \"verify\"\nsuite = \"pinney-sl2\"\n",
    );
    let out = run_config(&verify, &[], &[("ERMAKOV_XMIN", "oops")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reality_violation_is_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(
        dir.path(),
        "bad.toml",
        r#"
[time]
t0 = 0.0
t1 = 1.0
step = 1e-2

[action]
kind = "superpose"
omega = "1"
k = 1.0
i1 = 0.25
i2 = 0.25
"#,
    );
    let out = run_config(&cfg, &[], &[]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("verification failure"));
}

#[test]
fn failed_reducibility_is_exit_four_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(
        dir.path(),
        "control.toml",
        r#"
[system]
a = "1"
b = "0"
c = "1"

[time]
t0 = 0.0
t1 = 2.0
step = 1e-1

[action]
kind = "algebra-check"
grid_points = 101
"#,
    );
    let out = run_config(&cfg, &[], &[]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn branch_flag_emits_both_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(
        dir.path(),
        "two.toml",
        r#"
[time]
t0 = 0.0
t1 = 1.0
step = 1e-2

[action]
kind = "superpose"
omega = "1"
k = 1.0
i1 = 0.7
i2 = 0.9
"#,
    );
    let out = run_config(&cfg, &["--branch", "both"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,x_plus,v_plus,x_minus,v_minus\n"));
}

#[test]
fn sweep_runs_every_scenario_and_keeps_the_worst_code() {
    let dir = tempfile::tempdir().unwrap();
    let good_out = dir.path().join("good.csv");
    let good = write_scenario(
        dir.path(),
        "good.toml",
        &format!("{EQUILIBRIUM}\n[output]\npath = \"{}\"\n", good_out.display()),
    );
    let bad = write_scenario(
        dir.path(),
        "bad.toml",
        &format!(
            r#"
[time]
t0 = 0.0
t1 = 1.0
step = 1e-2

[action]
kind = "superpose"
omega = "1"
k = 1.0
i1 = 0.25
i2 = 0.25

[output]
path = "{}"
"#,
            dir.path().join("bad.csv").display()
        ),
    );
    let out = run(
        &[
            "--config".as_ref(),
            good.as_os_str(),
            "--config".as_ref(),
            bad.as_os_str(),
        ],
        &[],
    );
    // The failing sibling dominates, but the good scenario still wrote.
    assert_eq!(out.status.code(), Some(4));
    assert!(std::fs::read_to_string(&good_out).unwrap().starts_with("t,x,v\n"));
}

#[test]
fn sweep_requires_per_scenario_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_scenario(dir.path(), "a.toml", EQUILIBRIUM);
    let b = write_scenario(dir.path(), "b.toml", EQUILIBRIUM);

    // Without [output] paths both would print to stdout.
    let out = run(
        &["--config".as_ref(), a.as_os_str(), "--config".as_ref(), b.as_os_str()],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));

    // A shared --out would race.
    let shared = dir.path().join("shared.csv");
    let out = run(
        &[
            "--config".as_ref(),
            a.as_os_str(),
            "--config".as_ref(),
            b.as_os_str(),
            "--out".as_ref(),
            shared.as_os_str(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn precision_flag_controls_rendering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(dir.path(), "eq.toml", EQUILIBRIUM);
    let out = run_config(&cfg, &["--precision", "3"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("1.00e0"));
    assert!(!text.contains("1.0000000000000000e0"));
}

#[test]
fn verify_action_prints_the_report_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_scenario(
        dir.path(),
        "verify.toml",
        r#"
[action]
kind = "verify"
suite = "dissipative-gauge"
"#,
    );
    let out = run_config(&cfg, &[], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS (exact)"));
    assert!(!text.contains("FAIL"));
}
