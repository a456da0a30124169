use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_swarm-lab"));
    c.env_remove("SWARM_LAB_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

const SMALL: &str = "name=small\nagents=25\nruns=3\nsweep.variable=r\nsweep.values=0.1,0.3\nintegrator.t_end=10\n";

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("small.cfg");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn list_presets_names_every_figure() {
    let out = run(&["list-presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig4_metric", "fig4_topological", "fig5b", "fig6_twocluster", "fig7_longrange", "fig8_cluster_count"]
    {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["run", "--config", "/nonexistent/x.cfg"]).status.code(), Some(1));
    assert_eq!(run(&["run", "--preset", "no_such_preset"]).status.code(), Some(1));
    let bad = write_config(dir.path(), "agents=0\nintegrator.dt=-1\n");
    let out = run(&["run", "--config", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("agents") && err.contains("integrator.dt"), "{err}");
    assert_eq!(run(&["run"]).status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = run(&["run", "--config", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["run", "--config", &cfg, "--out", b.to_str().unwrap(), "--jobs", "1"]).status.success());
    for f in ["aggregate.csv", "runs.csv", "histogram.csv", "joint.csv", "config.echo"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f} differs");
        if f.ends_with(".csv") {
            assert!(x.starts_with(b"# schema=1\n"), "{f} lacks the schema line");
        }
    }
}

#[test]
fn seed_flag_changes_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["run", "--config", &cfg, "--seed", "7", "--out", b.to_str().unwrap()]).status.success());
    assert_ne!(std::fs::read(a.join("runs.csv")).unwrap(), std::fs::read(b.join("runs.csv")).unwrap());
    assert!(std::fs::read_to_string(b.join("config.echo")).unwrap().contains("seed=7"));
}

#[test]
fn env_var_sets_output_dir_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let env_dir = dir.path().join("from_env");
    let status = bin().args(["run", "--config", &cfg]).env("SWARM_LAB_OUT", &env_dir).output().unwrap().status;
    assert!(status.success());
    assert!(env_dir.join("aggregate.csv").exists());
    let flag_dir = dir.path().join("from_flag");
    let status = bin()
        .args(["run", "--config", &cfg, "--out", flag_dir.to_str().unwrap()])
        .env("SWARM_LAB_OUT", dir.path().join("unused"))
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(flag_dir.join("aggregate.csv").exists());
    assert!(!dir.path().join("unused").exists());
}

#[test]
fn echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    let echo = a.join("config.echo");
    assert!(run(&["run", "--config", echo.to_str().unwrap(), "--out", b.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read(a.join("runs.csv")).unwrap(), std::fs::read(b.join("runs.csv")).unwrap());
}

#[test]
fn runs_override_and_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let o = run(&["run", "--preset", "fig5a", "--runs", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let runs = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2);
}

#[test]
fn check_passes() {
    let out = run(&["check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8(out.stdout).unwrap().lines().all(|l| l.starts_with("PASS")));
}
