use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn beamcorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamcorr"))
        .args(args)
        .env_remove("BEAMCORR_OUT")
        .output()
        .expect("spawn beamcorr")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("beamcorr-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn validate_passes_with_defaults() {
    let out = beamcorr(&["validate"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("0 failed"));
}

#[test]
fn upsilon_is_reproducible_across_runs_and_workers() {
    let a = scratch("a");
    let b = scratch("b");
    let common = ["upsilon", "--trials", "200", "--seed", "7"];
    let run = |dir: &Path, workers: &str| {
        let mut args = common.to_vec();
        args.extend(["--workers", workers, "--out", dir.to_str().unwrap()]);
        let out = beamcorr(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&a, "1");
    run(&b, "3");
    let (fa, fb) = (read_all(&a), read_all(&b));
    let names: Vec<_> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["upsilon_summary.csv", "upsilon_trials.csv"]);
    assert_eq!(fa, fb);
    let trials = String::from_utf8(fa[1].1.clone()).unwrap();
    assert!(trials.starts_with("scenario_hash,trial_id,P_multi,P_keyhole_ref,effective_gain_dB"));
    assert_eq!(trials.lines().count(), 201);
}

#[test]
fn output_dir_from_environment() {
    let dir = scratch("env");
    let out = Command::new(env!("CARGO_BIN_EXE_beamcorr"))
        .args(["gains", "--trials", "100"])
        .env("BEAMCORR_OUT", &dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("fig1.csv").is_file());
    assert!(dir.join("gains_summary.csv").is_file());
}

#[test]
fn missing_output_dir_is_an_error() {
    let missing = std::env::temp_dir().join("beamcorr-cli-does-not-exist/nested");
    let out = beamcorr(&["upsilon", "--trials", "200", "--out", missing.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));
}

#[test]
fn bad_config_reports_key() {
    let dir = scratch("cfg");
    let path = dir.join("bad.toml");
    fs::write(&path, "[run]\ntrials = 10\n").unwrap();
    let out = beamcorr(&["upsilon", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.trials"));
}

#[test]
fn unknown_strategy_rejected() {
    let out = beamcorr(&["upsilon", "--strategy", "random"]);
    assert!(!out.status.success());
}
