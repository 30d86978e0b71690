use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

const SMALL: &str = "sides = 3,3\nreplicas = 24\nt_grid = 0, 0.01, 0.5\nevent = supersat e=(1,1)-(1,2)\nprobability_samples = 5000\nseed = 11\n";

fn eachaos(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_eachaos"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_into(dir: &TempDir, command: &str, out: &str, threads: &str) -> std::process::Output {
    fs::write(dir.path().join("exp.txt"), SMALL).unwrap();
    eachaos(dir.path(), &[command, "--config", "exp.txt", "--out", out, "--threads", threads])
}

fn read(dir: &TempDir, path: &str) -> Vec<u8> {
    fs::read(dir.path().join(path)).unwrap_or_else(|e| panic!("{path}: {e}"))
}

#[test]
fn every_experiment_is_independent_of_thread_count_and_rerun() {
    let dir = TempDir::new().unwrap();
    for (command, files) in [
        ("chaos", &["chaos_curve.csv", "theorem_report.json"][..]),
        ("droplet", &["droplet_census.csv", "droplet_histogram.csv"][..]),
        ("events", &["event_probabilities.csv"][..]),
        ("gibbs", &["gibbs_curve.csv", "gibbs_overlap.csv"][..]),
    ] {
        for (out, threads) in [("one", "1"), ("eight", "8"), ("again", "1")] {
            let status = run_into(&dir, command, &format!("{command}-{out}"), threads);
            assert!(status.status.success(), "{command}: {}", String::from_utf8_lossy(&status.stderr));
        }
        for file in files {
            let one = read(&dir, &format!("{command}-one/{file}"));
            assert!(!one.is_empty());
            assert_eq!(one, read(&dir, &format!("{command}-eight/{file}")), "{command} {file}");
            assert_eq!(one, read(&dir, &format!("{command}-again/{file}")), "{command} {file}");
        }
    }
}

#[test]
fn csv_floats_have_seventeen_significant_digits() {
    let dir = TempDir::new().unwrap();
    assert!(run_into(&dir, "chaos", "out", "2").status.success());
    let text = String::from_utf8(read(&dir, "out/chaos_curve.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("t,mean,stderr,replicas"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[..4], ["0.0000000000000000e0", "1.0000000000000000e0", "0.0000000000000000e0", "24"]);
    for cell in text.lines().skip(1).flat_map(|l| l.split(',')).filter(|c| c.contains('e')) {
        let mantissa = cell.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 17, "{cell}");
    }
}

#[test]
fn seed_flag_changes_the_draws() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("exp.txt"), SMALL).unwrap();
    for seed in ["1", "2"] {
        let out = eachaos(dir.path(), &["droplet", "--config", "exp.txt", "--seed", seed, "--out", seed]);
        assert!(out.status.success());
    }
    assert_ne!(read(&dir, "1/droplet_census.csv"), read(&dir, "2/droplet_census.csv"));
    let config = String::from_utf8(read(&dir, "2/config.txt")).unwrap();
    assert!(config.contains("seed = 2"));
}

#[test]
fn cage_conditioned_census_through_the_command_line() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("cage.txt"), "sides = 5\nreplicas = 3\nevent = cage e=(2,2)-(2,3) r=0.1\n").unwrap();
    let out = eachaos(dir.path(), &["droplet", "--config", "cage.txt", "--out", "c"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let hist = String::from_utf8(read(&dir, "c/droplet_histogram.csv")).unwrap();
    assert_eq!(hist, "droplet_size,count\n1,3\n");
}

#[test]
fn bad_input_exits_with_an_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.txt"), "sides = 3,3\nwidth = 2\n").unwrap();
    let out = eachaos(dir.path(), &["chaos", "--config", "bad.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
    let out = eachaos(dir.path(), &["chaos", "--config", "missing.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let out = eachaos(dir.path(), &["gibbs", "--threads", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = eachaos(dir.path(), &["frobnicate"]);
    assert!(!out.status.success());
}
