//! End-to-end tests of the `chmp` binary: exit codes, file formats, CSV
//! schemas, and determinism.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

fn chmp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chmp"))
        .args(args)
        .env_remove("CHMP_DEFAULT_EPS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn gen_is_deterministic_for_fixed_spec_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let f1 = dir.path().join("one.chmp");
    let f2 = dir.path().join("two.chmp");
    for f in [&f1, &f2] {
        let out = chmp(&[
            "gen", "--case", "a", "--m", "2", "--n", "4", "--seed", "7", "--out",
            f.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&f1).unwrap(), fs::read(&f2).unwrap());
}

#[test]
fn gen_square_inside_round_trips_and_solves_to_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("square.chmp");
    let out = chmp(&["gen", "--case", "square-inside", "--out", f.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(&f).unwrap();
    assert!(text.starts_with("CHMP v1 2 5\n"), "{text}");
    assert_eq!(text.lines().count(), 7); // header, 5 columns, p

    // p sits exactly on the boundary, the worst case for the convex-step
    // solvers; a coarse eps keeps this a smoke test rather than a benchmark.
    let solved = chmp(&["solve", f.to_str().unwrap(), "--solver", "gt", "--eps", "1e-2"]);
    assert_eq!(solved.status.code(), Some(0), "{}", stdout(&solved));
    assert!(stdout(&solved).contains("outcome    epsilon"));
}

#[test]
fn gen_rejects_unknown_case_with_usage_error() {
    let out = chmp(&["gen", "--case", "pentagon"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn solve_reports_witness_with_exit_2_on_outside_square() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("out.chmp");
    chmp(&["gen", "--case", "square-outside", "--out", f.to_str().unwrap()]);
    let solved = chmp(&["solve", f.to_str().unwrap(), "--solver", "ta"]);
    assert_eq!(solved.status.code(), Some(2));
    let text = stdout(&solved);
    assert!(text.contains("outcome    witness"), "{text}");
    // Hull distance is exactly 0.05; the witness estimate lies within a
    // factor of two above it.
    let dist: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("distance   "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((0.05..=0.10).contains(&dist), "witness distance {dist}");
}

#[test]
fn solve_missing_file_exits_1() {
    let out = chmp(&["solve", "/nonexistent/instance.chmp"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_honors_eps_resolution_order() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("a.chmp");
    chmp(&["gen", "--case", "a", "--m", "10", "--n", "50", "--out", f.to_str().unwrap()]);

    // Coarse env default terminates earlier than the built-in 1e-4 ...
    let coarse = Command::new(env!("CARGO_BIN_EXE_chmp"))
        .args(["solve", f.to_str().unwrap(), "--solver", "gt"])
        .env("CHMP_DEFAULT_EPS", "0.5")
        .output()
        .unwrap();
    let fine = chmp(&["solve", f.to_str().unwrap(), "--solver", "gt"]);
    assert_eq!(fine.status.code(), Some(0), "interior instance must reach epsilon");
    let iters = |o: &Output| -> usize {
        stdout(o)
            .lines()
            .find_map(|l| l.strip_prefix("iterations "))
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    assert!(iters(&coarse) < iters(&fine));

    // ... and an explicit --eps beats the environment.
    let flag_wins = Command::new(env!("CARGO_BIN_EXE_chmp"))
        .args(["solve", f.to_str().unwrap(), "--solver", "gt", "--eps", "1e-4"])
        .env("CHMP_DEFAULT_EPS", "0.5")
        .output()
        .unwrap();
    assert_eq!(iters(&flag_wins), iters(&fine));

    let bad_env = Command::new(env!("CARGO_BIN_EXE_chmp"))
        .args(["solve", f.to_str().unwrap()])
        .env("CHMP_DEFAULT_EPS", "not-a-float")
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(1));
}

#[test]
fn bench_emits_header_plus_one_row_per_solve() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = chmp(&[
        "bench", "--case", "a", "--m", "10", "--n", "60", "--reps", "1", "--solvers", "gt",
        "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "case,m,n,solver,seed,iterations,outcome,delta,time_s");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("a,10,60,gt,0,"));
}

#[test]
fn bench_rows_are_deterministic_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let strip_time = |path: &Path| -> Vec<String> {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    let c1 = dir.path().join("b1.csv");
    let c2 = dir.path().join("b2.csv");
    for (csv, jobs) in [(&c1, "1"), (&c2, "3")] {
        let out = chmp(&[
            "bench", "--case", "c", "--m", "15", "--n", "40,80", "--reps", "2", "--solvers",
            "gt,spg", "--seed", "5", "--jobs", jobs, "--out", csv.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(strip_time(&c1), strip_time(&c2));
}

#[test]
fn lpfeas_exit_codes_track_the_verdict() {
    let feasible = chmp(&["lpfeas", "--m", "12", "--n", "40", "--nbound", "100"]);
    assert_eq!(feasible.status.code(), Some(0), "{}", stdout(&feasible));
    assert!(stdout(&feasible).contains("verdict    feasible"));

    let infeasible =
        chmp(&["lpfeas", "--m", "12", "--n", "40", "--nbound", "100", "--infeasible"]);
    assert_eq!(infeasible.status.code(), Some(2));
    assert!(stdout(&infeasible).contains("verdict    infeasible"));
}

#[test]
fn lpfeas_round_trips_generated_instances_through_lpf_files() {
    let dir = tempfile::tempdir().unwrap();
    let lpf = dir.path().join("inst.lpf");
    let direct = chmp(&[
        "lpfeas", "--m", "10", "--n", "30", "--nbound", "80", "--seed", "3", "--out",
        lpf.to_str().unwrap(),
    ]);
    assert_eq!(direct.status.code(), Some(0));
    assert!(fs::read_to_string(&lpf).unwrap().starts_with("LPF v1 10 30"));

    let reread = chmp(&["lpfeas", "--input", lpf.to_str().unwrap()]);
    assert_eq!(reread.status.code(), Some(0));
    let pick = |o: &Output, field: &str| -> String {
        stdout(o)
            .lines()
            .find_map(|l| l.strip_prefix(field))
            .map(str::trim)
            .unwrap()
            .to_string()
    };
    assert_eq!(pick(&direct, "iterations "), pick(&reread, "iterations "));
}

/// IDX fixture pair: 2x2 images, two classes (dark pixels = 0, bright = 1).
fn write_idx_fixture(dir: &Path, stem: &str, pixels: &[[u8; 4]], labels: &[u8]) {
    let mut img = Vec::new();
    img.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    img.extend_from_slice(&(pixels.len() as u32).to_be_bytes());
    img.extend_from_slice(&2u32.to_be_bytes());
    img.extend_from_slice(&2u32.to_be_bytes());
    for p in pixels {
        img.extend_from_slice(p);
    }
    let mut f = fs::File::create(dir.join(format!("{stem}-images-idx3-ubyte"))).unwrap();
    f.write_all(&img).unwrap();

    let mut lbl = Vec::new();
    lbl.extend_from_slice(&0x0000_0801u32.to_be_bytes());
    lbl.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    lbl.extend_from_slice(labels);
    let mut f = fs::File::create(dir.join(format!("{stem}-labels-idx1-ubyte"))).unwrap();
    f.write_all(&lbl).unwrap();
}

#[test]
fn classify_separable_fixture_reaches_full_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let train: Vec<[u8; 4]> = vec![
        [10, 12, 8, 11],
        [14, 9, 13, 10],
        [8, 8, 15, 12],
        [210, 200, 205, 198],
        [199, 212, 201, 207],
        [204, 196, 208, 203],
    ];
    write_idx_fixture(dir.path(), "train", &train, &[0, 0, 0, 1, 1, 1]);
    let test: Vec<[u8; 4]> = vec![[11, 10, 12, 9], [206, 202, 199, 209]];
    write_idx_fixture(dir.path(), "t10k", &test, &[0, 1]);

    let csv = dir.path().join("report.csv");
    let path = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let out = chmp(&[
        "classify",
        "--train-images",
        &path("train-images-idx3-ubyte"),
        "--train-labels",
        &path("train-labels-idx1-ubyte"),
        "--test-images",
        &path("t10k-images-idx3-ubyte"),
        "--test-labels",
        &path("t10k-labels-idx1-ubyte"),
        "--solver",
        "ta",
        "--jobs",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("accuracy   1.0000 (2/2"), "{}", stdout(&out));

    let report = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "test_id,true_label,predicted_label,dist_0,dist_1,wall_time_ms");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0,0,0,"));
    assert!(lines[2].starts_with("1,1,1,"));
}
