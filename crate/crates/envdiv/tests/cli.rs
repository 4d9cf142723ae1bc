use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn envdiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_envdiv")).args(args).output().expect("spawn envdiv")
}

fn ok(args: &[&str]) -> String {
    let out = envdiv(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        "[domain]\nkind = \"gridnav\"\nk = 8\n\n[run]\nstage2_iters = 200\ninitial_population = 100\nsnapshot_interval = 100\n",
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_then_inspect_the_archive() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let run_dir = tmp.path().join("run");
    let run = run_dir.to_str().unwrap();
    ok(&["run", "--config", &cfg, "--deterministic", "--out", run]);
    for f in ["archive.jsonl", "run.json", "report.txt", "snapshots/stage2_0000100.jsonl", "snapshots/stage2_0000200.jsonl"] {
        assert!(run_dir.join(f).is_file(), "{f}");
    }

    let archive = run_dir.join("archive.jsonl");
    let archive = archive.to_str().unwrap();
    let svg = ok(&["heatmap", archive, "--x", "XPosition", "--y", "YPosition"]);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

    let levels = ok(&["sample", run, "-n", "5", "--seed", "3"]);
    assert_eq!(levels.lines().count(), 5);

    let report = ok(&["report", archive]);
    assert!(report.contains("occupied cells"));
}

#[test]
fn target_samples_round_trip_through_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("samples.csv");
    let csv = csv.to_str().unwrap();
    ok(&["target-samples", "--domain", "alchemy", "-n", "50", "--out", csv]);
    let table = ok(&["fit", csv, "--domain", "alchemy"]);
    assert!(table.contains("ManhattanToOptimal"));
}

#[test]
fn configuration_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let bad = envdiv(&["run", "--config", &cfg, "--sweep", "warp=1,2"]);
    assert_eq!(bad.status.code(), Some(2));

    let typo = tmp.path().join("typo.toml");
    fs::write(&typo, "[domain]\nkind = \"gridnav\"\n\n[run]\nstage_2_iters = 5\n").unwrap();
    let bad = envdiv(&["run", "--config", typo.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}
