//! End-to-end exercises of the `sslab` binary: every subcommand, the output
//! files, and the machine-readable failure path.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sslab")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sslab-cli-{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn sslab")
}

fn find_file(dir: &Path, needle: &str) -> PathBuf {
    std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .find(|p| p.file_name().unwrap().to_str().unwrap().contains(needle))
        .unwrap_or_else(|| panic!("no file matching '{needle}' in {dir:?}"))
}

const QUICK: &[&str] = &[
    "--override",
    "train.iterations=200",
    "--override",
    "dataset.unlabeled_count=200",
    "--override",
    "dataset.test_count=200",
];

#[test]
fn train_then_analyze_round_trip() {
    let dir = temp_dir("train");
    let out = run(&[
        &["train", "--seed", "4", "--out", dir.to_str().unwrap()],
        QUICK,
    ]
    .concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // run outputs: summary json, three CSVs, two checkpoints, config snapshot
    let summary_path = find_file(&dir, "-summary.json");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary_path).unwrap()).unwrap();
    assert_eq!(summary["seed"], 4);
    let best_error = summary["best"]["test_error"].as_f64().unwrap();
    find_file(&dir, "-timeseries.csv");
    find_file(&dir, "-reliability.csv");
    find_file(&dir, "-logit-hist.csv");
    find_file(&dir, "-final.ckpt");
    let ckpt = find_file(&dir, "-best.ckpt");

    // analyzing the best checkpoint on the same seed reproduces the recorded
    // best-row error exactly
    let out = run(&[
        &[
            "analyze",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--seed",
            "4",
            "--out",
            dir.to_str().unwrap(),
        ],
        QUICK,
    ]
    .concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let analysis_path = find_file(&dir, "analysis-");
    let analysis: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&analysis_path).unwrap()).unwrap();
    let analyzed_error = analysis["report"]["error_rate"].as_f64().unwrap();
    assert_eq!(analyzed_error, best_error);
}

#[test]
fn sweep_emits_report_files() {
    let dir = temp_dir("sweep");
    let out = run(&[
        &[
            "sweep",
            "--out",
            dir.to_str().unwrap(),
            "--override",
            "run.seeds=1,2",
            "--variant",
            "a: penalty.lambda=0",
            "--variant",
            "b: penalty.lambda=0.1",
        ],
        QUICK,
    ]
    .concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(find_file(&dir, "-summary.csv")).unwrap();
    assert!(csv.starts_with("variant,mean_error"));
    assert_eq!(csv.lines().count(), 3, "header plus two variants");
    // per-run logs are emitted too: 2 variants x 2 seeds
    let run_summaries = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| {
            let name = e.file_name().to_string_lossy().to_string();
            name.starts_with("run-") && name.ends_with("-summary.json")
        })
        .count();
    assert_eq!(run_summaries, 4);
}

#[test]
fn dynamics_grid_excludes_center() {
    let dir = temp_dir("dynamics");
    let out = run(&["dynamics", "--resolution", "9", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.join("dynamics-9.csv")).unwrap();
    // resolution 9 gives 9 grid points of which p = 0.5 is excluded
    assert_eq!(text.lines().count(), 1 + 8);
    assert!(!text.contains("\n0.5,"));
}

#[test]
fn rank_orders_methods_from_csv() {
    let dir = temp_dir("rank");
    let scores = dir.join("scores.csv");
    std::fs::write(
        &scores,
        "method,err_a,err_b,acc_c\nlower_is_better,1,1,0\nalpha,2.0,3.0,0.9\nbeta,1.0,4.0,0.7\n",
    )
    .unwrap();
    let out = run(&[
        "rank",
        "--scores",
        scores.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("friedman-ranks.csv")).unwrap();
    // alpha: ranks 2, 1, 1 -> 4/3; beta: ranks 1, 2, 2 -> 5/3
    assert!(csv.contains("alpha,1.3333333333333333"));
    assert!(csv.contains("beta,1.6666666666666667"));
}

#[test]
fn failures_exit_nonzero_with_json_error() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["train", "--override", "no.such.key=1"],
        vec!["train", "--override", "penalty.margin=-3"],
        vec!["analyze"],
        vec!["rank"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = run(&args);
        assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
        let stderr = String::from_utf8_lossy(&out.stderr);
        let parsed: serde_json::Value = serde_json::from_str(stderr.trim())
            .unwrap_or_else(|e| panic!("stderr for {args:?} is not JSON ({e}): {stderr}"));
        assert!(parsed["error"].is_string());
        assert!(parsed["kind"].is_string());
    }
}

#[test]
fn config_file_and_override_precedence() {
    let dir = temp_dir("config");
    let config_path = dir.join("lab.conf");
    std::fs::write(
        &config_path,
        "# comment\ntrain.iterations = 150\ndataset.unlabeled_count = 150\ndataset.test_count = 150\npenalty.lambda = 0\n",
    )
    .unwrap();
    let out = run(&[
        "train",
        "--config",
        config_path.to_str().unwrap(),
        "--override",
        "train.iterations=250",
        "--seed",
        "9",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let snapshot = std::fs::read_to_string(find_file(&dir, "-config.txt")).unwrap();
    assert!(snapshot.contains("train.iterations = 250"), "override wins");
    assert!(snapshot.contains("dataset.unlabeled_count = 150"));
}
