//! End-to-end behavior of the `shark` binary: subcommands, output formats,
//! exit codes, and determinism of generated artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn shark() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shark"))
}

fn run(args: &[&str]) -> Output {
    shark().args(args).output().expect("binary should launch")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout should be utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr should be utf-8")
}

fn assert_code(out: &Output, expected: i32) {
    assert_eq!(
        out.status.code(),
        Some(expected),
        "stdout:\n{}\nstderr:\n{}",
        stdout(out),
        stderr(out)
    );
}

#[test]
fn gen_writes_identical_bytes_for_identical_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = run(&[
            "gen",
            "--n",
            "80",
            "--features",
            "3",
            "--k",
            "2",
            "--seed",
            "11",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_code(&out, 0);
        assert!(stdout(&out).contains("80 points"));
    }
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    assert!(
        std::str::from_utf8(&bytes_a)
            .unwrap()
            .starts_with("f1,f2,f3,label\n"),
        "generated files carry a header and a label column"
    );
}

#[test]
fn fit_reports_summary_and_writes_parseable_json() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    assert_code(
        &run(&[
            "gen",
            "--n",
            "150",
            "--features",
            "4",
            "--k",
            "3",
            "--seed",
            "3",
            "--out",
            data.to_str().unwrap(),
        ]),
        0,
    );
    let summary = dir.path().join("fit.json");
    let out = run(&[
        "fit",
        "--dataset",
        data.to_str().unwrap(),
        "--has-header",
        "--label-column",
        "4",
        "--runs",
        "5",
        "--out",
        summary.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let text = stdout(&out);
    for needle in ["algorithm: shark", "objective", "weights", "ari", "labels:"] {
        assert!(text.contains(needle), "missing '{needle}' in:\n{text}");
    }

    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(parsed["algorithm"], "shark");
    assert_eq!(parsed["n"], 150);
    assert_eq!(parsed["m"], 4);
    assert_eq!(parsed["k"], 3);
    assert_eq!(parsed["runs"], 5);
    assert_eq!(parsed["labels"].as_array().unwrap().len(), 150);
    assert_eq!(parsed["weights"].as_array().unwrap().len(), 4);
    assert!(parsed["objective"].as_f64().unwrap().is_finite());
    assert!(parsed["ari"].as_f64().is_some(), "truth given, ari scored");
    let sizes: u64 = parsed["cluster_sizes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(sizes, 150);
}

#[test]
fn fit_without_labels_still_fits() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("plain.csv");
    std::fs::write(
        &data,
        "1.0,2.0\n1.1,2.1\n0.9,1.9\n5.0,6.0\n5.1,6.1\n4.9,5.9\n",
    )
    .unwrap();
    let out = run(&[
        "fit", "--dataset", data.to_str().unwrap(), "--k", "2", "--runs", "2",
    ]);
    assert_code(&out, 0);
    assert!(!stdout(&out).contains("ari:"), "no truth, no score");
}

fn write_bench_config(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("bench.toml");
    std::fs::write(
        &cfg,
        r#"
runs = 3
base_seed = 4
algorithms = ["kmeans_pp", "shark"]

[[datasets]]
n = 120
m = 4
k = 2
noise_fraction = 0.5
"#,
    )
    .unwrap();
    cfg
}

#[test]
fn bench_emits_every_format_and_respects_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_bench_config(dir.path());
    for (format, probe) in [
        ("markdown", "| dataset |"),
        ("csv", "dataset,algorithm,mean_ari"),
        ("json", "\"rows\""),
    ] {
        let out = run(&[
            "bench",
            "--config",
            cfg.to_str().unwrap(),
            "--format",
            format,
        ]);
        assert_code(&out, 0);
        assert!(
            stdout(&out).contains(probe),
            "format {format} missing {probe:?}:\n{}",
            stdout(&out)
        );
    }

    let report = dir.path().join("report.md");
    let out = run(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("| Mean Relative Rank |"));
    assert!(text.contains("120x4-2k+2NF"));
}

#[test]
fn bench_runs_are_reproducible_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_bench_config(dir.path());
    let first = run(&["bench", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    let second = run(&["bench", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert_code(&first, 0);
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn bench_with_missing_csv_exits_one_but_reports_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    std::fs::write(
        &cfg,
        r#"
runs = 2
algorithms = ["shark"]

[[datasets]]
csv = "nowhere/missing.csv"
label_column = 0

[[datasets]]
n = 100
m = 3
k = 2
"#,
    )
    .unwrap();
    let out = run(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_code(&out, 1);
    assert!(stderr(&out).contains("aborted"));
    let text = stdout(&out);
    assert!(text.contains("dataset aborted"), "aborted row noted:\n{text}");
    assert!(text.contains("100x3-2k"), "healthy dataset still scored");
}

#[test]
fn usage_errors_exit_two() {
    // Unknown flag (clap usage error).
    assert_code(&run(&["fit", "--no-such-flag"]), 2);
    // Unknown algorithm name (value parse error).
    assert_code(
        &run(&["fit", "--dataset", "x.csv", "--algorithm", "dbscan"]),
        2,
    );
    // Malformed config file.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "runs = \"many\"").unwrap();
    let out = run(&["bench", "--config", cfg.to_str().unwrap()]);
    assert_code(&out, 2);
    assert!(stderr(&out).contains("error:"));
}

#[test]
fn runtime_errors_exit_one() {
    let out = run(&["fit", "--dataset", "nowhere/missing.csv", "--k", "2"]);
    assert_code(&out, 1);
    assert!(stderr(&out).contains("missing.csv"));
}

#[test]
fn lambda_subcommand_prints_a_selection() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    assert_code(
        &run(&[
            "gen",
            "--n",
            "120",
            "--features",
            "4",
            "--k",
            "2",
            "--noise-fraction",
            "0.5",
            "--seed",
            "8",
            "--out",
            data.to_str().unwrap(),
        ]),
        0,
    );
    // 4 informative + 2 noise features put the label in column 6.
    let out = run(&[
        "lambda",
        "--dataset",
        data.to_str().unwrap(),
        "--has-header",
        "--label-column",
        "6",
        "--grid-size",
        "8",
        "--pairs",
        "4",
    ]);
    assert_code(&out, 0);
    let text = stdout(&out);
    assert!(text.contains("selected lambda = "), "got:\n{text}");
    let value: f64 = text
        .trim()
        .rsplit(' ')
        .next()
        .unwrap()
        .parse()
        .expect("selection should be numeric");
    assert!(value > 0.0);
}

#[test]
fn report_csv_numbers_round_trip_against_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_bench_config(dir.path());
    let csv_out = run(&["bench", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    let json_out = run(&["bench", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert_code(&csv_out, 0);
    assert_code(&json_out, 0);
    let json: serde_json::Value = serde_json::from_str(&stdout(&json_out)).unwrap();
    let rows = json["rows"].as_array().unwrap();
    let csv_text = stdout(&csv_out);
    for (line, row) in csv_text.lines().skip(1).zip(rows) {
        let cells: Vec<&str> = line.split(',').collect();
        let mean: f64 = cells[2].parse().unwrap();
        assert_eq!(Some(mean), row["mean_ari"].as_f64(), "exact round-trip");
    }
}
