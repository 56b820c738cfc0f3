//! End-to-end checks of the `evb` binary: exit codes and stream contracts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn evb() -> Command {
    Command::new(env!("CARGO_BIN_EXE_evb"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Store seeded with all fixtures through the CLI itself.
fn seeded_store() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "contexts.evb",
        "process_models.evb",
        "table2_quality_model.evb",
        "table3_observation.evb",
        "table4_problem_solution.evb",
    ] {
        let out = evb()
            .args(["put"])
            .arg(fixture(name))
            .arg("--store")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success(), "put {name}: {}", stderr(&out));
    }
    let out = evb()
        .args(["ingest", "--csv"])
        .arg(fixture("table2_effort.csv"))
        .args(["--dataset", "table2_effort", "--store"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "ingest: {}", stderr(&out));
    dir
}

#[test]
fn validate_fixtures_exits_zero() {
    let out = evb()
        .arg("validate")
        .arg(fixture("table2_quality_model.evb"))
        .arg(fixture("table3_observation.evb"))
        .arg(fixture("table4_problem_solution.evb"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn validate_duplicate_id_exits_one_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(fixture("table3_observation.evb")).unwrap();
    let bad = dir.path().join("dup.evb");
    std::fs::write(&bad, format!("{src}\n{src}")).unwrap();
    let out = evb().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("duplicate id"));
}

#[test]
fn validate_missing_file_exits_three() {
    let out = evb().args(["validate", "/no/such/file.evb"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_flag_exits_two() {
    let out = evb().args(["retro", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn retro_prints_the_four_questions() {
    let out = evb().arg("retro").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<String> = stdout(&out).lines().map(String::from).collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "What did we do well, which we might forget if we don't discuss it?");
    assert_eq!(lines[3], "What still puzzles us?");
}

#[test]
fn indicator_final_cumulative_is_one_hundred() {
    let dir = seeded_store();
    let out = evb()
        .args(["indicator", "--model", "WISE-QM3PX11", "--dataset", "table2_effort", "--store"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let last_group = text.lines().rev().find(|l| l.starts_with("AP")).unwrap();
    assert!(last_group.ends_with("100.00"), "{last_group}");
    assert!(text.contains("RP\t350.00\t24.14\t24.14"));
}

#[test]
fn query_keywords_returns_both_lessons() {
    let dir = seeded_store();
    let out = evb()
        .args(["query", "--keywords", "J2ME", "--store"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ids: Vec<&str> = stdout(&out)
        .lines()
        .map(|l| l.split('\t').next().unwrap())
        .map(|s| s.trim())
        .map(|s| match s {
            "LL3PXI2" => "LL3PXI2",
            "LL4PXI1" => "LL4PXI1",
            other => panic!("unexpected id {other}"),
        })
        .collect();
    assert_eq!(ids.len(), 2);
}

#[test]
fn query_by_context_ranks_self_first() {
    let dir = seeded_store();
    let out = evb()
        .args(["query", "--context", "CV3PXI2", "--top", "2", "--store"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let first = text.lines().next().unwrap();
    // the Table 3 lesson shares CV3PXI2 itself
    assert!(first.starts_with("LL3PXI2\t1.0000"), "{text}");
}

#[test]
fn refs_reports_dangling_then_clears() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["contexts.evb", "table2_quality_model.evb"] {
        let out = evb()
            .arg("put")
            .arg(fixture(name))
            .arg("--store")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let out = evb().args(["refs", "--store"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout(&out).trim(), "WISE-QM3PX11\tPM1PX11");

    evb()
        .arg("put")
        .arg(fixture("process_models.evb"))
        .arg("--store")
        .arg(dir.path())
        .output()
        .unwrap();
    let out = evb().args(["refs", "--store"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).trim().is_empty());
}

#[test]
fn put_twice_without_overwrite_fails() {
    let dir = tempfile::tempdir().unwrap();
    let put = |overwrite: bool| {
        let mut cmd = evb();
        cmd.arg("put").arg(fixture("contexts.evb")).arg("--store").arg(dir.path());
        if overwrite {
            cmd.arg("--overwrite");
        }
        cmd.output().unwrap()
    };
    assert_eq!(put(false).status.code(), Some(0));
    assert_eq!(put(false).status.code(), Some(1));
    assert_eq!(put(true).status.code(), Some(0));
}

#[test]
fn report_writes_markdown() {
    let dir = seeded_store();
    let out_path = dir.path().join("report.md");
    let out = evb()
        .args(["report", "--id", "WISE-QM3PX11", "--dataset", "table2_effort", "--out"])
        .arg(&out_path)
        .arg("--store")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let body = std::fs::read_to_string(&out_path).unwrap();
    assert!(body.contains("| Measurement Period | 2001-07-22 – 2002-12-31 |"));
    assert!(body.contains("<td>100.00</td>"));
}

#[test]
fn store_defaults_to_env_var() {
    let dir = tempfile::tempdir().unwrap();
    let out = evb()
        .arg("put")
        .arg(fixture("contexts.evb"))
        .env("EVB_STORE", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("context/CV1PX11.evb").is_file());
}
