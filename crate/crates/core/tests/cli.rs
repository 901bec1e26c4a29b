use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sumdistill::synthetic::{summarization_corpus, to_jsonl};

fn sumdistill(ws: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sumdistill"))
        .arg("--workspace")
        .arg(ws)
        .args(["--mock-llm", "--jobs", "2", "--profile", "custom"])
        .args(args)
        .output()
        .unwrap()
}

fn outcome_lines(bytes: &[u8]) -> Vec<Value> {
    String::from_utf8_lossy(bytes)
        .lines()
        .filter_map(|l| serde_json::from_str(l).ok())
        .collect()
}

fn outcomes(out: &Output) -> Vec<Value> {
    outcome_lines(&out.stdout)
}

#[test]
fn stage_by_stage_then_up_to_date() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("corpus.jsonl");
    std::fs::write(&input, to_jsonl(&summarization_corpus(10, 3))).unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 5, "probe": {"n_samples": 3}, "lda": {"k": 4, "iterations": 30}}"#,
    )
    .unwrap();
    let ws = dir.path().join("ws");
    let cfg_arg = cfg.to_str().unwrap();

    let out = sumdistill(&ws, &["--config", cfg_arg, "ingest", input.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(outcomes(&out)[0]["detail"]["ingested"], 10);

    for stage in ["probe", "select"] {
        let out = sumdistill(&ws, &["--config", cfg_arg, stage]);
        assert!(
            out.status.success(),
            "{stage}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert_eq!(outcomes(&out)[0]["status"], "completed");
    }
    let out = sumdistill(
        &ws,
        &[
            "--config",
            cfg_arg,
            "curriculum",
            "--stages",
            "singular_aspect,singular_triple,singular_summary",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = sumdistill(&ws, &["--config", cfg_arg, "curriculum", "--stages", "joint"]);
    assert!(!out.status.success());

    let out = sumdistill(&ws, &["--config", cfg_arg, "curriculum"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = sumdistill(&ws, &["--config", cfg_arg, "eval", "--format", "table"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("ROUGE-1") && table.contains("mean"), "{table}");

    let out = sumdistill(
        &ws,
        &[
            "--config",
            cfg_arg,
            "run-all",
            input.to_str().unwrap(),
            "--format",
            "json",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["count"], 2);
    // run-all reports stage outcomes on stderr and the evaluation on stdout
    let statuses: Vec<Value> = outcome_lines(&out.stderr)
        .iter()
        .filter_map(|o| o.get("status").cloned())
        .collect();
    assert_eq!(statuses.len(), 5);
    assert!(statuses.iter().all(|s| s == "up_to_date"), "{statuses:?}");
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let ws = dir.path().join("ws");
    let out = sumdistill(&ws, &["probe"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_samples"));

    let out = sumdistill(&ws, &["--config", "/nonexistent.json", "probe"]);
    assert!(!out.status.success());
}
