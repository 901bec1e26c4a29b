use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sumdistill::config::{PipelineConfig, Profile};
use sumdistill::curriculum::{CurriculumPlan, Stage};
use sumdistill::probe::MockLlm;
use sumdistill::synthetic::{summarization_corpus, to_jsonl, CorpusRecord};
use sumdistill::text::sha256_hex;
use sumdistill::workspace::{AdapterKind, EvalOptions, Pipeline, StageStatus, Workspace};
use sumdistill::Error;

fn config(extra: Value) -> PipelineConfig {
    let mut base = json!({
        "seed": 9,
        "probe": {"n_samples": 4},
        "lda": {"k": 5, "iterations": 40},
    });
    for (k, v) in extra.as_object().unwrap() {
        match (base.get_mut(k), v) {
            (Some(Value::Object(b)), Value::Object(o)) => b.extend(o.clone()),
            _ => {
                base[k] = v.clone();
            }
        }
    }
    PipelineConfig::from_overrides(Some(Profile::Custom), Some(base)).unwrap()
}

fn write_corpus(dir: &Path, records: &[CorpusRecord]) -> PathBuf {
    let path = dir.join("corpus.jsonl");
    std::fs::write(&path, to_jsonl(records)).unwrap();
    path
}

fn files(root: &Path) -> BTreeMap<String, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, sha256_hex(std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn cached_responses(cache: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![cache.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                if p.file_name().unwrap() != "_embeddings" {
                    stack.push(p);
                }
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn select_requires_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_corpus(dir.path(), &summarization_corpus(6, 1));
    let ws = Workspace::open(dir.path().join("ws")).unwrap();
    let cfg = config(json!({}));
    let llm = MockLlm::new(1);
    let p = Pipeline::new(&ws, &cfg, &llm, 2).unwrap();
    p.ingest(&input).unwrap();
    match p.select() {
        Err(Error::MissingPrerequisite(what)) => assert_eq!(what, "candidates"),
        other => panic!("expected missing candidates, got {other:?}"),
    }
    assert!(matches!(
        p.curriculum(&CurriculumPlan::full()),
        Err(Error::MissingPrerequisite(_))
    ));
    assert!(matches!(
        p.eval(&EvalOptions::default()),
        Err(Error::MissingPrerequisite(_))
    ));
}

#[test]
fn probe_refetches_only_missing_cache_entries() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_corpus(dir.path(), &summarization_corpus(10, 2));
    let root = dir.path().join("ws");
    let ws = Workspace::open(&root).unwrap();
    let cfg = config(json!({}));
    let first = MockLlm::new(cfg.seed);
    let p = Pipeline::new(&ws, &cfg, &first, 2).unwrap();
    p.ingest(&input).unwrap();
    p.probe().unwrap();
    let responses = cached_responses(&root.join("cache"));
    assert_eq!(responses.len(), first.completion_calls());
    let before = files(&root.join("candidates"));

    let removed: Vec<&PathBuf> = responses.iter().step_by(2).collect();
    for path in &removed {
        std::fs::remove_file(path).unwrap();
    }
    let second = MockLlm::new(cfg.seed);
    let outcome = Pipeline::new(&ws, &cfg, &second, 2).unwrap().probe().unwrap();
    assert_eq!(outcome.status, StageStatus::Completed);
    assert_eq!(second.completion_calls(), removed.len());
    assert_eq!(files(&root.join("candidates")), before);
}

#[test]
fn rerun_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_corpus(dir.path(), &summarization_corpus(10, 3));
    let root = dir.path().join("ws");
    let ws = Workspace::open(&root).unwrap();
    let cfg = config(json!({}));
    let llm = MockLlm::new(cfg.seed);
    let plan = CurriculumPlan::full();
    let opts = EvalOptions::default();
    Pipeline::new(&ws, &cfg, &llm, 2)
        .unwrap()
        .run_all(&input, &plan, &opts)
        .unwrap();
    let mut before = files(&root);
    before.remove("ledger.jsonl");

    let again = MockLlm::new(cfg.seed);
    let outcomes = Pipeline::new(&ws, &cfg, &again, 2)
        .unwrap()
        .run_all(&input, &plan, &opts)
        .unwrap();
    assert!(
        outcomes.iter().all(|o| o.status == StageStatus::UpToDate),
        "{outcomes:?}"
    );
    assert_eq!((again.completion_calls(), again.embedding_calls()), (0, 0));
    let mut after = files(&root);
    after.remove("ledger.jsonl");
    assert_eq!(before, after);

    let ledger = ws.ledger().unwrap();
    assert_eq!(ledger.len(), 10);
    assert!(ledger.windows(2).all(|w| w[1].seq > w[0].seq));
    assert_eq!(outcomes[0].detail["previous_run"], json!(ledger[0].seq));
}

#[test]
fn config_change_warns_and_reruns_affected_stage_only() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_corpus(dir.path(), &summarization_corpus(8, 4));
    let ws = Workspace::open(dir.path().join("ws")).unwrap();
    let cfg = config(json!({}));
    let llm = MockLlm::new(cfg.seed);
    let p = Pipeline::new(&ws, &cfg, &llm, 2).unwrap();
    p.ingest(&input).unwrap();
    p.probe().unwrap();
    p.select().unwrap();

    let changed = config(json!({"selection": {"lambda_cs": 0.5}}));
    let p = Pipeline::new(&ws, &changed, &llm, 2).unwrap();
    assert_eq!(p.probe().unwrap().status, StageStatus::UpToDate);
    let outcome = p.select().unwrap();
    assert_eq!(outcome.status, StageStatus::Completed);
    assert_eq!(outcome.warnings.len(), 1);
    assert!(outcome.warnings[0].contains("configuration changed"));
}

#[test]
fn run_all_stops_at_first_failure() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_corpus(dir.path(), &summarization_corpus(5, 5));
    let root = dir.path().join("ws");
    let ws = Workspace::open(&root).unwrap();
    let cfg = config(json!({"probe": {"n_samples": 3, "max_retries": 1}}));
    let garbage = MockLlm::new(1).with_malformed_rate(1.0);
    let err = Pipeline::new(&ws, &cfg, &garbage, 2)
        .unwrap()
        .run_all(&input, &CurriculumPlan::full(), &EvalOptions::default())
        .unwrap_err();
    assert!(matches!(err, Error::StageFailed { stage: "probe", .. }), "{err:?}");
    assert!(!root.join("selections").exists());
    assert!(!root.join("manifests").exists());
    let ledger = ws.ledger().unwrap();
    assert_eq!(ledger.last().unwrap().stage, "probe");
    assert_eq!(ledger.last().unwrap().status, StageStatus::Failed);
    let report: Value = serde_json::from_slice(&std::fs::read(root.join("reports/probe.json")).unwrap()).unwrap();
    assert_eq!(report["failed"].as_array().unwrap().len(), 4);
}

#[test]
fn second_open_is_refused_until_drop() {
    let dir = tempfile::tempdir().unwrap();
    let ws = Workspace::open(dir.path()).unwrap();
    assert!(matches!(Workspace::open(dir.path()), Err(Error::WorkspaceLocked(_))));
    drop(ws);
    Workspace::open(dir.path()).unwrap();
}

#[test]
fn eval_falls_back_to_train_split() {
    let dir = tempfile::tempdir().unwrap();
    let mut records = summarization_corpus(6, 6);
    for r in &mut records {
        r.split = "train".into();
    }
    let input = write_corpus(dir.path(), &records);
    let ws = Workspace::open(dir.path().join("ws")).unwrap();
    let cfg = config(json!({}));
    let llm = MockLlm::new(cfg.seed);
    let outcomes = Pipeline::new(&ws, &cfg, &llm, 2)
        .unwrap()
        .run_all(&input, &CurriculumPlan::full(), &EvalOptions::default())
        .unwrap();
    let eval = outcomes.last().unwrap();
    assert_eq!(eval.detail["split"], "train");
    assert_eq!(eval.warnings.len(), 1);
    assert_eq!(ws.eval_report().unwrap().count, 6);
}

#[test]
fn eval_with_predictions_and_external_scores() {
    let dir = tempfile::tempdir().unwrap();
    let records = summarization_corpus(10, 7);
    let input = write_corpus(dir.path(), &records);
    let ws = Workspace::open(dir.path().join("ws")).unwrap();
    let cfg = config(json!({}));
    let llm = MockLlm::new(cfg.seed);
    let p = Pipeline::new(&ws, &cfg, &llm, 2).unwrap();
    p.ingest(&input).unwrap();

    let test: Vec<&CorpusRecord> = records.iter().filter(|r| r.split == "test").collect();
    let preds: String = test
        .iter()
        .map(|r| json!({"id": r.id, "summary": r.summary}).to_string() + "\n")
        .collect();
    let pred_path = dir.path().join("pred.jsonl");
    std::fs::write(&pred_path, preds).unwrap();
    let ext: BTreeMap<&str, BTreeMap<&str, f64>> = test
        .iter()
        .map(|r| (r.id.as_str(), BTreeMap::from([("bertscore", 0.5)])))
        .collect();
    let ext_path = dir.path().join("ext.json");
    std::fs::write(&ext_path, serde_json::to_string(&ext).unwrap()).unwrap();

    let outcome = p
        .eval(&EvalOptions {
            predictions: Some(pred_path),
            external_scores: Some(ext_path),
        })
        .unwrap();
    assert_eq!(outcome.detail["split"], "test");
    let report = ws.eval_report().unwrap();
    assert_eq!(report.system, "predictions");
    assert_eq!(report.count, test.len());
    assert!((report.mean["rouge1"] - 1.0).abs() < 1e-12);
    assert!((report.mean["rougeL"] - 1.0).abs() < 1e-12);
    assert!((report.mean["bertscore"] - 0.5).abs() < 1e-12);
    let table = std::fs::read_to_string(ws.path("eval/report.txt")).unwrap();
    assert!(table.contains("bertscore"));
}

#[test]
fn predictions_must_cover_every_document() {
    let dir = tempfile::tempdir().unwrap();
    let records = summarization_corpus(10, 8);
    let input = write_corpus(dir.path(), &records);
    let ws = Workspace::open(dir.path().join("ws")).unwrap();
    let cfg = config(json!({}));
    let llm = MockLlm::new(cfg.seed);
    let p = Pipeline::new(&ws, &cfg, &llm, 2).unwrap();
    p.ingest(&input).unwrap();
    let pred_path = dir.path().join("pred.jsonl");
    std::fs::write(&pred_path, json!({"id": "doc-0004", "summary": "x"}).to_string()).unwrap();
    let err = p
        .eval(&EvalOptions {
            predictions: Some(pred_path),
            external_scores: None,
        })
        .unwrap_err();
    assert!(
        matches!(err, Error::MissingPrerequisite(ref m) if m.contains("doc-0009")),
        "{err:?}"
    );
}

#[test]
fn manifest_only_adapter_writes_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_corpus(dir.path(), &summarization_corpus(6, 9));
    let root = dir.path().join("ws");
    let ws = Workspace::open(&root).unwrap();
    let cfg = config(json!({}));
    let llm = MockLlm::new(cfg.seed);
    let p = Pipeline::new(&ws, &cfg, &llm, 2)
        .unwrap()
        .with_adapter(AdapterKind::ManifestOnly);
    p.ingest(&input).unwrap();
    p.probe().unwrap();
    p.select().unwrap();
    let plan = CurriculumPlan::only(
        &[Stage::SingularAspect, Stage::SingularTriple, Stage::SingularSummary],
        false,
    );
    p.curriculum(&plan).unwrap();
    for stage in &Stage::CANONICAL[..3] {
        let m = ws.manifest(*stage).unwrap();
        assert!(!m.examples.is_empty());
    }
    assert!(!root.join("adapter").exists());
    assert!(matches!(
        p.eval(&EvalOptions::default()),
        Err(Error::MissingPrerequisite(_))
    ));
}

#[test]
fn changed_input_reruns_downstream() {
    let dir = tempfile::tempdir().unwrap();
    let records = summarization_corpus(8, 10);
    let input = write_corpus(dir.path(), &records);
    let ws = Workspace::open(dir.path().join("ws")).unwrap();
    let cfg = config(json!({}));
    let llm = MockLlm::new(cfg.seed);
    let p = Pipeline::new(&ws, &cfg, &llm, 2).unwrap();
    p.ingest(&input).unwrap();
    p.probe().unwrap();
    let input = write_corpus(dir.path(), &records[..6]);
    assert_eq!(p.ingest(&input).unwrap().status, StageStatus::Completed);
    assert_eq!(p.probe().unwrap().status, StageStatus::Completed);
    let kept = std::fs::read_dir(ws.path("candidates")).unwrap().count();
    assert_eq!(kept, records[..6].iter().filter(|r| r.split == "train").count());
}
