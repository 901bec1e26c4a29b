//! Runs every pipeline stage on a synthetic corpus in a temporary workspace
//! with the offline client, then reruns to show every stage is up to date.

use sumdistill::config::{PipelineConfig, Profile};
use sumdistill::curriculum::CurriculumPlan;
use sumdistill::probe::MockLlm;
use sumdistill::synthetic::{summarization_corpus, to_jsonl};
use sumdistill::workspace::{EvalOptions, Pipeline, Workspace};

fn main() -> sumdistill::Result<()> {
    let dir = tempfile::tempdir().expect("temporary directory");
    let input = dir.path().join("corpus.jsonl");
    std::fs::write(&input, to_jsonl(&summarization_corpus(30, 1))).expect("write corpus");

    let cfg = PipelineConfig::from_overrides(
        Some(Profile::Custom),
        Some(serde_json::json!({ "seed": 1, "probe": {"n_samples": 6}, "lda": {"k": 8, "iterations": 100} })),
    )?;
    let ws = Workspace::open(dir.path().join("workspace"))?;
    let client = MockLlm::new(cfg.seed);
    let pipeline = Pipeline::new(&ws, &cfg, &client, 0)?;

    for pass in ["first", "second"] {
        println!("{pass} pass:");
        for outcome in pipeline.run_all(&input, &CurriculumPlan::full(), &EvalOptions::default())? {
            println!("  {:<10} {:?}", outcome.stage, outcome.status);
        }
    }
    println!("\n{}", ws.eval_report()?.to_table());
    Ok(())
}
