//! Builds all six curriculum stages for two documents with the mock trainer
//! and prints one example per stage.

use sumdistill::curriculum::{
    run_curriculum, Checkpoint, CurriculumPlan, GoldenPair, JointWeights, MockAdapter, TrainerSettings,
};
use sumdistill::rationale::{parse_rationale, Document};

fn main() -> sumdistill::Result<()> {
    let pairs = vec![
        GoldenPair::new(
            Document::new("d1", "The team won the cup final at the national stadium.", "The team won the cup final.")?,
            parse_rationale("Aspects: cup final\nTriples: [team | won | cup final]")?,
        ),
        GoldenPair::new(
            Document::new("d2", "The startup raised funds and announced a battery plant.", "A startup plans a battery plant.")?,
            parse_rationale("Aspects: funding; battery plant\nTriples: [startup | raised | funds]\n[startup | announced | battery plant]")?,
        ),
    ];
    let mut adapter = MockAdapter::new();
    let mut checkpoint = Checkpoint::default();
    let report = run_curriculum(
        &CurriculumPlan::full(),
        &pairs,
        &mut adapter,
        &TrainerSettings::default(),
        JointWeights::default(),
        &mut checkpoint,
        |manifest| {
            println!(
                "== {} ({} examples, loss {:?})",
                manifest.stage,
                manifest.examples.len(),
                manifest.loss_config
            );
            if let Some(ex) = manifest.examples.first() {
                println!("input:  {}\ntarget: {}\n", ex.input, ex.target.replace('\n', " / "));
            }
            Ok(())
        },
    )?;
    println!("stages completed: {}", report.stages.len());
    Ok(())
}
