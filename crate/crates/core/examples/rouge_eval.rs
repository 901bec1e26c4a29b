//! Scores candidate summaries against references with ROUGE-1, ROUGE-2 and
//! ROUGE-L and prints the per-document table.

use sumdistill::eval::{evaluate_corpus, rouge_all, EvalPair};

fn main() -> sumdistill::Result<()> {
    let r = rouge_all("the cat sat on the mat", "the cat lay on the mat");
    println!(
        "single pair: R1 {:.4}  R2 {:.4}  RL {:.4}\n",
        r.rouge1.f1, r.rouge2.f1, r.rouge_l.f1
    );

    let pairs = vec![
        EvalPair {
            document_id: "a".into(),
            candidate: "The council approved the budget on Monday.".into(),
            reference: "On Monday the council approved the new budget.".into(),
        },
        EvalPair {
            document_id: "b".into(),
            candidate: "Storm damage closed the coastal road.".into(),
            reference: "The coastal road was closed after storm damage.".into(),
        },
    ];
    let report = evaluate_corpus("example", &pairs, &[])?;
    print!("{}", report.to_table());
    Ok(())
}
