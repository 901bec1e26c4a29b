//! Probes one document, scores every candidate on summary fidelity and
//! topic coherence, and prints the score table with the golden pick.

use sumdistill::probe::{probe_rationales, MockLlm, ProbeConfig};
use sumdistill::rationale::{serialize_rationale, Document};
use sumdistill::select::{select_golden, Embedder, SelectionConfig};
use sumdistill::synthetic::summarization_corpus;
use sumdistill::topic::{build_vocabulary, train_lda, LdaInferencer, LdaParams, VocabularyConfig};

fn main() -> sumdistill::Result<()> {
    let records = summarization_corpus(40, 3);
    let corpus: Vec<Document> = records
        .iter()
        .map(|r| Document::new(&r.id, &r.document, &r.summary))
        .collect::<sumdistill::Result<_>>()?;
    let vocabulary = build_vocabulary(&corpus, VocabularyConfig::default())?;
    let model = train_lda(
        &corpus,
        vocabulary,
        LdaParams {
            iterations: 100,
            seed: 3,
            ..LdaParams::with_topics(8)
        },
    )?;
    let topics = LdaInferencer {
        model: &model,
        iterations: 50,
        seed: 3,
    };

    let client = MockLlm::new(3);
    let document = &corpus[0];
    let candidates = probe_rationales(
        &client,
        document,
        &ProbeConfig {
            seed: 3,
            ..ProbeConfig::new(6)
        },
    )?
    .candidates;
    let embedder = Embedder::new(&client);
    let cfg = SelectionConfig::default();
    let result = select_golden(&candidates, document, &topics, &embedder, &cfg)?;

    println!(
        "document: {}\nreference: {}\n",
        document.text, document.ground_truth_summary
    );
    println!("{:>5} {:>9} {:>10} {:>9}", "index", "summary", "coherence", "combined");
    for row in &result.table {
        println!(
            "{:>5} {:>9.4} {:>10.4} {:>9.4}",
            row.index, row.summary_score, row.coherence_score, row.combined
        );
    }
    println!(
        "\ngolden candidate {}:\n{}",
        result.golden_index,
        serialize_rationale(&result.golden_rationale)
    );
    Ok(())
}
