//! Trains a three-topic model on a corpus with planted topics and prints the
//! recovered top words, then folds in a new text.

use sumdistill::synthetic::planted_topic_corpus;
use sumdistill::topic::{build_vocabulary, kl_divergence, train_lda, LdaParams, VocabularyConfig};

fn main() -> sumdistill::Result<()> {
    let corpus = planted_topic_corpus(300, 1);
    let vocabulary = build_vocabulary(&corpus, VocabularyConfig::default())?;
    // the default alpha of 50/k swamps the handful of tokens in a short text
    let params = LdaParams {
        iterations: 200,
        seed: 1,
        alpha: 0.5,
        ..LdaParams::with_topics(3)
    };
    let model = train_lda(&corpus, vocabulary, params)?;

    for topic in 0..model.k() {
        println!("topic {topic}: {}", model.top_words(topic, 10).join(" "));
    }

    let a = model.infer_topics(
        "the striker and the goalkeeper met the referee before the derby kickoff at the stadium",
        50,
        1,
    );
    let b = model.infer_topics(
        "investors watched the stock market as bond yields, inflation and currency moves hit every portfolio",
        50,
        1,
    );
    println!("\nsports text: {:?}", a.probs());
    println!("finance text: {:?}", b.probs());
    println!("KL(sports || finance) = {:.4}", kl_divergence(&a, &b)?);
    Ok(())
}
