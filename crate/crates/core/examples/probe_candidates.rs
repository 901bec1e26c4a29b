//! Samples candidate rationales from the offline mock client, with an
//! on-disk response cache that makes the second pass free.

use sumdistill::probe::{MockLlm, ProbeConfig, Prober, PromptSet, ResponseCache};
use sumdistill::rationale::{serialize_rationale, Document};

fn main() -> sumdistill::Result<()> {
    let document = Document::new(
        "clinic",
        "Researchers at the regional hospital tested a new screening program. \
         The clinic expanded the treatment protocol after early results.",
        "A hospital screening program was tested and the treatment protocol expanded.",
    )?;
    let client = MockLlm::new(7);
    let prompts = PromptSet::builtin();
    let cache_dir = tempfile::tempdir().expect("temporary directory");
    let cache = ResponseCache::new(cache_dir.path());
    let prober = Prober::new(&client, &prompts).with_cache(&cache);
    let cfg = ProbeConfig {
        seed: 7,
        ..ProbeConfig::new(4)
    };

    let outcome = prober.probe(&document, &cfg)?;
    for c in outcome.candidates.candidates() {
        println!(
            "candidate {}:\n{}\nSummary: {}\n",
            c.index,
            serialize_rationale(&c.rationale),
            c.summary
        );
    }
    println!("provider calls: {}", outcome.provider_calls);

    let again = prober.probe(&document, &cfg)?;
    println!("provider calls on the cached pass: {}", again.provider_calls);
    Ok(())
}
