use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::text::{stable_hash64, word_tokens};
use crate::topic::is_stopword;

/// One completion call. Real providers only look at `prompt`; the indices
/// let deterministic clients vary their output per probe and per retry.
#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub prompt: &'a str,
    pub sample_index: usize,
    pub attempt: usize,
}

impl<'a> CompletionRequest<'a> {
    pub fn new(prompt: &'a str) -> Self {
        CompletionRequest {
            prompt,
            sample_index: 0,
            attempt: 0,
        }
    }
}

/// Completion and embedding provider.
///
/// Implementations are shared across worker threads. `embed` must return
/// vectors of `embedding_dim()` entries for every input.
pub trait LlmClient: Send + Sync {
    fn model_id(&self) -> &str;

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String>;

    fn embedding_dim(&self) -> usize;

    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

const DISTRACTORS: [&str; 16] = [
    "banana",
    "orbit",
    "violin",
    "glacier",
    "recipe",
    "tournament",
    "lantern",
    "canyon",
    "symphony",
    "harvest",
    "compass",
    "meteor",
    "pottery",
    "lagoon",
    "tapestry",
    "saddle",
];

const RELATIONS: [&str; 8] = [
    "involves",
    "affects",
    "includes",
    "concerns",
    "leads to",
    "relates to",
    "supports",
    "follows",
];

/// Deterministic offline stand-in for an LLM provider.
///
/// Completions for the rationale probe template are built from the
/// document and reference sections of the prompt; any other prompt gets a
/// plain extractive summary. Output depends only on `(seed, prompt,
/// sample_index, attempt)`. Embeddings are feature-hashed bags of words, so
/// texts sharing words get similar vectors and identical texts identical ones.
#[derive(Debug)]
pub struct MockLlm {
    seed: u64,
    dim: usize,
    malformed_rate: f64,
    model_id: String,
    completions: AtomicUsize,
    embeddings: AtomicUsize,
}

impl MockLlm {
    pub const DEFAULT_DIM: usize = 64;

    pub fn new(seed: u64) -> Self {
        MockLlm {
            seed,
            dim: Self::DEFAULT_DIM,
            malformed_rate: 0.0,
            model_id: "mock-llm".into(),
            completions: AtomicUsize::new(0),
            embeddings: AtomicUsize::new(0),
        }
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        self.dim = dim;
        self
    }

    /// Fraction of completions replaced by unparseable text. `1.0` makes
    /// every completion garbage.
    pub fn with_malformed_rate(mut self, rate: f64) -> Self {
        self.malformed_rate = rate.clamp(0.0, 1.0);
        self
    }

    pub fn completion_calls(&self) -> usize {
        self.completions.load(Ordering::SeqCst)
    }

    pub fn embedding_calls(&self) -> usize {
        self.embeddings.load(Ordering::SeqCst)
    }

    fn rng_for(&self, parts: &[&[u8]]) -> ChaCha8Rng {
        let mut all: Vec<&[u8]> = Vec::with_capacity(parts.len() + 1);
        let seed = self.seed.to_le_bytes();
        all.push(&seed);
        all.extend_from_slice(parts);
        ChaCha8Rng::seed_from_u64(stable_hash64(&all))
    }
}

fn section<'a>(prompt: &'a str, label: &str, terminators: &[&str]) -> Option<&'a str> {
    let start = prompt.find(label)? + label.len();
    let rest = &prompt[start..];
    let end = terminators
        .iter()
        .filter_map(|t| rest.find(t))
        .min()
        .unwrap_or(rest.len());
    Some(rest[..end].trim())
}

fn content_words(text: &str) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    word_tokens(text)
        .into_iter()
        .filter(|w| w.len() >= 3 && !is_stopword(w) && !w.chars().all(|c| c.is_ascii_digit()))
        .filter(|w| seen.insert(w.clone()))
        .collect()
}

fn first_sentences(text: &str, n: usize) -> String {
    let mut out = String::new();
    for (i, sentence) in text.split_inclusive(['.', '!', '?']).enumerate() {
        if i == n {
            break;
        }
        out.push_str(sentence);
    }
    let out = out.split_whitespace().collect::<Vec<_>>().join(" ");
    if out.is_empty() {
        "No content.".into()
    } else {
        out
    }
}

impl MockLlm {
    fn probe_response(&self, rng: &mut ChaCha8Rng, document: &str, reference: &str) -> String {
        let mut words = content_words(document);
        if words.is_empty() {
            words = DISTRACTORS.iter().map(|w| w.to_string()).collect();
        }
        // per-sample quality: probability of drawing a word from the document
        let quality: f64 = rng.random_range(0.3..1.0);
        let pick = |rng: &mut ChaCha8Rng| -> String {
            if rng.random_bool(quality) {
                words.choose(rng).expect("nonempty").clone()
            } else {
                DISTRACTORS.choose(rng).expect("nonempty").to_string()
            }
        };

        let n_aspects = rng.random_range(2..=4);
        let mut aspects: Vec<String> = Vec::new();
        for _ in 0..n_aspects {
            let phrase = format!("{} {}", pick(rng), pick(rng));
            if !aspects.contains(&phrase) {
                aspects.push(phrase);
            }
        }
        let mut triples = Vec::new();
        for aspect in &aspects {
            let head = aspect.split(' ').next().unwrap_or("it").to_owned();
            for _ in 0..rng.random_range(1..=2) {
                let relation = RELATIONS.choose(rng).expect("nonempty");
                triples.push(format!("[{head} | {relation} | {}]", pick(rng)));
            }
        }

        let summary = if reference.is_empty() {
            first_sentences(document, 2)
        } else if rng.random_bool(0.15) {
            // lazy generation: parrot the reference
            reference.split_whitespace().collect::<Vec<_>>().join(" ")
        } else {
            let mut tokens: Vec<&str> = reference.split_whitespace().collect();
            let keep = ((tokens.len() as f64) * quality).ceil().max(1.0) as usize;
            tokens.truncate(keep);
            let mut extra: Vec<String> = (0..3).map(|_| pick(rng)).collect();
            extra.shuffle(rng);
            format!("{} {}", tokens.join(" "), extra.join(" "))
        };

        format!(
            "Aspects: {}\nTriples: {}\nSummary: {}",
            aspects.join("; "),
            triples.join("\n"),
            summary
        )
    }
}

impl LlmClient for MockLlm {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String> {
        self.completions.fetch_add(1, Ordering::SeqCst);
        let mut rng = self.rng_for(&[
            b"complete",
            request.prompt.as_bytes(),
            &(request.sample_index as u64).to_le_bytes(),
            &(request.attempt as u64).to_le_bytes(),
        ]);
        if self.malformed_rate > 0.0 && rng.random_bool(self.malformed_rate) {
            let garbage = [
                "I'm sorry, I can't help with that.",
                "Aspects: incomplete\nTriples: [only | two]",
                "Triples: [a | b | c]",
            ];
            return Ok(garbage.choose(&mut rng).expect("nonempty").to_string());
        }
        let terminators = ["\n\nReference summary:", "\n\nUse the aspects", "\n\nSummary:"];
        let document = section(request.prompt, "Document:\n", &terminators).unwrap_or(request.prompt);
        match section(request.prompt, "Reference summary:\n", &["\n\n"]) {
            Some(reference) => Ok(self.probe_response(&mut rng, document, reference)),
            None => Ok(first_sentences(document, 2)),
        }
    }

    fn embedding_dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        self.embeddings.fetch_add(1, Ordering::SeqCst);
        if text.trim().is_empty() {
            return Err(Error::EmptyText);
        }
        let mut tokens = word_tokens(text);
        if tokens.is_empty() {
            tokens.push(text.to_owned());
        }
        let mut v = vec![0.0; self.dim];
        for token in &tokens {
            let mut rng = self.rng_for(&[b"embed", token.as_bytes()]);
            for x in v.iter_mut() {
                *x += rng.random_range(-1.0..1.0);
            }
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::template::render_probe_prompt;
    use crate::rationale::{parse_probe_response, Document};

    #[test]
    fn probe_completion_parses_and_is_deterministic() {
        let d = Document::new(
            "d",
            "Heavy rain flooded the river valley. Farmers lost crops across the region.",
            "Rain flooded the valley and ruined crops.",
        )
        .unwrap();
        let prompt = render_probe_prompt(&d).unwrap();
        let llm = MockLlm::new(7);
        for i in 0..20 {
            let req = CompletionRequest {
                prompt: &prompt,
                sample_index: i,
                attempt: 0,
            };
            let a = llm.complete(&req).unwrap();
            assert_eq!(a, MockLlm::new(7).complete(&req).unwrap());
            parse_probe_response(&a).unwrap_or_else(|e| panic!("{e}: {a}"));
        }
        assert_eq!(llm.completion_calls(), 20);
        let req = |i| CompletionRequest {
            prompt: &prompt,
            sample_index: i,
            attempt: 0,
        };
        assert_ne!(llm.complete(&req(0)).unwrap(), llm.complete(&req(1)).unwrap());
    }

    #[test]
    fn garbage_mode() {
        let llm = MockLlm::new(1).with_malformed_rate(1.0);
        let out = llm
            .complete(&CompletionRequest::new("Document:\nx\n\nReference summary:\ny"))
            .unwrap();
        assert!(parse_probe_response(&out).is_err());
    }

    #[test]
    fn embeddings_are_deterministic_and_fixed_dim() {
        let llm = MockLlm::new(3).with_dim(16);
        let a = llm.embed("the cat sat").unwrap();
        assert_eq!(a, llm.embed("the cat sat").unwrap());
        assert_eq!(a.len(), 16);
        assert_eq!(llm.embed("!!!").unwrap().len(), 16);
        assert!(matches!(llm.embed("  "), Err(Error::EmptyText)));
        assert_eq!(llm.embedding_calls(), 4);
    }

    #[test]
    fn non_probe_prompt_gets_plain_summary() {
        let llm = MockLlm::new(3);
        let out = llm
            .complete(&CompletionRequest::new(
                "Summarize.\n\nDocument:\nOne. Two. Three.\n\nSummary:\n",
            ))
            .unwrap();
        assert_eq!(out, "One. Two.");
    }
}
