//! Latent Dirichlet Allocation by collapsed Gibbs sampling.
//!
//! Each in-vocabulary token carries a topic assignment. A sweep resamples
//! every assignment from
//!
//! ```text
//! p(z = t | rest) ∝ (n_dt + alpha) · (n_tw + beta) / (n_t + V·beta)
//! ```
//!
//! with the token's own assignment removed from the counts. Counts are kept
//! word-major (`V × k`) so the inner loop over topics is contiguous.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{TopicDistribution, TopicInferencer, Vocabulary};
use crate::error::{Error, Result};
use crate::rationale::Document;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaParams {
    /// `alpha = 50/k`, `beta = 0.01`, 500 sweeps.
    pub fn with_topics(k: usize) -> Self {
        LdaParams {
            k,
            alpha: 50.0 / k as f64,
            beta: 0.01,
            iterations: 500,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidHyperparameter(format!("k = {} (need k >= 2)", self.k)));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidHyperparameter(format!("alpha = {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidHyperparameter(format!("beta = {}", self.beta)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidHyperparameter("iterations = 0".into()));
        }
        Ok(())
    }
}

/// Draws an index with probability proportional to `weights[i]`.
fn sample(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Sampler state. Exposed so callers can step sweeps and inspect counts.
pub struct GibbsSampler {
    params: LdaParams,
    vocabulary: Vocabulary,
    docs: Vec<Vec<u32>>,
    assignments: Vec<Vec<u32>>,
    doc_topic: Vec<Vec<u32>>,
    word_topic: Vec<u32>,
    topic_totals: Vec<u64>,
    rng: ChaCha8Rng,
    sweeps: usize,
}

impl GibbsSampler {
    pub fn new(corpus: &[Document], vocabulary: Vocabulary, params: LdaParams) -> Result<Self> {
        params.validate()?;
        let docs: Vec<Vec<u32>> = corpus.iter().map(|d| vocabulary.encode(&d.text)).collect();
        if docs.iter().all(Vec::is_empty) {
            return Err(Error::EmptyVocabulary);
        }
        let k = params.k;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut word_topic = vec![0u32; vocabulary.len() * k];
        let mut topic_totals = vec![0u64; k];
        let mut doc_topic = Vec::with_capacity(docs.len());
        let mut assignments = Vec::with_capacity(docs.len());
        for doc in &docs {
            let mut counts = vec![0u32; k];
            let mut z = Vec::with_capacity(doc.len());
            for &w in doc {
                let t = rng.random_range(0..k);
                z.push(t as u32);
                counts[t] += 1;
                word_topic[w as usize * k + t] += 1;
                topic_totals[t] += 1;
            }
            doc_topic.push(counts);
            assignments.push(z);
        }
        Ok(GibbsSampler {
            params,
            vocabulary,
            docs,
            assignments,
            doc_topic,
            word_topic,
            topic_totals,
            rng,
            sweeps: 0,
        })
    }

    pub fn sweep(&mut self) {
        let k = self.params.k;
        let alpha = self.params.alpha;
        let beta = self.params.beta;
        let v_beta = self.vocabulary.len() as f64 * beta;
        let mut weights = vec![0.0; k];
        for (d, doc) in self.docs.iter().enumerate() {
            let counts = &mut self.doc_topic[d];
            for (i, &w) in doc.iter().enumerate() {
                let row = w as usize * k;
                let old = self.assignments[d][i] as usize;
                counts[old] -= 1;
                self.word_topic[row + old] -= 1;
                self.topic_totals[old] -= 1;

                for t in 0..k {
                    weights[t] = (counts[t] as f64 + alpha) * (self.word_topic[row + t] as f64 + beta)
                        / (self.topic_totals[t] as f64 + v_beta);
                }
                let new = sample(&mut self.rng, &weights);

                counts[new] += 1;
                self.word_topic[row + new] += 1;
                self.topic_totals[new] += 1;
                self.assignments[d][i] = new as u32;
            }
        }
        self.sweeps += 1;
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Number of in-vocabulary tokens in the corpus.
    pub fn token_count(&self) -> u64 {
        self.docs.iter().map(|d| d.len() as u64).sum()
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    /// `k × V` counts derived from the current assignments.
    pub fn topic_word_counts(&self) -> Vec<Vec<u32>> {
        transpose(&self.word_topic, self.params.k, self.vocabulary.len())
    }

    /// Per-document topic counts.
    pub fn doc_topic_counts(&self) -> &[Vec<u32>] {
        &self.doc_topic
    }

    pub fn into_model(self) -> LdaModel {
        LdaModel {
            k: self.params.k,
            alpha: self.params.alpha,
            beta: self.params.beta,
            seed: self.params.seed,
            iterations: self.sweeps,
            vocabulary: self.vocabulary,
            word_topic: self.word_topic,
            topic_totals: self.topic_totals,
        }
    }
}

fn transpose(word_topic: &[u32], k: usize, v: usize) -> Vec<Vec<u32>> {
    (0..k)
        .map(|t| (0..v).map(|w| word_topic[w * k + t]).collect())
        .collect()
}

/// Runs `params.iterations` sweeps over the documents' text.
pub fn train_lda(corpus: &[Document], vocabulary: Vocabulary, params: LdaParams) -> Result<LdaModel> {
    let mut sampler = GibbsSampler::new(corpus, vocabulary, params)?;
    for _ in 0..params.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model())
}

/// Trained topic-word counts plus the priors they were trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LdaRecord", into = "LdaRecord")]
pub struct LdaModel {
    k: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    iterations: usize,
    vocabulary: Vocabulary,
    word_topic: Vec<u32>,
    topic_totals: Vec<u64>,
}

/// Persisted JSON form.
#[derive(Serialize, Deserialize)]
struct LdaRecord {
    k: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    #[serde(default)]
    iterations: usize,
    vocabulary: Vocabulary,
    topic_word_counts: Vec<Vec<u32>>,
}

impl TryFrom<LdaRecord> for LdaModel {
    type Error = Error;
    fn try_from(r: LdaRecord) -> Result<Self> {
        LdaParams {
            k: r.k,
            alpha: r.alpha,
            beta: r.beta,
            iterations: r.iterations.max(1),
            seed: r.seed,
        }
        .validate()?;
        let v = r.vocabulary.len();
        if r.topic_word_counts.len() != r.k {
            return Err(Error::DimensionMismatch {
                left: r.k,
                right: r.topic_word_counts.len(),
            });
        }
        let mut word_topic = vec![0u32; v * r.k];
        let mut topic_totals = vec![0u64; r.k];
        for (t, row) in r.topic_word_counts.iter().enumerate() {
            if row.len() != v {
                return Err(Error::DimensionMismatch {
                    left: v,
                    right: row.len(),
                });
            }
            for (w, &c) in row.iter().enumerate() {
                word_topic[w * r.k + t] = c;
                topic_totals[t] += u64::from(c);
            }
        }
        Ok(LdaModel {
            k: r.k,
            alpha: r.alpha,
            beta: r.beta,
            seed: r.seed,
            iterations: r.iterations,
            vocabulary: r.vocabulary,
            word_topic,
            topic_totals,
        })
    }
}

impl From<LdaModel> for LdaRecord {
    fn from(m: LdaModel) -> Self {
        LdaRecord {
            topic_word_counts: m.topic_word_counts(),
            k: m.k,
            alpha: m.alpha,
            beta: m.beta,
            seed: m.seed,
            iterations: m.iterations,
            vocabulary: m.vocabulary,
        }
    }
}

impl LdaModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    pub fn topic_word_counts(&self) -> Vec<Vec<u32>> {
        transpose(&self.word_topic, self.k, self.vocabulary.len())
    }

    /// The `n` highest-count terms of `topic`, ties broken by term order.
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<&str> {
        let k = self.k;
        let mut ids: Vec<usize> = (0..self.vocabulary.len()).collect();
        ids.sort_by(|&a, &b| {
            self.word_topic[b * k + topic]
                .cmp(&self.word_topic[a * k + topic])
                .then(a.cmp(&b))
        });
        ids.into_iter()
            .take(n)
            .map(|w| self.vocabulary.terms()[w].as_str())
            .collect()
    }

    /// Fold-in Gibbs sampling for a new text with the model counts frozen.
    ///
    /// The returned posterior is `(n̄_t + alpha) / (N + k·alpha)` where `n̄_t`
    /// averages the text's topic counts over the second half of the sweeps.
    /// A text without in-vocabulary tokens gets the uniform distribution.
    pub fn infer_topics(&self, text: &str, iterations: usize, seed: u64) -> TopicDistribution {
        let k = self.k;
        let tokens = self.vocabulary.encode(text);
        if tokens.is_empty() {
            return TopicDistribution::uniform(k);
        }
        let iterations = iterations.max(1);
        let v_beta = self.vocabulary.len() as f64 * self.beta;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = vec![0u32; k];
        let mut z: Vec<usize> = tokens
            .iter()
            .map(|_| {
                let t = rng.random_range(0..k);
                counts[t] += 1;
                t
            })
            .collect();

        let burn_in = iterations / 2;
        let mut accumulated = vec![0.0f64; k];
        let mut weights = vec![0.0; k];
        for sweep in 0..iterations {
            for (i, &w) in tokens.iter().enumerate() {
                let row = w as usize * k;
                counts[z[i]] -= 1;
                for t in 0..k {
                    weights[t] = (counts[t] as f64 + self.alpha) * (self.word_topic[row + t] as f64 + self.beta)
                        / (self.topic_totals[t] as f64 + v_beta);
                }
                z[i] = sample(&mut rng, &weights);
                counts[z[i]] += 1;
            }
            if sweep >= burn_in {
                for (acc, &c) in accumulated.iter_mut().zip(&counts) {
                    *acc += f64::from(c);
                }
            }
        }
        let kept = (iterations - burn_in) as f64;
        let weights: Vec<f64> = accumulated.iter().map(|c| c / kept + self.alpha).collect();
        TopicDistribution::from_weights(&weights).expect("positive weights")
    }
}

/// Fold-in inference with fixed iteration count and seed.
#[derive(Debug, Clone, Copy)]
pub struct LdaInferencer<'a> {
    pub model: &'a LdaModel,
    pub iterations: usize,
    pub seed: u64,
}

impl TopicInferencer for LdaInferencer<'_> {
    fn infer(&self, text: &str) -> Result<TopicDistribution> {
        Ok(self.model.infer_topics(text, self.iterations, self.seed))
    }
}
