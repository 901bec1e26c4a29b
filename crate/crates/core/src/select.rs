//! Golden rationale selection.
//!
//! Every probed candidate gets two scores:
//!
//! * summary score: `sim(Ŝ_i, Ŝ_gt) + phi_alpha · sim(Ŝ_i, R̂_i)`, cosine
//!   similarity of provider embeddings of the candidate summary, the
//!   reference summary and the serialized rationale;
//! * coherence score: `KL(p_D ‖ p_A) − (1 + phi_beta) · KL(p_D ‖ p_R)`, from
//!   topic distributions of the document, the aspect phrases and the whole
//!   rationale.
//!
//! The golden rationale maximises `summary + lambda_cs · coherence`; ties go
//! to the lowest candidate index.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::{LlmClient, ResponseCache};
use crate::rationale::{parse_rationale, serialize_rationale, Candidate, CandidateSet, Document, Rationale};
use crate::topic::{kl_divergence, TopicDistribution, TopicInferencer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub phi_alpha: f64,
    pub phi_beta: f64,
    pub lambda_cs: f64,
    /// z-normalize both scores across a document's candidates before
    /// combining. Off by default: raw scores are combined.
    #[serde(default)]
    pub normalize: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            phi_alpha: 0.6,
            phi_beta: 1.3,
            lambda_cs: 1.5,
            normalize: false,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("phi_alpha", self.phi_alpha),
            ("phi_beta", self.phi_beta),
            ("lambda_cs", self.lambda_cs),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidHyperparameter(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

/// Embeds one text with the provider, without caching.
pub fn text_embedding(provider: &dyn LlmClient, text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let v = provider.embed(text)?;
    let dim = provider.embedding_dim();
    if dim != 0 && v.len() != dim {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: v.len(),
        });
    }
    Ok(v)
}

/// Embedding front-end with an in-memory memo and an optional disk cache.
pub struct Embedder<'a> {
    client: &'a dyn LlmClient,
    cache: Option<&'a ResponseCache>,
    memo: Mutex<HashMap<String, Vec<f64>>>,
}

impl<'a> Embedder<'a> {
    pub fn new(client: &'a dyn LlmClient) -> Self {
        Embedder {
            client,
            cache: None,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_cache(mut self, cache: &'a ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>> {
        if text.trim().is_empty() {
            return Err(Error::EmptyText);
        }
        if let Some(v) = self.memo.lock().expect("memo poisoned").get(text) {
            return Ok(v.clone());
        }
        let provider = self.client.model_id();
        let cached = match self.cache {
            Some(cache) => cache.lookup_embedding(provider, text)?,
            None => None,
        };
        let v = match cached {
            Some(v) => v,
            None => {
                let v = text_embedding(self.client, text)?;
                if let Some(cache) = self.cache {
                    cache.store_embedding(provider, text, &v)?;
                }
                v
            }
        };
        self.memo
            .lock()
            .expect("memo poisoned")
            .insert(text.to_owned(), v.clone());
        Ok(v)
    }
}

pub fn cosine_similarity(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nx * ny)).clamp(-1.0, 1.0))
}

pub fn summary_score_from_similarities(sim_ground_truth: f64, sim_rationale: f64, phi_alpha: f64) -> f64 {
    sim_ground_truth + phi_alpha * sim_rationale
}

pub fn coherence_score_from_divergences(kl_doc_aspects: f64, kl_doc_rationale: f64, phi_beta: f64) -> f64 {
    kl_doc_aspects - (1.0 + phi_beta) * kl_doc_rationale
}

pub fn combined_score(summary_score: f64, coherence_score: f64, lambda_cs: f64) -> f64 {
    summary_score + lambda_cs * coherence_score
}

/// Inputs of both scores, kept for audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreComponents {
    pub sim_ground_truth: f64,
    pub sim_rationale: f64,
    pub kl_doc_aspects: f64,
    pub kl_doc_rationale: f64,
}

fn summary_components(c: &Candidate, d: &Document, embedder: &Embedder<'_>) -> Result<(f64, f64)> {
    if c.summary.trim().is_empty() {
        return Err(Error::EmptyField("candidate summary"));
    }
    let summary = embedder.embed(&c.summary)?;
    let reference = embedder.embed(&d.ground_truth_summary)?;
    let rationale = embedder.embed(&serialize_rationale(&c.rationale))?;
    Ok((
        cosine_similarity(&summary, &reference)?,
        cosine_similarity(&summary, &rationale)?,
    ))
}

pub fn summary_score(c: &Candidate, d: &Document, embedder: &Embedder<'_>, cfg: &SelectionConfig) -> Result<f64> {
    let (gt, rat) = summary_components(c, d, embedder)?;
    Ok(summary_score_from_similarities(gt, rat, cfg.phi_alpha))
}

fn coherence_components(
    rationale: &Rationale,
    doc_topics: &TopicDistribution,
    topics: &dyn TopicInferencer,
) -> Result<(f64, f64)> {
    let aspects = topics.infer(&rationale.aspect_words())?;
    let whole = topics.infer(&rationale.rationale_words())?;
    Ok((kl_divergence(doc_topics, &aspects)?, kl_divergence(doc_topics, &whole)?))
}

pub fn coherence_score(
    c: &Candidate,
    d: &Document,
    topics: &dyn TopicInferencer,
    cfg: &SelectionConfig,
) -> Result<f64> {
    let doc_topics = topics.infer(&d.text)?;
    let (da, dr) = coherence_components(&c.rationale, &doc_topics, topics)?;
    Ok(coherence_score_from_divergences(da, dr, cfg.phi_beta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub index: usize,
    pub summary_score: f64,
    pub coherence_score: f64,
    pub combined: f64,
    pub components: ScoreComponents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub document_id: String,
    pub golden_index: usize,
    pub golden_rationale: Rationale,
    pub table: Vec<ScoredCandidate>,
    pub excluded: Vec<Exclusion>,
}

/// Index of the largest value; the earliest wins ties. `None` when empty.
pub fn argmax_lowest_index(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if *v <= values[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

fn z_normalize(values: &mut [f64]) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    for v in values.iter_mut() {
        *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
    }
}

pub fn select_golden(
    cs: &CandidateSet,
    d: &Document,
    topics: &dyn TopicInferencer,
    embedder: &Embedder<'_>,
    cfg: &SelectionConfig,
) -> Result<SelectionResult> {
    cfg.validate()?;
    if cs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let doc_topics = topics.infer(&d.text)?;
    let mut table = Vec::new();
    let mut excluded = Vec::new();
    for c in cs.candidates() {
        let scored = summary_components(c, d, embedder).and_then(|(gt, rat)| {
            let (da, dr) = coherence_components(&c.rationale, &doc_topics, topics)?;
            Ok(ScoreComponents {
                sim_ground_truth: gt,
                sim_rationale: rat,
                kl_doc_aspects: da,
                kl_doc_rationale: dr,
            })
        });
        match scored {
            Ok(components) => {
                let s = summary_score_from_similarities(
                    components.sim_ground_truth,
                    components.sim_rationale,
                    cfg.phi_alpha,
                );
                let h = coherence_score_from_divergences(
                    components.kl_doc_aspects,
                    components.kl_doc_rationale,
                    cfg.phi_beta,
                );
                if s.is_finite() && h.is_finite() {
                    table.push(ScoredCandidate {
                        index: c.index,
                        summary_score: s,
                        coherence_score: h,
                        combined: 0.0,
                        components,
                    });
                } else {
                    excluded.push(Exclusion {
                        index: c.index,
                        reason: format!("non-finite score (summary {s}, coherence {h})"),
                    });
                }
            }
            Err(e) => excluded.push(Exclusion {
                index: c.index,
                reason: e.to_string(),
            }),
        }
    }
    if table.is_empty() {
        return Err(Error::AllCandidatesFailed {
            document_id: d.id.clone(),
            reasons: excluded
                .iter()
                .map(|e| format!("#{}: {}", e.index, e.reason))
                .collect::<Vec<_>>()
                .join("; "),
        });
    }
    if cfg.normalize {
        let mut s: Vec<f64> = table.iter().map(|r| r.summary_score).collect();
        let mut h: Vec<f64> = table.iter().map(|r| r.coherence_score).collect();
        z_normalize(&mut s);
        z_normalize(&mut h);
        for (row, (s, h)) in table.iter_mut().zip(s.into_iter().zip(h)) {
            row.summary_score = s;
            row.coherence_score = h;
        }
    }
    for row in &mut table {
        row.combined = combined_score(row.summary_score, row.coherence_score, cfg.lambda_cs);
    }
    let combined: Vec<f64> = table.iter().map(|r| r.combined).collect();
    let best = argmax_lowest_index(&combined).expect("table is nonempty");
    let golden_index = table[best].index;
    Ok(SelectionResult {
        document_id: d.id.clone(),
        golden_index,
        golden_rationale: cs.candidates()[golden_index].rationale.clone(),
        table,
        excluded,
    })
}

/// Persisted per-document selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub document_id: String,
    pub config: SelectionConfig,
    pub table: Vec<ScoredCandidate>,
    pub excluded: Vec<Exclusion>,
    pub golden_index: usize,
    /// Canonical text form.
    pub golden_rationale: String,
}

impl SelectionResult {
    pub fn to_record(&self, cfg: &SelectionConfig) -> SelectionRecord {
        SelectionRecord {
            document_id: self.document_id.clone(),
            config: *cfg,
            table: self.table.clone(),
            excluded: self.excluded.clone(),
            golden_index: self.golden_index,
            golden_rationale: serialize_rationale(&self.golden_rationale),
        }
    }
}

impl SelectionRecord {
    pub fn rationale(&self) -> Result<Rationale> {
        parse_rationale(&self.golden_rationale)
    }

    /// Recomputes every combined score and the argmax from the table.
    pub fn verify(&self) -> Result<()> {
        for row in &self.table {
            let expected = combined_score(row.summary_score, row.coherence_score, self.config.lambda_cs);
            if expected != row.combined {
                return Err(Error::Config(format!(
                    "{}: candidate {} combined {} != recomputed {expected}",
                    self.document_id, row.index, row.combined
                )));
            }
        }
        let combined: Vec<f64> = self.table.iter().map(|r| r.combined).collect();
        match argmax_lowest_index(&combined).map(|i| self.table[i].index) {
            Some(i) if i == self.golden_index => Ok(()),
            other => Err(Error::Config(format!(
                "{}: golden index {} but table argmax is {other:?}",
                self.document_id, self.golden_index
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::MockLlm;

    #[test]
    fn cosine_cases() {
        assert_eq!(cosine_similarity(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let s = cosine_similarity(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroVector)
        ));
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn score_arithmetic() {
        assert!((summary_score_from_similarities(0.9, 0.5, 0.6) - 1.20).abs() < 1e-12);
        assert!((coherence_score_from_divergences(0.8, 0.3, 1.3) - 0.11).abs() < 1e-12);
        assert_eq!(summary_score_from_similarities(0.9, 0.5, 0.0), 0.9);
        assert!((combined_score(1.2, 0.11, 1.5) - 1.365).abs() < 1e-12);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax_lowest_index(&[]), None);
        assert_eq!(argmax_lowest_index(&[1.0, 1.0, 1.0]), Some(0));
        assert_eq!(argmax_lowest_index(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax_lowest_index(&[1.365, 1.10]), Some(0));
    }

    #[test]
    fn embedder_memoizes_and_uses_disk_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path());
        let llm = MockLlm::new(1);
        let e = Embedder::new(&llm).with_cache(&cache);
        let a = e.embed("hello world").unwrap();
        assert_eq!(e.embed("hello world").unwrap(), a);
        assert_eq!(llm.embedding_calls(), 1);
        // fresh embedder, same disk cache: no provider call
        let e2 = Embedder::new(&llm).with_cache(&cache);
        assert_eq!(e2.embed("hello world").unwrap(), a);
        assert_eq!(llm.embedding_calls(), 1);
        assert!(matches!(e2.embed(" "), Err(Error::EmptyText)));
    }

    #[test]
    fn default_config() {
        let c = SelectionConfig::default();
        assert_eq!((c.phi_alpha, c.phi_beta, c.lambda_cs), (0.6, 1.3, 1.5));
        assert!(!c.normalize);
        assert!(SelectionConfig {
            lambda_cs: f64::INFINITY,
            ..c
        }
        .validate()
        .is_err());
    }

    #[test]
    fn z_normalize_constant_is_zero() {
        let mut v = vec![2.0, 2.0];
        z_normalize(&mut v);
        assert_eq!(v, vec![0.0, 0.0]);
        let mut v = vec![1.0, 3.0];
        z_normalize(&mut v);
        assert_eq!(v, vec![-1.0, 1.0]);
    }
}
