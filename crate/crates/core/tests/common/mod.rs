//! Test doubles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Mutex;

use sumdistill::curriculum::{StageManifest, StageMetrics, TaskKind, TrainerAdapter};
use sumdistill::probe::{CompletionRequest, LlmClient};
use sumdistill::rationale::{Aspect, Document, Rationale, Triple};
use sumdistill::topic::{TopicDistribution, TopicInferencer};
use sumdistill::{Error, Result};

/// Embedding provider with a fixed vector per text. Unknown texts fail.
pub struct FixedEmbedder {
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f64>>,
}

impl FixedEmbedder {
    pub fn new(dim: usize) -> Self {
        FixedEmbedder {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn set(&mut self, text: impl Into<String>, v: Vec<f64>) {
        assert_eq!(v.len(), self.dim);
        self.vectors.insert(text.into(), v);
    }
}

impl LlmClient for FixedEmbedder {
    fn model_id(&self) -> &str {
        "fixed-embedder"
    }

    fn complete(&self, _: &CompletionRequest<'_>) -> Result<String> {
        Err(Error::Transport("completion not supported".into()))
    }

    fn embedding_dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        self.vectors
            .get(text)
            .cloned()
            .ok_or_else(|| Error::Transport(format!("no vector for {text:?}")))
    }
}

/// Topic inferencer with a fixed distribution per text. Unknown texts fail.
#[derive(Default)]
pub struct FixedTopics {
    pub dists: HashMap<String, TopicDistribution>,
}

impl FixedTopics {
    pub fn set(&mut self, text: impl Into<String>, probs: &[f64]) {
        self.dists
            .insert(text.into(), TopicDistribution::from_weights(probs).unwrap());
    }
}

impl TopicInferencer for FixedTopics {
    fn infer(&self, text: &str) -> Result<TopicDistribution> {
        self.dists
            .get(text)
            .cloned()
            .ok_or_else(|| Error::InvalidHyperparameter(format!("no topics for {text:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeCall {
    pub task: TaskKind,
    pub input: String,
    pub output: String,
}

/// Wraps an adapter and records every decode. With `corrupt_aspects` set,
/// aspect decodes are replaced by that string.
pub struct InstrumentedAdapter<A> {
    pub inner: A,
    pub calls: Mutex<Vec<DecodeCall>>,
    pub corrupt_aspects: Option<String>,
    pub trained: Vec<usize>,
}

impl<A> InstrumentedAdapter<A> {
    pub fn new(inner: A) -> Self {
        InstrumentedAdapter {
            inner,
            calls: Mutex::new(Vec::new()),
            corrupt_aspects: None,
            trained: Vec::new(),
        }
    }

    pub fn calls(&self) -> Vec<DecodeCall> {
        self.calls.lock().unwrap().clone()
    }
}

impl<A: TrainerAdapter> TrainerAdapter for InstrumentedAdapter<A> {
    fn train(&mut self, manifest: &StageManifest) -> Result<StageMetrics> {
        self.trained.push(manifest.examples.len());
        self.inner.train(manifest)
    }

    fn greedy_decode(&self, task: TaskKind, input: &str) -> Result<String> {
        let mut output = self.inner.greedy_decode(task, input)?;
        if let (TaskKind::AspExt, Some(c)) = (task, &self.corrupt_aspects) {
            output = c.clone();
        }
        self.calls.lock().unwrap().push(DecodeCall {
            task,
            input: input.to_owned(),
            output: output.clone(),
        });
        Ok(output)
    }
}

pub fn rationale(aspects: &[&str], triples: &[(&str, &str, &str)]) -> Rationale {
    Rationale::new(
        aspects.iter().map(|a| Aspect::new(a).unwrap()).collect(),
        triples.iter().map(|(s, r, o)| Triple::new(s, r, o).unwrap()).collect(),
    )
    .unwrap()
}

pub fn doc(id: &str, text: &str, summary: &str) -> Document {
    Document::new(id, text, summary).unwrap()
}
