//! LLM rationale probing.
//!
//! A document is rendered into the rationale probe prompt and sent to an
//! [`LlmClient`] `n_samples` times. Each response must parse as a rationale
//! followed by a summary; unparseable responses are retried up to
//! `max_retries` times and then discarded. Accepted responses are cached so a
//! rerun only calls the provider for missing samples.

mod cache;
mod client;
#[cfg(feature = "http")]
mod http;
mod provider;
mod template;

use serde::{Deserialize, Serialize};

pub(crate) use cache::write_atomic;
pub use cache::{path_component, CacheKey, ResponseCache};
pub use client::{CompletionRequest, LlmClient, MockLlm};
#[cfg(feature = "http")]
pub use http::HttpLlmClient;
pub use provider::ProviderConfig;
pub use template::{
    render_probe_prompt, render_rationale_guided_prompt, render_zero_shot_prompt, PromptSet, PromptTemplate,
    TemplateKind,
};

use crate::error::{Error, Result};
use crate::rationale::{parse_probe_response, Candidate, CandidateSet, Document};
use crate::text::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub n_samples: usize,
    pub model_id: String,
    pub max_retries: usize,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn new(n_samples: usize) -> Self {
        ProbeConfig {
            n_samples,
            model_id: "mock-llm".into(),
            max_retries: 2,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// A response that failed to parse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discarded {
    pub sample_index: usize,
    pub attempt: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub candidates: CandidateSet,
    pub discarded: Vec<Discarded>,
    /// Provider calls made (cache hits excluded).
    pub provider_calls: usize,
}

/// Directory name under the document's cache folder. Folds the model id into
/// the template hash so two models never share entries.
pub fn probe_cache_hash(template: &PromptTemplate, model_id: &str) -> String {
    sha256_hex(format!("{}\0{model_id}", template.hash()))[..16].to_owned()
}

pub struct Prober<'a> {
    client: &'a dyn LlmClient,
    prompts: &'a PromptSet,
    cache: Option<&'a ResponseCache>,
}

impl<'a> Prober<'a> {
    pub fn new(client: &'a dyn LlmClient, prompts: &'a PromptSet) -> Self {
        Prober {
            client,
            prompts,
            cache: None,
        }
    }

    pub fn with_cache(mut self, cache: &'a ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn probe(&self, d: &Document, cfg: &ProbeConfig) -> Result<ProbeOutcome> {
        cfg.validate()?;
        let prompt = self.prompts.render_probe(d)?;
        let template_hash = probe_cache_hash(&self.prompts.probe, self.client.model_id());
        let mut candidates = Vec::with_capacity(cfg.n_samples);
        let mut discarded = Vec::new();
        let mut provider_calls = 0;
        let mut failed_slots = 0;

        for sample_index in 0..cfg.n_samples {
            let key = CacheKey {
                document_id: d.id.clone(),
                template_hash: template_hash.clone(),
                sample_index,
            };
            if let Some(cache) = self.cache {
                if let Some(cached) = cache.lookup(&key)? {
                    if let Ok((rationale, summary)) = parse_probe_response(&cached) {
                        candidates.push((rationale, summary));
                        continue;
                    }
                }
            }
            let mut accepted = None;
            for attempt in 0..=cfg.max_retries {
                let response = self.client.complete(&CompletionRequest {
                    prompt: &prompt,
                    sample_index,
                    attempt,
                })?;
                provider_calls += 1;
                match parse_probe_response(&response) {
                    Ok(parsed) => {
                        if let Some(cache) = self.cache {
                            cache.store(&key, &response)?;
                        }
                        accepted = Some(parsed);
                        break;
                    }
                    Err(e) => discarded.push(Discarded {
                        sample_index,
                        attempt,
                        reason: e.to_string(),
                    }),
                }
            }
            match accepted {
                Some(parsed) => candidates.push(parsed),
                None => failed_slots += 1,
            }
        }

        if failed_slots > 0 {
            return Err(Error::InsufficientValidSamples {
                document_id: d.id.clone(),
                wanted: cfg.n_samples,
                got: cfg.n_samples - failed_slots,
            });
        }
        let candidates = candidates
            .into_iter()
            .enumerate()
            .map(|(index, (rationale, summary))| Candidate {
                index,
                rationale,
                summary,
            })
            .collect();
        Ok(ProbeOutcome {
            candidates: CandidateSet::new(d.id.clone(), candidates)?,
            discarded,
            provider_calls,
        })
    }
}

/// Probes with the bundled templates and no cache.
pub fn probe_rationales(client: &dyn LlmClient, d: &Document, cfg: &ProbeConfig) -> Result<ProbeOutcome> {
    Prober::new(client, &PromptSet::builtin()).probe(d, cfg)
}
