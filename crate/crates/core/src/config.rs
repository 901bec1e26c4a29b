//! Pipeline configuration and per-dataset profiles.
//!
//! A config starts from a profile's defaults, then a JSON file may override
//! any subset of fields (nested objects merge key by key), then the seed may
//! be overridden from the command line.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::curriculum::{JointWeights, TrainerSettings};
use crate::error::{Error, Result};
use crate::probe::ProviderConfig;
use crate::select::SelectionConfig;
use crate::text::sha256_hex;
use crate::topic::{LdaParams, StopwordList, VocabularyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Cnndm,
    Xsum,
    Clinicaltrial,
    /// No dataset defaults for sample count and topic count; both must be
    /// given explicitly.
    Custom,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Cnndm => "cnndm",
            Profile::Xsum => "xsum",
            Profile::Clinicaltrial => "clinicaltrial",
            Profile::Custom => "custom",
        }
    }

    /// `(n_samples, k)`; zero means unset.
    fn dataset_defaults(self) -> (usize, usize) {
        match self {
            Profile::Cnndm => (15, 200),
            Profile::Xsum => (8, 500),
            Profile::Clinicaltrial => (8, 300),
            Profile::Custom => (0, 0),
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cnndm" => Ok(Profile::Cnndm),
            "xsum" => Ok(Profile::Xsum),
            "clinicaltrial" => Ok(Profile::Clinicaltrial),
            "custom" => Ok(Profile::Custom),
            other => Err(Error::Config(format!(
                "unknown profile {other:?} (expected cnndm, xsum, clinicaltrial or custom)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub n_samples: usize,
    pub max_retries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaSettings {
    pub k: usize,
    /// `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub infer_iterations: usize,
    pub stopwords: StopwordList,
    pub min_df: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub max_doc_tokens: usize,
    pub max_summary_tokens: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_doc_tokens: 1024,
            max_summary_tokens: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub profile: Profile,
    pub seed: u64,
    pub probe: ProbeSettings,
    pub lda: LdaSettings,
    pub selection: SelectionConfig,
    pub joint: JointWeights,
    pub trainer: TrainerSettings,
    pub limits: Limits,
    /// Used unless the mock client is requested.
    pub provider: ProviderConfig,
    /// Split used for probing, selection and topic-model training.
    pub train_split: String,
    /// Split evaluated; falls back to `train_split` when the corpus lacks it.
    pub eval_split: String,
}

impl PipelineConfig {
    pub fn for_profile(profile: Profile) -> Self {
        let (n, k) = profile.dataset_defaults();
        PipelineConfig {
            profile,
            seed: 0,
            probe: ProbeSettings {
                n_samples: n,
                max_retries: 2,
            },
            lda: LdaSettings {
                k,
                alpha: None,
                beta: 0.01,
                iterations: 500,
                infer_iterations: 50,
                stopwords: StopwordList::English,
                min_df: 1,
            },
            selection: SelectionConfig::default(),
            joint: JointWeights::default(),
            trainer: TrainerSettings::default(),
            limits: Limits::default(),
            provider: ProviderConfig::default(),
            train_split: "train".into(),
            eval_split: "test".into(),
        }
    }

    /// Profile defaults, then `overrides` merged over them.
    ///
    /// An explicit `profile` argument wins over a `"profile"` key in the
    /// overrides.
    pub fn from_overrides(profile: Option<Profile>, overrides: Option<Value>) -> Result<Self> {
        let overrides = overrides.unwrap_or(Value::Object(Default::default()));
        if !overrides.is_object() {
            return Err(Error::Config("config file must hold a JSON object".into()));
        }
        let from_file = match overrides.get("profile") {
            Some(v) => Some(serde_json::from_value::<Profile>(v.clone()).map_err(|e| Error::Config(e.to_string()))?),
            None => None,
        };
        let profile = profile.or(from_file).unwrap_or(Profile::Cnndm);
        let mut base = serde_json::to_value(PipelineConfig::for_profile(profile))?;
        merge(&mut base, &overrides)?;
        base["profile"] = serde_json::to_value(profile)?;
        let cfg: PipelineConfig = serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(profile: Option<Profile>, file: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let overrides = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Some(
                    serde_json::from_str::<Value>(&text)
                        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
                )
            }
            None => None,
        };
        let mut cfg = Self::from_overrides(profile, overrides)?;
        if let Some(seed) = seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.probe.n_samples == 0 {
            return Err(Error::Config(format!(
                "profile {} requires probe.n_samples",
                self.profile.name()
            )));
        }
        if self.lda.k == 0 {
            return Err(Error::Config(format!("profile {} requires lda.k", self.profile.name())));
        }
        if self.lda.infer_iterations == 0 {
            return Err(Error::Config("lda.infer_iterations must be at least 1".into()));
        }
        self.lda_params().validate()?;
        self.selection.validate()?;
        for (name, w) in [
            ("joint.rationale", self.joint.rationale),
            ("joint.summary", self.joint.summary),
        ] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidHyperparameter(format!("{name} = {w}")));
            }
        }
        if self.limits.max_doc_tokens == 0 || self.limits.max_summary_tokens == 0 {
            return Err(Error::Config("token limits must be positive".into()));
        }
        Ok(())
    }

    pub fn lda_params(&self) -> LdaParams {
        let mut p = LdaParams::with_topics(self.lda.k);
        if let Some(a) = self.lda.alpha {
            p.alpha = a;
        }
        p.beta = self.lda.beta;
        p.iterations = self.lda.iterations;
        p.seed = self.seed;
        p
    }

    pub fn vocabulary_config(&self) -> VocabularyConfig {
        VocabularyConfig {
            stopwords: self.lda.stopwords,
            min_df: self.lda.min_df,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes"))
    }

    /// Digest of only the fields a pipeline stage reads, so changing one
    /// stage's settings does not invalidate the others.
    pub fn stage_digest(&self, stage: &str) -> String {
        let slice = match stage {
            "ingest" => serde_json::json!({ "limits": self.limits }),
            "probe" => serde_json::json!({
                "seed": self.seed, "probe": self.probe, "train_split": self.train_split,
                "provider": self.provider,
            }),
            "select" => serde_json::json!({
                "seed": self.seed, "lda": self.lda, "selection": self.selection,
                "train_split": self.train_split, "provider": self.provider,
            }),
            "curriculum" => serde_json::json!({ "joint": self.joint, "trainer": self.trainer }),
            "eval" => serde_json::json!({ "eval_split": self.eval_split }),
            _ => serde_json::to_value(self).expect("config serializes"),
        };
        sha256_hex(slice.to_string())
    }
}

fn merge(base: &mut Value, over: &Value) -> Result<()> {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (key, v) in o {
                match b.get_mut(key) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v)?,
                    Some(slot) => *slot = v.clone(),
                    None => return Err(Error::Config(format!("unknown config key {key:?}"))),
                }
            }
            Ok(())
        }
        _ => Err(Error::Config("config overrides must be objects".into())),
    }
}
