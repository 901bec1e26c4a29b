//! Curriculum training manifests and the trainer-adapter contract.
//!
//! Stages run in a fixed order:
//!
//! 1. singular aspect extraction, triple extraction, summary generation;
//! 2. concurrent, early: all three tasks, conditioned on the golden rationale;
//! 3. concurrent, late: all three tasks, conditioned on the adapter's own
//!    greedy decodes;
//! 4. joint rationale-summary generation.
//!
//! Inputs are built from literal ASCII marker strings. Every input starts with
//! the task prefix, then `<article>`, then (where present) `<aspects>` and
//! `<triples>`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rationale::{parse_rationale, serialize_rationale, Document, Rationale};
use crate::text::{sha256_hex, word_tokens};
use crate::topic::is_stopword;

pub const ARTICLE: &str = "<article>";
pub const ASPECTS: &str = "<aspects>";
pub const TRIPLES: &str = "<triples>";
pub const SUMMARY: &str = "<summary>";

/// Separator between a joint target's rationale and summary.
const JOINT_SPLIT: &str = " <summary> ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    AspExt,
    TriExt,
    SumGen,
    RatGen,
}

impl TaskKind {
    pub fn prefix(self) -> &'static str {
        match self {
            TaskKind::AspExt => "<AspExt>",
            TaskKind::TriExt => "<TriExt>",
            TaskKind::SumGen => "<SumGen>",
            TaskKind::RatGen => "<RatGen>",
        }
    }
}

pub const RESERVED_TOKENS: [&str; 8] = [
    "<AspExt>", "<TriExt>", "<SumGen>", "<RatGen>", ARTICLE, ASPECTS, TRIPLES, SUMMARY,
];

pub fn find_reserved_token(text: &str) -> Option<&'static str> {
    RESERVED_TOKENS.iter().copied().find(|t| text.contains(t))
}

fn check_reserved(text: &str, context: impl FnOnce() -> String) -> Result<()> {
    match find_reserved_token(text) {
        Some(token) => Err(Error::ReservedToken {
            token,
            context: context(),
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    SingularAspect,
    SingularTriple,
    SingularSummary,
    ConcurrentEarly,
    ConcurrentLate,
    Joint,
}

impl Stage {
    pub const CANONICAL: [Stage; 6] = [
        Stage::SingularAspect,
        Stage::SingularTriple,
        Stage::SingularSummary,
        Stage::ConcurrentEarly,
        Stage::ConcurrentLate,
        Stage::Joint,
    ];

    pub fn position(self) -> usize {
        Stage::CANONICAL
            .iter()
            .position(|s| *s == self)
            .expect("stage is canonical")
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::SingularAspect => "singular_aspect",
            Stage::SingularTriple => "singular_triple",
            Stage::SingularSummary => "singular_summary",
            Stage::ConcurrentEarly => "concurrent_early",
            Stage::ConcurrentLate => "concurrent_late",
            Stage::Joint => "joint",
        }
    }

    /// Manifest file stem, numbered so directory listings sort canonically.
    pub fn file_stem(self) -> String {
        format!("{:02}_{}", self.position() + 1, self.name())
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stage::CANONICAL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Conditioning segments come from the golden rationale.
    Golden,
    /// Conditioning segments come from the adapter's greedy decodes.
    ModelGenerated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub stage: Stage,
    pub task: TaskKind,
    pub input: String,
    pub target: String,
    pub loss_weight: f64,
    pub document_id: String,
    pub provenance: Provenance,
}

/// A document paired with its golden rationale, if selection produced one.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenPair {
    pub document: Document,
    pub rationale: Option<Rationale>,
}

impl GoldenPair {
    pub fn new(document: Document, rationale: Rationale) -> Self {
        GoldenPair {
            document,
            rationale: Some(rationale),
        }
    }

    fn checked(&self) -> Result<&Rationale> {
        let r = self
            .rationale
            .as_ref()
            .ok_or_else(|| Error::MissingRationale(self.document.id.clone()))?;
        let id = &self.document.id;
        check_reserved(&self.document.text, || format!("text of {id}"))?;
        check_reserved(&self.document.ground_truth_summary, || format!("summary of {id}"))?;
        check_reserved(&serialize_rationale(r), || format!("rationale of {id}"))?;
        Ok(r)
    }
}

pub fn aspect_input(d: &Document) -> String {
    format!("{} {ARTICLE} {}", TaskKind::AspExt.prefix(), d.text)
}

pub fn triple_input(d: &Document, aspects: &str) -> String {
    format!("{} {ARTICLE} {} {ASPECTS} {aspects}", TaskKind::TriExt.prefix(), d.text)
}

pub fn summary_input(d: &Document, aspects: &str, triples: &str) -> String {
    format!(
        "{} {ARTICLE} {} {ASPECTS} {aspects} {TRIPLES} {triples}",
        TaskKind::SumGen.prefix(),
        d.text
    )
}

pub fn joint_input(d: &Document) -> String {
    format!("{} {ARTICLE} {}", TaskKind::RatGen.prefix(), d.text)
}

pub fn joint_target(r: &Rationale, summary: &str) -> String {
    format!("{}{JOINT_SPLIT}{summary}", serialize_rationale(r))
}

/// Splits a joint target back into its rationale and summary.
pub fn split_joint_target(target: &str) -> Result<(Rationale, String)> {
    let (rationale, summary) = target
        .split_once(JOINT_SPLIT)
        .ok_or_else(|| Error::MalformedRationale(format!("joint target lacks {SUMMARY}")))?;
    Ok((parse_rationale(rationale)?, summary.to_owned()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub document_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: Stage,
    pub examples: Vec<TrainingExample>,
    pub loss_config: BTreeMap<String, f64>,
    pub skipped: Vec<SkipRecord>,
}

/// Sidecar written next to a manifest's JSON Lines file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub stage: Stage,
    pub loss_config: BTreeMap<String, f64>,
    pub example_count: usize,
    pub skipped: Vec<SkipRecord>,
    /// SHA-256 of the JSON Lines body.
    pub digest: String,
}

impl StageManifest {
    fn new(stage: Stage, loss_config: &[(&str, f64)]) -> Self {
        StageManifest {
            stage,
            examples: Vec::new(),
            loss_config: loss_config.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            skipped: Vec::new(),
        }
    }

    fn push(&mut self, task: TaskKind, input: String, target: String, document_id: &str, provenance: Provenance) {
        self.examples.push(TrainingExample {
            stage: self.stage,
            task,
            input,
            target,
            loss_weight: 1.0,
            document_id: document_id.to_owned(),
            provenance,
        });
    }

    /// One JSON object per line, each line newline-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for ex in &self.examples {
            out.push_str(&serde_json::to_string(ex).expect("examples serialize"));
            out.push('\n');
        }
        out
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.to_jsonl())
    }

    pub fn header(&self) -> ManifestHeader {
        ManifestHeader {
            stage: self.stage,
            loss_config: self.loss_config.clone(),
            example_count: self.examples.len(),
            skipped: self.skipped.clone(),
            digest: self.digest(),
        }
    }

    pub fn from_jsonl(header: &ManifestHeader, body: &str) -> Result<Self> {
        let examples = body
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<TrainingExample>, _>>()?;
        Ok(StageManifest {
            stage: header.stage,
            examples,
            loss_config: header.loss_config.clone(),
            skipped: header.skipped.clone(),
        })
    }
}

/// Aspect-extraction, triple-extraction and summary-generation manifests.
pub fn build_singular_manifests(pairs: &[GoldenPair]) -> Result<[StageManifest; 3]> {
    let mut aspect = StageManifest::new(Stage::SingularAspect, &[("aspects", 1.0)]);
    let mut triple = StageManifest::new(Stage::SingularTriple, &[("triples", 1.0)]);
    let mut summary = StageManifest::new(Stage::SingularSummary, &[("summary", 1.0)]);
    for pair in pairs {
        let r = pair.checked()?;
        let d = &pair.document;
        let (a, t) = (r.aspects_text(), r.triples_text());
        aspect.push(TaskKind::AspExt, aspect_input(d), a.clone(), &d.id, Provenance::Golden);
        triple.push(
            TaskKind::TriExt,
            triple_input(d, &a),
            t.clone(),
            &d.id,
            Provenance::Golden,
        );
        summary.push(
            TaskKind::SumGen,
            summary_input(d, &a, &t),
            d.ground_truth_summary.clone(),
            &d.id,
            Provenance::Golden,
        );
    }
    Ok([aspect, triple, summary])
}

const CONCURRENT_LOSSES: [(&str, f64); 3] = [("aspects", 1.0), ("triples", 1.0), ("summary", 1.0)];

/// All three tasks per document, teacher-forced on the golden rationale.
pub fn build_concurrent_early_manifest(pairs: &[GoldenPair]) -> Result<StageManifest> {
    let mut m = StageManifest::new(Stage::ConcurrentEarly, &CONCURRENT_LOSSES);
    for pair in pairs {
        let r = pair.checked()?;
        let d = &pair.document;
        let (a, t) = (r.aspects_text(), r.triples_text());
        m.push(TaskKind::AspExt, aspect_input(d), a.clone(), &d.id, Provenance::Golden);
        m.push(
            TaskKind::TriExt,
            triple_input(d, &a),
            t.clone(),
            &d.id,
            Provenance::Golden,
        );
        m.push(
            TaskKind::SumGen,
            summary_input(d, &a, &t),
            d.ground_truth_summary.clone(),
            &d.id,
            Provenance::Golden,
        );
    }
    Ok(m)
}

fn checked_decode(adapter: &dyn TrainerAdapter, task: TaskKind, input: &str) -> Result<String> {
    let out = adapter.greedy_decode(task, input)?;
    let out = out.trim();
    if out.is_empty() {
        return Err(Error::DecodeFailure(format!("{task:?} produced empty output")));
    }
    if let Some(token) = find_reserved_token(out) {
        return Err(Error::DecodeFailure(format!("{task:?} output contains {token}")));
    }
    Ok(out.to_owned())
}

/// All three tasks per document, conditioned on the adapter's own decodes.
///
/// Calls `greedy_decode` for aspects, then for triples given those aspects.
/// Targets stay golden. A document whose decode fails is skipped and
/// recorded in `skipped`.
pub fn build_concurrent_late_manifest(pairs: &[GoldenPair], adapter: &dyn TrainerAdapter) -> Result<StageManifest> {
    let mut m = StageManifest::new(Stage::ConcurrentLate, &CONCURRENT_LOSSES);
    for pair in pairs {
        let r = pair.checked()?;
        let d = &pair.document;
        let decoded = checked_decode(adapter, TaskKind::AspExt, &aspect_input(d)).and_then(|a| {
            let t = checked_decode(adapter, TaskKind::TriExt, &triple_input(d, &a))?;
            Ok((a, t))
        });
        let (a_gen, t_gen) = match decoded {
            Ok(v) => v,
            Err(e) => {
                m.skipped.push(SkipRecord {
                    document_id: d.id.clone(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let gen = Provenance::ModelGenerated;
        m.push(TaskKind::AspExt, aspect_input(d), r.aspects_text(), &d.id, gen);
        m.push(TaskKind::TriExt, triple_input(d, &a_gen), r.triples_text(), &d.id, gen);
        m.push(
            TaskKind::SumGen,
            summary_input(d, &a_gen, &t_gen),
            d.ground_truth_summary.clone(),
            &d.id,
            gen,
        );
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointWeights {
    pub rationale: f64,
    pub summary: f64,
}

impl Default for JointWeights {
    fn default() -> Self {
        JointWeights {
            rationale: 0.8,
            summary: 1.2,
        }
    }
}

/// One rationale-summary generation example per document.
pub fn build_joint_manifest(pairs: &[GoldenPair], weights: JointWeights) -> Result<StageManifest> {
    let mut m = StageManifest::new(
        Stage::Joint,
        &[("rationale", weights.rationale), ("summary", weights.summary)],
    );
    for pair in pairs {
        let r = pair.checked()?;
        let d = &pair.document;
        m.push(
            TaskKind::RatGen,
            joint_input(d),
            joint_target(r, &d.ground_truth_summary),
            &d.id,
            Provenance::Golden,
        );
    }
    Ok(m)
}

pub type StageMetrics = BTreeMap<String, f64>;

/// What a trainer must provide to run the curriculum.
///
/// `greedy_decode` must be deterministic for a fixed trained state.
pub trait TrainerAdapter {
    fn train(&mut self, manifest: &StageManifest) -> Result<StageMetrics>;

    fn greedy_decode(&self, task: TaskKind, input: &str) -> Result<String>;
}

/// Trainer stand-in that memorizes `input → target` pairs.
///
/// Decoding a memorized input returns its target; anything else gets a
/// deterministic extractive guess built from the article segment.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct MockAdapter {
    memory: BTreeMap<String, String>,
    trained: Vec<Stage>,
    #[serde(skip)]
    decode_calls: AtomicUsize,
}

impl MockAdapter {
    pub fn new() -> Self {
        MockAdapter::default()
    }

    pub fn decode_calls(&self) -> usize {
        self.decode_calls.load(Ordering::SeqCst)
    }

    pub fn trained_stages(&self) -> &[Stage] {
        &self.trained
    }
}

fn article_segment(input: &str) -> &str {
    let Some(start) = input.find(ARTICLE) else {
        return input;
    };
    let rest = &input[start + ARTICLE.len()..];
    let end = [ASPECTS, TRIPLES]
        .iter()
        .filter_map(|m| rest.find(m))
        .min()
        .unwrap_or(rest.len());
    rest[..end].trim()
}

fn lead_sentence(text: &str) -> String {
    let s = text.split_inclusive(['.', '!', '?']).next().unwrap_or(text).trim();
    if s.is_empty() {
        "No content.".into()
    } else {
        s.to_owned()
    }
}

fn keywords(text: &str, n: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for w in word_tokens(text) {
        if w.len() >= 3 && !is_stopword(&w) && !out.contains(&w) {
            out.push(w);
            if out.len() == n {
                break;
            }
        }
    }
    if out.is_empty() {
        out.push("document".into());
    }
    out
}

impl TrainerAdapter for MockAdapter {
    fn train(&mut self, manifest: &StageManifest) -> Result<StageMetrics> {
        let mut new = 0usize;
        for ex in &manifest.examples {
            if self.memory.insert(ex.input.clone(), ex.target.clone()).as_ref() != Some(&ex.target) {
                new += 1;
            }
        }
        self.trained.push(manifest.stage);
        let n = manifest.examples.len();
        let mut metrics = StageMetrics::new();
        metrics.insert("examples".into(), n as f64);
        metrics.insert("new_examples".into(), new as f64);
        // fraction of examples not yet memorized before this stage
        metrics.insert("loss".into(), if n == 0 { 0.0 } else { new as f64 / n as f64 });
        Ok(metrics)
    }

    fn greedy_decode(&self, task: TaskKind, input: &str) -> Result<String> {
        self.decode_calls.fetch_add(1, Ordering::SeqCst);
        if let Some(target) = self.memory.get(input) {
            return Ok(target.clone());
        }
        let article = article_segment(input);
        let words = keywords(article, 4);
        let aspects = words.join("; ");
        let triple = format!("[{} | relates to | {}]", words[0], words.get(1).unwrap_or(&words[0]));
        Ok(match task {
            TaskKind::AspExt => aspects,
            TaskKind::TriExt => triple,
            TaskKind::SumGen => lead_sentence(article),
            TaskKind::RatGen => format!(
                "Aspects: {aspects}\nTriples: {triple}{JOINT_SPLIT}{}",
                lead_sentence(article)
            ),
        })
    }
}

/// Adapter for external trainers: records nothing, cannot decode.
///
/// The concurrent-late stage therefore skips every document; its manifest
/// has to be rebuilt once a real trainer can decode.
#[derive(Debug, Default, Clone, Copy)]
pub struct ManifestOnlyAdapter;

impl TrainerAdapter for ManifestOnlyAdapter {
    fn train(&mut self, manifest: &StageManifest) -> Result<StageMetrics> {
        Ok(StageMetrics::from([(
            "examples".to_owned(),
            manifest.examples.len() as f64,
        )]))
    }

    fn greedy_decode(&self, task: TaskKind, _input: &str) -> Result<String> {
        Err(Error::DecodeFailure(format!(
            "manifest-only adapter cannot decode {task:?}"
        )))
    }
}

/// Stages to run. Without `override_stage_order` every stage's canonical
/// predecessors must already be complete or earlier in the plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumPlan {
    pub stages: Vec<Stage>,
    pub override_stage_order: bool,
}

impl CurriculumPlan {
    pub fn full() -> Self {
        CurriculumPlan {
            stages: Stage::CANONICAL.to_vec(),
            override_stage_order: false,
        }
    }

    pub fn only(stages: &[Stage], override_stage_order: bool) -> Self {
        CurriculumPlan {
            stages: stages.to_vec(),
            override_stage_order,
        }
    }

    fn validate(&self, completed: &[Stage]) -> Result<()> {
        for w in self.stages.windows(2) {
            if w[0].position() >= w[1].position() {
                return Err(Error::StageOrderViolation(format!("{} listed before {}", w[0], w[1])));
            }
        }
        if self.override_stage_order {
            return Ok(());
        }
        for (i, stage) in self.stages.iter().enumerate() {
            for prereq in &Stage::CANONICAL[..stage.position()] {
                if !completed.contains(prereq) && !self.stages[..i].contains(prereq) {
                    return Err(Error::StageOrderViolation(format!(
                        "{stage} requires {prereq} (pass the override flag to skip)"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Trainer settings echoed into the report; the adapter applies them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerSettings {
    pub epochs: usize,
    pub early_stopping: bool,
}

impl Default for TrainerSettings {
    fn default() -> Self {
        TrainerSettings {
            epochs: 3,
            early_stopping: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub manifest_digest: String,
    pub example_count: usize,
    pub skipped: usize,
    pub metrics: StageMetrics,
}

/// Completed stages; survives an aborted run so it can be resumed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub completed: Vec<StageRecord>,
}

impl Checkpoint {
    pub fn completed_stages(&self) -> Vec<Stage> {
        self.completed.iter().map(|r| r.stage).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumReport {
    pub plan: CurriculumPlan,
    pub trainer: TrainerSettings,
    pub joint_weights: JointWeights,
    pub stages: Vec<StageRecord>,
}

fn build_stage(
    stage: Stage,
    pairs: &[GoldenPair],
    adapter: &dyn TrainerAdapter,
    weights: JointWeights,
) -> Result<StageManifest> {
    match stage {
        Stage::SingularAspect | Stage::SingularTriple | Stage::SingularSummary => {
            let [a, t, s] = build_singular_manifests(pairs)?;
            Ok(match stage {
                Stage::SingularAspect => a,
                Stage::SingularTriple => t,
                _ => s,
            })
        }
        Stage::ConcurrentEarly => build_concurrent_early_manifest(pairs),
        Stage::ConcurrentLate => build_concurrent_late_manifest(pairs, adapter),
        Stage::Joint => build_joint_manifest(pairs, weights),
    }
}

/// Builds and trains every planned stage in canonical order.
///
/// Stages already in `checkpoint` are not rerun. After each stage its
/// manifest is handed to `on_manifest` (e.g. to persist it) and the
/// checkpoint is extended, so an error part-way leaves the completed prefix
/// recorded.
pub fn run_curriculum(
    plan: &CurriculumPlan,
    pairs: &[GoldenPair],
    adapter: &mut dyn TrainerAdapter,
    trainer: &TrainerSettings,
    weights: JointWeights,
    checkpoint: &mut Checkpoint,
    mut on_manifest: impl FnMut(&StageManifest) -> Result<()>,
) -> Result<CurriculumReport> {
    plan.validate(&checkpoint.completed_stages())?;
    for &stage in &plan.stages {
        if checkpoint.completed_stages().contains(&stage) {
            continue;
        }
        let manifest = build_stage(stage, pairs, adapter, weights)?;
        on_manifest(&manifest)?;
        let metrics = adapter.train(&manifest)?;
        checkpoint.completed.push(StageRecord {
            stage,
            manifest_digest: manifest.digest(),
            example_count: manifest.examples.len(),
            skipped: manifest.skipped.len(),
            metrics,
        });
    }
    let stages = plan
        .stages
        .iter()
        .filter_map(|s| checkpoint.completed.iter().find(|r| r.stage == *s).cloned())
        .collect();
    Ok(CurriculumReport {
        plan: plan.clone(),
        trainer: trainer.clone(),
        joint_weights: weights,
        stages,
    })
}
