//! On-disk workspace and the pipeline stages that run against it.
//!
//! Layout under the workspace root:
//!
//! ```text
//! workspace.lock               held by the single writer
//! ledger.jsonl                 one entry per stage invocation
//! configs/<digest>.json        every configuration a stage ran with
//! corpus/documents.jsonl       ingested documents
//! corpus/ingest_report.json
//! cache/                       provider responses and embeddings
//! candidates/<doc>.json        probed candidate sets
//! lda/model.json
//! selections/<doc>.json        scored candidates and the golden rationale
//! manifests/NN_<stage>.jsonl   training manifests, plus .header.json sidecars
//! adapter/mock_adapter.json    mock trainer state
//! eval/report.json, eval/report.txt
//! reports/<stage>.json
//! ```
//!
//! Artifacts are rewritten only when their bytes change. A stage whose inputs,
//! configuration slice and outputs all match its last successful ledger entry
//! is skipped.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Limits, PipelineConfig};
use crate::curriculum::{
    find_reserved_token, joint_input, run_curriculum, split_joint_target, Checkpoint, CurriculumPlan, CurriculumReport,
    GoldenPair, ManifestHeader, ManifestOnlyAdapter, MockAdapter, StageManifest, TaskKind, TrainerAdapter,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_corpus, EvalPair, EvalReport};
use crate::probe::{
    path_component, probe_cache_hash, write_atomic, Discarded, LlmClient, ProbeConfig, Prober, PromptSet, ResponseCache,
};
use crate::rationale::{CandidateSet, Document};
use crate::select::{select_golden, Embedder, SelectionRecord};
use crate::text::sha256_hex;
use crate::topic::{build_vocabulary, train_lda, LdaInferencer, LdaModel};

pub const LOCK_FILE: &str = "workspace.lock";
pub const LEDGER_FILE: &str = "ledger.jsonl";
const CORPUS_FILE: &str = "corpus/documents.jsonl";
const EMBEDDINGS_DIR: &str = "_embeddings";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub split: String,
    pub document: Document,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    DocTooLong,
    SummaryTooLong,
    ReservedToken,
    EmptyField,
}

impl ExclusionReason {
    pub fn name(self) -> &'static str {
        match self {
            ExclusionReason::DocTooLong => "doc_too_long",
            ExclusionReason::SummaryTooLong => "summary_too_long",
            ExclusionReason::ReservedToken => "reserved_token",
            ExclusionReason::EmptyField => "empty_field",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedRecord {
    pub line: usize,
    pub id: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub input_records: usize,
    pub ingested: usize,
    pub excluded: BTreeMap<String, usize>,
    pub excluded_records: Vec<ExcludedRecord>,
    pub splits: BTreeMap<String, usize>,
    pub limits: Limits,
}

fn field<'v>(obj: &'v serde_json::Map<String, Value>, name: &str, line: usize) -> Result<&'v str> {
    obj.get(name)
        .ok_or_else(|| Error::Schema {
            line,
            message: format!("missing field {name:?}"),
        })?
        .as_str()
        .ok_or_else(|| Error::Schema {
            line,
            message: format!("field {name:?} must be a string"),
        })
}

/// Parses JSON Lines records `{id, document, summary, split?}` and applies the
/// token limits. A record is excluded for the first failing check, in the
/// order: empty field, reserved token, document length, summary length.
/// Lengths are whitespace token counts. Line numbers are 1-based.
pub fn parse_corpus(text: &str, limits: Limits) -> Result<(Vec<CorpusEntry>, IngestReport)> {
    let mut entries = Vec::new();
    let mut excluded_records = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut input_records = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        input_records += 1;
        let value: Value = serde_json::from_str(raw).map_err(|e| Error::Schema {
            line,
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| Error::Schema {
            line,
            message: "record must be a JSON object".into(),
        })?;
        let id = field(obj, "id", line)?.trim().to_owned();
        let document = field(obj, "document", line)?.trim();
        let summary = field(obj, "summary", line)?.trim();
        let split = match obj.get("split") {
            None | Some(Value::Null) => "train".to_owned(),
            Some(_) => field(obj, "split", line)?.trim().to_owned(),
        };
        if id.is_empty() {
            return Err(Error::Schema {
                line,
                message: "empty id".into(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { id, line });
        }
        let doc = Document::new(id.clone(), document, summary)?;
        let reason = if document.is_empty() || summary.is_empty() {
            Some(ExclusionReason::EmptyField)
        } else if find_reserved_token(document).is_some() || find_reserved_token(summary).is_some() {
            Some(ExclusionReason::ReservedToken)
        } else if doc.token_count > limits.max_doc_tokens {
            Some(ExclusionReason::DocTooLong)
        } else if doc.summary_token_count > limits.max_summary_tokens {
            Some(ExclusionReason::SummaryTooLong)
        } else {
            None
        };
        match reason {
            Some(reason) => excluded_records.push(ExcludedRecord { line, id, reason }),
            None => entries.push(CorpusEntry { split, document: doc }),
        }
    }
    if input_records == 0 {
        return Err(Error::Schema {
            line: 0,
            message: "input holds no records".into(),
        });
    }
    let mut excluded = BTreeMap::new();
    for r in &excluded_records {
        *excluded.entry(r.reason.name().to_owned()).or_insert(0) += 1;
    }
    let mut splits = BTreeMap::new();
    for e in &entries {
        *splits.entry(e.split.clone()).or_insert(0) += 1;
    }
    let report = IngestReport {
        input_records,
        ingested: entries.len(),
        excluded,
        excluded_records,
        splits,
        limits,
    };
    Ok((entries, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Completed,
    UpToDate,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub seq: u64,
    pub stage: String,
    pub status: StageStatus,
    pub input_digest: String,
    pub config_digest: String,
    pub output_digest: String,
    #[serde(default)]
    pub detail: Value,
}

/// Exclusive handle on a workspace directory.
///
/// Holding a `Workspace` holds `workspace.lock`; a second writer gets
/// [`Error::WorkspaceLocked`]. The lock is removed on drop.
#[derive(Debug)]
pub struct Workspace {
    root: PathBuf,
    lock: PathBuf,
}

impl Workspace {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let lock = root.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => return Err(Error::WorkspaceLocked(lock)),
            Err(e) => return Err(Error::io(&lock, e)),
        }
        Ok(Workspace { root, lock })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn ledger(&self) -> Result<Vec<LedgerEntry>> {
        let path = self.path(LEDGER_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&path, e)),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Error::from))
            .collect()
    }

    fn append_ledger(&self, mut entry: LedgerEntry) -> Result<LedgerEntry> {
        entry.seq = self.ledger()?.last().map_or(1, |e| e.seq + 1);
        let path = self.path(LEDGER_FILE);
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let line = serde_json::to_string(&entry)?;
        writeln!(f, "{line}").map_err(|e| Error::io(&path, e))?;
        Ok(entry)
    }

    fn last_success(&self, stage: &str) -> Result<Option<LedgerEntry>> {
        Ok(self
            .ledger()?
            .into_iter()
            .rev()
            .find(|e| e.stage == stage && e.status != StageStatus::Failed))
    }

    /// Writes `bytes` unless the file already holds exactly them.
    pub fn write_if_changed(&self, rel: &str, bytes: &[u8]) -> Result<bool> {
        let path = self.path(rel);
        if fs::read(&path).ok().as_deref() == Some(bytes) {
            return Ok(false);
        }
        write_atomic(&path, bytes)?;
        Ok(true)
    }

    fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<bool> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_if_changed(rel, text.as_bytes())
    }

    fn read_json<T: for<'de> Deserialize<'de>>(&self, rel: &str) -> Result<T> {
        let path = self.path(rel);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Deletes `.json` files in `dir` whose stem is not in `keep`.
    fn prune_dir(&self, dir: &str, keep: &HashSet<String>) -> Result<()> {
        let path = self.path(dir);
        let Ok(entries) = fs::read_dir(&path) else {
            return Ok(());
        };
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&path, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(stem) = name.strip_suffix(".json") {
                if !keep.contains(stem) {
                    fs::remove_file(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
                }
            }
        }
        Ok(())
    }

    fn remove_dir(&self, rel: &str) -> Result<()> {
        let path = self.path(rel);
        match fs::remove_dir_all(&path) {
            Err(e) if e.kind() != ErrorKind::NotFound => Err(Error::io(&path, e)),
            _ => Ok(()),
        }
    }

    /// Content digest of files and directory trees, by relative path.
    /// Embedding caches and temporary files are ignored.
    pub fn digest_paths(&self, rels: &[&str]) -> Result<String> {
        let mut lines = Vec::new();
        for rel in rels {
            let path = self.path(rel);
            if !path.exists() {
                lines.push(format!("{rel}\tmissing"));
                continue;
            }
            collect_file_digests(&self.root, &path, &mut lines)?;
        }
        lines.sort();
        Ok(sha256_hex(lines.join("\n")))
    }

    /// Documents from the ingested corpus, in input order.
    pub fn corpus(&self) -> Result<Vec<CorpusEntry>> {
        let path = self.path(CORPUS_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Err(Error::MissingPrerequisite("corpus".into())),
            Err(e) => return Err(Error::io(&path, e)),
        };
        text.lines()
            .map(|l| serde_json::from_str(l).map_err(Error::from))
            .collect()
    }

    pub fn selection(&self, document_id: &str) -> Result<SelectionRecord> {
        self.read_json(&format!("selections/{}.json", path_component(document_id)))
    }

    pub fn manifest(&self, stage: crate::curriculum::Stage) -> Result<StageManifest> {
        let stem = stage.file_stem();
        let header: ManifestHeader = self.read_json(&format!("manifests/{stem}.header.json"))?;
        let path = self.path(&format!("manifests/{stem}.jsonl"));
        let body = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        StageManifest::from_jsonl(&header, &body)
    }

    pub fn lda_model(&self) -> Result<LdaModel> {
        self.read_json("lda/model.json")
    }

    pub fn eval_report(&self) -> Result<EvalReport> {
        self.read_json("eval/report.json")
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

fn collect_file_digests(root: &Path, path: &Path, out: &mut Vec<String>) -> Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    if name == EMBEDDINGS_DIR || name.starts_with(".tmp") {
        return Ok(());
    }
    if path.is_dir() {
        for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
            let entry = entry.map_err(|e| Error::io(path, e))?;
            collect_file_digests(root, &entry.path(), out)?;
        }
    } else {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let rel = path
            .strip_prefix(root)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/");
        out.push(format!("{rel}\t{}", sha256_hex(bytes)));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterKind {
    /// [`MockAdapter`], persisted under `adapter/`.
    Mock,
    /// [`ManifestOnlyAdapter`]: manifests for an external trainer.
    ManifestOnly,
}

impl std::str::FromStr for AdapterKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mock" => Ok(AdapterKind::Mock),
            "manifest-only" => Ok(AdapterKind::ManifestOnly),
            other => Err(Error::Config(format!(
                "unknown adapter {other:?} (expected mock or manifest-only)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalOptions {
    /// JSON Lines `{id, summary}` used instead of decoding with the adapter.
    pub predictions: Option<PathBuf>,
    /// JSON `{document_id: {metric: value}}` merged into the report.
    pub external_scores: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageOutcome {
    pub stage: &'static str,
    pub status: StageStatus,
    pub detail: Value,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CandidateRecord {
    document_id: String,
    model_id: String,
    template_hash: String,
    candidates: CandidateSet,
    discarded: Vec<Discarded>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoredCheckpoint {
    input_digest: String,
    checkpoint: Checkpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Failure {
    document_id: String,
    reason: String,
}

/// Runs pipeline stages against a workspace.
pub struct Pipeline<'a> {
    ws: &'a Workspace,
    cfg: &'a PipelineConfig,
    client: &'a dyn LlmClient,
    prompts: PromptSet,
    adapter: AdapterKind,
    pool: rayon::ThreadPool,
}

impl<'a> Pipeline<'a> {
    /// `jobs` bounds the worker pool used by probing, selection and
    /// evaluation; zero means one worker per core.
    pub fn new(ws: &'a Workspace, cfg: &'a PipelineConfig, client: &'a dyn LlmClient, jobs: usize) -> Result<Self> {
        cfg.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(Pipeline {
            ws,
            cfg,
            client,
            prompts: PromptSet::builtin(),
            adapter: AdapterKind::Mock,
            pool,
        })
    }

    pub fn with_prompts(mut self, prompts: PromptSet) -> Self {
        self.prompts = prompts;
        self
    }

    pub fn with_adapter(mut self, adapter: AdapterKind) -> Self {
        self.adapter = adapter;
        self
    }

    fn run_stage(
        &self,
        stage: &'static str,
        input_digest: String,
        outputs: &[&str],
        body: impl FnOnce(&mut Vec<String>) -> Result<Value>,
    ) -> Result<StageOutcome> {
        let config_digest = self.cfg.stage_digest(stage);
        self.ws
            .write_json(&format!("configs/{}.json", &self.cfg.digest()[..16]), self.cfg)?;
        let mut warnings = Vec::new();
        if let Some(last) = self.ws.last_success(stage)? {
            if last.input_digest == input_digest && last.output_digest == self.ws.digest_paths(outputs)? {
                if last.config_digest == config_digest {
                    let entry = self.ws.append_ledger(LedgerEntry {
                        seq: 0,
                        stage: stage.into(),
                        status: StageStatus::UpToDate,
                        input_digest,
                        config_digest,
                        output_digest: last.output_digest,
                        detail: Value::Null,
                    })?;
                    log::info!("{stage}: up to date");
                    return Ok(StageOutcome {
                        stage,
                        status: entry.status,
                        detail: json!({ "previous_run": last.seq, "previous": last.detail }),
                        warnings,
                    });
                }
                let w = format!("{stage}: configuration changed since the last run; rerunning");
                log::warn!("{w}");
                warnings.push(w);
            }
        }
        match body(&mut warnings) {
            Ok(detail) => {
                let output_digest = self.ws.digest_paths(outputs)?;
                self.ws.append_ledger(LedgerEntry {
                    seq: 0,
                    stage: stage.into(),
                    status: StageStatus::Completed,
                    input_digest,
                    config_digest,
                    output_digest,
                    detail: detail.clone(),
                })?;
                log::info!("{stage}: completed");
                Ok(StageOutcome {
                    stage,
                    status: StageStatus::Completed,
                    detail,
                    warnings,
                })
            }
            Err(e) => {
                self.ws.append_ledger(LedgerEntry {
                    seq: 0,
                    stage: stage.into(),
                    status: StageStatus::Failed,
                    input_digest,
                    config_digest,
                    output_digest: String::new(),
                    detail: json!({ "error": e.to_string() }),
                })?;
                Err(e)
            }
        }
    }

    fn split_documents(&self, corpus: &[CorpusEntry], split: &str) -> Vec<Document> {
        corpus
            .iter()
            .filter(|e| e.split == split)
            .map(|e| e.document.clone())
            .collect()
    }

    fn train_documents(&self) -> Result<Vec<Document>> {
        let docs = self.split_documents(&self.ws.corpus()?, &self.cfg.train_split);
        if docs.is_empty() {
            return Err(Error::MissingPrerequisite(format!(
                "documents in split {:?}",
                self.cfg.train_split
            )));
        }
        Ok(docs)
    }

    pub fn ingest(&self, input: &Path) -> Result<StageOutcome> {
        let bytes = fs::read(input).map_err(|e| Error::io(input, e))?;
        let outputs = ["corpus"];
        self.run_stage("ingest", sha256_hex(&bytes), &outputs, |_| {
            let text = String::from_utf8(bytes).map_err(|e| Error::Schema {
                line: 0,
                message: format!("input is not UTF-8: {e}"),
            })?;
            let (entries, report) = parse_corpus(&text, self.cfg.limits)?;
            let mut body = String::new();
            for e in &entries {
                body.push_str(&serde_json::to_string(e)?);
                body.push('\n');
            }
            self.ws.write_if_changed(CORPUS_FILE, body.as_bytes())?;
            self.ws.write_json("corpus/ingest_report.json", &report)?;
            Ok(json!({
                "input_records": report.input_records,
                "ingested": report.ingested,
                "excluded": report.excluded,
            }))
        })
    }

    fn probe_outputs(&self) -> [&'static str; 3] {
        ["candidates", "cache", "reports/probe.json"]
    }

    pub fn probe(&self) -> Result<StageOutcome> {
        let input = format!(
            "{}\n{}\n{}",
            self.ws.digest_paths(&["corpus"])?,
            self.client.model_id(),
            self.prompts.probe.hash()
        );
        let outputs = self.probe_outputs();
        self.run_stage("probe", sha256_hex(input), &outputs, |_| {
            let docs = self.train_documents()?;
            let cache = ResponseCache::new(self.ws.path("cache"));
            let prober = Prober::new(self.client, &self.prompts).with_cache(&cache);
            let pcfg = ProbeConfig {
                n_samples: self.cfg.probe.n_samples,
                model_id: self.client.model_id().to_owned(),
                max_retries: self.cfg.probe.max_retries,
                seed: self.cfg.seed,
            };
            let template_hash = probe_cache_hash(&self.prompts.probe, self.client.model_id());
            let results: Vec<_> = self
                .pool
                .install(|| docs.par_iter().map(|d| prober.probe(d, &pcfg)).collect());
            let mut keep = HashSet::new();
            let mut failures = Vec::new();
            let (mut calls, mut discarded) = (0, 0);
            for (d, result) in docs.iter().zip(results) {
                match result {
                    Ok(outcome) => {
                        calls += outcome.provider_calls;
                        discarded += outcome.discarded.len();
                        let stem = path_component(&d.id);
                        self.ws.write_json(
                            &format!("candidates/{stem}.json"),
                            &CandidateRecord {
                                document_id: d.id.clone(),
                                model_id: pcfg.model_id.clone(),
                                template_hash: template_hash.clone(),
                                candidates: outcome.candidates,
                                discarded: outcome.discarded,
                            },
                        )?;
                        keep.insert(stem);
                    }
                    Err(e) => failures.push(Failure {
                        document_id: d.id.clone(),
                        reason: e.to_string(),
                    }),
                }
            }
            self.ws.prune_dir("candidates", &keep)?;
            self.ws.write_json(
                "reports/probe.json",
                &json!({ "documents": docs.len(), "probed": keep.len(), "failed": failures }),
            )?;
            if keep.is_empty() {
                return Err(Error::StageFailed {
                    stage: "probe",
                    reason: format!("all {} documents failed; first: {}", docs.len(), failures[0].reason),
                });
            }
            Ok(json!({
                "documents": docs.len(),
                "probed": keep.len(),
                "failed": failures.len(),
                "discarded_responses": discarded,
                "provider_calls": calls,
            }))
        })
    }

    fn require_dir(&self, rel: &str, what: &str) -> Result<()> {
        let has_json = fs::read_dir(self.ws.path(rel))
            .map(|rd| {
                rd.filter_map(|e| e.ok())
                    .any(|e| e.file_name().to_string_lossy().ends_with(".json"))
            })
            .unwrap_or(false);
        if has_json {
            Ok(())
        } else {
            Err(Error::MissingPrerequisite(what.into()))
        }
    }

    pub fn select(&self) -> Result<StageOutcome> {
        self.require_dir("candidates", "candidates")?;
        let input = format!(
            "{}\n{}\n{}",
            self.ws.digest_paths(&["corpus"])?,
            self.ws.digest_paths(&["candidates"])?,
            self.client.model_id()
        );
        let outputs = ["lda", "selections", "reports/select.json"];
        self.run_stage("select", sha256_hex(input), &outputs, |_| {
            let docs = self.train_documents()?;
            let vocab = build_vocabulary(&docs, self.cfg.vocabulary_config())?;
            let model = train_lda(&docs, vocab, self.cfg.lda_params())?;
            self.ws
                .write_if_changed("lda/model.json", serde_json::to_string(&model)?.as_bytes())?;
            let inferencer = LdaInferencer {
                model: &model,
                iterations: self.cfg.lda.infer_iterations,
                seed: self.cfg.seed,
            };
            let cache = ResponseCache::new(self.ws.path("cache"));
            let embedder = Embedder::new(self.client).with_cache(&cache);

            let mut work = Vec::new();
            let mut without = Vec::new();
            for d in &docs {
                let rel = format!("candidates/{}.json", path_component(&d.id));
                if self.ws.path(&rel).exists() {
                    let record: CandidateRecord = self.ws.read_json(&rel)?;
                    work.push((d, record.candidates));
                } else {
                    without.push(d.id.clone());
                }
            }
            let sel = &self.cfg.selection;
            let results: Vec<_> = self.pool.install(|| {
                work.par_iter()
                    .map(|(d, cs)| select_golden(cs, d, &inferencer, &embedder, sel))
                    .collect()
            });
            let mut keep = HashSet::new();
            let mut failures = Vec::new();
            for ((d, _), result) in work.iter().zip(results) {
                match result {
                    Ok(r) => {
                        let stem = path_component(&d.id);
                        self.ws
                            .write_json(&format!("selections/{stem}.json"), &r.to_record(sel))?;
                        keep.insert(stem);
                    }
                    Err(e) => failures.push(Failure {
                        document_id: d.id.clone(),
                        reason: e.to_string(),
                    }),
                }
            }
            self.ws.prune_dir("selections", &keep)?;
            self.ws.write_json(
                "reports/select.json",
                &json!({
                    "selected": keep.len(),
                    "failed": failures,
                    "without_candidates": without,
                    "vocabulary_size": model.vocabulary().len(),
                    "topics": model.k(),
                }),
            )?;
            if keep.is_empty() {
                return Err(Error::StageFailed {
                    stage: "select",
                    reason: format!("no golden rationale selected for {} documents", work.len()),
                });
            }
            Ok(json!({ "selected": keep.len(), "failed": failures.len(), "without_candidates": without.len() }))
        })
    }

    fn golden_pairs(&self) -> Result<Vec<GoldenPair>> {
        self.require_dir("selections", "selections")?;
        let mut pairs = Vec::new();
        for d in self.train_documents()? {
            let rel = format!("selections/{}.json", path_component(&d.id));
            if self.ws.path(&rel).exists() {
                let record: SelectionRecord = self.ws.read_json(&rel)?;
                let rationale = record.rationale()?;
                pairs.push(GoldenPair::new(d, rationale));
            }
        }
        if pairs.is_empty() {
            return Err(Error::MissingPrerequisite("selections".into()));
        }
        Ok(pairs)
    }

    pub fn curriculum(&self, plan: &CurriculumPlan) -> Result<StageOutcome> {
        self.require_dir("selections", "selections")?;
        let input = sha256_hex(format!(
            "{}\n{}\n{}\n{}",
            self.ws.digest_paths(&["corpus"])?,
            self.ws.digest_paths(&["selections"])?,
            serde_json::to_string(plan)?,
            serde_json::to_string(&self.adapter)?,
        ));
        let outputs = ["manifests", "adapter"];
        let input_for_body = input.clone();
        self.run_stage("curriculum", input, &outputs, |_| {
            let pairs = self.golden_pairs()?;
            let stored: Option<StoredCheckpoint> = self.ws.read_json("manifests/checkpoint.json").ok();
            let resuming = !self.ws.path("manifests/report.json").exists()
                && stored.as_ref().is_some_and(|s| s.input_digest == input_for_body);
            let mut checkpoint = if resuming {
                stored.map(|s| s.checkpoint).unwrap_or_default()
            } else {
                self.ws.remove_dir("manifests")?;
                self.ws.remove_dir("adapter")?;
                Checkpoint::default()
            };
            let mut mock = if resuming && self.adapter == AdapterKind::Mock {
                self.ws.read_json("adapter/mock_adapter.json").unwrap_or_default()
            } else {
                MockAdapter::new()
            };
            let mut manifest_only = ManifestOnlyAdapter;
            let adapter: &mut dyn TrainerAdapter = match self.adapter {
                AdapterKind::Mock => &mut mock,
                AdapterKind::ManifestOnly => &mut manifest_only,
            };
            let result = run_curriculum(
                plan,
                &pairs,
                adapter,
                &self.cfg.trainer,
                self.cfg.joint,
                &mut checkpoint,
                |m| {
                    let stem = m.stage.file_stem();
                    self.ws
                        .write_if_changed(&format!("manifests/{stem}.jsonl"), m.to_jsonl().as_bytes())?;
                    self.ws
                        .write_json(&format!("manifests/{stem}.header.json"), &m.header())?;
                    Ok(())
                },
            );
            self.ws.write_json(
                "manifests/checkpoint.json",
                &StoredCheckpoint {
                    input_digest: input_for_body.clone(),
                    checkpoint,
                },
            )?;
            if self.adapter == AdapterKind::Mock {
                self.ws.write_json("adapter/mock_adapter.json", &mock)?;
            }
            let report: CurriculumReport = result?;
            self.ws.write_json("manifests/report.json", &report)?;
            Ok(json!({
                "documents": pairs.len(),
                "stages": report.stages.iter().map(|s| json!({
                    "stage": s.stage, "examples": s.example_count, "skipped": s.skipped,
                })).collect::<Vec<_>>(),
            }))
        })
    }

    pub fn eval(&self, opts: &EvalOptions) -> Result<StageOutcome> {
        let file_digest = |p: &Option<PathBuf>| -> Result<String> {
            match p {
                Some(p) => Ok(sha256_hex(fs::read(p).map_err(|e| Error::io(p, e))?)),
                None => Ok("-".into()),
            }
        };
        let source = if opts.predictions.is_some() {
            "predictions"
        } else {
            if !self.ws.path("adapter/mock_adapter.json").exists() {
                return Err(Error::MissingPrerequisite("adapter".into()));
            }
            "adapter"
        };
        let input = sha256_hex(format!(
            "{}\n{}\n{}\n{}",
            self.ws.digest_paths(&["corpus"])?,
            self.ws.digest_paths(&["adapter"])?,
            file_digest(&opts.predictions)?,
            file_digest(&opts.external_scores)?,
        ));
        self.run_stage("eval", input, &["eval"], |warnings| {
            let corpus = self.ws.corpus()?;
            let mut split = self.cfg.eval_split.clone();
            let mut docs = self.split_documents(&corpus, &split);
            if docs.is_empty() {
                let w = format!(
                    "eval: split {split:?} is empty; evaluating split {:?}",
                    self.cfg.train_split
                );
                log::warn!("{w}");
                warnings.push(w);
                split = self.cfg.train_split.clone();
                docs = self.split_documents(&corpus, &split);
            }
            if docs.is_empty() {
                return Err(Error::MissingPrerequisite(format!("documents in split {split:?}")));
            }
            let pairs = match &opts.predictions {
                Some(path) => prediction_pairs(path, &docs)?,
                None => {
                    let adapter: MockAdapter = self.ws.read_json("adapter/mock_adapter.json")?;
                    let decoded: Vec<Result<String>> = self.pool.install(|| {
                        docs.par_iter()
                            .map(|d| adapter.greedy_decode(TaskKind::RatGen, &joint_input(d)))
                            .collect()
                    });
                    docs.iter()
                        .zip(decoded)
                        .map(|(d, out)| {
                            let out = out?;
                            let summary = split_joint_target(&out).map(|(_, s)| s).unwrap_or(out);
                            Ok(EvalPair {
                                document_id: d.id.clone(),
                                candidate: summary,
                                reference: d.ground_truth_summary.clone(),
                            })
                        })
                        .collect::<Result<Vec<_>>>()?
                }
            };
            let mut report = evaluate_corpus(source, &pairs, &[])?;
            if let Some(path) = &opts.external_scores {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                report.merge_external(&serde_json::from_str(&text)?)?;
            }
            self.ws.write_json("eval/report.json", &report)?;
            self.ws
                .write_if_changed("eval/report.txt", report.to_table().as_bytes())?;
            Ok(json!({ "split": split, "count": report.count, "mean": report.mean }))
        })
    }

    /// Every stage in order; stops at the first failure.
    pub fn run_all(&self, input: &Path, plan: &CurriculumPlan, opts: &EvalOptions) -> Result<Vec<StageOutcome>> {
        Ok(vec![
            self.ingest(input)?,
            self.probe()?,
            self.select()?,
            self.curriculum(plan)?,
            self.eval(opts)?,
        ])
    }
}

#[derive(Deserialize)]
struct Prediction {
    id: String,
    summary: String,
}

fn prediction_pairs(path: &Path, docs: &[Document]) -> Result<Vec<EvalPair>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut by_id: HashMap<String, String> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(line).map_err(|e| Error::Schema {
            line: i + 1,
            message: e.to_string(),
        })?;
        if by_id.insert(p.id.clone(), p.summary).is_some() {
            return Err(Error::DuplicateId { id: p.id, line: i + 1 });
        }
    }
    docs.iter()
        .map(|d| {
            let candidate = by_id
                .remove(&d.id)
                .ok_or_else(|| Error::MissingPrerequisite(format!("prediction for {}", d.id)))?;
            Ok(EvalPair {
                document_id: d.id.clone(),
                candidate,
                reference: d.ground_truth_summary.clone(),
            })
        })
        .collect()
}
