use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rationale::{serialize_rationale, Document, Rationale};
use crate::text::sha256_hex;

const DOCUMENT: &str = "document";
const GROUND_TRUTH: &str = "ground_truth_summary";
const RATIONALE: &str = "rationale";
const PLACEHOLDERS: [&str; 3] = [DOCUMENT, GROUND_TRUTH, RATIONALE];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    RationaleProbe,
    ZeroShotSummary,
    RationaleGuidedSummary,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 3] = [
        TemplateKind::RationaleProbe,
        TemplateKind::ZeroShotSummary,
        TemplateKind::RationaleGuidedSummary,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            TemplateKind::RationaleProbe => "rationale_probe.txt",
            TemplateKind::ZeroShotSummary => "zero_shot_summary.txt",
            TemplateKind::RationaleGuidedSummary => "rationale_guided_summary.txt",
        }
    }

    fn builtin_body(self) -> &'static str {
        match self {
            TemplateKind::RationaleProbe => include_str!("../../templates/rationale_probe.txt"),
            TemplateKind::ZeroShotSummary => include_str!("../../templates/zero_shot_summary.txt"),
            TemplateKind::RationaleGuidedSummary => {
                include_str!("../../templates/rationale_guided_summary.txt")
            }
        }
    }

    /// Placeholders that must appear exactly once.
    fn required(self) -> &'static [&'static str] {
        match self {
            TemplateKind::RationaleProbe => &[DOCUMENT, GROUND_TRUTH],
            TemplateKind::ZeroShotSummary => &[DOCUMENT],
            TemplateKind::RationaleGuidedSummary => &[DOCUMENT, RATIONALE],
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TemplateKind::RationaleProbe => "rationale_probe",
            TemplateKind::ZeroShotSummary => "zero_shot_summary",
            TemplateKind::RationaleGuidedSummary => "rationale_guided_summary",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    kind: TemplateKind,
    body: String,
}

/// Counts `{name}` occurrences for every known placeholder name.
fn placeholder_counts(body: &str) -> [usize; 3] {
    let mut counts = [0; 3];
    for (i, name) in PLACEHOLDERS.iter().enumerate() {
        counts[i] = body.matches(&format!("{{{name}}}")).count();
    }
    counts
}

impl PromptTemplate {
    pub fn new(kind: TemplateKind, body: impl Into<String>) -> Result<Self> {
        let body = body.into();
        let counts = placeholder_counts(&body);
        for (name, count) in PLACEHOLDERS.iter().zip(counts) {
            let expected = usize::from(kind.required().contains(name));
            if count != expected {
                return Err(Error::Config(format!(
                    "template {kind}: placeholder {{{name}}} appears {count} times, expected {expected}"
                )));
            }
        }
        Ok(PromptTemplate { kind, body })
    }

    pub fn builtin(kind: TemplateKind) -> Self {
        PromptTemplate::new(kind, kind.builtin_body()).expect("bundled templates are valid")
    }

    pub fn kind(&self) -> TemplateKind {
        self.kind
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    /// Hex digest of the template body; cache keys include it so that editing
    /// a template invalidates previously cached responses.
    pub fn hash(&self) -> String {
        sha256_hex(format!("{}\0{}", self.kind, self.body))[..16].to_owned()
    }

    /// Single left-to-right pass, so substituted values are never rescanned.
    fn render(&self, values: &[(&str, &str)]) -> String {
        let mut out = String::with_capacity(self.body.len() + values.iter().map(|v| v.1.len()).sum::<usize>());
        let mut rest = self.body.as_str();
        'scan: while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let tail = &rest[open..];
            for (name, value) in values {
                let key_len = name.len() + 2;
                if tail.len() >= key_len && tail[1..].starts_with(name) && tail[1 + name.len()..].starts_with('}') {
                    out.push_str(value);
                    rest = &tail[key_len..];
                    continue 'scan;
                }
            }
            out.push('{');
            rest = &tail[1..];
        }
        out.push_str(rest);
        out
    }
}

/// The three prompt templates used by the pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub probe: PromptTemplate,
    pub zero_shot: PromptTemplate,
    pub guided: PromptTemplate,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet::builtin()
    }
}

impl PromptSet {
    pub fn builtin() -> Self {
        PromptSet {
            probe: PromptTemplate::builtin(TemplateKind::RationaleProbe),
            zero_shot: PromptTemplate::builtin(TemplateKind::ZeroShotSummary),
            guided: PromptTemplate::builtin(TemplateKind::RationaleGuidedSummary),
        }
    }

    /// Bundled templates, overridden by any `<kind>.txt` file found in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut set = PromptSet::builtin();
        for kind in TemplateKind::ALL {
            let path = dir.join(kind.file_name());
            if !path.exists() {
                continue;
            }
            let body = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let template = PromptTemplate::new(kind, body)?;
            match kind {
                TemplateKind::RationaleProbe => set.probe = template,
                TemplateKind::ZeroShotSummary => set.zero_shot = template,
                TemplateKind::RationaleGuidedSummary => set.guided = template,
            }
        }
        Ok(set)
    }

    pub fn render_probe(&self, d: &Document) -> Result<String> {
        if d.text.is_empty() {
            return Err(Error::EmptyField("document text"));
        }
        if d.ground_truth_summary.is_empty() {
            return Err(Error::EmptyField("ground truth summary"));
        }
        Ok(self
            .probe
            .render(&[(DOCUMENT, &d.text), (GROUND_TRUTH, &d.ground_truth_summary)]))
    }

    pub fn render_zero_shot(&self, d: &Document) -> Result<String> {
        if d.text.is_empty() {
            return Err(Error::EmptyField("document text"));
        }
        Ok(self.zero_shot.render(&[(DOCUMENT, &d.text)]))
    }

    pub fn render_guided(&self, d: &Document, r: &Rationale) -> Result<String> {
        if d.text.is_empty() {
            return Err(Error::EmptyField("document text"));
        }
        Ok(self
            .guided
            .render(&[(DOCUMENT, &d.text), (RATIONALE, &serialize_rationale(r))]))
    }
}

pub fn render_probe_prompt(d: &Document) -> Result<String> {
    PromptSet::builtin().render_probe(d)
}

pub fn render_zero_shot_prompt(d: &Document) -> Result<String> {
    PromptSet::builtin().render_zero_shot(d)
}

pub fn render_rationale_guided_prompt(d: &Document, r: &Rationale) -> Result<String> {
    PromptSet::builtin().render_guided(d, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rationale::{Aspect, Triple};

    fn doc() -> Document {
        Document::new("d1", "T", "S").unwrap()
    }

    fn rationale() -> Rationale {
        Rationale::new(
            vec![Aspect::new("a").unwrap()],
            vec![Triple::new("x", "y", "z").unwrap(), Triple::new("p", "q", "r").unwrap()],
        )
        .unwrap()
    }

    fn leftover_placeholders(s: &str) -> usize {
        placeholder_counts(s).iter().sum()
    }

    #[test]
    fn probe_prompt_substitutes_both_fields() {
        let d = Document::new("d1", "The document body.", "The reference.").unwrap();
        let p = render_probe_prompt(&d).unwrap();
        assert!(p.contains("The document body."));
        assert!(p.contains("The reference."));
        assert!(p.contains("Aspects:") && p.contains("Triples:") && p.contains("Summary:"));
        assert!(p.contains("Step 1") && p.contains("Step 2") && p.contains("Step 3"));
        assert_eq!(leftover_placeholders(&p), 0);
        assert_eq!(p, render_probe_prompt(&d).unwrap());
    }

    #[test]
    fn empty_fields_rejected() {
        let empty_text = Document::new("d", "", "S").unwrap();
        let empty_sum = Document::new("d", "T", "").unwrap();
        assert!(matches!(render_probe_prompt(&empty_text), Err(Error::EmptyField(_))));
        assert!(matches!(render_probe_prompt(&empty_sum), Err(Error::EmptyField(_))));
        assert!(matches!(
            render_zero_shot_prompt(&empty_text),
            Err(Error::EmptyField(_))
        ));
        assert!(render_zero_shot_prompt(&empty_sum).is_ok());
    }

    #[test]
    fn zero_shot_does_not_leak_reference() {
        let d = Document::new("d", "alpha beta gamma", "a unique reference sentence").unwrap();
        let p = render_zero_shot_prompt(&d).unwrap();
        assert!(p.contains("alpha beta gamma"));
        assert!(!p.contains(&d.ground_truth_summary));
        assert_eq!(leftover_placeholders(&p), 0);
        assert_eq!(p, render_zero_shot_prompt(&d).unwrap());
    }

    #[test]
    fn guided_prompt_embeds_every_triple() {
        let p = render_rationale_guided_prompt(&doc(), &rationale()).unwrap();
        assert!(p.contains("[x | y | z]") && p.contains("[p | q | r]"));
        assert!(p.contains(&serialize_rationale(&rationale())));
        assert_eq!(p, render_rationale_guided_prompt(&doc(), &rationale()).unwrap());
    }

    #[test]
    fn guided_differs_from_zero_shot_by_one_inserted_block() {
        let zero = render_zero_shot_prompt(&doc()).unwrap();
        let guided = render_rationale_guided_prompt(&doc(), &rationale()).unwrap();
        // common prefix / suffix diff: the remainder must be a single insertion
        let prefix = zero.bytes().zip(guided.bytes()).take_while(|(a, b)| a == b).count();
        let suffix = zero[prefix..]
            .bytes()
            .rev()
            .zip(guided[prefix..].bytes().rev())
            .take_while(|(a, b)| a == b)
            .count();
        assert_eq!(prefix + suffix, zero.len());
        let inserted = &guided[prefix..guided.len() - suffix];
        assert!(inserted.contains(&serialize_rationale(&rationale())));
        assert!(!inserted.contains("Document:"));
    }

    #[test]
    fn template_validation() {
        assert!(PromptTemplate::new(TemplateKind::ZeroShotSummary, "{document}").is_ok());
        assert!(PromptTemplate::new(TemplateKind::ZeroShotSummary, "no placeholder").is_err());
        assert!(PromptTemplate::new(TemplateKind::ZeroShotSummary, "{document} {ground_truth_summary}").is_err());
        assert!(PromptTemplate::new(
            TemplateKind::RationaleProbe,
            "{document} {document} {ground_truth_summary}"
        )
        .is_err());
    }

    #[test]
    fn substituted_values_are_not_rescanned() {
        let t = PromptTemplate::new(TemplateKind::ZeroShotSummary, "<{document}>{").unwrap();
        assert_eq!(t.render(&[(DOCUMENT, "{document}")]), "<{document}>{");
    }

    #[test]
    fn hash_changes_with_body() {
        let a = PromptTemplate::new(TemplateKind::ZeroShotSummary, "A {document}").unwrap();
        let b = PromptTemplate::new(TemplateKind::ZeroShotSummary, "B {document}").unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), a.clone().hash());
    }

    #[test]
    fn load_dir_overrides() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("zero_shot_summary.txt"), "Short: {document}").unwrap();
        let set = PromptSet::load_dir(dir.path()).unwrap();
        assert_eq!(set.render_zero_shot(&doc()).unwrap(), "Short: T");
        assert_eq!(set.probe, PromptTemplate::builtin(TemplateKind::RationaleProbe));
    }
}
