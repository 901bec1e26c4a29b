//! Aspect-triple rationales: data model, canonical text grammar and validator.
//!
//! The canonical text form is
//!
//! ```text
//! Aspects: rising sea levels; coastal flooding
//! Triples: [sea levels | are rising | globally]
//! [floods | threaten | coastal cities]
//! ```
//!
//! Aspects sit on one line separated by `;`. The first triple shares the
//! `Triples:` line and each further triple gets its own line. The parser is
//! more lenient than the serializer (labels are case-insensitive, aspects may
//! be given as a bulleted list, triples may be numbered) but it never repairs
//! content: anything it cannot read unambiguously is a
//! [`Error::MalformedRationale`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{whitespace_token_count, word_tokens};

const ASPECTS_LABEL: &str = "aspects:";
const TRIPLES_LABEL: &str = "triples:";
const SUMMARY_LABEL: &str = "summary:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub ground_truth_summary: String,
    pub token_count: usize,
    pub summary_token_count: usize,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        ground_truth_summary: impl Into<String>,
    ) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::EmptyField("id"));
        }
        let text = text.into();
        let ground_truth_summary = ground_truth_summary.into();
        Ok(Document {
            token_count: whitespace_token_count(&text),
            summary_token_count: whitespace_token_count(&ground_truth_summary),
            id,
            text,
            ground_truth_summary,
        })
    }
}

#[derive(Deserialize)]
struct DocumentRecord {
    id: String,
    text: String,
    ground_truth_summary: String,
    token_count: usize,
    summary_token_count: usize,
}

impl<'de> Deserialize<'de> for Document {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rec = DocumentRecord::deserialize(de)?;
        let doc = Document::new(rec.id, rec.text, rec.ground_truth_summary).map_err(D::Error::custom)?;
        if doc.token_count != rec.token_count || doc.summary_token_count != rec.summary_token_count {
            return Err(D::Error::custom(format!(
                "document {}: stored token counts disagree with text",
                doc.id
            )));
        }
        Ok(doc)
    }
}

/// A short phrase naming one topic of a document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Aspect(String);

impl Aspect {
    /// Trims the phrase and checks it can be written on the `Aspects:` line.
    pub fn new(phrase: impl AsRef<str>) -> Result<Self> {
        let phrase = phrase.as_ref().trim();
        if phrase.is_empty() {
            return Err(Error::InvalidRationale("empty aspect".into()));
        }
        if let Some(c) = phrase.chars().find(|c| matches!(c, '\n' | '\r' | ';')) {
            return Err(Error::InvalidRationale(format!("aspect {phrase:?} contains {c:?}")));
        }
        Ok(Aspect(phrase.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Aspect {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Aspect::new(s)
    }
}

impl From<Aspect> for String {
    fn from(a: Aspect) -> String {
        a.0
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `[subject | relation | object]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "TripleRecord", into = "TripleRecord")]
pub struct Triple {
    subject: String,
    relation: String,
    object: String,
}

#[derive(Serialize, Deserialize)]
struct TripleRecord {
    s: String,
    r: String,
    o: String,
}

impl TryFrom<TripleRecord> for Triple {
    type Error = Error;
    fn try_from(t: TripleRecord) -> Result<Self> {
        Triple::new(t.s, t.r, t.o)
    }
}

impl From<Triple> for TripleRecord {
    fn from(t: Triple) -> Self {
        TripleRecord {
            s: t.subject,
            r: t.relation,
            o: t.object,
        }
    }
}

fn triple_field(name: &str, value: &str) -> Result<String> {
    let value = value.trim();
    if value.is_empty() {
        return Err(Error::InvalidRationale(format!("empty triple {name}")));
    }
    if let Some(c) = value.chars().find(|c| matches!(c, '|' | '[' | ']' | '\n' | '\r')) {
        return Err(Error::InvalidRationale(format!(
            "triple {name} {value:?} contains {c:?}"
        )));
    }
    Ok(value.to_owned())
}

impl Triple {
    pub fn new(subject: impl AsRef<str>, relation: impl AsRef<str>, object: impl AsRef<str>) -> Result<Self> {
        Ok(Triple {
            subject: triple_field("subject", subject.as_ref())?,
            relation: triple_field("relation", relation.as_ref())?,
            object: triple_field("object", object.as_ref())?,
        })
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn object(&self) -> &str {
        &self.object
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} | {} | {}]", self.subject, self.relation, self.object)
    }
}

/// Ordered aspects followed by ordered triples. Both lists are nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RationaleRecord", into = "RationaleRecord")]
pub struct Rationale {
    aspects: Vec<Aspect>,
    triples: Vec<Triple>,
}

#[derive(Serialize, Deserialize)]
struct RationaleRecord {
    aspects: Vec<Aspect>,
    triples: Vec<Triple>,
}

impl TryFrom<RationaleRecord> for Rationale {
    type Error = Error;
    fn try_from(r: RationaleRecord) -> Result<Self> {
        Rationale::new(r.aspects, r.triples)
    }
}

impl From<Rationale> for RationaleRecord {
    fn from(r: Rationale) -> Self {
        RationaleRecord {
            aspects: r.aspects,
            triples: r.triples,
        }
    }
}

impl Rationale {
    pub fn new(aspects: Vec<Aspect>, triples: Vec<Triple>) -> Result<Self> {
        if aspects.is_empty() {
            return Err(Error::InvalidRationale("no aspects".into()));
        }
        if triples.is_empty() {
            return Err(Error::InvalidRationale("no triples".into()));
        }
        Ok(Rationale { aspects, triples })
    }

    pub fn aspects(&self) -> &[Aspect] {
        &self.aspects
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Aspects in their canonical single-line form, `a; b; c`.
    pub fn aspects_text(&self) -> String {
        join_aspects(&self.aspects)
    }

    /// Triples in canonical form, one per line.
    pub fn triples_text(&self) -> String {
        join_triples(&self.triples)
    }

    /// Bag-of-words text of the aspect phrases, used for topic inference.
    pub fn aspect_words(&self) -> String {
        self.aspects.iter().map(Aspect::as_str).collect::<Vec<_>>().join(" ")
    }

    /// Bag-of-words text of the aspect phrases plus every triple field.
    pub fn rationale_words(&self) -> String {
        let mut parts: Vec<&str> = self.aspects.iter().map(Aspect::as_str).collect();
        for t in &self.triples {
            parts.extend([t.subject(), t.relation(), t.object()]);
        }
        parts.join(" ")
    }
}

impl fmt::Display for Rationale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_rationale(self))
    }
}

pub(crate) fn join_aspects(aspects: &[Aspect]) -> String {
    aspects.iter().map(Aspect::as_str).collect::<Vec<_>>().join("; ")
}

pub(crate) fn join_triples(triples: &[Triple]) -> String {
    triples.iter().map(Triple::to_string).collect::<Vec<_>>().join("\n")
}

/// One probed (rationale, summary) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub index: usize,
    pub rationale: Rationale,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CandidateSetRecord", into = "CandidateSetRecord")]
pub struct CandidateSet {
    document_id: String,
    candidates: Vec<Candidate>,
}

#[derive(Serialize, Deserialize)]
struct CandidateSetRecord {
    document_id: String,
    candidates: Vec<Candidate>,
}

impl TryFrom<CandidateSetRecord> for CandidateSet {
    type Error = Error;
    fn try_from(r: CandidateSetRecord) -> Result<Self> {
        CandidateSet::new(r.document_id, r.candidates)
    }
}

impl From<CandidateSet> for CandidateSetRecord {
    fn from(c: CandidateSet) -> Self {
        CandidateSetRecord {
            document_id: c.document_id,
            candidates: c.candidates,
        }
    }
}

impl CandidateSet {
    /// Candidates must be nonempty with indices `0..n` in order.
    pub fn new(document_id: impl Into<String>, candidates: Vec<Candidate>) -> Result<Self> {
        let document_id = document_id.into();
        if candidates.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some((pos, c)) = candidates.iter().enumerate().find(|(i, c)| c.index != *i) {
            return Err(Error::InvalidRationale(format!(
                "candidate at position {pos} has index {}",
                c.index
            )));
        }
        Ok(CandidateSet {
            document_id,
            candidates,
        })
    }

    pub fn document_id(&self) -> &str {
        &self.document_id
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

pub fn serialize_rationale(r: &Rationale) -> String {
    format!("Aspects: {}\nTriples: {}", r.aspects_text(), r.triples_text())
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedRationale(msg.into())
}

fn strip_label<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    let line = line.trim_start();
    let head = line.get(..label.len())?;
    head.eq_ignore_ascii_case(label).then(|| &line[label.len()..])
}

/// Removes a leading list marker such as `-`, `*`, `•`, `1.` or `2)`.
fn strip_bullet(line: &str) -> &str {
    let line = line.trim_start();
    if let Some(rest) = line
        .strip_prefix('-')
        .or_else(|| line.strip_prefix('*'))
        .or_else(|| line.strip_prefix('•'))
    {
        return rest;
    }
    let digits = line.len() - line.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(rest) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            return rest;
        }
    }
    line
}

fn push_aspects(out: &mut Vec<Aspect>, chunk: &str) -> Result<()> {
    for piece in chunk.split(';') {
        if piece.trim().is_empty() {
            continue;
        }
        out.push(Aspect::new(piece).map_err(|e| malformed(e.to_string()))?);
    }
    Ok(())
}

fn parse_triple_block(block: &str) -> Result<Vec<Triple>> {
    let mut triples = Vec::new();
    let mut rest = block;
    loop {
        let Some(open) = rest.find(['[', ']']) else {
            check_between(rest)?;
            break;
        };
        check_between(&rest[..open])?;
        if rest[open..].starts_with(']') {
            return Err(malformed("unbalanced ']' in triples block"));
        }
        let body_start = open + 1;
        let close = rest[body_start..]
            .find(['[', ']'])
            .map(|i| i + body_start)
            .ok_or_else(|| malformed("unterminated triple"))?;
        if rest[close..].starts_with('[') {
            return Err(malformed("nested '[' inside a triple"));
        }
        let body = &rest[body_start..close];
        if body.contains('\n') {
            return Err(malformed("triple spans several lines"));
        }
        let fields: Vec<&str> = body.split('|').collect();
        if fields.len() != 3 {
            return Err(malformed(format!(
                "triple [{body}] has {} fields, expected 3",
                fields.len()
            )));
        }
        let triple = Triple::new(fields[0], fields[1], fields[2]).map_err(|e| malformed(e.to_string()))?;
        triples.push(triple);
        rest = &rest[close + 1..];
    }
    if triples.is_empty() {
        return Err(malformed("triples block is empty"));
    }
    Ok(triples)
}

/// Only list punctuation and numbering may sit between bracketed triples.
fn check_between(s: &str) -> Result<()> {
    match s
        .chars()
        .find(|c| !(c.is_whitespace() || c.is_ascii_digit() || ",;.-*•)".contains(*c)))
    {
        Some(c) => Err(malformed(format!("stray {c:?} between triples"))),
        None => Ok(()),
    }
}

/// Parses the rationale blocks and returns the rationale together with the
/// text following the triples block (if a `Summary:` label ends it).
fn parse_blocks(text: &str) -> Result<(Rationale, Option<String>)> {
    let lines: Vec<&str> = text.lines().collect();
    let aspects_at = lines
        .iter()
        .position(|l| strip_label(l, ASPECTS_LABEL).is_some())
        .ok_or_else(|| malformed("missing Aspects block"))?;
    let triples_at = lines[aspects_at + 1..]
        .iter()
        .position(|l| strip_label(l, TRIPLES_LABEL).is_some())
        .map(|i| i + aspects_at + 1)
        .ok_or_else(|| malformed("missing Triples block after Aspects"))?;

    let mut aspects = Vec::new();
    let first = strip_label(lines[aspects_at], ASPECTS_LABEL).unwrap_or_default();
    push_aspects(&mut aspects, first)?;
    for line in &lines[aspects_at + 1..triples_at] {
        push_aspects(&mut aspects, strip_bullet(line))?;
    }
    if aspects.is_empty() {
        return Err(malformed("Aspects block is empty"));
    }

    let summary_at = lines[triples_at + 1..]
        .iter()
        .position(|l| strip_label(l, SUMMARY_LABEL).is_some())
        .map(|i| i + triples_at + 1);
    let block_end = summary_at.unwrap_or(lines.len());
    let mut block = String::from(strip_label(lines[triples_at], TRIPLES_LABEL).unwrap_or_default());
    for line in &lines[triples_at + 1..block_end] {
        block.push('\n');
        block.push_str(line);
    }
    let triples = parse_triple_block(&block)?;

    let summary = summary_at.map(|at| {
        let mut s = String::from(strip_label(lines[at], SUMMARY_LABEL).unwrap_or_default());
        for line in &lines[at + 1..] {
            s.push('\n');
            s.push_str(line);
        }
        s.trim().to_owned()
    });
    let rationale = Rationale::new(aspects, triples).map_err(|e| malformed(e.to_string()))?;
    Ok((rationale, summary))
}

/// Parses an `Aspects:` block followed by a `Triples:` block.
///
/// Text before the `Aspects:` label and from a `Summary:` label onwards is
/// ignored.
pub fn parse_rationale(text: &str) -> Result<Rationale> {
    parse_blocks(text).map(|(r, _)| r)
}

/// Parses a full probe response: rationale blocks followed by a nonempty
/// `Summary:` block.
pub fn parse_probe_response(text: &str) -> Result<(Rationale, String)> {
    let (rationale, summary) = parse_blocks(text)?;
    match summary {
        Some(s) if !s.is_empty() => Ok((rationale, s)),
        Some(_) => Err(malformed("Summary block is empty")),
        None => Err(malformed("missing Summary block")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    EmptyAspects,
    EmptyTriples,
    DuplicateTriple,
    /// Neither subject nor object shares a word with the document.
    UngroundedTriple,
    /// The triple shares no word with any listed aspect.
    UnmappedTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub kind: FindingKind,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn count(&self, kind: FindingKind) -> usize {
        self.findings.iter().filter(|f| f.kind == kind).count()
    }

    fn push(&mut self, severity: Severity, kind: FindingKind, message: String) {
        self.findings.push(Finding {
            severity,
            kind,
            message,
        });
    }
}

pub fn validate_rationale(r: &Rationale, d: &Document) -> ValidationReport {
    let mut report = ValidationReport::default();
    if r.aspects.is_empty() {
        report.push(Severity::Error, FindingKind::EmptyAspects, "no aspects".into());
    }
    if r.triples.is_empty() {
        report.push(Severity::Error, FindingKind::EmptyTriples, "no triples".into());
    }

    let mut counts: BTreeMap<&Triple, usize> = BTreeMap::new();
    for t in &r.triples {
        *counts.entry(t).or_default() += 1;
    }
    // Report in first-occurrence order.
    let mut reported = HashSet::new();
    for t in &r.triples {
        let n = counts[t];
        if n > 1 && reported.insert(t) {
            report.push(
                Severity::Warning,
                FindingKind::DuplicateTriple,
                format!("{t} appears {n} times"),
            );
        }
    }

    let doc_words: HashSet<String> = word_tokens(&d.text).into_iter().collect();
    let aspect_words: HashSet<String> = word_tokens(&r.aspect_words()).into_iter().collect();
    for t in &r.triples {
        let grounded = |field: &str| word_tokens(field).iter().any(|w| doc_words.contains(w));
        if !grounded(t.subject()) && !grounded(t.object()) {
            report.push(
                Severity::Warning,
                FindingKind::UngroundedTriple,
                format!("{t} shares no word with document {}", d.id),
            );
        }
        let mapped = [t.subject(), t.relation(), t.object()]
            .iter()
            .flat_map(|f| word_tokens(f))
            .any(|w| aspect_words.contains(&w));
        if !mapped {
            report.push(
                Severity::Info,
                FindingKind::UnmappedTriple,
                format!("{t} shares no word with any aspect"),
            );
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(aspects: &[&str], triples: &[(&str, &str, &str)]) -> Rationale {
        Rationale::new(
            aspects.iter().map(|a| Aspect::new(a).unwrap()).collect(),
            triples.iter().map(|(s, r, o)| Triple::new(s, r, o).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn parses_definition_example() {
        let r = parse_rationale("Aspects: rising sea levels\nTriples: [Cats | eat | fish]").unwrap();
        assert_eq!(r, rat(&["rising sea levels"], &[("Cats", "eat", "fish")]));
    }

    #[test]
    fn two_field_triple_is_malformed() {
        let err = parse_rationale("Aspects: a\nTriples: [a | b]").unwrap_err();
        assert!(matches!(err, Error::MalformedRationale(m) if m.contains("2 fields")));
        assert!(parse_rationale("Triples: [a | b]").is_err());
    }

    #[test]
    fn canonical_form() {
        let r = rat(&["a"], &[("x", "y", "z")]);
        assert_eq!(serialize_rationale(&r), "Aspects: a\nTriples: [x | y | z]");
        let r = rat(&["a", "b c"], &[("x", "y", "z"), ("p", "q", "r")]);
        assert_eq!(
            serialize_rationale(&r),
            "Aspects: a; b c\nTriples: [x | y | z]\n[p | q | r]"
        );
        assert_eq!(parse_rationale(&serialize_rationale(&r)).unwrap(), r);
    }

    #[test]
    fn empty_rationale_rejected_by_constructor() {
        assert!(Rationale::new(vec![], vec![Triple::new("a", "b", "c").unwrap()]).is_err());
        assert!(Rationale::new(vec![Aspect::new("a").unwrap()], vec![]).is_err());
        assert!(serde_json::from_str::<Rationale>(r#"{"aspects":[],"triples":[]}"#).is_err());
    }

    #[test]
    fn lenient_llm_layout() {
        let text = "Sure, here you go.\n\
                    ASPECTS:\n- rising seas\n- storm surge; erosion\n\
                    triples:\n1. [Seas | are | rising]\n2. [Storms | cause | erosion]\n\
                    Summary: Seas rise.\nStorms erode coasts.";
        let (r, summary) = parse_probe_response(text).unwrap();
        assert_eq!(
            r,
            rat(
                &["rising seas", "storm surge", "erosion"],
                &[("Seas", "are", "rising"), ("Storms", "cause", "erosion")]
            )
        );
        assert_eq!(summary, "Seas rise.\nStorms erode coasts.");
    }

    #[test]
    fn malformed_cases() {
        for bad in [
            "",
            "Aspects: a",
            "Triples: [a | b | c]\nAspects: a",
            "Aspects: \nTriples: [a | b | c]",
            "Aspects: a\nTriples:",
            "Aspects: a\nTriples: [a | | c]",
            "Aspects: a\nTriples: [a | b | c | d]",
            "Aspects: a\nTriples: [a | b | c",
            "Aspects: a\nTriples: [a | [b] | c]",
            "Aspects: a\nTriples: a | b | c]",
            "Aspects: a\nTriples: [a | b | c] and more",
            "Aspects: a\nTriples: [a | b\n | c]",
        ] {
            assert!(
                matches!(parse_rationale(bad), Err(Error::MalformedRationale(_))),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn probe_response_needs_summary() {
        assert!(parse_probe_response("Aspects: a\nTriples: [a | b | c]").is_err());
        assert!(parse_probe_response("Aspects: a\nTriples: [a | b | c]\nSummary:   ").is_err());
    }

    #[test]
    fn fields_are_trimmed() {
        let r = parse_rationale("  Aspects:   a  ;  b \nTriples:   [  x |y|  z ]  ").unwrap();
        assert_eq!(r, rat(&["a", "b"], &[("x", "y", "z")]));
    }

    #[test]
    fn json_record_form() {
        let r = rat(&["a"], &[("x", "y", "z")]);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, r#"{"aspects":["a"],"triples":[{"s":"x","r":"y","o":"z"}]}"#);
        assert_eq!(serde_json::from_str::<Rationale>(&json).unwrap(), r);
        assert!(
            serde_json::from_str::<Rationale>(r#"{"aspects":["a"],"triples":[{"s":"x|","r":"y","o":"z"}]}"#).is_err()
        );
    }

    #[test]
    fn candidate_set_indices_contiguous() {
        let c = |i| Candidate {
            index: i,
            rationale: rat(&["a"], &[("x", "y", "z")]),
            summary: "s".into(),
        };
        assert!(CandidateSet::new("d", vec![c(0), c(1)]).is_ok());
        assert!(CandidateSet::new("d", vec![c(0), c(2)]).is_err());
        assert!(CandidateSet::new("d", vec![]).is_err());
    }

    #[test]
    fn document_token_counts() {
        let d = Document::new("d1", "one two  three", "four five").unwrap();
        assert_eq!((d.token_count, d.summary_token_count), (3, 2));
        assert!(Document::new("", "x", "y").is_err());
        let mut json: serde_json::Value = serde_json::to_value(&d).unwrap();
        assert_eq!(serde_json::from_value::<Document>(json.clone()).unwrap(), d);
        json["token_count"] = 7.into();
        assert!(serde_json::from_value::<Document>(json).is_err());
    }

    fn doc(text: &str) -> Document {
        Document::new("d", text, "summary").unwrap()
    }

    #[test]
    fn grounded_rationale_is_clean() {
        let d = doc("Sea levels are rising along the coast.");
        let r = rat(&["rising sea levels"], &[("sea levels", "are", "rising")]);
        assert!(validate_rationale(&r, &d).is_clean());
    }

    #[test]
    fn duplicate_triple_reported_once() {
        let d = doc("a b c");
        let r = rat(&["a"], &[("a", "b", "c"), ("a", "b", "c")]);
        let report = validate_rationale(&r, &d);
        assert_eq!(report.count(FindingKind::DuplicateTriple), 1);
        assert!(!report.has_errors());
    }

    #[test]
    fn ungrounded_triple_warns() {
        let d = doc("the weather was mild");
        let r = rat(&["cats"], &[("cats", "weather", "fish")]);
        let report = validate_rationale(&r, &d);
        assert_eq!(report.count(FindingKind::UngroundedTriple), 1);
        // object alone grounded is enough
        let r = rat(&["cats"], &[("cats", "like", "weather")]);
        assert_eq!(validate_rationale(&r, &d).count(FindingKind::UngroundedTriple), 0);
    }

    #[test]
    fn unmapped_triple_is_info() {
        let d = doc("dogs bark at cats");
        let r = rat(&["cats"], &[("dogs", "bark", "loudly")]);
        let report = validate_rationale(&r, &d);
        assert_eq!(report.count(FindingKind::UnmappedTriple), 1);
        assert_eq!(report.findings[0].severity, Severity::Info);
    }
}
