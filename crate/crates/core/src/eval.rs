//! ROUGE-1, ROUGE-2 and ROUGE-L F1 against reference summaries.
//!
//! Tokens are lowercase alphanumeric runs. N-gram overlap is clipped by the
//! reference count; ROUGE-L uses the longest common subsequence over the
//! whole token sequence. An empty candidate or reference scores zero.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::word_tokens;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_counts(overlap: usize, candidate_len: usize, reference_len: usize) -> Self {
        if overlap == 0 || candidate_len == 0 || reference_len == 0 {
            return RougeScore::default();
        }
        let precision = overlap as f64 / candidate_len as f64;
        let recall = overlap as f64 / reference_len as f64;
        RougeScore {
            precision,
            recall,
            f1: 2.0 * precision * recall / (precision + recall),
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

fn rouge_n_tokens(candidate: &[String], reference: &[String], n: usize) -> RougeScore {
    let c = ngram_counts(candidate, n);
    let r = ngram_counts(reference, n);
    let overlap: usize = c.iter().map(|(g, k)| (*k).min(r.get(g).copied().unwrap_or(0))).sum();
    RougeScore::from_counts(overlap, c.values().sum(), r.values().sum())
}

pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> RougeScore {
    rouge_n_tokens(&word_tokens(candidate), &word_tokens(reference), n)
}

pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn rouge_l_tokens(candidate: &[String], reference: &[String]) -> RougeScore {
    RougeScore::from_counts(lcs_length(candidate, reference), candidate.len(), reference.len())
}

pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    rouge_l_tokens(&word_tokens(candidate), &word_tokens(reference))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeTriple {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore,
}

pub fn rouge_all(candidate: &str, reference: &str) -> RougeTriple {
    let c = word_tokens(candidate);
    let r = word_tokens(reference);
    RougeTriple {
        rouge1: rouge_n_tokens(&c, &r, 1),
        rouge2: rouge_n_tokens(&c, &r, 2),
        rouge_l: rouge_l_tokens(&c, &r),
    }
}

/// Extra per-document metric merged into the report under its own name.
pub trait ExternalMetric: Sync {
    fn name(&self) -> &str;
    fn score(&self, candidate: &str, reference: &str) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub document_id: String,
    pub candidate: String,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub document_id: String,
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

/// Per-document F1 rows and their arithmetic means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    pub count: usize,
    pub rows: Vec<EvalRow>,
    pub mean: BTreeMap<String, f64>,
}

pub fn evaluate_corpus(system: &str, pairs: &[EvalPair], external: &[&dyn ExternalMetric]) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut rows = Vec::with_capacity(pairs.len());
    for p in pairs {
        let r = rouge_all(&p.candidate, &p.reference);
        let mut extra = BTreeMap::new();
        for m in external {
            extra.insert(m.name().to_owned(), m.score(&p.candidate, &p.reference)?);
        }
        rows.push(EvalRow {
            document_id: p.document_id.clone(),
            rouge1: r.rouge1.f1,
            rouge2: r.rouge2.f1,
            rouge_l: r.rouge_l.f1,
            extra,
        });
    }
    let n = rows.len() as f64;
    let mut mean = BTreeMap::new();
    mean.insert("rouge1".to_owned(), rows.iter().map(|r| r.rouge1).sum::<f64>() / n);
    mean.insert("rouge2".to_owned(), rows.iter().map(|r| r.rouge2).sum::<f64>() / n);
    mean.insert("rougeL".to_owned(), rows.iter().map(|r| r.rouge_l).sum::<f64>() / n);
    for m in external {
        let total: f64 = rows.iter().map(|r| r.extra[m.name()]).sum();
        mean.insert(m.name().to_owned(), total / n);
    }
    Ok(EvalReport {
        system: system.to_owned(),
        count: rows.len(),
        rows,
        mean,
    })
}

impl EvalReport {
    /// Merges externally computed per-document scores (`document id → metric
    /// → value`). Every row must be covered; means are recomputed.
    pub fn merge_external(&mut self, scores: &BTreeMap<String, BTreeMap<String, f64>>) -> Result<()> {
        let mut names: Vec<String> = Vec::new();
        for row in &mut self.rows {
            let metrics = scores
                .get(&row.document_id)
                .ok_or_else(|| Error::Config(format!("external scores lack document {}", row.document_id)))?;
            for (name, v) in metrics {
                if matches!(name.as_str(), "rouge1" | "rouge2" | "rougeL") || !v.is_finite() {
                    return Err(Error::Config(format!("external metric {name} = {v} rejected")));
                }
                row.extra.insert(name.clone(), *v);
                if !names.contains(name) {
                    names.push(name.clone());
                }
            }
        }
        let n = self.rows.len() as f64;
        for name in names {
            let mut total = 0.0;
            for row in &self.rows {
                total +=
                    row.extra.get(&name).copied().ok_or_else(|| {
                        Error::Config(format!("external metric {name} missing for {}", row.document_id))
                    })?;
            }
            self.mean.insert(name, total / n);
        }
        Ok(())
    }

    /// Aligned plain-text table, scores scaled to percentages.
    pub fn to_table(&self) -> String {
        let extra: Vec<&String> = self
            .mean
            .keys()
            .filter(|k| !matches!(k.as_str(), "rouge1" | "rouge2" | "rougeL"))
            .collect();
        let id_width = self
            .rows
            .iter()
            .map(|r| r.document_id.len())
            .chain([8])
            .max()
            .unwrap_or(8);
        let mut out = String::new();
        let _ = write!(
            out,
            "{:<id_width$}  {:>8}  {:>8}  {:>8}",
            "document", "ROUGE-1", "ROUGE-2", "ROUGE-L"
        );
        for e in &extra {
            let _ = write!(out, "  {:>8}", e);
        }
        out.push('\n');
        let line = |out: &mut String, id: &str, vals: &[f64]| {
            let _ = write!(out, "{id:<id_width$}");
            for v in vals {
                let _ = write!(out, "  {:>8.2}", v * 100.0);
            }
            out.push('\n');
        };
        for r in &self.rows {
            let mut vals = vec![r.rouge1, r.rouge2, r.rouge_l];
            vals.extend(extra.iter().map(|e| r.extra[e.as_str()]));
            line(&mut out, &r.document_id, &vals);
        }
        let mut vals = vec![self.mean["rouge1"], self.mean["rouge2"], self.mean["rougeL"]];
        vals.extend(extra.iter().map(|e| self.mean[e.as_str()]));
        line(&mut out, "mean", &vals);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_texts_score_one() {
        let t = rouge_all("The cat sat on the mat.", "the cat sat on the mat");
        assert_eq!(t.rouge1.f1, 1.0);
        assert_eq!(t.rouge2.f1, 1.0);
        assert_eq!(t.rouge_l.f1, 1.0);
    }

    #[test]
    fn empty_scores_zero() {
        assert_eq!(rouge_all("", "a b"), RougeTriple::default());
        assert_eq!(rouge_all("a b", "  "), RougeTriple::default());
        assert_eq!(rouge_n("a", "a", 2), RougeScore::default());
    }

    #[test]
    fn clipped_counts() {
        // candidate "the the the", reference "the cat": overlap 1
        let s = rouge_n("the the the", "the cat", 1);
        assert!((s.precision - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.recall - 0.5).abs() < 1e-15);
        assert!((s.f1 - 0.4).abs() < 1e-15);
    }

    #[test]
    fn lcs_is_subsequence_not_substring() {
        assert_eq!(lcs_length(&[1, 2, 3, 4, 5], &[1, 3, 5]), 3);
        assert_eq!(lcs_length::<u8>(&[], &[1]), 0);
        let l = rouge_l("a x b y c", "a b c");
        assert!((l.recall - 1.0).abs() < 1e-15);
        assert!((l.precision - 0.6).abs() < 1e-15);
    }

    struct Len;
    impl ExternalMetric for Len {
        fn name(&self) -> &str {
            "cand_len"
        }
        fn score(&self, c: &str, _: &str) -> Result<f64> {
            Ok(word_tokens(c).len() as f64)
        }
    }

    #[test]
    fn corpus_means_and_table() {
        let pairs = vec![
            EvalPair {
                document_id: "a".into(),
                candidate: "x y".into(),
                reference: "x y".into(),
            },
            EvalPair {
                document_id: "b".into(),
                candidate: "p".into(),
                reference: "q".into(),
            },
        ];
        let r = evaluate_corpus("sys", &pairs, &[&Len]).unwrap();
        assert_eq!(r.mean["rouge1"], 0.5);
        assert_eq!(r.mean["cand_len"], 1.5);
        let table = r.to_table();
        assert!(table.contains("cand_len"));
        assert!(table.lines().last().unwrap().starts_with("mean"));
        assert!(table.contains("50.00"));
        assert!(matches!(evaluate_corpus("s", &[], &[]), Err(Error::EmptyInput)));
        assert_eq!(r.count, 2);
    }

    #[test]
    fn merge_external_scores() {
        let pairs = vec![EvalPair {
            document_id: "a".into(),
            candidate: "x".into(),
            reference: "x".into(),
        }];
        let mut r = evaluate_corpus("sys", &pairs, &[]).unwrap();
        let mut scores = BTreeMap::new();
        scores.insert("a".to_string(), BTreeMap::from([("bertscore".to_string(), 0.9)]));
        r.merge_external(&scores).unwrap();
        assert_eq!(r.mean["bertscore"], 0.9);
        assert!(r.merge_external(&BTreeMap::new()).is_err());
    }
}
