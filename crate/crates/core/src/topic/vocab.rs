use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rationale::Document;
use crate::text::word_tokens;

const ENGLISH_STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "also",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "s",
    "said",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "t",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

pub fn is_stopword(word: &str) -> bool {
    ENGLISH_STOPWORDS.binary_search(&word).is_ok()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopwordList {
    #[default]
    English,
    None,
}

impl StopwordList {
    fn contains(self, word: &str) -> bool {
        match self {
            StopwordList::English => is_stopword(word),
            StopwordList::None => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyConfig {
    pub stopwords: StopwordList,
    pub min_df: usize,
}

impl Default for VocabularyConfig {
    fn default() -> Self {
        VocabularyConfig {
            stopwords: StopwordList::English,
            min_df: 1,
        }
    }
}

/// Lexicographically ordered, lowercase, unique terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRecord", into = "VocabularyRecord")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    config: VocabularyConfig,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRecord {
    terms: Vec<String>,
    stopwords: StopwordList,
    min_df: usize,
}

impl TryFrom<VocabularyRecord> for Vocabulary {
    type Error = Error;
    fn try_from(r: VocabularyRecord) -> Result<Self> {
        Vocabulary::from_terms(
            r.terms,
            VocabularyConfig {
                stopwords: r.stopwords,
                min_df: r.min_df,
            },
        )
    }
}

impl From<Vocabulary> for VocabularyRecord {
    fn from(v: Vocabulary) -> Self {
        VocabularyRecord {
            terms: v.terms,
            stopwords: v.config.stopwords,
            min_df: v.config.min_df,
        }
    }
}

impl Vocabulary {
    pub fn from_terms(terms: Vec<String>, config: VocabularyConfig) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, term) in terms.iter().enumerate() {
            if term.is_empty() || term.to_lowercase() != *term {
                return Err(Error::Config(format!("vocabulary term {term:?} is not lowercase")));
            }
            if index.insert(term.clone(), i as u32).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary term {term:?}")));
            }
        }
        Ok(Vocabulary { terms, index, config })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn config(&self) -> VocabularyConfig {
        self.config
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    /// In-vocabulary token ids of `text`, in order.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        word_tokens(text).iter().filter_map(|w| self.id(w)).collect()
    }
}

pub fn build_vocabulary(corpus: &[Document], cfg: VocabularyConfig) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus {
        let unique: HashSet<String> = word_tokens(&doc.text)
            .into_iter()
            .filter(|w| !cfg.stopwords.contains(w))
            .collect();
        for w in unique {
            *df.entry(w).or_default() += 1;
        }
    }
    let terms: Vec<String> = df
        .into_iter()
        .filter(|(_, n)| *n >= cfg.min_df)
        .map(|(w, _)| w)
        .collect();
    Vocabulary::from_terms(terms, cfg)
}
