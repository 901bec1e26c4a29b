//! Seeded synthetic corpora for examples, tests and benchmarks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};
use serde::Serialize;

use crate::rationale::Document;

/// Three disjoint 20-word topics.
pub const PLANTED_TOPICS: [[&str; 20]; 3] = [
    [
        "forest",
        "river",
        "mountain",
        "valley",
        "meadow",
        "glacier",
        "canyon",
        "lake",
        "pine",
        "oak",
        "fern",
        "moss",
        "waterfall",
        "cliff",
        "trail",
        "summit",
        "creek",
        "boulder",
        "wildflower",
        "marsh",
    ],
    [
        "market",
        "stock",
        "bond",
        "dividend",
        "investor",
        "portfolio",
        "equity",
        "revenue",
        "profit",
        "inflation",
        "currency",
        "banker",
        "loan",
        "interest",
        "asset",
        "merger",
        "shareholder",
        "audit",
        "budget",
        "pension",
    ],
    [
        "striker",
        "goalkeeper",
        "referee",
        "stadium",
        "league",
        "tournament",
        "coach",
        "penalty",
        "midfielder",
        "defender",
        "trophy",
        "season",
        "fixture",
        "derby",
        "champion",
        "captain",
        "kickoff",
        "halftime",
        "playoff",
        "transfer",
    ],
];

/// Documents whose words are drawn from [`PLANTED_TOPICS`] with per-document
/// mixtures `θ ~ Dirichlet(0.5, 0.5, 0.5)`, about 60 tokens each.
pub fn planted_topic_corpus(n_docs: usize, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirichlet = Dirichlet::new([0.5f64; 3]).expect("valid concentration");
    (0..n_docs)
        .map(|i| {
            let theta: [f64; 3] = dirichlet.sample(&mut rng);
            let len = rng.random_range(50..=70);
            let words: Vec<&str> = (0..len)
                .map(|_| {
                    let u: f64 = rng.random();
                    let topic = if u < theta[0] {
                        0
                    } else if u < theta[0] + theta[1] {
                        1
                    } else {
                        2
                    };
                    *PLANTED_TOPICS[topic].choose(&mut rng).expect("nonempty topic")
                })
                .collect();
            Document::new(format!("planted-{i:04}"), words.join(" "), "unused").expect("nonempty id")
        })
        .collect()
}

struct Theme {
    subjects: &'static [&'static str],
    verbs: &'static [&'static str],
    objects: &'static [&'static str],
    places: &'static [&'static str],
}

const THEMES: [Theme; 4] = [
    Theme {
        subjects: &["council", "mayor", "planning board", "transit agency", "residents"],
        verbs: &["approved", "debated", "funded", "delayed", "opposed"],
        objects: &[
            "bridge repairs",
            "bus routes",
            "housing plan",
            "park renovation",
            "tax levy",
        ],
        places: &["Riverton", "Oakdale", "the harbor district", "the old town"],
    },
    Theme {
        subjects: &["researchers", "hospital", "clinic", "health ministry", "nurses"],
        verbs: &["reported", "tested", "launched", "expanded", "reviewed"],
        objects: &[
            "vaccine trial",
            "screening program",
            "treatment protocol",
            "patient study",
            "drug dosage",
        ],
        places: &["Northfield", "the regional hospital", "Lakeside", "the medical campus"],
    },
    Theme {
        subjects: &["company", "startup", "regulators", "investors", "chief executive"],
        verbs: &["announced", "acquired", "cut", "raised", "forecast"],
        objects: &[
            "quarterly earnings",
            "factory jobs",
            "battery plant",
            "share price",
            "export deal",
        ],
        places: &["Westport", "the capital", "the industrial park", "overseas markets"],
    },
    Theme {
        subjects: &["team", "coach", "striker", "league officials", "fans"],
        verbs: &["won", "lost", "celebrated", "protested", "secured"],
        objects: &[
            "cup final",
            "home match",
            "title race",
            "penalty shootout",
            "new contract",
        ],
        places: &["Eastbridge", "the national stadium", "the training ground", "Southgate"],
    },
];

/// One record of a JSON Lines input corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusRecord {
    pub id: String,
    pub document: String,
    pub summary: String,
    pub split: String,
}

/// News-like documents built from sentence templates over four themes. The
/// reference summary restates the lead event and one follow-up.
///
/// Every fifth record belongs to the `test` split, the rest to `train`.
pub fn summarization_corpus(n_docs: usize, seed: u64) -> Vec<CorpusRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_docs)
        .map(|i| {
            let theme = &THEMES[rng.random_range(0..THEMES.len())];
            let n_sentences = rng.random_range(5..=9);
            let mut events = Vec::with_capacity(n_sentences);
            for _ in 0..n_sentences {
                events.push((
                    *theme.subjects.choose(&mut rng).expect("nonempty"),
                    *theme.verbs.choose(&mut rng).expect("nonempty"),
                    *theme.objects.choose(&mut rng).expect("nonempty"),
                    *theme.places.choose(&mut rng).expect("nonempty"),
                ));
            }
            let sentences: Vec<String> = events
                .iter()
                .map(|(s, v, o, p)| format!("The {s} {v} the {o} in {p}."))
                .collect();
            let (s0, v0, o0, p0) = events[0];
            let (s1, v1, o1, _) = events[1];
            let summary = format!("In {p0}, the {s0} {v0} the {o0}, and the {s1} {v1} the {o1}.");
            CorpusRecord {
                id: format!("doc-{i:04}"),
                document: sentences.join(" "),
                summary,
                split: if i % 5 == 4 { "test" } else { "train" }.into(),
            }
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}
