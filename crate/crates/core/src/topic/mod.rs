//! Corpus topic model and topic-distribution divergence.

mod lda;
mod vocab;

use serde::{Deserialize, Serialize};

pub use lda::{train_lda, GibbsSampler, LdaInferencer, LdaModel, LdaParams};
pub use vocab::{build_vocabulary, is_stopword, StopwordList, Vocabulary, VocabularyConfig};

use crate::error::{Error, Result};

/// Strictly positive probability vector summing to one (within 1e-9).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TopicDistribution(Vec<f64>);

impl TopicDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidHyperparameter(format!(
                "topic probability {p} is not strictly positive"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidHyperparameter(format!(
                "topic probabilities sum to {sum}"
            )));
        }
        Ok(TopicDistribution(probs))
    }

    /// Normalizes positive weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        TopicDistribution::new(weights.iter().map(|w| w / sum).collect())
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform distribution over zero topics");
        TopicDistribution(vec![1.0 / k as f64; k])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.0.iter().enumerate() {
            if *p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

impl TryFrom<Vec<f64>> for TopicDistribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        TopicDistribution::new(v)
    }
}

impl From<TopicDistribution> for Vec<f64> {
    fn from(t: TopicDistribution) -> Self {
        t.0
    }
}

/// Anything that maps a text onto a topic distribution.
pub trait TopicInferencer: Sync {
    fn infer(&self, text: &str) -> Result<TopicDistribution>;
}

/// `KL(p ‖ q) = Σ p_i ln(p_i / q_i)`, natural log.
pub fn kl_divergence(p: &TopicDistribution, q: &TopicDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let kl: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum();
    // rounding can leave a tiny negative value for near-identical inputs
    Ok(kl.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> TopicDistribution {
        TopicDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn kl_hand_example() {
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[0.9, 0.1]);
        // 0.5·ln(0.5/0.9) + 0.5·ln(5) = 0.5108256237659907
        let expected = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * 5f64.ln();
        assert!((kl_divergence(&p, &q).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.5108).abs() < 1e-4);
    }

    #[test]
    fn kl_identity_and_mismatch() {
        let p = dist(&[0.2, 0.3, 0.5]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert!(matches!(
            kl_divergence(&p, &dist(&[0.5, 0.5])),
            Err(Error::DimensionMismatch { left: 3, right: 2 })
        ));
    }

    #[test]
    fn distribution_validation() {
        assert!(TopicDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(TopicDistribution::new(vec![1.0, 0.0]).is_err());
        assert!(TopicDistribution::new(vec![0.6, 0.6]).is_err());
        assert!(TopicDistribution::new(vec![]).is_err());
        assert!(serde_json::from_str::<TopicDistribution>("[0.25,0.75]").is_ok());
        assert!(serde_json::from_str::<TopicDistribution>("[0.25,0.5]").is_err());
        assert_eq!(dist(&[0.1, 0.7, 0.2]).argmax(), 1);
    }
}
