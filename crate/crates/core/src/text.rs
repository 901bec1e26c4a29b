//! Tokenizers shared across the pipeline.
//!
//! Two tokenizers exist and they are used for different jobs:
//!
//! * [`whitespace_token_count`] counts whitespace-separated tokens. It backs
//!   the document length limits applied at ingestion.
//! * [`word_tokens`] lowercases and splits on runs of non-alphanumeric
//!   characters. It backs ROUGE, the LDA vocabulary and the grounding check
//!   of the rationale validator.

use sha2::{Digest, Sha256};

pub fn whitespace_token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Lowercased alphanumeric runs, in order of appearance.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// Stable 64-bit hash used to derive RNG seeds from strings.
pub(crate) fn stable_hash64(parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_counts() {
        assert_eq!(whitespace_token_count(""), 0);
        assert_eq!(whitespace_token_count("  a  b\tc\n"), 3);
        assert_eq!(whitespace_token_count("don't stop"), 2);
    }

    #[test]
    fn word_tokens_lowercase_and_split() {
        assert_eq!(word_tokens("The cat's HAT, 42!"), vec!["the", "cat", "s", "hat", "42"]);
        assert!(word_tokens("...  ---").is_empty());
    }

    #[test]
    fn stable_hash_separates_parts() {
        assert_ne!(stable_hash64(&[b"ab", b"c"]), stable_hash64(&[b"a", b"bc"]));
    }
}
