//! On-disk response cache.
//!
//! Layout: `<root>/<document_id>/<template_hash>/<sample_index>.txt`, the
//! response stored verbatim. Embeddings live under
//! `<root>/_embeddings/<provider_hash>/<text_hash>.json`. Writes go through a
//! temporary file and an atomic rename, so concurrent writers of one key never
//! leave a torn file behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::text::sha256_hex;

/// Maps an arbitrary id onto a single safe path component.
///
/// Plain ids (`[A-Za-z0-9_.-]`, not starting with `.`, `_`, `x-` or `h-`) are used
/// as-is; anything else is hex-encoded, or hashed when long.
pub fn path_component(id: &str) -> String {
    let plain = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && !id.starts_with('_')
        && !id.starts_with("x-")
        && !id.starts_with("h-")
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'));
    if plain {
        id.to_owned()
    } else if id.len() <= 60 {
        format!("x-{}", hex::encode(id))
    } else {
        format!("h-{}", sha256_hex(id))
    }
}

/// Atomically replaces `path` with `contents`.
pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub document_id: String,
    pub template_hash: String,
    pub sample_index: usize,
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    root: PathBuf,
}

impl ResponseCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ResponseCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.root
            .join(path_component(&key.document_id))
            .join(path_component(&key.template_hash))
            .join(format!("{}.txt", key.sample_index))
    }

    pub fn lookup(&self, key: &CacheKey) -> Result<Option<String>> {
        let path = self.path_for(key);
        match std::fs::read_to_string(&path) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn store(&self, key: &CacheKey, response: &str) -> Result<()> {
        write_atomic(&self.path_for(key), response.as_bytes())
    }

    pub fn invalidate(&self, key: &CacheKey) -> Result<()> {
        let path = self.path_for(key);
        match std::fs::remove_file(&path) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    fn embedding_path(&self, provider: &str, text: &str) -> PathBuf {
        self.root
            .join("_embeddings")
            .join(&sha256_hex(provider)[..16])
            .join(format!("{}.json", sha256_hex(text)))
    }

    pub fn lookup_embedding(&self, provider: &str, text: &str) -> Result<Option<Vec<f64>>> {
        let path = self.embedding_path(provider, text);
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn store_embedding(&self, provider: &str, text: &str, v: &[f64]) -> Result<()> {
        write_atomic(&self.embedding_path(provider, text), &serde_json::to_vec(v)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::template::{PromptTemplate, TemplateKind};

    fn key(doc: &str, hash: &str, i: usize) -> CacheKey {
        CacheKey {
            document_id: doc.into(),
            template_hash: hash.into(),
            sample_index: i,
        }
    }

    #[test]
    fn store_then_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path());
        let k = key("doc-1", "abc", 3);
        assert_eq!(cache.lookup(&k).unwrap(), None);
        cache.store(&k, "Aspects: a\r\n  verbatim  ").unwrap();
        assert_eq!(cache.lookup(&k).unwrap().as_deref(), Some("Aspects: a\r\n  verbatim  "));
        assert_eq!(cache.path_for(&k), dir.path().join("doc-1/abc/3.txt"));
        cache.invalidate(&k).unwrap();
        assert_eq!(cache.lookup(&k).unwrap(), None);
    }

    #[test]
    fn template_edit_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path());
        let a = PromptTemplate::new(TemplateKind::ZeroShotSummary, "A {document}").unwrap();
        let b = PromptTemplate::new(TemplateKind::ZeroShotSummary, "B {document}").unwrap();
        cache.store(&key("d", &a.hash(), 0), "resp").unwrap();
        assert!(cache.lookup(&key("d", &a.hash(), 0)).unwrap().is_some());
        assert!(cache.lookup(&key("d", &b.hash(), 0)).unwrap().is_none());
    }

    #[test]
    fn unsafe_ids_are_encoded() {
        assert_eq!(path_component("abc_1.2-x"), "abc_1.2-x");
        assert_eq!(path_component("a/b"), "x-612f62");
        assert_eq!(path_component(".."), "x-2e2e");
        assert_eq!(path_component("x-612f62"), "x-782d363132663632");
        assert!(path_component(&"z".repeat(200)).starts_with("h-"));
        assert_ne!(path_component("a/b"), path_component("a\\b"));
    }

    #[test]
    fn embeddings_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path());
        let v = vec![0.1, -1.0 / 3.0, 1e-300, 12345.678];
        assert_eq!(cache.lookup_embedding("p", "t").unwrap(), None);
        cache.store_embedding("p", "t", &v).unwrap();
        assert_eq!(cache.lookup_embedding("p", "t").unwrap(), Some(v));
        assert_eq!(cache.lookup_embedding("q", "t").unwrap(), None);
    }
}
