//! Content-addressed response cache.
//!
//! Every backend request is keyed by a digest of `(kind, model, body)` where
//! the body is serialized as canonical JSON (compact, keys sorted —
//! `serde_json::Value` objects are `BTreeMap`s, so plain serialization is
//! already canonical). The cache stores the raw response bytes, so a warm
//! run replays byte-identical payloads without touching the network.
//!
//! Layout: `<root>/<kind>/<digest>.json`. Writes go through a temp file and
//! a rename so a crash never leaves a half-written entry behind.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Compact JSON with sorted object keys, suitable for digesting.
pub fn canonical_json(value: &serde_json::Value) -> String {
    value.to_string()
}

/// Cache key for one backend call. `kind` is the short request-family tag
/// (`chat`, `score`, `classify`, `embed`) so different endpoints can never
/// collide even if their bodies happen to match.
pub fn cache_key(kind: &str, model: &str, body: &serde_json::Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(kind.as_bytes());
    hasher.update([0x1f]);
    hasher.update(model.as_bytes());
    hasher.update([0x1f]);
    hasher.update(canonical_json(body).as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug)]
pub struct DiskCache {
    root: PathBuf,
}

impl DiskCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DiskCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_path(&self, kind: &str, key: &str) -> PathBuf {
        self.root.join(kind).join(format!("{key}.json"))
    }

    pub fn get(&self, kind: &str, key: &str) -> io::Result<Option<Vec<u8>>> {
        match fs::read(self.entry_path(kind, key)) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn put(&self, kind: &str, key: &str, bytes: &[u8]) -> io::Result<()> {
        let path = self.entry_path(kind, key);
        let dir = path.parent().expect("cache entry has a parent directory");
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(".tmp-{key}"));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_depends_on_kind_model_and_body() {
        let body = serde_json::json!({"a": 1});
        let base = cache_key("chat", "m", &body);
        assert_eq!(base.len(), 64);
        assert_ne!(base, cache_key("score", "m", &body));
        assert_ne!(base, cache_key("chat", "other", &body));
        assert_ne!(base, cache_key("chat", "m", &serde_json::json!({"a": 2})));
        assert_eq!(base, cache_key("chat", "m", &serde_json::json!({"a": 1})));
    }

    #[test]
    fn canonical_json_sorts_keys() {
        let v: serde_json::Value = serde_json::from_str(r#"{"b":1,"a":{"z":2,"y":3}}"#).unwrap();
        assert_eq!(canonical_json(&v), r#"{"a":{"y":3,"z":2},"b":1}"#);
    }

    #[test]
    fn round_trips_and_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        assert_eq!(cache.get("chat", "k1").unwrap(), None);
        cache.put("chat", "k1", b"payload").unwrap();
        assert_eq!(cache.get("chat", "k1").unwrap().as_deref(), Some(&b"payload"[..]));
        // Same key under a different kind is a separate entry.
        assert_eq!(cache.get("score", "k1").unwrap(), None);
        // No stray temp files.
        let leftovers: Vec<_> = fs::read_dir(dir.path().join("chat"))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n.starts_with(".tmp-"))
            .collect();
        assert!(leftovers.is_empty());
    }
}
