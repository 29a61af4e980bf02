//! File-backed payload cache.
//!
//! Entries live under `<root>/<engine version>/<key>.json`, so a new engine
//! version never sees payloads computed by an older one. Reads hit an
//! in-memory map first; inserts are serialized.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use sha2::{Digest, Sha256};

use crate::error::{EngineError, Result};

#[derive(Debug)]
pub struct PayloadCache {
    root: PathBuf,
    version: String,
    memory: RwLock<HashMap<String, Arc<Vec<u8>>>>,
    write: Mutex<()>,
}

/// Content key for a cache entry: a hash over its labeled parts.
pub fn cache_key(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    hex::encode(h.finalize())
}

impl PayloadCache {
    pub fn open(root: impl Into<PathBuf>, version: impl Into<String>) -> Result<Self> {
        let cache = PayloadCache {
            root: root.into(),
            version: version.into(),
            memory: RwLock::new(HashMap::new()),
            write: Mutex::new(()),
        };
        let dir = cache.dir();
        fs::create_dir_all(&dir).map_err(|e| EngineError::io(&dir, e))?;
        Ok(cache)
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    fn dir(&self) -> PathBuf {
        self.root.join(&self.version)
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir().join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<Arc<Vec<u8>>> {
        if let Some(hit) = self.memory.read().get(key) {
            return Some(hit.clone());
        }
        let bytes = Arc::new(fs::read(self.path(key)).ok()?);
        self.memory.write().insert(key.to_string(), bytes.clone());
        Some(bytes)
    }

    /// Stores `bytes` unless an entry already exists, and returns the
    /// stored entry, so concurrent writers agree on one body.
    pub fn insert(&self, key: &str, bytes: Vec<u8>) -> Result<Arc<Vec<u8>>> {
        let _guard = self.write.lock();
        if let Some(existing) = self.get(key) {
            return Ok(existing);
        }
        let path = self.path(key);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, &bytes).map_err(|e| EngineError::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| EngineError::io(&path, e))?;
        let bytes = Arc::new(bytes);
        self.memory.write().insert(key.to_string(), bytes.clone());
        Ok(bytes)
    }

    /// Number of entries on disk for the current version.
    pub fn len(&self) -> usize {
        fs::read_dir(self.dir())
            .map(|d| d.filter_map(|e| e.ok()).filter(|e| e.path().extension().is_some_and(|x| x == "json")).count())
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Removes every entry of every version.
    pub fn clear(&self) -> Result<usize> {
        let _guard = self.write.lock();
        let removed = count_files(&self.root);
        if self.root.exists() {
            fs::remove_dir_all(&self.root).map_err(|e| EngineError::io(&self.root, e))?;
        }
        let dir = self.dir();
        fs::create_dir_all(&dir).map_err(|e| EngineError::io(&dir, e))?;
        self.memory.write().clear();
        Ok(removed)
    }
}

fn count_files(dir: &Path) -> usize {
    let Ok(entries) = fs::read_dir(dir) else { return 0 };
    entries
        .filter_map(|e| e.ok())
        .map(|e| if e.path().is_dir() { count_files(&e.path()) } else { 1 })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_version_isolation() {
        let dir = tempfile::tempdir().unwrap();
        let key = cache_key(&["single", "abc", "m", "3"]);
        {
            let c = PayloadCache::open(dir.path(), "1.0.0").unwrap();
            assert!(c.get(&key).is_none());
            c.insert(&key, b"{}".to_vec()).unwrap();
            assert_eq!(c.get(&key).unwrap().as_slice(), b"{}");
        }
        let reopened = PayloadCache::open(dir.path(), "1.0.0").unwrap();
        assert_eq!(reopened.get(&key).unwrap().as_slice(), b"{}");
        let newer = PayloadCache::open(dir.path(), "1.0.1").unwrap();
        assert!(newer.get(&key).is_none());
    }

    #[test]
    fn first_insert_wins() {
        let dir = tempfile::tempdir().unwrap();
        let c = PayloadCache::open(dir.path(), "v").unwrap();
        c.insert("k", b"1".to_vec()).unwrap();
        assert_eq!(c.insert("k", b"2".to_vec()).unwrap().as_slice(), b"1");
    }

    #[test]
    fn clear_removes_entries() {
        let dir = tempfile::tempdir().unwrap();
        let c = PayloadCache::open(dir.path(), "v").unwrap();
        c.insert("a", b"1".to_vec()).unwrap();
        c.insert("b", b"2".to_vec()).unwrap();
        assert_eq!(c.clear().unwrap(), 2);
        assert!(c.get("a").is_none());
        assert!(c.is_empty());
    }

    #[test]
    fn keys_are_unambiguous() {
        assert_ne!(cache_key(&["ab", "c"]), cache_key(&["a", "bc"]));
    }
}
