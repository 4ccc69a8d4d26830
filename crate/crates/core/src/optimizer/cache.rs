use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::backend::{EncodeBackend, EncodeRequest, EncodeResult};
use crate::error::{Error, Result};

/// Multipliers are keyed at 1e-6 resolution.
const K_SCALE: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey {
    pub clip: String,
    pub settings: String,
    pub metric: String,
    pub qp: u8,
    pub k1_micro: i64,
    pub k2_micro: i64,
}

impl CacheKey {
    pub fn of(req: &EncodeRequest<'_>) -> Self {
        CacheKey {
            clip: req.clip.id.clone(),
            settings: req.settings.name.clone(),
            metric: req.metric_id.to_string(),
            qp: req.qp,
            k1_micro: (req.ks.k1 * K_SCALE).round() as i64,
            k2_micro: (req.ks.k2 * K_SCALE).round() as i64,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    key: CacheKey,
    result: EncodeResult,
}

/// Thread-safe encode memo, optionally persisted as JSON.
#[derive(Debug, Default)]
pub struct EncodeCache {
    entries: Mutex<HashMap<CacheKey, EncodeResult>>,
}

impl EncodeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &CacheKey) -> Option<EncodeResult> {
        self.entries.lock().unwrap().get(key).cloned()
    }

    pub fn insert(&self, key: CacheKey, result: EncodeResult) {
        self.entries.lock().unwrap().insert(key, result);
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Loads a saved cache; a missing file gives an empty cache.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(e) => return Err(Error::io(path, e)),
        };
        let entries: Vec<CacheEntry> = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))?;
        Ok(EncodeCache {
            entries: Mutex::new(entries.into_iter().map(|e| (e.key, e.result)).collect()),
        })
    }

    /// Writes entries sorted by key so the file is reproducible.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut entries: Vec<CacheEntry> = self
            .entries
            .lock()
            .unwrap()
            .iter()
            .map(|(k, v)| CacheEntry {
                key: k.clone(),
                result: v.clone(),
            })
            .collect();
        entries.sort_by(|a, b| a.key.cmp(&b.key));
        let text = serde_json::to_string(&entries).expect("cache serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Backend wrapper that consults the cache and counts real encodes.
pub struct Memoized<'a> {
    inner: &'a dyn EncodeBackend,
    cache: &'a EncodeCache,
    misses: AtomicUsize,
}

impl<'a> Memoized<'a> {
    pub fn new(inner: &'a dyn EncodeBackend, cache: &'a EncodeCache) -> Self {
        Memoized {
            inner,
            cache,
            misses: AtomicUsize::new(0),
        }
    }

    pub fn encodes(&self) -> usize {
        self.misses.load(Ordering::SeqCst)
    }
}

impl EncodeBackend for Memoized<'_> {
    fn encode(&self, req: &EncodeRequest<'_>) -> Result<EncodeResult> {
        let key = CacheKey::of(req);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        self.misses.fetch_add(1, Ordering::SeqCst);
        let result = self.inner.encode(req)?;
        self.cache.insert(key, result.clone());
        Ok(result)
    }
}
