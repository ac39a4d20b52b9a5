//! Content-addressed response cache.
//!
//! One JSON file per entry under `<root>/<namespace>/<aa>/<digest>.json`,
//! where `digest` is the hex SHA-256 of the key's canonical encoding and `aa`
//! its first two hex digits. The canonical encoding is a domain string
//! followed by each field as an 8-byte little-endian length and its bytes;
//! integers are 8-byte little-endian, the temperature is its IEEE-754 bit
//! pattern. Entries look like
//!
//! ```json
//! {"format": "promptlens-cache/1", "key": "<digest>", "request": {...},
//!  "payload": "<text>", "created_unix": 1760000000}
//! ```
//!
//! Writes go to a temporary file in the shard directory and are renamed into
//! place, so readers never observe a torn entry. Unreadable entries are moved
//! to `<root>/quarantine/` and treated as misses.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use promptlens_core::{Completion, CompletionProvider, CompletionRequest, Embedder, ProviderError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const FORMAT_TAG: &str = "promptlens-cache/1";
pub const COMPLETIONS: &str = "completions";
pub const EMBEDDINGS: &str = "embeddings";
const QUARANTINE: &str = "quarantine";

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("permission denied: {}", path.display())]
    PermissionDenied { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CacheError {
    fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::PermissionDenied {
            CacheError::PermissionDenied { path: path.to_path_buf() }
        } else {
            CacheError::Io { path: path.to_path_buf(), source }
        }
    }
}

/// 256-bit digest identifying one cached payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CacheKey([u8; 32]);

struct KeyHasher(Sha256);

impl KeyHasher {
    fn new(domain: &str) -> Self {
        let mut h = KeyHasher(Sha256::new());
        h.bytes(domain.as_bytes());
        h
    }
    fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.0.update((b.len() as u64).to_le_bytes());
        self.0.update(b);
        self
    }
    fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }
    fn u64(&mut self, v: u64) -> &mut Self {
        self.0.update(v.to_le_bytes());
        self
    }
    fn finish(self) -> CacheKey {
        CacheKey(self.0.finalize().into())
    }
}

impl CacheKey {
    pub fn completion(provider_kind: &str, request: &CompletionRequest, sample_index: u32) -> Self {
        let mut h = KeyHasher::new("promptlens/completion/1");
        h.str(provider_kind)
            .str(&request.model_id)
            .str(&request.system_prompt)
            .str(&request.user_input)
            .u64(u64::from(sample_index))
            .u64(request.temperature.to_bits());
        h.finish()
    }

    pub fn embedding(provider_kind: &str, model_id: &str, text: &str) -> Self {
        let mut h = KeyHasher::new("promptlens/embedding/1");
        h.str(provider_kind).str(model_id).str(text);
        h.finish()
    }

    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub format: String,
    pub key: String,
    /// Echo of what produced the payload, for humans and audits.
    pub request: serde_json::Value,
    pub payload: String,
    pub created_unix: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub entries: usize,
    pub bytes: u64,
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    root: PathBuf,
}

impl ResponseCache {
    /// Opens (and creates) a cache rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, CacheError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| CacheError::io(&root, e))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_for(&self, namespace: &str, key: &CacheKey) -> PathBuf {
        let hex = key.hex();
        self.root.join(namespace).join(&hex[..2]).join(format!("{hex}.json"))
    }

    pub fn get(&self, namespace: &str, key: &CacheKey) -> Option<String> {
        let path = self.path_for(namespace, key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!("cache entry {} unreadable: {e}", path.display());
                return None;
            }
        };
        match serde_json::from_slice::<CacheEntry>(&bytes) {
            Ok(entry) if entry.format == FORMAT_TAG && entry.key == key.hex() => Some(entry.payload),
            Ok(_) => {
                self.quarantine(&path, "format tag or key mismatch");
                None
            }
            Err(e) => {
                self.quarantine(&path, &e.to_string());
                None
            }
        }
    }

    fn quarantine(&self, path: &Path, reason: &str) {
        let dir = self.root.join(QUARANTINE);
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let target = dir.join(format!("{}.{name}", unix_now()));
        let moved = fs::create_dir_all(&dir).and_then(|_| fs::rename(path, &target));
        match moved {
            Ok(()) => log::warn!("corrupt cache entry {} ({reason}); moved to {}", path.display(), target.display()),
            Err(e) => log::warn!("corrupt cache entry {} ({reason}); could not quarantine: {e}", path.display()),
        }
    }

    pub fn put(&self, namespace: &str, key: &CacheKey, request: serde_json::Value, payload: &str) -> Result<(), CacheError> {
        let path = self.path_for(namespace, key);
        let dir = path.parent().expect("entry path has a parent");
        fs::create_dir_all(dir).map_err(|e| CacheError::io(dir, e))?;
        let entry = CacheEntry {
            format: FORMAT_TAG.to_string(),
            key: key.hex(),
            request,
            payload: payload.to_string(),
            created_unix: unix_now(),
        };
        let body = serde_json::to_vec_pretty(&entry).expect("cache entries serialize");
        write_atomic_in(dir, &path, &body).map_err(|e| CacheError::io(&path, e))
    }

    /// Entry count and total size of one namespace.
    pub fn stats(&self, namespace: &str) -> Result<CacheStats, CacheError> {
        let mut stats = CacheStats::default();
        let dir = self.root.join(namespace);
        let shards = match fs::read_dir(&dir) {
            Ok(s) => s,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(stats),
            Err(e) => return Err(CacheError::io(&dir, e)),
        };
        for shard in shards {
            let shard = shard.map_err(|e| CacheError::io(&dir, e))?.path();
            if !shard.is_dir() {
                continue;
            }
            for entry in fs::read_dir(&shard).map_err(|e| CacheError::io(&shard, e))? {
                let entry = entry.map_err(|e| CacheError::io(&shard, e))?;
                let path = entry.path();
                if path.extension().is_some_and(|x| x == "json") {
                    stats.entries += 1;
                    stats.bytes += entry.metadata().map_err(|e| CacheError::io(&path, e))?.len();
                }
            }
        }
        Ok(stats)
    }

    /// Removes every entry. Each namespace directory is first renamed out of
    /// the way, so a concurrent reader sees either all entries or none.
    pub fn clear(&self) -> Result<(), CacheError> {
        let probe = self.root.join(".write-probe");
        fs::write(&probe, b"").map_err(|e| CacheError::io(&self.root, e))?;
        fs::remove_file(&probe).map_err(|e| CacheError::io(&probe, e))?;
        for namespace in [COMPLETIONS, EMBEDDINGS, QUARANTINE] {
            let dir = self.root.join(namespace);
            if !dir.exists() {
                continue;
            }
            let trash = self.root.join(format!(".trash-{namespace}-{}-{}", std::process::id(), unix_nanos()));
            fs::rename(&dir, &trash).map_err(|e| CacheError::io(&dir, e))?;
            fs::remove_dir_all(&trash).map_err(|e| CacheError::io(&trash, e))?;
        }
        Ok(())
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn unix_nanos() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos())
}

fn write_atomic_in(dir: &Path, path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes `bytes` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    write_atomic_in(dir, path, bytes)
}

/// Wraps a provider with the response cache, an upstream call counter, a
/// cancellation flag and bounded parallelism for batches.
pub struct CachedProvider<P> {
    inner: P,
    cache: Option<ResponseCache>,
    parallelism: usize,
    cancel: Arc<AtomicBool>,
    upstream_samples: AtomicUsize,
    cache_hits: AtomicUsize,
}

impl<P: CompletionProvider> CachedProvider<P> {
    pub fn new(inner: P, cache: Option<ResponseCache>, parallelism: usize) -> Self {
        Self {
            inner,
            cache,
            parallelism: parallelism.max(1),
            cancel: Arc::new(AtomicBool::new(false)),
            upstream_samples: AtomicUsize::new(0),
            cache_hits: AtomicUsize::new(0),
        }
    }

    /// Shares an externally owned cancellation flag, e.g. one set by a
    /// signal handler.
    pub fn with_cancel_flag(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = flag;
        self
    }

    pub fn cancel_flag(&self) -> Arc<AtomicBool> {
        self.cancel.clone()
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    /// Samples fetched from the wrapped provider.
    pub fn upstream_samples(&self) -> usize {
        self.upstream_samples.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> usize {
        self.cache_hits.load(Ordering::SeqCst)
    }

    fn key(&self, request: &CompletionRequest, i: u32) -> CacheKey {
        CacheKey::completion(self.inner.kind(), request, i)
    }

    fn lookup(&self, request: &CompletionRequest, i: u32) -> Option<String> {
        let text = self.cache.as_ref()?.get(COMPLETIONS, &self.key(request, i))?;
        self.cache_hits.fetch_add(1, Ordering::SeqCst);
        Some(text)
    }

    fn store(&self, request: &CompletionRequest, i: u32, text: &str) {
        let Some(cache) = &self.cache else { return };
        let echo = serde_json::json!({
            "provider_kind": self.inner.kind(),
            "model_id": request.model_id,
            "system_prompt": request.system_prompt,
            "user_input": request.user_input,
            "sample_index": i,
            "temperature": request.temperature,
        });
        if let Err(e) = cache.put(COMPLETIONS, &self.key(request, i), echo, text) {
            log::warn!("could not write cache entry: {e}");
        }
    }

    fn check_cancel(&self) -> Result<(), ProviderError> {
        if self.cancel.load(Ordering::SeqCst) {
            Err(ProviderError::Cancelled)
        } else {
            Ok(())
        }
    }
}

impl<P: CompletionProvider + Sync> CompletionProvider for CachedProvider<P> {
    fn kind(&self) -> &str {
        self.inner.kind()
    }

    fn sample(&self, request: &CompletionRequest, i: u32) -> Result<String, ProviderError> {
        if let Some(text) = self.lookup(request, i) {
            return Ok(text);
        }
        self.check_cancel()?;
        let text = self.inner.sample(request, i)?;
        self.upstream_samples.fetch_add(1, Ordering::SeqCst);
        self.store(request, i, &text);
        Ok(text)
    }

    /// Cached samples are served from disk. When every sample misses, one
    /// `n`-sample upstream call is made; otherwise each missing sample is
    /// fetched on its own.
    fn complete(&self, request: &CompletionRequest) -> Result<Vec<Completion>, ProviderError> {
        request.validate()?;
        let cached: Vec<Option<String>> = (0..request.n).map(|i| self.lookup(request, i)).collect();
        if cached.iter().all(Option::is_none) {
            self.check_cancel()?;
            let fresh = self.inner.complete(request)?;
            if fresh.len() != request.n as usize {
                return Err(ProviderError::Truncated {
                    expected: request.n,
                    received: fresh.len() as u32,
                });
            }
            self.upstream_samples.fetch_add(fresh.len(), Ordering::SeqCst);
            for c in &fresh {
                self.store(request, c.sample_index, &c.text);
            }
            return Ok(fresh);
        }
        cached
            .into_iter()
            .zip(0..request.n)
            .map(|(hit, i)| {
                let (text, from_cache) = match hit {
                    Some(text) => (text, true),
                    None => (self.sample(request, i)?, false),
                };
                Ok(Completion {
                    text,
                    sample_index: i,
                    model_id: request.model_id.clone(),
                    from_cache,
                })
            })
            .collect()
    }

    /// Evaluates requests on at most `parallelism` threads; results come back
    /// in request order.
    fn complete_many(&self, requests: &[CompletionRequest]) -> Vec<Result<Vec<Completion>, ProviderError>> {
        let workers = self.parallelism.min(requests.len());
        if workers <= 1 {
            return requests.iter().map(|r| self.complete(r)).collect();
        }
        let next = AtomicUsize::new(0);
        type Slot = Mutex<Option<Result<Vec<Completion>, ProviderError>>>;
        let slots: Vec<Slot> = requests.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(request) = requests.get(i) else { break };
                    let result = self.complete(request);
                    *slots[i].lock().expect("slot lock") = Some(result);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().expect("slot lock").expect("every slot filled"))
            .collect()
    }
}

/// Embedder wrapper with an in-memory memo and an optional disk cache.
pub struct CachedEmbedder<E> {
    inner: E,
    kind: String,
    model_id: String,
    cache: Option<ResponseCache>,
    memo: Mutex<HashMap<String, Vec<f64>>>,
    upstream: AtomicUsize,
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn new(inner: E, kind: &str, model_id: &str, cache: Option<ResponseCache>) -> Self {
        Self {
            inner,
            kind: kind.to_string(),
            model_id: model_id.to_string(),
            cache,
            memo: Mutex::new(HashMap::new()),
            upstream: AtomicUsize::new(0),
        }
    }

    pub fn upstream_calls(&self) -> usize {
        self.upstream.load(Ordering::SeqCst)
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        if let Some(v) = self.memo.lock().expect("memo lock").get(text) {
            return Ok(v.clone());
        }
        let key = CacheKey::embedding(&self.kind, &self.model_id, text);
        let from_disk = self
            .cache
            .as_ref()
            .and_then(|c| c.get(EMBEDDINGS, &key))
            .and_then(|payload| serde_json::from_str::<Vec<f64>>(&payload).ok());
        let vector = match from_disk {
            Some(v) => v,
            None => {
                let v = self.inner.embed(text)?;
                self.upstream.fetch_add(1, Ordering::SeqCst);
                if let Some(cache) = &self.cache {
                    let echo = serde_json::json!({"provider_kind": self.kind, "model_id": self.model_id, "text": text});
                    let payload = serde_json::to_string(&v).expect("finite vectors serialize");
                    if let Err(e) = cache.put(EMBEDDINGS, &key, echo, &payload) {
                        log::warn!("could not write cache entry: {e}");
                    }
                }
                v
            }
        };
        self.memo.lock().expect("memo lock").insert(text.to_string(), vector.clone());
        Ok(vector)
    }
}
