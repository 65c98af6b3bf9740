//! Content-addressed stage cache: keys are hashes of (stage tag, stage
//! config, input bytes), values are ordinary files under the out-dir.
//! Writes go through a temp file and rename, so concurrent workers and
//! interrupted runs never leave a torn entry behind.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use sha2::{Digest, Sha256};

/// Builds a cache key from length-prefixed parts, so ("ab", "c") and
/// ("a", "bc") never collide.
pub fn content_key(stage: &str, parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(stage.as_bytes());
    hasher.update([0u8]);
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(32);
    for byte in &digest[..16] {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Sibling temp path keeping the target's extension, so format-by-suffix
/// writers still recognize it.
fn temp_sibling(path: &Path) -> std::io::Result<PathBuf> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let nonce = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    Ok(dir.join(format!(
        ".tmp.{}.{nonce}.{}",
        std::process::id(),
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
    )))
}

/// Writes via a sibling temp file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = temp_sibling(path)?;
    std::fs::write(&tmp, bytes)?;
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

/// Runs a path-taking writer against a temp file, then renames into place.
pub fn persist_atomic(
    path: &Path,
    write: impl FnOnce(&Path) -> renoscan_core::Result<()>,
) -> renoscan_core::Result<()> {
    let tmp = temp_sibling(path)?;
    if let Err(e) = write(&tmp) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e);
    }
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e.into())
        }
    }
}

/// One pipeline stage's cache directory plus hit/miss accounting.
#[derive(Debug)]
pub struct StageCache {
    name: &'static str,
    dir: PathBuf,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl StageCache {
    pub fn new(root: &Path, name: &'static str) -> Self {
        Self {
            name,
            dir: root.join(name),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    pub fn entry(&self, key: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{key}.{ext}"))
    }

    /// Records whether `paths` already hold a completed entry.
    pub fn probe(&self, paths: &[&Path]) -> bool {
        let hit = paths.iter().all(|p| p.is_file());
        if hit {
            self.hits.fetch_add(1, Ordering::Relaxed);
        } else {
            self.misses.fetch_add(1, Ordering::Relaxed);
        }
        hit
    }

    pub fn summary(&self) -> String {
        format!(
            "stage {}: {} cache hits, {} misses",
            self.name,
            self.hits.load(Ordering::Relaxed),
            self.misses.load(Ordering::Relaxed)
        )
    }

    #[cfg(test)]
    pub fn counts(&self) -> (usize, usize) {
        (
            self.hits.load(Ordering::Relaxed),
            self.misses.load(Ordering::Relaxed),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_separate_stage_and_part_boundaries() {
        let a = content_key("stack", &[b"ab", b"c"]);
        let b = content_key("stack", &[b"a", b"bc"]);
        let c = content_key("norm", &[b"ab", b"c"]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, content_key("stack", &[b"ab", b"c"]));
        assert_eq!(a.len(), 32);
        assert!(a.chars().all(|ch| ch.is_ascii_hexdigit()));
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("value.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        let leftovers: Vec<_> = std::fs::read_dir(path.parent().unwrap())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().starts_with(".tmp."))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn probe_counts_hits_and_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = StageCache::new(dir.path(), "norm");
        let entry = cache.entry("abc", "png");
        assert!(!cache.probe(&[&entry]));
        write_atomic(&entry, b"data").unwrap();
        assert!(cache.probe(&[&entry]));
        assert_eq!(cache.counts(), (1, 1));
        assert!(cache.summary().contains("1 cache hits"));
    }
}
