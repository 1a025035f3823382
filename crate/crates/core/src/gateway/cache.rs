//! Content-addressed response cache. Keys are request digests, so two
//! textually different call sites that canonicalise to the same request
//! share an entry. An in-memory tier always exists; a directory tier makes
//! entries survive across processes.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{GatewayError, ResponsePayload};

#[derive(Debug, Serialize, Deserialize)]
struct DiskEntry {
    key: String,
    created_at_ms: u64,
    payload: ResponsePayload,
}

pub struct Cache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, ResponsePayload>>,
}

impl Cache {
    /// A process-local cache with no persistence.
    pub fn memory() -> Cache {
        Cache {
            dir: None,
            memory: Mutex::new(HashMap::new()),
        }
    }

    /// A cache backed by one JSON file per entry under `dir`.
    pub fn persistent(dir: &Path) -> Result<Cache, GatewayError> {
        std::fs::create_dir_all(dir).map_err(|e| GatewayError::CacheIo {
            path: dir.display().to_string(),
            reason: e.to_string(),
        })?;
        Ok(Cache {
            dir: Some(dir.to_path_buf()),
            memory: Mutex::new(HashMap::new()),
        })
    }

    fn entry_path(dir: &Path, key: &str) -> PathBuf {
        dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<ResponsePayload>, GatewayError> {
        if let Some(hit) = self.memory.lock().expect("cache lock").get(key) {
            return Ok(Some(hit.clone()));
        }
        let Some(dir) = &self.dir else {
            return Ok(None);
        };
        let path = Self::entry_path(dir, key);
        let raw = match std::fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => {
                return Err(GatewayError::CacheIo {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })
            }
        };
        let entry: DiskEntry = serde_json::from_str(&raw).map_err(|e| GatewayError::CacheIo {
            path: path.display().to_string(),
            reason: format!("corrupt cache entry: {e}"),
        })?;
        self.memory
            .lock()
            .expect("cache lock")
            .entry(key.to_string())
            .or_insert_with(|| entry.payload.clone());
        Ok(Some(entry.payload))
    }

    pub fn put(&self, key: &str, payload: &ResponsePayload) -> Result<(), GatewayError> {
        match self.memory.lock().expect("cache lock").entry(key.to_string()) {
            // First write wins; concurrent same-key puts collapse to one
            // entry.
            Entry::Occupied(_) => return Ok(()),
            Entry::Vacant(slot) => {
                slot.insert(payload.clone());
            }
        }
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let path = Self::entry_path(dir, key);
        let entry = DiskEntry {
            key: key.to_string(),
            created_at_ms: crate::record::now_ms(),
            payload: payload.clone(),
        };
        let body = serde_json::to_string_pretty(&entry).expect("cache entry serialises");
        let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
        let write = std::fs::write(&tmp, body).and_then(|()| std::fs::rename(&tmp, &path));
        write.map_err(|e| GatewayError::CacheIo {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    /// Drops every entry, returning how many were removed.
    pub fn clear(&self) -> Result<usize, GatewayError> {
        let mut removed = self.memory.lock().expect("cache lock").drain().count();
        if let Some(dir) = &self.dir {
            let entries = std::fs::read_dir(dir).map_err(|e| GatewayError::CacheIo {
                path: dir.display().to_string(),
                reason: e.to_string(),
            })?;
            let mut on_disk = 0;
            for entry in entries {
                let entry = entry.map_err(|e| GatewayError::CacheIo {
                    path: dir.display().to_string(),
                    reason: e.to_string(),
                })?;
                let path = entry.path();
                if path.extension().map(|e| e == "json").unwrap_or(false) {
                    std::fs::remove_file(&path).map_err(|e| GatewayError::CacheIo {
                        path: path.display().to_string(),
                        reason: e.to_string(),
                    })?;
                    on_disk += 1;
                }
            }
            removed = removed.max(on_disk);
        }
        Ok(removed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(s: &str) -> ResponsePayload {
        ResponsePayload::Text(s.to_string())
    }

    #[test]
    fn memory_cache_round_trips() {
        let cache = Cache::memory();
        assert_eq!(cache.get("k").unwrap(), None);
        cache.put("k", &text("v")).unwrap();
        assert_eq!(cache.get("k").unwrap(), Some(text("v")));
    }

    #[test]
    fn first_put_wins() {
        let cache = Cache::memory();
        cache.put("k", &text("first")).unwrap();
        cache.put("k", &text("second")).unwrap();
        assert_eq!(cache.get("k").unwrap(), Some(text("first")));
    }

    #[test]
    fn persistent_cache_survives_reopening() {
        let dir = tempfile::tempdir().unwrap();
        {
            let cache = Cache::persistent(dir.path()).unwrap();
            cache.put("abc123", &text("stored")).unwrap();
        }
        let cache = Cache::persistent(dir.path()).unwrap();
        assert_eq!(cache.get("abc123").unwrap(), Some(text("stored")));
    }

    #[test]
    fn vectors_round_trip_bit_exact_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let vector = ResponsePayload::Vector(vec![0.1, -2.5e-7, 1.0 / 3.0]);
        {
            let cache = Cache::persistent(dir.path()).unwrap();
            cache.put("vec", &vector).unwrap();
        }
        let cache = Cache::persistent(dir.path()).unwrap();
        assert_eq!(cache.get("vec").unwrap(), Some(vector));
    }

    #[test]
    fn clear_removes_disk_entries() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::persistent(dir.path()).unwrap();
        cache.put("a", &text("1")).unwrap();
        cache.put("b", &text("2")).unwrap();
        assert_eq!(cache.clear().unwrap(), 2);
        assert_eq!(cache.get("a").unwrap(), None);
        let cache = Cache::persistent(dir.path()).unwrap();
        assert_eq!(cache.get("b").unwrap(), None);
    }
}
