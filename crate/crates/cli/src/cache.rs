//! Content-addressed cache of measure grids.
//!
//! Entries live in `<dir>/<key>.json`, where the key is the SHA-256 of the
//! canonical JSON of the factor (domain, plural set, method, resolution).
//! Access to an entry is serialized by an advisory lock on `<key>.lock`.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crosslab::cross::FactorManifest;
use crosslab::MeasureGrid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::output::write_atomic;
use crate::CliError;

/// Bumped whenever the grid solvers change their output.
const SCHEMA: &str = "measure-grid/1";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CacheKey(pub String);

impl CacheKey {
    pub fn of(factor: &FactorManifest) -> Self {
        #[derive(Serialize)]
        struct Canonical<'a> {
            schema: &'a str,
            factor: &'a FactorManifest,
        }
        let text = serde_json::to_string(&Canonical { schema: SCHEMA, factor }).expect("factor serializes");
        CacheKey(hex::encode(Sha256::digest(text.as_bytes())))
    }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    /// SHA-256 of the serialized grid.
    checksum: String,
    grid: serde_json::Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lookup {
    Hit,
    Miss,
    /// The entry existed but could not be read back; it was recomputed.
    Corrupt,
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.0))
    }

    fn read(&self, key: &CacheKey) -> Result<Option<MeasureGrid>, String> {
        let path = self.entry_path(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.to_string()),
        };
        let entry: Entry = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let grid_text = serde_json::to_string(&entry.grid).map_err(|e| e.to_string())?;
        if entry.key != key.0 || hex::encode(Sha256::digest(grid_text.as_bytes())) != entry.checksum {
            return Err("key or checksum mismatch".into());
        }
        serde_json::from_value(entry.grid).map(Some).map_err(|e| e.to_string())
    }

    fn write(&self, key: &CacheKey, grid: &MeasureGrid) -> Result<(), CliError> {
        let value = serde_json::to_value(grid).map_err(|e| CliError::Io(e.to_string()))?;
        let grid_text = serde_json::to_string(&value).map_err(|e| CliError::Io(e.to_string()))?;
        let entry = Entry { key: key.0.clone(), checksum: hex::encode(Sha256::digest(grid_text.as_bytes())), grid: value };
        let text = serde_json::to_string(&entry).map_err(|e| CliError::Io(e.to_string()))?;
        write_atomic(&self.entry_path(key), text.as_bytes())
    }

    /// The cached grid for `key`, or the result of `compute` stored under it.
    pub fn get_or_compute(
        &self,
        key: &CacheKey,
        compute: impl FnOnce() -> crosslab::Result<MeasureGrid>,
    ) -> Result<(MeasureGrid, Lookup), CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::Io(format!("{}: {e}", self.dir.display())))?;
        let lock_path = self.dir.join(format!("{}.lock", key.0));
        let lock = File::create(&lock_path).map_err(|e| CliError::Io(format!("{}: {e}", lock_path.display())))?;
        lock.lock().map_err(|e| CliError::Io(format!("{}: {e}", lock_path.display())))?;
        let lookup = match self.read(key) {
            Ok(Some(grid)) => {
                log::info!("cache hit {}", key.0);
                return Ok((grid, Lookup::Hit));
            }
            Ok(None) => Lookup::Miss,
            Err(why) => {
                log::warn!("cache entry {} is corrupt ({why}); recomputing", key.0);
                Lookup::Corrupt
            }
        };
        let start = Instant::now();
        let grid = compute().map_err(CliError::Core)?;
        log::info!("cache miss {}: computed in {:.3} s", key.0, start.elapsed().as_secs_f64());
        self.write(key, &grid)?;
        Ok((grid, lookup))
    }

    /// Keys of the stored entries, sorted.
    pub fn list(&self) -> Result<Vec<String>, CliError> {
        let mut keys = Vec::new();
        let rd = match fs::read_dir(&self.dir) {
            Ok(rd) => rd,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(keys),
            Err(e) => return Err(CliError::Io(format!("{}: {e}", self.dir.display()))),
        };
        for e in rd {
            let p = e.map_err(|e| CliError::Io(e.to_string()))?.path();
            if p.extension().is_some_and(|x| x == "json") {
                if let Some(stem) = p.file_stem() {
                    keys.push(stem.to_string_lossy().into_owned());
                }
            }
        }
        keys.sort();
        Ok(keys)
    }

    /// Removes all entries and lock files; returns the number of entries.
    pub fn clear(&self) -> Result<usize, CliError> {
        let keys = self.list()?;
        for k in &keys {
            for ext in ["json", "lock"] {
                let p = self.dir.join(format!("{k}.{ext}"));
                if p.exists() {
                    fs::remove_file(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                }
            }
        }
        Ok(keys.len())
    }
}
