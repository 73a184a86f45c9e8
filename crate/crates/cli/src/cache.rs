//! Content-addressed directory of JSON payloads. A missing or unreadable
//! entry is treated as a miss.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::report::Payload;

pub const CACHE_ENV: &str = "QHARM_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".qharm-cache";

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

/// SHA-256 of the configuration's JSON form and the library version.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(config).expect("config serializes"));
    hasher.update(b"\0");
    hasher.update(qharm_core::VERSION.as_bytes());
    format!("{:x}", hasher.finalize())
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    /// `$QHARM_CACHE_DIR`, else `./.qharm-cache`.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| DEFAULT_CACHE_DIR.into()))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn load(&self, key: &str) -> Option<Payload> {
        let bytes = fs::read(self.path(key)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    /// Writes to a temporary file in the cache directory, then renames it
    /// over the entry.
    pub fn store(&self, key: &str, payload: &Payload) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        let mut file = fs::File::create(&tmp)?;
        file.write_all(&serde_json::to_vec(payload).expect("payload serializes"))?;
        file.sync_all()?;
        fs::rename(&tmp, self.path(key))
    }
}
