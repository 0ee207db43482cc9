use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliResult;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one command run; one per output directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    /// File name → SHA-256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
    pub tool_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
}

pub fn now_unix() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects artifacts as they are written.
pub struct ArtifactWriter<'a> {
    dir: &'a Path,
    hashes: BTreeMap<String, String>,
}

impl<'a> ArtifactWriter<'a> {
    pub fn new(dir: &'a Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir, hashes: BTreeMap::new() })
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> CliResult<()> {
        let bytes = bytes.as_ref();
        std::fs::write(self.dir.join(name), bytes)?;
        self.hashes.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(value).expect("serializable");
        s.push('\n');
        self.write(name, s)
    }

    pub fn finish(self, command: &str, config: serde_json::Value, started: f64) -> CliResult<RunManifest> {
        let m = RunManifest {
            command: command.to_string(),
            config,
            artifacts: self.hashes,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: started,
            finished_unix: now_unix(),
        };
        let s = serde_json::to_string_pretty(&m).expect("serializable");
        std::fs::write(self.dir.join(MANIFEST_FILE), s + "\n")?;
        Ok(m)
    }
}
