use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliResult;
use crate::output::{to_json_bytes, write_bytes};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to re-run a command: the subcommand, its fully
/// resolved configuration, the seed and the digests of what it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `out.csv` → `out.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: Option<u64>) -> Self {
        Self {
            command: command.to_owned(),
            config: serde_json::to_value(config).expect("configs serialize"),
            seed,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            outputs: Vec::new(),
        }
    }

    /// Writes `bytes` to `path` and records its digest.
    pub fn emit(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        write_bytes(path, bytes)?;
        self.outputs.push(OutputDigest { path: path.to_owned(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write(&self, primary: &Path) -> CliResult<PathBuf> {
        let path = manifest_path(primary);
        write_bytes(&path, &to_json_bytes(self))?;
        Ok(path)
    }
}
