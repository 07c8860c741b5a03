//! Run directories, manifests and CSV output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    /// Seconds since the Unix epoch. Kept out of every CSV so that identical
    /// configurations give byte-identical tables.
    pub timestamp: u64,
    pub config_hash: String,
    pub outputs: Vec<String>,
}

/// SHA-256 over `<command>\0<canonical json>`; serde_json writes struct
/// fields in declaration order and maps sorted, so the encoding is stable.
pub fn config_hash(command: &str, config: &serde_json::Value) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(serde_json::to_vec(config).expect("JSON values serialize"));
    hex::encode(h.finalize())
}

pub struct Run {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl Run {
    /// Creates `<root>/<command>-<hash prefix>/`.
    pub fn create(root: &Path, command: &str, config: &impl Serialize) -> std::io::Result<Run> {
        let config = serde_json::to_value(config).map_err(std::io::Error::other)?;
        let hash = config_hash(command, &config);
        let dir = root.join(format!("{command}-{}", &hash[..16]));
        fs::create_dir_all(&dir)?;
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Ok(Run {
            dir,
            manifest: RunManifest {
                command: command.to_string(),
                config,
                timestamp,
                config_hash: hash,
                outputs: Vec::new(),
            },
        })
    }

    pub fn hash(&self) -> &str {
        &self.manifest.config_hash
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(self.dir.join(name), text)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes `rows` as CSV. Row types lead with a `config_hash` column.
    pub fn write_csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        for row in rows {
            w.serialize(row).map_err(std::io::Error::other)?;
        }
        w.flush()?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    pub fn finish(mut self) -> std::io::Result<PathBuf> {
        self.manifest.outputs.push("manifest.json".into());
        let text = serde_json::to_string_pretty(&self.manifest).map_err(std::io::Error::other)?;
        fs::write(self.dir.join("manifest.json"), text + "\n")?;
        Ok(self.dir)
    }
}
