//! Output-directory management: content-addressed run ids and atomic
//! file writes (temp file + rename, never partial state).

use crate::config::RunConfig;
use carapace_core::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Run id = hash(config, seed, code version), hex-truncated.
pub fn run_id(config: &RunConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(config).expect("config serializes"));
    hasher.update(config.run.seed.to_le_bytes());
    hasher.update(env!("CARGO_PKG_VERSION"));
    let digest = hasher.finalize();
    hex(&digest[..8])
}

/// Short content hash used as scaler/PCA artifact id.
pub fn content_id(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex(&hasher.finalize()[..6])
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub struct OutDir {
    pub root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<OutDir> {
        std::fs::create_dir_all(root)?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Atomic write: stage into a temp file in the target directory,
    /// then rename over the destination.
    pub fn write(&self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let dest = self.root.join(rel);
        let dir = dest
            .parent()
            .ok_or_else(|| Error::Validation(format!("bad artifact path '{rel}'")))?;
        std::fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        std::io::Write::write_all(&mut tmp, bytes)?;
        tmp.persist(&dest).map_err(|e| Error::Io(e.error))?;
        Ok(dest)
    }

    pub fn write_string(&self, rel: &str, text: &str) -> Result<PathBuf> {
        self.write(rel, text.as_bytes())
    }

    pub fn read_string(&self, rel: &str) -> Result<String> {
        Ok(std::fs::read_to_string(self.root.join(rel))?)
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.root.join(rel).exists()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_id_depends_on_config_and_seed() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        b.run.seed = 43;
        assert_eq!(run_id(&a), run_id(&a));
        assert_ne!(run_id(&a), run_id(&b));
    }

    #[test]
    fn atomic_write_overwrites_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path()).unwrap();
        out.write_string("reports/x.txt", "one").unwrap();
        out.write_string("reports/x.txt", "two").unwrap();
        assert_eq!(out.read_string("reports/x.txt").unwrap(), "two");
    }
}
