use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crc::{Crc, CRC_64_ECMA_182};

use crate::error::Result;

use super::config::{echo, identity_text, ExperimentConfig};

/// Hex checksum of the resolved configuration, `out_dir` excluded.
pub fn run_id(cfg: &ExperimentConfig) -> String {
    let crc = Crc::<u64>::new(&CRC_64_ECMA_182);
    format!("{:016x}", crc.checksum(identity_text(cfg).as_bytes()))
}

pub(crate) struct RunDir {
    root: PathBuf,
}

impl RunDir {
    /// Creates the run directory and writes `config.echo`.
    pub(crate) fn create(cfg: &ExperimentConfig) -> Result<Self> {
        let root = cfg.out_dir.join(cfg.name.as_str()).join(run_id(cfg));
        fs::create_dir_all(root.join("checkpoints"))?;
        write_atomic(&root.join("config.echo"), echo(cfg).as_bytes())?;
        Ok(RunDir { root })
    }

    pub(crate) fn root(&self) -> &Path {
        &self.root
    }

    pub(crate) fn join(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.root.join(rel)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// `key = value` lines.
pub(crate) fn write_kv(path: &Path, entries: &[(String, String)], trailer: &[String]) -> Result<()> {
    let mut s = String::new();
    for (k, v) in entries {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(v);
        s.push('\n');
    }
    for line in trailer {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

/// Inverse of [`write_kv`]; comment lines are skipped.
pub(crate) fn read_kv(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.to_string(), v.to_string())))
        .collect())
}
