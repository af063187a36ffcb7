//! Input lookup, output bookkeeping and the run manifest.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use takeup_core::rules::PolicySet;

use crate::config::{config_dir, LoadedConfig};
use crate::error::{io_error, CliError, CliResult, Kind};

pub const MANIFEST: &str = "manifest.json";

/// Resolves artifact names against the `--input` directories, first match
/// wins, and remembers every file handed out.
pub struct Inputs {
    dirs: Vec<PathBuf>,
    used: BTreeSet<String>,
}

impl Inputs {
    pub fn new(dirs: Vec<PathBuf>) -> Self {
        Inputs { dirs, used: BTreeSet::new() }
    }

    pub fn find(&mut self, name: &str) -> CliResult<PathBuf> {
        self.find_optional(name).ok_or_else(|| {
            let dirs: Vec<String> = self.dirs.iter().map(|d| d.display().to_string()).collect();
            CliError::new(
                Kind::MissingArtifact,
                format!("missing upstream artifact `{name}` in inputs [{}]", dirs.join(", ")),
            )
        })
    }

    pub fn find_optional(&mut self, name: &str) -> Option<PathBuf> {
        let p = self.dirs.iter().map(|d| d.join(name)).find(|p| p.is_file())?;
        self.used.insert(p.display().to_string());
        Some(p)
    }

    /// Policy parameters from the inputs, else from the configuration
    /// directory.
    pub fn policies(&mut self) -> CliResult<PolicySet> {
        let name = takeup_core::io::POLICY;
        let path = match self.find_optional(name) {
            Some(p) => p,
            None => {
                let p = config_dir().map(|d| d.join(name)).filter(|p| p.is_file()).ok_or_else(|| {
                    CliError::new(Kind::MissingArtifact, format!("no `{name}` in inputs or configuration directory"))
                })?;
                self.used.insert(p.display().to_string());
                p
            }
        };
        Ok(PolicySet::load(&path)?)
    }

    pub fn used(&self) -> Vec<String> {
        self.used.iter().cloned().collect()
    }
}

/// Output directory; records every file written through it.
pub struct Outputs {
    dir: PathBuf,
    written: BTreeSet<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Outputs { dir: dir.to_path_buf(), written: BTreeSet::new() })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.written.insert(name.to_string());
        self.dir.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| io_error(&p, e))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::new(Kind::Internal, format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn copy_from(&mut self, name: &str, src: &Path) -> CliResult<()> {
        let p = self.path(name);
        std::fs::copy(src, &p).map(|_| ()).map_err(|e| io_error(src, e))
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub subcommand: String,
    pub version: String,
    pub config: Option<String>,
    pub config_sha256: Option<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub options: serde_json::Value,
    pub option_hash: String,
    pub timestamp: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `SOURCE_DATE_EPOCH` when set, so reruns can be byte-identical;
/// otherwise the current time.
fn timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok())
        .unwrap_or_else(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs() as i64)
                .unwrap_or(0)
        });
    chrono::DateTime::from_timestamp(secs, 0)
        .map(|t| t.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_default()
}

pub struct RunRecord<'a> {
    pub subcommand: &'a str,
    pub config: &'a LoadedConfig,
    pub seed: Option<u64>,
    pub options: serde_json::Value,
}

/// Writes `manifest.json` listing everything read and written.
pub fn write_manifest(record: RunRecord<'_>, inputs: &Inputs, mut outputs: Outputs) -> CliResult<()> {
    let option_hash = sha256_hex(record.options.to_string().as_bytes());
    let manifest = Manifest {
        subcommand: record.subcommand.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: record.config.path.as_ref().map(|p| p.display().to_string()),
        config_sha256: record.config.text.as_ref().map(|t| sha256_hex(t.as_bytes())),
        inputs: inputs.used(),
        outputs: outputs.written.iter().cloned().collect(),
        seed: record.seed,
        options: record.options,
        option_hash,
        timestamp: timestamp(),
    };
    outputs.write_json(MANIFEST, &manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_lowercase_hex() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn first_input_directory_wins() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        std::fs::write(b.path().join("x.csv"), "1").unwrap();
        std::fs::write(a.path().join("y.csv"), "1").unwrap();
        std::fs::write(b.path().join("y.csv"), "2").unwrap();
        let mut inputs = Inputs::new(vec![a.path().into(), b.path().into()]);
        assert_eq!(inputs.find("x.csv").unwrap(), b.path().join("x.csv"));
        assert_eq!(inputs.find("y.csv").unwrap(), a.path().join("y.csv"));
        let err = inputs.find("z.csv").unwrap_err();
        assert_eq!(err.kind, Kind::MissingArtifact);
        assert_eq!(inputs.used().len(), 2);
    }
}
