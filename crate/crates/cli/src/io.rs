use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult, EXIT_FAILURE, EXIT_PARSE};

/// Content digest of an input file, taken over the exact bytes parsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Reads a whole input file. A missing or unreadable input is a parse-class
/// failure naming the path.
pub fn read_input(path: &Path) -> CliResult<(Vec<u8>, InputDigest)> {
    let bytes = fs::read(path).map_err(|e| CliError::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))?;
    let digest = InputDigest {
        path: path.display().to_string(),
        sha256: hex(&Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    };
    Ok((bytes, digest))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Output files staged in temporaries next to their destinations. Nothing
/// becomes visible until [`Outputs::commit`]; dropping an uncommitted set
/// removes the temporaries.
#[derive(Default)]
pub struct Outputs {
    staged: Vec<(NamedTempFile, PathBuf)>,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stage(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let fail = |e: std::io::Error| CliError::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display()));
        let mut tmp = NamedTempFile::new_in(dir).map_err(fail)?;
        tmp.write_all(bytes).map_err(fail)?;
        tmp.as_file().sync_all().map_err(fail)?;
        self.staged.push((tmp, path.to_path_buf()));
        Ok(())
    }

    pub fn paths(&self) -> Vec<String> {
        self.staged.iter().map(|(_, p)| p.display().to_string()).collect()
    }

    /// Renames every staged file into place. If a rename fails, files
    /// already moved by this call are removed again.
    pub fn commit(self) -> CliResult<()> {
        let mut done: Vec<PathBuf> = Vec::new();
        for (tmp, path) in self.staged {
            if let Err(e) = tmp.persist(&path) {
                for p in &done {
                    let _ = fs::remove_file(p);
                }
                return Err(CliError::new(
                    EXIT_FAILURE,
                    format!("cannot write {}: {}", path.display(), e.error),
                ));
            }
            done.push(path);
        }
        Ok(())
    }
}
