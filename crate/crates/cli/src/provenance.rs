//! Provenance stamps and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::failure::{CliResult, IoContext};

/// What produced a file: the code version, a hash of the canonical
/// configuration text and the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub code_version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(canonical_config: &str, seed: u64) -> Self {
        Provenance {
            code_version: qfgeo_core::CODE_VERSION,
            config_sha256: format!("{:x}", Sha256::digest(canonical_config.as_bytes())),
            seed,
        }
    }

    /// `#` comment lines accepted by every reader in the toolkit.
    pub fn header(&self) -> String {
        format!(
            "# code_version={}\n# config_sha256={}\n# seed={}\n",
            self.code_version, self.config_sha256, self.seed
        )
    }

    pub fn entries(&self) -> [(&'static str, String); 3] {
        [
            ("code_version", self.code_version.to_string()),
            ("config_sha256", self.config_sha256.clone()),
            ("seed", self.seed.to_string()),
        ]
    }
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}

/// Writes through a temporary sibling and renames it into place, so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> CliResult) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).at(dir)?;
    }
    let mut buf = Vec::new();
    body(&mut buf)?;
    let tmp = temp_path(path);
    {
        let mut f = fs::File::create(&tmp).at(&tmp)?;
        f.write_all(&buf).at(&tmp)?;
        f.sync_all().at(&tmp)?;
    }
    fs::rename(&tmp, path).at(path)
}
