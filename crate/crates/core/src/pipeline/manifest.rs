use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{write_json, PipelineError};

pub const MANIFEST_VERSION: u32 = 1;
const MANIFEST_FILE: &str = "manifest.json";
const LOCK_FILE: &str = ".lock";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub artifacts: Vec<ManifestEntry>,
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), PipelineError> {
    let entries = std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| PipelineError::io(dir, e))?.path();
        if path.is_dir() {
            collect(root, &path, out)?;
        } else if dir != root || !matches!(path.file_name().and_then(|n| n.to_str()), Some(MANIFEST_FILE | LOCK_FILE)) {
            out.push(path);
        }
    }
    Ok(())
}

impl Manifest {
    /// Digests every file under `root` except the manifest and the lock.
    pub fn scan(root: &Path) -> Result<Self, PipelineError> {
        let mut files = Vec::new();
        collect(root, root, &mut files)?;
        let mut artifacts = files
            .iter()
            .map(|p| {
                let bytes = std::fs::read(p).map_err(|e| PipelineError::io(p, e))?;
                let rel = p.strip_prefix(root).expect("under root");
                Ok(ManifestEntry {
                    path: rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
                    sha256: hex::encode(Sha256::digest(&bytes)),
                    bytes: bytes.len() as u64,
                })
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(Self {
            version: MANIFEST_VERSION,
            artifacts,
        })
    }
}

pub fn write_manifest(root: &Path) -> Result<Manifest, PipelineError> {
    let m = Manifest::scan(root)?;
    write_json(&root.join(MANIFEST_FILE), &m)?;
    Ok(m)
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(root: &Path) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(root).map_err(|e| PipelineError::io(root, e))?;
        let path = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(PipelineError::Data(format!(
                "{} exists: another run is using this output directory (delete the file if it is stale)",
                path.display()
            ))),
            Err(e) => Err(PipelineError::io(&path, e)),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
