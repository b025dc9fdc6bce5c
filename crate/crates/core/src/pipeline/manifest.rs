//! Checksummed file lists written next to every command's outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persist::{sha256_file, write_atomic};

pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the manifest's directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Checksum `files` (relative to `dir`) and write `dir/manifest.csv`.
pub fn write_manifest(dir: &Path, files: &[String]) -> Result<Vec<ManifestEntry>> {
    let mut files = files.to_vec();
    files.sort();
    files.dedup();
    let entries = files
        .into_iter()
        .map(|rel| {
            let p = dir.join(&rel);
            Ok(ManifestEntry {
                bytes: std::fs::metadata(&p)?.len(),
                sha256: sha256_file(&p)?,
                path: rel,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_atomic(dir.join(MANIFEST_FILE), |w| {
        let mut wr = csv::Writer::from_writer(w);
        for e in &entries {
            wr.serialize(e)?;
        }
        wr.flush()?;
        Ok(())
    })?;
    Ok(entries)
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let path = dir.join(MANIFEST_FILE);
    let file = std::fs::File::open(&path).map_err(|_| Error::MissingInput {
        path: path.clone(),
        hint: "no manifest; the producing command did not finish".into(),
    })?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Paths whose size or checksum no longer match the manifest.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for e in read_manifest(dir)? {
        let p = dir.join(&e.path);
        let ok = p.exists() && sha256_file(&p)? == e.sha256;
        if !ok {
            bad.push(e.path);
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_changed_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "x\n").unwrap();
        std::fs::create_dir(dir.path().join("sub")).unwrap();
        std::fs::write(dir.path().join("sub/b.csv"), "y\n").unwrap();
        let e = write_manifest(dir.path(), &["sub/b.csv".into(), "a.csv".into()]).unwrap();
        assert_eq!(e[0].path, "a.csv");
        assert_eq!(e[0].bytes, 2);
        assert!(verify_manifest(dir.path()).unwrap().is_empty());
        std::fs::write(dir.path().join("a.csv"), "z\n").unwrap();
        assert_eq!(verify_manifest(dir.path()).unwrap(), vec!["a.csv".to_string()]);
    }
}
