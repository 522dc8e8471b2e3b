//! Run directories: exclusive lock, hashed artifacts and the MANIFEST.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const LOCK_FILE: &str = ".lock";
pub const MANIFEST: &str = "MANIFEST";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Completion state recorded in the MANIFEST.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Complete,
    Incomplete { stage: String },
}

/// A run directory held by one run. The lock file is removed on drop.
#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
    artifacts: Vec<Artifact>,
}

impl RunDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let lock = path.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => writeln!(f, "{}", std::process::id())?,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(CliError::Io(format!("{} is locked by another run ({})", path.display(), lock.display())));
            }
            Err(e) => return Err(CliError::Io(format!("{}: {e}", lock.display()))),
        }
        Ok(RunDir { path: path.to_path_buf(), artifacts: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    /// Writes `contents` to `name` and records its hash.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let target = self.path.join(name);
        fs::write(&target, contents).map_err(|e| CliError::Io(format!("{}: {e}", target.display())))?;
        self.artifacts.retain(|a| a.name != name);
        self.artifacts.push(Artifact { name: name.to_string(), sha256: sha256_hex(contents), bytes: contents.len() });
        Ok(())
    }

    /// Writes whatever a writer callback produces.
    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> bectomo::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf).map_err(CliError::at("write"))?;
        self.write(name, &buf)
    }

    pub fn finish(&self, status: &Status) -> Result<(), CliError> {
        let mut text = String::from("# bectomo run manifest\n");
        match status {
            Status::Complete => text.push_str("status: complete\n"),
            Status::Incomplete { stage } => text.push_str(&format!("status: incomplete (failed at stage {stage})\n")),
        }
        for a in &self.artifacts {
            text.push_str(&format!("{}  {:>10}  {}\n", a.sha256, a.bytes, a.name));
        }
        let target = self.path.join(MANIFEST);
        fs::write(&target, text).map_err(|e| CliError::Io(format!("{}: {e}", target.display())))
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.path.join(LOCK_FILE));
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parsed MANIFEST: status line and listed artifacts.
pub fn read_manifest(dir: &Path) -> Result<(String, Vec<Artifact>), CliError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut status = String::new();
    let mut items = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        if let Some(s) = line.strip_prefix("status: ") {
            status = s.to_string();
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if let [sha, bytes, name] = parts[..] {
            let bytes = bytes.parse().map_err(|_| CliError::Io(format!("{}: bad size in `{line}`", path.display())))?;
            items.push(Artifact { name: name.to_string(), sha256: sha.to_string(), bytes });
        }
    }
    Ok((status, items))
}

/// Re-hashes every listed artifact; returns the names that do not match.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, CliError> {
    let (_, items) = read_manifest(dir)?;
    let mut bad = Vec::new();
    for a in items {
        let ok = File::open(dir.join(&a.name)).is_ok()
            && fs::read(dir.join(&a.name)).map(|b| sha256_hex(&b) == a.sha256).unwrap_or(false);
        if !ok {
            bad.push(a.name);
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("run");
        let mut first = RunDir::create(&dir).unwrap();
        assert!(matches!(RunDir::create(&dir), Err(CliError::Io(_))));
        first.write("a.csv", b"1,2\n").unwrap();
        first.finish(&Status::Complete).unwrap();
        drop(first);
        assert!(!dir.join(LOCK_FILE).exists());
        let (status, items) = read_manifest(&dir).unwrap();
        assert_eq!(status, "complete");
        assert_eq!(items[0].sha256, sha256_hex(b"1,2\n"));
        assert!(verify_manifest(&dir).unwrap().is_empty());
        fs::write(dir.join("a.csv"), "tampered").unwrap();
        assert_eq!(verify_manifest(&dir).unwrap(), vec!["a.csv".to_string()]);
        RunDir::create(&dir).unwrap();
    }
}
