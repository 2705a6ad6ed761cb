//! All-or-nothing file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Files staged in memory and written together.
///
/// Each file goes to a temporary sibling and is renamed into place. If any
/// write fails, files already renamed by this batch are removed again.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: impl Into<PathBuf>, contents: impl Into<Vec<u8>>) {
        self.files.push((path.into(), contents.into()));
    }

    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut done: Vec<PathBuf> = Vec::new();
        for (path, contents) in &self.files {
            if let Err(e) = write_atomic(path, contents) {
                for p in &done {
                    let _ = std::fs::remove_file(p);
                }
                return Err(e);
            }
            done.push(path.clone());
        }
        Ok(done)
    }
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let fail = |e: &dyn std::fmt::Display| CliError::Config(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(contents).map_err(|e| fail(&e))?;
    tmp.as_file().sync_all().map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputSet::new();
        out.add(dir.path().join("a.txt"), "alpha");
        out.add(dir.path().join("b.txt"), "beta");
        out.commit().unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join("b.txt")).unwrap(), "beta");
    }

    #[test]
    fn failure_removes_earlier_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputSet::new();
        out.add(dir.path().join("a.txt"), "alpha");
        out.add(dir.path().join("missing/b.txt"), "beta");
        let err = out.commit().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!dir.path().join("a.txt").exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0, "no temp files left behind");
    }
}
