use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// The output directory of one run; remembers every file written so the
/// manifest can hash them.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    written: BTreeSet<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: BTreeSet::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// `rel` uses `/` separators and is recorded as given.
    pub fn path(&self, rel: &str) -> PathBuf {
        rel.split('/').fold(self.root.clone(), |p, part| p.join(part))
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.insert(rel.to_string());
        Ok(path)
    }

    pub fn write_str(&mut self, rel: &str, text: &str) -> Result<PathBuf, CliError> {
        self.write_bytes(rel, text.as_bytes())
    }

    pub fn written(&self) -> impl Iterator<Item = &str> {
        self.written.iter().map(String::as_str)
    }
}
