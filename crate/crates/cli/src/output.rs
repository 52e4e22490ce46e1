//! Atomic artifact writes and the status file.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const STATUS_FILE: &str = "status.json";

/// Output directory with write-temp-then-rename semantics.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: PathBuf) -> std::io::Result<Self> {
        std::fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&self, name: &str, contents: &str) -> std::io::Result<PathBuf> {
        let target = self.root.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root)?;
        tmp.write_all(contents.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target).map_err(|e| e.error)?;
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> std::io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable artifact");
        text.push('\n');
        self.write(name, &text)
    }
}

/// Machine-readable record of how a command ended.
#[derive(Debug, Clone, Serialize)]
pub struct Status {
    pub command: String,
    pub exit_code: i32,
    pub condition: String,
    pub message: String,
    pub artifacts: Vec<String>,
}
