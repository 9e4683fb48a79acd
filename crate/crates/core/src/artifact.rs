//! Multi-file source artifacts.
//!
//! A solution is a complete piece of software: an ordered set of path →
//! content pairs. Files are kept sorted by path so flattening, hashing, and
//! serialization are deterministic regardless of production order.

use serde::{Deserialize, Serialize};

/// One file of an artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub content: String,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, content: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            content: content.into(),
        }
    }
}

/// An ordered path → content map representing one complete solution.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Artifact {
    files: Vec<SourceFile>,
}

impl Artifact {
    /// The empty artifact (the initial solution of every chain).
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds an artifact, sorting files by path.
    pub fn from_files(files: Vec<SourceFile>) -> Self {
        let mut files = files;
        files.sort_by(|a, b| a.path.cmp(&b.path));
        Self { files }
    }

    pub fn files(&self) -> &[SourceFile] {
        &self.files
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    /// Concatenates all files in path order, each preceded by a one-line
    /// path header. Returns the empty string for the empty artifact.
    pub fn flatten(&self) -> String {
        let mut out = String::new();
        for file in &self.files {
            out.push_str("=== ");
            out.push_str(&file.path);
            out.push_str(" ===\n");
            out.push_str(&file.content);
            if !file.content.ends_with('\n') {
                out.push('\n');
            }
        }
        out
    }

    /// Case-sensitive substring search over every file's content.
    pub fn contains_token(&self, token: &str) -> bool {
        self.files.iter().any(|f| f.content.contains(token))
    }
}
