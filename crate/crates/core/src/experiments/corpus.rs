use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Environment variable naming a text corpus (file or directory).
pub const CORPUS_ENV: &str = "CTXSPAN_CORPUS";

/// Concatenates a text file, or every file under a directory in sorted path
/// order. Files that are not valid UTF-8 are skipped.
pub fn load_text_corpus(path: &Path) -> Result<String> {
    let mut files = Vec::new();
    collect(path, &mut files)?;
    files.sort();
    let mut text = String::new();
    for f in files {
        if let Ok(s) = fs::read_to_string(&f) {
            text.push_str(&s);
        }
    }
    if text.is_empty() {
        return Err(Error::Data(format!("no text found under {}", path.display())));
    }
    Ok(text)
}

fn collect(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_dir() {
        for entry in fs::read_dir(path)? {
            collect(&entry?.path(), out)?;
        }
    } else if path.is_file() {
        out.push(path.to_path_buf());
    }
    Ok(())
}

/// `CTXSPAN_CORPUS` if set, else the reStructuredText help pages shipped
/// with CMake, when installed.
pub fn default_corpus() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os(CORPUS_ENV) {
        return Some(PathBuf::from(p));
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir("/usr/share")
        .ok()?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("cmake-"))
        })
        .map(|p| p.join("Help"))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    dirs.pop()
}
