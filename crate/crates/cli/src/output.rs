//! Deterministic machine-readable outputs. Every file embeds the fully
//! resolved config and a format-version field; floats are written with
//! Rust's shortest round-trip formatting, so fixed seed and config give
//! byte-identical files.

use crate::config::FORMAT_VERSION;
use crate::CliError;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub struct OutputDir {
    dir: PathBuf,
    config: serde_json::Value,
}

impl OutputDir {
    pub fn create(dir: &str, config: serde_json::Value) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("cannot create output directory `{dir}`: {e}")))?;
        Ok(Self {
            dir: PathBuf::from(dir),
            config,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes a CSV with `# format_version` / `# config` comment headers.
    pub fn write_csv(
        &self,
        name: &str,
        columns: &[String],
        rows: &[Vec<String>],
    ) -> Result<PathBuf, CliError> {
        let mut text = String::new();
        let _ = writeln!(text, "# format_version: {FORMAT_VERSION}");
        let _ = writeln!(text, "# config: {}", compact(&self.config));
        let _ = writeln!(text, "{}", columns.join(","));
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            let _ = writeln!(text, "{}", row.join(","));
        }
        let path = self.path(name);
        write_file(&path, &text)?;
        Ok(path)
    }

    /// Writes a JSON document wrapped with format version and config.
    pub fn write_json<T: serde::Serialize>(
        &self,
        name: &str,
        payload: &T,
    ) -> Result<PathBuf, CliError> {
        let doc = serde_json::json!({
            "format_version": FORMAT_VERSION,
            "config": self.config,
            "report": payload,
        });
        let path = self.path(name);
        let text = serde_json::to_string_pretty(&doc)
            .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
        write_file(&path, &(text + "\n"))?;
        Ok(path)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write `{}`: {e}", path.display())))
}

fn compact(v: &serde_json::Value) -> String {
    serde_json::to_string(v).expect("config serializes")
}

/// Shortest round-trip float formatting shared by all CSV writers.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_vec(v: &[f64]) -> Vec<String> {
    v.iter().map(|&x| fmt(x)).collect()
}
