//! CSV tables, checksums and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::CliError;

/// A table held in memory until the run completes.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub text: String,
}

impl Table {
    /// Starts a table with its one-line axis header.
    pub fn new(name: impl Into<String>, header: &str) -> Self {
        let mut text = String::with_capacity(4096);
        text.push_str(header);
        text.push('\n');
        Table {
            name: name.into(),
            text,
        }
    }

    pub fn row<I>(&mut self, fields: I)
    where
        I: IntoIterator,
        I::Item: std::fmt::Display,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.text.push(',');
            }
            first = false;
            write!(self.text, "{f}").expect("writing to a string");
        }
        self.text.push('\n');
    }
}

#[derive(Serialize)]
struct OutputEntry<'a> {
    file: &'a str,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    toolkit: &'a str,
    version: &'a str,
    experiment: &'a str,
    wall_clock_seconds: f64,
    notes: &'a [String],
    config: &'a Config,
    outputs: Vec<OutputEntry<'a>>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub const MANIFEST_NAME: &str = "manifest.toml";

/// Writes every table and then the manifest that lists exactly those files.
pub fn write_run(
    dir: &Path,
    cfg: &Config,
    tables: &[Table],
    notes: &[String],
    seconds: f64,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let mut outputs = Vec::with_capacity(tables.len());
    for t in tables {
        let path = dir.join(&t.name);
        fs::write(&path, t.text.as_bytes())
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        outputs.push(OutputEntry {
            file: &t.name,
            sha256: sha256_hex(t.text.as_bytes()),
        });
    }
    let manifest = Manifest {
        toolkit: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.name(),
        wall_clock_seconds: seconds,
        notes,
        config: cfg,
        outputs,
    };
    let text = toml::to_string(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    let path = dir.join(MANIFEST_NAME);
    fs::write(&path, text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let mut t = Table::new("a.csv", "k,omega");
        t.row([0.5, -1.0]);
        t.row(["x", "y"]);
        assert_eq!(t.text, "k,omega\n0.5,-1\nx,y\n");
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
