//! Output directory handling. Files are written sequentially; CSV files get
//! an optional timestamp comment as their first line.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::Format;

pub struct Output {
    dir: PathBuf,
    formats: BTreeSet<Format>,
    header: Option<String>,
    quiet: bool,
    written: Vec<PathBuf>,
}

impl Output {
    /// Creates the directory and checks that it is writable before any
    /// computation starts.
    pub fn prepare(dir: &Path, formats: &[Format], timestamp: bool, quiet: bool) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        let probe = dir.join(".mixgeo-write-probe");
        std::fs::write(&probe, b"").with_context(|| format!("output directory {} is not writable", dir.display()))?;
        std::fs::remove_file(&probe).ok();
        let header = timestamp.then(|| {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            format!("# generated by mixgeo {} at unix time {secs}\n", env!("CARGO_PKG_VERSION"))
        });
        Ok(Output {
            dir: dir.to_path_buf(),
            formats: formats.iter().copied().collect(),
            header,
            quiet,
            written: Vec::new(),
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Prints to stdout unless quiet.
    pub fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, body: &str) -> Result<()> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let text = match &self.header {
            Some(h) => format!("{h}{body}"),
            None => body.to_string(),
        };
        self.write(name, &text)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if !self.wants(Format::Json) {
            return Ok(());
        }
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn svg(&mut self, name: &str, doc: &str) -> Result<()> {
        if !self.wants(Format::Svg) {
            return Ok(());
        }
        self.write(name, doc)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Shortest decimal string that parses back to the same f64.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Joins a row of numbers with commas.
pub fn row(vals: &[f64]) -> String {
    vals.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}
