use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// Output directory that remembers what was written, for the run manifest.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write<F>(&mut self, name: &str, f: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> dlp_eval_core::Result<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush()?;
        println!("wrote {}", path.display());
        self.written.push(name.to_string());
        Ok(path)
    }

    pub fn write_str(&mut self, name: &str, content: &str) -> Result<PathBuf> {
        self.write(name, |w| Ok(w.write_all(content.as_bytes())?))
    }

    /// Writes `manifest.json`: the resolved configuration, derived values such
    /// as the cutoff, and the list of files produced.
    pub fn finish<T: Serialize>(mut self, command: &str, config: &T, resolved: Value) -> Result<()> {
        let outputs = self.written.clone();
        let manifest = json!({
            "tool": "dlp-eval",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": config,
            "resolved": resolved,
            "outputs": outputs,
        });
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        self.write_str("manifest.json", &text)?;
        Ok(())
    }
}
