use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Everything needed to re-run a verb. Written next to its artifacts.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, S: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub verb: &'a str,
    pub config_path: Option<String>,
    pub model: Option<&'a mdhopf::ModelSpec>,
    pub tolerances: mdhopf::Tolerances,
    pub seed: u64,
    pub threads: Option<usize>,
    pub settings: &'a S,
    pub outputs: Vec<String>,
}

pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.root.join(name)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn csv(&mut self, name: &str) -> Result<csv::Writer<fs::File>> {
        let path = self.path(name);
        csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))
    }

    pub fn written(&self) -> Vec<String> {
        self.written.clone()
    }
}
