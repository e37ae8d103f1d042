use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Everything that determines the numeric output of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: String,
    pub config_sha256: String,
    pub command: String,
    pub seed: u64,
    pub dt: f64,
    pub t_final: f64,
    pub n_trajectories: usize,
    pub fock_dim: usize,
    pub versions: Versions,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub lintraj: &'static str,
    pub cli: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Versions { lintraj: lintraj::VERSION, cli: env!("CARGO_PKG_VERSION") }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files under one directory, each stamped with the manifest hash.
pub struct Sink {
    dir: PathBuf,
    hash: String,
}

impl Sink {
    pub fn new(dir: &Path, manifest: &RunManifest) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let text = serde_json::to_string_pretty(manifest)?;
        let hash = sha256_hex(text.as_bytes());
        let sink = Sink { dir: dir.to_path_buf(), hash };
        sink.json("manifest.json", manifest)?;
        Ok(sink)
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// JSON has no comments, so the hash rides along as a top-level field.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut v = serde_json::to_value(value)?;
        if let serde_json::Value::Object(map) = &mut v {
            map.insert("manifest_sha256".into(), self.hash.clone().into());
        }
        let path = self.path(name)?;
        fs::write(&path, serde_json::to_string_pretty(&v)? + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// CSV with a `# manifest_sha256 <hex>` header line; floats at 17 significant digits.
    pub fn csv(&self, name: &str, header: &[String], rows: &[Vec<Cell>]) -> Result<PathBuf> {
        let path = self.path(name)?;
        let mut f = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        writeln!(f, "# manifest_sha256 {}", self.hash)?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(path)
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:.16e}"),
        }
    }
}
