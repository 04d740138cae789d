//! Snapshot CSV files and run manifests.
//!
//! A snapshot file is a `# t=<time>` comment line, a header (`x,u`, `x,F`
//! or `x,K`) and one row per node. Numbers are written with 17 significant
//! digits, so reading a file back reproduces every value bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::grid::Grid1D;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {reason}")]
    Format { path: PathBuf, line: usize, reason: String },
    #[error("{path}: {reason}")]
    Json { path: PathBuf, reason: String },
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs { path: path.to_path_buf(), source }
}

/// One column of samples against `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotCsv {
    pub t: f64,
    pub column: String,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

impl SnapshotCsv {
    pub fn from_grid(t: f64, column: &str, grid: &Grid1D, values: &[f64]) -> Self {
        Self { t, column: column.to_string(), x: grid.nodes().collect(), values: values.to_vec() }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# t={}\nx,{}\n", format_number(self.t), self.column);
        for (x, v) in self.x.iter().zip(&self.values) {
            s.push_str(&format_number(*x));
            s.push(',');
            s.push_str(&format_number(*v));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, IoError> {
        let bad = |line: usize, reason: String| IoError::Format { path: path.to_path_buf(), line, reason };
        let mut lines = text.lines().enumerate();
        let (_, first) = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
        let t = first
            .strip_prefix("# t=")
            .ok_or_else(|| bad(1, "expected '# t=<time>'".into()))?
            .trim()
            .parse::<f64>()
            .map_err(|e| bad(1, e.to_string()))?;
        let (_, header) = lines.next().ok_or_else(|| bad(2, "missing header".into()))?;
        let column = header
            .strip_prefix("x,")
            .filter(|c| !c.is_empty() && !c.contains(','))
            .ok_or_else(|| bad(2, format!("expected header 'x,<name>', got '{header}'")))?
            .to_string();
        let (mut x, mut values) = (Vec::new(), Vec::new());
        for (k, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (a, b) = line.split_once(',').ok_or_else(|| bad(k + 1, "expected two columns".into()))?;
            x.push(a.trim().parse().map_err(|e| bad(k + 1, format!("{e}")))?);
            values.push(b.trim().parse().map_err(|e| bad(k + 1, format!("{e}")))?);
        }
        Ok(Self { t, column, x, values })
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        fs::write(path, self.to_text()).map_err(fs_err(path))
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path).map_err(fs_err(path))?;
        Self::parse(&text, path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub index: usize,
    pub t: f64,
    /// Relative to the manifest's directory.
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature_file: Option<String>,
}

/// Everything needed to reproduce and audit one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Flat echo of every parameter, defaults included.
    pub config: Json,
    pub initial_condition: Json,
    pub snapshots: Vec<SnapshotEntry>,
    #[serde(default)]
    pub reports: serde_json::Map<String, Json>,
    #[serde(default)]
    pub sensitivity_refs: Vec<String>,
    #[serde(default)]
    pub stats: Json,
    /// Excluded from reproducibility comparisons.
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn new(command: &str, config: Json, initial_condition: Json) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            initial_condition,
            snapshots: Vec::new(),
            reports: serde_json::Map::new(),
            sensitivity_refs: Vec::new(),
            stats: Json::Null,
            wall_clock_seconds: 0.0,
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, IoError> {
        let path = dir.join(Self::FILE_NAME);
        fs::write(&path, self.to_json_string()).map_err(fs_err(&path))?;
        Ok(path)
    }

    /// `path` may be the manifest file or the run directory.
    pub fn read(path: &Path) -> Result<(Self, PathBuf), IoError> {
        let file = if path.is_dir() { path.join(Self::FILE_NAME) } else { path.to_path_buf() };
        let text = fs::read_to_string(&file).map_err(fs_err(&file))?;
        let m = serde_json::from_str(&text).map_err(|e| IoError::Json { path: file.clone(), reason: e.to_string() })?;
        let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((m, dir))
    }

    pub fn raw_json(&self) -> Json {
        serde_json::to_value(self).expect("manifest serializes")
    }
}
