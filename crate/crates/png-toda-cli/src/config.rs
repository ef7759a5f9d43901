//! Run configuration: one TOML or JSON file per run plus flag overrides.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use png_toda::ProfileSpec;

/// File-level configuration; every field can be overridden by a flag.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub initial: Option<ProfileSpec>,
    pub t: Option<Vec<f64>>,
    pub xs: Option<Vec<f64>>,
    pub rs: Option<Vec<i64>>,
    pub r_min: Option<i64>,
    pub r_max: Option<i64>,
    pub s: Option<Vec<f64>>,
    pub n_samples: Option<usize>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub block_size: Option<usize>,
    pub buffer: Option<i64>,
    pub delta: Option<f64>,
    pub threads: Option<usize>,
    pub format: Option<String>,
    pub family: Option<String>,
    pub kind: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext {
            "json" => serde_json::from_str(&text)
                .with_context(|| format!("invalid JSON config {}", path.display())),
            "toml" | "" => toml::from_str(&text)
                .with_context(|| format!("invalid TOML config {}", path.display())),
            other => bail!("unsupported config extension {other:?} (use .toml or .json)"),
        }
    }
}

/// Resolved options common to all subcommands.
#[derive(Debug, Clone)]
pub struct Common {
    pub seed: u64,
    pub tolerance: f64,
    pub block_size: usize,
    pub buffer: i64,
    pub delta: f64,
    pub n_samples: usize,
}

impl Common {
    pub fn resolve(file: &FileConfig, seed: Option<u64>) -> Common {
        Common {
            seed: seed.or(file.seed).unwrap_or(0),
            tolerance: file.tolerance.unwrap_or(1e-8),
            block_size: file.block_size.unwrap_or(60),
            buffer: file.buffer.unwrap_or(40),
            delta: file.delta.unwrap_or(1e-2),
            n_samples: file.n_samples.unwrap_or(200_000),
        }
    }
}

/// Validates strictly increasing evaluation points.
pub fn check_xs(xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        bail!("at least one evaluation point is required (--x)");
    }
    for pair in xs.windows(2) {
        if pair[0] >= pair[1] {
            bail!(
                "evaluation points must be strictly increasing, got {} then {}",
                pair[0],
                pair[1]
            );
        }
    }
    Ok(())
}
