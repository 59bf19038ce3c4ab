use std::path::{Path, PathBuf};

use rassoc_core::analysis::ExportFormat;
use rassoc_core::{Caps, Error, Result};

/// Settings shared by every subcommand. Read from an optional `key = value`
/// file, then overridden by flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub precision_bits: u32,
    pub output: Option<PathBuf>,
    pub format: ExportFormat,
    pub caps: Caps,
    /// Worker threads; 0 lets rayon decide.
    pub parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            precision_bits: rassoc_core::prec::DEFAULT_PRECISION,
            output: None,
            format: ExportFormat::Csv,
            caps: Caps::default(),
            parallelism: 0,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad value {value:?} for {key}")))
}

impl RunConfig {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {line}: expected key = value")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "precision_bits" => cfg.precision_bits = parse_value(key, value, line)?,
                "output" | "output_path" => cfg.output = Some(PathBuf::from(value)),
                "format" => cfg.format = value.parse()?,
                "max_p" => cfg.caps.max_p = parse_value(key, value, line)?,
                "max_a" => cfg.caps.max_a = parse_value(key, value, line)?,
                "max_n" | "max_N" => cfg.caps.max_n = parse_value(key, value, line)?,
                "parallelism" => cfg.parallelism = parse_value(key, value, line)?,
                other => return Err(Error::Parse(format!("line {line}: unknown key {other:?}"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.precision_bits < 64 {
            return Err(Error::Domain(format!(
                "precision_bits must be ≥ 64, got {}",
                self.precision_bits
            )));
        }
        if self.caps.max_p == 0 || self.caps.max_a == 0 || self.caps.max_n == 0 {
            return Err(Error::Domain("caps must be positive".into()));
        }
        Ok(())
    }
}
