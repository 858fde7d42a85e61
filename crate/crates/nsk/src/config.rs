//! Run configuration.
//!
//! A config file is flat TOML; every key is optional. Each value used by a
//! run is resolved as flag > file > built-in default (the seed additionally
//! falls back to `NSK_SEED` before the default 0). The resolved values are
//! recorded in the output header together with a hash of them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::Header;

pub const SEED_ENV: &str = "NSK_SEED";

/// Keys accepted in a config file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub sigma_a: Option<f64>,
    pub sigma_w: Option<f64>,
    pub sigma_b: Option<f64>,
    pub activation: Option<String>,
    pub mode: Option<String>,
    pub width: Option<usize>,
    pub widths: Option<Vec<usize>>,
    pub depth: Option<usize>,
    pub depths: Option<Vec<usize>>,
    pub reference_depth: Option<usize>,
    pub realizations: Option<usize>,
    pub steps: Option<usize>,
    pub method: Option<String>,
    pub grid: Option<usize>,
    pub samples: Option<usize>,
    pub quadrature: Option<usize>,
    pub level: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            path: source.to_path_buf(),
            message: e.message().to_string(),
        })
    }
}

/// The first of flag, file value and default that is present.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Seed precedence: flag, file, `NSK_SEED`, 0.
pub fn resolve_seed(flag: Option<u64>, file: &FileConfig, env: Option<&str>) -> Result<u64> {
    if let Some(s) = flag.or(file.seed) {
        return Ok(s);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        None => Ok(0),
    }
}

/// The values a run actually used, in a canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub seed: u64,
    values: BTreeMap<String, Value>,
}

impl Resolved {
    pub fn new(command: &str, seed: u64) -> Self {
        let mut values = BTreeMap::new();
        values.insert("command".to_string(), Value::from(command));
        values.insert("seed".to_string(), Value::from(seed));
        Self { seed, values }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).expect("config values serialize");
        self.values.insert(key.to_string(), v);
        self
    }

    pub fn set_path(&mut self, key: &str, path: &Path) -> &mut Self {
        self.set(key, path.display().to_string())
    }

    pub fn set_paths(&mut self, key: &str, paths: &[PathBuf]) -> &mut Self {
        self.set(key, paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>())
    }

    pub fn json(&self) -> String {
        serde_json::to_string(&self.values).expect("config values serialize")
    }

    /// First 16 hex digits of the SHA-256 of [`Resolved::json`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.json().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn header(&self) -> Header {
        Header {
            seed: self.seed,
            config_json: self.json(),
            config_hash: self.hash(),
        }
    }

    pub fn values(&self) -> &BTreeMap<String, Value> {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let file = FileConfig {
            seed: Some(5),
            ..Default::default()
        };
        assert_eq!(resolve_seed(Some(9), &file, Some("3")).unwrap(), 9);
        assert_eq!(resolve_seed(None, &file, Some("3")).unwrap(), 5);
        assert_eq!(resolve_seed(None, &FileConfig::default(), Some("3")).unwrap(), 3);
        assert_eq!(resolve_seed(None, &FileConfig::default(), None).unwrap(), 0);
        assert!(resolve_seed(None, &FileConfig::default(), Some("x")).is_err());
        assert_eq!(pick(None, Some(2), 1), 2);
        assert_eq!(pick(Some(3), Some(2), 1), 3);
    }

    #[test]
    fn parse_file() {
        let c = FileConfig::parse("seed = 4\nsigma_w = 1.5\nwidths = [10, 20]\n", Path::new("c.toml")).unwrap();
        assert_eq!(c.seed, Some(4));
        assert_eq!(c.sigma_w, Some(1.5));
        assert_eq!(c.widths, Some(vec![10, 20]));
        assert!(FileConfig::parse("bogus = 1\n", Path::new("c.toml")).is_err());
    }

    #[test]
    fn hash_depends_on_values_not_insertion_order() {
        let mut a = Resolved::new("x", 1);
        a.set("width", 10).set("depth", 20);
        let mut b = Resolved::new("x", 1);
        b.set("depth", 20).set("width", 10);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        b.set("depth", 21);
        assert_ne!(a.hash(), b.hash());
    }
}
