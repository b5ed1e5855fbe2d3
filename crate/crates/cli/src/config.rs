//! Run configuration: defaults, optional TOML file, validation and hashing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance on printed values.
    pub relative: f64,
    /// Absolute tolerance on printed values with five decimals.
    pub absolute: f64,
    /// Absolute tolerance on the edge density constant.
    pub kappa: f64,
    /// Digits of agreement required for exact closed forms.
    pub exact_digits: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            relative: 1e-4,
            absolute: 2e-5,
            kappa: 1e-3,
            exact_digits: 40.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Order in `x` of exact series.
    pub trunc_x: usize,
    /// Order in `y` of exact bivariate series.
    pub trunc_y: usize,
    /// Precision in bits of numeric work.
    pub prec: u32,
    /// Largest vertex count of simple-graph censuses.
    pub oracle_cap: usize,
    /// Largest number of internal vertices of network censuses.
    pub network_cap: usize,
    /// Largest excess of the cubic multigraph census.
    pub excess_cap: usize,
    /// Worker threads; all available when unset. Left out of the echo and
    /// the hash, since results do not depend on it.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    pub cache_dir: PathBuf,
    pub format: Format,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            trunc_x: 20,
            trunc_y: 40,
            prec: 256,
            oracle_cap: sptree_oracle::DEFAULT_CAP,
            network_cap: sptree_oracle::DEFAULT_NETWORK_CAP,
            excess_cap: sptree_oracle::DEFAULT_EXCESS_CAP,
            threads: None,
            cache_dir: PathBuf::from(".sptree-cache"),
            format: Format::Csv,
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.trunc_x < 4 {
            return bad(format!("trunc_x = {} must be at least 4", self.trunc_x));
        }
        // a series-parallel graph on n vertices has at most 2n - 3 edges
        if self.trunc_y < 2 * self.trunc_x {
            return bad(format!(
                "trunc_y = {} must be at least 2 trunc_x = {}",
                self.trunc_y,
                2 * self.trunc_x
            ));
        }
        if !(64..=8192).contains(&self.prec) {
            return bad(format!("prec = {} must lie in [64, 8192]", self.prec));
        }
        if self.oracle_cap > 10 || self.oracle_cap > self.trunc_x {
            return bad(format!("oracle_cap = {} must be at most 10 and at most trunc_x", self.oracle_cap));
        }
        if self.network_cap > 6 || self.network_cap + 2 > self.trunc_x {
            return bad(format!(
                "network_cap = {} must be at most 6 and at most trunc_x - 2",
                self.network_cap
            ));
        }
        if self.excess_cap > 4 {
            return bad(format!("excess_cap = {} must be at most 4", self.excess_cap));
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        let t = &self.tolerances;
        if [t.relative, t.absolute, t.kappa, t.exact_digits]
            .iter()
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return bad("tolerances must be positive and finite".into());
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Rayon pool honouring `threads`.
    pub fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            b = b.num_threads(t);
        }
        b.build().map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_hash_is_stable() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.hash(), RunConfig::default().hash());
        let mut d = c.clone();
        d.prec = 512;
        assert_ne!(c.hash(), d.hash());
        assert_eq!(c.hash().len(), 16);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = RunConfig {
            trunc_y: 10,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = RunConfig {
            threads: Some(0),
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = RunConfig::default();
        c.tolerances.relative = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_overrides_defaults() {
        let c: RunConfig = toml::from_str("prec = 128\n[tolerances]\nkappa = 0.01\n").unwrap();
        assert_eq!(c.prec, 128);
        assert_eq!(c.tolerances.kappa, 0.01);
        assert_eq!(c.trunc_x, 20);
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }
}
