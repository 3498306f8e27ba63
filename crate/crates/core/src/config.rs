//! Shared TOML configuration. Every section and key is optional; omitted
//! values take their defaults.
//!
//! ```toml
//! [model]
//! tongue_center = 12.0
//!
//! [build]
//! linearity_threshold = 0.3
//!
//! [constraints]
//! margin_fraction = 0.5
//! weights = { dorsum = 1.0, opening = 1.0, stretch = 0.0, protrusion = 1.0 }
//!
//! [constraints.table]
//! u = "D8 O1 S1 P4"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::acoustics::AcousticConfig;
use crate::codebook::BuildConfig;
use crate::constraints::{ConstraintSpec, ConstraintTable, SpecOptions};
use crate::error::{Error, Result};
use crate::forward::Synthesizer;
use crate::inversion::InversionOptions;
use crate::model::ModelConfig;
use crate::partition::PartitionMode;
use crate::vowel::Vowel;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelConfig,
    pub acoustic: AcousticConfig,
    pub build: BuildConfig,
    pub constraints: ConstraintConfig,
    pub calibration: CalibrationConfig,
    pub inversion: InversionOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TypeWeights {
    pub dorsum: f64,
    pub opening: f64,
    pub stretch: f64,
    pub protrusion: f64,
}

impl Default for TypeWeights {
    fn default() -> Self {
        let [dorsum, opening, stretch, protrusion] = SpecOptions::default().weights;
        TypeWeights { dorsum, opening, stretch, protrusion }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintConfig {
    pub margin_fraction: f64,
    pub decay_factor: f64,
    pub weights: TypeWeights,
    /// Row overrides keyed by vowel symbol, e.g. `i = "D6 O1 S4 P1"`.
    pub table: BTreeMap<String, String>,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        let o = SpecOptions::default();
        ConstraintConfig {
            margin_fraction: o.margin_fraction,
            decay_factor: o.decay_factor,
            weights: TypeWeights::default(),
            table: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub samples_per_vowel: usize,
    pub mode: PartitionMode,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig { samples_per_vowel: 200, mode: PartitionMode::Weighted }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.acoustic.validate()?;
        self.build.validate()?;
        self.inversion.validate()?;
        self.table()?;
        Ok(())
    }

    pub fn synthesizer(&self) -> Result<Synthesizer> {
        Synthesizer::new(self.model.clone(), self.acoustic.clone())
    }

    /// The default classification table with any row overrides applied.
    pub fn table(&self) -> Result<ConstraintTable> {
        let mut table = ConstraintTable::default();
        for (symbol, row) in &self.constraints.table {
            let vowel: Vowel = symbol.parse()?;
            table.set_row(vowel, ConstraintTable::parse_row(row)?)?;
        }
        Ok(table)
    }

    pub fn spec(&self) -> Result<ConstraintSpec> {
        let c = &self.constraints;
        let w = c.weights;
        let opts = SpecOptions {
            margin_fraction: c.margin_fraction,
            decay_factor: c.decay_factor,
            weights: [w.dorsum, w.opening, w.stretch, w.protrusion],
        };
        ConstraintSpec::with_options(&self.table()?, &self.model, &opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn round_trip() {
        let mut cfg = Config::default();
        cfg.model.tongue_center = 11.25;
        cfg.build.max_depth = 2;
        cfg.constraints.table.insert("u".into(), "D8 O1 S1 P3".into());
        cfg.calibration.mode = PartitionMode::Voronoi;
        assert_eq!(Config::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_rows() {
        assert!(Config::from_toml("[model]\nbogus = 1\n").is_err());
        assert!(Config::from_toml("[constraints.table]\nx = \"D6 O1 S1 P1\"\n").is_err());
        assert!(Config::from_toml("[constraints.table]\ni = \"D6 O9 S1 P1\"\n").is_err());
        assert!(Config::from_toml("[build]\nlinearity_threshold = -1.0\n").is_err());
    }

    #[test]
    fn row_override_changes_spec() {
        let cfg = Config::from_toml("[constraints.table]\ni = \"D6 O1 S4 P4\"\n").unwrap();
        let spec = cfg.spec().unwrap();
        let base = Config::default().spec().unwrap();
        use crate::constraints::ConstraintType::Protrusion;
        assert!(spec.interval(Vowel::I, Protrusion).target > base.interval(Vowel::I, Protrusion).target);
    }
}
