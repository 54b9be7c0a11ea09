use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::devices::NoiseModel;
use crate::engine::EngineConfig;
use crate::error::{Error, Result};

/// Input locations. Relative paths are taken as given (relative to the
/// working directory).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// Dataset directory; see [`crate::io::resolve_data_dir`].
    pub data_dir: Option<PathBuf>,
    /// Input image for the image pipelines.
    pub image: Option<PathBuf>,
    /// Trained weights (fcspec or detector CSV).
    pub weights: Option<PathBuf>,
}

/// Everything a CLI run needs. Unknown keys are rejected and every missing
/// key takes its default, so `to_json` always writes the complete schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub engine: EngineConfig,
    /// When false the engine runs without any impairment.
    pub noise_enabled: bool,
    /// Master seed: noise substreams, training shuffles and test subsets.
    pub seed: u64,
    pub paths: PathsConfig,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            engine: EngineConfig::default(),
            noise_enabled: true,
            seed: 0,
            paths: PathsConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.engine.validate()?;
        Ok(cfg)
    }

    /// Parses `path` and checks that every referenced input exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg = Self::from_json(&text)?;
        for (name, p) in [
            ("paths.data_dir", &cfg.paths.data_dir),
            ("paths.image", &cfg.paths.image),
            ("paths.weights", &cfg.paths.weights),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::Data(format!(
                        "{name} {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Engine settings with the run's seed and noise switch applied.
    pub fn engine_config(&self) -> EngineConfig {
        let mut cfg = self.engine;
        cfg.noise = if self.noise_enabled {
            cfg.noise.with_seed(self.seed)
        } else {
            NoiseModel::disabled()
        };
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::Fidelity;

    #[test]
    fn empty_object_materializes_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let again = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
        assert!(cfg.to_json().contains("\"bias_drift_std\""));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            RunConfig::from_json(r#"{"sed": 3}"#),
            Err(Error::Config(_))
        ));
        assert!(RunConfig::from_json(r#"{"engine": {"laser": {"power": 1}}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"engine": {"voa": {"alpha": 2.0}}}"#).is_err());
    }

    #[test]
    fn partial_override() {
        let cfg =
            RunConfig::from_json(r#"{"seed": 9, "engine": {"fidelity": "physical"}}"#).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.engine.fidelity, Fidelity::Physical);
        assert_eq!(cfg.engine_config().noise.rng_seed, 9);
        let quiet = RunConfig {
            noise_enabled: false,
            ..cfg
        };
        assert!(quiet.engine_config().noise.is_silent());
    }
}
