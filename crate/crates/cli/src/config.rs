use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use takeup_core::selection::{Filter, SelectionConfig};
use takeup_core::synthgen::SyntheticDgp;

use crate::error::{io_error, CliError, CliResult, Kind};

/// Environment variable naming the default configuration directory.
pub const CONFIG_DIR_ENV: &str = "TAKEUP_CONFIG_DIR";
pub const CONFIG_FILE: &str = "takeup.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub filters: Vec<String>,
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection {
            filters: Filter::DEFAULT_ORDER.iter().map(|f| f.name().to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSection {
    pub nodes: usize,
    pub adaptive: bool,
    /// Pooled probit instead of random effects.
    pub pooled: bool,
    pub cluster_robust: bool,
}

impl Default for EstimateSection {
    fn default() -> Self {
        EstimateSection {
            nodes: 32,
            adaptive: false,
            pooled: false,
            cluster_robust: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    /// Number of equal-width gap categories.
    pub gap_bins: usize,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection { gap_bins: 11 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub synthgen: SyntheticDgp,
    pub selection: SelectionSection,
    pub estimate: EstimateSection,
    pub metrics: MetricsSection,
}

impl RunConfig {
    pub fn selection_config(&self) -> CliResult<SelectionConfig> {
        Ok(SelectionConfig::from_names(&self.selection.filters)?)
    }
}

pub struct LoadedConfig {
    pub config: RunConfig,
    /// File the configuration came from, if any.
    pub path: Option<PathBuf>,
    pub text: Option<String>,
}

pub fn config_dir() -> Option<PathBuf> {
    std::env::var_os(CONFIG_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// Reads `explicit`, else `takeup.toml` in the configuration directory,
/// else falls back to defaults.
pub fn load(explicit: Option<&Path>) -> CliResult<LoadedConfig> {
    let path = match explicit {
        Some(p) => {
            if !p.is_file() {
                return Err(CliError::new(Kind::Config, format!("config file not found: {}", p.display())));
            }
            Some(p.to_path_buf())
        }
        None => config_dir().map(|d| d.join(CONFIG_FILE)).filter(|p| p.is_file()),
    };
    match path {
        None => Ok(LoadedConfig { config: RunConfig::default(), path: None, text: None }),
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| io_error(&p, e))?;
            let config: RunConfig = toml::from_str(&text)
                .map_err(|e| CliError::new(Kind::Config, format!("{}: {}", p.display(), e.message())))?;
            Ok(LoadedConfig { config, path: Some(p), text: Some(text) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.selection_config().unwrap(), SelectionConfig::default());
    }

    #[test]
    fn partial_sections() {
        let c: RunConfig = toml::from_str("[estimate]\nnodes = 12\n[synthgen]\nhouseholds = 9\n").unwrap();
        assert_eq!(c.estimate.nodes, 12);
        assert_eq!(c.synthgen.households, 9);
        assert!(toml::from_str::<RunConfig>("[bogus]\n").is_err());
    }
}
