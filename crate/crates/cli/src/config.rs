//! JSON configuration documents.

use std::path::Path;

use phfem::analysis::Method;
use phfem::{CausalitySpec, SegmentSpec, SimConfig, WeightsConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshConfig {
    /// `n × m` cells of size `h`.
    Rect {
        n: usize,
        m: usize,
        #[serde(default = "one")]
        h: f64,
    },
    /// Chain of `n` edges on the unit interval.
    Interval { n: usize },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HodgeMode {
    #[default]
    Diagonal,
}

/// Input of `build`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    pub mesh: MeshConfig,
    /// 2D only; defaults to q-inputs on the whole boundary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub causality: Option<CausalitySpec>,
    /// 2D only; defaults to `set4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsConfig>,
    /// 1D only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    /// 1D flow-map parameter of `ours`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// 1D effort-averaging parameter of `golo`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_prime: Option<f64>,
    #[serde(default)]
    pub hodge: HodgeMode,
}

impl BuildConfig {
    pub fn causality_or_default(&self) -> CausalitySpec {
        self.causality.clone().unwrap_or_default()
    }

    pub fn weights_or_default(&self) -> WeightsConfig {
        self.weights.clone().unwrap_or_else(|| WeightsConfig::Preset("set4".into()))
    }

    /// Method and parameter of a 1D build.
    pub fn chain_method(&self) -> CliResult<(Method, f64)> {
        match (self.method.unwrap_or(Method::Ours), self.alpha, self.alpha_prime) {
            (Method::Ours, a, None) => Ok((Method::Ours, a.unwrap_or(0.0))),
            (Method::Golo, None, a) => Ok((Method::Golo, a.unwrap_or(0.0))),
            (Method::Ours, _, Some(_)) => Err(CliError::config("alpha_prime belongs to method 'golo'")),
            (Method::Golo, Some(_), _) => Err(CliError::config("alpha belongs to method 'ours'")),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        match self.mesh {
            MeshConfig::Rect { .. } => {
                if self.method.is_some() || self.alpha.is_some() || self.alpha_prime.is_some() {
                    return Err(CliError::config("method/alpha/alpha_prime apply to interval meshes only"));
                }
            }
            MeshConfig::Interval { .. } => {
                if self.causality.is_some() || self.weights.is_some() {
                    return Err(CliError::config("causality/weights apply to rect meshes only"));
                }
                self.chain_method()?;
            }
        }
        Ok(())
    }
}

/// Initial state of a simulation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    #[default]
    Zero,
    /// Standard normal entries from a seeded ChaCha8 stream.
    Random { seed: u64 },
    Values { values: Vec<f64> },
}

/// Input of `simulate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    #[serde(flatten)]
    pub sim: SimConfig,
    #[serde(default)]
    pub initial_state: InitialState,
}

/// Parses JSON; serde's message carries the line and column.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> CliResult<T> {
    serde_json::from_str(text)
        .map_err(|e| CliError::config(format!("{origin}: {e}")))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::missing(format!("cannot read config {}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

/// The causality of the wave experiment: corner input at the origin.
pub fn corner_causality() -> CausalitySpec {
    CausalitySpec { p_segments: vec![SegmentSpec::Corner(phfem::Corner::BottomLeft)], q_segments: None }
}
