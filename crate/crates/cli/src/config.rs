use serde::{Deserialize, Serialize};

/// Everything needed to reproduce a run; embedded in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub model: ModelSource,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub triples: Vec<[String; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ortho: Option<OrthoConfig>,
    pub out: Option<String>,
    pub format: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSource {
    Builtin { name: String },
    File { path: String },
    /// `report` aggregates a directory and has no model of its own.
    Reports { dir: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub z_max: f64,
    pub grid: Vec<String>,
    pub k_max: usize,
    /// Thread count; results do not depend on it.
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthoConfig {
    pub times: Vec<String>,
    pub transitional: Vec<[String; 3]>,
    pub k_marginal: usize,
    pub k_transitional: usize,
}
