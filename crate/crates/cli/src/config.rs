use std::path::{Path, PathBuf};

use gml_core::cohort::{CohortConfig, Hyper, MemberConfig, PenaltySign, Variant};
use gml_core::graphdata::{FeatureSource, GRAPH_SPLIT, NODE_SPLIT};
use gml_core::models::{Architecture, ModelSpec, Task};
use gml_core::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Environment variable holding the dataset root directory.
pub const DATA_DIR_VAR: &str = "GML_DATA_DIR";

/// Path prefix for datasets compiled into the binary.
pub const BUILTIN: &str = "builtin:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seeds: Vec<u64>,
    pub data: DataConfig,
    pub cohort: CohortSection,
    #[serde(default)]
    pub bench: BenchConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    /// `<name>.content` and `<name>.cites` in `path`.
    Citation,
    /// `features.csv`, `labels.csv`, `edges.csv` in `path`.
    CsvTriplet,
    /// TU graph-classification directory.
    Tu,
    /// Feature table with a label column; the graph comes from `graph`.
    Tabular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    /// No edges.
    None,
    /// Independent edges with probability `p`.
    Random { p: f64 },
    /// Preferential attachment with `m` edges per new node.
    BarabasiAlbert { m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub format: DataFormat,
    /// Relative to the dataset root unless absolute or `builtin:`.
    pub path: String,
    /// File stem for the citation format.
    #[serde(default)]
    pub stem: Option<String>,
    #[serde(default)]
    pub label_column: Option<String>,
    #[serde(default)]
    pub features: FeatureSource,
    #[serde(default)]
    pub graph: Option<GraphSource>,
    /// Laplace noise scale added to the features.
    #[serde(default)]
    pub noise: f64,
    /// Train/validation/test fractions; task default when absent.
    #[serde(default)]
    pub split: Option<[f64; 3]>,
    /// Fixed split seed; when absent every run seed draws its own split.
    #[serde(default)]
    pub split_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSection {
    pub members: Vec<Architecture>,
    #[serde(default)]
    pub target: usize,
    pub variant: Variant,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub temperature: Option<f64>,
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub weight_hidden: Option<usize>,
    #[serde(default)]
    pub graph_aware: bool,
    #[serde(default)]
    pub penalty_sign: PenaltySign,
    #[serde(default)]
    pub dropout: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_sizes")]
    pub cohort_sizes: Vec<usize>,
    #[serde(default = "default_scales")]
    pub noise_scales: Vec<f64>,
    #[serde(default = "default_noise_variants")]
    pub noise_variants: Vec<Variant>,
    /// Edge probability of the random graph in the structure sweep.
    #[serde(default = "default_random_p")]
    pub random_p: f64,
    /// Attachment count of the preferential-attachment graph.
    #[serde(default = "default_ba_m")]
    pub ba_m: usize,
    #[serde(default = "default_ensemble_sizes")]
    pub ensemble_sizes: Vec<usize>,
}

fn default_sizes() -> Vec<usize> {
    vec![1, 2, 3, 5]
}
fn default_scales() -> Vec<f64> {
    vec![0.0, 0.1, 0.3, 0.5, 0.9]
}
fn default_noise_variants() -> Vec<Variant> {
    vec![Variant::GmlC, Variant::Gml, Variant::Ind]
}
fn default_random_p() -> f64 {
    0.04
}
fn default_ba_m() -> usize {
    3
}
fn default_ensemble_sizes() -> Vec<usize> {
    vec![1, 2, 3, 5]
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            cohort_sizes: default_sizes(),
            noise_scales: default_scales(),
            noise_variants: default_noise_variants(),
            random_p: default_random_p(),
            ba_m: default_ba_m(),
            ensemble_sizes: default_ensemble_sizes(),
        }
    }
}

impl DataConfig {
    pub fn task(&self) -> Task {
        if self.format == DataFormat::Tu {
            Task::Graph
        } else {
            Task::Node
        }
    }

    pub fn split_ratios(&self) -> [f64; 3] {
        self.split.unwrap_or(match self.task() {
            Task::Node => NODE_SPLIT,
            Task::Graph => GRAPH_SPLIT,
        })
    }

    pub fn is_builtin(&self) -> bool {
        self.path.starts_with(BUILTIN)
    }

    /// Absolute location of the dataset; `None` for builtin data.
    pub fn resolve(&self, root: Option<&Path>) -> Result<Option<PathBuf>, CliError> {
        if self.is_builtin() {
            return Ok(None);
        }
        let p = Path::new(&self.path);
        let full = if p.is_absolute() {
            p.to_path_buf()
        } else {
            match root {
                Some(r) => r.join(p),
                None => {
                    return Err(CliError::Config(format!(
                        "data.path {:?} is relative and {} is not set",
                        self.path, DATA_DIR_VAR
                    )))
                }
            }
        };
        if !full.exists() {
            return Err(CliError::Config(format!("data.path: {} does not exist", full.display())));
        }
        Ok(Some(full))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{:02x}", b)).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds: at least one seed is required".into());
        }
        if self.cohort.members.is_empty() {
            return bad("cohort.members: at least one member is required".into());
        }
        if self.data.format == DataFormat::Tabular && self.data.label_column.is_none() {
            return bad("data.label_column: required for tabular data".into());
        }
        if self.data.format == DataFormat::Citation && self.data.stem.is_none() {
            return bad("data.stem: required for citation data".into());
        }
        if !(self.data.noise >= 0.0 && self.data.noise.is_finite()) {
            return bad(format!("data.noise: must be finite and >= 0, got {}", self.data.noise));
        }
        if let Some(s) = self.data.split {
            if s.iter().any(|r| !(*r >= 0.0)) || s.iter().sum::<f64>() > 1.0 + 1e-9 {
                return bad(format!("data.split: fractions {:?} must be >= 0 and sum to at most 1", s));
            }
        }
        if !(self.cohort.dropout >= 0.0 && self.cohort.dropout < 1.0) {
            return bad(format!("cohort.dropout: must lie in [0, 1), got {}", self.cohort.dropout));
        }
        // dimensions are placeholders; only the hyperparameters are checked here
        self.cohort_config(1, 2, 0)
            .validate()
            .map_err(|e| CliError::Config(format!("cohort.{}", strip_prefix(&e.to_string()))))
    }

    pub fn hyper(&self) -> Hyper {
        let c = &self.cohort;
        let d = Hyper::standard(self.data.task());
        Hyper {
            gamma: c.gamma.unwrap_or(d.gamma),
            beta: c.beta.unwrap_or(d.beta),
            temperature: c.temperature.unwrap_or(d.temperature),
            learning_rate: c.learning_rate.unwrap_or(d.learning_rate),
            weight_decay: c.weight_decay.unwrap_or(d.weight_decay),
            max_epochs: c.max_epochs.unwrap_or(d.max_epochs),
            patience: c.patience.unwrap_or(d.patience),
            weight_hidden: c.weight_hidden.unwrap_or(d.weight_hidden),
        }
    }

    pub fn spec(&self, arch: Architecture, input_dim: usize, num_classes: usize) -> ModelSpec {
        ModelSpec { dropout: self.cohort.dropout, ..ModelSpec::standard(arch, self.data.task(), input_dim, num_classes) }
    }

    /// Cohort for one run seed. Member seeds are drawn from the run seed.
    pub fn cohort_config(&self, input_dim: usize, num_classes: usize, seed: u64) -> CohortConfig {
        self.cohort_with(&self.cohort.members, self.cohort.variant, input_dim, num_classes, seed)
    }

    /// Like [`Self::cohort_config`] with a different member list and variant.
    pub fn cohort_with(
        &self,
        members: &[Architecture],
        variant: Variant,
        input_dim: usize,
        num_classes: usize,
        seed: u64,
    ) -> CohortConfig {
        let members = members
            .iter()
            .enumerate()
            .map(|(k, &a)| MemberConfig { spec: self.spec(a, input_dim, num_classes), seed: member_seed(seed, k) })
            .collect();
        let mut cfg = CohortConfig::new(members, variant, self.hyper());
        cfg.target_index = self.cohort.target;
        cfg.graph_aware = self.cohort.graph_aware;
        cfg.penalty_sign = self.cohort.penalty_sign;
        cfg
    }

    pub fn split_seed(&self, run_seed: u64) -> u64 {
        self.data.split_seed.unwrap_or(run_seed)
    }
}

fn strip_prefix(msg: &str) -> String {
    msg.strip_prefix("configuration error: ").unwrap_or(msg).to_string()
}

/// Initialization seed of member `k` under a run seed.
pub fn member_seed(run_seed: u64, k: usize) -> u64 {
    SplitMix64::stream(run_seed, 100 + k as u64).next_u64()
}

/// Seed of auxiliary randomness (noise, generated graphs) under a run seed.
pub fn aux_seed(run_seed: u64, stream: u64) -> u64 {
    SplitMix64::stream(run_seed, stream).next_u64()
}
