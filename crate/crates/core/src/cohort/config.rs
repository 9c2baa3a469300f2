use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::models::{ModelSpec, Task};
use crate::{Error, Result};

/// Which mutual-learning terms enter each member's loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Members train independently on the supervised loss.
    Ind,
    /// Supervised loss plus the mean KL divergence to every peer.
    #[serde(rename = "GML")]
    Gml,
    /// GML on adaptively weighted distributions with an L1 penalty.
    #[serde(rename = "GML-W")]
    GmlW,
    /// GML with the confidence penalty.
    #[serde(rename = "GML-C")]
    GmlC,
    /// Weighting and confidence penalty together.
    #[serde(rename = "GML-Co")]
    GmlCo,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Ind, Variant::Gml, Variant::GmlW, Variant::GmlC, Variant::GmlCo];

    pub fn mutual(self) -> bool {
        self != Variant::Ind
    }

    pub fn weighting(self) -> bool {
        matches!(self, Variant::GmlW | Variant::GmlCo)
    }

    pub fn penalty(self) -> bool {
        matches!(self, Variant::GmlC | Variant::GmlCo)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ind => "Ind",
            Variant::Gml => "GML",
            Variant::GmlW => "GML-W",
            Variant::GmlC => "GML-C",
            Variant::GmlCo => "GML-Co",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown variant {:?}", s)))
    }
}

/// Sign convention of the entropy term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltySign {
    /// Loss gains `-gamma * entropy`, so training raises entropy.
    #[default]
    EntropyBonus,
    /// Loss gains `-gamma * sum p ln p`, which lowers entropy.
    Literal,
}

/// One cohort member: architecture and initialization seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberConfig {
    pub spec: ModelSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub members: Vec<MemberConfig>,
    /// Member whose validation accuracy drives early stopping and whose
    /// result is reported as the cohort's.
    #[serde(default)]
    pub target_index: usize,
    pub variant: Variant,
    pub gamma: f64,
    pub beta: f64,
    pub temperature: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    #[serde(default)]
    pub graph_aware: bool,
    /// Inner width of the weighting unit.
    pub weight_hidden: usize,
    #[serde(default)]
    pub penalty_sign: PenaltySign,
}

/// Hyperparameters without the member list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub gamma: f64,
    pub beta: f64,
    pub temperature: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub weight_hidden: usize,
}

impl Hyper {
    /// Defaults per task: weight decay 5e-4, learning rate 0.01, patience
    /// 1500 (node) / 200 (graph), temperature 1 / 6, weighting width 64 / 16,
    /// gamma = beta = 1.
    pub fn standard(task: Task) -> Self {
        match task {
            Task::Node => Self {
                gamma: 1.0,
                beta: 1.0,
                temperature: 1.0,
                learning_rate: 0.01,
                weight_decay: 5e-4,
                max_epochs: 3000,
                patience: 1500,
                weight_hidden: 64,
            },
            Task::Graph => Self {
                gamma: 1.0,
                beta: 1.0,
                temperature: 6.0,
                learning_rate: 0.01,
                weight_decay: 5e-4,
                max_epochs: 1000,
                patience: 200,
                weight_hidden: 16,
            },
        }
    }
}

impl CohortConfig {
    pub fn new(members: Vec<MemberConfig>, variant: Variant, hyper: Hyper) -> Self {
        Self {
            members,
            target_index: 0,
            variant,
            gamma: hyper.gamma,
            beta: hyper.beta,
            temperature: hyper.temperature,
            learning_rate: hyper.learning_rate,
            weight_decay: hyper.weight_decay,
            max_epochs: hyper.max_epochs,
            patience: hyper.patience,
            graph_aware: false,
            weight_hidden: hyper.weight_hidden,
            penalty_sign: PenaltySign::default(),
        }
    }

    pub fn task(&self) -> Task {
        self.members.first().map_or(Task::Node, |m| m.spec.task)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::Config(format!("{}: {}", field, why)));
        if self.members.is_empty() {
            return bad("members", "at least one member is required".into());
        }
        for (i, m) in self.members.iter().enumerate() {
            m.spec.validate().map_err(|e| Error::Config(format!("members[{}]: {}", i, e)))?;
        }
        let first = &self.members[0].spec;
        if self.members.iter().any(|m| m.spec.task != first.task || m.spec.num_classes != first.num_classes) {
            return bad("members", "all members must share task and class count".into());
        }
        if self.target_index >= self.members.len() {
            return bad("target_index", format!("{} but only {} members", self.target_index, self.members.len()));
        }
        if self.variant.mutual() && self.members.len() < 2 {
            return bad("variant", format!("{} needs at least two members", self.variant));
        }
        for (name, v) in [("gamma", self.gamma), ("beta", self.beta), ("weight_decay", self.weight_decay)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(name, format!("must be finite and >= 0, got {}", v));
            }
        }
        for (name, v) in [("temperature", self.temperature), ("learning_rate", self.learning_rate)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name, format!("must be finite and > 0, got {}", v));
            }
        }
        if self.max_epochs == 0 {
            return bad("max_epochs", "must be positive".into());
        }
        if self.weight_hidden == 0 {
            return bad("weight_hidden", "must be positive".into());
        }
        if self.graph_aware && self.task() == Task::Graph {
            return bad("graph_aware", "only defined for node classification".into());
        }
        Ok(())
    }
}
