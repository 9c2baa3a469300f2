use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Gcn,
    Gat,
    Sage,
    Mlp,
}

impl Architecture {
    /// Whether the forward pass reads the graph structure.
    pub fn uses_graph(self) -> bool {
        self != Architecture::Mlp
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Gcn => "GCN",
            Architecture::Gat => "GAT",
            Architecture::Sage => "GraphSage",
            Architecture::Mlp => "MLP",
        })
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Architecture::Gcn),
            "gat" => Ok(Architecture::Gat),
            "sage" | "graphsage" => Ok(Architecture::Sage),
            "mlp" => Ok(Architecture::Mlp),
            _ => Err(Error::Config(format!("unknown architecture {:?}", s))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// One prediction per node.
    Node,
    /// One prediction per graph: node layers, mean readout, linear classifier.
    Graph,
}

/// Shape and hyperparameters of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub task: Task,
    pub input_dim: usize,
    pub num_classes: usize,
    /// Widths of the hidden node layers. For GAT each entry is the per-head
    /// width and the layer output is `heads * width`.
    pub hidden: Vec<usize>,
    /// Attention heads on hidden GAT layers.
    #[serde(default = "default_heads")]
    pub heads: usize,
    /// Attention heads on the GAT output layer, averaged.
    #[serde(default = "default_output_heads")]
    pub output_heads: usize,
    /// Negative slope of the attention LeakyReLU.
    #[serde(default = "default_slope")]
    pub attention_slope: f64,
    /// Drop probability applied to hidden representations during training.
    #[serde(default)]
    pub dropout: f64,
}

fn default_heads() -> usize {
    4
}

fn default_output_heads() -> usize {
    1
}

fn default_slope() -> f64 {
    0.2
}

impl ModelSpec {
    /// Standard configuration: node task uses a 2-layer GCN/GAT/MLP and a
    /// 3-layer GraphSage with hidden width 64 (GAT 8 per head, 4 heads);
    /// the graph task uses the same depths with hidden widths 16/16/8 before
    /// the readout.
    pub fn standard(architecture: Architecture, task: Task, input_dim: usize, num_classes: usize) -> Self {
        let width = match (architecture, task) {
            (Architecture::Gat, _) => 8,
            (_, Task::Node) => 64,
            (_, Task::Graph) => 16,
        };
        let hidden = match (architecture, task) {
            (Architecture::Sage, Task::Node) => vec![width; 2],
            (_, Task::Node) => vec![width],
            (Architecture::Sage, Task::Graph) => vec![width; 3],
            (_, Task::Graph) => vec![width; 2],
        };
        Self {
            architecture,
            task,
            input_dim,
            num_classes,
            hidden,
            heads: default_heads(),
            output_heads: default_output_heads(),
            attention_slope: default_slope(),
            dropout: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.num_classes == 0 {
            return Err(Error::Config(format!("{}: input and class counts must be positive", self.architecture)));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config(format!("{}: zero-width hidden layer", self.architecture)));
        }
        if self.task == Task::Graph && self.hidden.is_empty() {
            return Err(Error::Config("graph task needs at least one node layer before the readout".into()));
        }
        if self.architecture == Architecture::Gat && (self.heads == 0 || self.output_heads == 0) {
            return Err(Error::Config("GAT needs at least one head".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    /// Output width of hidden layer `l` as seen by the next layer.
    pub(crate) fn hidden_out(&self, l: usize) -> usize {
        match self.architecture {
            Architecture::Gat => self.hidden[l] * self.heads,
            _ => self.hidden[l],
        }
    }

    /// Number of node layers, i.e. entries of the activation list before
    /// any readout.
    pub fn node_layers(&self) -> usize {
        match self.task {
            Task::Node => self.hidden.len() + 1,
            Task::Graph => self.hidden.len(),
        }
    }
}
