//! Shipped experiment configurations.
//!
//! Node presets: `{cora,citeseer,pubmed}-{combo}-{variant}` with combos
//! `sage-gcn-s` (GraphSage target, GCN peer), `gat-sage-s` (GraphSage target,
//! GAT peer) and `gcn-gat-c` (GCN target, GAT peer). `proteins-{combo}-{variant}`
//! are the graph-classification counterparts. Variants are `ind`, `gml`,
//! `gmlw`, `gmlc`, `gmlco`; `ind` presets hold the target model alone.
//! Also shipped: `iris-structure`, `cora-noise`, `cora-ensemble-gml`,
//! `cora-ensemble-ind`.

use gml_core::cohort::Variant;
use gml_core::graphdata::FeatureSource;
use gml_core::models::Architecture::{self, Gat, Gcn, Sage};

use crate::config::{BenchConfig, CohortSection, DataConfig, DataFormat, ExperimentConfig, GraphSource};

const COMBOS: [(&str, [Architecture; 2]); 3] = [("sage-gcn-s", [Sage, Gcn]), ("gat-sage-s", [Sage, Gat]), ("gcn-gat-c", [Gcn, Gat])];

const VARIANTS: [(&str, Variant); 5] = [
    ("ind", Variant::Ind),
    ("gml", Variant::Gml),
    ("gmlw", Variant::GmlW),
    ("gmlc", Variant::GmlC),
    ("gmlco", Variant::GmlCo),
];

const NODE_SETS: [&str; 3] = ["cora", "citeseer", "pubmed"];

fn cohort(members: Vec<Architecture>, variant: Variant) -> CohortSection {
    CohortSection {
        members,
        target: 0,
        variant,
        gamma: None,
        beta: None,
        temperature: None,
        learning_rate: None,
        weight_decay: None,
        max_epochs: None,
        patience: None,
        weight_hidden: None,
        graph_aware: false,
        penalty_sign: Default::default(),
        dropout: 0.0,
    }
}

fn node_data(set: &str) -> DataConfig {
    let (format, stem) = match set {
        "pubmed" => (DataFormat::CsvTriplet, None),
        _ => (DataFormat::Citation, Some(set.to_string())),
    };
    DataConfig {
        format,
        path: set.to_string(),
        stem,
        label_column: None,
        features: FeatureSource::Auto,
        graph: None,
        noise: 0.0,
        split: Some([0.70, 0.15, 0.15]),
        split_seed: None,
    }
}

fn proteins_data() -> DataConfig {
    DataConfig {
        format: DataFormat::Tu,
        path: "PROTEINS".into(),
        stem: None,
        label_column: None,
        features: FeatureSource::Auto,
        graph: None,
        noise: 0.0,
        split: None,
        split_seed: None,
    }
}

fn iris_data() -> DataConfig {
    DataConfig {
        format: DataFormat::Tabular,
        path: "builtin:iris".into(),
        stem: None,
        label_column: Some("species".into()),
        features: FeatureSource::Auto,
        graph: Some(GraphSource::BarabasiAlbert { m: 3 }),
        noise: 0.0,
        split: Some([0.70, 0.15, 0.15]),
        split_seed: None,
    }
}

fn members_for(pair: [Architecture; 2], variant: Variant) -> Vec<Architecture> {
    if variant == Variant::Ind {
        vec![pair[0]]
    } else {
        pair.to_vec()
    }
}

fn node_preset(set: &str, combo: &str, pair: [Architecture; 2], vname: &str, variant: Variant) -> ExperimentConfig {
    let mut c = cohort(members_for(pair, variant), variant);
    // gamma 0.01 on Cora, 1 elsewhere; beta 1 throughout
    c.gamma = Some(if set == "cora" { 0.01 } else { 1.0 });
    c.beta = Some(1.0);
    c.weight_decay = Some(5e-4);
    c.patience = Some(1500);
    c.weight_hidden = Some(64);
    c.temperature = Some(1.0);
    ExperimentConfig {
        name: format!("{}-{}-{}", set, combo, vname),
        seeds: (0..10).collect(),
        data: node_data(set),
        cohort: c,
        bench: BenchConfig::default(),
    }
}

fn graph_preset(combo: &str, pair: [Architecture; 2], vname: &str, variant: Variant) -> ExperimentConfig {
    let mut c = cohort(members_for(pair, variant), variant);
    c.gamma = Some(1.0);
    c.beta = Some(1.0);
    c.temperature = Some(6.0);
    c.weight_decay = Some(5e-4);
    c.patience = Some(200);
    c.weight_hidden = Some(16);
    ExperimentConfig {
        name: format!("proteins-{}-{}", combo, vname),
        seeds: (0..5).collect(),
        data: proteins_data(),
        cohort: c,
        bench: BenchConfig::default(),
    }
}

/// Every shipped preset name.
pub fn names() -> Vec<String> {
    let mut out = Vec::new();
    for set in NODE_SETS.iter().chain(["proteins"].iter()) {
        for (combo, _) in COMBOS {
            for (v, _) in VARIANTS {
                out.push(format!("{}-{}-{}", set, combo, v));
            }
        }
    }
    out.extend(["iris-structure", "cora-noise", "cora-ensemble-gml", "cora-ensemble-ind"].map(String::from));
    out
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    for (combo, pair) in COMBOS {
        for (vname, variant) in VARIANTS {
            for set in NODE_SETS {
                if name == format!("{}-{}-{}", set, combo, vname) {
                    return Some(node_preset(set, combo, pair, vname, variant));
                }
            }
            if name == format!("proteins-{}-{}", combo, vname) {
                return Some(graph_preset(combo, pair, vname, variant));
            }
        }
    }
    match name {
        "iris-structure" => {
            let mut c = cohort(vec![Gcn, Gat], Variant::Gml);
            c.patience = Some(200);
            c.max_epochs = Some(1000);
            Some(ExperimentConfig {
                name: name.into(),
                seeds: (0..10).collect(),
                data: iris_data(),
                cohort: c,
                bench: BenchConfig { random_p: 0.04, ba_m: 3, ..BenchConfig::default() },
            })
        }
        "cora-noise" => {
            let mut cfg = node_preset("cora", "gcn-gat-c", [Gcn, Gat], "gmlc", Variant::GmlC);
            cfg.name = name.into();
            cfg.bench.noise_scales = vec![0.0, 0.1, 0.3, 0.5, 0.9];
            cfg.bench.noise_variants = vec![Variant::GmlC, Variant::Gml, Variant::Ind];
            Some(cfg)
        }
        "cora-ensemble-gml" | "cora-ensemble-ind" => {
            let variant = if name.ends_with("gml") { Variant::Gml } else { Variant::Ind };
            let mut cfg = node_preset("cora", "gcn-gat-c", [Gcn, Gat], "gml", variant);
            cfg.name = name.into();
            cfg.cohort.members = vec![Gcn; 5];
            Some(cfg)
        }
        _ => None,
    }
}
