use std::path::Path;

use gml_core::cohort::TrainData;
use gml_core::graphdata::{
    add_laplace_noise, gen_barabasi_albert, gen_random, load_citation, load_csv_triplet, load_tu, parse_tabular,
    split_indices, GraphCollection, GraphDataset, LoadReport, Tabular,
};
use gml_core::ndtape::SparseMatrix;
use gml_core::rng::SplitMix64;

use crate::config::{aux_seed, DataConfig, DataFormat, GraphSource, BUILTIN};
use crate::error::{CliError, CliResult};

const IRIS: &[u8] = include_bytes!("../../core/data/iris.csv");

/// A loaded dataset before any per-run transformation.
#[derive(Debug, Clone)]
pub enum Dataset {
    Nodes(GraphDataset),
    Graphs(GraphCollection),
    Table(Tabular),
}

fn builtin(name: &str, cfg: &DataConfig) -> CliResult<Tabular> {
    match name {
        "iris" => {
            let label = cfg.label_column.as_deref().unwrap_or("species");
            Ok(parse_tabular(IRIS, Path::new("builtin:iris"), label)?)
        }
        other => Err(CliError::Config(format!("data.path: unknown builtin dataset {:?}", other))),
    }
}

fn report(path: &Path, r: &LoadReport) {
    if r.dangling_edges + r.self_loops + r.duplicate_edges > 0 {
        log::info!(
            "{}: dropped {} dangling edges, {} self-loops, {} duplicates",
            path.display(),
            r.dangling_edges,
            r.self_loops,
            r.duplicate_edges
        );
    }
}

impl Dataset {
    pub fn load(cfg: &DataConfig, root: Option<&Path>) -> CliResult<Self> {
        if let Some(name) = cfg.path.strip_prefix(BUILTIN) {
            if cfg.format != DataFormat::Tabular {
                return Err(CliError::Config("data.format: builtin datasets are tabular".into()));
            }
            return Ok(Dataset::Table(builtin(name, cfg)?));
        }
        let dir = cfg.resolve(root)?.expect("non-builtin path");
        Ok(match cfg.format {
            DataFormat::Citation => {
                let stem = cfg.stem.as_deref().unwrap_or_default();
                let content = dir.join(format!("{}.content", stem));
                let cites = dir.join(format!("{}.cites", stem));
                let (g, r) = load_citation(&content, &cites)?;
                report(&dir, &r);
                Dataset::Nodes(g)
            }
            DataFormat::CsvTriplet => {
                let (g, r) = load_csv_triplet(&dir)?;
                report(&dir, &r);
                Dataset::Nodes(g)
            }
            DataFormat::Tu => {
                let (c, r) = load_tu(&dir, cfg.features)?;
                report(&dir, &r);
                Dataset::Graphs(c)
            }
            DataFormat::Tabular => {
                let label = cfg.label_column.as_deref().unwrap_or_default();
                Dataset::Table(gml_core::graphdata::load_tabular(&dir, label)?)
            }
        })
    }

    pub fn num_features(&self) -> usize {
        match self {
            Dataset::Nodes(g) => g.num_features(),
            Dataset::Graphs(c) => c.num_features(),
            Dataset::Table(t) => t.features.cols(),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Dataset::Nodes(g) => g.num_classes(),
            Dataset::Graphs(c) => c.num_classes(),
            Dataset::Table(t) => t.num_classes(),
        }
    }

    pub fn num_examples(&self) -> usize {
        match self {
            Dataset::Nodes(g) => g.num_nodes(),
            Dataset::Graphs(c) => c.len(),
            Dataset::Table(t) => t.labels.len(),
        }
    }

    /// Training inputs for one run: the split, the generated graph for
    /// tabular data and feature noise all derive from `seed`.
    pub fn run_data(&self, cfg: &DataConfig, split_seed: u64, seed: u64) -> CliResult<TrainData> {
        let split = split_indices(self.num_examples(), cfg.split_ratios(), split_seed)?;
        let noise_seed = aux_seed(seed, 1);
        match self {
            Dataset::Nodes(g) => {
                let g = with_node_noise(g, cfg.noise, noise_seed)?;
                Ok(TrainData::nodes(&g, split)?)
            }
            Dataset::Table(t) => {
                let adj = generate_graph(cfg.graph.unwrap_or(GraphSource::None), t.labels.len(), aux_seed(seed, 2))?;
                let g = with_node_noise(&t.with_adjacency(adj)?, cfg.noise, noise_seed)?;
                Ok(TrainData::nodes(&g, split)?)
            }
            Dataset::Graphs(c) => {
                let c = if cfg.noise > 0.0 {
                    c.map_features(|i, x| add_laplace_noise(x, cfg.noise, SplitMix64::stream(noise_seed, i as u64).next_u64()))?
                } else {
                    c.clone()
                };
                Ok(TrainData::graphs(&c, split)?)
            }
        }
    }
}

fn with_node_noise(g: &GraphDataset, scale: f64, seed: u64) -> CliResult<GraphDataset> {
    if scale == 0.0 {
        return Ok(g.clone());
    }
    Ok(g.with_features(add_laplace_noise(g.features(), scale, seed)?)?)
}

pub fn generate_graph(source: GraphSource, n: usize, seed: u64) -> CliResult<SparseMatrix> {
    Ok(match source {
        GraphSource::None => SparseMatrix::from_triplets(n, n, &[])?,
        GraphSource::Random { p } => gen_random(n, p, seed)?,
        GraphSource::BarabasiAlbert { m } => gen_barabasi_albert(n, m, seed)?,
    })
}
