//! Readers for the citation text layout, the TU benchmark layout, the generic
//! CSV triplet and plain tabular CSV.

use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{undirected_adjacency, GraphCollection, GraphDataset, MemberGraph};
use crate::ndtape::{SparseMatrix, Tensor};
use crate::{Error, Result};

/// What a loader dropped or merged on the way in.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    /// Class names in index order.
    pub class_names: Vec<String>,
    /// Edges naming a node that has no feature row.
    pub dangling_edges: usize,
    pub self_loops: usize,
    /// Repeated undirected edges (including both directions of one citation).
    pub duplicate_edges: usize,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Assigns dense indices to keys in order of first appearance.
#[derive(Default)]
struct Interner {
    index: HashMap<String, usize>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, key: &str) -> usize {
        if let Some(&i) = self.index.get(key) {
            return i;
        }
        let i = self.names.len();
        self.index.insert(key.to_string(), i);
        self.names.push(key.to_string());
        i
    }
}

/// Load a citation corpus: `content` has `id f_1 .. f_D label` per line,
/// `cites` has `cited citing` per line. Edges are symmetrized.
pub fn load_citation(content_path: &Path, cites_path: &Path) -> Result<(GraphDataset, LoadReport)> {
    let content = read_text(content_path)?;
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut classes = Interner::default();
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (lineno, line) in content.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 3 {
            return Err(Error::parse(content_path, lineno + 1, "expected id, features and label"));
        }
        let d = toks.len() - 2;
        if *width.get_or_insert(d) != d {
            return Err(Error::parse(content_path, lineno + 1, format!("{} features, expected {}", d, width.unwrap())));
        }
        if ids.insert(toks[0].to_string(), labels.len()).is_some() {
            return Err(Error::parse(content_path, lineno + 1, format!("duplicate node id {}", toks[0])));
        }
        for tok in &toks[1..=d] {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(content_path, lineno + 1, format!("non-numeric feature {:?}", tok)))?;
            feats.push(v);
        }
        labels.push(classes.intern(toks[d + 1]));
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::Dataset(format!("{} has no nodes", content_path.display())));
    }

    let cites = read_text(cites_path)?;
    let mut report = LoadReport::default();
    let mut pairs = Vec::new();
    for (lineno, line) in cites.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 2 {
            return Err(Error::parse(cites_path, lineno + 1, "expected two node ids"));
        }
        match (ids.get(toks[0]), ids.get(toks[1])) {
            (Some(&u), Some(&v)) => pairs.push((u, v)),
            _ => report.dangling_edges += 1,
        }
    }
    if report.dangling_edges > 0 {
        log::warn!("{}: dropped {} edges with unknown endpoints", cites_path.display(), report.dangling_edges);
    }
    let (adjacency, loops, dups) = undirected_adjacency(n, &pairs)?;
    report.self_loops = loops;
    report.duplicate_edges = dups;
    report.class_names = classes.names;
    let c = report.class_names.len();
    let features = Tensor::matrix(n, width.unwrap(), feats)?;
    Ok((GraphDataset::new(features, labels, c, adjacency)?, report))
}

/// Rows of a headerless-or-headed numeric CSV. A first row with any
/// non-numeric cell is treated as a header.
fn numeric_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if i == 0 => {}
            Err(_) => return Err(Error::parse(path, i + 1, "non-numeric cell")),
        }
    }
    Ok(rows)
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, 0, format!("{:?}", other)),
    }
}

/// Load the generic layout: `edges.csv` (`src,dst` header, 0-based ids),
/// `features.csv` (N rows of D numbers) and `labels.csv` (N integers).
/// Labels are remapped by first appearance; edges are symmetrized.
pub fn load_csv_triplet(dir: &Path) -> Result<(GraphDataset, LoadReport)> {
    let feat_rows = numeric_rows(&dir.join("features.csv"))?;
    let n = feat_rows.len();
    if n == 0 {
        return Err(Error::Dataset(format!("{} has no rows", dir.join("features.csv").display())));
    }
    let d = feat_rows[0].len();
    if let Some(i) = feat_rows.iter().position(|r| r.len() != d) {
        return Err(Error::parse(dir.join("features.csv"), i + 1, "ragged row"));
    }
    let features = Tensor::matrix(n, d, feat_rows.concat())?;

    let label_path = dir.join("labels.csv");
    let label_rows = numeric_rows(&label_path)?;
    if label_rows.len() != n {
        return Err(Error::Dataset(format!("{} labels for {} feature rows", label_rows.len(), n)));
    }
    let mut classes = Interner::default();
    let mut labels = Vec::with_capacity(n);
    for (i, r) in label_rows.iter().enumerate() {
        if r.len() != 1 || r[0].fract() != 0.0 {
            return Err(Error::parse(&label_path, i + 1, "expected one integer label"));
        }
        labels.push(classes.intern(&format!("{}", r[0] as i64)));
    }

    let edge_path = dir.join("edges.csv");
    let mut report = LoadReport::default();
    let mut pairs = Vec::new();
    for (i, r) in numeric_rows(&edge_path)?.iter().enumerate() {
        if r.len() != 2 || r.iter().any(|x| x.fract() != 0.0 || *x < 0.0) {
            return Err(Error::parse(&edge_path, i + 1, "expected src,dst node indices"));
        }
        let (u, v) = (r[0] as usize, r[1] as usize);
        if u >= n || v >= n {
            report.dangling_edges += 1;
        } else {
            pairs.push((u, v));
        }
    }
    if report.dangling_edges > 0 {
        log::warn!("{}: dropped {} edges with unknown endpoints", edge_path.display(), report.dangling_edges);
    }
    let (adjacency, loops, dups) = undirected_adjacency(n, &pairs)?;
    report.self_loops = loops;
    report.duplicate_edges = dups;
    report.class_names = classes.names;
    let c = report.class_names.len();
    Ok((GraphDataset::new(features, labels, c, adjacency)?, report))
}

/// Which per-node TU files become node features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    /// One-hot node labels when present, otherwise attributes.
    #[default]
    Auto,
    Labels,
    Attributes,
    /// Attributes followed by one-hot labels.
    Both,
}

fn tu_prefix(dir: &Path) -> Result<PathBuf> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix("_A.txt") {
            return Ok(dir.join(stem));
        }
    }
    Err(Error::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, "no *_A.txt edge file")))
}

fn tu_file(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!("_{}.txt", suffix));
    PathBuf::from(s)
}

fn tu_lines(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    Ok(read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(|t| t.trim().to_string()).collect()))
        .collect())
}

fn tu_int(path: &Path, line: usize, tok: &str) -> Result<i64> {
    tok.parse().map_err(|_| Error::parse(path, line, format!("expected integer, got {:?}", tok)))
}

/// Load a TU-format directory (`DS_A.txt`, `DS_graph_indicator.txt`,
/// `DS_graph_labels.txt`, optional `DS_node_labels.txt` and
/// `DS_node_attributes.txt`).
pub fn load_tu(dir: &Path, source: FeatureSource) -> Result<(GraphCollection, LoadReport)> {
    let prefix = tu_prefix(dir)?;
    let ind_path = tu_file(&prefix, "graph_indicator");
    let mut graph_of = Vec::new();
    for (line, toks) in tu_lines(&ind_path)? {
        let g = tu_int(&ind_path, line, &toks[0])?;
        if g < 1 {
            return Err(Error::parse(&ind_path, line, "graph ids are 1-based"));
        }
        graph_of.push(g as usize - 1);
    }
    let n = graph_of.len();
    if n == 0 {
        return Err(Error::Dataset(format!("{} is empty", ind_path.display())));
    }

    let gl_path = tu_file(&prefix, "graph_labels");
    let mut classes = Interner::default();
    let mut graph_labels = Vec::new();
    for (line, toks) in tu_lines(&gl_path)? {
        tu_int(&gl_path, line, &toks[0])?;
        graph_labels.push(classes.intern(&toks[0]));
    }
    let m = graph_labels.len();
    if let Some(&g) = graph_of.iter().find(|&&g| g >= m) {
        return Err(Error::Dataset(format!("node assigned to graph {} but only {} graph labels", g + 1, m)));
    }

    // Local index of each node within its graph.
    let mut sizes = vec![0usize; m];
    let local: Vec<usize> = graph_of
        .iter()
        .map(|&g| {
            sizes[g] += 1;
            sizes[g] - 1
        })
        .collect();

    let a_path = tu_file(&prefix, "A");
    let mut pairs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    for (line, toks) in tu_lines(&a_path)? {
        if toks.len() != 2 {
            return Err(Error::parse(&a_path, line, "expected two node ids"));
        }
        let u = tu_int(&a_path, line, &toks[0])?;
        let v = tu_int(&a_path, line, &toks[1])?;
        if u < 1 || v < 1 || u as usize > n || v as usize > n {
            return Err(Error::parse(&a_path, line, "node id out of range"));
        }
        let (u, v) = (u as usize - 1, v as usize - 1);
        if graph_of[u] != graph_of[v] {
            return Err(Error::Dataset(format!(
                "{} line {}: edge joins graphs {} and {}",
                a_path.display(),
                line,
                graph_of[u] + 1,
                graph_of[v] + 1
            )));
        }
        pairs[graph_of[u]].push((local[u], local[v]));
    }

    let nl_path = tu_file(&prefix, "node_labels");
    let one_hot = if nl_path.exists() {
        let mut vals = Vec::with_capacity(n);
        for (line, toks) in tu_lines(&nl_path)? {
            vals.push(tu_int(&nl_path, line, &toks[0])?);
        }
        if vals.len() != n {
            return Err(Error::Dataset(format!("{} node labels for {} nodes", vals.len(), n)));
        }
        let mut distinct = vals.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let width = distinct.len();
        let rows: Vec<Vec<f64>> = vals
            .iter()
            .map(|v| {
                let mut r = vec![0.0; width];
                r[distinct.binary_search(v).unwrap()] = 1.0;
                r
            })
            .collect();
        Some(rows)
    } else {
        None
    };
    let at_path = tu_file(&prefix, "node_attributes");
    let attributes = if at_path.exists() {
        let mut rows = Vec::with_capacity(n);
        for (line, toks) in tu_lines(&at_path)? {
            let r = toks
                .iter()
                .map(|t| t.parse::<f64>().map_err(|_| Error::parse(&at_path, line, format!("non-numeric attribute {:?}", t))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(r);
        }
        if rows.len() != n {
            return Err(Error::Dataset(format!("{} attribute rows for {} nodes", rows.len(), n)));
        }
        Some(rows)
    } else {
        None
    };

    let missing = |what: &str| Error::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, format!("no node {} file", what)));
    let node_rows: Vec<Vec<f64>> = match source {
        FeatureSource::Auto => match (one_hot, attributes) {
            (Some(l), _) => l,
            (None, Some(a)) => a,
            (None, None) => return Err(missing("label or attribute")),
        },
        FeatureSource::Labels => one_hot.ok_or_else(|| missing("label"))?,
        FeatureSource::Attributes => attributes.ok_or_else(|| missing("attribute"))?,
        FeatureSource::Both => {
            let a = attributes.ok_or_else(|| missing("attribute"))?;
            let l = one_hot.ok_or_else(|| missing("label"))?;
            a.into_iter().zip(l).map(|(mut a, l)| {
                a.extend(l);
                a
            }).collect()
        }
    };
    let d = node_rows[0].len();
    if node_rows.iter().any(|r| r.len() != d) {
        return Err(Error::Dataset("node attribute rows have differing widths".into()));
    }

    let mut feats: Vec<Vec<f64>> = vec![Vec::new(); m];
    for (node, row) in node_rows.iter().enumerate() {
        feats[graph_of[node]].extend_from_slice(row);
    }
    let mut report = LoadReport::default();
    let mut graphs = Vec::with_capacity(m);
    for g in 0..m {
        if sizes[g] == 0 {
            return Err(Error::Dataset(format!("graph {} has no nodes", g + 1)));
        }
        let (adjacency, loops, dups) = undirected_adjacency(sizes[g], &pairs[g])?;
        report.self_loops += loops;
        report.duplicate_edges += dups;
        graphs.push(MemberGraph { features: Tensor::matrix(sizes[g], d, std::mem::take(&mut feats[g]))?, adjacency });
    }
    report.class_names = classes.names;
    let c = report.class_names.len();
    Ok((GraphCollection::new(graphs, graph_labels, c)?, report))
}

/// Standardized numeric features with categorical labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabular {
    pub features: Tensor,
    pub labels: Vec<usize>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
}

impl Tabular {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Attach a structure to the rows.
    pub fn with_adjacency(&self, adjacency: SparseMatrix) -> Result<GraphDataset> {
        GraphDataset::new(self.features.clone(), self.labels.clone(), self.num_classes(), adjacency)
    }
}

/// Read a headed CSV file; see [`parse_tabular`].
pub fn load_tabular(csv_path: &Path, label_column: &str) -> Result<Tabular> {
    let file = fs::File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    parse_tabular(file, csv_path, label_column)
}

/// Parse a headed CSV: every column except `label_column` must be numeric and
/// is standardized to zero mean and unit (population) variance; constant
/// columns become zeros. `origin` is only used in error messages.
pub fn parse_tabular(reader: impl Read, origin: &Path, label_column: &str) -> Result<Tabular> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Dataset(format!("{}: no column named {:?}", origin.display(), label_column)))?;
    let feature_names: Vec<String> =
        header.iter().enumerate().filter(|&(i, _)| i != label_idx).map(|(_, h)| h.to_string()).collect();
    let d = feature_names.len();
    let mut classes = Interner::default();
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != header.len() {
            return Err(Error::parse(origin, line, format!("{} cells, expected {}", rec.len(), header.len())));
        }
        for (j, cell) in rec.iter().enumerate() {
            if j == label_idx {
                labels.push(classes.intern(cell));
            } else {
                data.push(cell.parse::<f64>().map_err(|_| Error::parse(origin, line, format!("non-numeric cell {:?}", cell)))?);
            }
        }
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::Dataset(format!("{} has no rows", origin.display())));
    }
    for j in 0..d {
        let mean = (0..n).map(|i| data[i * d + j]).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (data[i * d + j] - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        for i in 0..n {
            let x = &mut data[i * d + j];
            *x = if sd > 1e-12 * mean.abs().max(1.0) { (*x - mean) / sd } else { 0.0 };
        }
    }
    Ok(Tabular { features: Tensor::matrix(n, d, data)?, labels, feature_names, class_names: classes.names })
}
