use std::fs;
use std::path::Path;

use gml_core::graphdata::*;
use gml_core::ndtape::{SparseMatrix, Tensor};
use gml_core::rng::SplitMix64;
use gml_core::Error;
use proptest::prelude::*;

fn iris_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/iris.csv")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn citation_fixture(dir: &Path) {
    write(dir, "tiny.content", "p1\t1\t0\t1\tTheory\np2\t0\t1\t0\tML\np3\t1\t1\t0\tTheory\n");
    write(dir, "tiny.cites", "p1\tp2\np3\tp2\np9\tp1\n");
}

#[test]
fn citation_fixture_loads_symmetrically() {
    let dir = tempfile::tempdir().unwrap();
    citation_fixture(dir.path());
    let (g, report) = load_citation(&dir.path().join("tiny.content"), &dir.path().join("tiny.cites")).unwrap();
    assert_eq!(g.num_nodes(), 3);
    assert_eq!(g.num_features(), 3);
    assert_eq!(g.num_classes(), 2);
    assert_eq!(g.labels(), &[0, 1, 0]);
    assert_eq!(g.adjacency().nnz(), 4);
    assert!(g.adjacency().is_symmetric());
    assert_eq!(report.dangling_edges, 1);
    assert_eq!(report.class_names, vec!["Theory", "ML"]);
}

#[test]
fn citation_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.content", "a 1 0 X\nb 1 zz Y\n");
    write(dir.path(), "ok.cites", "a b\n");
    match load_citation(&dir.path().join("bad.content"), &dir.path().join("ok.cites")) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("unexpected {:?}", other),
    }
    write(dir.path(), "empty.content", "");
    assert!(matches!(
        load_citation(&dir.path().join("empty.content"), &dir.path().join("ok.cites")),
        Err(Error::Dataset(_))
    ));
    assert!(matches!(
        load_citation(&dir.path().join("missing.content"), &dir.path().join("ok.cites")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn csv_triplet_loads_and_remaps_labels() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "edges.csv", "src,dst\n0,1\n1,0\n2,3\n3,3\n");
    write(dir.path(), "features.csv", "0.5,1\n1,2\n3,4\n5,6\n");
    write(dir.path(), "labels.csv", "label\n4\n2\n4\n7\n");
    let (g, report) = load_csv_triplet(dir.path()).unwrap();
    assert_eq!(g.num_nodes(), 4);
    assert_eq!(g.labels(), &[0, 1, 0, 2]);
    assert_eq!(g.num_edges(), 2);
    assert_eq!(report.self_loops, 1);
    assert_eq!(report.duplicate_edges, 1);
}

fn tu_fixture(dir: &Path) {
    // Triangle (nodes 1-3) and a single edge (nodes 4-5), both directions listed.
    write(dir, "TOY_A.txt", "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n");
    write(dir, "TOY_graph_indicator.txt", "1\n1\n1\n2\n2\n");
    write(dir, "TOY_graph_labels.txt", "1\n-1\n");
    write(dir, "TOY_node_labels.txt", "0\n2\n1\n0\n0\n");
    write(dir, "TOY_node_attributes.txt", "0.5\n1.5\n2.5\n3.5\n4.5\n");
}

#[test]
fn tu_fixture_loads_two_graphs() {
    let dir = tempfile::tempdir().unwrap();
    tu_fixture(dir.path());
    let (c, report) = load_tu(dir.path(), FeatureSource::Auto).unwrap();
    assert_eq!(c.len(), 2);
    let sizes: Vec<usize> = c.graphs().iter().map(|g| g.num_nodes()).collect();
    assert_eq!(sizes, vec![3, 2]);
    assert_eq!(c.labels(), &[0, 1]);
    assert_eq!(report.class_names, vec!["1", "-1"]);
    assert_eq!(c.num_features(), 3);
    assert_eq!(c.graphs()[0].features.row(1), &[0.0, 0.0, 1.0]);
    for g in c.graphs() {
        assert!(g.adjacency.is_symmetric());
    }
    assert_eq!(c.graphs()[0].adjacency.nnz(), 6);

    let (attr, _) = load_tu(dir.path(), FeatureSource::Attributes).unwrap();
    assert_eq!(attr.num_features(), 1);
    assert_eq!(attr.graphs()[1].features.data(), &[3.5, 4.5]);
    let (both, _) = load_tu(dir.path(), FeatureSource::Both).unwrap();
    assert_eq!(both.num_features(), 4);
}

#[test]
fn tu_rejects_cross_graph_edges_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    tu_fixture(dir.path());
    write(dir.path(), "TOY_A.txt", "1, 2\n3, 4\n");
    assert!(matches!(load_tu(dir.path(), FeatureSource::Auto), Err(Error::Dataset(_))));
    tu_fixture(dir.path());
    fs::remove_file(dir.path().join("TOY_graph_labels.txt")).unwrap();
    assert!(matches!(load_tu(dir.path(), FeatureSource::Auto), Err(Error::Io { .. })));
    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(load_tu(empty.path(), FeatureSource::Auto), Err(Error::Io { .. })));
}

#[test]
fn graph_batch_is_block_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    tu_fixture(dir.path());
    let (c, _) = load_tu(dir.path(), FeatureSource::Auto).unwrap();
    let b = c.batch(&[1, 0]).unwrap();
    assert_eq!(b.membership, vec![0, 0, 1, 1, 1]);
    assert_eq!(b.adjacency.get(0, 1), 1.0);
    assert_eq!(b.adjacency.get(2, 4), 1.0);
    assert_eq!(b.adjacency.get(1, 2), 0.0);
    assert_eq!(b.features.row(2), c.graphs()[0].features.row(0));
}

#[test]
fn iris_fixture_shape_and_standardization() {
    let t = load_tabular(&iris_path(), "species").unwrap();
    assert_eq!(t.features.dims(), (150, 4));
    assert_eq!(t.num_classes(), 3);
    assert_eq!(t.feature_names.len(), 4);
    for j in 0..4 {
        let col: Vec<f64> = (0..150).map(|i| t.features.get(i, j)).collect();
        let mean = col.iter().sum::<f64>() / 150.0;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 150.0;
        assert!(mean.abs() < 1e-10);
        assert!((var - 1.0).abs() < 1e-10);
    }
}

#[test]
fn tabular_constant_column_and_bad_cells() {
    let text = "a,b,y\n0.1,1,u\n0.1,2,v\n0.1,3,u\n";
    let t = parse_tabular(text.as_bytes(), Path::new("inline"), "y").unwrap();
    assert!((0..3).all(|i| t.features.get(i, 0) == 0.0));
    assert_eq!(t.labels, vec![0, 1, 0]);
    let bad = "a,y\n1,u\nfoo,v\n";
    match parse_tabular(bad.as_bytes(), Path::new("inline"), "y") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("unexpected {:?}", other),
    }
}

fn path_graph(n: usize) -> SparseMatrix {
    let trip: Vec<_> = (0..n - 1).flat_map(|i| [(i, i + 1, 1.0), (i + 1, i, 1.0)]).collect();
    SparseMatrix::from_triplets(n, n, &trip).unwrap()
}

#[test]
fn normalized_adjacency_closed_forms() {
    let a = normalize_adjacency(&path_graph(2));
    assert_eq!(a.to_dense().to_rows(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
    let lonely = normalize_adjacency(&SparseMatrix::zeros(3, 3));
    for r in 0..3 {
        assert_eq!(lonely.row(r), (&[r][..], &[1.0][..]));
    }
}

#[test]
fn normalized_adjacency_of_star_matches_dense_oracle() {
    // Star: hub 0 joined to leaves 1..=4.
    let n = 5;
    let trip: Vec<_> = (1..n).flat_map(|i| [(0, i, 1.0), (i, 0, 1.0)]).collect();
    let a = SparseMatrix::from_triplets(n, n, &trip).unwrap();
    let got = normalize_adjacency(&a).to_dense();
    let mut dense = a.to_dense();
    for i in 0..n {
        dense.set(i, i, 1.0);
    }
    let deg: Vec<f64> = (0..n).map(|i| dense.row(i).iter().sum()).collect();
    for i in 0..n {
        let row_sum: f64 = (0..n).map(|j| dense.get(i, j) / (deg[i] * deg[j]).sqrt()).sum();
        let got_sum: f64 = got.row(i).iter().sum();
        assert!((row_sum - got_sum).abs() < 1e-15);
    }
    let hub = 1.0 / 5.0 + 4.0 / (5.0f64 * 2.0).sqrt();
    assert!((got.row(0).iter().sum::<f64>() - hub).abs() < 1e-15);
}

#[test]
fn mean_operator_closed_forms_and_brute_force() {
    let m = mean_aggregation_operator(&path_graph(3));
    assert_eq!(m.row(1).1, &[0.5, 0.5]);
    let lonely = mean_aggregation_operator(&SparseMatrix::zeros(2, 2));
    assert_eq!(lonely.nnz(), 0);

    let a = gen_random(6, 0.4, 9).unwrap();
    let mut rng = SplitMix64::new(1);
    let x = Tensor::matrix(6, 3, (0..18).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).unwrap();
    let got = mean_aggregation_operator(&a).spmm(&x).unwrap();
    for i in 0..6 {
        let nbrs: Vec<usize> = (0..6).filter(|&j| a.get(i, j) != 0.0).collect();
        for c in 0..3 {
            let want = if nbrs.is_empty() { 0.0 } else { nbrs.iter().map(|&j| x.get(j, c)).sum::<f64>() / nbrs.len() as f64 };
            assert!((got.get(i, c) - want).abs() < 1e-12);
        }
        let s: f64 = mean_aggregation_operator(&a).row(i).1.iter().sum();
        assert!((s - if nbrs.is_empty() { 0.0 } else { 1.0 }).abs() < 1e-12);
    }
}

#[test]
fn membership_mean_operator_averages_each_graph() {
    let op = membership_mean_operator(&[0, 1, 1, 0, 1], 2).unwrap();
    assert_eq!(op.row(0), (&[0, 3][..], &[0.5, 0.5][..]));
    assert!(matches!(membership_mean_operator(&[0, 0], 2), Err(Error::Dataset(_))));
}

#[test]
fn split_sizes_follow_floor_rule() {
    let s = split_nodes(2708, 3).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (1895, 406, 407));
    s.validate(2708).unwrap();
    assert_eq!(s, split_nodes(2708, 3).unwrap());
    assert_ne!(s, split_nodes(2708, 4).unwrap());
    let g = split_graphs(10, 0).unwrap();
    assert_eq!((g.train.len(), g.val.len(), g.test.len()), (7, 1, 2));
    assert!(matches!(split_nodes(2, 0), Err(Error::Parameter(_))));
    assert!(matches!(split_indices(10, [0.5, 0.5, 0.5], 0), Err(Error::Parameter(_))));
}

#[test]
fn split_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = split_nodes(50, 7).unwrap();
    let p = dir.path().join("split.json");
    s.save(&p).unwrap();
    assert_eq!(Split::load(&p).unwrap(), s);
}

#[test]
fn generators_edge_counts_and_errors() {
    for (n, m) in [(10, 1), (20, 2), (30, 5)] {
        let a = gen_barabasi_albert(n, m, 4).unwrap();
        assert_eq!(a.nnz() / 2, m * (m - 1) / 2 + (n - m) * m);
        assert!(a.is_symmetric());
        assert!((0..n).all(|i| a.get(i, i) == 0.0));
    }
    assert_eq!(gen_random(12, 0.0, 1).unwrap().nnz(), 0);
    assert_eq!(gen_random(12, 1.0, 1).unwrap().nnz(), 12 * 11);
    assert_eq!(gen_barabasi_albert(50, 3, 8).unwrap(), gen_barabasi_albert(50, 3, 8).unwrap());
    assert!(matches!(gen_barabasi_albert(5, 5, 0), Err(Error::Parameter(_))));
    assert!(matches!(gen_barabasi_albert(5, 0, 0), Err(Error::Parameter(_))));
    assert!(matches!(gen_random(5, 1.5, 0), Err(Error::Parameter(_))));
}

#[test]
fn laplace_noise_moments() {
    let x = Tensor::matrix(2, 2, vec![1., 2., 3., 4.]).unwrap();
    assert_eq!(add_laplace_noise(&x, 0.0, 5).unwrap(), x);
    assert!(matches!(add_laplace_noise(&x, -0.1, 5), Err(Error::Parameter(_))));

    let scale = 0.3;
    let zeros = Tensor::zeros(1000, 1000);
    let noise = add_laplace_noise(&zeros, scale, 11).unwrap();
    let n = noise.len() as f64;
    let mean = noise.data().iter().sum::<f64>() / n;
    let var = noise.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!(mean.abs() < 3.0 * scale * 2f64.sqrt() / 1e3);
    assert!((var / (2.0 * scale * scale) - 1.0).abs() < 0.05);
}

#[test]
fn dataset_constructor_rejects_bad_structure() {
    let x = Tensor::zeros(2, 1);
    let asym = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0)]).unwrap();
    assert!(matches!(GraphDataset::new(x.clone(), vec![0, 0], 1, asym), Err(Error::Dataset(_))));
    let looped = SparseMatrix::identity(2);
    assert!(matches!(GraphDataset::new(x.clone(), vec![0, 0], 1, looped), Err(Error::Dataset(_))));
    assert!(matches!(GraphDataset::new(x, vec![0, 3], 2, path_graph(2)), Err(Error::Dataset(_))));
}

/// Cyclic Jacobi eigenvalue iteration for small symmetric matrices.
fn symmetric_eigenvalues(a: &Tensor) -> Vec<f64> {
    let n = a.rows();
    let mut m = a.to_rows();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j].powi(2)).sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}

proptest! {
    #[test]
    fn normalized_adjacency_spectrum_in_unit_interval(n in 1usize..=8, p in 0.0f64..1.0, seed in any::<u64>()) {
        let a = normalize_adjacency(&gen_random(n, p, seed).unwrap());
        prop_assert!(a.is_symmetric());
        let dense = a.to_dense();
        let eig = symmetric_eigenvalues(&dense);
        let trace: f64 = (0..n).map(|i| dense.get(i, i)).sum();
        prop_assert!((eig.iter().sum::<f64>() - trace).abs() < 1e-9);
        for e in eig {
            prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&e), "eigenvalue {}", e);
        }
    }

    #[test]
    fn splits_partition_indices(n in 3usize..500, seed in any::<u64>()) {
        let s = split_nodes(n, seed).unwrap();
        prop_assert!(s.validate(n).is_ok());
        prop_assert_eq!(s.train.len(), (0.7 * n as f64 + 1e-9).floor() as usize);
    }

    #[test]
    fn generated_graphs_are_simple_and_symmetric(n in 2usize..40, m in 1usize..5, seed in any::<u64>()) {
        prop_assume!(m < n);
        for a in [gen_barabasi_albert(n, m, seed).unwrap(), gen_random(n, 0.3, seed).unwrap()] {
            prop_assert!(a.is_symmetric());
            prop_assert!((0..n).all(|i| a.get(i, i) == 0.0));
            prop_assert!(a.vals().iter().all(|&v| v == 1.0));
        }
    }
}
