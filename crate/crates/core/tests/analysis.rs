use gml_core::analysis::*;
use gml_core::ndtape::Tensor;
use gml_core::rng::SplitMix64;
use gml_core::Error;
use proptest::prelude::*;

fn rand_tensor(rng: &mut SplitMix64, r: usize, c: usize) -> Tensor {
    Tensor::matrix(r, c, (0..r * c).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).unwrap()
}

/// Orthogonal matrix from Gram-Schmidt on random columns.
fn orthogonal(rng: &mut SplitMix64, d: usize) -> Tensor {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        for c in &cols {
            let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.iter().map(|a| a / norm).collect());
        }
    }
    let mut q = Tensor::zeros(d, d);
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in c.iter().enumerate() {
            q.set(i, j, *v);
        }
    }
    q
}

fn permute_rows(x: &Tensor, perm: &[usize]) -> Tensor {
    x.select_rows(perm).unwrap()
}

#[test]
fn cka_invariances() {
    let mut rng = SplitMix64::new(1);
    let x = rand_tensor(&mut rng, 30, 6);
    assert!((linear_cka(&x, &x).unwrap() - 1.0).abs() < 1e-10);
    assert!((linear_cka(&x, &x.map(|v| -3.5 * v)).unwrap() - 1.0).abs() < 1e-10);
    let r = orthogonal(&mut rng, 6);
    assert!((linear_cka(&x, &x.matmul(&r).unwrap()).unwrap() - 1.0).abs() < 1e-10);
    let shifted = x.map(|v| v + 10.0);
    assert!((linear_cka(&x, &shifted).unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn cka_against_gram_form() {
    // HSIC form with centered Gram matrices K = XXᵀ, L = YYᵀ
    let mut rng = SplitMix64::new(2);
    let (x, y) = (rand_tensor(&mut rng, 12, 4), rand_tensor(&mut rng, 12, 7));
    let n = 12;
    let gram = |a: &Tensor| {
        let g = a.matmul(&a.transpose()).unwrap();
        let mut c = Tensor::zeros(n, n);
        let rm: Vec<f64> = (0..n).map(|i| g.row(i).iter().sum::<f64>() / n as f64).collect();
        let all = rm.iter().sum::<f64>() / n as f64;
        for i in 0..n {
            for j in 0..n {
                c.set(i, j, g.get(i, j) - rm[i] - rm[j] + all);
            }
        }
        c
    };
    let (k, l) = (gram(&x), gram(&y));
    let dot = |a: &Tensor, b: &Tensor| a.data().iter().zip(b.data()).map(|(p, q)| p * q).sum::<f64>();
    let want = dot(&k, &l) / (dot(&k, &k).sqrt() * dot(&l, &l).sqrt());
    assert!((linear_cka(&x, &y).unwrap() - want).abs() < 1e-12);
}

#[test]
fn cka_degenerate_and_errors() {
    let mut rng = SplitMix64::new(3);
    let x = rand_tensor(&mut rng, 5, 3);
    assert_eq!(linear_cka(&x, &Tensor::full(5, 2, 4.0)).unwrap(), 0.0);
    assert!(matches!(linear_cka(&x, &rand_tensor(&mut rng, 4, 3)), Err(Error::Dimension(_))));
}

#[test]
fn cka_matrix_and_dump_round_trip() {
    let mut rng = SplitMix64::new(4);
    let layers: Vec<Tensor> = [5, 3, 2].iter().map(|&d| rand_tensor(&mut rng, 20, d)).collect();
    let m = cka_matrix(&layers, &layers).unwrap();
    assert_eq!(m.dims(), (3, 3));
    for i in 0..3 {
        assert!((m.get(i, i) - 1.0).abs() < 1e-12);
        for j in 0..3 {
            assert!((m.get(i, j) - m.get(j, i)).abs() < 1e-12);
        }
    }

    let mut perm: Vec<usize> = (0..20).collect();
    rng.shuffle(&mut perm);
    let other: Vec<Tensor> = [4, 4, 2].iter().map(|&d| rand_tensor(&mut rng, 20, d)).collect();
    let base = cka_matrix(&layers, &other).unwrap();
    let pl: Vec<Tensor> = layers.iter().map(|t| permute_rows(t, &perm)).collect();
    let po: Vec<Tensor> = other.iter().map(|t| permute_rows(t, &perm)).collect();
    assert!(cka_matrix(&pl, &po).unwrap().max_abs_diff(&base) < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let meta = DumpMeta { model: "gcn".into(), seed: 3, dataset: "toy".into() };
    let dump = ActivationDump::new(meta, layers.clone()).unwrap();
    dump.save(&dir.path().join("dump")).unwrap();
    assert_eq!(ActivationDump::load(&dir.path().join("dump")).unwrap(), dump);
    let bad = ActivationDump::new(dump.meta.clone(), vec![layers[0].clone(), rand_tensor(&mut rng, 3, 2)]);
    assert!(bad.is_err());

    let csv_path = dir.path().join("cka.csv");
    write_cka_csv(&csv_path, &m).unwrap();
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "layer,b1,b2,b3");
    assert!(lines[1].starts_with("a1,1.000000,"));
    assert_eq!(lines.len(), 4);
}

#[test]
fn ensemble_rules() {
    let p = Tensor::from_rows(&[vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
    assert_eq!(ensemble_predict(std::slice::from_ref(&p)).unwrap(), vec![1, 0]);
    let a = Tensor::from_rows(&[vec![0.9, 0.1]]).unwrap();
    let b = Tensor::from_rows(&[vec![0.1, 0.9]]).unwrap();
    assert_eq!(ensemble_predict(&[a.clone(), b.clone()]).unwrap(), vec![0]);
    assert_eq!(ensemble_predict(&[b, a]).unwrap(), vec![0]);
    assert!(ensemble_predict(&[]).is_err());
    assert!(ensemble_predict(&[p, Tensor::zeros(2, 3)]).is_err());
}

#[test]
fn ensemble_matches_per_node_average() {
    let mut rng = SplitMix64::new(5);
    let members: Vec<Tensor> = (0..3)
        .map(|_| {
            let z = rand_tensor(&mut rng, 25, 4);
            gml_core::ndtape::softmax(&z, 1.0).unwrap()
        })
        .collect();
    let got = ensemble_predict(&members).unwrap();
    for (i, &label) in got.iter().enumerate() {
        let avg: Vec<f64> = (0..4).map(|c| members.iter().map(|m| m.get(i, c)).sum::<f64>() / 3.0).collect();
        let best = (0..4).fold(0, |b, c| if avg[c] > avg[b] { c } else { b });
        assert_eq!(label, best);
    }
}

/// One-sided p by listing every sign assignment.
fn enumerate_p(x: &[f64], y: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    let n = d.len();
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|a| {
            let below = abs.iter().filter(|b| *b < a).count() as f64;
            let equal = abs.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let w: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        let s: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
        if s >= w - 1e-9 {
            hits += 1;
        }
    }
    (w, hits as f64 / (1u64 << n) as f64)
}

#[test]
fn wilcoxon_all_positive_ten() {
    let x: Vec<f64> = (0..10).map(|i| 80.0 + i as f64).collect();
    let y: Vec<f64> = (0..10).map(|i| 79.0 + i as f64 - 0.1 * i as f64).collect();
    let r = wilcoxon_signed_rank(&x, &y).unwrap();
    assert!(r.exact);
    assert_eq!(r.statistic, 55.0);
    assert_eq!(r.p_value, 1.0 / 1024.0);
    assert!((r.p_value - 0.00098).abs() < 1e-5);
}

#[test]
fn wilcoxon_errors() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    assert!(matches!(wilcoxon_signed_rank(&x, &x), Err(Error::DegenerateData(_))));
    assert!(wilcoxon_signed_rank(&x[..4], &x[..4]).is_err());
    assert!(matches!(wilcoxon_signed_rank(&x, &x[..4]), Err(Error::Dimension(_))));
}

#[test]
fn wilcoxon_six_integers_vs_enumeration() {
    let x = [7.0, 3.0, 9.0, 4.0, 6.0, 8.0];
    let y = [5.0, 4.0, 6.0, 2.0, 1.0, 6.0];
    let r = wilcoxon_signed_rank(&x, &y).unwrap();
    let (w, p) = enumerate_p(&x, &y);
    assert_eq!(r.n, 6);
    assert_eq!(r.statistic, w);
    assert_eq!(r.p_value, p);
}

#[test]
fn wilcoxon_normal_approximation() {
    let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
    let y: Vec<f64> = (0..30).map(|i| if i % 4 == 0 { i as f64 + 0.5 + i as f64 / 1000.0 } else { i as f64 - 1.0 - i as f64 / 100.0 }).collect();
    let r = wilcoxon_signed_rank(&x, &y).unwrap();
    assert!(!r.exact);
    assert_eq!(r.n, 30);
    // no ties: mean n(n+1)/4, variance n(n+1)(2n+1)/24
    let z = (r.statistic - 232.5 - 0.5) / (30.0f64 * 31.0 * 61.0 / 24.0).sqrt();
    let p = 0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2);
    assert!((r.p_value - p).abs() < 1e-14);
    assert!(r.p_value < 0.01);
}

#[test]
fn aggregate_closed_forms() {
    let row = |c: &str, s: u64, v: f64| MetricRow { config: c.into(), seed: s, test_acc: v };
    let summary = aggregate(&[row("a", 0, 86.0), row("b", 0, 70.0), row("a", 1, 88.0)]);
    assert_eq!(summary[0].config, "a");
    assert_eq!(summary[0].mean, 87.0);
    assert!((summary[0].std.unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(summary[1].std, None);

    let vals = [81.2, 83.5, 80.9, 84.1, 82.2, 79.8, 83.0, 82.7, 81.5, 84.4];
    let rows: Vec<MetricRow> = vals.iter().enumerate().map(|(i, &v)| row("c", i as u64, v)).collect();
    let s = &aggregate(&rows)[0];
    let mean = 823.3 / 10.0;
    let ss: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum();
    assert!((s.mean - mean).abs() < 1e-12);
    assert!((s.std.unwrap() - (ss / 9.0).sqrt()).abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    write_summary_csv(&dir.path().join("s.csv"), &summary).unwrap();
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(text, "config,n,mean,std\na,2,87.0000,1.4142\nb,1,70.0000,\n");
    write_summary_json(&dir.path().join("s.json"), &summary).unwrap();
    let back: Vec<MetricSummary> = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(back, summary);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cka_in_unit_interval(seed in any::<u64>(), n in 2usize..15, d1 in 1usize..6, d2 in 1usize..6) {
        let mut rng = SplitMix64::new(seed);
        let (a, b) = (rand_tensor(&mut rng, n, d1), rand_tensor(&mut rng, n, d2));
        let v = linear_cka(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
    }

    #[test]
    fn wilcoxon_exact_matches_enumeration(seed in any::<u64>(), n in 5usize..=12) {
        let mut rng = SplitMix64::new(seed);
        // small integers force ties and zero differences
        let x: Vec<f64> = (0..n).map(|_| rng.below(7) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.below(7) as f64).collect();
        match wilcoxon_signed_rank(&x, &y) {
            Ok(r) => {
                let (w, p) = enumerate_p(&x, &y);
                prop_assert_eq!(r.statistic, w);
                prop_assert!((r.p_value - p).abs() < 1e-15);
            }
            Err(Error::DegenerateData(_)) => prop_assert!(x == y),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn ensemble_ignores_member_order(seed in any::<u64>(), k in 1usize..5) {
        let mut rng = SplitMix64::new(seed);
        let mut members: Vec<Tensor> = (0..k).map(|_| rand_tensor(&mut rng, 8, 3)).collect();
        let before = ensemble_predict(&members).unwrap();
        rng.shuffle(&mut members);
        prop_assert_eq!(ensemble_predict(&members).unwrap(), before);
    }
}
