mod common;

use std::fs;
use std::path::{Path, PathBuf};

use gml_cli::commands::{self, Env, Sweep};
use gml_cli::config::ExperimentConfig;
use gml_cli::presets;
use gml_core::cohort::Variant;
use gml_core::models::Architecture;

use common::{fixture, tiny_config};

fn run(args: &[&str]) -> i32 {
    gml_cli::run(std::iter::once("gml").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    data: PathBuf,
}

fn setup() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let data = root.join("data");
    fs::create_dir_all(&data).unwrap();
    fixture(&data);
    Fixture { _dir: dir, root, data }
}

fn write_config(f: &Fixture, file: &str, text: &str) -> PathBuf {
    let p = f.root.join(file);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn negative_gamma_is_a_config_error_naming_the_field() {
    let f = setup();
    let cfg = write_config(&f, "bad.toml", &tiny_config(&f.data, "GML", &["gcn", "gat"], "gamma = -0.5"));
    let code = run(&["train", "--config", s(&cfg), "--out", s(&f.root.join("out"))]);
    assert_eq!(code, 2);
    let err = commands::load_config(s(&cfg)).unwrap_err().to_string();
    assert!(err.contains("gamma"), "{}", err);
}

#[test]
fn usage_and_lookup_errors_exit_two() {
    assert_eq!(run(&["train", "--out", "x"]), 2);
    assert_eq!(run(&["train", "--config", "no-such-preset", "--out", "x"]), 2);
    assert_eq!(run(&["--parallel", "0", "presets"]), 2);
    assert_eq!(run(&["presets"]), 0);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let f = setup();
    let text = tiny_config(&f.data, "GML", &["gcn", "gat"], "gama = 1.0");
    assert!(ExperimentConfig::parse(&text).unwrap_err().to_string().contains("gama"));
}

#[test]
fn relative_data_path_without_root_is_a_config_error() {
    let f = setup();
    let text = tiny_config(&f.data, "GML", &["gcn", "gat"], "").replace(&format!("{:?}", f.data.display().to_string()), "\"nowhere/at/all\"");
    let cfg = write_config(&f, "rel.toml", &text);
    assert_eq!(run(&["train", "--config", s(&cfg), "--out", s(&f.root.join("out"))]), 2);
}

#[test]
fn train_writes_artifacts_and_reruns_byte_identically() {
    let f = setup();
    let cfg = write_config(&f, "c.toml", &tiny_config(&f.data, "GML-C", &["gcn", "gat"], ""));
    let (a, b) = (f.root.join("a"), f.root.join("b"));
    assert_eq!(run(&["train", "--config", s(&cfg), "--out", s(&a)]), 0);
    assert_eq!(run(&["train", "--config", s(&cfg), "--out", s(&b)]), 0);
    for file in ["metrics.csv", "summary.csv", "summary.json", "reports/seed0.json", "reports/seed1.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{}", file);
    }
    let metrics = fs::read_to_string(a.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines[0], "seed,variant,member,architecture,target,epoch_best,val_acc,test_acc");
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(lines[1].starts_with("0,GML-C,0,GCN,1,"));
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("tiny,2,"));
    assert!(a.join("checkpoints/seed1/member1/manifest.json").exists());
    assert!(a.join("timing.csv").exists());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn seeds_flag_overrides_config_seeds() {
    let f = setup();
    let cfg = write_config(&f, "c.toml", &tiny_config(&f.data, "Ind", &["gcn"], ""));
    let out = f.root.join("o");
    assert_eq!(run(&["train", "--config", s(&cfg), "--seeds", "4,9", "--out", s(&out)]), 0);
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let seeds: Vec<&str> = metrics.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(seeds, ["4", "9"]);
}

#[test]
fn parallel_members_match_serial_metrics() {
    let f = setup();
    let cfg = ExperimentConfig::parse(&tiny_config(&f.data, "GML-Co", &["gcn", "gat", "sage"], "")).unwrap();
    let serial = commands::train(&cfg, &[3], &f.root.join("s"), &Env::default(), false).unwrap();
    let par = Env { parallel: true, ..Env::default() };
    let parallel = commands::train(&cfg, &[3], &f.root.join("p"), &par, false).unwrap();
    assert_eq!(serial[0].report.without_timing(), parallel[0].report.without_timing());
    assert_eq!(fs::read(f.root.join("s/metrics.csv")).unwrap(), fs::read(f.root.join("p/metrics.csv")).unwrap());
}

#[test]
fn checkpoints_reproduce_reported_accuracy() {
    let f = setup();
    let cfg = ExperimentConfig::parse(&tiny_config(&f.data, "GML", &["gcn", "sage"], "")).unwrap();
    let out = f.root.join("o");
    let runs = commands::train(&cfg, &[0], &out, &Env::default(), false).unwrap();
    let ds = gml_cli::data::Dataset::load(&cfg.data, None).unwrap();
    let data = ds.run_data(&cfg.data, cfg.split_seed(0), 0).unwrap();
    for (k, m) in runs[0].report.members.iter().enumerate() {
        assert_eq!(commands::checkpoint_accuracy(&out, 0, k, &data).unwrap(), m.test_acc);
    }
}

#[test]
fn zero_noise_sweep_reproduces_the_clean_run() {
    let f = setup();
    let extra = "\n[bench]\nnoise_scales = [0.0, 0.5]\nnoise_variants = [\"GML-C\", \"Ind\"]\n";
    let cfg = ExperimentConfig::parse(&tiny_config(&f.data, "GML-C", &["gcn", "gat"], extra)).unwrap();
    let clean = commands::train(&cfg, &[0, 1], &f.root.join("clean"), &Env::default(), false).unwrap();
    let rows = commands::bench(&cfg, Sweep::Noise, &[0, 1], &f.root.join("noise"), &Env::default()).unwrap();
    for r in &clean {
        let cell = rows.iter().find(|x| x.axis == "0" && x.method == "GML-C" && x.seed == r.seed).unwrap();
        assert_eq!(cell.test_acc, r.report.target().test_acc);
    }
    assert_eq!(rows.len(), 2 * 2 * 2);
    let header = fs::read_to_string(f.root.join("noise/bench_noise.csv")).unwrap();
    assert!(header.starts_with("scale,method,seed,test_acc,epochs"));
    assert!(f.root.join("noise/bench_noise_summary.csv").exists());
}

#[test]
fn cohort_size_sweep_time_grows_with_size() {
    let f = setup();
    let extra = "\n[bench]\ncohort_sizes = [1, 2, 4]\n";
    let text = tiny_config(&f.data, "GML", &["gcn", "gat"], extra).replace("max_epochs = 40", "max_epochs = 60").replace("patience = 40", "patience = 60");
    let cfg = ExperimentConfig::parse(&text).unwrap();
    let rows = commands::bench(&cfg, Sweep::CohortSize, &[0], &f.root.join("b"), &Env::default()).unwrap();
    let per_epoch: Vec<f64> = rows.iter().map(|r| r.seconds / r.epochs as f64).collect();
    assert_eq!(rows.iter().map(|r| r.axis.as_str()).collect::<Vec<_>>(), ["1", "2", "4"]);
    assert_eq!(rows[0].method, "Ind");
    assert!(per_epoch.windows(2).all(|w| w[1] > w[0]), "{:?}", per_epoch);
    let timing = fs::read_to_string(f.root.join("b/bench_cohort_size_timing.csv")).unwrap();
    assert!(timing.starts_with("size,method,seed,seconds,seconds_per_epoch"));
}

fn iris_config(f: &Fixture) -> PathBuf {
    let mut cfg = presets::preset("iris-structure").unwrap();
    cfg.cohort.max_epochs = Some(60);
    cfg.cohort.patience = Some(60);
    write_config(f, "iris.toml", &cfg.to_toml())
}

#[test]
fn structure_sweep_emits_the_comparison_grid() {
    let f = setup();
    let cfg = iris_config(&f);
    let out = f.root.join("st");
    assert_eq!(run(&["bench", "structure", "--config", s(&cfg), "--seeds", "0", "--out", s(&out)]), 0);
    let grid = fs::read_to_string(out.join("bench_structure_grid.csv")).unwrap();
    let lines: Vec<Vec<&str>> = grid.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(lines[0], ["method", "no_graph", "random", "ba"]);
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1][0], "GCN-Ind");
    assert!(lines[1][1..].iter().all(|c| c.parse::<f64>().is_ok()));
    assert_eq!(lines[2][0], "GML");
    assert_eq!(lines[2][1], "N/A");
    assert!(lines[2][2..].iter().all(|c| c.parse::<f64>().is_ok()));
}

#[test]
fn structure_sweep_needs_tabular_data() {
    let f = setup();
    let cfg = write_config(&f, "c.toml", &tiny_config(&f.data, "GML", &["gcn", "gat"], ""));
    assert_eq!(run(&["bench", "structure", "--config", s(&cfg), "--out", s(&f.root.join("x"))]), 2);
}

#[test]
fn distill_with_baseline_and_failure_modes() {
    let f = setup();
    let cfg = write_config(&f, "c.toml", &tiny_config(&f.data, "GML-W", &["sage", "gcn"], ""));
    let teacher = f.root.join("teacher");
    assert_eq!(run(&["train", "--config", s(&cfg), "--out", s(&teacher)]), 0);
    let out = f.root.join("kd");
    assert_eq!(run(&["distill", "--teacher", s(&teacher), "--out", s(&out), "--with-baseline"]), 0);
    let table = fs::read_to_string(out.join("distill.csv")).unwrap();
    let kinds: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(kinds, ["distilled", "baseline", "distilled", "baseline"]);
    assert!(out.join("distill_summary.csv").exists());

    // same teacher, student data with a different class count
    let other = f.root.join("two");
    fs::create_dir_all(&other).unwrap();
    common::write_citation(&other, "tiny", 40, 2, 5);
    let cfg2 = write_config(&f, "c2.toml", &tiny_config(&other, "Ind", &["gcn"], ""));
    assert_eq!(run(&["distill", "--teacher", s(&teacher), "--config", s(&cfg2), "--out", s(&f.root.join("kd2"))]), 2);

    fs::remove_dir_all(teacher.join("checkpoints/seed1")).unwrap();
    assert_eq!(run(&["distill", "--teacher", s(&teacher), "--out", s(&f.root.join("kd3"))]), 1);
    assert_eq!(run(&["distill", "--teacher", s(&f.root.join("nothing")), "--config", s(&cfg), "--out", s(&f.root.join("kd4"))]), 1);
}

#[test]
fn analyze_commands_write_their_tables() {
    let f = setup();
    let gml = write_config(&f, "g.toml", &tiny_config(&f.data, "GML", &["gcn", "gcn", "gcn"], "").replace("seeds = [0, 1]", "seeds = [0, 1, 2, 3, 4, 5]"));
    let ind = write_config(&f, "i.toml", &tiny_config(&f.data, "Ind", &["gcn"], "").replace("seeds = [0, 1]", "seeds = [0, 1, 2, 3, 4, 5]"));
    let (a, b) = (f.root.join("a"), f.root.join("b"));
    assert_eq!(run(&["train", "--config", s(&gml), "--out", s(&a), "--dump-activations"]), 0);
    assert_eq!(run(&["train", "--config", s(&ind), "--out", s(&b)]), 0);

    let cka = f.root.join("cka.csv");
    let dump = |k: usize| a.join(format!("activations/seed0/member{}", k));
    assert_eq!(run(&["analyze", "cka", "--a", s(&dump(0)), "--b", s(&dump(1)), "--out", s(&cka)]), 0);
    let text = fs::read_to_string(&cka).unwrap();
    assert_eq!(text.lines().next().unwrap(), "layer,b1,b2");
    assert_eq!(text.lines().count(), 3);
    let self_cka = f.root.join("self.csv");
    assert_eq!(run(&["analyze", "cka", "--a", s(&dump(0)), "--b", s(&dump(0)), "--out", s(&self_cka)]), 0);
    let diag: f64 = fs::read_to_string(&self_cka).unwrap().lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((diag - 1.0).abs() < 1e-6);

    let ens = f.root.join("ens.csv");
    assert_eq!(run(&["analyze", "ensemble", "--run", s(&a), "--sizes", "1,2,3", "--out", s(&ens)]), 0);
    let rows = fs::read_to_string(&ens).unwrap();
    assert_eq!(rows.lines().count(), 1 + 6 * 3);

    let wx = f.root.join("w.csv");
    assert_eq!(run(&["analyze", "wilcoxon", "--x", s(&a.join("metrics.csv")), "--y", s(&b.join("metrics.csv")), "--out", s(&wx)]), 0);
    assert!(fs::read_to_string(&wx).unwrap().starts_with("pairs,nonzero,statistic,p_value,exact\n6,"));

    assert_ne!(run(&["analyze", "cka", "--a", s(&f.root.join("nope")), "--b", s(&dump(0)), "--out", s(&cka)]), 0);
    fs::write(f.root.join("junk.csv"), "a,b\n1,2\n").unwrap();
    assert_ne!(run(&["analyze", "wilcoxon", "--x", s(&f.root.join("junk.csv")), "--y", s(&b.join("metrics.csv")), "--out", s(&wx)]), 0);
}

#[test]
fn wilcoxon_command_on_all_positive_differences() {
    let f = setup();
    let write = |name: &str, base: f64| {
        let mut t = String::from("seed,variant,member,architecture,target,epoch_best,val_acc,test_acc\n");
        for i in 0..10 {
            t.push_str(&format!("{},X,0,GCN,1,1,0,{}\n", i, base + i as f64 * 0.7 + if base > 0.0 { 0.1 * (i + 1) as f64 } else { 0.0 }));
        }
        let p = f.root.join(name);
        fs::write(&p, t).unwrap();
        p
    };
    let (x, y) = (write("x.csv", 80.0), write("y.csv", 0.0));
    let w = commands::analyze_wilcoxon(&x, &y, &f.root.join("w.csv")).unwrap();
    assert!(w.exact);
    assert!((w.p_value - 0.00098).abs() < 1e-5, "{}", w.p_value);
}

#[test]
fn presets_cover_the_grid_and_round_trip() {
    let names = presets::names();
    assert_eq!(names.len(), 4 * 3 * 5 + 4);
    for n in &names {
        let cfg = presets::preset(n).unwrap();
        cfg.validate().unwrap();
        assert_eq!(&ExperimentConfig::parse(&cfg.to_toml()).unwrap(), &cfg, "{}", n);
    }
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["presets", "--write", s(dir.path())]), 0);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), names.len());
}

#[test]
fn preset_hyperparameters() {
    let c = presets::preset("cora-sage-gcn-s-gmlc").unwrap();
    assert_eq!(c.cohort.members, [Architecture::Sage, Architecture::Gcn]);
    assert_eq!(c.cohort.variant, Variant::GmlC);
    assert_eq!(c.seeds, (0..10).collect::<Vec<u64>>());
    assert_eq!(c.data.split, Some([0.70, 0.15, 0.15]));
    let h = c.hyper();
    assert_eq!((h.gamma, h.beta, h.weight_decay, h.patience, h.weight_hidden, h.temperature), (0.01, 1.0, 5e-4, 1500, 64, 1.0));
    let sage = c.spec(Architecture::Sage, 1433, 7);
    assert_eq!(sage.hidden, [64, 64]);
    assert_eq!(c.spec(Architecture::Gat, 1433, 7).heads, 4);

    let cs = presets::preset("citeseer-gat-sage-s-gml").unwrap();
    assert_eq!(cs.cohort.members, [Architecture::Sage, Architecture::Gat]);
    assert_eq!((cs.hyper().gamma, cs.hyper().beta), (1.0, 1.0));
    assert_eq!(presets::preset("pubmed-gcn-gat-c-ind").unwrap().cohort.members, [Architecture::Gcn]);

    let p = presets::preset("proteins-gcn-gat-c-gmlco").unwrap();
    let h = p.hyper();
    assert_eq!((h.temperature, h.gamma, h.beta, h.patience, h.weight_hidden), (6.0, 1.0, 1.0, 200, 16));
    assert_eq!(p.spec(Architecture::Gcn, 3, 2).hidden, [16, 16]);

    let iris = presets::preset("iris-structure").unwrap();
    assert_eq!((iris.bench.random_p, iris.bench.ba_m), (0.04, 3));
    let noise = presets::preset("cora-noise").unwrap();
    assert_eq!(noise.bench.noise_scales, [0.0, 0.1, 0.3, 0.5, 0.9]);
    assert_eq!(noise.cohort.members, [Architecture::Gcn, Architecture::Gat]);
}
