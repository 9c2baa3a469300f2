use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gml_core::analysis::{
    aggregate, cka_matrix, ensemble_predict, wilcoxon_signed_rank, write_cka_csv, write_summary_csv, write_summary_json,
    ActivationDump, DumpMeta, MetricRow, MetricSummary, Wilcoxon,
};
use gml_core::cohort::{
    accuracy, distill, teacher_targets, train_cohort, CohortConfig, DistillConfig, MemberConfig, TrainData, TrainOptions,
    TrainReport, Variant,
};
use gml_core::models::{load_checkpoint, predict, save_checkpoint, Architecture, ModelSpec};
use gml_core::ndtape::softmax;
use serde::{Deserialize, Serialize};

use crate::config::{aux_seed, ExperimentConfig, GraphSource, DATA_DIR_VAR};
use crate::data::Dataset;
use crate::error::{CliError, CliResult};
use crate::presets;

/// Process-level settings shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Env {
    pub data_root: Option<PathBuf>,
    pub parallel: bool,
}

impl Env {
    pub fn from_env(parallel: bool) -> Self {
        Self { data_root: std::env::var_os(DATA_DIR_VAR).map(PathBuf::from), parallel }
    }

    fn options(&self) -> TrainOptions {
        TrainOptions { parallel: self.parallel, history: true }
    }
}

/// A config file path, or the name of a shipped preset.
pub fn load_config(arg: &str) -> CliResult<ExperimentConfig> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e)))?;
        return ExperimentConfig::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {}", path.display(), m)),
            other => other,
        });
    }
    presets::preset(arg).ok_or_else(|| CliError::Config(format!("--config: {:?} is neither a file nor a preset", arg)))
}

/// Accuracy as a percentage with four decimals.
pub fn pct(x: f64) -> String {
    format!("{:.4}", 100.0 * x)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {}", dir.display(), e)))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| CliError::Runtime(format!("{}: {}", path.display(), e)))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(out: &Path, stem: &str, rows: &[MetricRow]) -> CliResult<Vec<MetricSummary>> {
    let summary = aggregate(rows);
    write_summary_csv(&out.join(format!("{}.csv", stem)), &summary)?;
    write_summary_json(&out.join(format!("{}.json", stem)), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub name: String,
    pub config_hash: String,
    pub target: usize,
    pub seeds: Vec<u64>,
    pub seconds: Vec<f64>,
    pub total_seconds: f64,
    pub version: String,
}

fn manifest(command: &str, cfg: &ExperimentConfig, seeds: &[u64], seconds: Vec<f64>) -> RunManifest {
    RunManifest {
        command: command.into(),
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        target: cfg.cohort.target,
        seeds: seeds.to_vec(),
        total_seconds: seconds.iter().sum(),
        seconds,
        version: env!("CARGO_PKG_VERSION").into(),
    }
}

/// One seed of a cohort run.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub report: TrainReport,
}

fn checkpoint_dir(run: &Path, seed: u64, member: usize) -> PathBuf {
    run.join("checkpoints").join(format!("seed{}", seed)).join(format!("member{}", member))
}

/// Train the configured cohort once per seed and write metrics, reports,
/// checkpoints and (optionally) activation dumps under `out`.
pub fn train(cfg: &ExperimentConfig, seeds: &[u64], out: &Path, env: &Env, dump: bool) -> CliResult<Vec<SeedRun>> {
    create_dir(out)?;
    let ds = Dataset::load(&cfg.data, env.data_root.as_deref())?;
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    let (d, c) = (ds.num_features(), ds.num_classes());
    let mut runs = Vec::new();
    let mut metrics = Vec::new();
    let mut timing = Vec::new();
    let mut summary_rows = Vec::new();
    let mut seconds = Vec::new();
    for &seed in seeds {
        let start = Instant::now();
        let data = ds.run_data(&cfg.data, cfg.split_seed(seed), seed)?;
        let cc = cfg.cohort_config(d, c, seed);
        let outcome = train_cohort(&data, &cc, env.options())?;
        let r = &outcome.report;
        for (k, (m, params)) in r.members.iter().zip(&outcome.params).enumerate() {
            let spec = &cc.members[k].spec;
            let extra = serde_json::json!({ "run_seed": seed, "variant": r.variant, "best_epoch": m.best_epoch });
            save_checkpoint(&checkpoint_dir(out, seed, k), spec, cc.members[k].seed, params, extra)?;
            if dump {
                let pred = predict(spec, params, &data.input)?;
                let meta = DumpMeta { model: spec.architecture.to_string(), seed: cc.members[k].seed, dataset: cfg.name.clone() };
                ActivationDump::new(meta, pred.activations)?
                    .save(&out.join("activations").join(format!("seed{}", seed)).join(format!("member{}", k)))?;
            }
            metrics.push(vec![
                seed.to_string(),
                r.variant.to_string(),
                k.to_string(),
                m.architecture.to_string(),
                u8::from(k == r.target_index).to_string(),
                m.best_epoch.to_string(),
                pct(m.val_acc),
                pct(m.test_acc),
            ]);
            timing.push(vec![seed.to_string(), k.to_string(), format!("{:.3}", m.seconds), r.epochs_run.to_string()]);
            summary_rows.push(MetricRow {
                config: format!("{}/member{}-{}", cfg.name, k, m.architecture),
                seed,
                test_acc: 100.0 * m.test_acc,
            });
        }
        summary_rows.push(MetricRow { config: cfg.name.clone(), seed, test_acc: 100.0 * r.target().test_acc });
        create_dir(&out.join("reports"))?;
        write_json(&out.join("reports").join(format!("seed{}.json", seed)), &r.without_timing())?;
        log::info!(
            "{} seed {}: target test {} (epoch {}, {} epochs run)",
            cfg.name,
            seed,
            pct(r.target().test_acc),
            r.target().best_epoch,
            r.epochs_run
        );
        seconds.push(start.elapsed().as_secs_f64());
        runs.push(SeedRun { seed, report: outcome.report });
    }
    write_csv(
        &out.join("metrics.csv"),
        &["seed", "variant", "member", "architecture", "target", "epoch_best", "val_acc", "test_acc"],
        &metrics,
    )?;
    write_csv(&out.join("timing.csv"), &["seed", "member", "seconds", "epochs"], &timing)?;
    let target_only: Vec<MetricRow> = summary_rows.iter().filter(|r| r.config == cfg.name).cloned().collect();
    let mut ordered = target_only;
    ordered.extend(summary_rows.into_iter().filter(|r| r.config != cfg.name));
    write_summary(out, "summary", &ordered)?;
    write_json(&out.join("manifest.json"), &manifest("train", cfg, seeds, seconds))?;
    Ok(runs)
}

fn read_manifest(run: &Path) -> CliResult<RunManifest> {
    let path = run.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| CliError::Runtime(format!("{}: {}", path.display(), e)))?;
    Ok(serde_json::from_str(&text)?)
}

/// Config stored with a finished run.
pub fn run_config(run: &Path) -> CliResult<ExperimentConfig> {
    let path = run.join("config.toml");
    let text = fs::read_to_string(&path).map_err(|e| CliError::Runtime(format!("{}: {}", path.display(), e)))?;
    ExperimentConfig::parse(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillRow {
    pub seed: u64,
    pub kind: &'static str,
    pub epoch_best: usize,
    pub val_acc: f64,
    pub test_acc: f64,
}

fn student(cfg: &ExperimentConfig, d: usize, c: usize, seed: u64) -> MemberConfig {
    MemberConfig { spec: cfg.spec(Architecture::Mlp, d, c), seed: aux_seed(seed, 7) }
}

/// Distill each seed's target model of the run in `teacher` into an MLP;
/// with `baseline`, also train the same MLP on labels alone.
pub fn distill_run(
    cfg: &ExperimentConfig,
    teacher: &Path,
    seeds: &[u64],
    out: &Path,
    env: &Env,
    baseline: bool,
) -> CliResult<Vec<DistillRow>> {
    let tm = read_manifest(teacher)?;
    create_dir(out)?;
    let ds = Dataset::load(&cfg.data, env.data_root.as_deref())?;
    let (d, c) = (ds.num_features(), ds.num_classes());
    let hyper = cfg.hyper();
    let mut rows = Vec::new();
    let mut seconds = Vec::new();
    for &seed in seeds {
        let start = Instant::now();
        let dir = checkpoint_dir(teacher, seed, tm.target);
        if !dir.exists() {
            return Err(CliError::Runtime(format!("teacher checkpoint {} not found", dir.display())));
        }
        let (tspec, _, tparams) = load_checkpoint(&dir)?;
        if tspec.num_classes != c || tspec.input_dim != d {
            return Err(CliError::Config(format!(
                "teacher predicts {} classes from {} features, data has {} and {}",
                tspec.num_classes, tspec.input_dim, c, d
            )));
        }
        let data = ds.run_data(&cfg.data, cfg.split_seed(seed), seed)?;
        let targets = teacher_targets(&tspec, &tparams, &data)?;
        let dc = DistillConfig {
            student: student(cfg, d, c, seed),
            learning_rate: hyper.learning_rate,
            weight_decay: hyper.weight_decay,
            max_epochs: hyper.max_epochs,
            patience: hyper.patience,
        };
        let r = distill(&data, &targets, &dc)?.report;
        rows.push(DistillRow { seed, kind: "distilled", epoch_best: r.best_epoch, val_acc: r.val_acc, test_acc: r.test_acc });
        if baseline {
            let cc = CohortConfig::new(vec![dc.student.clone()], Variant::Ind, hyper);
            let b = train_cohort(&data, &cc, env.options())?.report;
            let t = b.target();
            rows.push(DistillRow { seed, kind: "baseline", epoch_best: t.best_epoch, val_acc: t.val_acc, test_acc: t.test_acc });
        }
        seconds.push(start.elapsed().as_secs_f64());
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.seed.to_string(), r.kind.into(), r.epoch_best.to_string(), pct(r.val_acc), pct(r.test_acc)])
        .collect();
    write_csv(&out.join("distill.csv"), &["seed", "kind", "epoch_best", "val_acc", "test_acc"], &table)?;
    let metric_rows: Vec<MetricRow> = rows
        .iter()
        .map(|r| MetricRow { config: r.kind.to_string(), seed: r.seed, test_acc: 100.0 * r.test_acc })
        .collect();
    let summary = write_summary(out, "distill_summary", &metric_rows)?;
    if let (Some(dist), Some(base)) =
        (summary.iter().find(|s| s.config == "distilled"), summary.iter().find(|s| s.config == "baseline"))
    {
        println!("distilled {:.2} vs baseline {:.2} (delta {:+.2})", dist.mean, base.mean, dist.mean - base.mean);
    }
    write_json(&out.join("manifest.json"), &manifest("distill", cfg, seeds, seconds))?;
    Ok(rows)
}

/// CKA between every layer of two activation dumps.
pub fn analyze_cka(a: &Path, b: &Path, out: &Path) -> CliResult<gml_core::ndtape::Tensor> {
    let (da, db) = (ActivationDump::load(a)?, ActivationDump::load(b)?);
    let m = cka_matrix(&da.layers, &db.layers)?;
    if let Some(dir) = out.parent() {
        create_dir(dir)?;
    }
    write_cka_csv(out, &m)?;
    Ok(m)
}

fn seed_dirs(run: &Path) -> CliResult<Vec<u64>> {
    let dir = run.join("checkpoints");
    let mut seeds: Vec<u64> = fs::read_dir(&dir)
        .map_err(|e| CliError::Runtime(format!("{}: {}", dir.display(), e)))?
        .filter_map(|e| e.ok()?.file_name().to_str()?.strip_prefix("seed")?.parse().ok())
        .collect();
    seeds.sort_unstable();
    Ok(seeds)
}

/// Test accuracy of the ensemble of the first `n` members of each seed.
pub fn analyze_ensemble(run: &Path, sizes: &[usize], out: &Path, env: &Env) -> CliResult<Vec<(u64, usize, f64)>> {
    let cfg = run_config(run)?;
    let ds = Dataset::load(&cfg.data, env.data_root.as_deref())?;
    let mut rows = Vec::new();
    for seed in seed_dirs(run)? {
        let data = ds.run_data(&cfg.data, cfg.split_seed(seed), seed)?;
        let mut probs = Vec::new();
        let mut k = 0;
        while checkpoint_dir(run, seed, k).exists() {
            let (spec, _, params) = load_checkpoint(&checkpoint_dir(run, seed, k))?;
            probs.push(softmax(&predict(&spec, &params, &data.input)?.logits, 1.0)?);
            k += 1;
        }
        for &n in sizes {
            if n == 0 || n > probs.len() {
                log::warn!("seed {}: ensemble of {} skipped, run has {} members", seed, n, probs.len());
                continue;
            }
            let labels = ensemble_predict(&probs[..n])?;
            let hits = data.split.test.iter().filter(|&&i| labels[i] == data.labels[i]).count();
            rows.push((seed, n, hits as f64 / data.split.test.len().max(1) as f64));
        }
    }
    if let Some(dir) = out.parent() {
        create_dir(dir)?;
    }
    let table: Vec<Vec<String>> = rows.iter().map(|(s, n, a)| vec![s.to_string(), n.to_string(), pct(*a)]).collect();
    write_csv(out, &["seed", "members", "test_acc"], &table)?;
    Ok(rows)
}

/// Target-member test accuracies of a metrics file, keyed by seed.
pub fn target_accuracies(metrics: &Path) -> CliResult<Vec<(u64, f64)>> {
    let mut r = csv::Reader::from_path(metrics)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Runtime(format!("{}: missing column {}", metrics.display(), name)))
    };
    let (seed_c, target_c, acc_c) = (col("seed")?, col("target")?, col("test_acc")?);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if &rec[target_c] != "1" {
            continue;
        }
        let parse_err = |what: &str| CliError::Runtime(format!("{}: bad {} {:?}", metrics.display(), what, rec.as_slice()));
        let seed = rec[seed_c].parse().map_err(|_| parse_err("seed"))?;
        let acc = rec[acc_c].parse().map_err(|_| parse_err("test_acc"))?;
        out.push((seed, acc));
    }
    out.sort_by_key(|p| p.0);
    Ok(out)
}

/// Signed-rank test that the target of run `x` beats the target of run `y`,
/// pairing seeds.
pub fn analyze_wilcoxon(x: &Path, y: &Path, out: &Path) -> CliResult<Wilcoxon> {
    let (a, b) = (target_accuracies(x)?, target_accuracies(y)?);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (seed, v) in &a {
        if let Some((_, w)) = b.iter().find(|(s, _)| s == seed) {
            xs.push(*v);
            ys.push(*w);
        }
    }
    let w = wilcoxon_signed_rank(&xs, &ys)?;
    if let Some(dir) = out.parent() {
        create_dir(dir)?;
    }
    write_csv(
        out,
        &["pairs", "nonzero", "statistic", "p_value", "exact"],
        &[vec![xs.len().to_string(), w.n.to_string(), w.statistic.to_string(), format!("{:.6e}", w.p_value), w.exact.to_string()]],
    )?;
    Ok(w)
}

/// One cell of a sweep: label, seed and target test accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: String,
    pub method: String,
    pub seed: u64,
    pub test_acc: f64,
    pub epochs: usize,
    pub seconds: f64,
}

fn run_cell(ds: &Dataset, cfg: &ExperimentConfig, data: &TrainData, members: &[Architecture], variant: Variant, seed: u64, env: &Env) -> CliResult<(f64, usize, f64)> {
    let (d, c) = (ds.num_features(), ds.num_classes());
    let mut cc = cfg.cohort_with(members, variant, d, c, seed);
    cc.target_index = cc.target_index.min(members.len() - 1);
    let r = train_cohort(data, &cc, env.options())?.report;
    Ok((r.target().test_acc, r.epochs_run, r.seconds))
}

fn sweep_tables(out: &Path, stem: &str, axis: &str, rows: &[SweepRow]) -> CliResult<Vec<MetricSummary>> {
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.axis.clone(), r.method.clone(), r.seed.to_string(), pct(r.test_acc), r.epochs.to_string()])
        .collect();
    write_csv(&out.join(format!("{}.csv", stem)), &[axis, "method", "seed", "test_acc", "epochs"], &table)?;
    let timing: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![r.axis.clone(), r.method.clone(), r.seed.to_string(), format!("{:.3}", r.seconds), format!("{:.6}", r.seconds / r.epochs.max(1) as f64)]
        })
        .collect();
    write_csv(&out.join(format!("{}_timing.csv", stem)), &[axis, "method", "seed", "seconds", "seconds_per_epoch"], &timing)?;
    let metric: Vec<MetricRow> =
        rows.iter().map(|r| MetricRow { config: format!("{}={}/{}", axis, r.axis, r.method), seed: r.seed, test_acc: 100.0 * r.test_acc }).collect();
    write_summary(out, &format!("{}_summary", stem), &metric)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    CohortSize,
    Noise,
    Structure,
}

pub fn bench(cfg: &ExperimentConfig, sweep: Sweep, seeds: &[u64], out: &Path, env: &Env) -> CliResult<Vec<SweepRow>> {
    create_dir(out)?;
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    let ds = Dataset::load(&cfg.data, env.data_root.as_deref())?;
    let target_arch = cfg.cohort.members[cfg.cohort.target.min(cfg.cohort.members.len() - 1)];
    let mut rows = Vec::new();
    let mut push = |axis: String, method: String, seed: u64, cell: (f64, usize, f64)| {
        rows.push(SweepRow { axis, method, seed, test_acc: cell.0, epochs: cell.1, seconds: cell.2 });
    };
    let stem = match sweep {
        Sweep::CohortSize => {
            for &size in &cfg.bench.cohort_sizes {
                if size == 0 {
                    return Err(CliError::Config("bench.cohort_sizes: sizes must be positive".into()));
                }
                let mut members = vec![target_arch];
                members.extend(cfg.cohort.members.iter().enumerate().filter(|(k, _)| *k != cfg.cohort.target).map(|(_, a)| *a).cycle().take(size - 1));
                let variant = if size == 1 { Variant::Ind } else { cfg.cohort.variant };
                let mut sized = cfg.clone();
                sized.cohort.target = 0;
                for &seed in seeds {
                    let data = ds.run_data(&cfg.data, cfg.split_seed(seed), seed)?;
                    let cell = run_cell(&ds, &sized, &data, &members, variant, seed, env)?;
                    push(size.to_string(), variant.to_string(), seed, cell);
                }
            }
            "bench_cohort_size"
        }
        Sweep::Noise => {
            for &scale in &cfg.bench.noise_scales {
                let mut dc = cfg.data.clone();
                dc.noise = scale;
                for &variant in &cfg.bench.noise_variants {
                    let (members, mut vcfg) = if variant == Variant::Ind { (vec![target_arch], cfg.clone()) } else { (cfg.cohort.members.clone(), cfg.clone()) };
                    if variant == Variant::Ind {
                        vcfg.cohort.target = 0;
                    }
                    for &seed in seeds {
                        let data = ds.run_data(&dc, cfg.split_seed(seed), seed)?;
                        let cell = run_cell(&ds, &vcfg, &data, &members, variant, seed, env)?;
                        push(format!("{}", scale), variant.to_string(), seed, cell);
                    }
                }
            }
            "bench_noise"
        }
        Sweep::Structure => {
            let graphs = [
                ("no_graph", GraphSource::None),
                ("random", GraphSource::Random { p: cfg.bench.random_p }),
                ("ba", GraphSource::BarabasiAlbert { m: cfg.bench.ba_m }),
            ];
            if !matches!(ds, Dataset::Table(_)) {
                return Err(CliError::Config("data.format: the structure sweep needs tabular data".into()));
            }
            let mut solo = cfg.clone();
            solo.cohort.target = 0;
            for (label, source) in graphs {
                let mut dc = cfg.data.clone();
                dc.graph = Some(source);
                for &seed in seeds {
                    let data = ds.run_data(&dc, cfg.split_seed(seed), seed)?;
                    let arch = if source == GraphSource::None { Architecture::Mlp } else { target_arch };
                    let cell = run_cell(&ds, &solo, &data, &[arch], Variant::Ind, seed, env)?;
                    push(label.into(), format!("{}-Ind", target_arch), seed, cell);
                    if source != GraphSource::None {
                        let cell = run_cell(&ds, cfg, &data, &cfg.cohort.members, cfg.cohort.variant, seed, env)?;
                        push(label.into(), format!("{}", cfg.cohort.variant), seed, cell);
                    }
                }
            }
            "bench_structure"
        }
    };
    let axis = match sweep {
        Sweep::CohortSize => "size",
        Sweep::Noise => "scale",
        Sweep::Structure => "graph",
    };
    let summary = sweep_tables(out, stem, axis, &rows)?;
    if sweep == Sweep::Structure {
        structure_grid(out, &rows)?;
    }
    for s in &summary {
        println!("{:<40} {:>8.2} {}", s.config, s.mean, s.std.map(|v| format!("± {:.2}", v)).unwrap_or_default());
    }
    write_json(&out.join("manifest.json"), &manifest(stem, cfg, seeds, vec![rows.iter().map(|r| r.seconds).sum()]))?;
    Ok(rows)
}

/// Methods by graph kinds; cells are mean test accuracy or `N/A`.
fn structure_grid(out: &Path, rows: &[SweepRow]) -> CliResult<()> {
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let table: Vec<Vec<String>> = methods
        .iter()
        .map(|m| {
            let mut line = vec![m.to_string()];
            for g in ["no_graph", "random", "ba"] {
                let v: Vec<f64> = rows.iter().filter(|r| r.method == *m && r.axis == g).map(|r| r.test_acc).collect();
                line.push(if v.is_empty() { "N/A".into() } else { format!("{:.2}", 100.0 * v.iter().sum::<f64>() / v.len() as f64) });
            }
            line
        })
        .collect();
    write_csv(&out.join("bench_structure_grid.csv"), &["method", "no_graph", "random", "ba"], &table)
}

/// Standard spec for a dataset, used when reporting dimensions.
pub fn describe(cfg: &ExperimentConfig, env: &Env) -> CliResult<String> {
    let ds = Dataset::load(&cfg.data, env.data_root.as_deref())?;
    let specs: Vec<ModelSpec> = cfg.cohort.members.iter().map(|&a| cfg.spec(a, ds.num_features(), ds.num_classes())).collect();
    Ok(format!(
        "{}: {} examples, {} features, {} classes; members {}",
        cfg.name,
        ds.num_examples(),
        ds.num_features(),
        ds.num_classes(),
        specs.iter().map(|s| format!("{}{:?}", s.architecture, s.hidden)).collect::<Vec<_>>().join(", ")
    ))
}

/// Mean target accuracy per seed list, used by callers that only need a
/// number.
pub fn mean_target(runs: &[SeedRun]) -> f64 {
    runs.iter().map(|r| r.report.target().test_acc).sum::<f64>() / runs.len().max(1) as f64
}

/// Test accuracy of a trained member recomputed from its checkpoint.
pub fn checkpoint_accuracy(run: &Path, seed: u64, member: usize, data: &TrainData) -> CliResult<f64> {
    let (spec, _, params) = load_checkpoint(&checkpoint_dir(run, seed, member))?;
    Ok(accuracy(&predict(&spec, &params, &data.input)?.logits, &data.labels, &data.split.test))
}
