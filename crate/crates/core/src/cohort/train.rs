use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::config::{CohortConfig, Variant};
use super::loss::{member_probs, mutual_loss, LossWeights};
use super::weighting::{adaptive_weights, apply_weighting, AdaptiveWeightUnit, UnitVars};
use crate::graphdata::{GraphCollection, GraphDataset, Split};
use crate::models::{forward_with, init_params, predict, Architecture, Features, Forward, ModelInput, ModelParams, ModelSpec};
use crate::ndtape::{softmax, Tape, Tensor, Var};
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Inputs, labels and split for one training run. Labels and split indices
/// refer to output rows: nodes for the node task, graphs for the graph task.
#[derive(Debug, Clone)]
pub struct TrainData {
    pub input: ModelInput,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub split: Split,
}

impl TrainData {
    pub fn nodes(g: &GraphDataset, split: Split) -> Result<Self> {
        split.validate(g.num_nodes())?;
        Ok(Self {
            input: ModelInput::nodes(Features::new(g.features()), g.adjacency())?,
            labels: g.labels().to_vec(),
            num_classes: g.num_classes(),
            split,
        })
    }

    /// The whole collection as one block-diagonal batch.
    pub fn graphs(c: &GraphCollection, split: Split) -> Result<Self> {
        split.validate(c.len())?;
        let order: Vec<usize> = (0..c.len()).collect();
        let b = c.batch(&order)?;
        Ok(Self {
            input: ModelInput::graphs(Features::new(&b.features), &b.adjacency, &b.membership, b.num_graphs)?,
            labels: c.labels().to_vec(),
            num_classes: c.num_classes(),
            split,
        })
    }

    pub fn check(&self, spec: &ModelSpec) -> Result<()> {
        if spec.num_classes != self.num_classes {
            return Err(Error::Config(format!(
                "{} predicts {} classes, data has {}",
                spec.architecture, spec.num_classes, self.num_classes
            )));
        }
        if self.labels.len() != self.input.num_outputs() {
            return Err(Error::Dataset(format!("{} labels for {} outputs", self.labels.len(), self.input.num_outputs())));
        }
        if self.split.train.is_empty() || self.split.val.is_empty() {
            return Err(Error::Dataset("training and validation sets must be non-empty".into()));
        }
        Ok(())
    }
}

/// Fraction of `rows` whose logits argmax equals the label.
pub fn accuracy(logits: &Tensor, labels: &[usize], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let pred = logits.argmax_rows();
    rows.iter().filter(|&&i| pred[i] == labels[i]).count() as f64 / rows.len() as f64
}

/// Mean Shannon entropy (nats) of the rows of `probs`.
pub fn mean_entropy(probs: &Tensor) -> f64 {
    let n = probs.rows();
    let total: f64 = (0..n).map(|i| probs.row(i).iter().filter(|&&p| p > 0.0).map(|p| -p * p.ln()).sum::<f64>()).sum();
    total / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub index: usize,
    pub architecture: Architecture,
    pub seed: u64,
    /// Epoch whose parameters were kept (first epoch with the highest
    /// validation accuracy).
    pub best_epoch: usize,
    pub val_acc: f64,
    pub test_acc: f64,
    /// Mean prediction entropy over all outputs at the kept parameters.
    pub mean_entropy: f64,
    pub seconds: f64,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub variant: Variant,
    pub target_index: usize,
    pub epochs_run: usize,
    pub members: Vec<MemberReport>,
    pub seconds: f64,
}

impl TrainReport {
    pub fn target(&self) -> &MemberReport {
        &self.members[self.target_index]
    }

    /// Same report with every timing field zeroed.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.seconds = 0.0;
        r.members.iter_mut().for_each(|m| m.seconds = 0.0);
        r
    }
}

/// Report plus the kept parameters of every member.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainReport,
    pub params: Vec<ModelParams>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOptions {
    /// Run members on the rayon pool; results are identical either way.
    pub parallel: bool,
    /// Keep per-epoch records in the report.
    pub history: bool,
}

struct Member {
    spec: ModelSpec,
    seed: u64,
    params: ModelParams,
    unit: Option<AdaptiveWeightUnit>,
    opt: Adam,
    dropout: SplitMix64,
    best: ModelParams,
    best_epoch: usize,
    best_val: f64,
    seconds: f64,
    history: Vec<EpochRecord>,
}

struct Prepared {
    tape: Tape,
    fwd: Forward,
    unit: Option<UnitVars>,
    /// Distribution compared with peers (weighted when enabled).
    own: Var,
    /// Unweighted distribution on the training rows.
    probs: Var,
}

/// Seed of the weighting unit and dropout streams for a member.
fn aux_seed(seed: u64, stream: u64) -> u64 {
    SplitMix64::stream(seed, stream).next_u64()
}

fn prepare(m: &mut Member, data: &TrainData, cfg: &CohortConfig, train: &Arc<[usize]>) -> Result<Prepared> {
    let mut tape = Tape::new();
    let vars = m.params.tensors.iter().map(|t| tape.param(t.clone())).collect::<Result<Vec<_>>>()?;
    let fwd = forward_with(&mut tape, &m.spec, &vars, &data.input, Some(&mut m.dropout))?;
    let unit = match &m.unit {
        Some(u) => Some(u.register(&mut tape)?),
        None => None,
    };
    let (probs, own) = match unit {
        Some(uv) if cfg.graph_aware => {
            let all = member_probs(&mut tape, fwd.logits, None, cfg.temperature)?;
            let probs = tape.select_rows(all, train)?;
            let w = adaptive_weights(&mut tape, &uv, all, Some((&data.input.operators.normalized, train)))?;
            (probs, apply_weighting(&mut tape, probs, w)?)
        }
        Some(uv) => {
            let probs = member_probs(&mut tape, fwd.logits, Some(train), cfg.temperature)?;
            let w = adaptive_weights(&mut tape, &uv, probs, None)?;
            (probs, apply_weighting(&mut tape, probs, w)?)
        }
        None => {
            let probs = member_probs(&mut tape, fwd.logits, Some(train), cfg.temperature)?;
            (probs, probs)
        }
    };
    Ok(Prepared { tape, fwd, unit, own, probs })
}

fn update(m: &mut Member, p: Prepared, peers: &[Tensor], data: &TrainData, cfg: &CohortConfig) -> Result<f64> {
    let Prepared { mut tape, fwd, unit, own, probs } = p;
    let weights = LossWeights { variant: cfg.variant, gamma: cfg.gamma, beta: cfg.beta, penalty_sign: cfg.penalty_sign };
    let terms = mutual_loss(&mut tape, &weights, fwd.logits, &data.labels, &data.split.train, own, probs, peers, unit.as_ref())?;
    let loss = tape.value(terms.total).item()?;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("loss is {}", loss)));
    }
    let mut grads = tape.backward(terms.total)?;
    let mut take = |v: Var, like: &Tensor| grads.take(v).unwrap_or_else(|| Tensor::zeros(like.rows(), like.cols()));
    let mut all_grads: Vec<Tensor> = fwd.params.iter().zip(&m.params.tensors).map(|(&v, t)| take(v, t)).collect();
    if let (Some(uv), Some(u)) = (unit, &m.unit) {
        let mut vars = vec![uv.chi, uv.phi];
        if let Some((w, b)) = uv.conv {
            vars.extend([w, b]);
        }
        all_grads.extend(vars.into_iter().zip(u.tensors()).map(|(v, t)| take(v, t)));
    }
    let mut targets: Vec<&mut Tensor> = m.params.tensors.iter_mut().collect();
    if let Some(u) = &mut m.unit {
        targets.extend(u.tensors_mut());
    }
    m.opt.step(&mut targets, &all_grads)?;
    Ok(loss)
}

fn for_each<T: Send, R: Send>(items: Vec<T>, parallel: bool, f: impl Fn(usize, T) -> R + Sync + Send) -> Vec<R> {
    if parallel {
        items.into_par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    } else {
        items.into_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

/// Train every member of the cohort together.
///
/// Each epoch: every member runs its forward pass and publishes its
/// distribution on the training rows (weighted, for weighting variants);
/// then every member takes one optimizer step on its loss against the
/// other members' published values, which carry no gradient. Validation
/// accuracy is measured on the forward pass of the epoch, so the kept
/// parameters are those in effect at the start of the best epoch. Training
/// stops once the target member has gone `patience` epochs without a new
/// best validation accuracy.
pub fn train_cohort(data: &TrainData, cfg: &CohortConfig, opts: TrainOptions) -> Result<TrainOutcome> {
    cfg.validate()?;
    for m in &cfg.members {
        data.check(&m.spec)?;
    }
    let start = Instant::now();
    let train: Arc<[usize]> = Arc::from(data.split.train.clone());
    let mut members = cfg
        .members
        .iter()
        .map(|mc| {
            let params = init_params(&mc.spec, mc.seed)?;
            let unit = if cfg.variant.weighting() {
                Some(AdaptiveWeightUnit::init(
                    train.len(),
                    cfg.weight_hidden,
                    mc.spec.num_classes,
                    cfg.graph_aware,
                    aux_seed(mc.seed, 1),
                )?)
            } else {
                None
            };
            Ok(Member {
                spec: mc.spec.clone(),
                seed: mc.seed,
                best: params.clone(),
                params,
                unit,
                opt: Adam::new(cfg.learning_rate, cfg.weight_decay),
                dropout: SplitMix64::new(aux_seed(mc.seed, 2)),
                best_epoch: 0,
                best_val: f64::NEG_INFINITY,
                seconds: 0.0,
                history: Vec::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut epochs_run = 0;
    for epoch in 0..cfg.max_epochs {
        epochs_run = epoch + 1;
        let phase1 = for_each(members, opts.parallel, |_, mut m| {
            let t = Instant::now();
            let p = prepare(&mut m, data, cfg, &train);
            m.seconds += t.elapsed().as_secs_f64();
            (m, p)
        });
        let mut staged = Vec::with_capacity(phase1.len());
        for (i, (m, p)) in phase1.into_iter().enumerate() {
            let p = p.map_err(|e| at_epoch(e, epoch, i))?;
            staged.push((m, p));
        }
        let snapshots: Vec<Tensor> = staged.iter().map(|(_, p)| p.tape.value(p.own).clone()).collect();
        for (m, p) in staged.iter_mut() {
            let logits = p.tape.value(p.fwd.logits);
            let val = accuracy(logits, &data.labels, &data.split.val);
            if val > m.best_val {
                m.best_val = val;
                m.best_epoch = epoch;
                m.best = m.params.clone();
            }
            if opts.history {
                m.history.push(EpochRecord {
                    epoch,
                    loss: f64::NAN,
                    train_acc: accuracy(logits, &data.labels, &data.split.train),
                    val_acc: val,
                });
            }
        }
        let phase2 = for_each(staged, opts.parallel, |i, (mut m, p)| {
            let peers: Vec<Tensor> = if cfg.variant.mutual() {
                snapshots.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, s)| s.clone()).collect()
            } else {
                Vec::new()
            };
            let t = Instant::now();
            let r = update(&mut m, p, &peers, data, cfg);
            m.seconds += t.elapsed().as_secs_f64();
            if let (Ok(loss), Some(rec)) = (&r, m.history.last_mut()) {
                rec.loss = *loss;
            }
            (m, r)
        });
        let mut next = Vec::with_capacity(phase2.len());
        for (i, (m, r)) in phase2.into_iter().enumerate() {
            r.map_err(|e| at_epoch(e, epoch, i))?;
            next.push(m);
        }
        members = next;
        let target = &members[cfg.target_index];
        if epoch - target.best_epoch >= cfg.patience {
            break;
        }
    }

    let mut reports = Vec::with_capacity(members.len());
    let mut kept = Vec::with_capacity(members.len());
    for (i, m) in members.into_iter().enumerate() {
        let pred = predict(&m.spec, &m.best, &data.input)?;
        let probs = softmax(&pred.logits, 1.0)?;
        reports.push(MemberReport {
            index: i,
            architecture: m.spec.architecture,
            seed: m.seed,
            best_epoch: m.best_epoch,
            val_acc: accuracy(&pred.logits, &data.labels, &data.split.val),
            test_acc: accuracy(&pred.logits, &data.labels, &data.split.test),
            mean_entropy: mean_entropy(&probs),
            seconds: m.seconds,
            history: m.history,
        });
        kept.push(m.best);
    }
    let report = TrainReport {
        variant: cfg.variant,
        target_index: cfg.target_index,
        epochs_run,
        members: reports,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome { report, params: kept })
}

fn at_epoch(e: Error, epoch: usize, member: usize) -> Error {
    match e {
        Error::Numeric(msg) => Error::Numeric(format!("epoch {}, member {}: {}", epoch, member, msg)),
        other => other,
    }
}
