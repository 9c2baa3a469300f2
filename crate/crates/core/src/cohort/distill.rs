use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::config::MemberConfig;
use super::train::{accuracy, mean_entropy, MemberReport, TrainData};
use crate::models::{forward, init_params, predict, ModelParams, ModelSpec};
use crate::ndtape::{softmax, Tape, Tensor, Var};
use crate::rng::SplitMix64;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub student: MemberConfig,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
}

#[derive(Debug, Clone)]
pub struct DistillOutcome {
    pub report: MemberReport,
    pub params: ModelParams,
    pub epochs_run: usize,
}

/// Teacher class probabilities (temperature 1) on every output row.
pub fn teacher_targets(spec: &ModelSpec, params: &ModelParams, data: &TrainData) -> Result<Tensor> {
    let pred = predict(spec, params, &data.input)?;
    softmax(&pred.logits, 1.0)
}

/// `CE(logits) + KL(targets || softmax(logits))` on the training rows.
/// `targets` holds the teacher distribution for those rows, in order.
pub fn distill_loss(tape: &mut Tape, logits: Var, labels: &[usize], train: &Arc<[usize]>, targets: &Tensor) -> Result<Var> {
    let ce = tape.cross_entropy(logits, labels, train)?;
    let z = tape.select_rows(logits, train)?;
    let p = tape.softmax_rows(z, 1.0)?;
    let t = tape.constant(targets.clone())?;
    let kl = tape.kl_divergence(t, p)?;
    tape.add(ce, kl)
}

/// Train a fresh student against fixed teacher targets. Early stopping and
/// checkpoint selection follow [`super::train_cohort`].
pub fn distill(data: &TrainData, teacher_probs: &Tensor, cfg: &DistillConfig) -> Result<DistillOutcome> {
    let spec = &cfg.student.spec;
    spec.validate()?;
    data.check(spec)?;
    if teacher_probs.dims() != (data.input.num_outputs(), data.num_classes) {
        return Err(Error::Config(format!(
            "teacher targets are {:?}, expected {} x {}",
            teacher_probs.dims(),
            data.input.num_outputs(),
            data.num_classes
        )));
    }
    if !(cfg.learning_rate > 0.0) || cfg.max_epochs == 0 {
        return Err(Error::Config("learning_rate and max_epochs must be positive".into()));
    }
    let start = Instant::now();
    let train: Arc<[usize]> = Arc::from(data.split.train.clone());
    let targets = teacher_probs.select_rows(&train)?;
    let mut params = init_params(spec, cfg.student.seed)?;
    let mut opt = Adam::new(cfg.learning_rate, cfg.weight_decay);
    let mut dropout = SplitMix64::new(SplitMix64::stream(cfg.student.seed, 2).next_u64());
    let (mut best, mut best_epoch, mut best_val) = (params.clone(), 0, f64::NEG_INFINITY);
    let mut epochs_run = 0;
    for epoch in 0..cfg.max_epochs {
        epochs_run = epoch + 1;
        let mut tape = Tape::new();
        let fwd = forward(&mut tape, spec, &params, &data.input, Some(&mut dropout))?;
        let val = accuracy(tape.value(fwd.logits), &data.labels, &data.split.val);
        if val > best_val {
            best_val = val;
            best_epoch = epoch;
            best = params.clone();
        }
        let loss = distill_loss(&mut tape, fwd.logits, &data.labels, &train, &targets)?;
        let mut grads = tape.backward(loss)?;
        let g: Vec<Tensor> = fwd
            .params
            .iter()
            .zip(&params.tensors)
            .map(|(&v, t)| grads.take(v).unwrap_or_else(|| Tensor::zeros(t.rows(), t.cols())))
            .collect();
        let mut targets: Vec<&mut Tensor> = params.tensors.iter_mut().collect();
        opt.step(&mut targets, &g).map_err(|e| match e {
            Error::Numeric(m) => Error::Numeric(format!("epoch {}: {}", epoch, m)),
            other => other,
        })?;
        if epoch - best_epoch >= cfg.patience {
            break;
        }
    }
    let pred = predict(spec, &best, &data.input)?;
    let report = MemberReport {
        index: 0,
        architecture: spec.architecture,
        seed: cfg.student.seed,
        best_epoch,
        val_acc: accuracy(&pred.logits, &data.labels, &data.split.val),
        test_acc: accuracy(&pred.logits, &data.labels, &data.split.test),
        mean_entropy: mean_entropy(&softmax(&pred.logits, 1.0)?),
        seconds: start.elapsed().as_secs_f64(),
        history: Vec::new(),
    };
    Ok(DistillOutcome { report, params: best, epochs_run })
}
