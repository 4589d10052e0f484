// Copyright 2026 The DQNN Developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License. You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.

//! Training loop and evaluation metrics.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DqnnError, Result};
use crate::grad::{loss_gradient, sse_objective};
use crate::model::{predict_class, DqnnParams, LabeledState};
use crate::optim::{OptimizerConfig, OptimizerState};
use crate::rng::{substream, Stream};
use crate::scalar::Real;

/// Datasets smaller than this train full-batch unless a batch size is set.
pub const FULL_BATCH_BELOW: usize = 64;
pub const DEFAULT_BATCH: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// `None` picks [`DEFAULT_BATCH`], or the whole set when it is small.
    pub batch_size: Option<usize>,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    /// Stop after this many epochs without a lower epoch loss.
    pub patience: Option<usize>,
    /// Run the evaluation callback every this many epochs (and after the last).
    pub eval_every: usize,
    /// Multiplies every learning rate after each epoch.
    pub lr_decay: f64,
    /// Independent initializations; the fit with the lowest final training loss is kept.
    pub restarts: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: None,
            optimizer: OptimizerConfig::default(),
            seed: 0,
            patience: None,
            eval_every: 1,
            lr_decay: 1.0,
            restarts: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(DqnnError::invalid("epochs must be at least 1"));
        }
        if self.batch_size == Some(0) {
            return Err(DqnnError::invalid("batch size must be at least 1"));
        }
        if self.eval_every == 0 {
            return Err(DqnnError::invalid("eval cadence must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(DqnnError::invalid("restarts must be at least 1"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(DqnnError::invalid("lr_decay must lie in (0, 1]"));
        }
        self.optimizer.validate()
    }

    /// Seed of restart `r`; restart 0 uses `seed` itself.
    pub fn restart_seed(&self, r: usize) -> u64 {
        if r == 0 {
            self.seed
        } else {
            substream(self.seed, Stream::Init, r as u64).next_u64()
        }
    }

    pub fn effective_batch(&self, m: usize) -> usize {
        match self.batch_size {
            Some(b) => b.min(m),
            None if m < FULL_BATCH_BELOW => m,
            None => DEFAULT_BATCH,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Sum of the batch losses seen during the epoch.
    pub loss: f64,
    pub metric: Option<f64>,
    pub elapsed_secs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    /// Loss of the initial parameters on the whole training set.
    pub initial_loss: f64,
    /// Loss of the returned parameters on the whole training set.
    pub final_loss: f64,
    pub epochs: Vec<EpochRecord>,
    pub stopped_early: bool,
}

impl RunHistory {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.loss).collect()
    }

    /// Equality ignoring wall-clock times.
    pub fn same_trajectory(&self, other: &Self) -> bool {
        let strip = |h: &Self| {
            (
                h.initial_loss.to_bits(),
                h.final_loss.to_bits(),
                h.stopped_early,
                h.epochs
                    .iter()
                    .map(|e| (e.epoch, e.loss.to_bits(), e.metric.map(f64::to_bits)))
                    .collect::<Vec<_>>(),
            )
        };
        strip(self) == strip(other)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("epoch,loss,metric,elapsed_secs\n");
        for e in &self.epochs {
            let metric = e.metric.map_or(String::new(), |m| m.to_string());
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.loss, metric, e.elapsed_secs));
        }
        std::fs::write(path, out).map_err(|e| DqnnError::io(path, e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?).map_err(|e| DqnnError::io(path, e))
    }
}

/// `sum_k |Q_k - y_k|^2`.
pub fn sse_loss<T: Real>(outputs: &[Vec<T>], targets: &[Vec<T>]) -> Result<T> {
    if outputs.len() != targets.len() {
        return Err(DqnnError::invalid(format!("{} outputs for {} targets", outputs.len(), targets.len())));
    }
    outputs.iter().zip(targets).try_fold(T::zero(), |acc, (q, y)| {
        if q.len() != y.len() {
            return Err(DqnnError::invalid(format!("output length {} vs target {}", q.len(), y.len())));
        }
        Ok(acc + q.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>())
    })
}

fn scale_rates(cfg: &mut OptimizerConfig, k: f64) {
    cfg.lr *= k;
    let g = &mut cfg.group_lr;
    for r in [&mut g.theta, &mut g.a, &mut g.c, &mut g.alpha].into_iter().flatten() {
        *r *= k;
    }
}

/// Callback scoring the current parameters during training.
pub type EvalFn<'a, T> = &'a mut dyn FnMut(&DqnnParams<T>) -> Result<f64>;

/// Mini-batch training. Each epoch visits the data in an order drawn from a
/// per-epoch substream of `cfg.seed`, so runs are reproducible. `eval`, when
/// given, is called every `cfg.eval_every` epochs and its value is recorded.
pub fn train_model<T: Real>(
    params: &mut DqnnParams<T>,
    data: &[LabeledState<T>],
    cfg: &TrainConfig,
    mut eval: Option<EvalFn<'_, T>>,
) -> Result<RunHistory> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(DqnnError::invalid("training set is empty"));
    }
    params.check_constraints()?;
    let batch = cfg.effective_batch(data.len());
    let mut opt = OptimizerState::<T>::new(cfg.optimizer.clone())?;
    let mut history = RunHistory {
        initial_loss: sse_objective(data, params)?.as_f64(),
        ..RunHistory::default()
    };
    let start = Instant::now();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut scratch = Vec::with_capacity(batch);
    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut substream(cfg.seed, Stream::Shuffle, epoch as u64));
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            scratch.clear();
            scratch.extend(chunk.iter().map(|&i| data[i].clone()));
            let (loss, grads) = loss_gradient(&scratch, params)?;
            epoch_loss += loss.as_f64();
            opt.step(params, &grads)?;
        }
        if cfg.lr_decay < 1.0 {
            scale_rates(&mut opt.config, cfg.lr_decay);
        }
        let metric = match eval.as_mut() {
            Some(f) if epoch % cfg.eval_every == 0 || epoch == cfg.epochs => Some(f(params)?),
            _ => None,
        };
        history.epochs.push(EpochRecord {
            epoch,
            loss: epoch_loss,
            metric,
            elapsed_secs: start.elapsed().as_secs_f64(),
        });
        if epoch_loss < best {
            best = epoch_loss;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if cfg.patience.is_some_and(|p| since_best >= p) {
            history.stopped_early = true;
            break;
        }
    }
    history.final_loss = sse_objective(data, params)?.as_f64();
    Ok(history)
}

fn outputs<T: Real>(params: &DqnnParams<T>, data: &[LabeledState<T>]) -> Result<Vec<Vec<T>>> {
    data.par_iter()
        .map(|s| Ok(params.forward(&s.state)?.outputs))
        .collect()
}

/// Floor on `|y|` in the relative-error denominator.
pub const MRE_FLOOR: f64 = 1e-3;

/// Mean of `|Q - y| / max(|y|, 1e-3)` over scalar-target samples.
pub fn mean_relative_error(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(DqnnError::invalid("prediction and target lengths must match and be non-zero"));
    }
    let total: f64 = pred
        .iter()
        .zip(target)
        .map(|(q, y)| (q - y).abs() / y.abs().max(MRE_FLOOR))
        .sum();
    Ok(total / pred.len() as f64)
}

pub fn eval_regression<T: Real>(params: &DqnnParams<T>, data: &[LabeledState<T>]) -> Result<f64> {
    if data.iter().any(|s| s.target.len() != 1) || params.heads() != 1 {
        return Err(DqnnError::invalid("regression needs scalar targets and one head"));
    }
    let q: Vec<f64> = outputs(params, data)?.iter().map(|o| o[0].as_f64()).collect();
    let y: Vec<f64> = data.iter().map(|s| s.target[0].as_f64()).collect();
    mean_relative_error(&q, &y)
}

/// Fraction of samples whose predicted class is the hot target entry.
pub fn eval_classification<T: Real>(params: &DqnnParams<T>, data: &[LabeledState<T>]) -> Result<f64> {
    if data.is_empty() {
        return Err(DqnnError::invalid("evaluation set is empty"));
    }
    let hits = data
        .par_iter()
        .map(|s| {
            let out = params.forward(&s.state)?;
            let want = crate::data::argmax(&s.target.iter().map(|v| v.as_f64()).collect::<Vec<_>>());
            Ok(usize::from(predict_class(&out)? == want))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / data.len() as f64)
}
