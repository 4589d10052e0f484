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

//! End-to-end experiment runs described by a single JSON document.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{
    encode_dataset, gen_donut, gen_regression, gen_regression_noisy, gen_spt_grid, load_csv_dataset, load_idx_images,
    CsvSchema, Dataset, SptGrid, FOLDS,
};
use crate::encode::RingDomainSpec;
use crate::error::{DqnnError, Result};
use crate::model::{Checkpoint, DqnnParams, LabeledState};
use crate::observables::sample_pauli_set;
use crate::scalar::Real;
use crate::statevec::build_ansatz;
use crate::train::{eval_classification, eval_regression, train_model, RunHistory, TrainConfig};

fn default_regression_offset() -> [f64; 2] {
    [0.6, 0.6]
}

fn default_regression_scale() -> f64 {
    0.625
}

fn default_donut_offset() -> [f64; 2] {
    [1.2, 0.0]
}

fn default_samples_regression() -> usize {
    400
}

fn default_samples_donut() -> usize {
    800
}

/// What to learn and where the data comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskSpec {
    Regression {
        #[serde(default = "default_samples_regression")]
        samples: usize,
        /// Size of the fresh evaluation sample drawn from the same law.
        #[serde(default = "default_samples_regression")]
        test_samples: usize,
        data_seed: u64,
        #[serde(default)]
        noise: f64,
        /// Features enter the encoder as `scale * x + offset`.
        #[serde(default = "default_regression_scale")]
        scale: f64,
        #[serde(default = "default_regression_offset")]
        offset: [f64; 2],
    },
    Donut {
        #[serde(default = "default_samples_donut")]
        samples: usize,
        #[serde(default = "default_samples_donut")]
        test_samples: usize,
        data_seed: u64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "default_donut_offset")]
        offset: [f64; 2],
    },
    CsvClassify {
        path: PathBuf,
        schema: CsvSchema,
        fold_seed: u64,
        /// Folds to hold out in turn; all of them when empty.
        #[serde(default)]
        folds: Vec<usize>,
    },
    Mnist {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        classes: Vec<u8>,
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
    },
    Qpr {
        num_spins: usize,
        #[serde(default = "one")]
        j: f64,
        train_grid: (usize, usize),
        test_grid: (usize, usize),
    },
}

fn one() -> f64 {
    1.0
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Regression { .. } => "regression",
            TaskSpec::Donut { .. } => "donut",
            TaskSpec::CsvClassify { .. } => "csv-classify",
            TaskSpec::Mnist { .. } => "mnist",
            TaskSpec::Qpr { .. } => "qpr",
        }
    }

    pub fn is_regression(&self) -> bool {
        matches!(self, TaskSpec::Regression { .. })
    }

    fn paths(&self) -> Vec<(&'static str, &Path)> {
        match self {
            TaskSpec::CsvClassify { path, .. } => vec![("task.path", path.as_path())],
            TaskSpec::Mnist {
                train_images,
                train_labels,
                test_images,
                test_labels,
                ..
            } => vec![
                ("task.train_images", train_images.as_path()),
                ("task.train_labels", train_labels.as_path()),
                ("task.test_images", test_images.as_path()),
                ("task.test_labels", test_labels.as_path()),
            ],
            _ => vec![],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub num_qubits: usize,
    pub layers: usize,
    pub observables: usize,
    pub observable_seed: u64,
    #[serde(default = "init_a")]
    pub init_a: f64,
    #[serde(default = "init_c")]
    pub init_c: f64,
}

fn init_a() -> f64 {
    4.0
}

fn init_c() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: TaskSpec,
    pub model: ModelSpec,
    pub train: TrainConfig,
    #[serde(default)]
    pub precision: Precision,
    /// Where the CLI writes artifacts; not part of the result.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| DqnnError::invalid(format!("config field `{}`: {}", e.path(), e.inner())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DqnnError::io(path, e))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON form with `output_dir` removed.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn heads(&self) -> usize {
        match &self.task {
            TaskSpec::Regression { .. } => 1,
            TaskSpec::Donut { .. } | TaskSpec::Qpr { .. } => 2,
            TaskSpec::CsvClassify { schema, .. } => schema.classes.len(),
            TaskSpec::Mnist { classes, .. } => classes.len(),
        }
    }

    /// Features the task feeds into the encoder, when known up front.
    fn feature_dim(&self) -> Option<usize> {
        match &self.task {
            TaskSpec::Regression { .. } | TaskSpec::Donut { .. } => Some(2),
            TaskSpec::Mnist { .. } => Some(255),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(DqnnError::invalid(format!("{field}: {msg}")));
        let m = &self.model;
        if m.num_qubits == 0 || m.num_qubits > 24 {
            return bad("model.num_qubits", format!("{} outside 1..=24", m.num_qubits));
        }
        if let Some(d) = self.feature_dim() {
            if (1usize << m.num_qubits) < d + 1 {
                return bad(
                    "model.num_qubits",
                    format!("{} qubits hold at most {} features, task has {d}", m.num_qubits, (1usize << m.num_qubits) - 1),
                );
            }
        }
        if m.layers == 0 {
            return bad("model.layers", "must be at least 1".into());
        }
        if m.observables == 0 {
            return bad("model.observables", "must be at least 1".into());
        }
        if !(m.init_a > 2.0 && m.init_a <= 50.0) || !(0.0..=1.0).contains(&m.init_c) {
            return bad("model.init_a", "initial a must lie in (2, 50] and c in [0, 1]".into());
        }
        if let Err(e) = self.train.validate() {
            return bad("train", e.to_string());
        }
        for (field, p) in self.task.paths() {
            if !p.exists() {
                return bad(field, format!("{} does not exist", p.display()));
            }
        }
        match &self.task {
            TaskSpec::Regression {
                samples,
                test_samples,
                scale,
                offset,
                noise,
                ..
            } => {
                check_synthetic(*samples, *test_samples, &AffineBox::new(REGRESSION_BOX, *scale, *offset))?;
                if !(*noise >= 0.0) {
                    return bad("task.noise", "must be non-negative".into());
                }
            }
            TaskSpec::Donut {
                samples,
                test_samples,
                scale,
                offset,
                ..
            } => check_synthetic(*samples, *test_samples, &AffineBox::new(DONUT_BOX, *scale, *offset))?,
            TaskSpec::CsvClassify { folds, .. } => {
                if let Some(f) = folds.iter().find(|&&f| f >= FOLDS) {
                    return bad("task.folds", format!("fold {f} out of range 0..{FOLDS}"));
                }
            }
            TaskSpec::Mnist { classes, .. } => {
                if classes.len() < 2 || classes.iter().any(|&c| c > 9) {
                    return bad("task.classes", "need at least two digits 0..=9".into());
                }
            }
            TaskSpec::Qpr {
                num_spins,
                j,
                train_grid,
                test_grid,
            } => {
                if *num_spins != m.num_qubits {
                    return bad("model.num_qubits", format!("must equal task.num_spins = {num_spins}"));
                }
                let grid = SptGrid {
                    num_spins: *num_spins,
                    j: *j,
                    ..SptGrid::standard(4)?
                };
                if let Err(e) = grid.validate() {
                    return bad("task", e.to_string());
                }
                if train_grid.0 * train_grid.1 == 0 || test_grid.0 * test_grid.1 == 0 {
                    return bad("task.train_grid", "grid counts must be positive".into());
                }
            }
        }
        let words = (1usize << (2 * m.num_qubits.min(31))) - 1;
        if m.observables > words {
            return bad("model.observables", format!("only {words} non-identity Pauli words exist"));
        }
        Ok(())
    }
}

fn check_synthetic(samples: usize, test_samples: usize, map: &AffineBox) -> Result<()> {
    if samples == 0 || test_samples == 0 {
        return Err(DqnnError::invalid("task.samples: must be positive"));
    }
    if !(map.scale > 0.0 && map.scale.is_finite()) {
        return Err(DqnnError::invalid("task.scale: must be positive"));
    }
    if map.offset.iter().any(|o| !o.is_finite()) {
        return Err(DqnnError::invalid("task.offset: must be finite"));
    }
    let (k1, _) = map.ring_bounds();
    if !(k1 > 0.0) {
        return Err(DqnnError::invalid("task.offset: the mapped sampling box must not contain the origin"));
    }
    Ok(())
}

const REGRESSION_BOX: (f64, f64) = (-0.8, 0.8);
const DONUT_BOX: (f64, f64) = (-1.0, 1.0);

/// Affine map `x -> scale * x + offset` applied to points of the square `[lo, hi]^2`.
#[derive(Clone, Copy, Debug)]
struct AffineBox {
    lo: f64,
    hi: f64,
    scale: f64,
    offset: [f64; 2],
}

impl AffineBox {
    fn new((lo, hi): (f64, f64), scale: f64, offset: [f64; 2]) -> Self {
        AffineBox { lo, hi, scale, offset }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.offset).map(|(v, o)| self.scale * v + o).collect()
    }

    /// Nearest and farthest distance from the origin to the image of the box.
    fn ring_bounds(&self) -> (f64, f64) {
        let (mut near, mut far) = (0.0, 0.0);
        for o in self.offset {
            let (a, b) = (self.scale * self.lo + o, self.scale * self.hi + o);
            let gap = if a > 0.0 { a } else if b < 0.0 { -b } else { 0.0 };
            near += gap * gap;
            far += a.abs().max(b.abs()).powi(2);
        }
        (f64::sqrt(near), f64::sqrt(far))
    }

    fn ring(&self, n: usize) -> Result<RingDomainSpec<f64>> {
        let (k1, k2) = self.ring_bounds();
        RingDomainSpec::new(vec![0.0; 2], k1, k2, n)
    }
}

/// Training and held-out data for one model fit.
#[derive(Clone, Debug)]
pub struct Split {
    pub label: String,
    pub train: Dataset,
    pub test: Dataset,
    /// Ring the encoded features are checked against, if any.
    pub ring: Option<RingDomainSpec<f64>>,
}

/// Materializes the datasets the task describes.
pub fn build_splits(cfg: &RunConfig) -> Result<Vec<Split>> {
    let n = cfg.model.num_qubits;
    match &cfg.task {
        TaskSpec::Regression {
            samples,
            test_samples,
            data_seed,
            noise,
            scale,
            offset,
        } => {
            let map = AffineBox::new(REGRESSION_BOX, *scale, *offset);
            let train = if *noise > 0.0 {
                gen_regression_noisy(*samples, *data_seed, *noise)
            } else {
                gen_regression(*samples, *data_seed)
            };
            let test = gen_regression(*test_samples, data_seed.wrapping_add(1));
            Ok(vec![Split {
                label: "regression".into(),
                train: train.map_features(|x| map.apply(x)),
                test: test.map_features(|x| map.apply(x)),
                ring: Some(map.ring(n)?),
            }])
        }
        TaskSpec::Donut {
            samples,
            test_samples,
            data_seed,
            scale,
            offset,
        } => {
            let map = AffineBox::new(DONUT_BOX, *scale, *offset);
            Ok(vec![Split {
                label: "donut".into(),
                train: gen_donut(*samples, *data_seed).map_features(|x| map.apply(x)),
                test: gen_donut(*test_samples, data_seed.wrapping_add(1)).map_features(|x| map.apply(x)),
                ring: Some(map.ring(n)?),
            }])
        }
        TaskSpec::CsvClassify {
            path,
            schema,
            fold_seed,
            folds,
        } => {
            let folds: Vec<usize> = if folds.is_empty() { (0..FOLDS).collect() } else { folds.clone() };
            folds
                .iter()
                .map(|&f| {
                    let (train, test) = load_csv_dataset(path, schema, *fold_seed, f)?;
                    let d = train.feature_dim().unwrap_or(0);
                    let ring = RingDomainSpec::new(vec![0.0; d], 0.5 * (d as f64).sqrt(), 1.5 * (d as f64).sqrt(), n)?;
                    Ok(Split {
                        label: format!("fold{f}"),
                        train,
                        test,
                        ring: Some(ring),
                    })
                })
                .collect()
        }
        TaskSpec::Mnist {
            train_images,
            train_labels,
            test_images,
            test_labels,
            classes,
            train_limit,
            test_limit,
        } => Ok(vec![Split {
            label: "mnist".into(),
            train: load_idx_images(train_images, train_labels, classes, *train_limit)?,
            test: load_idx_images(test_images, test_labels, classes, *test_limit)?,
            ring: None,
        }]),
        TaskSpec::Qpr {
            num_spins,
            j,
            train_grid,
            test_grid,
        } => {
            let grid = SptGrid {
                num_spins: *num_spins,
                j: *j,
                ..SptGrid::standard(*num_spins)?
            };
            let (train, test) = gen_spt_grid(&grid, *train_grid, *test_grid)?;
            Ok(vec![Split {
                label: "qpr".into(),
                train,
                test,
                ring: None,
            }])
        }
    }
}

/// Outcome of one fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub label: String,
    /// `"mre"` for regression, `"accuracy"` otherwise.
    pub metric: String,
    pub train_metric: f64,
    pub test_metric: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub history: RunHistory,
    /// Final training loss of every restart, in order.
    pub restart_losses: Vec<f64>,
    /// Index of the kept restart; its seed is `TrainConfig::restart_seed(restart)`.
    pub restart: usize,
    pub checkpoint: Checkpoint,
    pub wall_clock_secs: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub task: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub fits: Vec<FitResult>,
    /// Mean test metric over fits.
    pub mean_test_metric: f64,
    pub wall_clock_secs: f64,
}

impl ExperimentReport {
    /// Mean of `1 - accuracy` over fits (classification only).
    pub fn mean_test_error(&self) -> f64 {
        1.0 - self.mean_test_metric
    }
}

fn fit<T: Real>(cfg: &RunConfig, split: &Split, hash: &str) -> Result<FitResult> {
    let start = Instant::now();
    let m = &cfg.model;
    let train: Vec<LabeledState<T>> = encode_dataset(&split.train, m.num_qubits, split.ring.as_ref())?;
    let test: Vec<LabeledState<T>> = encode_dataset(&split.test, m.num_qubits, split.ring.as_ref())?;
    let ansatz = build_ansatz(m.num_qubits, m.layers)?;
    let obs = sample_pauli_set(m.num_qubits, m.observables, m.observable_seed)?;
    let regression = cfg.task.is_regression();
    let metric = |p: &DqnnParams<T>, d: &[LabeledState<T>]| {
        if regression {
            eval_regression(p, d)
        } else {
            eval_classification(p, d)
        }
    };
    let mut eval = |p: &DqnnParams<T>| metric(p, &test);
    let mut best: Option<(DqnnParams<T>, RunHistory, usize)> = None;
    let mut restart_losses = Vec::with_capacity(cfg.train.restarts);
    for r in 0..cfg.train.restarts {
        let seed = cfg.train.restart_seed(r);
        let mut params = DqnnParams::<T>::init(ansatz.clone(), obs.clone(), cfg.heads(), seed)?;
        params.a.iter_mut().for_each(|a| *a = T::lit(m.init_a));
        params.c.iter_mut().for_each(|c| *c = T::lit(m.init_c));
        let tc = TrainConfig { seed, ..cfg.train.clone() };
        let history = train_model(&mut params, &train, &tc, Some(&mut eval))?;
        restart_losses.push(history.final_loss);
        if best.as_ref().is_none_or(|b| history.final_loss < b.1.final_loss) {
            best = Some((params, history, r));
        }
    }
    let (params, history, restart) = best.expect("at least one restart");
    let mut checkpoint = Checkpoint::from_params(&params);
    checkpoint.master_seed = Some(cfg.train.seed);
    checkpoint.config_hash = Some(hash.to_string());
    Ok(FitResult {
        label: split.label.clone(),
        metric: if regression { "mre" } else { "accuracy" }.into(),
        train_metric: metric(&params, &train)?,
        test_metric: metric(&params, &test)?,
        train_size: train.len(),
        test_size: test.len(),
        history,
        restart_losses,
        restart,
        checkpoint,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Builds the data, trains one model per split and evaluates it.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let hash = cfg.hash();
    let splits = build_splits(cfg)?;
    let fits = splits
        .iter()
        .map(|s| match cfg.precision {
            Precision::F64 => fit::<f64>(cfg, s, &hash),
            Precision::F32 => fit::<f32>(cfg, s, &hash),
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_test_metric = fits.iter().map(|f| f.test_metric).sum::<f64>() / fits.len() as f64;
    Ok(ExperimentReport {
        task: cfg.task.name().into(),
        config_hash: hash,
        master_seed: cfg.train.seed,
        fits,
        mean_test_metric,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Evaluates a checkpoint on the held-out part of every split.
pub fn evaluate_checkpoint(cfg: &RunConfig, ckpt: &Checkpoint) -> Result<Vec<(String, f64)>> {
    cfg.validate()?;
    let params: DqnnParams<f64> = ckpt.to_params()?;
    if params.ansatz().num_qubits() != cfg.model.num_qubits {
        return Err(DqnnError::invalid("checkpoint and config disagree on the qubit count"));
    }
    build_splits(cfg)?
        .iter()
        .map(|s| {
            let test: Vec<LabeledState<f64>> = encode_dataset(&s.test, cfg.model.num_qubits, s.ring.as_ref())?;
            let v = if cfg.task.is_regression() {
                eval_regression(&params, &test)?
            } else {
                eval_classification(&params, &test)?
            };
            Ok((s.label.clone(), v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn donut_cfg() -> RunConfig {
        RunConfig::from_json(
            r#"{
                "task": {"kind": "donut", "samples": 40, "test_samples": 40, "data_seed": 1},
                "model": {"num_qubits": 2, "layers": 1, "observables": 10, "observable_seed": 3},
                "train": {"epochs": 2, "seed": 4}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn parses_and_hashes() {
        let cfg = donut_cfg();
        assert_eq!(cfg.heads(), 2);
        let mut other = cfg.clone();
        other.output_dir = Some("/tmp/x".into());
        assert_eq!(cfg.hash(), other.hash());
        other.train.seed = 5;
        assert_ne!(cfg.hash(), other.hash());
        let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = donut_cfg();
        cfg.model.num_qubits = 1;
        assert!(cfg.validate().is_err());
        let mnist = r#"{
            "task": {"kind": "mnist", "train_images": "/nonexistent", "train_labels": "/nonexistent",
                     "test_images": "/nonexistent", "test_labels": "/nonexistent", "classes": [0, 1]},
            "model": {"num_qubits": 7, "layers": 1, "observables": 4, "observable_seed": 1},
            "train": {"epochs": 1}
        }"#;
        let err = RunConfig::from_json(mnist).unwrap().validate().unwrap_err().to_string();
        assert!(err.contains("model.num_qubits"), "{err}");
        let err = RunConfig::from_json(r#"{"task": {"kind": "donut", "data_seed": 1, "bogus": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("task"), "{err}");
    }

    #[test]
    fn small_run_is_deterministic() {
        let cfg = donut_cfg();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.fits[0].checkpoint, b.fits[0].checkpoint);
        assert!(a.fits[0].history.same_trajectory(&b.fits[0].history));
        let evals = evaluate_checkpoint(&cfg, &a.fits[0].checkpoint).unwrap();
        assert_eq!(evals[0].1, a.fits[0].test_metric);
    }
}
