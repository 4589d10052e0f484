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

//! Datasets: synthetic generators, tabular and IDX ingestion, and the
//! cluster-chain ground-state factory.

mod idx;
mod spt;
mod synthetic;
mod tabular;

use std::io::Write;
use std::path::Path;

use crate::encode::{amplitude_encode, shift_to_ring, RingDomainSpec};
use crate::error::{DqnnError, Result};
use crate::model::LabeledState;
use crate::scalar::Real;
use crate::statevec::Statevector;

pub use idx::{load_idx_images, read_idx_images, read_idx_labels, resize_bilinear, write_idx_images, write_idx_labels, IdxImages, DROPPED_PIXEL};
pub use spt::{
    gen_spt_grid, linspace, spt_ground_state, string_order, string_order_label, string_order_word, write_state_bundle,
    GroundState, SptGrid, SptHamiltonian, DENSE_LIMIT, DENSE_SOLVER_LIMIT,
};
pub use synthetic::{donut_label, gen_donut, gen_regression, gen_regression_noisy, regression_target};
pub use tabular::{kfold_partition, load_csv_dataset, CsvSchema, MinMaxShift, FOLDS};

/// Coordinates of a phase-diagram sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub h1: f64,
    pub h2: f64,
}

/// Either classical features or a ready-made quantum state.
#[derive(Clone, Debug, PartialEq)]
pub enum SampleInput {
    Features(Vec<f64>),
    State(Statevector<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: SampleInput,
    /// One entry for regression, one-hot for classification.
    pub y: Vec<f64>,
    pub meta: Option<GridPoint>,
}

impl Sample {
    pub fn features(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self {
            input: SampleInput::Features(x),
            y,
            meta: None,
        }
    }

    /// Index of the hot entry of a one-hot target.
    pub fn class(&self) -> usize {
        argmax(&self.y)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn one_hot(class: usize, k: usize) -> Vec<f64> {
    let mut y = vec![0.0; k];
    y[class] = 1.0;
    y
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, samples: Vec<Sample>) -> Self {
        Self {
            name: name.into(),
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Feature count of classical samples, or `None` for state datasets.
    pub fn feature_dim(&self) -> Option<usize> {
        match &self.samples.first()?.input {
            SampleInput::Features(x) => Some(x.len()),
            SampleInput::State(_) => None,
        }
    }

    pub fn target_dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.y.len())
    }

    /// Samples per class of a one-hot dataset.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.target_dim()];
        for s in &self.samples {
            counts[s.class()] += 1;
        }
        counts
    }

    /// Subset in the given index order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    /// Applies `f` to every feature vector.
    pub fn map_features(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                input: match &s.input {
                    SampleInput::Features(x) => SampleInput::Features(f(x)),
                    other => other.clone(),
                },
                y: s.y.clone(),
                meta: s.meta,
            })
            .collect();
        Self {
            name: self.name.clone(),
            samples,
        }
    }

    /// Writes `x0.., y0.., [h1, h2]` columns. Only classical datasets.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let d = self
            .feature_dim()
            .ok_or_else(|| DqnnError::invalid("state datasets export as binary bundles"))?;
        let k = self.target_dim();
        let with_meta = self.samples.iter().any(|s| s.meta.is_some());
        let mut out = String::new();
        let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        header.extend((0..k).map(|i| format!("y{i}")));
        if with_meta {
            header.extend(["h1".into(), "h2".into()]);
        }
        out.push_str(&header.join(","));
        out.push('\n');
        for s in &self.samples {
            let SampleInput::Features(x) = &s.input else {
                return Err(DqnnError::invalid("mixed dataset"));
            };
            let mut row: Vec<String> = x.iter().chain(&s.y).map(|v| v.to_string()).collect();
            if with_meta {
                let m = s.meta.unwrap_or(GridPoint { h1: f64::NAN, h2: f64::NAN });
                row.extend([m.h1.to_string(), m.h2.to_string()]);
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        let mut f = std::fs::File::create(path).map_err(|e| DqnnError::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| DqnnError::io(path, e))
    }
}

/// Turns a dataset into model inputs. Feature samples are checked against
/// `ring` when given, then amplitude-encoded into `num_qubits` qubits; state
/// samples are passed through.
pub fn encode_dataset<T: Real>(
    data: &Dataset,
    num_qubits: usize,
    ring: Option<&RingDomainSpec<f64>>,
) -> Result<Vec<LabeledState<T>>> {
    data.samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let state = match &s.input {
                SampleInput::Features(x) => {
                    if let Some(ring) = ring {
                        let zero = RingDomainSpec {
                            shift: vec![0.0; ring.dim()],
                            ..ring.clone()
                        };
                        shift_to_ring(x, &zero, i)?;
                    }
                    amplitude_encode(x, num_qubits)?.into_state().cast()
                }
                SampleInput::State(st) => {
                    if st.num_qubits() != num_qubits {
                        return Err(DqnnError::invalid(format!(
                            "sample {i} has {} qubits, model {num_qubits}",
                            st.num_qubits()
                        )));
                    }
                    st.cast()
                }
            };
            Ok(LabeledState {
                state,
                target: s.y.iter().map(|&v| T::lit(v)).collect(),
            })
        })
        .collect()
}
