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

//! Forward pass: circuit expectations feed sigmoid nodes and linear heads.
//!
//! For observable `i` the feature is `s_i = sigmoid(a_i (<B_i> - c_i))` and
//! head `k` outputs `Q_k = sum_i alpha[k][i] s_i`. Regression uses one head,
//! one-hot classification uses one head per class sharing the features.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DqnnError, Result};
use crate::observables::ObservableSet;
use crate::rng::{stream, Stream};
use crate::scalar::Real;
use crate::statevec::{apply_primitive_inplace, CircuitAnsatz, Statevector};

/// Box constraints re-imposed on `a` and `c` after every optimizer step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub a_min: f64,
    pub a_max: f64,
    pub c_min: f64,
    pub c_max: f64,
}

impl Default for Constraints {
    fn default() -> Self {
        Self {
            a_min: 2.0 + 1e-6,
            a_max: 50.0,
            c_min: 0.0,
            c_max: 1.0,
        }
    }
}

/// Numerically stable logistic function. Saturates to exactly 0 or 1 far
/// from the origin instead of producing NaN.
#[inline]
pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        (T::one() + (-z).exp()).recip()
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `sigmoid(a (b - c))` with `a > 2` and `c` in `[0, 1]`.
pub fn sigmoid_node<T: Real>(b: T, a: T, c: T) -> Result<T> {
    if !(a > T::lit(2.0)) {
        return Err(DqnnError::invalid(format!("sharpness a = {a} must exceed 2")));
    }
    if !(c >= T::zero() && c <= T::one()) {
        return Err(DqnnError::invalid(format!("center c = {c} outside [0, 1]")));
    }
    Ok(sigmoid(a * (b - c)))
}

/// All trainable parameters plus the fixed circuit layout and observables.
#[derive(Clone, Debug, PartialEq)]
pub struct DqnnParams<T> {
    pub theta: Vec<T>,
    pub a: Vec<T>,
    pub c: Vec<T>,
    /// Head weights, `heads x observables`, row-major.
    pub alpha: Vec<T>,
    heads: usize,
    observables: ObservableSet,
    ansatz: CircuitAnsatz,
    pub constraints: Constraints,
}

impl<T: Real> DqnnParams<T> {
    pub fn new(
        ansatz: CircuitAnsatz,
        observables: ObservableSet,
        heads: usize,
        theta: Vec<T>,
        a: Vec<T>,
        c: Vec<T>,
        alpha: Vec<T>,
    ) -> Result<Self> {
        let n_obs = observables.len();
        if observables.num_qubits() != ansatz.num_qubits() {
            return Err(DqnnError::invalid(format!(
                "observables act on {} qubits, ansatz on {}",
                observables.num_qubits(),
                ansatz.num_qubits()
            )));
        }
        if heads == 0 {
            return Err(DqnnError::invalid("model needs at least one head"));
        }
        if theta.len() != ansatz.num_params() {
            return Err(DqnnError::invalid(format!(
                "theta has {} entries, ansatz expects {}",
                theta.len(),
                ansatz.num_params()
            )));
        }
        if a.len() != n_obs || c.len() != n_obs || alpha.len() != heads * n_obs {
            return Err(DqnnError::invalid(
                "a, c and alpha must match the observable count",
            ));
        }
        let p = Self {
            theta,
            a,
            c,
            alpha,
            heads,
            observables,
            ansatz,
            constraints: Constraints::default(),
        };
        p.check_constraints()?;
        Ok(p)
    }

    /// Seeded initialization: `theta ~ U[0, 2pi)`, `a = 4`, `c = 0.5`,
    /// `alpha ~ U[-0.5, 0.5)`, drawn from the init stream of `seed`.
    pub fn init(ansatz: CircuitAnsatz, observables: ObservableSet, heads: usize, seed: u64) -> Result<Self> {
        let mut rng = stream(seed, Stream::Init);
        let n_obs = observables.len();
        let theta = (0..ansatz.num_params())
            .map(|_| T::lit(rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        let alpha = (0..heads * n_obs)
            .map(|_| T::lit(rng.random_range(-0.5..0.5)))
            .collect();
        Self::new(
            ansatz,
            observables,
            heads,
            theta,
            vec![T::lit(4.0); n_obs],
            vec![T::lit(0.5); n_obs],
            alpha,
        )
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn num_observables(&self) -> usize {
        self.observables.len()
    }

    pub fn observables(&self) -> &ObservableSet {
        &self.observables
    }

    pub fn ansatz(&self) -> &CircuitAnsatz {
        &self.ansatz
    }

    pub fn alpha_row(&self, k: usize) -> &[T] {
        let n = self.num_observables();
        &self.alpha[k * n..(k + 1) * n]
    }

    /// Errors unless every `a_i > 2` and `c_i` is in `[0, 1]`.
    pub fn check_constraints(&self) -> Result<()> {
        if let Some(a) = self.a.iter().find(|&&a| !(a > T::lit(2.0))) {
            return Err(DqnnError::invalid(format!("sharpness {a} must exceed 2")));
        }
        if let Some(c) = self.c.iter().find(|&&c| !(c >= T::zero() && c <= T::one())) {
            return Err(DqnnError::invalid(format!("center {c} outside [0, 1]")));
        }
        Ok(())
    }

    /// Clamps `a` and `c` into their boxes.
    pub fn project(&mut self) {
        let k = self.constraints;
        let clamp = |v: &mut T, lo: f64, hi: f64| {
            *v = v.max(T::lit(lo)).min(T::lit(hi));
        };
        self.a.iter_mut().for_each(|v| clamp(v, k.a_min, k.a_max));
        self.c.iter_mut().for_each(|v| clamp(v, k.c_min, k.c_max));
    }

    /// Total number of scalar parameters.
    pub fn len(&self) -> usize {
        self.theta.len() + self.a.len() + self.c.len() + self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameters concatenated as `theta, a, c, alpha`.
    pub fn to_flat(&self) -> Vec<T> {
        [&self.theta[..], &self.a, &self.c, &self.alpha].concat()
    }

    /// Inverse of [`Self::to_flat`].
    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(DqnnError::invalid(format!(
                "flat vector has {} entries, model has {}",
                flat.len(),
                self.len()
            )));
        }
        let mut rest = flat;
        for dst in [&mut self.theta, &mut self.a, &mut self.c, &mut self.alpha] {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// Evaluates the model on an already-encoded state.
    pub fn forward(&self, state: &Statevector<T>) -> Result<ModelOutput<T>> {
        forward(state, self)
    }
}

/// An encoded input with its target vector (one entry per head).
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledState<T> {
    pub state: Statevector<T>,
    pub target: Vec<T>,
}

/// Result of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelOutput<T> {
    /// Sigmoid node values, one per observable.
    pub features: Vec<T>,
    /// One value per head.
    pub outputs: Vec<T>,
    /// Observable expectations on the evolved state.
    pub expectations: Vec<T>,
}

/// Runs the circuit on `state` and returns its final amplitudes.
pub(crate) fn evolve<T: Real>(state: &Statevector<T>, params: &DqnnParams<T>) -> Result<Statevector<T>> {
    let ansatz = &params.ansatz;
    if state.num_qubits() != ansatz.num_qubits() {
        return Err(DqnnError::invalid(format!(
            "input has {} qubits, model expects {}",
            state.num_qubits(),
            ansatz.num_qubits()
        )));
    }
    let mut amps = state.amplitudes().to_vec();
    for p in ansatz.primitives() {
        apply_primitive_inplace(&mut amps, state.num_qubits(), p, params.theta[p.slot]);
    }
    Ok(Statevector::from_raw(amps, state.num_qubits()))
}

/// Features and head outputs from precomputed expectations.
pub(crate) fn head_outputs<T: Real>(expectations: Vec<T>, params: &DqnnParams<T>) -> ModelOutput<T> {
    let features: Vec<T> = expectations
        .iter()
        .zip(params.a.iter().zip(&params.c))
        .map(|(&b, (&a, &c))| sigmoid(a * (b - c)))
        .collect();
    let outputs = (0..params.heads)
        .map(|k| {
            params
                .alpha_row(k)
                .iter()
                .zip(&features)
                .map(|(&w, &s)| w * s)
                .sum()
        })
        .collect();
    ModelOutput {
        features,
        outputs,
        expectations,
    }
}

/// `Q_k(x) = sum_i alpha[k][i] sigmoid(a_i (<B_i> - c_i))` for every head.
pub fn forward<T: Real>(state: &Statevector<T>, params: &DqnnParams<T>) -> Result<ModelOutput<T>> {
    let evolved = evolve(state, params)?;
    let expectations = params.observables.expectations_raw(evolved.amplitudes());
    Ok(head_outputs(expectations, params))
}

/// Argmax over the head outputs; ties go to the lowest index.
pub fn predict_class<T: Real>(out: &ModelOutput<T>) -> Result<usize> {
    if out.outputs.len() < 2 {
        return Err(DqnnError::invalid("class prediction needs at least two heads"));
    }
    let mut best = 0;
    for (k, &v) in out.outputs.iter().enumerate().skip(1) {
        if v > out.outputs[best] {
            best = k;
        }
    }
    Ok(best)
}

/// JSON checkpoint of a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub ansatz: CircuitAnsatz,
    pub theta: Vec<f64>,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub alpha: Vec<Vec<f64>>,
    pub observables: Vec<String>,
    #[serde(default)]
    pub observable_seed: Option<u64>,
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub config_hash: Option<String>,
    pub constraints: Constraints,
}

impl Checkpoint {
    pub fn from_params<T: Real>(p: &DqnnParams<T>) -> Self {
        let f = |v: &[T]| v.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        Self {
            ansatz: p.ansatz.clone(),
            theta: f(&p.theta),
            a: f(&p.a),
            c: f(&p.c),
            alpha: (0..p.heads).map(|k| f(p.alpha_row(k))).collect(),
            observables: p.observables.words(),
            observable_seed: p.observables.seed(),
            master_seed: None,
            config_hash: None,
            constraints: p.constraints,
        }
    }

    pub fn to_params<T: Real>(&self) -> Result<DqnnParams<T>> {
        let f = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<_>>();
        let heads = self.alpha.len();
        let alpha: Vec<T> = self.alpha.iter().flat_map(|row| f(row)).collect();
        let mut p = DqnnParams::new(
            self.ansatz.clone(),
            ObservableSet::from_words(&self.observables)?,
            heads,
            f(&self.theta),
            f(&self.a),
            f(&self.c),
            alpha,
        )?;
        p.constraints = self.constraints;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| DqnnError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DqnnError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
