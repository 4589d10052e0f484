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

//! Duplication-free quantum neural network (DQNN).
//!
//! An amplitude-encoded input is evolved by a layered parameterized circuit;
//! Pauli expectations of the result pass through trainable sigmoid nodes and
//! a linear head. The crate provides the exact statevector simulator, the
//! encoding, analytic and shift-rule gradients, SGD/ADAM training, dataset
//! generators and loaders, a cluster-chain ground-state factory for phase
//! recognition, resource accounting and numerical universality checks.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the double-precision types used by the experiments and the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complexity;
pub mod data;
pub mod encode;
pub mod error;
pub mod experiment;
pub mod grad;
pub mod model;
pub mod observables;
pub mod optim;
pub mod rng;
pub mod scalar;
pub mod statevec;
pub mod train;
pub mod universality;

pub use error::{DqnnError, Result};
pub use scalar::Real;

pub type Statevector = statevec::Statevector<f64>;
pub type Statevector32 = statevec::Statevector<f32>;
pub type DqnnParams = model::DqnnParams<f64>;
pub type DqnnParams32 = model::DqnnParams<f32>;
pub type ModelOutput = model::ModelOutput<f64>;
pub type LabeledState = model::LabeledState<f64>;
pub type GradientRecord = grad::GradientRecord<f64>;
pub type OptimizerState = optim::OptimizerState<f64>;
pub type EncodedInput = encode::EncodedInput<f64>;
pub type RingDomainSpec = encode::RingDomainSpec<f64>;
