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

//! Amplitude encoding of real vectors with an auxiliary norm slot.
//!
//! A vector `x` in `R^d` with `|x| > 0` is written into `n` qubits as
//! `(x_1, ..., x_d, x~, 0, ..., 0) / gamma` where `x~ = |x| / (1 + |x|)` and
//! `gamma = sqrt(|x|^2 + x~^2)`. The extra slot keeps the map injective: the
//! original norm can be read back from the ratio of the first `d` entries to
//! slot `d`.

use num_complex::Complex;

use crate::error::{DqnnError, Result};
use crate::scalar::Real;
use crate::statevec::Statevector;

/// Annulus `kappa1 <= |x + shift| <= kappa2` the shifted inputs must lie in.
#[derive(Clone, Debug, PartialEq)]
pub struct RingDomainSpec<T> {
    pub shift: Vec<T>,
    pub kappa1: T,
    pub kappa2: T,
    pub num_qubits: usize,
}

impl<T: Real> RingDomainSpec<T> {
    pub fn new(shift: Vec<T>, kappa1: T, kappa2: T, num_qubits: usize) -> Result<Self> {
        if !(kappa1 > T::zero() && kappa1 <= kappa2) {
            return Err(DqnnError::invalid(format!(
                "ring bounds must satisfy 0 < kappa1 <= kappa2, got [{kappa1}, {kappa2}]"
            )));
        }
        check_capacity(shift.len(), num_qubits)?;
        Ok(Self {
            shift,
            kappa1,
            kappa2,
            num_qubits,
        })
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }
}

fn check_capacity(d: usize, num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits >= usize::BITS as usize || (1usize << num_qubits) < d + 1 {
        return Err(DqnnError::invalid(format!(
            "{num_qubits} qubits cannot hold {d} features plus the norm slot"
        )));
    }
    Ok(())
}

fn norm<T: Real>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

/// Returns `x + shift`, checking it lands in the ring. `sample` is only used to
/// name the offending input in the error.
pub fn shift_to_ring<T: Real>(x: &[T], spec: &RingDomainSpec<T>, sample: usize) -> Result<Vec<T>> {
    if x.len() != spec.dim() {
        return Err(DqnnError::invalid(format!(
            "sample {sample} has {} features, ring expects {}",
            x.len(),
            spec.dim()
        )));
    }
    let shifted: Vec<T> = x.iter().zip(&spec.shift).map(|(&a, &b)| a + b).collect();
    let r = norm(&shifted);
    if !(r >= spec.kappa1 && r <= spec.kappa2) {
        return Err(DqnnError::DomainViolation {
            sample,
            norm: r.as_f64(),
            lo: spec.kappa1.as_f64(),
            hi: spec.kappa2.as_f64(),
        });
    }
    Ok(shifted)
}

/// A statevector produced by [`amplitude_encode`], together with the
/// original feature dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedInput<T> {
    state: Statevector<T>,
    dim: usize,
}

impl<T: Real> EncodedInput<T> {
    /// Wraps an existing state as an encoding of a `dim`-dimensional vector.
    /// Entries past the norm slot must be zero.
    pub fn from_state(state: Statevector<T>, dim: usize) -> Result<Self> {
        if dim + 1 > state.dim() {
            return Err(DqnnError::MalformedEncoding(format!(
                "state of length {} has no norm slot for d = {dim}",
                state.dim()
            )));
        }
        if state.amplitudes()[dim + 1..]
            .iter()
            .any(|a| a.norm() > T::zero())
        {
            return Err(DqnnError::MalformedEncoding(
                "entries past the norm slot are nonzero".into(),
            ));
        }
        Ok(Self { state, dim })
    }

    pub fn state(&self) -> &Statevector<T> {
        &self.state
    }

    pub fn into_state(self) -> Statevector<T> {
        self.state
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Value of the norm slot (index `d`).
    pub fn slot(&self) -> T {
        self.state.amplitudes()[self.dim].re
    }
}

/// Encodes `x` (with `|x| > 0`) into `num_qubits` qubits.
pub fn amplitude_encode<T: Real>(x: &[T], num_qubits: usize) -> Result<EncodedInput<T>> {
    check_capacity(x.len(), num_qubits)?;
    let r = norm(x);
    if r == T::zero() {
        return Err(DqnnError::invalid("cannot encode the zero vector"));
    }
    if !r.is_finite() {
        return Err(DqnnError::invalid("input has non-finite entries"));
    }
    let xt = r / (T::one() + r);
    let gamma = (r * r + xt * xt).sqrt();
    let zero = Complex::new(T::zero(), T::zero());
    let mut amps = vec![zero; 1 << num_qubits];
    for (a, &v) in amps.iter_mut().zip(x) {
        *a = Complex::new(v / gamma, T::zero());
    }
    amps[x.len()] = Complex::new(xt / gamma, T::zero());
    Ok(EncodedInput {
        state: Statevector::from_raw(amps, num_qubits),
        dim: x.len(),
    })
}

/// Inverts [`amplitude_encode`].
pub fn amplitude_decode<T: Real>(e: &EncodedInput<T>) -> Result<Vec<T>> {
    let amps = e.state.amplitudes();
    let t = e.slot();
    if t == T::zero() {
        return Err(DqnnError::MalformedEncoding("norm slot is zero".into()));
    }
    let head: Vec<T> = amps[..e.dim].iter().map(|a| a.re).collect();
    let r = norm(&head);
    let x_norm = r / t - T::one();
    if r == T::zero() {
        return Ok(head);
    }
    let gamma = x_norm / r;
    Ok(head.into_iter().map(|v| v * gamma).collect())
}

/// Bounds `((1 + (1 + kappa2)^2)^{-1/2}, (1 + (1 + kappa1)^2)^{-1/2})` on the
/// norm slot of any encoding of a ring input.
pub fn slot_bounds<T: Real>(kappa1: T, kappa2: T) -> (T, T) {
    let f = |k: T| (T::one() + (T::one() + k) * (T::one() + k)).sqrt().recip();
    (f(kappa2), f(kappa1))
}

/// Whether the norm slot lies strictly inside [`slot_bounds`].
pub fn check_slot_bound<T: Real>(e: &EncodedInput<T>, kappa1: T, kappa2: T) -> bool {
    let (lo, hi) = slot_bounds(kappa1, kappa2);
    let t = e.slot();
    lo < t && t < hi
}
