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

//! Pauli-string observables and their expectation values.
//!
//! Expectations are evaluated in `O(2^n)` from the bit-flip mask and phase of
//! the string; the `2^n x 2^n` operator is never formed.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::seq::index;

use crate::error::{DqnnError, Result};
use crate::rng::{stream, Stream};
use crate::scalar::Real;
use crate::statevec::Statevector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_digit(d: usize) -> Self {
        match d & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Y,
            _ => Pauli::Z,
        }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis; character `q` acts on qubit `q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    word: Vec<Pauli>,
}

impl PauliString {
    pub fn new(word: Vec<Pauli>) -> Result<Self> {
        if word.is_empty() {
            return Err(DqnnError::invalid("empty Pauli word"));
        }
        Ok(Self { word })
    }

    pub fn word(&self) -> &[Pauli] {
        &self.word
    }

    pub fn num_qubits(&self) -> usize {
        self.word.len()
    }

    pub fn is_identity(&self) -> bool {
        self.word.iter().all(|&p| p == Pauli::I)
    }

    /// `(x_mask, z_mask, y_count)` in amplitude-index bit positions.
    fn masks(&self) -> (usize, usize, usize) {
        let n = self.word.len();
        let mut x = 0;
        let mut z = 0;
        let mut ny = 0;
        for (q, p) in self.word.iter().enumerate() {
            let b = 1usize << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= b,
                Pauli::Y => {
                    x |= b;
                    z |= b;
                    ny += 1;
                }
                Pauli::Z => z |= b,
            }
        }
        (x, z, ny)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.word.iter().try_for_each(|p| write!(f, "{}", p.symbol()))
    }
}

impl FromStr for PauliString {
    type Err = DqnnError;

    fn from_str(s: &str) -> Result<Self> {
        let word = s
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(DqnnError::invalid(format!("bad Pauli symbol {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(word)
    }
}

/// `i^k` for `k mod 4`.
fn i_pow<T: Real>(k: usize) -> Complex<T> {
    let (o, z) = (T::one(), T::zero());
    match k & 3 {
        0 => Complex::new(o, z),
        1 => Complex::new(z, o),
        2 => Complex::new(-o, z),
        _ => Complex::new(z, -o),
    }
}

fn check_len<T>(state: &Statevector<T>, p: &PauliString) -> Result<()>
where
    T: Real,
{
    if p.num_qubits() != state.num_qubits() {
        return Err(DqnnError::invalid(format!(
            "Pauli word {p} has {} qubits, state {}",
            p.num_qubits(),
            state.num_qubits()
        )));
    }
    Ok(())
}

/// Unchecked `<psi|P|psi>` as a complex number.
pub(crate) fn expectation_raw<T: Real>(amps: &[Complex<T>], p: &PauliString) -> Complex<T> {
    let (x, z, ny) = p.masks();
    let base = i_pow::<T>(ny);
    let mut acc = Complex::new(T::zero(), T::zero());
    for (k, &a) in amps.iter().enumerate() {
        let term = amps[k ^ x].conj() * a;
        if (k & z).count_ones() & 1 == 1 {
            acc = acc - term;
        } else {
            acc = acc + term;
        }
    }
    acc * base
}

/// `<psi|P|psi>`, a real number in `[-1, 1]`.
pub fn expectation<T: Real>(state: &Statevector<T>, p: &PauliString) -> Result<T> {
    check_len(state, p)?;
    let v = expectation_raw(state.amplitudes(), p);
    debug_assert!(v.im.abs() < T::tolerance(1e-12), "imaginary residue {}", v.im);
    Ok(v.re)
}

/// `<psi| sum_k w_k P_k |psi>` accumulated term by term.
pub fn weighted_expectation<T: Real>(state: &Statevector<T>, terms: &[(T, PauliString)]) -> Result<T> {
    terms.iter().try_fold(T::zero(), |acc, (w, p)| {
        check_len(state, p)?;
        Ok(acc + *w * expectation_raw(state.amplitudes(), p).re)
    })
}

/// `P |psi>` as a raw amplitude vector.
pub fn apply_pauli<T: Real>(state: &Statevector<T>, p: &PauliString) -> Result<Vec<Complex<T>>> {
    check_len(state, p)?;
    let (x, z, ny) = p.masks();
    let base = i_pow::<T>(ny);
    let amps = state.amplitudes();
    let mut out = vec![Complex::new(T::zero(), T::zero()); amps.len()];
    for (k, &a) in amps.iter().enumerate() {
        let sign = if (k & z).count_ones() & 1 == 1 { -T::one() } else { T::one() };
        out[k ^ x] = a * base * sign;
    }
    Ok(out)
}

/// Distinct non-identity Pauli words used as the measured observables.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSet {
    strings: Vec<PauliString>,
    seed: Option<u64>,
}

impl ObservableSet {
    pub fn new(strings: Vec<PauliString>) -> Result<Self> {
        let n = strings
            .first()
            .map(PauliString::num_qubits)
            .ok_or_else(|| DqnnError::invalid("observable set is empty"))?;
        let mut seen = HashSet::new();
        for s in &strings {
            if s.num_qubits() != n {
                return Err(DqnnError::invalid("observables have mixed qubit counts"));
            }
            if s.is_identity() {
                return Err(DqnnError::invalid("identity word is not an observable"));
            }
            if !seen.insert(s.clone()) {
                return Err(DqnnError::invalid(format!("duplicate observable {s}")));
            }
        }
        Ok(Self {
            strings,
            seed: None,
        })
    }

    /// Parses words such as `"XZIY"`.
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Result<Self> {
        Self::new(
            words
                .iter()
                .map(|w| w.as_ref().parse())
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn strings(&self) -> &[PauliString] {
        &self.strings
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn num_qubits(&self) -> usize {
        self.strings[0].num_qubits()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn words(&self) -> Vec<String> {
        self.strings.iter().map(ToString::to_string).collect()
    }

    /// All expectations on `state`, in set order.
    pub fn expectations<T: Real>(&self, state: &Statevector<T>) -> Result<Vec<T>> {
        self.strings.iter().map(|p| expectation(state, p)).collect()
    }

    pub(crate) fn expectations_raw<T: Real>(&self, amps: &[Complex<T>]) -> Vec<T> {
        self.strings
            .iter()
            .map(|p| expectation_raw(amps, p).re)
            .collect()
    }
}

/// Draws `count` distinct non-identity words on `num_qubits` qubits, uniformly
/// without replacement.
///
/// Words are indexed `1 .. 4^n` in base 4 (`I=0, X=1, Y=2, Z=3`, qubit 0 most
/// significant); the indices come from `rand::seq::index::sample` driven by
/// the ChaCha8 observables stream of `seed`.
pub fn sample_pauli_set(num_qubits: usize, count: usize, seed: u64) -> Result<ObservableSet> {
    if num_qubits == 0 || num_qubits > 31 {
        return Err(DqnnError::invalid(format!(
            "cannot sample Pauli words on {num_qubits} qubits"
        )));
    }
    let available = (1usize << (2 * num_qubits)) - 1;
    if count == 0 || count > available {
        return Err(DqnnError::invalid(format!(
            "requested {count} observables, {available} non-identity words exist"
        )));
    }
    let mut rng = stream(seed, Stream::Observables);
    let strings = index::sample(&mut rng, available, count)
        .into_iter()
        .map(|i| {
            let idx = i + 1;
            let word = (0..num_qubits)
                .map(|q| Pauli::from_digit(idx >> (2 * (num_qubits - 1 - q))))
                .collect();
            PauliString { word }
        })
        .collect();
    let mut set = ObservableSet::new(strings)?;
    set.seed = Some(seed);
    Ok(set)
}
