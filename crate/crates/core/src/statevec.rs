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

//! Exact statevector simulation of the layered DQNN circuit.
//!
//! Qubit 0 is the most significant bit of the amplitude index, so for
//! `n = 2` the basis order is `|00>, |01>, |10>, |11>` with qubit 0 on the
//! left.
//!
//! Trainable gates are parameterized natively as Euler rotations
//! `RZ(a) RY(b) RZ(c)` (three slots per `G` or `CG` template). Every slot is
//! then the angle of a single `RY`/`RZ` primitive, which is what makes the
//! shift rules in [`crate::grad`] exact. [`decompose_g_to_rotations`] maps the
//! closed-form `G(t1, t2, t3)` onto these angles.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{DqnnError, Result};
use crate::scalar::Real;

/// A 2x2 complex matrix, row-major.
pub type Mat2<T> = [[Complex<T>; 2]; 2];

/// Pure state of `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector<T> {
    amps: Vec<Complex<T>>,
    num_qubits: usize,
}

impl<T: Real> Statevector<T> {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    /// Computational basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits >= usize::BITS as usize - 1 {
            return Err(DqnnError::invalid(format!(
                "qubit count {num_qubits} not supported"
            )));
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(DqnnError::OutOfRange { index, len: dim });
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); dim];
        amps[index] = Complex::new(T::one(), T::zero());
        Ok(Self { amps, num_qubits })
    }

    /// Wraps an amplitude vector; its length must be a power of two (at least
    /// 2) and its norm 1 within `1e-10`.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(DqnnError::invalid(format!(
                "amplitude length {dim} is not a power of two >= 2"
            )));
        }
        let norm: T = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - T::one()).abs() > T::tolerance(1e-10) {
            return Err(DqnnError::invalid(format!(
                "state norm^2 {norm} differs from 1"
            )));
        }
        Ok(Self {
            num_qubits: dim.trailing_zeros() as usize,
            amps,
        })
    }

    /// Real amplitudes, see [`Statevector::from_amplitudes`].
    pub fn from_real(values: &[T]) -> Result<Self> {
        Self::from_amplitudes(
            values
                .iter()
                .map(|&v| Complex::new(v, T::zero()))
                .collect(),
        )
    }

    /// Normalizes `amps` and wraps it. Fails on a zero vector.
    pub fn normalized(mut amps: Vec<Complex<T>>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
        if norm == T::zero() || !norm.is_finite() {
            return Err(DqnnError::invalid("cannot normalize a zero vector"));
        }
        for a in &mut amps {
            *a = *a / norm;
        }
        Self::from_amplitudes(amps)
    }

    pub(crate) fn from_raw(amps: Vec<Complex<T>>, num_qubits: usize) -> Self {
        debug_assert_eq!(amps.len(), 1 << num_qubits);
        Self { amps, num_qubits }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * b
            })
    }

    /// Multiplies every amplitude by `e^{i phi}`.
    pub fn with_global_phase(mut self, phi: T) -> Self {
        let p = Complex::from_polar(T::one(), phi);
        for a in &mut self.amps {
            *a = *a * p;
        }
        self
    }

    /// Converts to another precision.
    pub fn cast<U: Real>(&self) -> Statevector<U> {
        Statevector {
            amps: self
                .amps
                .iter()
                .map(|a| Complex::new(U::lit(a.re.as_f64()), U::lit(a.im.as_f64())))
                .collect(),
            num_qubits: self.num_qubits,
        }
    }
}

#[inline]
fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// The three-angle single-qubit gate
/// `[[e^{i t2} cos t1, e^{i t3} sin t1], [-e^{-i t3} sin t1, e^{-i t2} cos t1]]`.
pub fn gate_matrix_g<T: Real>(t1: T, t2: T, t3: T) -> Result<Mat2<T>> {
    if !(t1.is_finite() && t2.is_finite() && t3.is_finite()) {
        return Err(DqnnError::invalid("non-finite gate angle"));
    }
    let (s, co) = t1.sin_cos();
    let e2 = Complex::from_polar(T::one(), t2);
    let e3 = Complex::from_polar(T::one(), t3);
    Ok([
        [e2.scale(co), e3.scale(s)],
        [-e3.conj().scale(s), e2.conj().scale(co)],
    ])
}

/// `RY(b) = [[cos(b/2), sin(b/2)], [-sin(b/2), cos(b/2)]]`.
pub fn ry_matrix<T: Real>(b: T) -> Mat2<T> {
    let (s, co) = (b / T::lit(2.0)).sin_cos();
    let z = T::zero();
    [[c(co, z), c(s, z)], [c(-s, z), c(co, z)]]
}

/// `RZ(a) = diag(e^{i a/2}, e^{-i a/2})`.
pub fn rz_matrix<T: Real>(a: T) -> Mat2<T> {
    let p = Complex::from_polar(T::one(), a / T::lit(2.0));
    let z = c(T::zero(), T::zero());
    [[p, z], [z, p.conj()]]
}

pub fn mat2_mul<T: Real>(x: &Mat2<T>, y: &Mat2<T>) -> Mat2<T> {
    let mut out = [[c(T::zero(), T::zero()); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

/// `RZ(a) RY(b) RZ(c)`: the unitary a `G`/`CG` template applies for slot
/// angles `(a, b, c)`.
pub fn euler_matrix<T: Real>(a: T, b: T, c: T) -> Mat2<T> {
    mat2_mul(&mat2_mul(&rz_matrix(a), &ry_matrix(b)), &rz_matrix(c))
}

/// Largest entry of `|u u^dagger - I|`.
pub fn unitarity_defect<T: Real>(u: &Mat2<T>) -> T {
    let mut worst = T::zero();
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = u[i][0] * u[j][0].conj() + u[i][1] * u[j][1].conj();
            if i == j {
                acc = acc - T::one();
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

fn check_unitary<T: Real>(u: &Mat2<T>) -> Result<()> {
    let defect = unitarity_defect(u);
    if defect > T::tolerance(1e-10) || !defect.is_finite() {
        return Err(DqnnError::invalid(format!(
            "matrix is not unitary (defect {defect})"
        )));
    }
    Ok(())
}

#[inline]
fn bit<T>(state: &Statevector<T>, qubit: usize) -> usize {
    1usize << (state.num_qubits - 1 - qubit)
}

/// Applies `u` to `target` on the amplitudes whose `control_mask` bits are all
/// set. `control_mask = 0` means unconditional.
pub(crate) fn apply_mat2_inplace<T: Real>(
    amps: &mut [Complex<T>],
    target_bit: usize,
    control_mask: usize,
    u: &Mat2<T>,
) {
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for i in base..base + target_bit {
            if i & control_mask != control_mask {
                continue;
            }
            let j = i | target_bit;
            let a0 = amps[i];
            let a1 = amps[j];
            amps[i] = u[0][0] * a0 + u[0][1] * a1;
            amps[j] = u[1][0] * a0 + u[1][1] * a1;
        }
        base += 2 * target_bit;
    }
}

#[inline]
fn apply_ry_inplace<T: Real>(amps: &mut [Complex<T>], target_bit: usize, control_mask: usize, b: T) {
    let (s, co) = (b / T::lit(2.0)).sin_cos();
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for i in base..base + target_bit {
            if i & control_mask != control_mask {
                continue;
            }
            let j = i | target_bit;
            let a0 = amps[i];
            let a1 = amps[j];
            amps[i] = a0.scale(co) + a1.scale(s);
            amps[j] = a1.scale(co) - a0.scale(s);
        }
        base += 2 * target_bit;
    }
}

#[inline]
fn apply_rz_inplace<T: Real>(amps: &mut [Complex<T>], target_bit: usize, control_mask: usize, a: T) {
    let p = Complex::from_polar(T::one(), a / T::lit(2.0));
    let q = p.conj();
    for (i, amp) in amps.iter_mut().enumerate() {
        if i & control_mask != control_mask {
            continue;
        }
        *amp = if i & target_bit == 0 { *amp * p } else { *amp * q };
    }
}

/// Applies `u` to `qubit`, returning the new state.
pub fn apply_single_qubit<T: Real>(
    state: &Statevector<T>,
    qubit: usize,
    u: &Mat2<T>,
) -> Result<Statevector<T>> {
    if qubit >= state.num_qubits {
        return Err(DqnnError::OutOfRange {
            index: qubit,
            len: state.num_qubits,
        });
    }
    check_unitary(u)?;
    let mut out = state.clone();
    apply_mat2_inplace(&mut out.amps, bit(state, qubit), 0, u);
    Ok(out)
}

/// Applies `|0><0| (x) I + |1><1| (x) u` with `control` and `target`.
pub fn apply_controlled<T: Real>(
    state: &Statevector<T>,
    control: usize,
    target: usize,
    u: &Mat2<T>,
) -> Result<Statevector<T>> {
    let n = state.num_qubits;
    for q in [control, target] {
        if q >= n {
            return Err(DqnnError::OutOfRange { index: q, len: n });
        }
    }
    if control == target {
        return Err(DqnnError::invalid("control and target coincide"));
    }
    check_unitary(u)?;
    let mut out = state.clone();
    apply_mat2_inplace(&mut out.amps, bit(state, target), bit(state, control), u);
    Ok(out)
}

/// Gate family of a template.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    /// Three-slot single-qubit rotation `RZ RY RZ`.
    G,
    /// Controlled three-slot rotation.
    CG,
    RY,
    RZ,
}

impl GateKind {
    /// Number of parameter slots the template consumes.
    pub fn arity(self) -> usize {
        match self {
            GateKind::G | GateKind::CG => 3,
            GateKind::RY | GateKind::RZ => 1,
        }
    }
}

/// One gate template of an ansatz, bound to parameter slots
/// `slot .. slot + kind.arity()`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: GateKind,
    pub target: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<usize>,
    pub slot: usize,
}

impl GateSpec {
    /// The 2x2 unitary acting on `target` (on the control=1 block for `CG`).
    pub fn local_matrix<T: Real>(&self, theta: &[T]) -> Mat2<T> {
        let s = self.slot;
        match self.kind {
            GateKind::G | GateKind::CG => euler_matrix(theta[s], theta[s + 1], theta[s + 2]),
            GateKind::RY => ry_matrix(theta[s]),
            GateKind::RZ => rz_matrix(theta[s]),
        }
    }
}

/// Rotation axis of a primitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Y,
    Z,
}

/// Single-angle rotation, possibly controlled, bound to one slot. Templates
/// expand into these.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Primitive {
    pub axis: Axis,
    pub target: usize,
    pub control: Option<usize>,
    pub slot: usize,
}

/// Ordered gate layout with contiguous parameter slots `0..num_params`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AnsatzDescriptor", into = "AnsatzDescriptor")]
pub struct CircuitAnsatz {
    num_qubits: usize,
    layers: usize,
    templates: Vec<GateSpec>,
    num_params: usize,
    primitives: Vec<Primitive>,
}

/// Serialized form of a [`CircuitAnsatz`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnsatzDescriptor {
    pub num_qubits: usize,
    pub layers: usize,
    pub templates: Vec<GateSpec>,
}

impl TryFrom<AnsatzDescriptor> for CircuitAnsatz {
    type Error = DqnnError;

    fn try_from(d: AnsatzDescriptor) -> Result<Self> {
        let gates = d
            .templates
            .iter()
            .map(|g| (g.kind, g.target, g.control))
            .collect();
        let ansatz = CircuitAnsatz::from_templates(d.num_qubits, d.layers, gates)?;
        if ansatz.templates != d.templates {
            return Err(DqnnError::invalid(
                "ansatz slot indices are not contiguous in template order",
            ));
        }
        Ok(ansatz)
    }
}

impl From<CircuitAnsatz> for AnsatzDescriptor {
    fn from(a: CircuitAnsatz) -> Self {
        AnsatzDescriptor {
            num_qubits: a.num_qubits,
            layers: a.layers,
            templates: a.templates,
        }
    }
}

impl CircuitAnsatz {
    /// Builds an ansatz from `(kind, target, control)` triples, assigning
    /// parameter slots in order.
    pub fn from_templates(
        num_qubits: usize,
        layers: usize,
        gates: Vec<(GateKind, usize, Option<usize>)>,
    ) -> Result<Self> {
        if num_qubits == 0 {
            return Err(DqnnError::invalid("ansatz needs at least one qubit"));
        }
        let mut templates = Vec::with_capacity(gates.len());
        let mut primitives = Vec::new();
        let mut slot = 0;
        for (kind, target, control) in gates {
            if target >= num_qubits {
                return Err(DqnnError::OutOfRange {
                    index: target,
                    len: num_qubits,
                });
            }
            match (kind, control) {
                (GateKind::CG, Some(ctl)) => {
                    if ctl >= num_qubits {
                        return Err(DqnnError::OutOfRange {
                            index: ctl,
                            len: num_qubits,
                        });
                    }
                    if ctl == target {
                        return Err(DqnnError::invalid("CG control equals target"));
                    }
                }
                (GateKind::CG, None) => {
                    return Err(DqnnError::invalid("CG template needs a control qubit"))
                }
                (_, Some(_)) => {
                    return Err(DqnnError::invalid(format!(
                        "{kind:?} template cannot carry a control"
                    )))
                }
                _ => {}
            }
            // G/CG = RZ(a) RY(b) RZ(c); the rightmost factor acts first.
            let axes: &[(Axis, usize)] = match kind {
                GateKind::G | GateKind::CG => &[(Axis::Z, 2), (Axis::Y, 1), (Axis::Z, 0)],
                GateKind::RY => &[(Axis::Y, 0)],
                GateKind::RZ => &[(Axis::Z, 0)],
            };
            for &(axis, offset) in axes {
                primitives.push(Primitive {
                    axis,
                    target,
                    control,
                    slot: slot + offset,
                });
            }
            templates.push(GateSpec {
                kind,
                target,
                control,
                slot,
            });
            slot += kind.arity();
        }
        Ok(Self {
            num_qubits,
            layers,
            templates,
            num_params: slot,
            primitives,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn templates(&self) -> &[GateSpec] {
        &self.templates
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    /// Primitives in application order.
    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    /// Index into [`Self::primitives`] of the primitive owning `slot`.
    pub fn primitive_of_slot(&self, slot: usize) -> Option<usize> {
        self.primitives.iter().position(|p| p.slot == slot)
    }

    /// Whether the slot's rotation is controlled.
    pub fn slot_is_controlled(&self, slot: usize) -> bool {
        self.primitive_of_slot(slot)
            .map(|p| self.primitives[p].control.is_some())
            .unwrap_or(false)
    }
}

/// Layered ansatz: per layer a `G` on every qubit, then a ring of `CG` with
/// control `i` and target `(i + 1) mod n`. No `CG` for a single qubit.
pub fn build_ansatz(num_qubits: usize, layers: usize) -> Result<CircuitAnsatz> {
    if num_qubits == 0 || layers == 0 {
        return Err(DqnnError::invalid("ansatz needs n >= 1 and layers >= 1"));
    }
    let mut gates = Vec::new();
    for _ in 0..layers {
        gates.extend((0..num_qubits).map(|q| (GateKind::G, q, None)));
        if num_qubits > 1 {
            gates.extend(
                (0..num_qubits).map(|q| (GateKind::CG, (q + 1) % num_qubits, Some(q))),
            );
        }
    }
    CircuitAnsatz::from_templates(num_qubits, layers, gates)
}

/// Applies one primitive in place with angle `angle`.
#[inline]
pub(crate) fn apply_primitive_inplace<T: Real>(
    amps: &mut [Complex<T>],
    num_qubits: usize,
    p: &Primitive,
    angle: T,
) {
    let tbit = 1usize << (num_qubits - 1 - p.target);
    let cmask = p.control.map_or(0, |c| 1usize << (num_qubits - 1 - c));
    match p.axis {
        Axis::Y => apply_ry_inplace(amps, tbit, cmask, angle),
        Axis::Z => apply_rz_inplace(amps, tbit, cmask, angle),
    }
}

fn check_theta<T>(ansatz: &CircuitAnsatz, theta: &[T]) -> Result<()> {
    if theta.len() != ansatz.num_params {
        return Err(DqnnError::invalid(format!(
            "theta has {} entries, ansatz expects {}",
            theta.len(),
            ansatz.num_params
        )));
    }
    Ok(())
}

/// Runs every template of `ansatz` on `state` with angles `theta`.
pub fn run_ansatz<T: Real>(
    state: &Statevector<T>,
    ansatz: &CircuitAnsatz,
    theta: &[T],
) -> Result<Statevector<T>> {
    check_theta(ansatz, theta)?;
    if state.num_qubits != ansatz.num_qubits {
        return Err(DqnnError::invalid(format!(
            "state has {} qubits, ansatz {}",
            state.num_qubits, ansatz.num_qubits
        )));
    }
    let mut amps = state.amps.clone();
    for p in &ansatz.primitives {
        apply_primitive_inplace(&mut amps, state.num_qubits, p, theta[p.slot]);
    }
    Ok(Statevector::from_raw(amps, state.num_qubits))
}

/// Euler angles with `G(t1, t2, t3) = e^{i phase} RZ(rz_outer) RY(ry) RZ(rz_inner)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerAngles<T> {
    pub rz_outer: T,
    pub ry: T,
    pub rz_inner: T,
    pub phase: T,
}

impl<T: Real> EulerAngles<T> {
    pub fn matrix(&self) -> Mat2<T> {
        let g = Complex::from_polar(T::one(), self.phase);
        let m = euler_matrix(self.rz_outer, self.ry, self.rz_inner);
        [[m[0][0] * g, m[0][1] * g], [m[1][0] * g, m[1][1] * g]]
    }
}

/// Rewrites `G(t1, t2, t3)` as rotations.
///
/// `ry = 2 t1` wrapped into `[0, 2pi)`; each full turn removed flips the sign
/// of the half-angle entries, absorbed into `phase = pi`. Otherwise
/// `rz_outer = t2 + t3`, `rz_inner = t2 - t3`; when `cos t1 = 0` the split is
/// degenerate and `rz_inner = 0`, `rz_outer = 2 t3`.
pub fn decompose_g_to_rotations<T: Real>(t1: T, t2: T, t3: T) -> EulerAngles<T> {
    let two_pi = T::TAU();
    let doubled = t1 + t1;
    let turns = (doubled / two_pi).floor();
    let mut ry = doubled - turns * two_pi;
    let mut odd = turns.to_i64().unwrap_or(0).rem_euclid(2) == 1;
    if ry >= two_pi {
        ry = ry - two_pi;
        odd = !odd;
    }
    let phase = if odd { T::PI() } else { T::zero() };
    let (rz_outer, rz_inner) = if t1.cos().abs() <= T::epsilon() * T::lit(8.0) {
        (t3 + t3, T::zero())
    } else {
        (t2 + t3, t2 - t3)
    };
    EulerAngles {
        rz_outer,
        ry,
        rz_inner,
        phase,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    type C = Complex<f64>;

    fn close(a: &Mat2<f64>, b: &Mat2<f64>, tol: f64) -> bool {
        (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).norm() < tol))
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Statevector<f64> {
        let amps = (0..1 << n)
            .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Statevector::normalized(amps).unwrap()
    }

    // Dense Kronecker oracle for a gate on `target` controlled by `control`.
    fn dense_apply(state: &[C], n: usize, target: usize, control: Option<usize>, u: &Mat2<f64>) -> Vec<C> {
        let dim = 1 << n;
        let mut full = vec![vec![C::new(0.0, 0.0); dim]; dim];
        for row in 0..dim {
            for col in 0..dim {
                let tb = n - 1 - target;
                let others_equal = (row ^ col) & !(1 << tb) == 0;
                if !others_equal {
                    continue;
                }
                let active = control.is_none_or(|c| col >> (n - 1 - c) & 1 == 1);
                full[row][col] = if active {
                    u[(row >> tb) & 1][(col >> tb) & 1]
                } else if row == col {
                    C::new(1.0, 0.0)
                } else {
                    C::new(0.0, 0.0)
                };
            }
        }
        (0..dim)
            .map(|r| (0..dim).map(|k| full[r][k] * state[k]).sum())
            .collect()
    }

    #[test]
    fn g_identity_and_quarter_turn() {
        let id = gate_matrix_g(0.0, 0.0, 0.0).unwrap();
        let one = C::new(1.0, 0.0);
        let zero = C::new(0.0, 0.0);
        assert!(close(&id, &[[one, zero], [zero, one]], 1e-15));
        let g = gate_matrix_g(FRAC_PI_2, 0.0, 0.0).unwrap();
        assert!(close(&g, &[[zero, one], [-one, zero]], 1e-15));
    }

    #[test]
    fn g_entries_and_unitarity() {
        let g = gate_matrix_g(0.3, 0.7, 1.1).unwrap();
        let e = |t: f64| C::from_polar(1.0, t);
        assert!((g[0][0] - e(0.7) * 0.3f64.cos()).norm() < 1e-15);
        assert!((g[0][1] - e(1.1) * 0.3f64.sin()).norm() < 1e-15);
        assert!((g[1][0] + e(-1.1) * 0.3f64.sin()).norm() < 1e-15);
        assert!((g[1][1] - e(-0.7) * 0.3f64.cos()).norm() < 1e-15);
        assert!(unitarity_defect(&g) < 1e-12);
    }

    #[test]
    fn g_unitary_for_random_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let g = gate_matrix_g(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            )
            .unwrap();
            assert!(unitarity_defect(&g) < 1e-12);
        }
    }

    #[test]
    fn g_rejects_non_finite() {
        assert!(matches!(
            gate_matrix_g(f64::NAN, 0.0, 0.0),
            Err(DqnnError::InvalidArgument(_))
        ));
    }

    #[test]
    fn single_qubit_read_offs() {
        let zero = Statevector::<f64>::zero(1).unwrap();
        let id = gate_matrix_g(0.0, 0.0, 0.0).unwrap();
        assert_eq!(apply_single_qubit(&zero, 0, &id).unwrap(), zero);
        let g = gate_matrix_g(FRAC_PI_2, 0.0, 0.0).unwrap();
        let out = apply_single_qubit(&zero, 0, &g).unwrap();
        assert!((out.amplitudes()[0]).norm() < 1e-15);
        assert!((out.amplitudes()[1] - C::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn single_qubit_errors() {
        let s = Statevector::<f64>::zero(2).unwrap();
        let g = gate_matrix_g(0.1, 0.2, 0.3).unwrap();
        assert!(matches!(
            apply_single_qubit(&s, 2, &g),
            Err(DqnnError::OutOfRange { .. })
        ));
        let mut bad = g;
        bad[0][0] *= 2.0;
        assert!(matches!(
            apply_single_qubit(&s, 0, &bad),
            Err(DqnnError::InvalidArgument(_))
        ));
    }

    #[test]
    fn single_qubit_matches_kronecker_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(3, &mut rng);
        let g = gate_matrix_g(rng.random(), rng.random(), rng.random()).unwrap();
        let out = apply_single_qubit(&s, 1, &g).unwrap();
        let want = dense_apply(s.amplitudes(), 3, 1, None, &g);
        for (a, b) in out.amplitudes().iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn controlled_read_offs() {
        let g = gate_matrix_g(FRAC_PI_2, 0.0, 0.0).unwrap();
        let s00 = Statevector::<f64>::basis(2, 0b00).unwrap();
        assert_eq!(apply_controlled(&s00, 0, 1, &g).unwrap(), s00);
        let s10 = Statevector::<f64>::basis(2, 0b10).unwrap();
        let out = apply_controlled(&s10, 0, 1, &g).unwrap();
        assert!((out.amplitudes()[0b11] - C::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(
            apply_controlled(&s10, 1, 1, &g),
            Err(DqnnError::InvalidArgument(_))
        ));
    }

    #[test]
    fn controlled_matches_block_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_state(2, &mut rng);
        let g = gate_matrix_g(rng.random(), rng.random(), rng.random()).unwrap();
        let out = apply_controlled(&s, 1, 0, &g).unwrap();
        let want = dense_apply(s.amplitudes(), 2, 0, Some(1), &g);
        for (a, b) in out.amplitudes().iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn ansatz_counts() {
        let a = build_ansatz(2, 1).unwrap();
        assert_eq!((a.templates().len(), a.num_params()), (4, 12));
        let a = build_ansatz(1, 1).unwrap();
        assert_eq!((a.templates().len(), a.num_params()), (1, 3));
        let a = build_ansatz(3, 2).unwrap();
        assert_eq!((a.templates().len(), a.num_params()), (12, 36));
        assert_eq!(a.primitives().len(), 36);
        let ring: Vec<_> = a.templates()[3..6]
            .iter()
            .map(|g| (g.control.unwrap(), g.target))
            .collect();
        assert_eq!(ring, vec![(0, 1), (1, 2), (2, 0)]);
        let mut slots: Vec<_> = a.primitives().iter().map(|p| p.slot).collect();
        slots.sort_unstable();
        assert_eq!(slots, (0..36).collect::<Vec<_>>());
    }

    #[test]
    fn ansatz_rejects_bad_templates() {
        assert!(build_ansatz(0, 1).is_err());
        assert!(build_ansatz(2, 0).is_err());
        assert!(CircuitAnsatz::from_templates(2, 1, vec![(GateKind::CG, 1, Some(1))]).is_err());
        assert!(CircuitAnsatz::from_templates(2, 1, vec![(GateKind::G, 2, None)]).is_err());
        assert!(CircuitAnsatz::from_templates(2, 1, vec![(GateKind::RY, 0, Some(1))]).is_err());
    }

    #[test]
    fn zero_angles_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_state(3, &mut rng);
        let a = build_ansatz(3, 2).unwrap();
        let out = run_ansatz(&s, &a, &vec![0.0; a.num_params()]).unwrap();
        for (x, y) in out.amplitudes().iter().zip(s.amplitudes()) {
            assert!((x - y).norm() < 1e-15);
        }
        assert!(run_ansatz(&s, &a, &[0.0; 3]).is_err());
    }

    #[test]
    fn ansatz_matches_template_by_template_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = build_ansatz(2, 1).unwrap();
        let theta: Vec<f64> = (0..a.num_params()).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let s = Statevector::<f64>::zero(2).unwrap();
        let out = run_ansatz(&s, &a, &theta).unwrap();
        let mut want = s.amplitudes().to_vec();
        for t in a.templates() {
            want = dense_apply(&want, 2, t.target, t.control, &t.local_matrix(&theta));
        }
        for (x, y) in out.amplitudes().iter().zip(&want) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let a = build_ansatz(3, 2).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        let back: CircuitAnsatz = serde_json::from_str(&json).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn decomposition_branches() {
        let e = decompose_g_to_rotations(0.0, 0.0, 0.0);
        assert_eq!(
            (e.rz_outer, e.ry, e.rz_inner, e.phase),
            (0.0, 0.0, 0.0, 0.0)
        );
        let e = decompose_g_to_rotations(FRAC_PI_4, 0.0, 0.0);
        assert!((e.ry - FRAC_PI_2).abs() < 1e-15);
        assert_eq!((e.rz_outer, e.rz_inner, e.phase), (0.0, 0.0, 0.0));
        let e = decompose_g_to_rotations(FRAC_PI_2, 0.4, 0.9);
        assert_eq!(e.rz_inner, 0.0);
        assert!(close(&e.matrix(), &gate_matrix_g(FRAC_PI_2, 0.4, 0.9).unwrap(), 1e-12));
    }

    #[test]
    fn decomposition_reconstructs_g() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let (t1, t2, t3) = (
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
            );
            let e = decompose_g_to_rotations(t1, t2, t3);
            assert!((0.0..2.0 * PI).contains(&e.ry));
            assert!(close(&e.matrix(), &gate_matrix_g(t1, t2, t3).unwrap(), 1e-10));
        }
    }

    #[test]
    fn f32_state_stays_normalized() {
        let a = build_ansatz(3, 1).unwrap();
        let theta: Vec<f32> = (0..a.num_params()).map(|i| 0.1 * i as f32).collect();
        let out = run_ansatz(&Statevector::<f32>::zero(3).unwrap(), &a, &theta).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-5);
    }
}
