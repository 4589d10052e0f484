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

//! Gradients of the head outputs and of the squared-error loss.
//!
//! Classical parameters use closed forms. For a circuit angle `theta_j` the
//! derivative of every expectation comes from shifted circuit runs:
//!
//! * uncontrolled rotations: `d<B>/dtheta_j = (<B>_j^+ - <B>_j^-) / 2` with
//!   shifts of `+-pi/2`;
//! * controlled rotations have a three-level generator (`0, +-1/2`), for which
//!   the two-term rule is not exact. They use the four-term rule
//!   `d1 (<B>(+pi/2) - <B>(-pi/2)) - d2 (<B>(+3pi/2) - <B>(-3pi/2))` with
//!   `d1 = (sqrt2 + 1) / (4 sqrt2)` and `d2 = (sqrt2 - 1) / (4 sqrt2)`.
//!
//! Chained through the sigmoid nodes this gives
//! `dQ/dtheta_j = sum_i alpha_i a_i s_i (1 - s_i) d<B_i>/dtheta_j`.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DqnnError, Result};
use crate::model::{head_outputs, DqnnParams, LabeledState, ModelOutput};
use crate::scalar::Real;
use crate::statevec::{apply_primitive_inplace, Statevector};

/// Gradient with the same shapes as [`DqnnParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientRecord<T> {
    pub theta: Vec<T>,
    pub a: Vec<T>,
    pub c: Vec<T>,
    /// `heads x observables`, row-major.
    pub alpha: Vec<T>,
}

impl<T: Real> GradientRecord<T> {
    pub fn zeros_like(p: &DqnnParams<T>) -> Self {
        Self {
            theta: vec![T::zero(); p.theta.len()],
            a: vec![T::zero(); p.a.len()],
            c: vec![T::zero(); p.c.len()],
            alpha: vec![T::zero(); p.alpha.len()],
        }
    }

    /// Same layout as [`DqnnParams::to_flat`].
    pub fn to_flat(&self) -> Vec<T> {
        [&self.theta[..], &self.a, &self.c, &self.alpha].concat()
    }

    pub fn from_flat(p: &DqnnParams<T>, flat: &[T]) -> Result<Self> {
        let mut g = Self::zeros_like(p);
        if flat.len() != p.len() {
            return Err(DqnnError::invalid("flat gradient length mismatch"));
        }
        let mut rest = flat;
        for dst in [&mut g.theta, &mut g.a, &mut g.c, &mut g.alpha] {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        }
        Ok(g)
    }

    fn add_assign(&mut self, other: &Self) {
        for (dst, src) in [
            (&mut self.theta, &other.theta),
            (&mut self.a, &other.a),
            (&mut self.c, &other.c),
            (&mut self.alpha, &other.alpha),
        ] {
            dst.iter_mut().zip(src).for_each(|(d, &s)| *d = *d + s);
        }
    }

    pub fn scale(&mut self, k: T) {
        for v in [&mut self.theta, &mut self.a, &mut self.c, &mut self.alpha] {
            v.iter_mut().for_each(|x| *x = *x * k);
        }
    }
}

/// States before each primitive of the circuit, plus the final state.
struct Trajectory<T> {
    states: Vec<Vec<Complex<T>>>,
}

fn trajectory<T: Real>(x: &Statevector<T>, params: &DqnnParams<T>) -> Result<Trajectory<T>> {
    let ansatz = params.ansatz();
    if x.num_qubits() != ansatz.num_qubits() {
        return Err(DqnnError::invalid(format!(
            "input has {} qubits, model expects {}",
            x.num_qubits(),
            ansatz.num_qubits()
        )));
    }
    let prims = ansatz.primitives();
    let mut states = Vec::with_capacity(prims.len() + 1);
    let mut amps = x.amplitudes().to_vec();
    for p in prims {
        states.push(amps.clone());
        apply_primitive_inplace(&mut amps, x.num_qubits(), p, params.theta[p.slot]);
    }
    states.push(amps);
    Ok(Trajectory { states })
}

fn slot_to_primitive<T: Real>(params: &DqnnParams<T>) -> Vec<usize> {
    let mut map = vec![0; params.theta.len()];
    for (i, p) in params.ansatz().primitives().iter().enumerate() {
        map[p.slot] = i;
    }
    map
}

/// Expectations with primitive `prim`'s angle shifted by `shift`, resuming
/// from the cached state before it.
fn shifted_from<T: Real>(
    traj: &Trajectory<T>,
    params: &DqnnParams<T>,
    prim: usize,
    shift: T,
) -> Vec<T> {
    let n = params.ansatz().num_qubits();
    let prims = params.ansatz().primitives();
    let mut amps = traj.states[prim].clone();
    let p0 = &prims[prim];
    apply_primitive_inplace(&mut amps, n, p0, params.theta[p0.slot] + shift);
    for p in &prims[prim + 1..] {
        apply_primitive_inplace(&mut amps, n, p, params.theta[p.slot]);
    }
    params.observables().expectations_raw(&amps)
}

/// Expectations with `theta_j` shifted by `+shift` and `-shift`.
pub fn shifted_expectations_by<T: Real>(
    x: &Statevector<T>,
    params: &DqnnParams<T>,
    j: usize,
    shift: T,
) -> Result<(Vec<T>, Vec<T>)> {
    if j >= params.theta.len() {
        return Err(DqnnError::OutOfRange {
            index: j,
            len: params.theta.len(),
        });
    }
    let traj = trajectory(x, params)?;
    let prim = slot_to_primitive(params)[j];
    Ok((
        shifted_from(&traj, params, prim, shift),
        shifted_from(&traj, params, prim, -shift),
    ))
}

/// Expectations with `theta_j` shifted by `+pi/2` and `-pi/2`.
pub fn shifted_expectations<T: Real>(
    x: &Statevector<T>,
    params: &DqnnParams<T>,
    j: usize,
) -> Result<(Vec<T>, Vec<T>)> {
    shifted_expectations_by(x, params, j, T::FRAC_PI_2())
}

fn four_term_coefficients<T: Real>() -> (T, T) {
    let r2 = T::SQRT_2();
    let den = T::lit(4.0) * r2;
    ((r2 + T::one()) / den, (r2 - T::one()) / den)
}

/// `d<B_i>/dtheta_j` for every slot `j` (outer) and observable `i` (inner).
fn expectation_derivatives_from<T: Real>(traj: &Trajectory<T>, params: &DqnnParams<T>) -> Vec<Vec<T>> {
    let half = T::lit(0.5);
    let (d1, d2) = four_term_coefficients::<T>();
    let quarter = T::FRAC_PI_2();
    let three_quarter = quarter * T::lit(3.0);
    let prims = params.ansatz().primitives();
    slot_to_primitive(params)
        .into_iter()
        .map(|prim| {
            let plus = shifted_from(traj, params, prim, quarter);
            let minus = shifted_from(traj, params, prim, -quarter);
            if prims[prim].control.is_none() {
                plus.iter().zip(&minus).map(|(&p, &m)| half * (p - m)).collect()
            } else {
                let plus3 = shifted_from(traj, params, prim, three_quarter);
                let minus3 = shifted_from(traj, params, prim, -three_quarter);
                (0..plus.len())
                    .map(|i| d1 * (plus[i] - minus[i]) - d2 * (plus3[i] - minus3[i]))
                    .collect()
            }
        })
        .collect()
}

/// `d<B_i>/dtheta_j` indexed `[j][i]`.
pub fn expectation_derivatives<T: Real>(x: &Statevector<T>, params: &DqnnParams<T>) -> Result<Vec<Vec<T>>> {
    let traj = trajectory(x, params)?;
    Ok(expectation_derivatives_from(&traj, params))
}

fn check_upstream<T: Real>(params: &DqnnParams<T>, upstream: &[T]) -> Result<()> {
    if upstream.len() != params.heads() {
        return Err(DqnnError::invalid(format!(
            "upstream has {} entries, model has {} heads",
            upstream.len(),
            params.heads()
        )));
    }
    Ok(())
}

/// `w_i = sum_k u_k alpha[k][i]`: the head weights contracted with the
/// upstream derivative `u = dL/dQ`.
fn contracted_alpha<T: Real>(params: &DqnnParams<T>, upstream: &[T]) -> Vec<T> {
    let n = params.num_observables();
    (0..n)
        .map(|i| {
            upstream
                .iter()
                .enumerate()
                .map(|(k, &u)| u * params.alpha[k * n + i])
                .sum()
        })
        .collect()
}

fn theta_from<T: Real>(out: &ModelOutput<T>, derivs: &[Vec<T>], params: &DqnnParams<T>, upstream: &[T]) -> Vec<T> {
    let w = contracted_alpha(params, upstream);
    let chain: Vec<T> = (0..w.len())
        .map(|i| {
            let s = out.features[i];
            w[i] * params.a[i] * s * (T::one() - s)
        })
        .collect();
    derivs
        .iter()
        .map(|d| chain.iter().zip(d).map(|(&c, &e)| c * e).sum())
        .collect()
}

/// `sum_k u_k dQ_k/dtheta`. With one head and `u = [1]` this is
/// `dQ/dtheta_j = 1/2 sum_i alpha_i a_i s_i (1 - s_i) (<B_i>_j^+ - <B_i>_j^-)`
/// on uncontrolled slots.
pub fn grad_theta<T: Real>(x: &Statevector<T>, params: &DqnnParams<T>, upstream: &[T]) -> Result<Vec<T>> {
    check_upstream(params, upstream)?;
    let traj = trajectory(x, params)?;
    let out = final_output(&traj, params);
    let derivs = expectation_derivatives_from(&traj, params);
    Ok(theta_from(&out, &derivs, params, upstream))
}

/// Closed-form `(da, dc, dalpha)` of `sum_k u_k Q_k`:
/// `dQ/da_j = alpha_j s_j (1 - s_j)(<B_j> - c_j)`,
/// `dQ/dc_j = -alpha_j s_j (1 - s_j) a_j`, `dQ/dalpha_j = s_j`.
pub fn grad_classical<T: Real>(
    x: &Statevector<T>,
    params: &DqnnParams<T>,
    upstream: &[T],
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    check_upstream(params, upstream)?;
    let out = params.forward(x)?;
    Ok(classical_from(&out, params, upstream))
}

fn classical_from<T: Real>(out: &ModelOutput<T>, params: &DqnnParams<T>, upstream: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
    let w = contracted_alpha(params, upstream);
    let n = w.len();
    let mut da = Vec::with_capacity(n);
    let mut dc = Vec::with_capacity(n);
    for (i, &wi) in w.iter().enumerate() {
        let s = out.features[i];
        let ds = wi * s * (T::one() - s);
        da.push(ds * (out.expectations[i] - params.c[i]));
        dc.push(-ds * params.a[i]);
    }
    let dalpha = upstream
        .iter()
        .flat_map(|&u| out.features.iter().map(move |&s| u * s))
        .collect();
    (da, dc, dalpha)
}

fn final_output<T: Real>(traj: &Trajectory<T>, params: &DqnnParams<T>) -> ModelOutput<T> {
    let last = traj.states.last().expect("trajectory holds the final state");
    head_outputs(params.observables().expectations_raw(last), params)
}

/// Forward output and the full gradient of `sum_k u_k Q_k` for one input.
pub fn sample_gradient<T: Real>(
    x: &Statevector<T>,
    params: &DqnnParams<T>,
    upstream: &[T],
) -> Result<(ModelOutput<T>, GradientRecord<T>)> {
    check_upstream(params, upstream)?;
    let traj = trajectory(x, params)?;
    let out = final_output(&traj, params);
    let derivs = expectation_derivatives_from(&traj, params);
    let theta = theta_from(&out, &derivs, params, upstream);
    let (a, c, alpha) = classical_from(&out, params, upstream);
    Ok((out, GradientRecord { theta, a, c, alpha }))
}

/// Squared error `||Q - y||^2` of one sample and its gradient.
fn squared_error_gradient<T: Real>(sample: &LabeledState<T>, params: &DqnnParams<T>) -> Result<(T, GradientRecord<T>)> {
    if sample.target.len() != params.heads() {
        return Err(DqnnError::invalid(format!(
            "target has {} entries, model has {} heads",
            sample.target.len(),
            params.heads()
        )));
    }
    let traj = trajectory(&sample.state, params)?;
    let out = final_output(&traj, params);
    let residual: Vec<T> = out
        .outputs
        .iter()
        .zip(&sample.target)
        .map(|(&q, &y)| q - y)
        .collect();
    let loss = residual.iter().map(|&r| r * r).sum();
    let upstream: Vec<T> = residual.iter().map(|&r| r + r).collect();
    // Skip the shifted runs when the sample is fit exactly.
    let theta = if upstream.iter().all(|u| *u == T::zero()) {
        vec![T::zero(); params.theta.len()]
    } else {
        let derivs = expectation_derivatives_from(&traj, params);
        theta_from(&out, &derivs, params, &upstream)
    };
    let (a, c, alpha) = classical_from(&out, params, &upstream);
    Ok((loss, GradientRecord { theta, a, c, alpha }))
}

/// Sum-of-squared-errors loss over `batch` and its gradient.
///
/// Per-sample terms are evaluated in parallel and summed in batch order, so
/// the result does not depend on the thread count.
pub fn loss_gradient<T: Real>(batch: &[LabeledState<T>], params: &DqnnParams<T>) -> Result<(T, GradientRecord<T>)> {
    if batch.is_empty() {
        return Err(DqnnError::invalid("empty batch"));
    }
    let parts = batch
        .par_iter()
        .map(|s| squared_error_gradient(s, params))
        .collect::<Result<Vec<_>>>()?;
    let mut total = GradientRecord::zeros_like(params);
    let mut loss = T::zero();
    for (l, g) in &parts {
        loss = loss + *l;
        total.add_assign(g);
    }
    Ok((loss, total))
}

/// `(f(p + h) - f(p - h)) / 2h`.
pub fn central_difference<T: Real>(f: impl Fn(T) -> T, p: T, h: T) -> T {
    (f(p + h) - f(p - h)) / (h + h)
}

/// Central differences of `objective` with respect to every scalar
/// parameter. `h` must lie in `[1e-7, 1e-3]`.
pub fn fd_gradient_oracle<T: Real>(
    objective: impl Fn(&DqnnParams<T>) -> Result<T>,
    params: &DqnnParams<T>,
    h: T,
) -> Result<GradientRecord<T>> {
    if !(h >= T::lit(1e-7) && h <= T::lit(1e-3)) {
        return Err(DqnnError::invalid(format!("step {h} outside [1e-7, 1e-3]")));
    }
    let base = params.to_flat();
    let mut probe = params.clone();
    let mut grad = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut shifted = base.clone();
        shifted[i] = base[i] + h;
        probe.set_flat(&shifted)?;
        let up = objective(&probe)?;
        shifted[i] = base[i] - h;
        probe.set_flat(&shifted)?;
        let down = objective(&probe)?;
        grad.push((up - down) / (h + h));
    }
    GradientRecord::from_flat(params, &grad)
}

/// Sum-of-squared-errors objective, usable with [`fd_gradient_oracle`].
pub fn sse_objective<T: Real>(batch: &[LabeledState<T>], params: &DqnnParams<T>) -> Result<T> {
    batch.iter().try_fold(T::zero(), |acc, s| {
        let out = params.forward(&s.state)?;
        Ok(acc
            + out
                .outputs
                .iter()
                .zip(&s.target)
                .map(|(&q, &y)| (q - y) * (q - y))
                .sum::<T>())
    })
}

/// One compared component of a gradient check.
#[derive(Clone, Debug, Serialize)]
pub struct GradCheckEntry {
    pub group: &'static str,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
    pub pass: bool,
}

/// Component-wise comparison of an analytic gradient against a reference.
#[derive(Clone, Debug, Serialize)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_rel_err: f64,
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub passed: bool,
}

/// Compares `analytic` with `numeric`. The relative error of each component
/// is `|a - f| / max(|a|, |f|, abs_floor / rel_tol)`, so components below the
/// floor are held to the absolute tolerance `abs_floor` instead.
pub fn compare_gradients<T: Real>(
    analytic: &GradientRecord<T>,
    numeric: &GradientRecord<T>,
    rel_tol: f64,
    abs_floor: f64,
) -> GradCheckReport {
    let mut entries = Vec::new();
    for (group, a, f) in [
        ("theta", &analytic.theta, &numeric.theta),
        ("a", &analytic.a, &numeric.a),
        ("c", &analytic.c, &numeric.c),
        ("alpha", &analytic.alpha, &numeric.alpha),
    ] {
        for (index, (&x, &y)) in a.iter().zip(f).enumerate() {
            let (x, y) = (x.as_f64(), y.as_f64());
            let scale = x.abs().max(y.abs()).max(abs_floor / rel_tol);
            let rel_err = (x - y).abs() / scale;
            entries.push(GradCheckEntry {
                group,
                index,
                analytic: x,
                numeric: y,
                rel_err,
                pass: rel_err <= rel_tol,
            });
        }
    }
    let max_rel_err = entries.iter().map(|e| e.rel_err).fold(0.0, f64::max);
    GradCheckReport {
        passed: entries.iter().all(|e| e.pass),
        entries,
        max_rel_err,
        rel_tol,
        abs_floor,
    }
}

/// Seeded random model (`n` qubits, one layer, up to four observables) and a
/// two-sample batch of encoded inputs, for gradient checks.
pub fn random_instance(
    num_qubits: usize,
    heads: usize,
    seed: u64,
) -> Result<(DqnnParams<f64>, Vec<LabeledState<f64>>)> {
    let ansatz = crate::statevec::build_ansatz(num_qubits, 1)?;
    let n_obs = 4.min((1usize << (2 * num_qubits)) - 1);
    let obs = crate::observables::sample_pauli_set(num_qubits, n_obs, seed)?;
    let mut p = DqnnParams::init(ansatz, obs, heads, seed)?;
    let mut rng = crate::rng::stream(seed, crate::rng::Stream::Test);
    p.a.iter_mut().for_each(|a| *a = rng.random_range(2.5..6.0));
    p.c.iter_mut().for_each(|c| *c = rng.random_range(0.1..0.9));
    p.alpha.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
    let d = (1usize << num_qubits) - 1;
    let batch = (0..2)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..1.5)).collect();
            let state = crate::encode::amplitude_encode(&x, num_qubits)?.into_state();
            let target = (0..heads).map(|_| rng.random_range(-1.0..1.0)).collect();
            Ok(LabeledState { state, target })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((p, batch))
}

/// Analytic gradient of [`random_instance`] against central differences.
pub fn grad_check(
    num_qubits: usize,
    heads: usize,
    seed: u64,
    h: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<GradCheckReport> {
    let (p, batch) = random_instance(num_qubits, heads, seed)?;
    let (_, analytic) = loss_gradient(&batch, &p)?;
    let numeric = fd_gradient_oracle(|q| sse_objective(&batch, q), &p, h)?;
    Ok(compare_gradients(&analytic, &numeric, rel_tol, abs_floor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{sample_pauli_set, ObservableSet};
    use crate::statevec::{build_ansatz, CircuitAnsatz, GateKind};

    fn instance(n: usize, heads: usize, seed: u64) -> (DqnnParams<f64>, Vec<LabeledState<f64>>) {
        crate::grad::random_instance(n, heads, seed).unwrap()
    }

    #[test]
    fn ry_shift_closed_form() {
        let ansatz = CircuitAnsatz::from_templates(1, 1, vec![(GateKind::RY, 0, None)]).unwrap();
        let obs = ObservableSet::from_words(&["Z"]).unwrap();
        let p = DqnnParams::<f64>::new(ansatz, obs, 1, vec![0.0], vec![4.0], vec![0.5], vec![1.0]).unwrap();
        let (plus, minus) = shifted_expectations(&Statevector::zero(1).unwrap(), &p, 0).unwrap();
        assert!(plus[0].abs() < 1e-15 && minus[0].abs() < 1e-15);
        assert!(shifted_expectations(&Statevector::zero(1).unwrap(), &p, 1).is_err());
    }

    #[test]
    fn untouched_observable_has_equal_shifts() {
        // Qubit 1 is never rotated by slot 0's gate; an I Z observable on it
        // cannot see the shift because the qubits are never entangled.
        let ansatz = CircuitAnsatz::from_templates(2, 1, vec![(GateKind::G, 0, None), (GateKind::G, 1, None)]).unwrap();
        let obs = ObservableSet::from_words(&["IZ", "IX"]).unwrap();
        let p = DqnnParams::<f64>::init(ansatz, obs, 1, 3).unwrap();
        let x = Statevector::from_real(&[0.5, 0.5, 0.5, 0.5]).unwrap();
        for j in 0..3 {
            let (plus, minus) = shifted_expectations(&x, &p, j).unwrap();
            for (u, v) in plus.iter().zip(&minus) {
                assert!((u - v).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_alpha_zero_theta_gradient() {
        let (mut p, batch) = instance(2, 1, 4);
        p.alpha.iter_mut().for_each(|w| *w = 0.0);
        let g = grad_theta(&batch[0].state, &p, &[1.0]).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_sigmoid_kills_theta_gradient() {
        let (mut p, batch) = instance(2, 1, 5);
        p.a.iter_mut().for_each(|a| *a = 50.0);
        p.c.iter_mut().for_each(|c| *c = 0.0);
        // Features are only saturated when every expectation sits well above 0;
        // push the expectation through with a large sharpness and check the bound.
        let out = p.forward(&batch[0].state).unwrap();
        let saturated = out.expectations.iter().all(|&e| 50.0 * e > 40.0);
        let g = grad_theta(&batch[0].state, &p, &[1.0]).unwrap();
        if saturated {
            assert!(g.iter().all(|v| v.abs() < 1e-6));
        }
        let ansatz = build_ansatz(1, 1).unwrap();
        let obs = ObservableSet::from_words(&["Z"]).unwrap();
        let q = DqnnParams::<f64>::new(ansatz, obs, 1, vec![0.0, 0.3, 0.0], vec![50.0], vec![0.0], vec![1.0]).unwrap();
        let g = grad_theta(&Statevector::zero(1).unwrap(), &q, &[1.0]).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-6), "{g:?}");
    }

    #[test]
    fn classical_closed_forms() {
        let (mut p, batch) = instance(2, 1, 6);
        let out = p.forward(&batch[0].state).unwrap();
        p.c[0] = out.expectations[0].clamp(0.0, 1.0);
        p.alpha[1] = 0.0;
        let out = p.forward(&batch[0].state).unwrap();
        let (da, dc, dalpha) = grad_classical(&batch[0].state, &p, &[1.0]).unwrap();
        if p.c[0] == out.expectations[0] {
            assert_eq!(da[0], 0.0);
        }
        assert_eq!((da[1], dc[1]), (0.0, 0.0));
        assert!(dalpha[1] > 0.0);
        assert_eq!(dalpha, out.features);
    }

    #[test]
    fn shift_identity_matches_finite_differences() {
        // Before any sigmoid chain: d<B>/dtheta_j against central differences.
        for n in 1..=3 {
            let (p, batch) = instance(n, 1, 10 + n as u64);
            let x = &batch[0].state;
            let derivs = expectation_derivatives(x, &p).unwrap();
            for (j, dj) in derivs.iter().enumerate() {
                let fd: Vec<f64> = {
                    let mut up = p.clone();
                    up.theta[j] += 1e-5;
                    let mut dn = p.clone();
                    dn.theta[j] -= 1e-5;
                    let eu = up.forward(x).unwrap().expectations;
                    let ed = dn.forward(x).unwrap().expectations;
                    eu.iter().zip(&ed).map(|(u, d)| (u - d) / 2e-5).collect()
                };
                for (a, f) in dj.iter().zip(&fd) {
                    assert!((a - f).abs() < 1e-9, "n={n} j={j}: {a} vs {f}");
                }
            }
        }
    }

    #[test]
    fn controlled_slots_need_four_terms() {
        // The plain two-term rule is visibly wrong on a controlled rotation.
        let (p, batch) = instance(2, 1, 3);
        let x = &batch[0].state;
        let slot = p.ansatz().templates()[2].slot + 1;
        assert!(p.ansatz().slot_is_controlled(slot));
        let (plus, minus) = shifted_expectations(x, &p, slot).unwrap();
        let derivs = expectation_derivatives(x, &p).unwrap();
        let two_term: Vec<f64> = plus.iter().zip(&minus).map(|(u, v)| 0.5 * (u - v)).collect();
        let worst = two_term
            .iter()
            .zip(&derivs[slot])
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        assert!(worst > 1e-6);
    }

    #[test]
    fn fd_oracle_basics() {
        assert!((central_difference(|p: f64| p * p, 3.0, 1e-5) - 6.0).abs() < 1e-9);
        assert_eq!(central_difference(|_p: f64| 0.0, 3.0, 1e-5), 0.0);
        let (p, _) = instance(1, 1, 1);
        let g = fd_gradient_oracle(|_| Ok(0.0), &p, 1e-5).unwrap();
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
        assert!(fd_gradient_oracle(|_| Ok(0.0), &p, 1e-2).is_err());
    }

    #[test]
    fn exact_fit_has_zero_gradient() {
        let (p, batch) = instance(2, 2, 8);
        let fitted: Vec<_> = batch
            .iter()
            .map(|s| LabeledState {
                state: s.state.clone(),
                target: p.forward(&s.state).unwrap().outputs,
            })
            .collect();
        let (loss, g) = loss_gradient(&fitted, &p).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
        assert!(loss_gradient(&[], &p).is_err());
    }

    #[test]
    fn single_sample_chain_rule() {
        let (p, batch) = instance(2, 1, 12);
        let s = &batch[0];
        let out = p.forward(&s.state).unwrap();
        let r = out.outputs[0] - s.target[0];
        let (_, g) = loss_gradient(std::slice::from_ref(s), &p).unwrap();
        let (_, dq) = sample_gradient(&s.state, &p, &[1.0]).unwrap();
        for (a, b) in g.to_flat().iter().zip(dq.to_flat()) {
            assert!((a - 2.0 * r * b).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_gradient_matches_fd() {
        for n in 1..=3 {
            for seed in 0..3 {
                let (p, batch) = instance(n, 2, 100 * n as u64 + seed);
                let (_, g) = loss_gradient(&batch, &p).unwrap();
                let fd = fd_gradient_oracle(|q| sse_objective(&batch, q), &p, 1e-5).unwrap();
                let report = compare_gradients(&g, &fd, 1e-6, 1e-9);
                assert!(report.passed, "n={n} seed={seed} max rel {}", report.max_rel_err);
            }
        }
    }

    #[test]
    fn single_head_matches_fd_of_q() {
        for seed in 0..20 {
            let (p, batch) = instance(2, 1, 500 + seed);
            let x = &batch[0].state;
            let (_, g) = sample_gradient(x, &p, &[1.0]).unwrap();
            let fd = fd_gradient_oracle(|q| Ok(q.forward(x)?.outputs[0]), &p, 1e-5).unwrap();
            let report = compare_gradients(&g, &fd, 1e-6, 1e-9);
            assert!(report.passed, "seed={seed} max rel {}", report.max_rel_err);
        }
    }

    #[test]
    fn observables_sample_is_used() {
        let set = sample_pauli_set(2, 4, 1).unwrap();
        assert_eq!(set.len(), 4);
    }
}
