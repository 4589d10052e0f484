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

//! First-order optimizers with constraint projection.

use serde::{Deserialize, Serialize};

use crate::error::{DqnnError, Result};
use crate::grad::GradientRecord;
use crate::model::DqnnParams;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Optional learning rates per parameter group; unset groups use the base rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupLr {
    pub theta: Option<f64>,
    pub a: Option<f64>,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub group_lr: GroupLr,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            lr: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            group_lr: GroupLr::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn sgd(lr: f64) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            lr,
            ..Self::default()
        }
    }

    pub fn adam(lr: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            lr,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            Some(self.lr),
            self.group_lr.theta,
            self.group_lr.a,
            self.group_lr.c,
            self.group_lr.alpha,
        ];
        if rates.iter().flatten().any(|&r| !(r >= 0.0 && r.is_finite())) || !(self.lr > 0.0) {
            return Err(DqnnError::invalid("learning rates must be finite, base rate positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(DqnnError::invalid("ADAM constants out of range"));
        }
        Ok(())
    }
}

/// Optimizer configuration plus ADAM moments.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T> {
    pub config: OptimizerConfig,
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step_count: u64,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(config: OptimizerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            m: Vec::new(),
            v: Vec::new(),
            step_count: 0,
        })
    }

    /// Per-entry learning rates in [`DqnnParams::to_flat`] order.
    fn rates(&self, p: &DqnnParams<T>) -> Vec<T> {
        let g = self.config.group_lr;
        let base = self.config.lr;
        [
            (p.theta.len(), g.theta),
            (p.a.len(), g.a),
            (p.c.len(), g.c),
            (p.alpha.len(), g.alpha),
        ]
        .into_iter()
        .flat_map(|(len, lr)| std::iter::repeat_n(T::lit(lr.unwrap_or(base)), len))
        .collect()
    }

    /// One update of a raw parameter vector, without projection.
    pub fn update_flat(&mut self, params: &mut [T], grads: &[T], rates: &[T]) -> Result<()> {
        if params.len() != grads.len() || params.len() != rates.len() {
            return Err(DqnnError::invalid(format!(
                "shape mismatch: {} params, {} grads",
                params.len(),
                grads.len()
            )));
        }
        match self.config.kind {
            OptimizerKind::Sgd => {
                for ((p, &g), &lr) in params.iter_mut().zip(grads).zip(rates) {
                    *p = *p - lr * g;
                }
                self.step_count += 1;
            }
            OptimizerKind::Adam => {
                if self.m.is_empty() {
                    self.m = vec![T::zero(); params.len()];
                    self.v = vec![T::zero(); params.len()];
                } else if self.m.len() != params.len() {
                    return Err(DqnnError::invalid("parameter count changed between steps"));
                }
                self.step_count += 1;
                let b1 = T::lit(self.config.beta1);
                let b2 = T::lit(self.config.beta2);
                let eps = T::lit(self.config.eps);
                let t = self.step_count as i32;
                let bc1 = T::one() - b1.powi(t);
                let bc2 = T::one() - b2.powi(t);
                for i in 0..params.len() {
                    let g = grads[i];
                    self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
                    self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
                    let m_hat = self.m[i] / bc1;
                    let v_hat = self.v[i] / bc2;
                    params[i] = params[i] - rates[i] * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
        Ok(())
    }

    /// Updates `params` from `grads`, then projects `a` and `c` into their boxes.
    pub fn step(&mut self, params: &mut DqnnParams<T>, grads: &GradientRecord<T>) -> Result<()> {
        let mut flat = params.to_flat();
        let g = grads.to_flat();
        let rates = self.rates(params);
        self.update_flat(&mut flat, &g, &rates)?;
        params.set_flat(&flat)?;
        params.project();
        Ok(())
    }
}

/// Plain gradient step `p - lr g` followed by projection.
pub fn sgd_step<T: Real>(params: &mut DqnnParams<T>, grads: &GradientRecord<T>, state: &mut OptimizerState<T>) -> Result<()> {
    if state.config.kind != OptimizerKind::Sgd {
        return Err(DqnnError::invalid("optimizer state is not SGD"));
    }
    state.step(params, grads)
}

/// Bias-corrected ADAM step followed by projection.
pub fn adam_step<T: Real>(params: &mut DqnnParams<T>, grads: &GradientRecord<T>, state: &mut OptimizerState<T>) -> Result<()> {
    if state.config.kind != OptimizerKind::Adam {
        return Err(DqnnError::invalid("optimizer state is not ADAM"));
    }
    state.step(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::sample_pauli_set;
    use crate::statevec::build_ansatz;

    fn params() -> DqnnParams<f64> {
        DqnnParams::init(build_ansatz(1, 1).unwrap(), sample_pauli_set(1, 2, 1).unwrap(), 1, 1).unwrap()
    }

    #[test]
    fn sgd_arithmetic() {
        let mut s = OptimizerState::<f64>::new(OptimizerConfig::sgd(0.1)).unwrap();
        let mut p = [1.0];
        s.update_flat(&mut p, &[2.0], &[0.1]).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
        assert!(s.update_flat(&mut p, &[1.0, 2.0], &[0.1]).is_err());
    }

    #[test]
    fn zero_gradient_is_stationary() {
        for cfg in [OptimizerConfig::sgd(0.1), OptimizerConfig::adam(0.1)] {
            let mut p = params();
            let before = p.clone();
            let mut s = OptimizerState::new(cfg).unwrap();
            let g = GradientRecord::zeros_like(&p);
            for _ in 0..5 {
                s.step(&mut p, &g).unwrap();
            }
            assert_eq!(p, before);
        }
    }

    #[test]
    fn sgd_projects_centers() {
        let mut p = params();
        p.c[0] = 0.9;
        let mut g = GradientRecord::zeros_like(&p);
        g.c[0] = -3.0;
        let mut s = OptimizerState::new(OptimizerConfig::sgd(0.1)).unwrap();
        sgd_step(&mut p, &g, &mut s).unwrap();
        assert_eq!(p.c[0], 1.0);
        assert!(adam_step(&mut p, &g, &mut s).is_err());
    }

    #[test]
    fn first_adam_step_is_signed_lr() {
        for g in [3.0, -0.02, 1e3] {
            let mut s = OptimizerState::<f64>::new(OptimizerConfig::adam(0.1)).unwrap();
            let mut p = [1.0];
            s.update_flat(&mut p, &[g], &[0.1]).unwrap();
            let step = p[0] - 1.0;
            let want = -0.1 * g / (g.abs() + 1e-8);
            assert!((step - want).abs() < 1e-12);
            assert!((step + 0.1 * g.signum()).abs() < 1e-6);
        }
    }

    #[test]
    fn adam_is_deterministic() {
        let mut s1 = OptimizerState::<f64>::new(OptimizerConfig::adam(0.1)).unwrap();
        let mut s2 = s1.clone();
        let (mut a, mut b) = ([0.5, -1.0], [0.5, -1.0]);
        for i in 0..10 {
            let g = [i as f64 * 0.3 - 1.0, 0.7];
            s1.update_flat(&mut a, &g, &[0.1, 0.1]).unwrap();
            s2.update_flat(&mut b, &g, &[0.1, 0.1]).unwrap();
        }
        assert_eq!(a, b);
        assert_eq!(s1, s2);
        assert!(s1.v.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn adam_converges_on_quadratic() {
        let mut s = OptimizerState::<f64>::new(OptimizerConfig::adam(0.1)).unwrap();
        let mut p = [0.0];
        for _ in 0..500 {
            let g = 2.0 * (p[0] - 3.0);
            s.update_flat(&mut p, &[g], &[0.1]).unwrap();
        }
        assert!((p[0] - 3.0).abs() < 1e-2, "{}", p[0]);
    }

    #[test]
    fn group_rates_freeze_groups() {
        let mut cfg = OptimizerConfig::sgd(0.1);
        cfg.group_lr.theta = Some(0.0);
        let mut s = OptimizerState::new(cfg).unwrap();
        let mut p = params();
        let before = p.theta.clone();
        let mut g = GradientRecord::zeros_like(&p);
        g.theta.iter_mut().for_each(|v| *v = 1.0);
        g.alpha.iter_mut().for_each(|v| *v = 1.0);
        let alpha_before = p.alpha.clone();
        s.step(&mut p, &g).unwrap();
        assert_eq!(p.theta, before);
        assert!((p.alpha[0] - (alpha_before[0] - 0.1)).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerState::<f64>::new(OptimizerConfig::sgd(0.0)).is_err());
        let mut cfg = OptimizerConfig::adam(0.1);
        cfg.beta1 = 1.0;
        assert!(OptimizerState::<f64>::new(cfg).is_err());
    }
}
