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

//! Numerical checks of the sigmoid-bump construction behind the
//! approximation theorem: indicator limits, the chord identity, and a small
//! least-squares fit.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::encode::amplitude_encode;
use crate::error::{DqnnError, Result};
use crate::model::sigmoid;
use crate::rng::{stream, Stream};

const UNIT_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_unit(v: &[f64], what: &str) -> Result<()> {
    let n = dot(v, v).sqrt();
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(DqnnError::invalid(format!("{what} has norm {n}, expected 1")));
    }
    Ok(())
}

/// `sigma(a (|<x|xi>|^2 - c))` for a rank-one projector onto `xi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpFeature {
    pub xi: Vec<f64>,
    pub a: f64,
    pub c: f64,
}

impl BumpFeature {
    pub fn new(xi: Vec<f64>, a: f64, c: f64) -> Result<Self> {
        check_unit(&xi, "xi")?;
        if !(a > 2.0 && a.is_finite()) {
            return Err(DqnnError::invalid(format!("sharpness {a} must exceed 2")));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(DqnnError::invalid(format!("center {c} must lie in (0, 1)")));
        }
        Ok(Self { xi, a, c })
    }
}

pub fn bump_value(x: &[f64], f: &BumpFeature) -> Result<f64> {
    check_unit(x, "input")?;
    if x.len() != f.xi.len() {
        return Err(DqnnError::invalid("input and xi differ in length"));
    }
    Ok(bump_unchecked(x, f))
}

fn bump_unchecked(x: &[f64], f: &BumpFeature) -> f64 {
    let o = dot(x, &f.xi);
    sigmoid(f.a * (o * o - f.c))
}

/// `sqrt(2 (1 - sqrt c))`: the chord radius inside which the bump tends to 1.
pub fn indicator_radius(c: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(DqnnError::invalid(format!("c = {c} outside (0, 1)")));
    }
    Ok((2.0 * (1.0 - c.sqrt())).sqrt())
}

/// `| |x - xi|^2 - (2 - 2 <x|xi>) |` for real unit vectors.
pub fn chord_overlap_identity_check(x: &[f64], xi: &[f64]) -> f64 {
    let chord: f64 = x.iter().zip(xi).map(|(a, b)| (a - b).powi(2)).sum();
    (chord - (2.0 - 2.0 * dot(x, xi))).abs()
}

/// Smallest `c` for which no encoded ring state can overlap `xi` negatively
/// enough to light the bump: `(1 - 2 / (1 + (1 + kappa2)^2))^2`.
pub fn center_threshold(kappa2: f64) -> f64 {
    (1.0 - 2.0 / (1.0 + (1.0 + kappa2).powi(2))).powi(2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    /// Features of the bump center; the center state is their encoding.
    pub xi_features: Vec<f64>,
    pub c: f64,
    pub a_values: Vec<f64>,
    pub sample_count: usize,
    pub kappa1: f64,
    pub kappa2: f64,
    pub seed: u64,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self {
            xi_features: vec![1.0, 0.6],
            c: 0.99,
            a_values: vec![3.0, 10.0, 100.0, 1e3, 1e4],
            sample_count: 4000,
            kappa1: 0.5,
            kappa2: 2.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub a: f64,
    /// `max |bump - 1|` over samples within `0.5 delta1` of the center.
    pub inside_dev: f64,
    /// `max bump` over samples at least `1.5 delta1` away.
    pub outside_dev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub delta1: f64,
    pub threshold: f64,
    pub inside_count: usize,
    pub outside_count: usize,
    pub rows: Vec<ConvergenceRow>,
    pub monotone: bool,
    /// Samples in the region `|x - xi|^2 > 2 (1 + sqrt c)`; should be zero.
    pub far_branch_count: usize,
    pub pass: bool,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,inside_dev,outside_dev\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.a, r.inside_dev, r.outside_dev));
        }
        out
    }
}

fn random_direction(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = dot(&v, &v).sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn encoded(x: &[f64], n: usize) -> Result<Vec<f64>> {
    Ok(amplitude_encode(x, n)?
        .into_state()
        .amplitudes()
        .iter()
        .map(|a| a.re)
        .collect())
}

/// Encoded states of random features with norm in `[kappa1, kappa2]`. The
/// first half is spread over the whole ring, the second half clusters
/// around `center` so the neighbourhood of a bump is populated.
pub fn sample_ring_states(
    center: &[f64],
    kappa1: f64,
    kappa2: f64,
    count: usize,
    spread: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let d = center.len();
    let n = crate::complexity::ceil_log2(d as u64 + 1) as usize;
    let mut rng = stream(seed, Stream::Test);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count + 1000 {
            return Err(DqnnError::invalid("could not draw ring samples near the center"));
        }
        let x: Vec<f64> = if out.len() < count / 2 {
            let r = rng.random_range(kappa1..=kappa2);
            random_direction(&mut rng, d).into_iter().map(|v| v * r).collect()
        } else {
            let rad = spread * rng.random::<f64>();
            center
                .iter()
                .zip(random_direction(&mut rng, d))
                .map(|(c, u)| c + rad * u)
                .collect()
        };
        let r = dot(&x, &x).sqrt();
        if r >= kappa1 && r <= kappa2 {
            out.push(encoded(&x, n)?);
        }
    }
    Ok(out)
}

/// Evaluates the bump at growing sharpness over sampled ring states and
/// checks that it approaches the indicator of the chord ball of radius
/// [`indicator_radius`].
pub fn check_indicator_convergence(spec: &ConvergenceSpec) -> Result<ConvergenceReport> {
    let threshold = center_threshold(spec.kappa2);
    if !(spec.c > threshold) {
        return Err(DqnnError::Precondition(format!(
            "c = {} must exceed (1 - 2 / (1 + (1 + kappa2)^2))^2 = {threshold:.6} for kappa2 = {}",
            spec.c, spec.kappa2
        )));
    }
    if spec.a_values.is_empty() || spec.a_values.iter().any(|&a| !(a > 2.0)) {
        return Err(DqnnError::invalid("sharpness values must all exceed 2"));
    }
    let r = dot(&spec.xi_features, &spec.xi_features).sqrt();
    if !(r >= spec.kappa1 && r <= spec.kappa2) {
        return Err(DqnnError::invalid("bump center features lie outside the ring"));
    }
    let delta1 = indicator_radius(spec.c)?;
    let n = crate::complexity::ceil_log2(spec.xi_features.len() as u64 + 1) as usize;
    let xi = encoded(&spec.xi_features, n)?;
    // Feature-space distances map to chord distances shrunk by roughly the
    // feature norm, so this radius reaches a few delta1 around the center.
    let spread = 3.0 * delta1 * (1.0 + r);
    let samples = sample_ring_states(&spec.xi_features, spec.kappa1, spec.kappa2, spec.sample_count, spread, spec.seed)?;
    let chord = |x: &[f64]| (2.0 - 2.0 * dot(x, &xi)).max(0.0).sqrt();
    let inside: Vec<&Vec<f64>> = samples.iter().filter(|x| chord(x) <= 0.5 * delta1).collect();
    let outside: Vec<&Vec<f64>> = samples.iter().filter(|x| chord(x) >= 1.5 * delta1).collect();
    if inside.is_empty() || outside.is_empty() {
        return Err(DqnnError::invalid("sampling left the inner or outer region empty"));
    }
    let far = 2.0 * (1.0 + spec.c.sqrt());
    let far_branch_count = samples.iter().filter(|x| chord(x).powi(2) > far).count();
    let mut rows = Vec::new();
    for &a in &spec.a_values {
        let f = BumpFeature::new(xi.clone(), a, spec.c)?;
        let inside_dev = inside.iter().map(|x| 1.0 - bump_unchecked(x, &f)).fold(0.0, f64::max);
        let outside_dev = outside.iter().map(|x| bump_unchecked(x, &f)).fold(0.0, f64::max);
        rows.push(ConvergenceRow { a, inside_dev, outside_dev });
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].inside_dev <= w[0].inside_dev && w[1].outside_dev <= w[0].outside_dev);
    let last = rows.last().expect("non-empty");
    let pass = monotone && last.inside_dev < 0.01 && last.outside_dev < 0.01 && far_branch_count == 0;
    Ok(ConvergenceReport {
        delta1,
        threshold,
        inside_count: inside.len(),
        outside_count: outside.len(),
        rows,
        monotone,
        far_branch_count,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpFitReport {
    pub features: usize,
    pub a: f64,
    pub c: f64,
    pub centers: Vec<f64>,
    pub alpha: Vec<f64>,
    pub max_error: f64,
    pub rms_error: f64,
}

const BUMP_WIDTH: f64 = 1.5;
const TARGET_WIDTH: f64 = 0.5;
const BUMP_SHARPNESS: f64 = 1.0;

/// Smooth two-bump target on `[0.5, 2.5]`.
pub fn two_bump_target(x: f64) -> f64 {
    (-((x - 1.1) / TARGET_WIDTH).powi(2)).exp() + 0.6 * (-((x - 1.9) / TARGET_WIDTH).powi(2)).exp()
}

/// Fits `two_bump_target` on scalar inputs encoded into one qubit with
/// `features` bump features centered on equally spaced inputs, solving for
/// the output weights by least squares. Errors are measured on a grid four
/// times denser than the fit grid.
pub fn fit_bump_demo(features: usize) -> Result<BumpFitReport> {
    fit_bumps(features, BUMP_WIDTH, BUMP_SHARPNESS)
}

fn fit_bumps(features: usize, width: f64, sharpness: f64) -> Result<BumpFitReport> {
    if features < 2 {
        return Err(DqnnError::invalid("need at least two features"));
    }
    let (lo, hi) = (0.5, 2.5);
    // One-qubit encoding of x is the real vector at angle atan(1 / (1 + x))
    // from the norm-slot axis; centers are spaced evenly in that angle.
    let angle = |x: f64| (1.0 / (1.0 + x)).atan();
    let (t_lo, t_hi) = (angle(hi), angle(lo));
    let centers: Vec<f64> = (0..features)
        .map(|j| {
            let t = t_lo + (t_hi - t_lo) * j as f64 / (features - 1) as f64;
            1.0 / t.tan() - 1.0
        })
        .collect();
    let gap = (t_hi - t_lo) / (features - 1) as f64;
    let c = (width * gap).cos().powi(2);
    let a = sharpness / (1.0 - c);
    let bumps = centers
        .iter()
        .map(|&x0| BumpFeature::new(encoded(&[x0], 1)?, a, c))
        .collect::<Result<Vec<_>>>()?;
    let design = |xs: &[f64]| -> Result<DMatrix<f64>> {
        let states = xs.iter().map(|&x| encoded(&[x], 1)).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(xs.len(), features, |i, j| bump_unchecked(&states[i], &bumps[j])))
    };
    let fit_x: Vec<f64> = (0..200).map(|i| lo + (hi - lo) * i as f64 / 199.0).collect();
    let y = DVector::from_iterator(fit_x.len(), fit_x.iter().map(|&x| two_bump_target(x)));
    let alpha = design(&fit_x)?
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| DqnnError::Solver {
            msg: e.to_string(),
            residual: f64::NAN,
        })?;
    let test_x: Vec<f64> = (0..800).map(|i| lo + (hi - lo) * i as f64 / 799.0).collect();
    let pred = design(&test_x)? * &alpha;
    let errs: Vec<f64> = test_x.iter().zip(pred.iter()).map(|(&x, p)| (p - two_bump_target(x)).abs()).collect();
    Ok(BumpFitReport {
        features,
        a,
        c,
        centers,
        alpha: alpha.iter().copied().collect(),
        max_error: errs.iter().copied().fold(0.0, f64::max),
        rms_error: (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn bump_examples() {
        let xi = vec![0.6, 0.8];
        let f = BumpFeature::new(xi.clone(), 10.0, 0.5).unwrap();
        assert!((bump_value(&xi, &f).unwrap() - 0.993307).abs() < 1e-6);
        assert!((bump_value(&[0.8, -0.6], &f).unwrap() - 0.006693).abs() < 1e-6);
        let x = [0.5f64.sqrt(), 0.5f64.sqrt()];
        let g = BumpFeature::new(vec![1.0, 0.0], 10.0, 0.5).unwrap();
        assert!((bump_value(&x, &g).unwrap() - 0.5).abs() < 1e-12);
        assert!(bump_value(&[1.0, 1.0], &g).is_err());
        assert!(BumpFeature::new(vec![1.0, 0.0], 2.0, 0.5).is_err());
    }

    #[test]
    fn radius_examples() {
        assert!((indicator_radius(0.25).unwrap() - 1.0).abs() < 1e-15);
        assert!((indicator_radius(0.81).unwrap() - 0.447214).abs() < 1e-6);
        assert!(indicator_radius(1.0 - 1e-12).unwrap() < 1e-5);
        assert!(indicator_radius(1.0).is_err());
    }

    #[test]
    fn chord_identity() {
        let xi = [0.6, 0.0, 0.8];
        assert!(chord_overlap_identity_check(&xi, &xi) < 1e-15);
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        assert!(chord_overlap_identity_check(&neg, &xi) < 1e-15);
        let mut rng = stream(3, Stream::Test);
        for _ in 0..1000 {
            let a = random_direction(&mut rng, 5);
            let b = random_direction(&mut rng, 5);
            assert!(chord_overlap_identity_check(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn indicator_limit() {
        let rep = check_indicator_convergence(&ConvergenceSpec::default()).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.rows[0].inside_dev > 0.1 && rep.rows[0].outside_dev > 0.1, "{:?}", rep.rows[0]);
        let low = ConvergenceSpec {
            c: 0.5,
            ..ConvergenceSpec::default()
        };
        assert!(matches!(check_indicator_convergence(&low), Err(DqnnError::Precondition(_))));
    }

    #[test]
    fn eight_bumps_fit_the_target() {
        let rep = fit_bump_demo(8).unwrap();
        assert!(rep.max_error < 0.05, "{rep:?}");
    }

    proptest! {
        #[test]
        fn bump_is_monotone_in_overlap(t1 in 0.0f64..FRAC_PI_2, t2 in 0.0f64..FRAC_PI_2, a in 2.1f64..200.0, c in 0.01f64..0.99) {
            let f = BumpFeature::new(vec![1.0, 0.0], a, c).unwrap();
            let v1 = bump_value(&[t1.cos(), t1.sin()], &f).unwrap();
            let v2 = bump_value(&[t2.cos(), t2.sin()], &f).unwrap();
            // Smaller angle means larger overlap.
            if t1 < t2 { prop_assert!(v1 >= v2); } else { prop_assert!(v2 >= v1); }
        }

        #[test]
        fn no_ring_state_reaches_the_far_branch(seed in 0u64..20, k2 in 0.6f64..4.0) {
            let c = (center_threshold(k2) + 1e-6).min(0.999);
            let states = sample_ring_states(&[0.5, 0.3, -0.1], 0.5, k2, 400, 0.5, seed).unwrap();
            let far = 2.0 * (1.0 + c.sqrt());
            for x in &states {
                for y in states.iter().take(20) {
                    let chord: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
                    prop_assert!(chord <= far);
                }
            }
        }
    }
}
