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

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{one_hot, Dataset, Sample};
use crate::rng::{stream, Stream};

/// `f(x) = g(x1) g(x2)` with `g(t) = 0.715625 - 1.0125 t^2 + t^4`.
pub fn regression_target(x1: f64, x2: f64) -> f64 {
    let g = |t: f64| 0.715625 - 1.0125 * t * t + t.powi(4);
    g(x1) * g(x2)
}

/// `m` uniform points of `[-0.8, 0.8]^2` labeled by [`regression_target`].
pub fn gen_regression(m: usize, seed: u64) -> Dataset {
    gen_regression_noisy(m, seed, 0.0)
}

/// [`gen_regression`] with additive Gaussian label noise of standard
/// deviation `sigma` (drawn from a separate stream, so inputs are unchanged).
pub fn gen_regression_noisy(m: usize, seed: u64, sigma: f64) -> Dataset {
    let mut rng = stream(seed, Stream::Data);
    let mut noise_rng = stream(seed, Stream::Noise);
    let noise = Normal::new(0.0, sigma.abs()).expect("finite sigma");
    let samples = (0..m)
        .map(|_| {
            let x1 = rng.random_range(-0.8..=0.8);
            let x2 = rng.random_range(-0.8..=0.8);
            let eps = if sigma > 0.0 { noise.sample(&mut noise_rng) } else { 0.0 };
            Sample::features(vec![x1, x2], vec![regression_target(x1, x2) + eps])
        })
        .collect();
    Dataset::new("regression", samples)
}

/// `[1, 0]` strictly inside the ring `0.16 < r^2 < 0.81`, else `[0, 1]`.
pub fn donut_label(x1: f64, x2: f64) -> Vec<f64> {
    let r2 = x1 * x1 + x2 * x2;
    one_hot(if r2 > 0.16 && r2 < 0.81 { 0 } else { 1 }, 2)
}

/// `m` uniform points of `[-1, 1]^2` labeled by [`donut_label`].
pub fn gen_donut(m: usize, seed: u64) -> Dataset {
    let mut rng = stream(seed, Stream::Data);
    let samples = (0..m)
        .map(|_| {
            let x1 = rng.random_range(-1.0..=1.0);
            let x2 = rng.random_range(-1.0..=1.0);
            Sample::features(vec![x1, x2], donut_label(x1, x2))
        })
        .collect();
    Dataset::new("donut", samples)
}
