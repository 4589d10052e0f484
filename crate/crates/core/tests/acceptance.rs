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

//! Release acceptance checks. Each criterion prints one `PASS`/`FAIL` line.
//! Set `DQNN_ACCEPTANCE=1,4,5` to run a subset.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dqnn::complexity::circuit_cost;
use dqnn::data::{spt_ground_state, string_order, SptHamiltonian};
use dqnn::encode::{amplitude_decode, amplitude_encode, check_slot_bound};
use dqnn::experiment::{run_experiment, RunConfig};
use dqnn::grad::grad_check;
use dqnn::statevec::{apply_controlled, apply_single_qubit, build_ansatz, gate_matrix_g, run_ansatz, Mat2};
use dqnn::universality::{chord_overlap_identity_check, check_indicator_convergence, fit_bump_demo, ConvergenceSpec};
use dqnn::Statevector;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

type Outcome = Result<(bool, String), String>;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");

fn minutes(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Statevector {
    let amps = (0..1 << n)
        .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Statevector::normalized(amps).unwrap()
}

fn random_g(rng: &mut ChaCha8Rng) -> Mat2<f64> {
    let t: [f64; 3] = std::array::from_fn(|_| rng.random_range(-4.0..4.0));
    gate_matrix_g(t[0], t[1], t[2]).unwrap()
}

/// Full `2^n x 2^n` operator of a (controlled) single-qubit gate, built as a
/// sum of Kronecker products. Qubit 0 is the most significant bit.
fn dense_operator(n: usize, target: usize, control: Option<usize>, u: &Mat2<f64>) -> Vec<Vec<C>> {
    let id = [[C::new(1.0, 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new(1.0, 0.0)]];
    let p0 = [[C::new(1.0, 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new(0.0, 0.0)]];
    let p1 = [[C::new(0.0, 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new(1.0, 0.0)]];
    let kron_all = |factors: &[[[C; 2]; 2]]| {
        let mut m = vec![vec![C::new(1.0, 0.0)]];
        for f in factors {
            let k = m.len();
            let mut next = vec![vec![C::new(0.0, 0.0); 2 * k]; 2 * k];
            for (i, row) in m.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    for a in 0..2 {
                        for b in 0..2 {
                            next[2 * i + a][2 * j + b] = v * f[a][b];
                        }
                    }
                }
            }
            m = next;
        }
        m
    };
    let term = |on_control: Option<[[C; 2]; 2]>, on_target: [[C; 2]; 2]| {
        let factors: Vec<_> = (0..n)
            .map(|q| {
                if q == target {
                    on_target
                } else if Some(q) == control {
                    on_control.unwrap()
                } else {
                    id
                }
            })
            .collect();
        kron_all(&factors)
    };
    match control {
        None => term(None, *u),
        Some(_) => {
            let a = term(Some(p0), id);
            let b = term(Some(p1), *u);
            a.iter()
                .zip(&b)
                .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
                .collect()
        }
    }
}

fn matvec(m: &[Vec<C>], v: &[C]) -> Vec<C> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn gradient() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for n in 1..=4 {
        for seed in 0..20 {
            let r = grad_check(n, 2, seed, 1e-5, 1e-6, 1e-9).map_err(|e| e.to_string())?;
            worst = worst.max(r.max_rel_err);
            failures += usize::from(!r.passed);
        }
    }
    Ok((failures == 0, format!("80 instances, max rel err {worst:.2e}, {failures} failing")))
}

fn simulator() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for n in 1..=3 {
        for _ in 0..20 {
            let s = random_state(&mut rng, n);
            for t in 0..n {
                let u = random_g(&mut rng);
                let got = apply_single_qubit(&s, t, &u).map_err(|e| e.to_string())?;
                worst = worst.max(max_diff(got.amplitudes(), &matvec(&dense_operator(n, t, None, &u), s.amplitudes())));
                for c in (0..n).filter(|&c| c != t) {
                    let got = apply_controlled(&s, c, t, &u).map_err(|e| e.to_string())?;
                    let want = matvec(&dense_operator(n, t, Some(c), &u), s.amplitudes());
                    worst = worst.max(max_diff(got.amplitudes(), &want));
                }
            }
        }
        let ansatz = build_ansatz(n, 2).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let theta: Vec<f64> = (0..ansatz.num_params()).map(|_| rng.random_range(0.0..6.3)).collect();
            let s = random_state(&mut rng, n);
            let got = run_ansatz(&s, &ansatz, &theta).map_err(|e| e.to_string())?;
            let mut want = s.amplitudes().to_vec();
            for g in ansatz.templates() {
                want = matvec(&dense_operator(n, g.target, g.control, &g.local_matrix(&theta)), &want);
            }
            worst = worst.max(max_diff(got.amplitudes(), &want));
        }
    }
    let mut norm_dev = 0.0f64;
    for _ in 0..10_000 {
        let n = rng.random_range(1..=5);
        let ansatz = build_ansatz(n, rng.random_range(1..=3)).map_err(|e| e.to_string())?;
        let theta: Vec<f64> = (0..ansatz.num_params()).map(|_| rng.random_range(-10.0..10.0)).collect();
        let s = random_state(&mut rng, n);
        let out = run_ansatz(&s, &ansatz, &theta).map_err(|e| e.to_string())?;
        norm_dev = norm_dev.max((out.norm_sqr() - 1.0).abs());
    }
    Ok((
        worst <= 1e-10 && norm_dev <= 1e-10,
        format!("oracle max diff {worst:.2e}, norm drift {norm_dev:.2e} over 1e4 circuits"),
    ))
}

fn encoding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (k1, k2) = (0.25, 3.0);
    let mut worst = 0.0f64;
    let mut bound_ok = true;
    for _ in 0..1000 {
        let n = rng.random_range(1..=4);
        let d = rng.random_range(1..(1usize << n));
        let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
        let r = rng.random_range(k1..k2);
        let x: Vec<f64> = dir.iter().map(|v| v / len * r).collect();
        let e = amplitude_encode(&x, n).map_err(|e| e.to_string())?;
        bound_ok &= check_slot_bound(&e, k1, k2);
        let back = amplitude_decode(&e).map_err(|e| e.to_string())?;
        worst = worst.max(back.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    Ok((
        worst <= 1e-10 && bound_ok,
        format!("1000 ring samples, round-trip max err {worst:.2e}, slot bound {}", if bound_ok { "holds" } else { "violated" }),
    ))
}

fn run(cfg: serde_json::Value) -> Result<dqnn::experiment::ExperimentReport, String> {
    let cfg = RunConfig::from_json(&cfg.to_string()).map_err(|e| e.to_string())?;
    let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
    if let Some(f) = report.fits.iter().find(|f| f.history.final_loss >= f.history.initial_loss) {
        return Err(format!("{}: training did not lower the loss", f.label));
    }
    Ok(report)
}

fn regression() -> Outcome {
    let r = run(json!({
        "task": {"kind": "regression", "samples": 400, "data_seed": 1},
        "model": {"num_qubits": 2, "layers": 1, "observables": 5, "observable_seed": 1},
        "train": {"epochs": 1000, "seed": 1, "eval_every": 1000, "lr_decay": 0.997,
                  "optimizer": {"kind": "adam", "lr": 0.02}}
    }))?;
    let f = &r.fits[0];
    Ok((
        f.test_metric <= 0.10,
        format!("MRE {:.4} on a fresh sample (train {:.4})", f.test_metric, f.train_metric),
    ))
}

fn donut() -> Outcome {
    let r = run(json!({
        "task": {"kind": "donut", "samples": 800, "data_seed": 1},
        "model": {"num_qubits": 2, "layers": 1, "observables": 10, "observable_seed": 1},
        "train": {"epochs": 1000, "seed": 1, "eval_every": 1000, "lr_decay": 0.998, "restarts": 16,
                  "optimizer": {"kind": "adam", "lr": 0.03}}
    }))?;
    let f = &r.fits[0];
    Ok((
        f.test_metric >= 0.90,
        format!("accuracy {:.4} (train {:.4})", f.test_metric, f.train_metric),
    ))
}

fn wine() -> Outcome {
    let r = run(json!({
        "task": {"kind": "csv-classify", "path": format!("{DATA}/wine.csv"), "fold_seed": 1,
                 "schema": {"has_header": true, "label_column": 13, "classes": ["0", "1", "2"]}},
        "model": {"num_qubits": 4, "layers": 1, "observables": 10, "observable_seed": 1},
        "train": {"epochs": 200, "seed": 1, "eval_every": 200, "optimizer": {"kind": "adam", "lr": 0.03}}
    }))?;
    let errs: Vec<String> = r.fits.iter().map(|f| format!("{:.3}", 1.0 - f.test_metric)).collect();
    Ok((
        r.mean_test_error() <= 0.10,
        format!("mean test error {:.4} over folds [{}]", r.mean_test_error(), errs.join(", ")),
    ))
}

fn mnist() -> Outcome {
    let r = run(json!({
        "task": {"kind": "mnist",
                 "train_images": format!("{DATA}/mnist01-train-images.idx3-ubyte"),
                 "train_labels": format!("{DATA}/mnist01-train-labels.idx1-ubyte"),
                 "test_images": format!("{DATA}/mnist01-test-images.idx3-ubyte"),
                 "test_labels": format!("{DATA}/mnist01-test-labels.idx1-ubyte"),
                 "classes": [0, 1]},
        "model": {"num_qubits": 8, "layers": 1, "observables": 10, "observable_seed": 1},
        "train": {"epochs": 10, "seed": 1, "eval_every": 10, "optimizer": {"kind": "adam", "lr": 0.05}}
    }))?;
    let f = &r.fits[0];
    Ok((
        f.test_metric >= 0.95,
        format!("accuracy {:.4} on {} test images (train {:.4})", f.test_metric, f.test_size, f.train_metric),
    ))
}

fn qpr() -> Outcome {
    let cluster = spt_ground_state(&SptHamiltonian::new(8, 1.0, 0.0, 0.0).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let trivial = spt_ground_state(&SptHamiltonian::new(8, 1.0, 1.6, 0.0).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let s_cluster = string_order(&cluster.state).map_err(|e| e.to_string())?;
    let s_trivial = string_order(&trivial.state).map_err(|e| e.to_string())?;
    let calibrated = (s_cluster - 1.0).abs() < 1e-6 && s_trivial < 0.1;
    let r = run(json!({
        "task": {"kind": "qpr", "num_spins": 8, "train_grid": [10, 10], "test_grid": [20, 20]},
        "model": {"num_qubits": 8, "layers": 1, "observables": 10, "observable_seed": 1},
        "train": {"epochs": 100, "seed": 1, "eval_every": 100, "optimizer": {"kind": "adam", "lr": 0.05}}
    }))?;
    let f = &r.fits[0];
    Ok((
        calibrated && f.test_metric >= 0.90,
        format!(
            "accuracy {:.4} on {} grid points; S(cluster) = {s_cluster:.6}, S(h1=1.6) = {s_trivial:.4}",
            f.test_metric, f.test_size
        ),
    ))
}

fn complexity() -> Outcome {
    let a = circuit_cost(24, 5).map_err(|e| e.to_string())?;
    let b = circuit_cost(24, 10).map_err(|e| e.to_string())?;
    Ok((a == 120 && b == 240, format!("c(24, 5) = {a}, c(24, 10) = {b}")))
}

fn universality() -> Outcome {
    let report = check_indicator_convergence(&ConvergenceSpec::default()).map_err(|e| e.to_string())?;
    let last = report.rows.last().ok_or("no rows")?;
    let converged = last.a >= 1e4 && last.inside_dev < 0.01 && last.outside_dev < 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut chord = 0.0f64;
    for _ in 0..1000 {
        let d = rng.random_range(2..=8);
        let unit = |rng: &mut ChaCha8Rng| {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect::<Vec<_>>()
        };
        let (x, xi) = (unit(&mut rng), unit(&mut rng));
        chord = chord.max(chord_overlap_identity_check(&x, &xi));
    }
    let fit = fit_bump_demo(8).map_err(|e| e.to_string())?;
    Ok((
        converged && chord < 1e-12 && fit.max_error < 0.05,
        format!(
            "a = {:.0e}: inside {:.2e}, outside {:.2e}; chord residual {chord:.1e}; 8-feature fit max err {:.4}",
            last.a, last.inside_dev, last.outside_dev, fit.max_error
        ),
    ))
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "gradient correctness", minutes(1), gradient),
        (2, "simulator correctness", minutes(1), simulator),
        (3, "encoding round trip", minutes(1), encoding),
        (4, "regression", minutes(10), regression),
        (5, "donut classification", minutes(10), donut),
        (6, "wine 5-fold", minutes(10), wine),
        (7, "mnist 0 vs 1", minutes(30), mnist),
        (8, "phase recognition", minutes(30), qpr),
        (9, "complexity table", minutes(1), complexity),
        (10, "universality", minutes(1), universality),
    ];
    let only: Option<Vec<u32>> = std::env::var("DQNN_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((_, detail)) if took > budget => (false, format!("{detail}; over budget")),
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} criterion {id:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
