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

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::{one_hot, Dataset, GridPoint, Sample, SampleInput};
use crate::error::{DqnnError, Result};
use crate::observables::{expectation, Pauli, PauliString};
use crate::statevec::Statevector;

/// Largest chain for which a dense matrix may be built.
pub const DENSE_LIMIT: usize = 14;
/// Largest chain solved by dense diagonalization; longer chains use Lanczos.
pub const DENSE_SOLVER_LIMIT: usize = 10;
/// Longest chain the matrix-free path accepts.
const MAX_SPINS: usize = 24;
const RESIDUAL_TOL: f64 = 1e-8;

/// `H = -J sum Z_i X_{i+1} Z_{i+2} - h1 sum X_i - h2 sum X_i X_{i+1}` on an
/// open chain. Real symmetric in the computational basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SptHamiltonian {
    pub num_spins: usize,
    pub j: f64,
    pub h1: f64,
    pub h2: f64,
}

impl SptHamiltonian {
    pub fn new(num_spins: usize, j: f64, h1: f64, h2: f64) -> Result<Self> {
        if !(1..=MAX_SPINS).contains(&num_spins) {
            return Err(DqnnError::invalid(format!("chain length {num_spins} outside 1..={MAX_SPINS}")));
        }
        if ![j, h1, h2].iter().all(|v| v.is_finite()) {
            return Err(DqnnError::invalid("couplings must be finite"));
        }
        Ok(Self { num_spins, j, h1, h2 })
    }

    pub fn dim(&self) -> usize {
        1 << self.num_spins
    }

    fn bit(&self, q: usize) -> usize {
        self.num_spins - 1 - q
    }

    /// Calls `emit(col, value)` for every nonzero `H[col][row]`. Each term
    /// maps a basis state to exactly one basis state.
    fn row_entries(&self, row: usize, mut emit: impl FnMut(usize, f64)) {
        let n = self.num_spins;
        let z = |q: usize| if (row >> self.bit(q)) & 1 == 0 { 1.0 } else { -1.0 };
        if self.j != 0.0 {
            for i in 0..n.saturating_sub(2) {
                emit(row ^ (1 << self.bit(i + 1)), -self.j * z(i) * z(i + 2));
            }
        }
        if self.h1 != 0.0 {
            for i in 0..n {
                emit(row ^ (1 << self.bit(i)), -self.h1);
            }
        }
        if self.h2 != 0.0 {
            for i in 0..n.saturating_sub(1) {
                emit(row ^ (1 << self.bit(i)) ^ (1 << self.bit(i + 1)), -self.h2);
            }
        }
    }

    /// `out = H v` without forming the matrix.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(row, o)| {
            let mut acc = 0.0;
            self.row_entries(row, |col, val| acc += val * v[col]);
            *o = acc;
        });
    }

    pub fn dense(&self) -> Result<DMatrix<f64>> {
        if self.num_spins > DENSE_LIMIT {
            return Err(DqnnError::invalid(format!(
                "dense matrix limited to {DENSE_LIMIT} spins, got {}",
                self.num_spins
            )));
        }
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for row in 0..d {
            self.row_entries(row, |col, val| m[(row, col)] += val);
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundState {
    pub energy: f64,
    pub state: Statevector<f64>,
    pub residual: f64,
}

fn residual(h: &SptHamiltonian, v: &[f64], e: f64) -> f64 {
    let mut hv = vec![0.0; v.len()];
    h.apply(v, &mut hv);
    hv.iter().zip(v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt()
}

fn dense_ground(h: &SptHamiltonian) -> Result<(f64, Vec<f64>)> {
    let eig = SymmetricEigen::new(h.dense()?);
    // Lowest eigenvalue; ties resolved by column order for determinism.
    let mut k = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[k] {
            k = i;
        }
    }
    Ok((eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Restarted Lanczos with full reorthogonalization.
fn lanczos_ground(h: &SptHamiltonian) -> Result<(f64, Vec<f64>)> {
    let d = h.dim();
    let krylov = d.min(96);
    let max_restarts = 200;
    // Fixed, non-symmetric start vector so no symmetry sector is missed.
    let mut start: Vec<f64> = (0..d).map(|i| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract()).collect();
    normalize(&mut start);
    let mut best = (f64::INFINITY, start.clone(), f64::INFINITY);
    for _ in 0..max_restarts {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut w = vec![0.0; d];
        for k in 0..krylov {
            h.apply(&basis[k], &mut w);
            let a = dot(&w, &basis[k]);
            alpha.push(a);
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let nb = normalize(&mut w);
            if k + 1 == krylov || nb < 1e-12 {
                break;
            }
            beta.push(nb);
            basis.push(w.clone());
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let k = (0..m).fold(0, |k, i| if eig.eigenvalues[i] < eig.eigenvalues[k] { i } else { k });
        let coeffs = eig.eigenvectors.column(k);
        let mut v = vec![0.0; d];
        for (c, b) in coeffs.iter().zip(&basis) {
            v.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
        }
        normalize(&mut v);
        let e = eig.eigenvalues[k];
        let r = residual(h, &v, e);
        if r < best.2 {
            best = (e, v.clone(), r);
        }
        if r < RESIDUAL_TOL {
            return Ok((e, v));
        }
        start = v;
    }
    Err(DqnnError::Solver {
        msg: format!("Lanczos did not converge for {} spins", h.num_spins),
        residual: best.2,
    })
}

/// Lowest eigenpair. The global sign is fixed so the largest-magnitude
/// amplitude (first one on ties) is positive.
pub fn spt_ground_state(h: &SptHamiltonian) -> Result<GroundState> {
    let (energy, mut v) = if h.num_spins <= DENSE_SOLVER_LIMIT {
        dense_ground(h)?
    } else {
        lanczos_ground(h)?
    };
    normalize(&mut v);
    let mut k = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[k].abs() + 1e-12 {
            k = i;
        }
    }
    if v[k] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let res = residual(h, &v, energy);
    if res >= RESIDUAL_TOL {
        return Err(DqnnError::Solver {
            msg: format!("ground state residual too large for {h:?}"),
            residual: res,
        });
    }
    Ok(GroundState {
        energy,
        state: Statevector::from_real(&v)?,
        residual: res,
    })
}

/// `Z Y X ... X Y Z` over `num_spins >= 4` sites.
pub fn string_order_word(num_spins: usize) -> Result<PauliString> {
    if num_spins < 4 {
        return Err(DqnnError::invalid("string order needs at least 4 spins"));
    }
    let mut w = vec![Pauli::X; num_spins];
    w[0] = Pauli::Z;
    w[1] = Pauli::Y;
    w[num_spins - 2] = Pauli::Y;
    w[num_spins - 1] = Pauli::Z;
    PauliString::new(w)
}

pub fn string_order(state: &Statevector<f64>) -> Result<f64> {
    Ok(expectation(state, &string_order_word(state.num_qubits())?)?.abs())
}

/// `[1, 0]` when the string order exceeds 0.5, else `[0, 1]`.
pub fn string_order_label(state: &Statevector<f64>, num_spins: usize) -> Result<Vec<f64>> {
    if state.num_qubits() != num_spins {
        return Err(DqnnError::invalid(format!(
            "state has {} qubits, chain {num_spins}",
            state.num_qubits()
        )));
    }
    Ok(if string_order(state)? > 0.5 { one_hot(0, 2) } else { one_hot(1, 2) })
}

/// `k` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    match k {
        0 => vec![],
        1 => vec![lo],
        _ => (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect(),
    }
}

/// Phase-diagram sampling region.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SptGrid {
    pub num_spins: usize,
    pub j: f64,
    pub h1: (f64, f64),
    pub h2: (f64, f64),
}

impl SptGrid {
    /// `h1 in [0, 1.6]`, `h2 in [-1.6, 1.6]`, `J = 1`.
    pub fn standard(num_spins: usize) -> Result<Self> {
        let g = Self {
            num_spins,
            j: 1.0,
            h1: (0.0, 1.6),
            h2: (-1.6, 1.6),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_spins < 4 || !self.num_spins.is_multiple_of(2) || self.num_spins > MAX_SPINS {
            return Err(DqnnError::invalid(format!("chain length {} must be even and >= 4", self.num_spins)));
        }
        if !(self.j > 0.0 && self.j.is_finite()) {
            return Err(DqnnError::invalid("J must be positive"));
        }
        Ok(())
    }

    /// Ground states on a `counts.0 x counts.1` grid, `h1` major.
    pub fn sample(&self, counts: (usize, usize)) -> Result<Dataset> {
        self.validate()?;
        if counts.0 == 0 || counts.1 == 0 {
            return Err(DqnnError::invalid("grid counts must be positive"));
        }
        let points: Vec<GridPoint> = linspace(self.h1.0, self.h1.1, counts.0)
            .into_iter()
            .flat_map(|h1| linspace(self.h2.0, self.h2.1, counts.1).into_iter().map(move |h2| GridPoint { h1, h2 }))
            .collect();
        let samples = points
            .par_iter()
            .map(|p| {
                let gs = spt_ground_state(&SptHamiltonian::new(self.num_spins, self.j, p.h1, p.h2)?)?;
                let y = string_order_label(&gs.state, self.num_spins)?;
                Ok(Sample {
                    input: SampleInput::State(gs.state),
                    y,
                    meta: Some(*p),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset::new(format!("spt{}_{}x{}", self.num_spins, counts.0, counts.1), samples))
    }
}

pub fn gen_spt_grid(grid: &SptGrid, train_counts: (usize, usize), test_counts: (usize, usize)) -> Result<(Dataset, Dataset)> {
    Ok((grid.sample(train_counts)?, grid.sample(test_counts)?))
}

#[derive(Serialize)]
struct BundleMeta<'a> {
    num_qubits: usize,
    count: usize,
    layout: &'a str,
    labels: Vec<usize>,
    h1: Vec<f64>,
    h2: Vec<f64>,
}

/// Writes amplitudes as little-endian `f64` pairs `(re, im)`, one state after
/// another, to `path`, plus labels and grid coordinates to `path.json`.
pub fn write_state_bundle(path: &Path, data: &Dataset) -> Result<()> {
    let mut bytes = Vec::new();
    let mut n = None;
    for s in &data.samples {
        let SampleInput::State(st) = &s.input else {
            return Err(DqnnError::invalid("state bundles hold quantum states only"));
        };
        if *n.get_or_insert(st.num_qubits()) != st.num_qubits() {
            return Err(DqnnError::invalid("states differ in size"));
        }
        for a in st.amplitudes() {
            bytes.extend_from_slice(&a.re.to_le_bytes());
            bytes.extend_from_slice(&a.im.to_le_bytes());
        }
    }
    std::fs::write(path, bytes).map_err(|e| DqnnError::io(path, e))?;
    let meta = BundleMeta {
        num_qubits: n.unwrap_or(0),
        count: data.len(),
        layout: "f64le re,im interleaved; states consecutive",
        labels: data.samples.iter().map(Sample::class).collect(),
        h1: data.samples.iter().map(|s| s.meta.map_or(f64::NAN, |m| m.h1)).collect(),
        h2: data.samples.iter().map(|s| s.meta.map_or(f64::NAN, |m| m.h2)).collect(),
    };
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    let side = Path::new(&side);
    std::fs::write(side, serde_json::to_vec_pretty(&meta)?).map_err(|e| DqnnError::io(side, e))
}
