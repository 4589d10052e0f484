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

//! Qubit and circuit-cost accounting for the model and two baselines.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{DqnnError, Result};
use crate::statevec::build_ansatz;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Algorithm {
    Dqnn,
    Qcl,
    Ccq,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dqnn => "DQNN",
            Algorithm::Qcl => "QCL",
            Algorithm::Ccq => "CCQ",
        }
    }
}

/// A gate count known exactly or only as a scaling descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum GateCount {
    Exact(u64),
    Symbolic(String),
}

impl std::fmt::Display for GateCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GateCount::Exact(n) => write!(f, "{n}"),
            GateCount::Symbolic(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResourceEstimate {
    pub algorithm: Algorithm,
    pub duplication: u64,
    /// Data qubits per copy.
    pub data_qubits: u64,
    /// `ceil(log2 d)`, the asymptotic count quoted for the log-depth schemes.
    pub data_qubits_log_d: u64,
    pub total_qubits: u64,
    pub n_g: GateCount,
    pub n_b: Option<u64>,
    pub c: Option<u64>,
}

/// `n_g * n_b`.
pub fn circuit_cost(n_g: u64, n_b: u64) -> Result<u64> {
    if n_g == 0 || n_b == 0 {
        return Err(DqnnError::invalid("gate and observable counts must be positive"));
    }
    n_g.checked_mul(n_b).ok_or_else(|| DqnnError::invalid("cost overflows u64"))
}

/// `ceil(log2 k)` for `k >= 1`.
pub fn ceil_log2(k: u64) -> u64 {
    u64::from(k.max(1).next_power_of_two().trailing_zeros())
}

/// Model and baseline resources for `d` features, polynomial order `m`,
/// a `layers`-deep ansatz and `n_b` observables.
pub fn resource_table(d: u64, m: u64, layers: usize, n_b: u64) -> Result<[ResourceEstimate; 3]> {
    if d == 0 || m == 0 {
        return Err(DqnnError::invalid("d and M must be at least 1"));
    }
    let log_d = ceil_log2(d);
    let n = ceil_log2(d + 1);
    let gates = build_ansatz(n as usize, layers)?.templates().len() as u64;
    let ccq_q = log_d.max(1);
    Ok([
        ResourceEstimate {
            algorithm: Algorithm::Dqnn,
            duplication: 1,
            data_qubits: n,
            data_qubits_log_d: log_d,
            total_qubits: n,
            n_g: GateCount::Exact(gates),
            n_b: Some(n_b),
            c: Some(circuit_cost(gates, n_b)?),
        },
        ResourceEstimate {
            algorithm: Algorithm::Qcl,
            duplication: m,
            data_qubits: d,
            data_qubits_log_d: log_d,
            total_qubits: m * d,
            n_g: GateCount::Symbolic(format!("poly(M*d), M={m}")),
            n_b: None,
            c: None,
        },
        ResourceEstimate {
            algorithm: Algorithm::Ccq,
            duplication: m,
            data_qubits: ccq_q,
            data_qubits_log_d: log_d,
            total_qubits: m * ccq_q,
            n_g: GateCount::Symbolic(format!("poly(M*log d), M={m}")),
            n_b: None,
            c: None,
        },
    ])
}

/// A cost row with a caller-supplied gate count next to the ansatz count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostRow {
    pub label: String,
    pub n_g: u64,
    pub n_b: u64,
    pub c: u64,
    pub ansatz_gates: u64,
    pub ansatz_rotations: u64,
}

pub fn cost_row(label: &str, n_g: u64, n_b: u64, num_qubits: usize, layers: usize) -> Result<CostRow> {
    let ansatz = build_ansatz(num_qubits, layers)?;
    Ok(CostRow {
        label: label.to_string(),
        n_g,
        n_b,
        c: circuit_cost(n_g, n_b)?,
        ansatz_gates: ansatz.templates().len() as u64,
        ansatz_rotations: ansatz.num_params() as u64,
    })
}

pub fn render_text(rows: &[ResourceEstimate]) -> String {
    let mut out = format!(
        "{:<6} {:>11} {:>11} {:>12} {:>12} {:>24} {:>5} {:>6}\n",
        "algo", "duplication", "data_qubits", "ceil(log d)", "total_qubits", "n_g", "n_b", "c"
    );
    for r in rows {
        let opt = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{:<6} {:>11} {:>11} {:>12} {:>12} {:>24} {:>5} {:>6}",
            r.algorithm.name(),
            r.duplication,
            r.data_qubits,
            r.data_qubits_log_d,
            r.total_qubits,
            r.n_g.to_string(),
            opt(r.n_b),
            opt(r.c)
        );
    }
    out
}

pub fn render_csv(rows: &[ResourceEstimate]) -> String {
    let mut out = String::from("algorithm,duplication,data_qubits,ceil_log_d,total_qubits,n_g,n_b,c\n");
    for r in rows {
        let opt = |v: Option<u64>| v.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},\"{}\",{},{}",
            r.algorithm.name(),
            r.duplication,
            r.data_qubits,
            r.data_qubits_log_d,
            r.total_qubits,
            r.n_g,
            opt(r.n_b),
            opt(r.c)
        );
    }
    out
}
