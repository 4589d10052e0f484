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

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DqnnError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DqnnError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range (length {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("sample {sample}: norm {norm} outside ring [{lo}, {hi}]")]
    DomainViolation {
        sample: usize,
        norm: f64,
        lo: f64,
        hi: f64,
    },

    #[error("malformed encoding: {0}")]
    MalformedEncoding(String),

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("image {index} has zero norm after preprocessing")]
    ZeroNormImage { index: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("eigensolver failed: {msg} (residual {residual:e})")]
    Solver { msg: String, residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl DqnnError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        DqnnError::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DqnnError::Io {
            path: path.into(),
            source,
        }
    }
}
