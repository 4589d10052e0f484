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

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{one_hot, Dataset, Sample, SampleInput};
use crate::error::{DqnnError, Result};
use crate::rng::{stream, Stream};

/// Number of cross-validation folds.
pub const FOLDS: usize = 5;

/// Column layout of a labeled CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    #[serde(default)]
    pub has_header: bool,
    /// Zero-based column holding the class label.
    pub label_column: usize,
    /// Label spellings; position gives the class index.
    pub classes: Vec<String>,
}

/// Per-feature min-max scaling to `[0, scale]` followed by a constant shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxShift {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub scale: f64,
    pub shift: f64,
    /// Clamp scaled values into `[0, 1]` (for data outside the fit range).
    pub clip: bool,
}

impl MinMaxShift {
    pub fn fit(rows: &[&[f64]], shift: f64) -> Result<Self> {
        let d = rows
            .first()
            .map(|r| r.len())
            .ok_or_else(|| DqnnError::invalid("cannot fit a scaler on no rows"))?;
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for r in rows {
            for (j, &v) in r.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self {
            min,
            max,
            scale: 1.0,
            shift,
            clip: true,
        })
    }

    /// Scaler with known bounds, e.g. the box a generator samples from.
    pub fn with_bounds(min: Vec<f64>, max: Vec<f64>, scale: f64, shift: f64) -> Self {
        Self {
            min,
            max,
            scale,
            shift,
            clip: true,
        }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let span = self.max[j] - self.min[j];
                let mut s = if span > 0.0 { (v - self.min[j]) / span } else { 0.0 };
                if self.clip {
                    s = s.clamp(0.0, 1.0);
                }
                s * self.scale + self.shift
            })
            .collect()
    }

    /// Ring containing every transformed point (with clipping on):
    /// `[shift sqrt(d), (scale + shift) sqrt(d)]`.
    pub fn ring_bounds(&self) -> (f64, f64) {
        let d = (self.min.len() as f64).sqrt();
        (self.shift * d, (self.scale + self.shift) * d)
    }
}

/// Splits `0..m` into `k` folds after a seeded shuffle. The first `m % k`
/// folds receive one extra element.
pub fn kfold_partition(m: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > m {
        return Err(DqnnError::invalid(format!("cannot split {m} rows into {k} folds")));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut stream(seed, Stream::Folds));
    let (base, extra) = (m / k, m % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

fn read_rows(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .flexible(true)
        .from_path(path)
        .map_err(|e| DqnnError::Parse {
            path: path.into(),
            line: 0,
            msg: e.to_string(),
        })?;
    let k = schema.classes.len();
    if k < 2 {
        return Err(DqnnError::Schema("at least two classes are required".into()));
    }
    let mut samples = Vec::new();
    let mut width = None;
    for rec in reader.records() {
        let rec = rec.map_err(|e| DqnnError::Parse {
            path: path.into(),
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parse_err = |msg: String| DqnnError::Parse {
            path: path.into(),
            line,
            msg,
        };
        if schema.label_column >= rec.len() {
            return Err(parse_err(format!(
                "label column {} missing from a row of {} fields",
                schema.label_column,
                rec.len()
            )));
        }
        if *width.get_or_insert(rec.len()) != rec.len() {
            return Err(parse_err("row width changed".into()));
        }
        let mut x = Vec::with_capacity(rec.len() - 1);
        let mut label = None;
        for (j, field) in rec.iter().enumerate() {
            let field = field.trim();
            if j == schema.label_column {
                label = Some(field);
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("field {j}: {field:?} is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("field {j} is not finite")));
            }
            x.push(v);
        }
        let label = label.unwrap_or_default();
        let class = schema
            .classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| DqnnError::Schema(format!("line {line}: unknown class label {label:?}")))?;
        samples.push(Sample::features(x, one_hot(class, k)));
    }
    if samples.is_empty() {
        return Err(DqnnError::Schema(format!("{} holds no rows", path.display())));
    }
    let name = path.file_stem().map_or("csv".into(), |s| s.to_string_lossy().into_owned());
    Ok(Dataset::new(name, samples))
}

/// Reads a labeled CSV file and returns `(train, test)` for fold `fold_index`
/// of a seeded [`FOLDS`]-fold split. Features are min-max scaled with
/// statistics of the training part only (test values clamped into the
/// training range), then shifted by `0.5` so every input lies in the ring
/// `[0.5 sqrt(d), 1.5 sqrt(d)]`.
pub fn load_csv_dataset(path: &Path, schema: &CsvSchema, fold_seed: u64, fold_index: usize) -> Result<(Dataset, Dataset)> {
    if fold_index >= FOLDS {
        return Err(DqnnError::OutOfRange {
            index: fold_index,
            len: FOLDS,
        });
    }
    let all = read_rows(path, schema)?;
    let folds = kfold_partition(all.len(), FOLDS, fold_seed)?;
    let test_idx = &folds[fold_index];
    let train_idx: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(f, _)| *f != fold_index)
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    let train = all.select(&train_idx);
    let test = all.select(test_idx);
    let rows: Vec<&[f64]> = train
        .samples
        .iter()
        .filter_map(|s| match &s.input {
            SampleInput::Features(x) => Some(x.as_slice()),
            SampleInput::State(_) => None,
        })
        .collect();
    let scaler = MinMaxShift::fit(&rows, 0.5)?;
    Ok((
        train.map_features(|x| scaler.transform(x)),
        test.map_features(|x| scaler.transform(x)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn schema() -> CsvSchema {
        CsvSchema {
            has_header: false,
            label_column: 0,
            classes: vec!["a".into(), "b".into(), "c".into()],
        }
    }

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn fold_sizes_and_partition() {
        let folds = kfold_partition(178, 5, 1).unwrap();
        let sizes: Vec<_> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![36, 36, 36, 35, 35]);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..178).collect::<Vec<_>>());
        assert_eq!(folds, kfold_partition(178, 5, 1).unwrap());
        assert!(kfold_partition(3, 5, 1).is_err());
    }

    #[test]
    fn loads_and_scales() {
        let mut text = String::new();
        for i in 0..20 {
            let label = ["a", "b", "c"][i % 3];
            text.push_str(&format!("{label},{},{}\n", i as f64, 100.0 - i as f64 * 2.0));
        }
        let f = write(&text);
        let (train, test) = load_csv_dataset(f.path(), &schema(), 7, 0).unwrap();
        assert_eq!(train.len() + test.len(), 20);
        assert_eq!(test.len(), 4);
        for s in train.samples.iter().chain(&test.samples) {
            let SampleInput::Features(x) = &s.input else { panic!() };
            assert!(x.iter().all(|v| (0.5..=1.5).contains(v)));
            assert_eq!(s.y.iter().sum::<f64>(), 1.0);
        }
        let (_, test1) = load_csv_dataset(f.path(), &schema(), 7, 1).unwrap();
        for s in &test1.samples {
            assert!(!test.samples.contains(s));
        }
        let again = load_csv_dataset(f.path(), &schema(), 7, 0).unwrap();
        assert_eq!(again.1, test);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let f = write("a,1,2\nb,1,oops\n");
        match load_csv_dataset(f.path(), &schema(), 1, 0) {
            Err(DqnnError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let f = write("a,1,2\nb,1\n");
        assert!(matches!(load_csv_dataset(f.path(), &schema(), 1, 0), Err(DqnnError::Parse { line: 2, .. })));
        let f = write("a,1,2\nz,1,2\nb,3,3\nc,1,1\na,0,0\n");
        assert!(matches!(load_csv_dataset(f.path(), &schema(), 1, 0), Err(DqnnError::Schema(_))));
    }

    #[test]
    fn header_is_skipped_when_declared() {
        let f = write("label,x,y\na,1,2\nb,2,1\nc,0,0\na,3,3\nb,1,1\n");
        let mut s = schema();
        s.has_header = true;
        let (train, test) = load_csv_dataset(f.path(), &s, 1, 0).unwrap();
        assert_eq!(train.len() + test.len(), 5);
    }
}
