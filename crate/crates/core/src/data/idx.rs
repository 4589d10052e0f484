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

use super::{one_hot, Dataset, Sample};
use crate::error::{DqnnError, Result};

const IMAGE_MAGIC: u32 = 0x0803;
const LABEL_MAGIC: u32 = 0x0801;

/// Side length after resizing.
const SIDE: usize = 16;

/// Pixel removed from the flattened 16x16 image so 255 features fit the
/// 255 free amplitudes of 8 qubits. It is the bottom-right corner, which is
/// background in practice.
pub const DROPPED_PIXEL: usize = SIDE * SIDE - 1;

/// Unsigned-byte images of a common size.
#[derive(Clone, Debug, PartialEq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn len(&self) -> usize {
        self.pixels.len() / (self.rows * self.cols).max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let s = self.rows * self.cols;
        &self.pixels[i * s..(i + 1) * s]
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| DqnnError::io(path, e))
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| DqnnError::Format(format!("{}: truncated header", path.display())))
}

pub fn read_idx_images(path: &Path) -> Result<IdxImages> {
    let bytes = read_file(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != IMAGE_MAGIC {
        return Err(DqnnError::Format(format!("{}: image magic {magic:#x}, expected {IMAGE_MAGIC:#x}", path.display())));
    }
    let count = be_u32(&bytes, 4, path)? as usize;
    let rows = be_u32(&bytes, 8, path)? as usize;
    let cols = be_u32(&bytes, 12, path)? as usize;
    let body = &bytes[16..];
    if body.len() != count * rows * cols {
        return Err(DqnnError::Format(format!(
            "{}: {} pixel bytes for {count} images of {rows}x{cols}",
            path.display(),
            body.len()
        )));
    }
    Ok(IdxImages {
        rows,
        cols,
        pixels: body.to_vec(),
    })
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_file(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != LABEL_MAGIC {
        return Err(DqnnError::Format(format!("{}: label magic {magic:#x}, expected {LABEL_MAGIC:#x}", path.display())));
    }
    let count = be_u32(&bytes, 4, path)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(DqnnError::Format(format!("{}: {} labels, header says {count}", path.display(), body.len())));
    }
    Ok(body.to_vec())
}

pub fn write_idx_images(path: &Path, images: &IdxImages) -> Result<()> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGE_MAGIC, images.len() as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    std::fs::write(path, out).map_err(|e| DqnnError::io(path, e))
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    for v in [LABEL_MAGIC, labels.len() as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(labels);
    std::fs::write(path, out).map_err(|e| DqnnError::io(path, e))
}

/// Bilinear resampling with pixel-center alignment and edge clamping.
pub fn resize_bilinear(src: &[f64], rows: usize, cols: usize, out_rows: usize, out_cols: usize) -> Vec<f64> {
    let sample = |r: isize, c: isize| {
        let r = r.clamp(0, rows as isize - 1) as usize;
        let c = c.clamp(0, cols as isize - 1) as usize;
        src[r * cols + c]
    };
    let sy = rows as f64 / out_rows as f64;
    let sx = cols as f64 / out_cols as f64;
    let mut out = Vec::with_capacity(out_rows * out_cols);
    for i in 0..out_rows {
        let y = (i as f64 + 0.5) * sy - 0.5;
        let y0 = y.floor();
        let fy = y - y0;
        for j in 0..out_cols {
            let x = (j as f64 + 0.5) * sx - 0.5;
            let x0 = x.floor();
            let fx = x - x0;
            let (r, c) = (y0 as isize, x0 as isize);
            let top = sample(r, c) * (1.0 - fx) + sample(r, c + 1) * fx;
            let bottom = sample(r + 1, c) * (1.0 - fx) + sample(r + 1, c + 1) * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// Loads images whose label is in `classes`, resized to 16x16, flattened
/// row-major, scaled to `[0, 1]`, with [`DROPPED_PIXEL`] removed. Targets are
/// one-hot in the order of `classes`. At most `limit` images are kept.
pub fn load_idx_images(images: &Path, labels: &Path, classes: &[u8], limit: Option<usize>) -> Result<Dataset> {
    if classes.len() < 2 {
        return Err(DqnnError::invalid("need at least two classes"));
    }
    let imgs = read_idx_images(images)?;
    let labs = read_idx_labels(labels)?;
    if imgs.len() != labs.len() {
        return Err(DqnnError::Consistency(format!("{} images but {} labels", imgs.len(), labs.len())));
    }
    let limit = limit.unwrap_or(usize::MAX);
    let mut samples = Vec::new();
    for (i, &label) in labs.iter().enumerate() {
        if samples.len() >= limit {
            break;
        }
        let Some(class) = classes.iter().position(|&c| c == label) else {
            continue;
        };
        let raw: Vec<f64> = imgs.image(i).iter().map(|&p| f64::from(p) / 255.0).collect();
        let mut x = resize_bilinear(&raw, imgs.rows, imgs.cols, SIDE, SIDE);
        x.remove(DROPPED_PIXEL);
        if x.iter().all(|&v| v == 0.0) {
            return Err(DqnnError::ZeroNormImage { index: i });
        }
        samples.push(Sample::features(x, one_hot(class, classes.len())));
    }
    let name = images.file_stem().map_or("idx".into(), |s| s.to_string_lossy().into_owned());
    Ok(Dataset::new(name, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SampleInput;

    fn blob(rows: usize, cols: usize, v: u8) -> Vec<u8> {
        let mut px = vec![0u8; rows * cols];
        for r in rows / 4..3 * rows / 4 {
            for c in cols / 4..3 * cols / 4 {
                px[r * cols + c] = v;
            }
        }
        px
    }

    #[test]
    fn round_trip_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i.idx"), dir.path().join("l.idx"));
        let mut pixels = blob(28, 28, 200);
        pixels.extend(blob(28, 28, 100));
        pixels.extend(blob(28, 28, 255));
        let imgs = IdxImages {
            rows: 28,
            cols: 28,
            pixels,
        };
        write_idx_images(&ip, &imgs).unwrap();
        write_idx_labels(&lp, &[1, 7, 0]).unwrap();
        assert_eq!(read_idx_images(&ip).unwrap(), imgs);
        let data = load_idx_images(&ip, &lp, &[0, 1], None).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.samples[0].y, vec![0.0, 1.0]);
        assert_eq!(data.samples[1].y, vec![1.0, 0.0]);
        let SampleInput::Features(x) = &data.samples[0].input else { panic!() };
        assert_eq!(x.len(), 255);
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(load_idx_images(&ip, &lp, &[0, 1], Some(1)).unwrap().len(), 1);
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i.idx"), dir.path().join("l.idx"));
        write_idx_labels(&ip, &[1]).unwrap();
        assert!(matches!(read_idx_images(&ip), Err(DqnnError::Format(_))));

        let imgs = IdxImages {
            rows: 28,
            cols: 28,
            pixels: blob(28, 28, 9),
        };
        write_idx_images(&ip, &imgs).unwrap();
        write_idx_labels(&lp, &[0, 1]).unwrap();
        assert!(matches!(load_idx_images(&ip, &lp, &[0, 1], None), Err(DqnnError::Consistency(_))));

        let zero = IdxImages {
            rows: 28,
            cols: 28,
            pixels: vec![0; 784],
        };
        write_idx_images(&ip, &zero).unwrap();
        write_idx_labels(&lp, &[0]).unwrap();
        assert!(matches!(load_idx_images(&ip, &lp, &[0, 1], None), Err(DqnnError::ZeroNormImage { index: 0 })));
    }

    #[test]
    fn resize_preserves_constants_and_identity() {
        let src = vec![0.25; 28 * 28];
        assert!(resize_bilinear(&src, 28, 28, 16, 16).iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let ramp: Vec<f64> = (0..16).map(f64::from).collect();
        assert_eq!(resize_bilinear(&ramp, 4, 4, 4, 4), ramp);
    }
}
