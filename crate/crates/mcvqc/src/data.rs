//! Datasets: IDX and CSV loaders, synthetic generators, angle scaling,
//! seeded splits and batching.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use mcvqc_core::math::PI;
use mcvqc_core::rng::{self, seeded};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
    pub tags: Vec<Split>,
    /// `(rows, cols)` when rows are flattened images.
    pub image_shape: Option<(usize, usize)>,
}

impl Dataset {
    /// Autoencoder dataset: targets are the features themselves.
    pub fn reconstruction(features: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        let targets = features.clone();
        Self::new(features, targets, labels)
    }

    pub fn new(features: Vec<Vec<f64>>, targets: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::Data(format!("{} feature rows but {} target rows", features.len(), targets.len())));
        }
        if let Some(first) = features.first() {
            if features.iter().any(|r| r.len() != first.len()) {
                return Err(Error::Data("ragged feature rows".into()));
            }
        }
        if features.iter().chain(&targets).flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value".into()));
        }
        let tags = vec![Split::Train; features.len()];
        Ok(Dataset { features, targets, labels, tags, image_shape: None })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn rows(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.tags[i] == split).collect()
    }

    /// Replaces targets by `[label]` (class-index targets).
    pub fn with_label_targets(mut self) -> Result<Self> {
        let labels = self.labels.as_ref().ok_or_else(|| Error::Data("dataset has no labels".into()))?;
        self.targets = labels.iter().map(|&l| vec![l as f64]).collect();
        Ok(self)
    }

    pub fn num_classes(&self) -> usize {
        self.labels.as_ref().and_then(|l| l.iter().max()).map_or(0, |m| m + 1)
    }

    /// Keeps `max` rows chosen by a seeded shuffle (order of the shuffle).
    pub fn subsample(&self, max: usize, seed: u64) -> Dataset {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        shuffle(&mut idx, seed);
        idx.truncate(max.min(self.len()));
        self.select(&idx)
    }

    fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            targets: idx.iter().map(|&i| self.targets[i].clone()).collect(),
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
            tags: idx.iter().map(|&i| self.tags[i]).collect(),
            image_shape: self.image_shape,
        }
    }
}

fn shuffle(idx: &mut [usize], seed: u64) {
    let order = rng::permutation(idx.len(), &mut seeded(seed));
    let copy = idx.to_vec();
    for (slot, &o) in idx.iter_mut().zip(&order) {
        *slot = copy[o];
    }
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out).map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Data(format!("{}: truncated header", path.display())))
}

/// Raw IDX images: `(count, rows, cols, pixels)`.
pub fn read_idx_images(path: &Path) -> Result<(usize, usize, usize, Vec<u8>)> {
    let bytes = read_maybe_gz(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Data(format!("{}: bad image magic {magic:#010x}", path.display())));
    }
    let n = be_u32(&bytes, 4, path)? as usize;
    let rows = be_u32(&bytes, 8, path)? as usize;
    let cols = be_u32(&bytes, 12, path)? as usize;
    let want = n * rows * cols;
    let body = &bytes[16..];
    if body.len() != want {
        return Err(Error::Data(format!(
            "{}: header declares {want} pixel bytes, file has {}",
            path.display(),
            body.len()
        )));
    }
    Ok((n, rows, cols, body.to_vec()))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_maybe_gz(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Data(format!("{}: bad label magic {magic:#010x}", path.display())));
    }
    let n = be_u32(&bytes, 4, path)? as usize;
    let body = &bytes[8..];
    if body.len() != n {
        return Err(Error::Data(format!("{}: header declares {n} labels, file has {}", path.display(), body.len())));
    }
    Ok(body.to_vec())
}

/// MNIST-style image/label pair; pixels are mapped to `byte / 255`.
pub fn parse_idx(images: &Path, labels: &Path) -> Result<Dataset> {
    let (n, rows, cols, pixels) = read_idx_images(images)?;
    let labels = read_idx_labels(labels)?;
    if labels.len() != n {
        return Err(Error::Data(format!("image count {n} != label count {}", labels.len())));
    }
    let width = rows * cols;
    let features = (0..n)
        .map(|i| pixels[i * width..(i + 1) * width].iter().map(|&b| b as f64 / 255.0).collect())
        .collect();
    let mut ds = Dataset::reconstruction(features, Some(labels.into_iter().map(usize::from).collect()))?;
    ds.image_shape = Some((rows, cols));
    Ok(ds)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let gz = path.extension().is_some_and(|e| e == "gz");
    let out = if gz {
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(bytes).map_err(|e| Error::io(path, e))?;
        enc.finish().map_err(|e| Error::io(path, e))?
    } else {
        bytes.to_vec()
    };
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes an IDX image file (gzip when the path ends in `.gz`).
pub fn write_idx_images(path: &Path, rows: usize, cols: usize, images: &[Vec<u8>]) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGES_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        if img.len() != rows * cols {
            return Err(Error::Data(format!("image has {} bytes, expected {}", img.len(), rows * cols)));
        }
        bytes.extend_from_slice(img);
    }
    write_bytes(path, &bytes)
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    bytes.extend_from_slice(labels);
    write_bytes(path, &bytes)
}

/// CSV with a header row; `target_column` becomes the target (and the label
/// when it holds non-negative integers), every other column a feature.
pub fn load_csv(path: &Path, target_column: &str) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers()?.clone();
    let t = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::Data(format!("{}: no column named {target_column:?}", path.display())))?;
    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = Vec::with_capacity(rec.len().saturating_sub(1));
        let mut target = 0.0;
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Data(format!("{}: row {} column {j}: {field:?} is not a number", path.display(), line + 2)))?;
            if j == t {
                target = v;
            } else {
                row.push(v);
            }
        }
        features.push(row);
        targets.push(vec![target]);
    }
    let labels = targets
        .iter()
        .map(|t| (t[0] >= 0.0 && t[0].fract() == 0.0).then_some(t[0] as usize))
        .collect::<Option<Vec<_>>>();
    Dataset::new(features, targets, labels)
}

/// Linear map `[0, 1] -> [0, pi]`. Out-of-range values are clamped; the
/// number of clamped entries is returned alongside.
pub fn scale_to_angles(features: &[f64]) -> (Vec<f64>, usize) {
    let mut clamped = 0;
    let angles = features
        .iter()
        .map(|&v| {
            if !(0.0..=1.0).contains(&v) {
                clamped += 1;
            }
            v.clamp(0.0, 1.0) * PI
        })
        .collect();
    (angles, clamped)
}

/// Gaussian clusters (unit variance) whose centers sit `separation` apart
/// along distinct axes (or along axis 0 when there are more classes than
/// dimensions). Row `i` has class `i mod n_classes`.
pub fn synthetic_blobs(n_samples: usize, dim: usize, n_classes: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n_samples == 0 || dim == 0 || n_classes == 0 {
        return Err(Error::Data("blobs need positive sizes".into()));
    }
    let mut r = seeded(seed);
    let mut features = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let c = i % n_classes;
        let mut row: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
        if n_classes <= dim {
            row[c] += separation;
        } else {
            row[0] += separation * c as f64;
        }
        features.push(row);
        labels.push(c);
    }
    Dataset::reconstruction(features, Some(labels))
}

/// Two-class multichannel signals: class `c` oscillates at frequency `c + 1`
/// cycles per window with a per-channel phase, plus Gaussian noise (0.3).
/// Rows are channel-major `channels x timesteps`.
pub fn synthetic_spatiotemporal(n_samples: usize, channels: usize, timesteps: usize, seed: u64) -> Result<Dataset> {
    if n_samples == 0 || channels == 0 || timesteps == 0 {
        return Err(Error::Data("spatiotemporal data needs positive sizes".into()));
    }
    let mut r = seeded(seed);
    let mut features = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let class = i % 2;
        let freq = (class + 1) as f64;
        let mut row = Vec::with_capacity(channels * timesteps);
        for ch in 0..channels {
            let phase = ch as f64 * PI / channels as f64;
            for t in 0..timesteps {
                let noise: f64 = StandardNormal.sample(&mut r);
                row.push((2.0 * PI * freq * t as f64 / timesteps as f64 + phase).sin() + 0.3 * noise);
            }
        }
        features.push(row);
        labels.push(class);
    }
    let mut ds = Dataset::reconstruction(features, Some(labels))?;
    ds.image_shape = Some((channels, timesteps));
    Ok(ds)
}

/// 28x28 images -> 8x8: center crop to 24x24, then 3x3 block means.
pub fn downsample_8x8(ds: &Dataset) -> Result<Dataset> {
    if ds.image_shape != Some((28, 28)) {
        return Err(Error::Data(format!("downsampling expects 28x28 images, got {:?}", ds.image_shape)));
    }
    let features: Vec<Vec<f64>> = ds
        .features
        .iter()
        .map(|img| {
            let mut out = vec![0.0; 64];
            for (o, v) in out.iter_mut().enumerate() {
                let (br, bc) = (o / 8, o % 8);
                let mut s = 0.0;
                for dr in 0..3 {
                    for dc in 0..3 {
                        s += img[(2 + 3 * br + dr) * 28 + 2 + 3 * bc + dc];
                    }
                }
                *v = s / 9.0;
            }
            out
        })
        .collect();
    let mut out = Dataset::reconstruction(features, ds.labels.clone())?;
    out.tags = ds.tags.clone();
    out.image_shape = Some((8, 8));
    Ok(out)
}

/// Seeded shuffle, then contiguous train/val/test assignment.
pub fn split(ds: &Dataset, fractions: [f64; 3], seed: u64) -> Result<Dataset> {
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || fractions.iter().any(|&f| !(0.0..=1.0).contains(&f)) {
        return Err(Error::Data(format!("split fractions {fractions:?} must be in [0,1] and sum to 1")));
    }
    let n = ds.len();
    let n_train = (fractions[0] * n as f64).round() as usize;
    let n_val = ((fractions[1] * n as f64).round() as usize).min(n - n_train);
    let mut idx: Vec<usize> = (0..n).collect();
    shuffle(&mut idx, seed);
    let mut out = ds.clone();
    for (pos, &i) in idx.iter().enumerate() {
        out.tags[i] = if pos < n_train {
            Split::Train
        } else if pos < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    Ok(out)
}

/// Shuffled mini-batches covering every row of `split` exactly once.
pub fn batches(ds: &Dataset, split: Split, batch_size: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::Data("batch_size must be >= 1".into()));
    }
    let mut rows = ds.rows(split);
    shuffle(&mut rows, seed);
    Ok(rows.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

/// Seed for the batch order of `epoch`.
pub fn epoch_seed(data_seed: u64, epoch: usize) -> u64 {
    rng::mix(data_seed, 0x5EED_0000 + epoch as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_examples() {
        let (a, clamped) = scale_to_angles(&[0.0, 1.0, 0.5, 1.5]);
        assert_eq!(a[..3], [0.0, PI, PI / 2.0]);
        assert_eq!(a[3], PI);
        assert_eq!(clamped, 1);
    }

    #[test]
    fn split_counts() {
        let ds = Dataset::reconstruction((0..100).map(|i| vec![i as f64]).collect(), None).unwrap();
        let s = split(&ds, [0.6, 0.2, 0.2], 1).unwrap();
        assert_eq!((s.rows(Split::Train).len(), s.rows(Split::Val).len(), s.rows(Split::Test).len()), (60, 20, 20));
        assert!(split(&ds, [0.6, 0.2, 0.3], 1).is_err());
    }

    #[test]
    fn batches_partition_rows() {
        let ds = Dataset::reconstruction((0..10).map(|i| vec![i as f64]).collect(), None).unwrap();
        let b = batches(&ds, Split::Train, 64, 3).unwrap();
        assert_eq!(b.len(), 1);
        let mut all: Vec<usize> = batches(&ds, Split::Train, 3, 3).unwrap().concat();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn spatiotemporal_shape() {
        let ds = synthetic_spatiotemporal(5, 8, 6, 0).unwrap();
        assert_eq!(ds.dim(), 48);
        assert_eq!(ds, synthetic_spatiotemporal(5, 8, 6, 0).unwrap());
    }
}
