//! MNIST IDX parsing, train/test split and seeded mini-batching.

use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Batch, LossKind};
use crate::seeds;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Training images used when no cap is configured.
pub const DEFAULT_TRAIN_CAP: usize = 50_000;

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    let end = at + 4;
    let chunk = bytes.get(at..end).ok_or(Error::Truncated {
        needed: end,
        available: bytes.len(),
    })?;
    Ok(u32::from_be_bytes(chunk.try_into().unwrap()))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = read_u32(bytes, 0)?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

/// Parses an IDX3 image file into an `n x (rows * cols)` matrix with pixels
/// scaled into `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Array2<f64>> {
    check_magic(bytes, IMAGE_MAGIC)?;
    let n = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let pixels = rows.checked_mul(cols).ok_or(Error::DimensionOverflow)?;
    let total = n.checked_mul(pixels).ok_or(Error::DimensionOverflow)?;
    let needed = total.checked_add(16).ok_or(Error::DimensionOverflow)?;
    if bytes.len() < needed {
        return Err(Error::Truncated {
            needed,
            available: bytes.len(),
        });
    }
    let data: Vec<f64> = bytes[16..needed].iter().map(|&b| b as f64 / 255.0).collect();
    Ok(Array2::from_shape_vec((n, pixels), data).expect("length checked"))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABEL_MAGIC)?;
    let n = read_u32(bytes, 4)? as usize;
    let needed = n.checked_add(8).ok_or(Error::DimensionOverflow)?;
    if bytes.len() < needed {
        return Err(Error::Truncated {
            needed,
            available: bytes.len(),
        });
    }
    Ok(bytes[8..needed].to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    images: Array2<f64>,
    labels: Vec<u8>,
    split: SplitTag,
}

impl Dataset {
    pub fn new(images: Array2<f64>, labels: Vec<u8>, split: SplitTag) -> Result<Self> {
        if images.nrows() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} images but {} labels",
                images.nrows(),
                labels.len()
            )));
        }
        if images.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidDataset("pixel outside [0, 1]".into()));
        }
        if labels.iter().any(|&l| l > 9) {
            return Err(Error::InvalidDataset("label outside 0-9".into()));
        }
        Ok(Self {
            images,
            labels,
            split,
        })
    }

    pub fn images(&self) -> ArrayView2<'_, f64> {
        self.images.view()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn split(&self) -> SplitTag {
        self.split
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// First `n` samples.
    pub fn head(&self, n: usize) -> Result<Dataset> {
        if n > self.len() {
            return Err(Error::TrainCapExceeded {
                requested: n,
                available: self.len(),
            });
        }
        Ok(Dataset {
            images: self.images.slice(ndarray::s![..n, ..]).to_owned(),
            labels: self.labels[..n].to_vec(),
            split: self.split,
        })
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: self.images.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            split: self.split,
        }
    }

    /// Whole dataset as one batch; autoencoder targets are the images themselves.
    pub fn as_batch(&self, loss: LossKind) -> Batch<'_> {
        batch_for(loss, self.images.view(), &self.labels)
    }
}

pub fn batch_for<'a>(loss: LossKind, inputs: ArrayView2<'a, f64>, labels: &'a [u8]) -> Batch<'a> {
    match loss {
        LossKind::CrossEntropySoftmax => Batch::classification(inputs, labels),
        LossKind::MeanSquaredError => Batch::reconstruction(inputs),
    }
}

/// How the capped training set is drawn from the training file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TrainSelection {
    /// The first `train_cap` samples in file order.
    #[default]
    First,
    /// A seeded random subset of `train_cap` samples, kept in file order.
    Random { seed: u64 },
}

pub fn standard_split(
    train_images: Array2<f64>,
    train_labels: Vec<u8>,
    test_images: Array2<f64>,
    test_labels: Vec<u8>,
    train_cap: usize,
) -> Result<(Dataset, Dataset)> {
    split_with(
        train_images,
        train_labels,
        test_images,
        test_labels,
        train_cap,
        TrainSelection::First,
    )
}

pub fn split_with(
    train_images: Array2<f64>,
    train_labels: Vec<u8>,
    test_images: Array2<f64>,
    test_labels: Vec<u8>,
    train_cap: usize,
    selection: TrainSelection,
) -> Result<(Dataset, Dataset)> {
    let full = Dataset::new(train_images, train_labels, SplitTag::Train)?;
    let test = Dataset::new(test_images, test_labels, SplitTag::Test)?;
    if train_cap > full.len() {
        return Err(Error::TrainCapExceeded {
            requested: train_cap,
            available: full.len(),
        });
    }
    let train = match selection {
        TrainSelection::First => full.head(train_cap)?,
        TrainSelection::Random { seed } => {
            let mut idx: Vec<usize> = (0..full.len()).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            idx.truncate(train_cap);
            idx.sort_unstable();
            full.select(&idx)
        }
    };
    Ok((train, test))
}

/// Standard MNIST file names inside a directory.
pub const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

/// Loads the four (decompressed) MNIST IDX files from `dir`.
pub fn load_mnist_dir(
    dir: &Path,
    train_cap: usize,
    selection: TrainSelection,
) -> Result<(Dataset, Dataset)> {
    let read = |name: &str| -> Result<Vec<u8>> {
        let path = dir.join(name);
        std::fs::read(&path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })
    };
    let train_images = parse_idx_images(&read(MNIST_FILES[0])?)?;
    let train_labels = parse_idx_labels(&read(MNIST_FILES[1])?)?;
    let test_images = parse_idx_images(&read(MNIST_FILES[2])?)?;
    let test_labels = parse_idx_labels(&read(MNIST_FILES[3])?)?;
    split_with(
        train_images,
        train_labels,
        test_images,
        test_labels,
        train_cap,
        selection,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub epoch: u64,
}

impl BatchPlan {
    /// Sample indices of each batch: a seeded permutation cut into
    /// consecutive chunks of `batch_size` (the last may be short).
    pub fn batch_indices(&self, n_samples: usize) -> Result<Vec<Vec<usize>>> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be at least 1".into()));
        }
        let mut order: Vec<usize> = (0..n_samples).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(self.shuffle_seed, seeds::Stream::Shuffle, self.epoch));
        order.shuffle(&mut rng);
        Ok(order.chunks(self.batch_size).map(<[usize]>::to_vec).collect())
    }
}

/// A copied-out mini-batch.
#[derive(Debug, Clone)]
pub struct MiniBatch {
    pub indices: Vec<usize>,
    pub inputs: Array2<f64>,
    pub labels: Vec<u8>,
}

impl MiniBatch {
    pub fn as_batch(&self, loss: LossKind) -> Batch<'_> {
        batch_for(loss, self.inputs.view(), &self.labels)
    }
}

pub fn minibatches<'a>(
    dataset: &'a Dataset,
    plan: &BatchPlan,
) -> Result<impl Iterator<Item = MiniBatch> + 'a> {
    if dataset.is_empty() {
        return Err(Error::InvalidDataset("empty dataset".into()));
    }
    let chunks = plan.batch_indices(dataset.len())?;
    Ok(chunks.into_iter().map(move |indices| MiniBatch {
        inputs: dataset.images.select(Axis(0), &indices),
        labels: indices.iter().map(|&i| dataset.labels[i]).collect(),
        indices,
    }))
}

/// Encodes images as an IDX3 byte stream (the inverse of [`parse_idx_images`]).
pub fn idx_images_bytes(n: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&n.to_be_bytes());
    out.extend_from_slice(&rows.to_be_bytes());
    out.extend_from_slice(&cols.to_be_bytes());
    out.extend_from_slice(pixels);
    out
}

/// Encodes labels as an IDX1 byte stream.
pub fn idx_labels_bytes(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
