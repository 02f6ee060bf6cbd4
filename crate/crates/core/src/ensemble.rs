//! Multi-chip composition: permute-and-split the (encoded) features across
//! `k` chips, evaluate each chip independently, and combine readouts with a
//! classical aggregator.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::error::{Error, Result};
use crate::gradients::{self, Backend};
use crate::linear::LinearLayer;
use crate::rng;

/// Fixed feature shuffle plus split into `num_chips` blocks of `chip_width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    num_chips: usize,
    chip_width: usize,
    permutation: Vec<usize>,
}

impl Partition {
    pub fn new(num_chips: usize, chip_width: usize, permutation: Vec<usize>) -> Result<Self> {
        if num_chips == 0 || chip_width == 0 {
            return Err(Error::InvalidArgument("partition needs k >= 1 and l >= 1".into()));
        }
        let n = num_chips * chip_width;
        if permutation.len() != n {
            return Err(Error::DimensionMismatch { what: "permutation", expected: n, got: permutation.len() });
        }
        let mut seen = vec![false; n];
        for &p in &permutation {
            if p >= n || seen[p] {
                return Err(Error::NotBijection);
            }
            seen[p] = true;
        }
        Ok(Partition { num_chips, chip_width, permutation })
    }

    pub fn identity(num_chips: usize, chip_width: usize) -> Result<Self> {
        Self::new(num_chips, chip_width, (0..num_chips * chip_width).collect())
    }

    /// Permutation drawn once from `seed`.
    pub fn shuffled(num_chips: usize, chip_width: usize, seed: u64) -> Result<Self> {
        let mut r = rng::seeded(seed);
        Self::new(num_chips, chip_width, rng::permutation(num_chips * chip_width, &mut r))
    }

    pub fn num_chips(&self) -> usize {
        self.num_chips
    }

    pub fn chip_width(&self) -> usize {
        self.chip_width
    }

    pub fn total(&self) -> usize {
        self.num_chips * self.chip_width
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// `permuted[i] = x[perm[i]]`, then `k` contiguous blocks.
    pub fn split(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.total() {
            return Err(Error::DimensionMismatch { what: "partition input", expected: self.total(), got: x.len() });
        }
        Ok(self
            .permutation
            .chunks(self.chip_width)
            .map(|idx| idx.iter().map(|&i| x[i]).collect())
            .collect())
    }

    /// Inverse of [`split`](Self::split).
    pub fn merge(&self, blocks: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.total()];
        self.scatter_add(blocks, &mut x)?;
        Ok(x)
    }

    /// Adds each block entry back onto its source feature (used for gradients).
    pub(crate) fn scatter_add(&self, blocks: &[Vec<f64>], out: &mut [f64]) -> Result<()> {
        if blocks.len() != self.num_chips || blocks.iter().any(|b| b.len() != self.chip_width) {
            return Err(Error::DimensionMismatch {
                what: "partition blocks",
                expected: self.total(),
                got: blocks.iter().map(Vec::len).sum(),
            });
        }
        for (idx, block) in self.permutation.chunks(self.chip_width).zip(blocks) {
            for (&i, &v) in idx.iter().zip(block) {
                out[i] += v;
            }
        }
        Ok(())
    }
}

pub fn partition_features(x: &[f64], partition: &Partition) -> Result<Vec<Vec<f64>>> {
    partition.split(x)
}

/// Classical stage in front of the chips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Encoder {
    /// No trainable encoder: features are zero-padded to the partition size
    /// and multiplied by `factor` to become angles.
    Scale { factor: f64 },
    /// One dense layer `input_dim -> n_total` ahead of the partition.
    Linear(LinearLayer),
    /// Raw features are partitioned first; chip `c` maps its block to angles
    /// with its own layer.
    PerChip(Vec<LinearLayer>),
}

impl Encoder {
    pub fn param_count(&self) -> usize {
        match self {
            Encoder::Scale { .. } => 0,
            Encoder::Linear(l) => l.param_count(),
            Encoder::PerChip(ls) => ls.iter().map(LinearLayer::param_count).sum(),
        }
    }

    pub fn is_trainable(&self) -> bool {
        self.param_count() > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Aggregator {
    Mean,
    WeightedSum(Vec<f64>),
    Linear(LinearLayer),
}

impl Aggregator {
    pub fn param_count(&self) -> usize {
        match self {
            Aggregator::Mean => 0,
            Aggregator::WeightedSum(w) => w.len(),
            Aggregator::Linear(l) => l.param_count(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Aggregator::Linear(l) => l.out_dim,
            _ => 1,
        }
    }
}

/// `g(outputs)` for the chosen aggregator.
pub fn aggregate(outputs: &[f64], aggregator: &Aggregator) -> Result<Vec<f64>> {
    match aggregator {
        Aggregator::Mean => {
            if outputs.is_empty() {
                return Err(Error::InvalidArgument("cannot average zero chip outputs".into()));
            }
            Ok(vec![crate::math::mean(outputs)])
        }
        Aggregator::WeightedSum(w) => {
            if w.len() != outputs.len() {
                return Err(Error::DimensionMismatch { what: "aggregator weights", expected: outputs.len(), got: w.len() });
            }
            Ok(vec![w.iter().zip(outputs).map(|(a, b)| a * b).sum()])
        }
        Aggregator::Linear(l) => l.forward(outputs),
    }
}

/// `<Z>` of the chip's output wire for block `x_i`.
pub fn forward_chip(chip: &CircuitSpec, x_i: &[f64], theta_i: &[f64], backend: &Backend) -> Result<f64> {
    gradients::expectation(chip, x_i, theta_i, backend)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub input_dim: usize,
    pub partition: Partition,
    /// Shared chip program; every chip has the same slot layout.
    pub chip: CircuitSpec,
    pub thetas: Vec<Vec<f64>>,
    pub encoder: Encoder,
    pub aggregator: Aggregator,
    /// Optional dense map applied after the aggregator (class logits).
    pub head: Option<LinearLayer>,
    pub seed: u64,
    #[serde(skip)]
    version: u64,
}

/// Intermediate values of one forward pass, consumed by `hybrid_backward`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub(crate) version: u64,
    pub(crate) padded_input: Vec<f64>,
    pub(crate) raw_blocks: Vec<Vec<f64>>,
    pub(crate) chip_angles: Vec<Vec<f64>>,
    pub(crate) chip_outputs: Vec<f64>,
    pub(crate) aggregated: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub output: Vec<f64>,
    pub chip_outputs: Vec<f64>,
    pub cache: ForwardCache,
}

impl EnsembleModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        input_dim: usize,
        partition: Partition,
        chip: CircuitSpec,
        thetas: Vec<Vec<f64>>,
        encoder: Encoder,
        aggregator: Aggregator,
        head: Option<LinearLayer>,
        seed: u64,
    ) -> Result<Self> {
        let m = EnsembleModel { input_dim, partition, chip, thetas, encoder, aggregator, head, seed, version: 0 };
        m.validate()?;
        Ok(m)
    }

    pub fn num_chips(&self) -> usize {
        self.partition.num_chips()
    }

    pub fn validate(&self) -> Result<()> {
        self.chip.validate()?;
        let k = self.num_chips();
        if self.thetas.len() != k {
            return Err(Error::DimensionMismatch { what: "theta blocks", expected: k, got: self.thetas.len() });
        }
        for t in &self.thetas {
            if t.len() != self.chip.num_trainable {
                return Err(Error::DimensionMismatch {
                    what: "chip theta block",
                    expected: self.chip.num_trainable,
                    got: t.len(),
                });
            }
        }
        match &self.encoder {
            Encoder::Scale { .. } => {
                if self.partition.chip_width() != self.chip.num_encoding {
                    return Err(Error::DimensionMismatch {
                        what: "chip width",
                        expected: self.chip.num_encoding,
                        got: self.partition.chip_width(),
                    });
                }
                if self.input_dim > self.partition.total() {
                    return Err(Error::DimensionMismatch {
                        what: "padded input",
                        expected: self.partition.total(),
                        got: self.input_dim,
                    });
                }
            }
            Encoder::Linear(l) => {
                l.validate()?;
                if l.in_dim != self.input_dim || l.out_dim != self.partition.total() {
                    return Err(Error::DimensionMismatch {
                        what: "encoder shape",
                        expected: self.partition.total(),
                        got: l.out_dim,
                    });
                }
                if self.partition.chip_width() != self.chip.num_encoding {
                    return Err(Error::DimensionMismatch {
                        what: "chip width",
                        expected: self.chip.num_encoding,
                        got: self.partition.chip_width(),
                    });
                }
            }
            Encoder::PerChip(ls) => {
                if ls.len() != k {
                    return Err(Error::DimensionMismatch { what: "per-chip encoders", expected: k, got: ls.len() });
                }
                for l in ls {
                    l.validate()?;
                    if l.in_dim != self.partition.chip_width() || l.out_dim != self.chip.num_encoding {
                        return Err(Error::DimensionMismatch {
                            what: "per-chip encoder shape",
                            expected: self.chip.num_encoding,
                            got: l.out_dim,
                        });
                    }
                }
                if self.input_dim > self.partition.total() {
                    return Err(Error::DimensionMismatch {
                        what: "padded input",
                        expected: self.partition.total(),
                        got: self.input_dim,
                    });
                }
            }
        }
        // One readout per chip feeds the aggregator.
        match &self.aggregator {
            Aggregator::Mean => {}
            Aggregator::WeightedSum(w) => {
                if w.len() != k {
                    return Err(Error::DimensionMismatch { what: "aggregator weights", expected: k, got: w.len() });
                }
            }
            Aggregator::Linear(l) => {
                l.validate()?;
                if l.in_dim != k {
                    return Err(Error::DimensionMismatch { what: "decoder input", expected: k, got: l.in_dim });
                }
            }
        }
        if let Some(h) = &self.head {
            h.validate()?;
            if h.in_dim != self.aggregator.output_dim() {
                return Err(Error::DimensionMismatch {
                    what: "head input",
                    expected: self.aggregator.output_dim(),
                    got: h.in_dim,
                });
            }
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        match &self.head {
            Some(h) => h.out_dim,
            None => self.aggregator.output_dim(),
        }
    }

    /// Version counter bumped on every parameter write; caches check it.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn quantum_param_count(&self) -> usize {
        self.thetas.iter().map(Vec::len).sum()
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count()
            + self.quantum_param_count()
            + self.aggregator.param_count()
            + self.head.as_ref().map_or(0, LinearLayer::param_count)
    }

    /// Flattened parameters: encoder, chip theta blocks in chip order,
    /// aggregator, head.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        match &self.encoder {
            Encoder::Scale { .. } => {}
            Encoder::Linear(l) => l.write_params(&mut out),
            Encoder::PerChip(ls) => ls.iter().for_each(|l| l.write_params(&mut out)),
        }
        for t in &self.thetas {
            out.extend_from_slice(t);
        }
        match &self.aggregator {
            Aggregator::Mean => {}
            Aggregator::WeightedSum(w) => out.extend_from_slice(w),
            Aggregator::Linear(l) => l.write_params(&mut out),
        }
        if let Some(h) = &self.head {
            h.write_params(&mut out);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch { what: "parameter vector", expected: self.param_count(), got: params.len() });
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "parameter vector" });
        }
        let mut rest = params;
        match &mut self.encoder {
            Encoder::Scale { .. } => {}
            Encoder::Linear(l) => rest = l.read_params(rest),
            Encoder::PerChip(ls) => {
                for l in ls {
                    rest = l.read_params(rest);
                }
            }
        }
        for t in &mut self.thetas {
            let (head, tail) = rest.split_at(t.len());
            t.copy_from_slice(head);
            rest = tail;
        }
        match &mut self.aggregator {
            Aggregator::Mean => {}
            Aggregator::WeightedSum(w) => {
                let (head, tail) = rest.split_at(w.len());
                w.copy_from_slice(head);
                rest = tail;
            }
            Aggregator::Linear(l) => rest = l.read_params(rest),
        }
        if let Some(h) = &mut self.head {
            h.read_params(rest);
        }
        self.version += 1;
        Ok(())
    }

    /// Offset of chip `c`'s theta block inside [`params`](Self::params).
    pub fn theta_offset(&self, chip: usize) -> usize {
        self.encoder.param_count() + chip * self.chip.num_trainable
    }

    fn pad(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { what: "model input", expected: self.input_dim, got: x.len() });
        }
        let mut v = x.to_vec();
        v.resize(self.partition.total(), 0.0);
        Ok(v)
    }

    /// Per-chip encoding angles for input `x`.
    #[allow(clippy::type_complexity)]
    pub fn chip_angles(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        match &self.encoder {
            Encoder::Scale { factor } => {
                let padded = self.pad(x)?;
                let scaled: Vec<f64> = padded.iter().map(|v| v * factor).collect();
                let blocks = self.partition.split(&scaled)?;
                Ok((padded, Vec::new(), blocks))
            }
            Encoder::Linear(l) => {
                if x.len() != self.input_dim {
                    return Err(Error::DimensionMismatch { what: "model input", expected: self.input_dim, got: x.len() });
                }
                let encoded = l.forward(x)?;
                Ok((x.to_vec(), Vec::new(), self.partition.split(&encoded)?))
            }
            Encoder::PerChip(ls) => {
                let padded = self.pad(x)?;
                let raw = self.partition.split(&padded)?;
                let angles = raw.iter().zip(ls).map(|(b, l)| l.forward(b)).collect::<Result<Vec<_>>>()?;
                Ok((padded, raw, angles))
            }
        }
    }

    /// encoder -> partition -> independent chips -> aggregator -> head.
    pub fn forward(&self, x: &[f64], backend: &Backend) -> Result<Forward> {
        self.forward_with(x, |_, angles, theta| forward_chip(&self.chip, angles, theta, backend))
    }

    /// Forward pass with a caller-supplied chip evaluator
    /// `(chip index, encoding angles, theta) -> readout`, e.g. shot-sampled
    /// or error-mitigated estimates.
    pub fn forward_with<F>(&self, x: &[f64], mut eval: F) -> Result<Forward>
    where
        F: FnMut(usize, &[f64], &[f64]) -> Result<f64>,
    {
        let (padded_input, raw_blocks, chip_angles) = self.chip_angles(x)?;
        let chip_outputs = chip_angles
            .iter()
            .zip(&self.thetas)
            .enumerate()
            .map(|(c, (a, t))| eval(c, a, t))
            .collect::<Result<Vec<f64>>>()?;
        let aggregated = aggregate(&chip_outputs, &self.aggregator)?;
        let output = match &self.head {
            Some(h) => h.forward(&aggregated)?,
            None => aggregated.clone(),
        };
        Ok(Forward {
            output,
            chip_outputs: chip_outputs.clone(),
            cache: ForwardCache { version: self.version, padded_input, raw_blocks, chip_angles, chip_outputs, aggregated },
        })
    }

    pub fn predict(&self, x: &[f64], backend: &Backend) -> Result<Vec<f64>> {
        Ok(self.forward(x, backend)?.output)
    }
}

/// Free-function form of [`EnsembleModel::forward`]: `(final, chip_outputs)`.
pub fn forward_ensemble(model: &EnsembleModel, x: &[f64], backend: &Backend) -> Result<(Vec<f64>, Vec<f64>)> {
    let f = model.forward(x, backend)?;
    Ok((f.output, f.chip_outputs))
}
