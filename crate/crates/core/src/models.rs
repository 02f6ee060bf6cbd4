//! Constructors for the experiment architectures and a common training
//! interface.
//!
//! Quantum angles are initialized uniformly in `[0, 2pi)`; dense layers
//! uniformly in `[-1/sqrt(in), 1/sqrt(in)]`. Every random draw comes from a
//! stream derived from the constructor seed.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::ensemble::{Aggregator, Encoder, EnsembleModel, Partition};
use crate::error::{Error, Result};
use crate::gate::{GateKind, GateOp};
use crate::gradients::{hybrid_backward, Backend, GradientMethod};
use crate::linear::LinearLayer;
use crate::loss::Loss;
use crate::math::{PI, TAU};
use crate::rng::{self, Rng};

const STREAM_ENCODER: u64 = 0;
const STREAM_PARTITION: u64 = 1;
const STREAM_THETA: u64 = 2;
const STREAM_DECODER: u64 = 3;

fn stream(seed: u64, id: u64) -> Rng {
    rng::seeded(rng::mix(seed, id))
}

fn random_thetas(k: usize, len: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = stream(seed, STREAM_THETA);
    (0..k).map(|_| (0..len).map(|_| r.random_range(0.0..TAU)).collect()).collect()
}

fn check_width(l: usize) -> Result<()> {
    if l == 0 || l > crate::MAX_STATE_QUBITS {
        return Err(Error::Capacity { requested: l, max: crate::MAX_STATE_QUBITS });
    }
    Ok(())
}

/// RY encoding, then `depth` layers of `RX, RY, RZ` on every wire followed
/// by a CRX ring `i -> (i+1) mod l`. Slot 0 is the layer-1 RX on wire 0.
/// A one-wire chip has no CRX, so it carries `3 depth` slots instead of
/// `4 l depth`.
pub fn hardware_efficient_chip(l: usize, depth: usize) -> Result<CircuitSpec> {
    check_width(l)?;
    let mut c = CircuitSpec::with_ry_encoding(l);
    let mut slot = 0;
    for _ in 0..depth {
        for w in 0..l {
            for kind in [GateKind::RX, GateKind::RY, GateKind::RZ] {
                c.push(GateOp::single(kind, w, slot));
                slot += 1;
            }
        }
        if l > 1 {
            for w in 0..l {
                c.push(GateOp::pair(GateKind::CRX, w, (w + 1) % l, slot));
                slot += 1;
            }
        }
    }
    Ok(c)
}

/// Single-chip hybrid autoencoder: `input_dim -> n_qubits` encoder, one chip,
/// decoder `1 -> input_dim`.
pub fn build_single_chip_ae(input_dim: usize, n_qubits: usize, depth: usize, seed: u64) -> Result<EnsembleModel> {
    build_multichip_ae_reduced(input_dim, n_qubits, 1, depth, seed)
}

/// Encoder `input_dim -> n_total`, shuffled split over `k` chips of width
/// `n_total / k`, decoder `k -> input_dim`.
pub fn build_multichip_ae_reduced(
    input_dim: usize,
    n_total: usize,
    k: usize,
    depth: usize,
    seed: u64,
) -> Result<EnsembleModel> {
    if input_dim == 0 || k == 0 {
        return Err(Error::InvalidArgument("input_dim and k must be >= 1".into()));
    }
    if !n_total.is_multiple_of(k) {
        return Err(Error::Divisibility { what: "qubits per chip", value: n_total, divisor: k });
    }
    let l = n_total / k;
    let chip = hardware_efficient_chip(l, depth)?;
    let encoder = LinearLayer::random(input_dim, n_total, &mut stream(seed, STREAM_ENCODER));
    let partition = Partition::shuffled(k, l, rng::mix(seed, STREAM_PARTITION))?;
    let thetas = random_thetas(k, chip.num_trainable, seed);
    let decoder = LinearLayer::random(k, input_dim, &mut stream(seed, STREAM_DECODER));
    EnsembleModel::new(
        input_dim,
        partition,
        chip,
        thetas,
        Encoder::Linear(encoder),
        Aggregator::Linear(decoder),
        None,
        seed,
    )
}

/// No classical encoder: features (in `[0, 1]`) are zero-padded to a multiple
/// of `l`, shuffled, scaled to `[0, pi]` and spread over `ceil(input_dim / l)`
/// chips; decoder `k -> input_dim`.
pub fn build_multichip_ae_full(input_dim: usize, l: usize, depth: usize, seed: u64) -> Result<EnsembleModel> {
    if input_dim == 0 {
        return Err(Error::InvalidArgument("input_dim must be >= 1".into()));
    }
    let chip = hardware_efficient_chip(l, depth)?;
    let k = input_dim.div_ceil(l);
    let partition = Partition::shuffled(k, l, rng::mix(seed, STREAM_PARTITION))?;
    let thetas = random_thetas(k, chip.num_trainable, seed);
    let decoder = LinearLayer::random(k, input_dim, &mut stream(seed, STREAM_DECODER));
    EnsembleModel::new(
        input_dim,
        partition,
        chip,
        thetas,
        Encoder::Scale { factor: PI },
        Aggregator::Linear(decoder),
        None,
        seed,
    )
}

/// Purely classical mirror of the hybrid autoencoders. `tanh` follows every
/// layer except the output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalAutoencoder {
    pub layers: Vec<LinearLayer>,
    pub seed: u64,
}

/// `input_dim -> n_qubits`, then `depth` hidden layers of width 32 ending in
/// `k` (`n_qubits -> 32 -> ... -> 32 -> k`), then `k -> input_dim`.
pub fn build_classical_ae(input_dim: usize, n_qubits: usize, depth: usize, k: usize, seed: u64) -> Result<ClassicalAutoencoder> {
    if input_dim == 0 || n_qubits == 0 || depth == 0 || k == 0 {
        return Err(Error::InvalidArgument("classical autoencoder dims must be >= 1".into()));
    }
    let mut dims = vec![input_dim, n_qubits];
    dims.extend(core::iter::repeat_n(32, depth - 1));
    dims.push(k);
    dims.push(input_dim);
    let mut r = stream(seed, STREAM_ENCODER);
    let layers = dims.windows(2).map(|w| LinearLayer::random(w[0], w[1], &mut r)).collect();
    Ok(ClassicalAutoencoder { layers, seed })
}

impl ClassicalAutoencoder {
    fn forward_all(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut acts = vec![x.to_vec()];
        for (i, l) in self.layers.iter().enumerate() {
            let mut y = l.forward(acts.last().expect("nonempty"))?;
            if i + 1 < self.layers.len() {
                y.iter_mut().for_each(|v| *v = libm::tanh(*v));
            }
            acts.push(y);
        }
        Ok(acts)
    }
}

/// QCNN shape: `n` wires per chip, `d` conv+pool pairs, `k` chips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcnnSpec {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub input_dim: usize,
    pub classes: usize,
}

impl QcnnSpec {
    pub fn validate(&self) -> Result<()> {
        check_width(self.n)?;
        if self.d == 0 || self.k == 0 || self.input_dim == 0 || self.classes < 2 {
            return Err(Error::InvalidArgument("qcnn needs d, k, input_dim >= 1 and >= 2 classes".into()));
        }
        if self.d >= usize::BITS as usize || !self.n.is_multiple_of(1usize << self.d) {
            return Err(Error::Divisibility { what: "qcnn wires", value: self.n, divisor: 1usize.checked_shl(self.d as u32).unwrap_or(0) });
        }
        Ok(())
    }

    /// Quantum parameters per chip: `18 d n + 3 d (n/2) + n`.
    pub fn quantum_params(&self) -> usize {
        18 * self.d * self.n + 3 * self.d * (self.n / 2) + self.n
    }

    /// Active wire counts after each pooling stage, starting with `n`.
    pub fn wire_schedule(&self) -> Vec<usize> {
        (0..=self.d).map(|t| self.n >> t).collect()
    }

    /// Raw features handled by each chip (input zero-padded to `k` blocks).
    pub fn block_len(&self) -> usize {
        self.input_dim.div_ceil(self.k)
    }
}

/// Chip program of the QCNN.
///
/// Slot layout (`n` wires, `d` stages):
/// * conv stage `t`, row `r`: 18 slots at `18 (t n + r)`, used by the pair
///   whose first wire is `r`: `U3(a) U3(b) ZZ YY XX U3(a) U3(b)` (15 slots,
///   the last 3 of the row are reserved and never read);
/// * pool stage `t`, row `r`: 3 slots at `18 d n + 3 (t n/2 + r)` for the
///   U3 on the surviving partner `2r`;
/// * final `n` slots: an RY on every wire still active at the end, indexed by
///   original wire.
///
/// Rows of wires that are inactive at a stage are never read, so their
/// gradients are identically zero.
pub fn qcnn_chip(spec: &QcnnSpec) -> Result<CircuitSpec> {
    spec.validate()?;
    let n = spec.n;
    let mut c = CircuitSpec::with_ry_encoding(n);
    let mut active: Vec<usize> = (0..n).collect();
    let pool_base = 18 * spec.d * n;
    for t in 0..spec.d {
        let m = active.len();
        let pairs = match m {
            0 | 1 => 0,
            2 => 1,
            _ => m,
        };
        for i in 0..pairs {
            let (a, b) = (active[i], active[(i + 1) % m]);
            let base = 18 * (t * n + a);
            c.push(GateOp::u3(a, base));
            c.push(GateOp::u3(b, base + 3));
            c.push(GateOp::pair(GateKind::IsingZZ, a, b, base + 6));
            c.push(GateOp::pair(GateKind::IsingYY, a, b, base + 7));
            c.push(GateOp::pair(GateKind::IsingXX, a, b, base + 8));
            c.push(GateOp::u3(a, base + 9));
            c.push(GateOp::u3(b, base + 12));
        }
        // Every second active wire is dropped; its partner gets a U3.
        let mut kept = Vec::with_capacity(m / 2);
        for j in 0..m / 2 {
            let partner = active[2 * j];
            c.push(GateOp::u3(partner, pool_base + 3 * (t * (n / 2) + partner / 2)));
            kept.push(partner);
        }
        active = kept;
    }
    let meas_base = pool_base + 3 * spec.d * (n / 2);
    for &w in &active {
        c.push(GateOp::single(GateKind::RY, w, meas_base + w));
    }
    c.num_trainable = spec.quantum_params();
    c.observables = vec![active[0]];
    c.validate()?;
    Ok(c)
}

/// QCNN ensemble: per-chip dense map of the chip's raw feature block to `n`
/// angles, the QCNN chip, mean over chips, then `1 -> classes` logits.
pub fn build_qcnn(spec: &QcnnSpec, seed: u64) -> Result<EnsembleModel> {
    let chip = qcnn_chip(spec)?;
    let b = spec.block_len();
    let mut r = stream(seed, STREAM_ENCODER);
    let encoders = (0..spec.k).map(|_| LinearLayer::random(b, spec.n, &mut r)).collect();
    let partition = Partition::shuffled(spec.k, b, rng::mix(seed, STREAM_PARTITION))?;
    let thetas = random_thetas(spec.k, chip.num_trainable, seed);
    let head = LinearLayer::random(1, spec.classes, &mut stream(seed, STREAM_DECODER));
    EnsembleModel::new(
        spec.input_dim,
        partition,
        chip,
        thetas,
        Encoder::PerChip(encoders),
        Aggregator::Mean,
        Some(head),
        seed,
    )
}

/// Random benchmark circuit on `n` wires with RY encoding: each layer puts
/// a randomly chosen RX/RY/RZ/U3 on every wire, then (for `n > 1`) a ring of
/// randomly chosen CRX/IsingXX/IsingYY/IsingZZ couplings. Structure is a
/// pure function of `seed`.
pub fn random_circuit(n: usize, depth: usize, seed: u64) -> Result<CircuitSpec> {
    if n == 0 || depth == 0 {
        return Err(Error::InvalidArgument("random circuit needs n >= 1 and depth >= 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut circ = CircuitSpec::with_ry_encoding(n);
    let mut slot = 0;
    for _ in 0..depth {
        for w in 0..n {
            let kind = [GateKind::RX, GateKind::RY, GateKind::RZ, GateKind::U3][rng.random_range(0..4)];
            if kind == GateKind::U3 {
                circ.push(GateOp::u3(w, slot));
                slot += 3;
            } else {
                circ.push(GateOp::single(kind, w, slot));
                slot += 1;
            }
        }
        if n > 1 {
            for w in 0..n {
                let kind = [GateKind::CRX, GateKind::IsingXX, GateKind::IsingYY, GateKind::IsingZZ][rng.random_range(0..4)];
                circ.push(GateOp::pair(kind, w, (w + 1) % n, slot));
                slot += 1;
            }
        }
    }
    circ.validate()?;
    Ok(circ)
}

/// Common interface for the optimizer loop.
pub trait Trainable {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn param_count(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]) -> Result<()>;
    fn predict(&self, x: &[f64], backend: &Backend) -> Result<Vec<f64>>;
    /// Loss on one sample and its gradient in [`params`](Self::params) order.
    fn loss_and_gradient(
        &self,
        x: &[f64],
        target: &[f64],
        loss: Loss,
        backend: &Backend,
        method: GradientMethod,
    ) -> Result<(f64, Vec<f64>)>;
}

impl Trainable for EnsembleModel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        EnsembleModel::output_dim(self)
    }

    fn param_count(&self) -> usize {
        EnsembleModel::param_count(self)
    }

    fn params(&self) -> Vec<f64> {
        EnsembleModel::params(self)
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        EnsembleModel::set_params(self, params)
    }

    fn predict(&self, x: &[f64], backend: &Backend) -> Result<Vec<f64>> {
        EnsembleModel::predict(self, x, backend)
    }

    fn loss_and_gradient(
        &self,
        x: &[f64],
        target: &[f64],
        loss: Loss,
        backend: &Backend,
        method: GradientMethod,
    ) -> Result<(f64, Vec<f64>)> {
        let f = self.forward(x, backend)?;
        let (value, d_out) = loss.evaluate(&f.output, target)?;
        let g = hybrid_backward(self, &f.cache, &d_out, backend, method)?;
        Ok((value, g.values))
    }
}

impl Trainable for ClassicalAutoencoder {
    fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    fn param_count(&self) -> usize {
        self.layers.iter().map(LinearLayer::param_count).sum()
    }

    fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.layers.iter().for_each(|l| l.write_params(&mut out));
        out
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch { what: "parameter vector", expected: self.param_count(), got: params.len() });
        }
        let mut rest = params;
        for l in &mut self.layers {
            rest = l.read_params(rest);
        }
        Ok(())
    }

    fn predict(&self, x: &[f64], _backend: &Backend) -> Result<Vec<f64>> {
        Ok(self.forward_all(x)?.pop().expect("nonempty"))
    }

    fn loss_and_gradient(
        &self,
        x: &[f64],
        target: &[f64],
        loss: Loss,
        _backend: &Backend,
        _method: GradientMethod,
    ) -> Result<(f64, Vec<f64>)> {
        let acts = self.forward_all(x)?;
        let (value, mut dy) = loss.evaluate(acts.last().expect("nonempty"), target)?;
        let mut grad = vec![0.0; self.param_count()];
        let mut end = grad.len();
        for (i, l) in self.layers.iter().enumerate().rev() {
            let start = end - l.param_count();
            if i + 1 < self.layers.len() {
                // tanh' = 1 - tanh^2, evaluated on the stored activation.
                for (g, a) in dy.iter_mut().zip(&acts[i + 1]) {
                    *g *= 1.0 - a * a;
                }
            }
            dy = l.backward(&acts[i], &dy, &mut grad[start..end]);
            end = start;
        }
        Ok((value, grad))
    }
}

/// Either model family behind one serializable type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(clippy::large_enum_variant)]
pub enum Model {
    Ensemble(EnsembleModel),
    Classical(ClassicalAutoencoder),
}

macro_rules! delegate {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Model::Ensemble($m) => $e,
            Model::Classical($m) => $e,
        }
    };
}

impl Trainable for Model {
    fn input_dim(&self) -> usize {
        delegate!(self, m => m.input_dim())
    }

    fn output_dim(&self) -> usize {
        delegate!(self, m => Trainable::output_dim(m))
    }

    fn param_count(&self) -> usize {
        delegate!(self, m => Trainable::param_count(m))
    }

    fn params(&self) -> Vec<f64> {
        delegate!(self, m => Trainable::params(m))
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        delegate!(self, m => Trainable::set_params(m, params))
    }

    fn predict(&self, x: &[f64], backend: &Backend) -> Result<Vec<f64>> {
        delegate!(self, m => Trainable::predict(m, x, backend))
    }

    fn loss_and_gradient(
        &self,
        x: &[f64],
        target: &[f64],
        loss: Loss,
        backend: &Backend,
        method: GradientMethod,
    ) -> Result<(f64, Vec<f64>)> {
        delegate!(self, m => m.loss_and_gradient(x, target, loss, backend, method))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ansatz_counts() {
        assert_eq!(hardware_efficient_chip(8, 2).unwrap().num_trainable, 64);
        assert_eq!(hardware_efficient_chip(2, 1).unwrap().num_trainable, 8);
        assert_eq!(hardware_efficient_chip(1, 2).unwrap().num_trainable, 6);
        assert!(hardware_efficient_chip(25, 1).is_err());
    }

    #[test]
    fn autoencoder_shapes() {
        let m = build_single_chip_ae(784, 8, 2, 0).unwrap();
        assert_eq!((m.input_dim, m.output_dim(), m.quantum_param_count()), (784, 784, 64));
        let m = build_multichip_ae_reduced(64, 8, 4, 2, 0).unwrap();
        assert_eq!((m.num_chips(), m.chip.num_qubits), (4, 2));
        assert!(build_multichip_ae_reduced(64, 8, 3, 2, 0).is_err());
        assert_eq!(build_multichip_ae_full(784, 8, 1, 0).unwrap().num_chips(), 98);
        assert_eq!(build_multichip_ae_full(3072, 12, 1, 0).unwrap().num_chips(), 256);
        assert_eq!(build_multichip_ae_full(16, 4, 1, 0).unwrap().num_chips(), 4);
        assert_eq!(build_multichip_ae_full(10, 4, 1, 0).unwrap().partition.total(), 12);
    }

    #[test]
    fn single_chip_matches_reduced_k1() {
        let a = build_single_chip_ae(12, 3, 1, 7).unwrap();
        let b = build_multichip_ae_reduced(12, 3, 1, 1, 7).unwrap();
        let x: Vec<f64> = (0..12).map(|i| i as f64 / 12.0).collect();
        assert_eq!(a.predict(&x, &Backend::Ideal).unwrap(), b.predict(&x, &Backend::Ideal).unwrap());
    }

    #[test]
    fn classical_shapes() {
        let m = build_classical_ae(784, 8, 2, 1, 0).unwrap();
        let dims: Vec<_> = m.layers.iter().map(|l| (l.in_dim, l.out_dim)).collect();
        assert_eq!(dims, vec![(784, 8), (8, 32), (32, 1), (1, 784)]);
        assert_eq!(m.param_count(), 784 * 8 + 8 + 8 * 32 + 32 + 32 + 1 + 784 + 784);
    }

    #[test]
    fn qcnn_counts_and_wires() {
        for (n, d) in [(4, 1), (8, 2), (12, 2)] {
            let s = QcnnSpec { n, d, k: 2, input_dim: 16, classes: 2 };
            assert_eq!(qcnn_chip(&s).unwrap().num_trainable, 18 * d * n + 3 * d * (n / 2) + n);
        }
        let s = QcnnSpec { n: 8, d: 2, k: 1, input_dim: 8, classes: 3 };
        assert_eq!(s.quantum_params(), 320);
        assert_eq!(s.wire_schedule(), vec![8, 4, 2]);
        let s = QcnnSpec { n: 4, d: 1, k: 4, input_dim: 16, classes: 2 };
        assert_eq!(s.quantum_params(), 82);
        assert!(QcnnSpec { n: 6, d: 2, k: 1, input_dim: 4, classes: 2 }.validate().is_err());
    }
}
