//! Entanglement, trainability and noise metrics.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::density::{run_noisy_circuit, NoiseModel};
use crate::error::{Error, Result};
use crate::gradients::{param_shift, Backend};
use crate::linalg::hermitian_eigenvalues;
use crate::math::{log2, mean, sample_variance, CompensatedSum, C64, TAU, ZERO};
use crate::rng::{self, Rng};
use crate::state::StateVector;

/// Per-epoch record of a training run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub test_loss: f64,
    pub gen_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ent_capability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_variance: Option<f64>,
}

/// Squared bias plus shot variance of a shot-mean Pauli-Z estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    /// Signed `noisy - ideal`.
    pub bias: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub mse: f64,
    pub n_cir: u64,
}

impl ErrorDecomposition {
    pub fn new(bias: f64, variance: f64, n_cir: u64) -> Self {
        ErrorDecomposition { bias, bias_sq: bias * bias, variance, mse: bias * bias + variance, n_cir }
    }

    /// Decomposition of the mean of independent chip estimators.
    pub fn averaged(parts: &[ErrorDecomposition]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("no chip decompositions to average".into()));
        }
        let k = parts.len() as f64;
        let bias = parts.iter().map(|p| p.bias).sum::<f64>() / k;
        let variance = parts.iter().map(|p| p.variance).sum::<f64>() / (k * k);
        Ok(Self::new(bias, variance, parts[0].n_cir))
    }
}

fn check_wire(state: &StateVector, wire: usize) -> Result<()> {
    if wire >= state.num_qubits() {
        return Err(Error::WireOutOfRange { wire, width: state.num_qubits() });
    }
    Ok(())
}

/// Single-qubit reduced state of wire `j`.
pub fn reduced_density_qubit(state: &StateVector, j: usize) -> Result<[[C64; 2]; 2]> {
    check_wire(state, j)?;
    let bit = 1usize << j;
    let (mut r00, mut r11, mut r01) = (0.0, 0.0, ZERO);
    for (i, a) in state.amplitudes().iter().enumerate() {
        if i & bit == 0 {
            let b = state.amplitudes()[i | bit];
            r00 += a.norm_sqr();
            r11 += b.norm_sqr();
            r01 += a * b.conj();
        }
    }
    Ok([[C64::new(r00, 0.0), r01], [r01.conj(), C64::new(r11, 0.0)]])
}

/// Reduced state on `subset` as a row-major matrix; `subset[0]` is the low
/// bit of the reduced index.
pub fn reduced_density(state: &StateVector, subset: &[usize]) -> Result<(usize, Vec<C64>)> {
    let n = state.num_qubits();
    let mut mask = 0usize;
    for &w in subset {
        check_wire(state, w)?;
        if mask & (1 << w) != 0 {
            return Err(Error::DuplicateWire { wire: w });
        }
        mask |= 1 << w;
    }
    let rest: Vec<usize> = (0..n).filter(|w| mask & (1 << w) == 0).collect();
    let da = 1usize << subset.len();
    let db = 1usize << rest.len();
    let mut m = vec![ZERO; da * db];
    for (i, &amp) in state.amplitudes().iter().enumerate() {
        let a = subset.iter().enumerate().fold(0, |acc, (p, &w)| acc | (((i >> w) & 1) << p));
        let b = rest.iter().enumerate().fold(0, |acc, (p, &w)| acc | (((i >> w) & 1) << p));
        m[a * db + b] = amp;
    }
    let mut rho = vec![ZERO; da * da];
    for r in 0..da {
        for c in r..da {
            let v = (0..db).fold(ZERO, |acc, b| acc + m[r * db + b] * m[c * db + b].conj());
            rho[r * da + c] = v;
            rho[c * da + r] = v.conj();
        }
    }
    Ok((da, rho))
}

fn qubit_purity(rho: &[[C64; 2]; 2]) -> f64 {
    rho[0][0].re * rho[0][0].re + rho[1][1].re * rho[1][1].re + 2.0 * rho[0][1].norm_sqr()
}

/// `sum_j (1 - Tr rho_j^2)` over all wires.
pub fn purity_deficit(state: &StateVector) -> f64 {
    (0..state.num_qubits())
        .map(|j| 1.0 - qubit_purity(&reduced_density_qubit(state, j).expect("wire in range")))
        .sum()
}

/// Meyer-Wallach `Q = (2/n) sum_j (1 - Tr rho_j^2)`; zero for one qubit.
pub fn meyer_wallach_q(state: &StateVector) -> f64 {
    let n = state.num_qubits();
    if n < 2 {
        return 0.0;
    }
    2.0 / n as f64 * purity_deficit(state)
}

/// Von Neumann entropy (bits) of the reduced state on `subset`.
pub fn bipartite_entropy(state: &StateVector, subset: &[usize]) -> Result<f64> {
    if subset.is_empty() || subset.len() >= state.num_qubits() {
        return Err(Error::InvalidArgument("entropy cut must be a nonempty proper subset".into()));
    }
    let (dim, rho) = reduced_density(state, subset)?;
    let s: f64 = hermitian_eigenvalues(&rho, dim)
        .into_iter()
        .filter(|&p| p > 1e-14)
        .map(|p| -p * log2(p))
        .sum();
    Ok(s.max(0.0))
}

/// Mean Meyer-Wallach score over random angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglingCapability {
    /// Sample mean of `Q` (per-chip mean for ensembles), in `[0, 1]`.
    pub normalized: f64,
    /// Sample mean of `sum_j (1 - Tr rho_j^2)` over all `n` qubits.
    pub unnormalized: f64,
    pub samples: usize,
}

fn uniform_angles(rng: &mut Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(0.0..TAU)).collect()
}

/// Random encoding and trainable angles for `k` copies of `chip`.
fn draw_chips(chip: &CircuitSpec, k: usize, rng: &mut Rng) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..k)
        .map(|_| {
            let enc = uniform_angles(rng, chip.num_encoding);
            let theta = uniform_angles(rng, chip.num_trainable);
            (enc, theta)
        })
        .collect()
}

/// Entangling capability of a `k`-chip ensemble of `chip` (use `k = 1` for a
/// single circuit). Each sample draws every angle uniformly from `[0, 2pi)`.
pub fn entangling_capability(chip: &CircuitSpec, k: usize, num_samples: usize, seed: u64) -> Result<EntanglingCapability> {
    if num_samples == 0 || k == 0 {
        return Err(Error::InvalidArgument("entangling capability needs S >= 1 and k >= 1".into()));
    }
    chip.validate()?;
    let mut q_sum = CompensatedSum::default();
    let mut d_sum = CompensatedSum::default();
    for s in 0..num_samples {
        let mut rng = rng::seeded(rng::mix(seed, s as u64));
        let mut q = 0.0;
        let mut deficit = 0.0;
        for (enc, theta) in draw_chips(chip, k, &mut rng) {
            let state = chip.run(&enc, &theta)?;
            q += meyer_wallach_q(&state);
            deficit += purity_deficit(&state);
        }
        q_sum.add(q / k as f64);
        d_sum.add(deficit);
    }
    Ok(EntanglingCapability {
        normalized: q_sum.value() / num_samples as f64,
        unnormalized: d_sum.value() / num_samples as f64,
        samples: num_samples,
    })
}

/// Which derivative [`gradient_variance`] samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientProbe {
    /// Regression target `y` of the loss `(sum_c f_c - y)^2`.
    pub target: f64,
    /// Average the per-slot variance over all of chip 0's slots instead of
    /// probing slot 0 only.
    pub all_slots: bool,
}

impl Default for GradientProbe {
    fn default() -> Self {
        GradientProbe { target: 0.0, all_slots: false }
    }
}

/// Sample variance of `dL/dtheta*` where `theta*` is slot 0 of chip 0 and
/// `L = (sum_c f_c - y)^2` over a `k`-chip ensemble of `chip` (a weighted
/// sum with unit weights).
pub fn gradient_variance(chip: &CircuitSpec, k: usize, num_samples: usize, seed: u64, probe: &GradientProbe) -> Result<f64> {
    if num_samples < 30 {
        return Err(Error::InvalidArgument("gradient variance needs at least 30 samples".into()));
    }
    if k == 0 || chip.num_trainable == 0 {
        return Err(Error::InvalidArgument("gradient variance needs k >= 1 and a trainable slot".into()));
    }
    chip.validate()?;
    let slots = if probe.all_slots { chip.num_trainable } else { 1 };
    let mut per_slot = vec![Vec::with_capacity(num_samples); slots];
    for s in 0..num_samples {
        let mut rng = rng::seeded(rng::mix(seed, s as u64));
        let draws = draw_chips(chip, k, &mut rng);
        let mut total = 0.0;
        for (enc, theta) in &draws {
            total += chip.expectation(enc, theta)?;
        }
        let (enc, theta) = &draws[0];
        for (slot, samples) in per_slot.iter_mut().enumerate() {
            let df = param_shift(chip, enc, theta, slot, &Backend::Ideal)?;
            samples.push(2.0 * (total - probe.target) * df);
        }
    }
    Ok(mean(&per_slot.iter().map(|v| sample_variance(v)).collect::<Vec<_>>()))
}

/// `|noisy - ideal|` of two validation losses.
pub fn quantum_error(val_loss_noisy: f64, val_loss_ideal: f64) -> f64 {
    (val_loss_noisy - val_loss_ideal).abs()
}

/// Bias of the noisy expectation and shot variance `(1 - <Z>^2) / n_cir`.
pub fn error_decomposition(
    circuit: &CircuitSpec,
    enc: &[f64],
    theta: &[f64],
    noise: &NoiseModel,
    n_cir: u64,
) -> Result<ErrorDecomposition> {
    if n_cir == 0 {
        return Err(Error::InvalidArgument("n_cir must be >= 1".into()));
    }
    let ideal = circuit.expectation(enc, theta)?;
    let noisy = run_noisy_circuit(circuit, enc, theta, noise)?.expectation_z(circuit.output_wire())?;
    Ok(ErrorDecomposition::new(noisy - ideal, (1.0 - noisy * noisy) / n_cir as f64, n_cir))
}
