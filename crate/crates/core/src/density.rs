//! Mixed-state simulation under per-gate depolarizing and amplitude-damping
//! noise, plus finite-shot readout.
//!
//! The matrix is stored row-major with index `(row << l) | col`. Viewed as a
//! `2l`-wire register, conjugation `U rho U^dagger` is `U` on the row wires
//! `w + l` and `conj(U)` on the column wires `w`, so the statevector kernels
//! are reused unchanged.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::error::{Error, Result};
use crate::gate::GateMatrix;
use crate::math::{sqrt, C64, ZERO};
use crate::rng;
use crate::state::{apply_to_slice, StateVector};
use crate::MAX_DENSITY_QUBITS;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    data: Vec<C64>,
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::Probability { name, value });
    }
    Ok(())
}

impl DensityMatrix {
    /// `|psi><psi|`.
    pub fn from_state(state: &StateVector) -> Result<Self> {
        let l = state.num_qubits();
        if l > MAX_DENSITY_QUBITS {
            return Err(Error::Capacity { requested: l, max: MAX_DENSITY_QUBITS });
        }
        let a = state.amplitudes();
        let dim = a.len();
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[(r << l) | c] = a[r] * a[c].conj();
            }
        }
        Ok(DensityMatrix { num_qubits: l, data })
    }

    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_DENSITY_QUBITS {
            return Err(Error::Capacity { requested: num_qubits, max: MAX_DENSITY_QUBITS });
        }
        let dim = 1usize << num_qubits;
        let mut data = vec![ZERO; dim * dim];
        data[0] = C64::new(1.0, 0.0);
        Ok(DensityMatrix { num_qubits, data })
    }

    /// `I / 2^l`.
    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        let mut dm = Self::zero(num_qubits)?;
        let dim = dm.dim();
        dm.data[0] = ZERO;
        for i in 0..dim {
            dm.data[(i << num_qubits) | i] = C64::new(1.0 / dim as f64, 0.0);
        }
        Ok(dm)
    }

    /// Builds from a row-major `dim x dim` matrix; checks trace and Hermiticity.
    pub fn from_matrix(num_qubits: usize, data: Vec<C64>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_DENSITY_QUBITS {
            return Err(Error::Capacity { requested: num_qubits, max: MAX_DENSITY_QUBITS });
        }
        let dim = 1usize << num_qubits;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                what: "density matrix entries",
                expected: dim * dim,
                got: data.len(),
            });
        }
        let dm = DensityMatrix { num_qubits, data };
        if (dm.trace().re - 1.0).abs() > 1e-9 || dm.hermiticity_error() > 1e-9 {
            return Err(Error::InvalidArgument("matrix is not a unit-trace Hermitian operator".into()));
        }
        Ok(dm)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row << self.num_qubits) | col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).fold(ZERO, |acc, i| acc + self.get(i, i))
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // rho Hermitian: Tr(rho^2) = sum |rho_ij|^2
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Largest `|rho_ij - conj(rho_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max(sqrt((self.get(r, c) - self.get(c, r).conj()).norm_sqr()));
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        crate::linalg::hermitian_eigenvalues(&self.data, self.dim())
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        if wire >= self.num_qubits {
            return Err(Error::WireOutOfRange { wire, width: self.num_qubits });
        }
        Ok(())
    }

    /// `U rho U^dagger` for a matrix acting on `wires`.
    pub(crate) fn conjugate(&mut self, wires: &[usize], m: &GateMatrix) {
        let l = self.num_qubits;
        let rows: Vec<usize> = wires.iter().map(|w| w + l).collect();
        apply_to_slice(&mut self.data, &rows, m);
        apply_to_slice(&mut self.data, wires, &m.conj());
    }

    /// Visits every 2x2 block `[[b00, b01], [b10, b11]]` of the wire's
    /// row/column bits and replaces it with `f(block)`.
    fn map_blocks(&mut self, wire: usize, f: impl Fn([C64; 4]) -> [C64; 4]) {
        let cbit = 1usize << wire;
        let rbit = 1usize << (wire + self.num_qubits);
        let mask = cbit | rbit;
        for i in 0..self.data.len() {
            if i & mask != 0 {
                continue;
            }
            let idx = [i, i | cbit, i | rbit, i | rbit | cbit];
            let out = f([self.data[idx[0]], self.data[idx[1]], self.data[idx[2]], self.data[idx[3]]]);
            for (k, &j) in idx.iter().enumerate() {
                self.data[j] = out[k];
            }
        }
    }

    /// `(1 - eps) rho + eps (X rho X + Y rho Y + Z rho Z) / 3` on one wire.
    pub fn apply_depolarizing(&mut self, wire: usize, eps: f64) -> Result<()> {
        self.check_wire(wire)?;
        check_probability("depolarizing eps", eps)?;
        if eps == 0.0 {
            return Ok(());
        }
        // Sum over {I, X, Y, Z} of P B P = 2 Tr(B) I, so the Pauli mixture is
        // (2 Tr(B) I - B) / 3 on each block.
        let keep = 1.0 - 4.0 * eps / 3.0;
        let mix = 2.0 * eps / 3.0;
        self.map_blocks(wire, |[b00, b01, b10, b11]| {
            let tr = b00 + b11;
            [b00 * keep + tr * mix, b01 * keep, b10 * keep, b11 * keep + tr * mix]
        });
        Ok(())
    }

    /// Kraus pair `K0 = diag(1, sqrt(1-g))`, `K1 = sqrt(g) |0><1|`.
    pub fn apply_amplitude_damping(&mut self, wire: usize, gamma: f64) -> Result<()> {
        self.check_wire(wire)?;
        check_probability("amplitude damping gamma", gamma)?;
        if gamma == 0.0 {
            return Ok(());
        }
        let s = sqrt(1.0 - gamma);
        self.map_blocks(wire, |[b00, b01, b10, b11]| {
            [b00 + b11 * gamma, b01 * s, b10 * s, b11 * (1.0 - gamma)]
        });
        Ok(())
    }

    /// `Tr[Z_wire rho]`.
    pub fn expectation_z(&self, wire: usize) -> Result<f64> {
        self.check_wire(wire)?;
        let bit = 1usize << wire;
        let mut acc = 0.0;
        for i in 0..self.dim() {
            let p = self.get(i, i).re;
            if i & bit == 0 {
                acc += p;
            } else {
                acc -= p;
            }
        }
        Ok(acc.clamp(-1.0, 1.0))
    }

    /// Mean of `n_cir` independent `+-1` outcomes of `Z_wire`.
    pub fn sample_shots(&self, wire: usize, n_cir: u64, seed: u64) -> Result<f64> {
        let z = self.expectation_z(wire)?;
        sample_pauli_mean(z, n_cir, seed)
    }
}

/// Shot-sampled estimate of a `+-1` observable with exact mean `expectation`.
pub fn sample_pauli_mean(expectation: f64, n_cir: u64, seed: u64) -> Result<f64> {
    if n_cir == 0 {
        return Err(Error::InvalidArgument("shot count must be at least 1".into()));
    }
    let p_plus = ((1.0 + expectation) / 2.0).clamp(0.0, 1.0);
    let mut rng = rng::seeded(seed);
    let mut plus: u64 = 0;
    for _ in 0..n_cir {
        if rng.random::<f64>() < p_plus {
            plus += 1;
        }
    }
    Ok((2.0 * plus as f64 - n_cir as f64) / n_cir as f64)
}

/// Per-gate noise. Channels follow every gate on exactly that gate's wires:
/// depolarizing first, then amplitude damping.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    pub depolarizing: f64,
    pub amplitude_damping: f64,
}

impl NoiseModel {
    pub fn new(depolarizing: f64, amplitude_damping: f64) -> Result<Self> {
        check_probability("depolarizing eps", depolarizing)?;
        check_probability("amplitude damping gamma", amplitude_damping)?;
        Ok(NoiseModel { depolarizing, amplitude_damping })
    }

    pub fn noiseless() -> Self {
        NoiseModel::default()
    }

    pub fn is_noiseless(&self) -> bool {
        self.depolarizing == 0.0 && self.amplitude_damping == 0.0
    }
}

/// Runs the circuit as a sequence of noisy gates `E_i . U_i`.
pub fn run_noisy_circuit(
    circuit: &CircuitSpec,
    enc: &[f64],
    theta: &[f64],
    noise: &NoiseModel,
) -> Result<DensityMatrix> {
    run_noisy_offset(circuit, enc, theta, noise, None)
}

pub(crate) fn run_noisy_offset(
    circuit: &CircuitSpec,
    enc: &[f64],
    theta: &[f64],
    noise: &NoiseModel,
    offset: Option<crate::circuit::AngleOffset>,
) -> Result<DensityMatrix> {
    use crate::circuit::Stage;
    NoiseModel::new(noise.depolarizing, noise.amplitude_damping)?;
    if circuit.num_qubits > MAX_DENSITY_QUBITS {
        return Err(Error::Capacity { requested: circuit.num_qubits, max: MAX_DENSITY_QUBITS });
    }
    circuit.check_lengths(enc, theta)?;
    let mut dm = DensityMatrix::zero(circuit.num_qubits)?;
    for (stage, ops, params) in [
        (Stage::Encoding, &circuit.encoding_ops, enc),
        (Stage::Trainable, &circuit.trainable_ops, theta),
    ] {
        for (g, op) in ops.iter().enumerate() {
            op.validate(circuit.num_qubits)?;
            let mut angles = op.gather(params)?;
            if let Some(o) = offset {
                if o.stage == stage && o.gate == g {
                    angles[o.position] += o.delta;
                }
            }
            dm.conjugate(&op.wires, &op.matrix(&angles));
            for &w in &op.wires {
                dm.apply_depolarizing(w, noise.depolarizing)?;
                dm.apply_amplitude_damping(w, noise.amplitude_damping)?;
            }
        }
    }
    Ok(dm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{GateKind, GateOp};
    use crate::math::{FRAC_PI_2, PI};

    fn plus_state() -> StateVector {
        let h = 1.0 / sqrt(2.0);
        StateVector::from_amplitudes(vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap()
    }

    /// Arbitrary single-qubit mixed state from a Bloch vector.
    fn bloch(x: f64, y: f64, z: f64) -> DensityMatrix {
        DensityMatrix::from_matrix(
            1,
            vec![
                C64::new((1.0 + z) / 2.0, 0.0),
                C64::new(x / 2.0, -y / 2.0),
                C64::new(x / 2.0, y / 2.0),
                C64::new((1.0 - z) / 2.0, 0.0),
            ],
        )
        .unwrap()
    }

    /// Independent 2x2 oracle: explicit Kraus sum for the depolarizing channel.
    fn depolarize_oracle(rho: [[C64; 2]; 2], eps: f64) -> [[C64; 2]; 2] {
        let i = C64::new(0.0, 1.0);
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        let paulis = [[[z, o], [o, z]], [[z, -i], [i, z]], [[o, z], [z, -o]]];
        let mut out = rho.map(|r| r.map(|v| v * (1.0 - eps)));
        for p in paulis {
            for r in 0..2 {
                for c in 0..2 {
                    let mut acc = z;
                    for a in 0..2 {
                        for b in 0..2 {
                            acc += p[r][a] * rho[a][b] * p[c][b].conj();
                        }
                    }
                    out[r][c] += acc * (eps / 3.0);
                }
            }
        }
        out
    }

    #[test]
    fn to_density_examples() {
        let dm = DensityMatrix::from_state(&StateVector::zero(1).unwrap()).unwrap();
        assert_eq!(dm.entries(), &[C64::new(1.0, 0.0), ZERO, ZERO, ZERO]);
        let dm = DensityMatrix::from_state(&plus_state()).unwrap();
        for v in dm.entries() {
            assert!((v.re - 0.5).abs() < 1e-15 && v.im.abs() < 1e-15);
        }
        assert!((dm.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn depolarizing_examples() {
        let mut dm = bloch(0.3, -0.2, 0.8);
        let before = dm.clone();
        dm.apply_depolarizing(0, 0.0).unwrap();
        assert_eq!(dm, before);

        let mut dm = bloch(0.3, -0.2, 0.8);
        dm.apply_depolarizing(0, 0.75).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        for (a, b) in dm.entries().iter().zip(mixed.entries()) {
            assert!((a - b).l1_norm() < 1e-15);
        }
        assert!(dm.expectation_z(0).unwrap().abs() < 1e-15);

        let mut dm = DensityMatrix::maximally_mixed(2).unwrap();
        dm.apply_depolarizing(1, 0.37).unwrap();
        assert_eq!(dm, DensityMatrix::maximally_mixed(2).unwrap());
    }

    #[test]
    fn depolarizing_matches_kraus_oracle() {
        for eps in [0.01, 0.2, 0.75, 1.0] {
            let mut dm = bloch(0.5, 0.4, -0.3);
            let rho = [[dm.get(0, 0), dm.get(0, 1)], [dm.get(1, 0), dm.get(1, 1)]];
            let want = depolarize_oracle(rho, eps);
            dm.apply_depolarizing(0, eps).unwrap();
            for r in 0..2 {
                for c in 0..2 {
                    assert!((dm.get(r, c) - want[r][c]).l1_norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn amplitude_damping_examples() {
        let one = StateVector::basis(1, 1).unwrap();
        let mut dm = DensityMatrix::from_state(&one).unwrap();
        let before = dm.clone();
        dm.apply_amplitude_damping(0, 0.0).unwrap();
        assert_eq!(dm, before);

        dm.apply_amplitude_damping(0, 1.0).unwrap();
        assert_eq!(dm, DensityMatrix::zero(1).unwrap());

        let mut dm = DensityMatrix::from_state(&one).unwrap();
        dm.apply_amplitude_damping(0, 0.5).unwrap();
        assert!((dm.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((dm.get(1, 1).re - 0.5).abs() < 1e-15);
        assert!(dm.get(0, 1).l1_norm() < 1e-15);
    }

    #[test]
    fn channel_argument_errors() {
        let mut dm = DensityMatrix::zero(1).unwrap();
        assert!(matches!(dm.apply_depolarizing(1, 0.1), Err(Error::WireOutOfRange { .. })));
        assert!(matches!(dm.apply_depolarizing(0, 1.5), Err(Error::Probability { .. })));
        assert!(matches!(dm.apply_amplitude_damping(0, -0.1), Err(Error::Probability { .. })));
    }

    #[test]
    fn noisy_run_examples() {
        let mut c = CircuitSpec::with_ry_encoding(1);
        c.push(GateOp::single(GateKind::RY, 0, 0));
        c.encoding_ops.clear();
        c.num_encoding = 0;
        let noise = NoiseModel::new(0.75, 0.0).unwrap();
        let dm = run_noisy_circuit(&c, &[], &[FRAC_PI_2], &noise).unwrap();
        assert!(dm.expectation_z(0).unwrap().abs() < 1e-15);

        let mut c = CircuitSpec::with_ry_encoding(2);
        c.push(GateOp::single(GateKind::RX, 0, 0));
        c.push(GateOp::pair(GateKind::CRX, 0, 1, 1));
        let dm = run_noisy_circuit(&c, &[0.3, 1.2], &[0.7, PI / 3.0], &NoiseModel::new(0.05, 0.02).unwrap())
            .unwrap();
        assert!((dm.trace().re - 1.0).abs() < 1e-9);
        assert!(dm.hermiticity_error() < 1e-9);
    }

    #[test]
    fn noiseless_run_matches_pure_state() {
        let mut c = CircuitSpec::with_ry_encoding(3);
        c.push(GateOp::u3(0, 0));
        c.push(GateOp::pair(GateKind::IsingXX, 0, 2, 3));
        c.push(GateOp::pair(GateKind::CRX, 2, 1, 4));
        let enc = [0.4, 2.0, -1.0];
        let theta = [0.3, 1.1, -0.5, 0.9, 2.2];
        let pure = DensityMatrix::from_state(&c.run(&enc, &theta).unwrap()).unwrap();
        let mixed = run_noisy_circuit(&c, &enc, &theta, &NoiseModel::noiseless()).unwrap();
        for (a, b) in pure.entries().iter().zip(mixed.entries()) {
            assert!((a - b).l1_norm() < 1e-10);
        }
    }

    #[test]
    fn width_cap() {
        let c = CircuitSpec::with_ry_encoding(13);
        assert!(matches!(
            run_noisy_circuit(&c, &[0.0; 13], &[], &NoiseModel::noiseless()),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn shots_on_pure_zero_are_exact() {
        let dm = DensityMatrix::zero(1).unwrap();
        for n in [1, 7, 1000] {
            assert_eq!(dm.sample_shots(0, n, 3).unwrap(), 1.0);
        }
        assert!(dm.sample_shots(0, 0, 3).is_err());
    }

    #[test]
    fn shots_concentrate_on_mixed_state() {
        // 3 sigma for n = 1e5 is 3 / sqrt(1e5) ~ 0.0095, inside the 0.02 bound.
        let dm = DensityMatrix::maximally_mixed(1).unwrap();
        let m = dm.sample_shots(0, 100_000, 42).unwrap();
        assert!(m.abs() < 0.02, "{m}");
        assert_eq!(m, dm.sample_shots(0, 100_000, 42).unwrap());
    }

    #[test]
    fn shot_variance_follows_binomial() {
        let z: f64 = 0.4;
        let n = 1000;
        let reps: Vec<f64> =
            (0..200).map(|r| sample_pauli_mean(z, n, crate::rng::mix(5, r)).unwrap()).collect();
        let var = crate::math::sample_variance(&reps);
        let want = (1.0 - z * z) / n as f64;
        assert!((var / want - 1.0).abs() < 0.25, "{var} vs {want}");
    }
}
