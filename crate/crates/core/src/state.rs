//! Pure-state simulation. Amplitudes are little-endian: wire `w` is bit `w`
//! of the basis index.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gate::{GateMatrix, GateOp};
use crate::math::{sqrt, C64, ONE, ZERO};
use crate::MAX_STATE_QUBITS;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0...0>` on `num_qubits` wires.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_STATE_QUBITS {
            return Err(Error::Capacity { requested: num_qubits, max: MAX_STATE_QUBITS });
        }
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[0] = ONE;
        Ok(StateVector { num_qubits, amps })
    }

    /// Wraps raw amplitudes after checking length and normalization.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(alloc::format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_STATE_QUBITS {
            return Err(Error::Capacity { requested: num_qubits, max: MAX_STATE_QUBITS });
        }
        let s = StateVector { num_qubits, amps };
        if (s.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(alloc::format!(
                "state norm {} differs from 1",
                s.norm()
            )));
        }
        Ok(s)
    }

    /// Computational basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(num_qubits)?;
        if index >= s.amps.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "basis index {index} out of range"
            )));
        }
        s.amps[0] = ZERO;
        s.amps[index] = ONE;
        Ok(s)
    }

    /// Tensor product `self (x) other`, with `self` on the low wires.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_STATE_QUBITS {
            return Err(Error::Capacity { requested: n, max: MAX_STATE_QUBITS });
        }
        let mut amps = Vec::with_capacity(1 << n);
        for &hi in &other.amps {
            for &lo in &self.amps {
                amps.push(hi * lo);
            }
        }
        Ok(StateVector { num_qubits: n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.amps.iter().map(|a| a.norm_sqr()).sum())
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        if wire >= self.num_qubits {
            return Err(Error::WireOutOfRange { wire, width: self.num_qubits });
        }
        Ok(())
    }

    /// Applies `gate` with angles read from `params`.
    pub fn apply_gate(&mut self, gate: &GateOp, params: &[f64]) -> Result<()> {
        gate.validate(self.num_qubits)?;
        let angles = gate.gather(params)?;
        self.apply_matrix(&gate.wires, &gate.matrix(&angles));
        Ok(())
    }

    /// Applies a dense matrix; wires must already be validated.
    pub(crate) fn apply_matrix(&mut self, wires: &[usize], m: &GateMatrix) {
        apply_to_slice(&mut self.amps, wires, m);
    }

    /// `<Z_wire>` in the infinite-shot limit.
    pub fn expectation_z(&self, wire: usize) -> Result<f64> {
        self.check_wire(wire)?;
        Ok(expectation_z_unchecked(&self.amps, wire))
    }

    /// `<psi| Z_wire |phi>` style contraction used by the adjoint sweep:
    /// returns `Z_wire |self>`.
    pub(crate) fn z_applied(&self, wire: usize) -> StateVector {
        let bit = 1usize << wire;
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, &a)| if i & bit == 0 { a } else { -a })
            .collect();
        StateVector { num_qubits: self.num_qubits, amps }
    }
}

pub(crate) fn expectation_z_unchecked(amps: &[C64], wire: usize) -> f64 {
    let bit = 1usize << wire;
    let mut acc = 0.0;
    for (i, a) in amps.iter().enumerate() {
        let p = a.norm_sqr();
        if i & bit == 0 {
            acc += p;
        } else {
            acc -= p;
        }
    }
    acc.clamp(-1.0, 1.0)
}

/// Applies a 1- or 2-wire matrix to an amplitude slice interpreted as a
/// register of `log2(len)` wires.
pub(crate) fn apply_to_slice(amps: &mut [C64], wires: &[usize], m: &GateMatrix) {
    match m {
        GateMatrix::One(u) => apply_one(amps, wires[0], u),
        GateMatrix::Two(u) => apply_two(amps, wires[0], wires[1], u),
    }
}

pub(crate) fn apply_one(amps: &mut [C64], wire: usize, u: &[[C64; 2]; 2]) {
    let stride = 1usize << wire;
    let len = amps.len();
    let mut base = 0;
    while base < len {
        for i in base..base + stride {
            let a = amps[i];
            let b = amps[i + stride];
            amps[i] = u[0][0] * a + u[0][1] * b;
            amps[i + stride] = u[1][0] * a + u[1][1] * b;
        }
        base += 2 * stride;
    }
}

pub(crate) fn apply_two(amps: &mut [C64], w0: usize, w1: usize, u: &[[C64; 4]; 4]) {
    let hi = 1usize << w0;
    let lo = 1usize << w1;
    let mask = hi | lo;
    for i in 0..amps.len() {
        if i & mask != 0 {
            continue;
        }
        let idx = [i, i | lo, i | hi, i | hi | lo];
        let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
        for (r, &target) in idx.iter().enumerate() {
            let row = &u[r];
            amps[target] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
    }
}
