//! Circuit programs: an encoding block fed by data angles followed by a
//! trainable block fed by `theta`, read out through single-wire Pauli-Z.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{GateKind, GateOp};
use crate::state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Encoding,
    Trainable,
}

/// Offsets one angle of one gate occurrence. Parameter-shift and finite
/// differences are built on this.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleOffset {
    pub stage: Stage,
    pub gate: usize,
    pub position: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub num_qubits: usize,
    pub num_encoding: usize,
    pub num_trainable: usize,
    pub encoding_ops: Vec<GateOp>,
    pub trainable_ops: Vec<GateOp>,
    /// Wires read out with Pauli-Z; the first one is the circuit's output.
    pub observables: Vec<usize>,
}

impl CircuitSpec {
    /// Empty program with RY encoding of one angle per wire.
    pub fn with_ry_encoding(num_qubits: usize) -> Self {
        CircuitSpec {
            num_qubits,
            num_encoding: num_qubits,
            num_trainable: 0,
            encoding_ops: (0..num_qubits).map(|w| GateOp::single(GateKind::RY, w, w)).collect(),
            trainable_ops: Vec::new(),
            observables: alloc::vec![0],
        }
    }

    /// Appends a trainable gate, growing `num_trainable` to cover its slots.
    pub fn push(&mut self, op: GateOp) {
        if let Some(&max) = op.slots.iter().max() {
            self.num_trainable = self.num_trainable.max(max + 1);
        }
        self.trainable_ops.push(op);
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 || self.num_qubits > crate::MAX_STATE_QUBITS {
            return Err(Error::Capacity {
                requested: self.num_qubits,
                max: crate::MAX_STATE_QUBITS,
            });
        }
        for (ops, count) in [
            (&self.encoding_ops, self.num_encoding),
            (&self.trainable_ops, self.num_trainable),
        ] {
            for op in ops {
                op.validate(self.num_qubits)?;
                if let Some(&slot) = op.slots.iter().find(|&&s| s >= count) {
                    return Err(Error::InvalidSlot { slot, count });
                }
            }
        }
        if self.observables.is_empty() {
            return Err(Error::InvalidArgument("circuit has no observables".into()));
        }
        for &w in &self.observables {
            if w >= self.num_qubits {
                return Err(Error::WireOutOfRange { wire: w, width: self.num_qubits });
            }
        }
        Ok(())
    }

    pub fn output_wire(&self) -> usize {
        self.observables[0]
    }

    pub fn gate_count(&self) -> usize {
        self.encoding_ops.len() + self.trainable_ops.len()
    }

    pub(crate) fn check_lengths(&self, enc: &[f64], theta: &[f64]) -> Result<()> {
        if enc.len() != self.num_encoding {
            return Err(Error::DimensionMismatch {
                what: "encoding angles",
                expected: self.num_encoding,
                got: enc.len(),
            });
        }
        if theta.len() != self.num_trainable {
            return Err(Error::DimensionMismatch {
                what: "trainable parameters",
                expected: self.num_trainable,
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Gate occurrences `(stage, gate index, angle position)` that read `slot`.
    pub fn occurrences(&self, stage: Stage, slot: usize) -> Vec<(usize, usize)> {
        let ops = match stage {
            Stage::Encoding => &self.encoding_ops,
            Stage::Trainable => &self.trainable_ops,
        };
        let mut out = Vec::new();
        for (g, op) in ops.iter().enumerate() {
            for (p, &s) in op.slots.iter().enumerate() {
                if s == slot {
                    out.push((g, p));
                }
            }
        }
        out
    }

    /// `|0...0>` -> encoding ops -> trainable ops.
    pub fn run(&self, enc: &[f64], theta: &[f64]) -> Result<StateVector> {
        self.run_offset(enc, theta, None)
    }

    pub fn run_offset(
        &self,
        enc: &[f64],
        theta: &[f64],
        offset: Option<AngleOffset>,
    ) -> Result<StateVector> {
        self.check_lengths(enc, theta)?;
        let mut state = StateVector::zero(self.num_qubits)?;
        for (stage, ops, params) in [
            (Stage::Encoding, &self.encoding_ops, enc),
            (Stage::Trainable, &self.trainable_ops, theta),
        ] {
            for (g, op) in ops.iter().enumerate() {
                op.validate(self.num_qubits)?;
                let mut angles = op.gather(params)?;
                if let Some(o) = offset {
                    if o.stage == stage && o.gate == g {
                        angles[o.position] += o.delta;
                    }
                }
                state.apply_matrix(&op.wires, &op.matrix(&angles));
            }
        }
        Ok(state)
    }

    /// Output expectation `<Z>` on the first observable.
    pub fn expectation(&self, enc: &[f64], theta: &[f64]) -> Result<f64> {
        self.run(enc, theta)?.expectation_z(self.output_wire())
    }

    /// Every observable's `<Z>`, in declaration order.
    pub fn expectations(&self, enc: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        let s = self.run(enc, theta)?;
        self.observables.iter().map(|&w| s.expectation_z(w)).collect()
    }
}

/// Applies `RY(features[j])` on wire `j` for every wire.
pub fn encode_ry(state: &StateVector, features: &[f64]) -> Result<StateVector> {
    if features.len() != state.num_qubits() {
        return Err(Error::DimensionMismatch {
            what: "features",
            expected: state.num_qubits(),
            got: features.len(),
        });
    }
    let mut out = state.clone();
    for (w, _) in features.iter().enumerate() {
        out.apply_gate(&GateOp::single(GateKind::RY, w, w), features)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{FRAC_PI_2, PI};

    fn small_circuit() -> CircuitSpec {
        let mut c = CircuitSpec::with_ry_encoding(2);
        c.push(GateOp::single(GateKind::RX, 0, 0));
        c.push(GateOp::pair(GateKind::CRX, 0, 1, 1));
        c.push(GateOp::u3(1, 2));
        c
    }

    #[test]
    fn encode_ry_examples() {
        let z = StateVector::zero(2).unwrap();
        assert_eq!(encode_ry(&z, &[0.0, 0.0]).unwrap(), z);
        let one = StateVector::zero(1).unwrap();
        let s = encode_ry(&one, &[PI]).unwrap();
        assert!((s.expectation_z(0).unwrap() + 1.0).abs() < 1e-12);
        let s = encode_ry(&z, &[FRAC_PI_2, FRAC_PI_2]).unwrap();
        assert!(s.expectation_z(0).unwrap().abs() < 1e-12);
        assert!(s.expectation_z(1).unwrap().abs() < 1e-12);
        assert!(matches!(encode_ry(&z, &[0.1]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn empty_trainable_matches_encoding() {
        let c = CircuitSpec::with_ry_encoding(3);
        let x = [0.2, 1.0, 2.5];
        let direct = encode_ry(&StateVector::zero(3).unwrap(), &x).unwrap();
        assert_eq!(c.run(&x, &[]).unwrap(), direct);
    }

    #[test]
    fn zero_angles_give_zero_state() {
        let c = small_circuit();
        let s = c.run(&[0.0; 2], &[0.0; 5]).unwrap();
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slot_count_mismatch() {
        let c = small_circuit();
        assert!(matches!(c.run(&[0.0; 2], &[0.0; 4]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(c.run(&[0.0; 3], &[0.0; 5]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn validate_catches_bad_slot() {
        let mut c = small_circuit();
        c.num_trainable = 2;
        assert!(matches!(c.validate(), Err(Error::InvalidSlot { .. })));
        let mut c = small_circuit();
        c.observables.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn occurrences_lists_every_use() {
        let mut c = small_circuit();
        c.push(GateOp::single(GateKind::RZ, 1, 0));
        assert_eq!(c.occurrences(Stage::Trainable, 0), alloc::vec![(0, 0), (3, 0)]);
        assert_eq!(c.occurrences(Stage::Trainable, 3), alloc::vec![(2, 1)]);
    }
}
