//! Gate set and unitary conventions.
//!
//! Every rotation is generated in half-angle form `exp(-i phi P / 2)` with
//! `P^2 = I`, so the two-term parameter-shift rule with shift `pi/2` is exact
//! for each angle. Two-qubit matrices are written in the basis
//! `|b(w0) b(w1)>` with `wires[0]` as the high bit of the local index.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{cis, cos, sin, C64, I, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    /// Controlled RX; `wires[0]` is the control.
    CRX,
    U3,
    IsingXX,
    IsingYY,
    IsingZZ,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::U3 => 1,
            _ => 2,
        }
    }

    pub fn num_params(self) -> usize {
        match self {
            GateKind::U3 => 3,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::CRX => "CRX",
            GateKind::U3 => "U3",
            GateKind::IsingXX => "IsingXX",
            GateKind::IsingYY => "IsingYY",
            GateKind::IsingZZ => "IsingZZ",
        }
    }
}

/// Dense gate matrix on one or two wires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateMatrix {
    One([[C64; 2]; 2]),
    Two([[C64; 4]; 4]),
}

impl GateMatrix {
    pub fn adjoint(&self) -> GateMatrix {
        match self {
            GateMatrix::One(m) => {
                let mut out = [[ZERO; 2]; 2];
                for (r, row) in out.iter_mut().enumerate() {
                    for (c, v) in row.iter_mut().enumerate() {
                        *v = m[c][r].conj();
                    }
                }
                GateMatrix::One(out)
            }
            GateMatrix::Two(m) => {
                let mut out = [[ZERO; 4]; 4];
                for (r, row) in out.iter_mut().enumerate() {
                    for (c, v) in row.iter_mut().enumerate() {
                        *v = m[c][r].conj();
                    }
                }
                GateMatrix::Two(out)
            }
        }
    }

    pub fn conj(&self) -> GateMatrix {
        match self {
            GateMatrix::One(m) => GateMatrix::One(m.map(|row| row.map(|v| v.conj()))),
            GateMatrix::Two(m) => GateMatrix::Two(m.map(|row| row.map(|v| v.conj()))),
        }
    }
}

/// One gate application: kind, wires and the parameter slots it reads.
///
/// `inverse` applies the adjoint unitary; folding uses it to build `U^dagger`
/// without re-deriving angle conventions (the U3 adjoint is not a plain
/// angle negation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub wires: Vec<usize>,
    pub slots: Vec<usize>,
    #[serde(default)]
    pub inverse: bool,
}

impl GateOp {
    pub fn new(kind: GateKind, wires: &[usize], slots: &[usize]) -> Result<Self> {
        let op = GateOp { kind, wires: wires.to_vec(), slots: slots.to_vec(), inverse: false };
        op.check_shape()?;
        Ok(op)
    }

    pub fn single(kind: GateKind, wire: usize, slot: usize) -> Self {
        GateOp { kind, wires: alloc::vec![wire], slots: alloc::vec![slot], inverse: false }
    }

    pub fn pair(kind: GateKind, w0: usize, w1: usize, slot: usize) -> Self {
        GateOp { kind, wires: alloc::vec![w0, w1], slots: alloc::vec![slot], inverse: false }
    }

    pub fn u3(wire: usize, first_slot: usize) -> Self {
        GateOp {
            kind: GateKind::U3,
            wires: alloc::vec![wire],
            slots: alloc::vec![first_slot, first_slot + 1, first_slot + 2],
            inverse: false,
        }
    }

    pub fn inverted(&self) -> Self {
        let mut op = self.clone();
        op.inverse = !op.inverse;
        op
    }

    fn check_shape(&self) -> Result<()> {
        if self.wires.len() != self.kind.arity() {
            return Err(Error::SlotCount {
                kind: "wires",
                expected: self.kind.arity(),
                got: self.wires.len(),
            });
        }
        if self.slots.len() != self.kind.num_params() {
            return Err(Error::SlotCount {
                kind: self.kind.name(),
                expected: self.kind.num_params(),
                got: self.slots.len(),
            });
        }
        if self.wires.len() == 2 && self.wires[0] == self.wires[1] {
            return Err(Error::DuplicateWire { wire: self.wires[0] });
        }
        Ok(())
    }

    /// Shape checks plus wire bounds for a register of `width` qubits.
    pub fn validate(&self, width: usize) -> Result<()> {
        self.check_shape()?;
        for &w in &self.wires {
            if w >= width {
                return Err(Error::WireOutOfRange { wire: w, width });
            }
        }
        Ok(())
    }

    /// Reads this gate's angles out of `params`.
    pub fn gather(&self, params: &[f64]) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for (dst, &slot) in out.iter_mut().zip(&self.slots) {
            *dst = *params
                .get(slot)
                .ok_or(Error::MissingAngle { slot, available: params.len() })?;
        }
        Ok(out)
    }

    pub fn matrix(&self, angles: &[f64; 3]) -> GateMatrix {
        let m = base_matrix(self.kind, angles);
        if self.inverse {
            m.adjoint()
        } else {
            m
        }
    }

    /// Derivative of the gate matrix with respect to its `position`-th angle.
    pub fn derivative(&self, angles: &[f64; 3], position: usize) -> GateMatrix {
        let d = base_derivative(self.kind, angles, position);
        if self.inverse {
            d.adjoint()
        } else {
            d
        }
    }
}

fn rx(phi: f64) -> [[C64; 2]; 2] {
    let (c, s) = (cos(phi / 2.0), sin(phi / 2.0));
    [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
}

fn ry(phi: f64) -> [[C64; 2]; 2] {
    let (c, s) = (cos(phi / 2.0), sin(phi / 2.0));
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

fn rz(phi: f64) -> [[C64; 2]; 2] {
    [[cis(-phi / 2.0), ZERO], [ZERO, cis(phi / 2.0)]]
}

/// `U3(theta, phi, lambda) = [[cos, -e^{i lambda} sin], [e^{i phi} sin, e^{i(phi+lambda)} cos]]`
/// with half angles; equals `RZ(phi) RY(theta) RZ(lambda)` up to global phase.
fn u3(theta: f64, phi: f64, lambda: f64) -> [[C64; 2]; 2] {
    let (c, s) = (cos(theta / 2.0), sin(theta / 2.0));
    [
        [C64::new(c, 0.0), -cis(lambda) * s],
        [cis(phi) * s, cis(phi + lambda) * c],
    ]
}

/// `exp(-i phi P/2)` for a two-qubit Pauli string `P`, given `P` as a 4x4 matrix.
fn ising(phi: f64, p: [[C64; 4]; 4]) -> [[C64; 4]; 4] {
    let (c, s) = (cos(phi / 2.0), sin(phi / 2.0));
    let mut out = [[ZERO; 4]; 4];
    for r in 0..4 {
        for col in 0..4 {
            let id = if r == col { ONE } else { ZERO };
            out[r][col] = id * c - I * s * p[r][col];
        }
    }
    out
}

fn pauli_xx() -> [[C64; 4]; 4] {
    let mut p = [[ZERO; 4]; 4];
    for i in 0..4 {
        p[i][3 - i] = ONE;
    }
    p
}

fn pauli_yy() -> [[C64; 4]; 4] {
    // Y (x) Y = antidiag(-1, 1, 1, -1)
    let mut p = [[ZERO; 4]; 4];
    p[0][3] = -ONE;
    p[1][2] = ONE;
    p[2][1] = ONE;
    p[3][0] = -ONE;
    p
}

fn pauli_zz() -> [[C64; 4]; 4] {
    let mut p = [[ZERO; 4]; 4];
    for (i, sign) in [1.0, -1.0, -1.0, 1.0].into_iter().enumerate() {
        p[i][i] = C64::new(sign, 0.0);
    }
    p
}

fn controlled(m: [[C64; 2]; 2]) -> [[C64; 4]; 4] {
    let mut out = [[ZERO; 4]; 4];
    out[0][0] = ONE;
    out[1][1] = ONE;
    out[2][2] = m[0][0];
    out[2][3] = m[0][1];
    out[3][2] = m[1][0];
    out[3][3] = m[1][1];
    out
}

fn controlled_derivative(d: [[C64; 2]; 2]) -> [[C64; 4]; 4] {
    let mut out = [[ZERO; 4]; 4];
    out[2][2] = d[0][0];
    out[2][3] = d[0][1];
    out[3][2] = d[1][0];
    out[3][3] = d[1][1];
    out
}

pub(crate) fn base_matrix(kind: GateKind, a: &[f64; 3]) -> GateMatrix {
    match kind {
        GateKind::RX => GateMatrix::One(rx(a[0])),
        GateKind::RY => GateMatrix::One(ry(a[0])),
        GateKind::RZ => GateMatrix::One(rz(a[0])),
        GateKind::U3 => GateMatrix::One(u3(a[0], a[1], a[2])),
        GateKind::CRX => GateMatrix::Two(controlled(rx(a[0]))),
        GateKind::IsingXX => GateMatrix::Two(ising(a[0], pauli_xx())),
        GateKind::IsingYY => GateMatrix::Two(ising(a[0], pauli_yy())),
        GateKind::IsingZZ => GateMatrix::Two(ising(a[0], pauli_zz())),
    }
}

fn mul2(a: [[C64; 2]; 2], b: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

fn mul4(a: [[C64; 4]; 4], b: [[C64; 4]; 4]) -> [[C64; 4]; 4] {
    let mut out = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = (0..4).fold(ZERO, |acc, k| acc + a[r][k] * b[k][c]);
        }
    }
    out
}

fn scale2(m: [[C64; 2]; 2], s: C64) -> [[C64; 2]; 2] {
    m.map(|row| row.map(|v| v * s))
}

fn scale4(m: [[C64; 4]; 4], s: C64) -> [[C64; 4]; 4] {
    m.map(|row| row.map(|v| v * s))
}

const HALF_NEG_I: C64 = C64::new(0.0, -0.5);

fn pauli_x() -> [[C64; 2]; 2] {
    [[ZERO, ONE], [ONE, ZERO]]
}

fn pauli_y() -> [[C64; 2]; 2] {
    [[ZERO, -I], [I, ZERO]]
}

fn pauli_z() -> [[C64; 2]; 2] {
    [[ONE, ZERO], [ZERO, -ONE]]
}

pub(crate) fn base_derivative(kind: GateKind, a: &[f64; 3], position: usize) -> GateMatrix {
    // d/dphi exp(-i phi P/2) = (-i/2) P exp(-i phi P/2)
    match kind {
        GateKind::RX => GateMatrix::One(scale2(mul2(pauli_x(), rx(a[0])), HALF_NEG_I)),
        GateKind::RY => GateMatrix::One(scale2(mul2(pauli_y(), ry(a[0])), HALF_NEG_I)),
        GateKind::RZ => GateMatrix::One(scale2(mul2(pauli_z(), rz(a[0])), HALF_NEG_I)),
        GateKind::CRX => GateMatrix::Two(controlled_derivative(scale2(
            mul2(pauli_x(), rx(a[0])),
            HALF_NEG_I,
        ))),
        GateKind::IsingXX => {
            GateMatrix::Two(scale4(mul4(pauli_xx(), ising(a[0], pauli_xx())), HALF_NEG_I))
        }
        GateKind::IsingYY => {
            GateMatrix::Two(scale4(mul4(pauli_yy(), ising(a[0], pauli_yy())), HALF_NEG_I))
        }
        GateKind::IsingZZ => {
            GateMatrix::Two(scale4(mul4(pauli_zz(), ising(a[0], pauli_zz())), HALF_NEG_I))
        }
        GateKind::U3 => {
            let (theta, phi, lambda) = (a[0], a[1], a[2]);
            let (c, s) = (cos(theta / 2.0), sin(theta / 2.0));
            let m = match position {
                0 => [
                    [C64::new(-s / 2.0, 0.0), -cis(lambda) * (c / 2.0)],
                    [cis(phi) * (c / 2.0), -cis(phi + lambda) * (s / 2.0)],
                ],
                1 => [[ZERO, ZERO], [I * cis(phi) * s, I * cis(phi + lambda) * c]],
                _ => [[ZERO, -I * cis(lambda) * s], [ZERO, I * cis(phi + lambda) * c]],
            };
            GateMatrix::One(m)
        }
    }
}
