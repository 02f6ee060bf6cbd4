//! Independent dense-matrix oracles. Nothing here calls the simulator's own
//! gate kernels.

#![allow(dead_code)]

use mcvqc_core::math::C64;
use mcvqc_core::{CircuitSpec, GateKind, GateOp};

pub type Mat = Vec<Vec<C64>>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> Mat {
    (0..dim).map(|r| (0..dim).map(|k| if r == k { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn dagger(a: &Mat) -> Mat {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| a[j][i].conj()).collect()).collect()
}

/// `exp(-i phi P / 2)` for an involutory Hermitian `P`.
fn rotation(p: &Mat, phi: f64) -> Mat {
    let n = p.len();
    let (co, si) = ((phi / 2.0).cos(), (phi / 2.0).sin());
    (0..n)
        .map(|r| (0..n).map(|k| identity(n)[r][k] * co + p[r][k] * c(0.0, -si)).collect())
        .collect()
}

fn kron(a: &Mat, b: &Mat) -> Mat {
    let (na, nb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); na * nb]; na * nb];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                for l in 0..nb {
                    out[i * nb + k][j * nb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn pauli(which: char) -> Mat {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match which {
        'x' => vec![vec![z, o], vec![o, z]],
        'y' => vec![vec![z, -i], vec![i, z]],
        'z' => vec![vec![o, z], vec![z, -o]],
        _ => identity(2),
    }
}

/// Local matrix of a gate. Two-qubit gates: first listed wire is the high
/// local bit (and the CRX control).
pub fn local_matrix(kind: GateKind, a: &[f64]) -> Mat {
    match kind {
        GateKind::RX => rotation(&pauli('x'), a[0]),
        GateKind::RY => rotation(&pauli('y'), a[0]),
        GateKind::RZ => rotation(&pauli('z'), a[0]),
        GateKind::U3 => {
            // Euler decomposition RZ(phi) RY(theta) RZ(lambda) times a global phase.
            let m = matmul(&rotation(&pauli('z'), a[1]), &matmul(&rotation(&pauli('y'), a[0]), &rotation(&pauli('z'), a[2])));
            let half = (a[1] + a[2]) / 2.0;
            let ph = c(half.cos(), half.sin());
            m.into_iter().map(|r| r.into_iter().map(|v| v * ph).collect()).collect()
        }
        GateKind::IsingXX => rotation(&kron(&pauli('x'), &pauli('x')), a[0]),
        GateKind::IsingYY => rotation(&kron(&pauli('y'), &pauli('y')), a[0]),
        GateKind::IsingZZ => rotation(&kron(&pauli('z'), &pauli('z')), a[0]),
        GateKind::CRX => {
            let mut m = identity(4);
            let rx = rotation(&pauli('x'), a[0]);
            for r in 0..2 {
                for k in 0..2 {
                    m[2 + r][2 + k] = rx[r][k];
                }
            }
            m
        }
    }
}

/// Embeds a local gate into the full `2^n` register (little-endian wires).
pub fn embed(local: &Mat, wires: &[usize], n: usize) -> Mat {
    let dim = 1 << n;
    let mut out = vec![vec![c(0.0, 0.0); dim]; dim];
    let local_index = |i: usize| wires.iter().fold(0, |acc, &w| (acc << 1) | ((i >> w) & 1));
    let mask: usize = wires.iter().map(|&w| 1 << w).sum();
    for col in 0..dim {
        for row in 0..dim {
            if row & !mask == col & !mask {
                out[row][col] = local[local_index(row)][local_index(col)];
            }
        }
    }
    out
}

fn gate_unitary(op: &GateOp, params: &[f64], n: usize) -> Mat {
    let angles: Vec<f64> = op.slots.iter().map(|&s| params[s]).collect();
    let m = embed(&local_matrix(op.kind, &angles), &op.wires, n);
    if op.inverse {
        dagger(&m)
    } else {
        m
    }
}

/// Product of every gate unitary of the circuit, applied to `|0...0>`.
pub fn dense_run(circuit: &CircuitSpec, enc: &[f64], theta: &[f64]) -> Vec<C64> {
    let n = circuit.num_qubits;
    let mut u = identity(1 << n);
    for op in &circuit.encoding_ops {
        u = matmul(&gate_unitary(op, enc, n), &u);
    }
    for op in &circuit.trainable_ops {
        u = matmul(&gate_unitary(op, theta, n), &u);
    }
    u.iter().map(|row| row[0]).collect()
}

pub fn dense_expectation_z(amps: &[C64], wire: usize) -> f64 {
    amps.iter()
        .enumerate()
        .map(|(i, a)| if (i >> wire) & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

/// Brute-force partial trace keeping only `wire`.
pub fn brute_reduced(amps: &[C64], n: usize, wire: usize) -> [[C64; 2]; 2] {
    let mut rho = [[c(0.0, 0.0); 2]; 2];
    for i in 0..(1usize << n) {
        for j in 0..(1usize << n) {
            if (i & !(1 << wire)) == (j & !(1 << wire)) {
                rho[(i >> wire) & 1][(j >> wire) & 1] += amps[i] * amps[j].conj();
            }
        }
    }
    rho
}

pub fn brute_q(amps: &[C64], n: usize) -> f64 {
    let mut s = 0.0;
    for w in 0..n {
        let r = brute_reduced(amps, n, w);
        let mut tr = c(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                tr += r[a][b] * r[b][a];
            }
        }
        s += 1.0 - tr.re;
    }
    2.0 * s / n as f64
}

/// A random circuit over every gate kind.
pub fn random_circuit(n: usize, depth: usize, rng: &mut impl rand::Rng) -> CircuitSpec {
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
    circ
}

pub fn random_angles(len: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
}
