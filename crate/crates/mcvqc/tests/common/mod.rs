//! Brute-force oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

use mcvqc::config::Config;
use mcvqc_core::math::C64;
use mcvqc_core::StateVector;

/// Reduced density matrix of wire `j` by explicit summation over the
/// complementary index bits of `|psi><psi|`.
pub fn brute_reduced(amps: &[C64], n: usize, j: usize) -> [[C64; 2]; 2] {
    let mut rho = [[C64::new(0.0, 0.0); 2]; 2];
    for rest in 0..(1usize << (n - 1)) {
        let low = rest & ((1 << j) - 1);
        let high = (rest >> j) << (j + 1);
        let idx = |bit: usize| high | (bit << j) | low;
        for a in 0..2 {
            for b in 0..2 {
                rho[a][b] += amps[idx(a)] * amps[idx(b)].conj();
            }
        }
    }
    rho
}

/// Meyer-Wallach Q = 2 (1 - mean_j Tr rho_j^2) from brute partial traces.
pub fn brute_q(amps: &[C64], n: usize) -> f64 {
    let mean_purity: f64 = (0..n)
        .map(|j| {
            let r = brute_reduced(amps, n, j);
            r.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>()
        })
        .sum::<f64>()
        / n as f64;
    2.0 * (1.0 - mean_purity)
}

pub fn state(amps: Vec<C64>) -> StateVector {
    StateVector::from_amplitudes(amps).expect("normalized amplitudes")
}

/// Central difference of `f` along coordinate `slot`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], slot: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    p[slot] += h;
    let up = f(&p);
    p[slot] = x[slot] - h;
    let down = f(&p);
    (up - down) / (2.0 * h)
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Scratch directory under the target dir, emptied first.
pub fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

pub fn config(text: &str) -> Config {
    Config::from_toml(text).unwrap_or_else(|e| panic!("fixture config: {e}"))
}
