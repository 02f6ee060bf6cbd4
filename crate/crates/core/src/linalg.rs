//! Small dense eigen-solver for Hermitian matrices (reduced density matrices
//! of at most a few qubits).

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{sqrt, C64};

/// Eigenvalues (ascending) of a row-major `dim x dim` Hermitian matrix.
///
/// Uses the real symmetric embedding `[[A, -B], [B, A]]` of `A + iB`, whose
/// spectrum is that of the original with every eigenvalue doubled, and
/// diagonalizes it with cyclic Jacobi sweeps.
pub fn hermitian_eigenvalues(m: &[C64], dim: usize) -> Vec<f64> {
    let n = 2 * dim;
    let mut a = vec![0.0; n * n];
    for r in 0..dim {
        for c in 0..dim {
            let v = m[r * dim + c];
            a[r * n + c] = v.re;
            a[(r + dim) * n + (c + dim)] = v.re;
            a[r * n + (c + dim)] = -v.im;
            a[(r + dim) * n + c] = v.im;
        }
    }
    let mut eig = symmetric_eigenvalues(&mut a, n);
    eig.sort_by(|x, y| x.total_cmp(y));
    eig.into_iter().step_by(2).collect()
}

/// Cyclic Jacobi on a real symmetric matrix (destroys `a`).
pub fn symmetric_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}
