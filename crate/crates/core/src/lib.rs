//! Simulation and training primitives for multi-chip ensemble variational
//! quantum circuits.
//!
//! A multi-chip ensemble splits an `n`-dimensional feature vector across `k`
//! independent `l`-qubit circuits ("chips"). No gate crosses a chip boundary,
//! so the joint state is a tensor product and every chip can be simulated on
//! its own. Chip readouts are recombined by a classical aggregator.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the command-line harness live in the `mcvqc` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod circuit;
pub mod density;
pub mod ensemble;
pub mod error;
pub mod gate;
pub mod gradients;
pub mod linalg;
pub mod linear;
pub mod loss;
pub mod math;
pub mod metrics;
pub mod mitigation;
pub mod models;
pub mod optim;
pub mod rng;
pub mod state;

pub use circuit::CircuitSpec;
pub use density::{DensityMatrix, NoiseModel};
pub use ensemble::{Aggregator, Encoder, EnsembleModel, Partition};
pub use error::{Error, Result};
pub use gate::{GateKind, GateOp};
pub use gradients::{Backend, GradientMethod, GradientVector};
pub use linear::LinearLayer;
pub use state::StateVector;

/// Largest register a statevector may hold.
pub const MAX_STATE_QUBITS: usize = 24;

/// Largest register a density matrix may hold.
pub const MAX_DENSITY_QUBITS: usize = 12;
