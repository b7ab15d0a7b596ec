//! Lindblad tomography toolkit.
//!
//! Estimates SPAM errors, per-time Kraus operators, and a time-independent
//! Hamiltonian + Lindblad matrix from ensembles of prepare-evolve-measure
//! shot counts, quantifies channel non-Markovianity, and generates synthetic
//! datasets from known ground-truth channels.
//!
//! Conventions used throughout:
//! - times in microseconds, decay rates in MHz (1/us), Hamiltonian entries
//!   in rad/us;
//! - column-stacking vectorization, so `vec(A rho B) = (B^T (x) A) vec(rho)`;
//! - the traceless Hermitian operator basis is the unnormalized Pauli
//!   (tensor-product) basis with `Tr[s_i s_j] = dim * delta_ij`; serialized
//!   Lindblad matrices are expressed in that basis;
//! - jump operators are normalized to `Tr[L L^dag] = 1` with the rate
//!   carrying the scale.

pub mod analysis;
pub mod dynamics;
pub mod io;
pub mod krausfit;
pub mod lindfit;
pub mod linalg;
pub mod markov;
pub mod optimize;
pub mod qcore;
pub mod reference;
pub mod spamfit;
pub mod synth;

mod error;

pub use error::{Error, Result};
