//! # eigenlab
//!
//! A desk-scale workbench for studying how sequence-to-sequence transformers
//! learn linear algebra from synthetic data. The crate covers the full loop:
//!
//! - [`linalg`] — dense symmetric eigendecomposition (cyclic Jacobi),
//!   Gauss–Jordan inversion, condition numbers, and relative L1 residuals.
//! - [`ensembles`] — deterministic, seeded samplers for ten random-matrix
//!   ensembles (Wigner variants, eigenvalue-replacement laws, Marchenko–Pastur)
//!   plus Monte-Carlo statistics over them.
//! - [`codec`] — bit-exact tokenization of floats and matrices in the P1000
//!   (three tokens per value) and FP15 (one token per value) schemes.
//! - [`datagen`] — reproducible on-disk datasets with content-hashed manifests.
//! - [`evalkit`] — task metrics, learned-property probes, and condition-number
//!   verifiers that predict model success or failure.
//! - [`nanoformer`] — a from-scratch encoder–decoder transformer in f64 with
//!   exact hand-written backpropagation, Adam, and warmup+cosine scheduling.
//! - [`oodlab`] — out-of-distribution train/test grids, learning curves, and
//!   table emission.
//! - [`cli`] — the `eigenlab` binary's subcommands.
//!
//! Every sampler, dataset, and training run is a deterministic function of its
//! seeds; see the `examples/` directory for one runnable program per
//! capability.

pub mod cli;
pub mod codec;
pub mod datagen;
pub mod ensembles;
pub mod evalkit;
pub mod linalg;
pub mod nanoformer;
pub mod oodlab;
mod rng;

pub use codec::{Scheme, Solution, TaskKind, TokenSequence};
pub use ensembles::{EnsembleConfig, EnsembleKind};
pub use linalg::{EigenDecomposition, Matrix, Spectrum, SymMatrix};
