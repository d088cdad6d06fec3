//! Simulation of a two-mode time-multiplexed click detector (TMD) and
//! data-pattern tomography of two-mode photon-number distributions.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`]: diagonal photon-number distributions, loss, parity, fidelity.
//! * [`tmd`]: click patterns, the exact forward model, the Monte Carlo
//!   sampler with dark counts and afterpulsing, marginals and click classes.
//! * [`probes`]: coherent probe grids, power calibration and the
//!   zero-click efficiency estimate.
//! * [`fit`]: assembling pattern problems and the constrained quadratic
//!   program that reconstructs the state.
//! * [`herald`]: herald POVMs, conditional idler states and herald selection.
//! * [`stats`]: multinomial sampling and bootstrap ensembles.
//! * [`io`]: the on-disk formats (histograms, libraries, results, config).
//!
//! Data-parallel loops (event sampling, bootstrap repetitions,
//! cross-validation) run on rayon when the `parallel` feature is enabled and
//! sequentially otherwise. Results are identical either way.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod fit;
pub mod fock;
pub mod herald;
pub mod io;
pub mod probes;
pub mod stats;
pub mod tmd;

pub use error::{Error, Result};
pub use exec::Execution;
