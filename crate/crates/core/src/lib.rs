//! Time-of-flight spatial-correlation diagnostics for atoms in 1D optical
//! lattices.
//!
//! * [`lattice`]: lattice geometry, shot generation, probability vectors.
//! * [`wavepacket`]: single-atom free expansion and double-well fringes.
//! * [`correlations`]: g1/g2 of Fock states and their discrete transform pairs.
//! * [`ensemble`]: Monte Carlo experiments and reconstruction.
//! * [`config`] and [`cli`]: experiment files and the command-line front end.

pub mod cli;
pub mod config;
pub mod constants;
pub mod correlations;
pub mod ensemble;
pub mod error;
pub mod fft;
pub mod lattice;
pub mod stats;
pub mod wavepacket;

pub use error::{Error, Result};
