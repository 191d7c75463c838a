//! Entanglement distribution over collective polarization noise.
//!
//! Photon pairs (or N-photon groups) are entangled in frequency and sent
//! through channels that scramble polarization. Each party routes its photon
//! through a wavelength division multiplexer, a frequency shifter, a half-wave
//! plate and a polarizing beam splitter; detecting which output ports fire
//! leaves the parties with a Bell (or GHZ-class) polarization state that does
//! not depend on the channel noise.
//!
//! Modules:
//!
//! * [`qstate`]: sparse multi-photon pure states and probabilistic ensembles.
//! * [`elements`]: single-photon optical elements and noise channels.
//! * [`distribution`]: the full setup for 2..N parties and its port statistics.
//! * [`protocols`]: seeded Monte-Carlo BBM92, GHZ secret sharing and a
//!   direct-transmission baseline.
//! * [`cli`]: the `freqpol` command-line front end.

pub mod cli;
pub mod distribution;
pub mod elements;
mod error;
pub mod parallel;
pub mod protocols;
pub mod qstate;
pub mod rng;

pub use error::{Error, Result};

/// Complex amplitude type used throughout.
pub type Amplitude = num_complex::Complex64;
