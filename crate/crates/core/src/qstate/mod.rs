//! Multi-photon states over (polarization, frequency, path) labels.
//!
//! Every photon carries one label per basis ket. A [`PureState`] is a sparse
//! table from label tuples (photon `i` = party `i`) to complex amplitudes and
//! an [`EnsembleState`] is a weighted list of pure states. States are values:
//! every operation returns a fresh state.

mod ensemble;
mod label;
mod state;

pub use ensemble::EnsembleState;
pub use label::{BasisLabel, FrequencyMode, Label, PathId, PathRegistry, PolLabel, Polarization};
pub use state::{PathProjection, PureState};

/// Tolerance for normalization checks on construction.
pub const NORM_TOL: f64 = 1e-9;
