use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }

    /// Column index in a 2x2 Jones-style matrix.
    pub fn index(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Polarization::H
        } else {
            Polarization::V
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::H => "H",
            Polarization::V => "V",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FrequencyMode {
    W1,
    W2,
}

impl fmt::Display for FrequencyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrequencyMode::W1 => "w1",
            FrequencyMode::W2 => "w2",
        })
    }
}

/// Spatial mode label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathId(pub u32);

impl fmt::Display for PathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Maps path labels to human-readable port names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathRegistry {
    by_id: BTreeMap<PathId, String>,
    by_name: BTreeMap<String, PathId>,
}

impl PathRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `name` under the next free label.
    pub fn register(&mut self, name: impl Into<String>) -> Result<PathId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::structural(format!("path `{name}` registered twice")));
        }
        let id = PathId(self.by_id.keys().next_back().map_or(0, |p| p.0 + 1));
        self.by_id.insert(id, name.clone());
        self.by_name.insert(name, id);
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Option<PathId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: PathId) -> Option<&str> {
        self.by_id.get(&id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    /// Per-photon basis dimension: 2 polarizations x 2 frequencies x paths.
    pub fn photon_dimension(&self) -> usize {
        4 * self.len()
    }
}

/// Per-photon label carried by basis kets.
pub trait Label: Clone + Ord + fmt::Debug + fmt::Display + Send + Sync {
    fn path(&self) -> PathId;
    fn polarization(&self) -> Polarization;
    fn with_polarization(&self, pol: Polarization) -> Self;
}

/// Full single-photon label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub pol: Polarization,
    pub freq: FrequencyMode,
    pub path: PathId,
}

impl BasisLabel {
    pub fn new(pol: Polarization, freq: FrequencyMode, path: PathId) -> Self {
        Self { pol, freq, path }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.pol, self.freq, self.path)
    }
}

impl Label for BasisLabel {
    fn path(&self) -> PathId {
        self.path
    }

    fn polarization(&self) -> Polarization {
        self.pol
    }

    fn with_polarization(&self, pol: Polarization) -> Self {
        Self { pol, ..*self }
    }
}

/// Label with the frequency degree of freedom traced out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PolLabel {
    pub pol: Polarization,
    pub path: PathId,
}

impl PolLabel {
    pub fn new(pol: Polarization, path: PathId) -> Self {
        Self { pol, path }
    }
}

impl fmt::Display for PolLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.pol, self.path)
    }
}

impl Label for PolLabel {
    fn path(&self) -> PathId {
        self.path
    }

    fn polarization(&self) -> Polarization {
        self.pol
    }

    fn with_polarization(&self, pol: Polarization) -> Self {
        Self { pol, ..*self }
    }
}
