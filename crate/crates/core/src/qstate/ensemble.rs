use super::{Label, PureState, NORM_TOL};
use crate::{Error, Result};

/// Probabilistic mixture of pure states.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState<L: Label> {
    components: Vec<(f64, PureState<L>)>,
}

impl<L: Label> EnsembleState<L> {
    /// Weights must be positive and sum to 1; components must agree on the
    /// photon count.
    pub fn new(components: Vec<(f64, PureState<L>)>) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return Err(Error::structural("ensemble has no components"));
        };
        let n = first.n_photons();
        if let Some((_, s)) = components.iter().find(|(_, s)| s.n_photons() != n) {
            return Err(Error::structural(format!(
                "ensemble mixes {n}-photon and {}-photon components",
                s.n_photons()
            )));
        }
        if let Some((w, _)) = components.iter().find(|(w, _)| w.is_nan() || *w <= 0.0) {
            return Err(Error::domain(format!(
                "ensemble weight {w} is not positive"
            )));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!("ensemble weights sum to {total}")));
        }
        Ok(Self { components })
    }

    pub fn pure(state: PureState<L>) -> Self {
        Self {
            components: vec![(1.0, state)],
        }
    }

    pub fn components(&self) -> &[(f64, PureState<L>)] {
        &self.components
    }

    pub fn n_photons(&self) -> usize {
        self.components[0].1.n_photons()
    }

    /// `Σ_k w_k |⟨reference|state_k⟩|²`.
    pub fn fidelity(&self, reference: &PureState<L>) -> Result<f64> {
        let mut total = 0.0;
        for (w, s) in &self.components {
            total += w * s.fidelity(reference)?;
        }
        Ok(total.clamp(0.0, 1.0))
    }
}
