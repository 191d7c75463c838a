use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::qstate::{Label, Polarization, PureState};
use crate::rng::TrialRng;
use crate::{Amplitude, Error, Result};

/// Single-photon polarization measurement basis. Bit 0 is the first vector:
/// `|H⟩`, `|+⟩` or `|+i⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MeasurementBasis {
    Z,
    X,
    Y,
}

impl MeasurementBasis {
    /// `(⟨H|v⟩, ⟨V|v⟩)` for basis vector `bit`.
    pub fn vector(self, bit: u8) -> [Amplitude; 2] {
        let r = FRAC_1_SQRT_2;
        let sign = if bit == 0 { 1.0 } else { -1.0 };
        match (self, bit) {
            (MeasurementBasis::Z, 0) => [Amplitude::new(1.0, 0.0), Amplitude::new(0.0, 0.0)],
            (MeasurementBasis::Z, _) => [Amplitude::new(0.0, 0.0), Amplitude::new(1.0, 0.0)],
            (MeasurementBasis::X, _) => [Amplitude::new(r, 0.0), Amplitude::new(sign * r, 0.0)],
            (MeasurementBasis::Y, _) => [Amplitude::new(r, 0.0), Amplitude::new(0.0, sign * r)],
        }
    }

    pub fn symbol(self) -> char {
        match self {
            MeasurementBasis::Z => 'Z',
            MeasurementBasis::X => 'X',
            MeasurementBasis::Y => 'Y',
        }
    }

    pub(crate) fn code(self) -> usize {
        match self {
            MeasurementBasis::Z => 0,
            MeasurementBasis::X => 1,
            MeasurementBasis::Y => 2,
        }
    }

    pub(crate) fn from_code(code: usize) -> Self {
        match code {
            0 => MeasurementBasis::Z,
            1 => MeasurementBasis::X,
            _ => MeasurementBasis::Y,
        }
    }
}

/// Applies `|v⟩⟨v|` to photon `photon`, where `v` is basis vector `bit`.
/// Returns the squared norm of the projection and, when nonzero, the
/// renormalized post-measurement state.
pub fn project_onto<L: Label>(
    state: &PureState<L>,
    photon: usize,
    basis: MeasurementBasis,
    bit: u8,
) -> Result<(f64, Option<PureState<L>>)> {
    state.check_photon(photon)?;
    let v = basis.vector(bit);
    let bra = state.map_photon(photon, |l| {
        Ok(vec![(
            l.with_polarization(Polarization::H),
            v[l.polarization().index()].conj(),
        )])
    });
    let reduced = match bra {
        Ok(s) => s,
        Err(Error::Domain(_)) => return Ok((0.0, None)),
        Err(e) => return Err(e),
    };
    let probability = reduced.norm_sqr();
    let collapsed = reduced.map_photon(photon, |l| {
        Ok(vec![
            (l.with_polarization(Polarization::H), v[0]),
            (l.with_polarization(Polarization::V), v[1]),
        ])
    })?;
    Ok((probability, Some(collapsed.normalized()?)))
}

/// Born-rule measurement of photon `photon`, consuming one uniform draw.
pub fn measure<L: Label>(
    state: &PureState<L>,
    photon: usize,
    basis: MeasurementBasis,
    rng: &mut TrialRng,
) -> Result<(u8, PureState<L>)> {
    let (p0, s0) = project_onto(state, photon, basis, 0)?;
    let (p1, s1) = project_onto(state, photon, basis, 1)?;
    let u = rng.uniform();
    let pick_zero = u * (p0 + p1) < p0;
    match (pick_zero, s0, s1) {
        (true, Some(s), _) => Ok((0, s)),
        (false, _, Some(s)) => Ok((1, s)),
        (_, Some(s), None) => Ok((0, s)),
        (_, None, Some(s)) => Ok((1, s)),
        (_, None, None) => Err(Error::domain("measured state has zero norm")),
    }
}
