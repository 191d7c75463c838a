use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bbm92::{branches, random_basis, sample_branch, Branch};
use super::{measure, run_trials, MeasurementBasis, ProtocolStats, TrialRecord};
use crate::distribution::{ghz_reference, run_distribution_n};
use crate::elements::NoiseParams;
use crate::parallel::Execution;
use crate::rng::TrialRng;
use crate::{Error, Result};

/// Bases each party picks from uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BasisPair {
    /// Keeps `XXX, XYY, YXY, YYX`; the GHZ state fixes the outcome parity.
    #[default]
    XY,
    /// Keeps `ZZZ` only and checks that all three bits agree; no other
    /// combination has a definite GHZ correlation.
    ZY,
}

impl BasisPair {
    pub fn bases(self) -> [MeasurementBasis; 2] {
        match self {
            BasisPair::XY => [MeasurementBasis::X, MeasurementBasis::Y],
            BasisPair::ZY => [MeasurementBasis::Z, MeasurementBasis::Y],
        }
    }

    /// `Some(expected outcome parity)` for kept combinations.
    fn expected_parity(self, bases: &[MeasurementBasis]) -> Option<u8> {
        let ys = bases.iter().filter(|b| **b == MeasurementBasis::Y).count();
        match self {
            // ⟨XXX⟩ = +1 and each pair of Y's contributes −1.
            BasisPair::XY => (ys % 2 == 0).then_some(((ys / 2) % 2) as u8),
            BasisPair::ZY => None,
        }
    }
}

impl fmt::Display for BasisPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisPair::XY => "XY",
            BasisPair::ZY => "ZY",
        })
    }
}

impl FromStr for BasisPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace([',', '/', '-'], "").as_str() {
            "XY" | "YX" => Ok(BasisPair::XY),
            "ZY" | "YZ" => Ok(BasisPair::ZY),
            _ => Err(Error::domain(format!(
                "basis pair must be XY or ZY, got `{s}`"
            ))),
        }
    }
}

/// Three-party secret sharing over the distributed GHZ-class state.
#[derive(Debug, Clone)]
pub struct QssSetup {
    patterns: Vec<Branch>,
    /// Per pattern, which parties hold a flipped polarization.
    flips: Vec<Vec<bool>>,
    basis_pair: BasisPair,
}

impl QssSetup {
    pub fn new(noise: [NoiseParams; 3], basis_pair: BasisPair) -> Result<Self> {
        let patterns = branches(run_distribution_n(&noise)?)?;
        let flips = patterns
            .iter()
            .map(|b| ghz_reference(&b.ports).flips())
            .collect();
        Ok(Self {
            patterns,
            flips,
            basis_pair,
        })
    }

    /// Undoes the pattern's local `H ↔ V` relabeling on a raw bit. A flip
    /// negates `Z` and `Y` outcomes and leaves `X` alone.
    pub fn reconcile(flipped: bool, basis: MeasurementBasis, raw: u8) -> u8 {
        raw ^ (flipped && basis != MeasurementBasis::X) as u8
    }

    pub fn trial(&self, seed: u64, index: u64) -> Result<TrialRecord> {
        let mut rng = TrialRng::new(seed, index);
        let k = sample_branch(&self.patterns, rng.uniform());
        let branch = &self.patterns[k];
        let pair = self.basis_pair.bases();
        let bases: Vec<_> = (0..3).map(|_| random_basis(&mut rng, pair)).collect();
        let mut state = branch.state.clone();
        let mut raw = Vec::with_capacity(3);
        for (j, basis) in bases.iter().enumerate() {
            let (bit, next) = measure(&state, j, *basis, &mut rng)?;
            raw.push(bit);
            state = next;
        }
        let bits: Vec<u8> = raw
            .iter()
            .zip(&bases)
            .zip(&self.flips[k])
            .map(|((b, basis), f)| Self::reconcile(*f, *basis, *b))
            .collect();
        let (sifted, error) = match self.basis_pair {
            BasisPair::XY => match self.basis_pair.expected_parity(&bases) {
                Some(parity) => (true, bits.iter().fold(0, |a, b| a ^ b) != parity),
                None => (false, false),
            },
            BasisPair::ZY => {
                let all_z = bases.iter().all(|b| *b == MeasurementBasis::Z);
                (all_z, all_z && bits.iter().any(|b| *b != bits[0]))
            }
        };
        Ok(TrialRecord {
            pattern: branch.name.clone(),
            bases,
            outcomes: raw,
            sifted,
            error,
        })
    }

    pub fn run(&self, n_triples: u64, seed: u64, exec: Execution) -> Result<ProtocolStats> {
        let name = match self.basis_pair {
            BasisPair::XY => "qss",
            BasisPair::ZY => "qss-zy",
        };
        run_trials(exec, name, n_triples, seed, 3, |i| self.trial(seed, i))
    }
}

pub fn qss_run(
    n_triples: u64,
    noise: [NoiseParams; 3],
    seed: u64,
    basis_pair: BasisPair,
) -> Result<ProtocolStats> {
    qss_run_with(n_triples, noise, seed, basis_pair, Execution::default())
}

pub fn qss_run_with(
    n_triples: u64,
    noise: [NoiseParams; 3],
    seed: u64,
    basis_pair: BasisPair,
    exec: Execution,
) -> Result<ProtocolStats> {
    QssSetup::new(noise, basis_pair)?.run(n_triples, seed, exec)
}
