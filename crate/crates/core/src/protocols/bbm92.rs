use super::{measure, run_trials, MeasurementBasis, ProtocolStats, TrialRecord};
use crate::distribution::{bell_reference, run_distribution, BellStateId, Conditional, Port};
use crate::elements::NoiseParams;
use crate::parallel::Execution;
use crate::qstate::{PolLabel, PureState};
use crate::rng::TrialRng;
use crate::{Error, Result};

/// Reachable port patterns with their cumulative probabilities and
/// post-selected states.
#[derive(Debug, Clone)]
pub struct Bbm92Setup {
    patterns: Vec<Branch>,
}

#[derive(Debug, Clone)]
pub(crate) struct Branch {
    pub(crate) cumulative: f64,
    pub(crate) name: String,
    pub(crate) ports: Vec<Port>,
    pub(crate) state: PureState<PolLabel>,
}

pub(crate) fn branches(
    outcomes: Vec<crate::distribution::DistributionOutcome>,
) -> Result<Vec<Branch>> {
    let mut acc = 0.0;
    let mut out = Vec::new();
    for o in outcomes {
        if let Some(Conditional::Pure(state)) = o.conditional {
            acc += o.probability;
            out.push(Branch {
                cumulative: acc,
                name: o.pattern_name,
                ports: o.ports,
                state,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::Invariant(
            "no port pattern has nonzero probability".into(),
        ));
    }
    Ok(out)
}

/// Index of the branch selected by the uniform draw `u`.
pub(crate) fn sample_branch(branches: &[Branch], u: f64) -> usize {
    let total = branches.last().map_or(1.0, |b| b.cumulative);
    let target = u * total;
    branches
        .iter()
        .position(|b| target < b.cumulative)
        .unwrap_or(branches.len() - 1)
}

pub(crate) fn random_basis(rng: &mut TrialRng, pair: [MeasurementBasis; 2]) -> MeasurementBasis {
    if rng.coin() {
        pair[1]
    } else {
        pair[0]
    }
}

/// Key bit Bob keeps for a sifted pair. The pattern is public: `ψ+` patterns
/// are anticorrelated in `Z`, so Bob flips there; `φ+` is correlated in both
/// bases and `ψ+` is correlated in `X`.
pub fn reconciliation_bit(ports: &[Port], basis: MeasurementBasis, bobs_raw_bit: u8) -> Result<u8> {
    let [a, b] = ports else {
        return Err(Error::structural(format!(
            "BBM92 patterns have two ports, got {}",
            ports.len()
        )));
    };
    let flip = bell_reference([*a, *b]) == BellStateId::PsiPlus && basis == MeasurementBasis::Z;
    Ok(bobs_raw_bit ^ flip as u8)
}

impl Bbm92Setup {
    pub fn new(noise_a: NoiseParams, noise_b: NoiseParams) -> Result<Self> {
        Ok(Self {
            patterns: branches(run_distribution(noise_a, noise_b)?)?,
        })
    }

    /// One pair: sample the port pattern, choose bases, measure, sift.
    pub fn trial(&self, seed: u64, index: u64) -> Result<TrialRecord> {
        let mut rng = TrialRng::new(seed, index);
        let branch = &self.patterns[sample_branch(&self.patterns, rng.uniform())];
        let pair = [MeasurementBasis::Z, MeasurementBasis::X];
        let bases = [random_basis(&mut rng, pair), random_basis(&mut rng, pair)];
        let (bit_a, rest) = measure(&branch.state, 0, bases[0], &mut rng)?;
        let (bit_b, _) = measure(&rest, 1, bases[1], &mut rng)?;
        let sifted = bases[0] == bases[1];
        let error = sifted && bit_a != reconciliation_bit(&branch.ports, bases[1], bit_b)?;
        Ok(TrialRecord {
            pattern: branch.name.clone(),
            bases: bases.to_vec(),
            outcomes: vec![bit_a, bit_b],
            sifted,
            error,
        })
    }

    pub fn run(&self, n_pairs: u64, seed: u64, exec: Execution) -> Result<ProtocolStats> {
        run_trials(exec, "bbm92", n_pairs, seed, 2, |i| self.trial(seed, i))
    }
}

pub fn bbm92_run(
    n_pairs: u64,
    noise_a: NoiseParams,
    noise_b: NoiseParams,
    seed: u64,
) -> Result<ProtocolStats> {
    bbm92_run_with(n_pairs, noise_a, noise_b, seed, Execution::default())
}

pub fn bbm92_run_with(
    n_pairs: u64,
    noise_a: NoiseParams,
    noise_b: NoiseParams,
    seed: u64,
    exec: Execution,
) -> Result<ProtocolStats> {
    Bbm92Setup::new(noise_a, noise_b)?.run(n_pairs, seed, exec)
}
