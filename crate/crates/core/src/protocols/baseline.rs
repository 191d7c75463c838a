use std::f64::consts::FRAC_1_SQRT_2;

use super::bbm92::random_basis;
use super::{measure, run_trials, MeasurementBasis, ProtocolStats, TrialRecord};
use crate::elements::{collective_noise, NoiseParams};
use crate::parallel::Execution;
use crate::qstate::{BasisLabel, FrequencyMode, PathId, PolLabel, Polarization, PureState};
use crate::rng::TrialRng;
use crate::{Amplitude, Result};

/// `φ+` sent straight through both noisy channels, with no frequency
/// conversion stage.
#[derive(Debug, Clone)]
pub struct BaselineSetup {
    state: PureState<PolLabel>,
}

impl BaselineSetup {
    pub fn new(noise_a: NoiseParams, noise_b: NoiseParams) -> Result<Self> {
        use Polarization::{H, V};
        let (a, b) = (PathId(0), PathId(1));
        let freq = FrequencyMode::W2;
        let amp = Amplitude::new(FRAC_1_SQRT_2, 0.0);
        let phi_plus = PureState::from_terms(
            2,
            [H, V].map(|p| {
                (
                    vec![BasisLabel::new(p, freq, a), BasisLabel::new(p, freq, b)],
                    amp,
                )
            }),
        )?;
        let noisy = phi_plus
            .apply_element(0, &collective_noise(noise_a))?
            .apply_element(1, &collective_noise(noise_b))?;
        Ok(Self {
            state: noisy.strip_frequency()?,
        })
    }

    pub fn state(&self) -> &PureState<PolLabel> {
        &self.state
    }

    pub fn trial(&self, seed: u64, index: u64) -> Result<TrialRecord> {
        let mut rng = TrialRng::new(seed, index);
        // Same draw layout as the scheme: one pattern draw, unused here.
        let _ = rng.uniform();
        let pair = [MeasurementBasis::Z, MeasurementBasis::X];
        let bases = [random_basis(&mut rng, pair), random_basis(&mut rng, pair)];
        let (bit_a, rest) = measure(&self.state, 0, bases[0], &mut rng)?;
        let (bit_b, _) = measure(&rest, 1, bases[1], &mut rng)?;
        let sifted = bases[0] == bases[1];
        Ok(TrialRecord {
            pattern: String::new(),
            bases: bases.to_vec(),
            outcomes: vec![bit_a, bit_b],
            sifted,
            error: sifted && bit_a != bit_b,
        })
    }

    pub fn run(&self, n_pairs: u64, seed: u64, exec: Execution) -> Result<ProtocolStats> {
        run_trials(exec, "baseline", n_pairs, seed, 2, |i| self.trial(seed, i))
    }
}

pub fn baseline_direct(
    n_pairs: u64,
    noise_a: NoiseParams,
    noise_b: NoiseParams,
    seed: u64,
) -> Result<ProtocolStats> {
    baseline_direct_with(n_pairs, noise_a, noise_b, seed, Execution::default())
}

pub fn baseline_direct_with(
    n_pairs: u64,
    noise_a: NoiseParams,
    noise_b: NoiseParams,
    seed: u64,
    exec: Execution,
) -> Result<ProtocolStats> {
    BaselineSetup::new(noise_a, noise_b)?.run(n_pairs, seed, exec)
}
