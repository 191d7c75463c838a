//! Seeded Monte-Carlo protocol harnesses over distributed states.
//!
//! Every trial is a pure function of `(configuration, seed, trial index)`
//! and draws from its own [`TrialRng`](crate::rng::TrialRng) stream, so runs
//! are bit-reproducible regardless of how trials are scheduled.

mod baseline;
mod bbm92;
mod measure;
mod qss;
mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baseline::{baseline_direct, baseline_direct_with, BaselineSetup};
pub use bbm92::{bbm92_run, bbm92_run_with, reconciliation_bit, Bbm92Setup};
pub use measure::{measure, project_onto, MeasurementBasis};
pub use qss::{qss_run, qss_run_with, BasisPair, QssSetup};
pub use sweep::{grid_points, qber_vs_theta_sweep, qber_vs_theta_sweep_with, AngleGrid, SweepRow};

use crate::parallel::{fold_indices, Execution};
use crate::{Error, Result};

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Port pattern name, e.g. `a1b2`; empty for the direct baseline.
    pub pattern: String,
    pub bases: Vec<MeasurementBasis>,
    /// Raw bits as measured (0 = first basis vector).
    pub outcomes: Vec<u8>,
    pub sifted: bool,
    pub error: bool,
}

/// Sifted/error counts for one basis combination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisTally {
    pub bases: String,
    pub n_sifted: u64,
    pub n_errors: u64,
}

impl BasisTally {
    pub fn error_rate(&self) -> Option<f64> {
        (self.n_sifted > 0).then(|| self.n_errors as f64 / self.n_sifted as f64)
    }
}

/// Aggregate statistics of a protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolStats {
    pub protocol: String,
    pub n_trials: u64,
    pub n_sifted: u64,
    pub n_errors: u64,
    /// `None` when nothing survived sifting.
    pub qber: Option<f64>,
    pub sift_rate: f64,
    pub seed: u64,
    /// Kept basis combinations, in basis order.
    pub by_basis: Vec<BasisTally>,
}

impl ProtocolStats {
    pub fn basis(&self, bases: &str) -> Option<&BasisTally> {
        self.by_basis.iter().find(|t| t.bases == bases)
    }
}

/// Order-independent trial counters. Combinations are indexed by the base-3
/// code of the basis choices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Tally {
    trials: u64,
    combos: Vec<[u64; 2]>,
}

impl Tally {
    pub(crate) fn record(&mut self, bases: &[MeasurementBasis], sifted: bool, error: bool) {
        self.trials += 1;
        if !sifted {
            return;
        }
        let code = combo_code(bases);
        if self.combos.len() <= code {
            self.combos.resize(code + 1, [0, 0]);
        }
        self.combos[code][0] += 1;
        self.combos[code][1] += error as u64;
    }

    pub(crate) fn merge(mut self, other: Self) -> Self {
        self.trials += other.trials;
        if self.combos.len() < other.combos.len() {
            self.combos.resize(other.combos.len(), [0, 0]);
        }
        for (a, b) in self.combos.iter_mut().zip(other.combos) {
            a[0] += b[0];
            a[1] += b[1];
        }
        self
    }

    pub(crate) fn into_stats(self, protocol: &str, seed: u64, n_parties: usize) -> ProtocolStats {
        let n_sifted: u64 = self.combos.iter().map(|c| c[0]).sum();
        let n_errors: u64 = self.combos.iter().map(|c| c[1]).sum();
        let by_basis = self
            .combos
            .iter()
            .enumerate()
            .filter(|(_, c)| c[0] > 0)
            .map(|(code, c)| BasisTally {
                bases: combo_name(code, n_parties),
                n_sifted: c[0],
                n_errors: c[1],
            })
            .collect();
        ProtocolStats {
            protocol: protocol.to_string(),
            n_trials: self.trials,
            n_sifted,
            n_errors,
            qber: (n_sifted > 0).then(|| n_errors as f64 / n_sifted as f64),
            sift_rate: if self.trials == 0 {
                0.0
            } else {
                n_sifted as f64 / self.trials as f64
            },
            seed,
            by_basis,
        }
    }
}

fn combo_code(bases: &[MeasurementBasis]) -> usize {
    bases.iter().fold(0, |acc, b| acc * 3 + b.code())
}

fn combo_name(mut code: usize, n: usize) -> String {
    let mut out = vec![' '; n];
    for slot in out.iter_mut().rev() {
        *slot = MeasurementBasis::from_code(code % 3).symbol();
        code /= 3;
    }
    out.into_iter().collect()
}

#[derive(Default)]
struct TrialAcc {
    tally: Tally,
    failure: Option<Error>,
}

/// Runs `n` independent trials and reduces their records.
pub(crate) fn run_trials<F>(
    exec: Execution,
    protocol: &str,
    n: u64,
    seed: u64,
    n_parties: usize,
    trial: F,
) -> Result<ProtocolStats>
where
    F: Fn(u64) -> Result<TrialRecord> + Sync + Send,
{
    if n == 0 {
        return Err(Error::domain("trial count must be positive"));
    }
    let acc = fold_indices(
        exec,
        n,
        |acc: &mut TrialAcc, i| {
            if acc.failure.is_some() {
                return;
            }
            match trial(i) {
                Ok(r) => acc.tally.record(&r.bases, r.sifted, r.error),
                Err(e) => acc.failure = Some(e),
            }
        },
        |a, b| TrialAcc {
            failure: a.failure.or(b.failure),
            tally: a.tally.merge(b.tally),
        },
    );
    match acc.failure {
        Some(e) => Err(e),
        None => Ok(acc.tally.into_stats(protocol, seed, n_parties)),
    }
}

impl fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for MeasurementBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(MeasurementBasis::Z),
            "X" | "x" => Ok(MeasurementBasis::X),
            "Y" | "y" => Ok(MeasurementBasis::Y),
            other => Err(Error::domain(format!("unknown basis `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use MeasurementBasis::{X, Y, Z};

    #[test]
    fn combo_names_round_trip() {
        for bases in [
            vec![Z, Z],
            vec![X, X],
            vec![X, Y, Y],
            vec![Y, Y, X],
            vec![Z, Z, Z],
        ] {
            let code = combo_code(&bases);
            let name: String = bases.iter().map(|b| b.symbol()).collect();
            assert_eq!(combo_name(code, bases.len()), name);
        }
    }

    #[test]
    fn tally_merge_is_order_independent() {
        let mut a = Tally::default();
        a.record(&[Z, Z], true, false);
        a.record(&[Z, X], false, false);
        let mut b = Tally::default();
        b.record(&[X, X], true, true);
        let ab = a.clone().merge(b.clone()).into_stats("t", 1, 2);
        let ba = b.merge(a).into_stats("t", 1, 2);
        assert_eq!(ab, ba);
        assert_eq!(ab.n_trials, 3);
        assert_eq!(ab.n_sifted, 2);
        assert_eq!(ab.qber, Some(0.5));
        assert_eq!(ab.basis("XX").unwrap().n_errors, 1);
        assert!(ab.basis("ZX").is_none());
    }

    #[test]
    fn empty_sift_has_no_qber() {
        let mut t = Tally::default();
        t.record(&[Z, X], false, false);
        let s = t.into_stats("t", 0, 2);
        assert_eq!(s.qber, None);
        assert_eq!(s.sift_rate, 0.0);
    }
}
