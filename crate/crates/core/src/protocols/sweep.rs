use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{BaselineSetup, Bbm92Setup};
use crate::distribution::{run_distribution, total_probability};
use crate::elements::NoiseAngles;
use crate::parallel::{map_ordered, Execution};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// `steps` evenly spaced values from `start` to `stop` inclusive; a single
/// step yields `start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl AngleGrid {
    pub fn new(start: f64, stop: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::domain("grid needs at least one step"));
        }
        if !start.is_finite() || !stop.is_finite() {
            return Err(Error::domain("grid bounds must be finite"));
        }
        Ok(Self { start, stop, steps })
    }

    pub fn fixed(value: f64) -> Self {
        Self {
            start: value,
            stop: value,
            steps: 1,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let span = self.stop - self.start;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + span * i as f64 / last
                }
            })
            .collect()
    }
}

/// `start:stop:steps` or a single value.
impl FromStr for AngleGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |x: &str| {
            x.parse::<f64>()
                .map_err(|_| Error::domain(format!("malformed grid spec `{s}`")))
        };
        match parts.as_slice() {
            [v] => Ok(Self::fixed(num(v)?)),
            [a, b, n] => {
                let steps = n.parse::<usize>().map_err(|_| {
                    Error::domain(format!("malformed step count in grid spec `{s}`"))
                })?;
                Self::new(num(a)?, num(b)?, steps)
            }
            _ => Err(Error::domain(format!(
                "grid spec must be `value` or `start:stop:steps`, got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for AngleGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.steps)
    }
}

/// Cartesian product in lexicographic order `(θa, φa, θb, φb)`.
pub fn grid_points(
    theta_a: &AngleGrid,
    phi_a: &AngleGrid,
    theta_b: &AngleGrid,
    phi_b: &AngleGrid,
) -> Result<Vec<(NoiseAngles, NoiseAngles)>> {
    let mut out = Vec::new();
    for ta in theta_a.values() {
        for pa in phi_a.values() {
            for tb in theta_b.values() {
                for pb in phi_b.values() {
                    out.push((NoiseAngles::new(ta, pa)?, NoiseAngles::new(tb, pb)?));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta_a: f64,
    pub phi_a: f64,
    pub theta_b: f64,
    pub phi_b: f64,
    pub scheme_qber: Option<f64>,
    pub baseline_qber: Option<f64>,
    pub success_prob: f64,
}

/// Scheme vs direct-transmission QBER at each grid point. Point `k` runs
/// with seed `derive_seed(seed, k)`.
pub fn qber_vs_theta_sweep(
    grid: &[(NoiseAngles, NoiseAngles)],
    n_pairs: u64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    qber_vs_theta_sweep_with(grid, n_pairs, seed, Execution::default())
}

pub fn qber_vs_theta_sweep_with(
    grid: &[(NoiseAngles, NoiseAngles)],
    n_pairs: u64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::domain("sweep grid is empty"));
    }
    map_ordered(exec, grid, |k, (a, b)| {
        let point_seed = derive_seed(seed, k as u64);
        let (na, nb) = (a.params(), b.params());
        let success_prob = total_probability(&run_distribution(na, nb)?);
        // Points already run concurrently; trials inside stay on one thread.
        let scheme = Bbm92Setup::new(na, nb)?.run(n_pairs, point_seed, Execution::Sequential)?;
        let baseline =
            BaselineSetup::new(na, nb)?.run(n_pairs, point_seed, Execution::Sequential)?;
        Ok(SweepRow {
            theta_a: a.theta,
            phi_a: a.phi,
            theta_b: b.theta,
            phi_b: b.phi,
            scheme_qber: scheme.qber,
            baseline_qber: baseline.qber,
            success_prob,
        })
    })
    .into_iter()
    .collect()
}
