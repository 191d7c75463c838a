//! Single-photon optical elements.
//!
//! Every element is an [`ElementOp`]: either a polarization matrix applied to
//! every label (the collective channel noise) or a sparse rule table over
//! [`BasisLabel`]s with an explicit support (routers, shifters, plates, beam
//! splitters).

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::qstate::{
    BasisLabel, EnsembleState, FrequencyMode, PathId, Polarization, PureState, NORM_TOL,
};
use crate::{Amplitude, Error, Result};

/// Input label, its image, and whether the input counts toward the isometric support.
type RuleEntry = (BasisLabel, Vec<(BasisLabel, Amplitude)>, bool);

const ISOMETRY_TOL: f64 = 1e-12;

const ONE: Amplitude = Amplitude::new(1.0, 0.0);
const ZERO: Amplitude = Amplitude::new(0.0, 0.0);

/// Channel noise amplitudes: `|H⟩ → α|H⟩ + β|V⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    alpha: Amplitude,
    beta: Amplitude,
}

impl NoiseParams {
    pub fn new(alpha: Amplitude, beta: Amplitude) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL || !norm.is_finite() {
            return Err(Error::domain(format!(
                "noise amplitudes must satisfy |alpha|^2 + |beta|^2 = 1, got {norm}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn identity() -> Self {
        Self {
            alpha: ONE,
            beta: ZERO,
        }
    }

    pub fn alpha(&self) -> Amplitude {
        self.alpha
    }

    pub fn beta(&self) -> Amplitude {
        self.beta
    }

    /// Amplitude picked up by an initially `H` photon ending in `pol`.
    pub fn component(&self, pol: Polarization) -> Amplitude {
        match pol {
            Polarization::H => self.alpha,
            Polarization::V => self.beta,
        }
    }

    /// `[[α, −β*], [β, α*]]`, indexed `[row][col]` with `H = 0`.
    pub fn matrix(&self) -> [[Amplitude; 2]; 2] {
        [
            [self.alpha, -self.beta.conj()],
            [self.beta, self.alpha.conj()],
        ]
    }
}

/// Angle form of [`NoiseParams`]: `α = cos θ`, `β = e^{iφ} sin θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseAngles {
    pub theta: f64,
    pub phi: f64,
}

impl NoiseAngles {
    /// `theta ∈ [0, π/2]`, `phi ∈ [0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return Err(Error::domain(format!("theta = {theta} outside [0, pi/2]")));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(Error::domain(format!("phi = {phi} outside [0, 2pi)")));
        }
        Ok(Self { theta, phi })
    }

    pub fn identity() -> Self {
        Self {
            theta: 0.0,
            phi: 0.0,
        }
    }

    pub fn params(&self) -> NoiseParams {
        let (s, c) = self.theta.sin_cos();
        NoiseParams {
            alpha: Amplitude::new(c, 0.0),
            beta: Amplitude::from_polar(s, self.phi),
        }
    }
}

/// Weights of the four polarization products `HH, HV, VH, VV`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedNoiseWeights([f64; 4]);

impl MixedNoiseWeights {
    pub fn new(f1: f64, f2: f64, f3: f64, f4: f64) -> Result<Self> {
        let w = [f1, f2, f3, f4];
        if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::domain(format!(
                "mixed-noise weight {bad} is negative"
            )));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!("mixed-noise weights sum to {total}")));
        }
        Ok(Self(w))
    }

    pub fn uniform() -> Self {
        Self([0.25; 4])
    }

    pub fn weights(&self) -> [f64; 4] {
        self.0
    }

    /// `(weight, (pol_a, pol_b))` in `HH, HV, VH, VV` order.
    pub fn components(&self) -> impl Iterator<Item = (f64, [Polarization; 2])> + '_ {
        use Polarization::{H, V};
        self.0.iter().copied().zip([[H, H], [H, V], [V, H], [V, V]])
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Action {
    /// Same 2x2 polarization matrix on every label.
    Polarization([[Amplitude; 2]; 2]),
    Rules {
        rules: BTreeMap<BasisLabel, Vec<(BasisLabel, Amplitude)>>,
        /// Inputs on which the map is required to be isometric.
        support: BTreeSet<BasisLabel>,
        /// Labels without a rule pass through unchanged.
        passthrough: bool,
    },
}

/// Linear single-photon map over [`BasisLabel`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementOp {
    name: String,
    action: Action,
}

impl ElementOp {
    pub fn identity() -> Self {
        Self {
            name: "identity".into(),
            action: Action::Rules {
                rules: BTreeMap::new(),
                support: BTreeSet::new(),
                passthrough: true,
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Image of one input label. Fails when the element is not defined on it.
    pub fn image(&self, label: &BasisLabel) -> Result<Vec<(BasisLabel, Amplitude)>> {
        match &self.action {
            Action::Polarization(m) => {
                let col = label.pol.index();
                Ok([Polarization::H, Polarization::V]
                    .into_iter()
                    .map(|p| (BasisLabel { pol: p, ..*label }, m[p.index()][col]))
                    .filter(|(_, a)| *a != ZERO)
                    .collect())
            }
            Action::Rules {
                rules, passthrough, ..
            } => match rules.get(label) {
                Some(img) => Ok(img.clone()),
                None if *passthrough => Ok(vec![(*label, ONE)]),
                None => Err(Error::domain(format!(
                    "element `{}` is undefined on label {label}",
                    self.name
                ))),
            },
        }
    }

    /// Hermitian adjoint; only polarization elements have one here.
    pub fn adjoint(&self) -> Option<Self> {
        match &self.action {
            Action::Polarization(m) => {
                let mut adj = [[ZERO; 2]; 2];
                for (r, row) in adj.iter_mut().enumerate() {
                    for (c, x) in row.iter_mut().enumerate() {
                        *x = m[c][r].conj();
                    }
                }
                Some(Self {
                    name: format!("{}^dagger", self.name),
                    action: Action::Polarization(adj),
                })
            }
            Action::Rules { .. } => None,
        }
    }

    /// Columns on the declared support are orthonormal within 1e-12.
    pub fn is_isometry(&self) -> bool {
        match &self.action {
            Action::Polarization(m) => (0..2).all(|i| {
                (0..2).all(|j| {
                    let ip: Amplitude = (0..2).map(|r| m[r][i].conj() * m[r][j]).sum();
                    let want = if i == j { ONE } else { ZERO };
                    (ip - want).norm() < ISOMETRY_TOL
                })
            }),
            Action::Rules {
                rules,
                support,
                passthrough,
            } => {
                let columns: Vec<BTreeMap<BasisLabel, Amplitude>> = support
                    .iter()
                    .map(|l| {
                        let mut col = BTreeMap::new();
                        for (out, a) in &rules[l] {
                            *col.entry(*out).or_insert(ZERO) += a;
                        }
                        col
                    })
                    .collect();
                // Images must stay clear of the identity columns.
                if *passthrough
                    && columns
                        .iter()
                        .flat_map(BTreeMap::keys)
                        .any(|out| !rules.contains_key(out))
                {
                    return false;
                }
                columns.iter().enumerate().all(|(i, ci)| {
                    columns[i..].iter().enumerate().all(|(k, cj)| {
                        let ip: Amplitude = ci
                            .iter()
                            .filter_map(|(l, a)| cj.get(l).map(|b| a.conj() * b))
                            .sum();
                        let want = if k == 0 { ONE } else { ZERO };
                        (ip - want).norm() < ISOMETRY_TOL
                    })
                })
            }
        }
    }

    fn rules(name: String, entries: Vec<RuleEntry>, passthrough: bool) -> Self {
        let support = entries.iter().filter(|e| e.2).map(|e| e.0).collect();
        let rules = entries.into_iter().map(|(l, img, _)| (l, img)).collect();
        Self {
            name,
            action: Action::Rules {
                rules,
                support,
                passthrough,
            },
        }
    }
}

/// Rule table, one input label per line.
impl fmt::Display for ElementOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}:", self.name)?;
        match &self.action {
            Action::Polarization(m) => {
                for col in [Polarization::H, Polarization::V] {
                    let c = col.index();
                    writeln!(
                        f,
                        "  |{col}> -> ({:.6}{:+.6}i)|H> + ({:.6}{:+.6}i)|V>  (any frequency, any path)",
                        m[0][c].re, m[0][c].im, m[1][c].re, m[1][c].im
                    )?;
                }
            }
            Action::Rules {
                rules, passthrough, ..
            } => {
                for (input, img) in rules {
                    write!(f, "  {input} ->")?;
                    for (out, a) in img {
                        write!(f, " ({:.6}{:+.6}i){out}", a.re, a.im)?;
                    }
                    writeln!(f)?;
                }
                if *passthrough {
                    writeln!(f, "  otherwise -> unchanged")?;
                }
            }
        }
        Ok(())
    }
}

fn all_pol_freq() -> impl Iterator<Item = (Polarization, FrequencyMode)> {
    [Polarization::H, Polarization::V]
        .into_iter()
        .flat_map(|p| [FrequencyMode::W1, FrequencyMode::W2].map(move |f| (p, f)))
}

fn distinct(paths: &[PathId], what: &str) -> Result<()> {
    let set: BTreeSet<_> = paths.iter().collect();
    if set.len() != paths.len() {
        return Err(Error::structural(format!(
            "{what} needs distinct paths, got {paths:?}"
        )));
    }
    Ok(())
}

/// Frequency- and path-independent polarization unitary
/// `|H⟩ → α|H⟩ + β|V⟩`, `|V⟩ → −β*|H⟩ + α*|V⟩`.
pub fn collective_noise(p: NoiseParams) -> ElementOp {
    ElementOp {
        name: "collective-noise".into(),
        action: Action::Polarization(p.matrix()),
    }
}

/// Wavelength division multiplexer: `ω1` on `in_path` goes to `upper`, `ω2`
/// to `lower`. Defined only on `in_path`.
pub fn wdm(in_path: PathId, upper: PathId, lower: PathId) -> Result<ElementOp> {
    distinct(&[in_path, upper, lower], "wdm")?;
    let entries = all_pol_freq()
        .map(|(pol, freq)| {
            let out = match freq {
                FrequencyMode::W1 => upper,
                FrequencyMode::W2 => lower,
            };
            (
                BasisLabel::new(pol, freq, in_path),
                vec![(BasisLabel::new(pol, freq, out), ONE)],
                true,
            )
        })
        .collect();
    Ok(ElementOp::rules(
        format!("wdm[{in_path}->{upper}|{lower}]"),
        entries,
        false,
    ))
}

/// Ideal frequency shifter on `path`: `ω1 → ω2`; photons already at `ω2` are
/// left alone. Identity on other paths.
///
/// The map is isometric on the `ω1` inputs only, since both frequencies land
/// on `ω2`.
pub fn frequency_shifter(path: PathId) -> ElementOp {
    let entries = all_pol_freq()
        .map(|(pol, freq)| {
            (
                BasisLabel::new(pol, freq, path),
                vec![(BasisLabel::new(pol, FrequencyMode::W2, path), ONE)],
                freq == FrequencyMode::W1,
            )
        })
        .collect();
    ElementOp::rules(format!("fs[{path}]"), entries, true)
}

/// Half-wave plate on `path`: `|H⟩ ↔ |V⟩`. Identity on other paths.
pub fn half_wave_plate(path: PathId) -> ElementOp {
    let entries = all_pol_freq()
        .map(|(pol, freq)| {
            (
                BasisLabel::new(pol, freq, path),
                vec![(BasisLabel::new(pol.flipped(), freq, path), ONE)],
                true,
            )
        })
        .collect();
    ElementOp::rules(format!("hwp[{path}]"), entries, true)
}

/// Polarizing beam splitter. `H` transmits and `V` reflects, with no phase:
/// `(H, in_upper) → out1`, `(V, in_upper) → out2`, `(V, in_lower) → out1`,
/// `(H, in_lower) → out2`.
pub fn pbs(in_upper: PathId, in_lower: PathId, out1: PathId, out2: PathId) -> Result<ElementOp> {
    distinct(&[in_upper, in_lower, out1, out2], "pbs")?;
    let mut entries = Vec::new();
    for (pol, freq) in all_pol_freq() {
        for input in [in_upper, in_lower] {
            let out = match (input == in_upper, pol) {
                (true, Polarization::H) | (false, Polarization::V) => out1,
                _ => out2,
            };
            entries.push((
                BasisLabel::new(pol, freq, input),
                vec![(BasisLabel::new(pol, freq, out), ONE)],
                true,
            ));
        }
    }
    Ok(ElementOp::rules(
        format!("pbs[{in_upper},{in_lower}->{out1},{out2}]"),
        entries,
        false,
    ))
}

/// Mixed polarization noise: the two-photon polarization factor is replaced
/// by `|HH⟩, |HV⟩, |VH⟩, |VV⟩` with the given weights while the frequency
/// (and path) factor is kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedPolarizationNoise {
    weights: MixedNoiseWeights,
}

pub fn mixed_polarization_noise(w: MixedNoiseWeights) -> MixedPolarizationNoise {
    MixedPolarizationNoise { weights: w }
}

impl MixedPolarizationNoise {
    pub fn weights(&self) -> MixedNoiseWeights {
        self.weights
    }

    /// Components with zero weight are omitted.
    pub fn apply(&self, source: &PureState) -> Result<EnsembleState<BasisLabel>> {
        if source.n_photons() != 2 {
            return Err(Error::structural(format!(
                "mixed polarization noise acts on photon pairs, got {} photons",
                source.n_photons()
            )));
        }
        for photon in 0..2 {
            let pols: BTreeSet<_> = source.terms().map(|(k, _)| k[photon].pol).collect();
            if pols.len() != 1 {
                return Err(Error::precondition(format!(
                    "photon {photon} polarization is not separable from frequency"
                )));
            }
        }
        let mut components = Vec::new();
        for (w, pols) in self.weights.components() {
            if w == 0.0 {
                continue;
            }
            let mut state = source.clone();
            for (photon, pol) in pols.into_iter().enumerate() {
                state = state.map_photon(photon, |l| Ok(vec![(BasisLabel { pol, ..*l }, ONE)]))?;
            }
            components.push((w, state));
        }
        EnsembleState::new(components)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    use proptest::prelude::*;

    use super::*;
    use FrequencyMode::{W1, W2};
    use Polarization::{H, V};

    fn l(pol: Polarization, freq: FrequencyMode, path: u32) -> BasisLabel {
        BasisLabel::new(pol, freq, PathId(path))
    }

    fn c(x: f64) -> Amplitude {
        Amplitude::new(x, 0.0)
    }

    #[test]
    fn noise_params_validation() {
        assert!(NoiseParams::new(c(0.6), c(0.8)).is_ok());
        assert!(matches!(
            NoiseParams::new(c(0.6), c(0.6)),
            Err(Error::Domain(_))
        ));
        assert!(NoiseAngles::new(-0.1, 0.0).is_err());
        assert!(NoiseAngles::new(0.1, TAU).is_err());
        let p = NoiseAngles::new(0.4, 1.3).unwrap().params();
        assert!((p.alpha().norm_sqr() + p.beta().norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_noise_is_identity() {
        let op = collective_noise(NoiseParams::identity());
        for (pol, freq) in all_pol_freq() {
            assert_eq!(
                op.image(&l(pol, freq, 3)).unwrap(),
                vec![(l(pol, freq, 3), c(1.0))]
            );
        }
    }

    #[test]
    fn noise_acts_on_h_as_given() {
        let p = NoiseParams::new(Amplitude::new(0.6, 0.0), Amplitude::new(0.0, 0.8)).unwrap();
        let op = collective_noise(p);
        let img = op.image(&l(H, W1, 2)).unwrap();
        assert_eq!(img, vec![(l(H, W1, 2), p.alpha()), (l(V, W1, 2), p.beta())]);
        assert!(op.is_isometry());
    }

    #[test]
    fn full_flip_noise_squares_to_minus_identity() {
        let p = NoiseParams::new(c(0.0), c(1.0)).unwrap();
        let op = collective_noise(p);
        assert_eq!(op.image(&l(H, W2, 0)).unwrap(), vec![(l(V, W2, 0), c(1.0))]);
        assert_eq!(
            op.image(&l(V, W2, 0)).unwrap(),
            vec![(l(H, W2, 0), c(-1.0))]
        );
        let s = PureState::ket(vec![l(H, W1, 0)]).unwrap();
        let twice = s
            .apply_element(0, &op)
            .unwrap()
            .apply_element(0, &op)
            .unwrap();
        assert_eq!(twice.amplitude(&[l(H, W1, 0)]), c(-1.0));
        assert_eq!(twice.len(), 1);
    }

    #[test]
    fn noise_then_adjoint_restores_state() {
        let op = collective_noise(NoiseAngles::new(1.1, 2.5).unwrap().params());
        let adj = op.adjoint().unwrap();
        let s = PureState::from_terms(
            2,
            [
                (vec![l(H, W1, 0), l(H, W2, 1)], c(FRAC_1_SQRT_2)),
                (vec![l(H, W2, 0), l(H, W1, 1)], c(FRAC_1_SQRT_2)),
            ],
        )
        .unwrap();
        let back = s
            .apply_element(0, &op)
            .unwrap()
            .apply_element(0, &adj)
            .unwrap();
        for (k, a) in s.terms() {
            assert!((back.amplitude(k) - a).norm() < 1e-12);
        }
        let stray: f64 = back
            .terms()
            .filter(|(k, _)| s.amplitude(k) == ZERO)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        assert!(stray < 1e-24);
    }

    #[test]
    fn wdm_routes_by_frequency() {
        let op = wdm(PathId(0), PathId(1), PathId(2)).unwrap();
        assert_eq!(op.image(&l(V, W1, 0)).unwrap(), vec![(l(V, W1, 1), c(1.0))]);
        assert_eq!(op.image(&l(H, W2, 0)).unwrap(), vec![(l(H, W2, 2), c(1.0))]);
        assert!(matches!(op.image(&l(H, W2, 5)), Err(Error::Domain(m)) if m.contains("(H,w2,5)")));
        assert!(wdm(PathId(0), PathId(0), PathId(2)).is_err());
        assert!(op.is_isometry());

        let s = PureState::from_terms(
            1,
            [
                (vec![l(H, W1, 0)], Amplitude::new(0.6, 0.0)),
                (vec![l(H, W2, 0)], Amplitude::new(0.0, 0.8)),
            ],
        )
        .unwrap();
        let out = s.apply_element(0, &op).unwrap();
        assert_eq!(out.amplitude(&[l(H, W1, 1)]), Amplitude::new(0.6, 0.0));
        assert_eq!(out.amplitude(&[l(H, W2, 2)]), Amplitude::new(0.0, 0.8));
    }

    #[test]
    fn frequency_shifter_rules() {
        let op = frequency_shifter(PathId(1));
        assert_eq!(op.image(&l(H, W1, 1)).unwrap(), vec![(l(H, W2, 1), c(1.0))]);
        assert_eq!(op.image(&l(V, W2, 1)).unwrap(), vec![(l(V, W2, 1), c(1.0))]);
        assert_eq!(op.image(&l(H, W1, 4)).unwrap(), vec![(l(H, W1, 4), c(1.0))]);
        assert!(op.is_isometry());
    }

    #[test]
    fn half_wave_plate_rules() {
        let op = half_wave_plate(PathId(2));
        assert_eq!(op.image(&l(H, W2, 2)).unwrap(), vec![(l(V, W2, 2), c(1.0))]);
        assert_eq!(op.image(&l(V, W2, 2)).unwrap(), vec![(l(H, W2, 2), c(1.0))]);
        assert_eq!(op.image(&l(V, W1, 0)).unwrap(), vec![(l(V, W1, 0), c(1.0))]);
        let s = PureState::ket(vec![l(H, W2, 2)]).unwrap();
        let twice = s
            .apply_element(0, &op)
            .unwrap()
            .apply_element(0, &op)
            .unwrap();
        assert_eq!(twice, s);
        assert!(op.is_isometry());
    }

    #[test]
    fn pbs_rules() {
        let op = pbs(PathId(1), PathId(2), PathId(3), PathId(4)).unwrap();
        assert_eq!(op.image(&l(H, W2, 1)).unwrap(), vec![(l(H, W2, 3), c(1.0))]);
        assert_eq!(op.image(&l(V, W2, 1)).unwrap(), vec![(l(V, W2, 4), c(1.0))]);
        assert_eq!(op.image(&l(V, W2, 2)).unwrap(), vec![(l(V, W2, 3), c(1.0))]);
        assert_eq!(op.image(&l(H, W2, 2)).unwrap(), vec![(l(H, W2, 4), c(1.0))]);
        assert!(op.is_isometry());
        assert!(pbs(PathId(1), PathId(2), PathId(1), PathId(4)).is_err());
        assert!(op.image(&l(H, W2, 3)).is_err());
    }

    #[test]
    fn pbs_outputs_partition_inputs() {
        let op = pbs(PathId(1), PathId(2), PathId(3), PathId(4)).unwrap();
        let mut seen = BTreeSet::new();
        for pol in [H, V] {
            for input in [1, 2] {
                let img = op.image(&l(pol, W2, input)).unwrap();
                assert_eq!(img.len(), 1);
                assert!(seen.insert(img[0].0), "two inputs share an output label");
                assert!([PathId(3), PathId(4)].contains(&img[0].0.path));
            }
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn rule_tables_print() {
        let text = pbs(PathId(1), PathId(2), PathId(3), PathId(4))
            .unwrap()
            .to_string();
        assert!(text.contains("(H,w1,1) -> (1.000000+0.000000i)(H,w1,3)"));
        let text = collective_noise(NoiseAngles::new(FRAC_PI_4, 0.0).unwrap().params()).to_string();
        assert!(text.contains("|H> -> (0.707107+0.000000i)|H> + (0.707107+0.000000i)|V>"));
        assert!(half_wave_plate(PathId(0))
            .to_string()
            .contains("otherwise -> unchanged"));
    }

    #[test]
    fn mixed_noise_components() {
        let src = PureState::from_terms(
            2,
            [
                (vec![l(H, W1, 0), l(H, W2, 5)], c(FRAC_1_SQRT_2)),
                (vec![l(H, W2, 0), l(H, W1, 5)], c(FRAC_1_SQRT_2)),
            ],
        )
        .unwrap();
        let single = mixed_polarization_noise(MixedNoiseWeights::new(1.0, 0.0, 0.0, 0.0).unwrap())
            .apply(&src)
            .unwrap();
        assert_eq!(single.components().len(), 1);
        assert_eq!(single.components()[0].1, src);

        let uni = mixed_polarization_noise(MixedNoiseWeights::uniform())
            .apply(&src)
            .unwrap();
        assert_eq!(uni.components().len(), 4);
        let vh = &uni.components()[2].1;
        assert_eq!(uni.components()[2].0, 0.25);
        assert_eq!(vh.amplitude(&[l(V, W1, 0), l(H, W2, 5)]), c(FRAC_1_SQRT_2));
        assert_eq!(vh.amplitude(&[l(V, W2, 0), l(H, W1, 5)]), c(FRAC_1_SQRT_2));

        assert!(MixedNoiseWeights::new(0.5, 0.5, 0.5, 0.0).is_err());
        assert!(MixedNoiseWeights::new(1.5, -0.5, 0.0, 0.0).is_err());
    }

    fn arb_state() -> impl Strategy<Value = PureState> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4).prop_filter_map(
            "nonzero",
            |coeffs| {
                let terms: Vec<_> = all_pol_freq()
                    .zip(coeffs)
                    .map(|((p, f), (re, im))| (vec![l(p, f, 0)], Amplitude::new(re, im)))
                    .collect();
                PureState::from_terms(1, terms.clone()).ok().or_else(|| {
                    let norm: f64 = terms.iter().map(|t| t.1.norm_sqr()).sum::<f64>().sqrt();
                    if norm < 1e-6 {
                        return None;
                    }
                    PureState::from_terms(1, terms.into_iter().map(|(k, a)| (k, a / norm))).ok()
                })
            },
        )
    }

    proptest! {
        #[test]
        fn noise_commutes_with_wdm(s in arb_state(), theta in 0.0..FRAC_PI_2, phi in 0.0..TAU) {
            let noise = collective_noise(NoiseAngles::new(theta, phi).unwrap().params());
            let router = wdm(PathId(0), PathId(1), PathId(2)).unwrap();
            let a = s.apply_element(0, &noise).unwrap().apply_element(0, &router).unwrap();
            let b = s.apply_element(0, &router).unwrap().apply_element(0, &noise).unwrap();
            for (k, amp) in a.terms().chain(b.terms()) {
                let _ = amp;
                prop_assert!((a.amplitude(k) - b.amplitude(k)).norm() < 1e-12);
            }
        }

        #[test]
        fn path_local_elements_ignore_other_paths(pol in prop::bool::ANY, w2 in prop::bool::ANY, path in 0u32..6) {
            prop_assume!(path != 3);
            let label = l(if pol { H } else { V }, if w2 { W2 } else { W1 }, path);
            for op in [frequency_shifter(PathId(3)), half_wave_plate(PathId(3))] {
                prop_assert_eq!(op.image(&label).unwrap(), vec![(label, c(1.0))]);
            }
        }

        #[test]
        fn noise_is_unitary(theta in 0.0..FRAC_PI_2, phi in 0.0..TAU) {
            prop_assert!(collective_noise(NoiseAngles::new(theta, phi).unwrap().params()).is_isometry());
        }
    }
}
