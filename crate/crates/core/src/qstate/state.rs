use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{BasisLabel, FrequencyMode, Label, PathId, PolLabel, NORM_TOL};
use crate::elements::ElementOp;
use crate::{Amplitude, Error, Result};

/// Sparse pure state of `n_photons` photons.
///
/// Amplitudes are keyed by one label per photon, in photon order. Exact
/// zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<L: Label = BasisLabel> {
    n_photons: usize,
    amps: BTreeMap<Vec<L>, Amplitude>,
}

/// Result of post-selecting on one path per photon.
#[derive(Debug, Clone, PartialEq)]
pub struct PathProjection<L: Label> {
    pub probability: f64,
    /// Renormalized post-selected state; `None` when the pattern never occurs.
    pub conditional: Option<PureState<L>>,
}

impl<L: Label> PureState<L> {
    /// Builds a normalized state from `(labels, amplitude)` terms.
    ///
    /// Repeated label tuples are summed. The squared norm must be 1 within
    /// [`NORM_TOL`].
    pub fn from_terms<I>(n_photons: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<L>, Amplitude)>,
    {
        let state = Self::from_raw(n_photons, terms)?;
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!(
                "state is not normalized (squared norm {norm})"
            )));
        }
        Ok(state)
    }

    /// Single product ket with unit amplitude.
    pub fn ket(labels: Vec<L>) -> Result<Self> {
        let n = labels.len();
        Self::from_terms(n, [(labels, Amplitude::new(1.0, 0.0))])
    }

    /// Unchecked norm; only structure is validated.
    pub(crate) fn from_raw<I>(n_photons: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<L>, Amplitude)>,
    {
        if n_photons == 0 {
            return Err(Error::structural("a state needs at least one photon"));
        }
        let mut amps: BTreeMap<Vec<L>, Amplitude> = BTreeMap::new();
        for (labels, amp) in terms {
            if labels.len() != n_photons {
                return Err(Error::structural(format!(
                    "term has {} labels, expected {n_photons}",
                    labels.len()
                )));
            }
            *amps.entry(labels).or_default() += amp;
        }
        amps.retain(|_, a| *a != Amplitude::default());
        if amps.is_empty() {
            return Err(Error::domain("state has no nonzero amplitude"));
        }
        Ok(Self { n_photons, amps })
    }

    pub fn n_photons(&self) -> usize {
        self.n_photons
    }

    /// Number of stored basis terms.
    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Terms in canonical label order.
    pub fn terms(&self) -> impl Iterator<Item = (&[L], Amplitude)> {
        self.amps.iter().map(|(k, a)| (k.as_slice(), *a))
    }

    pub fn amplitude(&self, labels: &[L]) -> Amplitude {
        self.amps.get(labels).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// Copy rescaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::domain("cannot normalize a zero-norm state"));
        }
        let scale = 1.0 / norm.sqrt();
        Ok(Self {
            n_photons: self.n_photons,
            amps: self
                .amps
                .iter()
                .map(|(k, a)| (k.clone(), a * scale))
                .collect(),
        })
    }

    /// Paths occupied by any photon.
    pub fn paths(&self) -> BTreeSet<PathId> {
        self.amps.keys().flatten().map(Label::path).collect()
    }

    /// `self ⊗ other`; the photons of `other` are appended after those of
    /// `self`. The two states must not share any path.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let shared: Vec<_> = self.paths().intersection(&other.paths()).copied().collect();
        if !shared.is_empty() {
            return Err(Error::structural(format!(
                "tensor factors overlap on paths {shared:?}"
            )));
        }
        let mut amps = BTreeMap::new();
        for (ka, a) in &self.amps {
            for (kb, b) in &other.amps {
                let mut key = ka.clone();
                key.extend(kb.iter().cloned());
                amps.insert(key, a * b);
            }
        }
        amps.retain(|_, a: &mut Amplitude| *a != Amplitude::default());
        Ok(Self {
            n_photons: self.n_photons + other.n_photons,
            amps,
        })
    }

    /// Applies a linear map to photon `photon`. `map` returns the image of a
    /// single label as a list of `(label, coefficient)`.
    pub fn map_photon<F>(&self, photon: usize, mut map: F) -> Result<Self>
    where
        F: FnMut(&L) -> Result<Vec<(L, Amplitude)>>,
    {
        self.check_photon(photon)?;
        let mut images: BTreeMap<L, Vec<(L, Amplitude)>> = BTreeMap::new();
        let mut out: BTreeMap<Vec<L>, Amplitude> = BTreeMap::new();
        for (key, amp) in &self.amps {
            let label = &key[photon];
            if !images.contains_key(label) {
                images.insert(label.clone(), map(label)?);
            }
            for (image, coeff) in &images[label] {
                if *coeff == Amplitude::default() {
                    continue;
                }
                let mut next = key.clone();
                next[photon] = image.clone();
                *out.entry(next).or_default() += coeff * amp;
            }
        }
        out.retain(|_, a| *a != Amplitude::default());
        if out.is_empty() {
            return Err(Error::domain("linear map annihilated the state"));
        }
        Ok(Self {
            n_photons: self.n_photons,
            amps: out,
        })
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner_product(&self, other: &Self) -> Result<Amplitude> {
        if self.n_photons != other.n_photons {
            return Err(Error::structural(format!(
                "inner product of {}-photon and {}-photon states",
                self.n_photons, other.n_photons
            )));
        }
        // Iterate over the smaller table.
        let (small, large, conj_small) = if self.amps.len() <= other.amps.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Amplitude::default();
        for (key, a) in &small.amps {
            if let Some(b) = large.amps.get(key) {
                acc += if conj_small {
                    a.conj() * b
                } else {
                    b.conj() * a
                };
            }
        }
        Ok(acc)
    }

    /// `|⟨reference|self⟩|²` after renormalizing `self`.
    pub fn fidelity(&self, reference: &Self) -> Result<f64> {
        check_reference(reference)?;
        let norm = self.norm_sqr();
        if norm <= 0.0 {
            return Err(Error::domain("fidelity of a zero-norm state"));
        }
        let overlap = reference.inner_product(self)?.norm_sqr() / norm;
        Ok(overlap.clamp(0.0, 1.0))
    }

    /// Post-selects on photon `i` leaving through `pattern[i]`.
    pub fn project_paths(&self, pattern: &[PathId]) -> Result<PathProjection<L>> {
        if pattern.len() != self.n_photons {
            return Err(Error::structural(format!(
                "pattern names {} paths for {} photons",
                pattern.len(),
                self.n_photons
            )));
        }
        let kept: BTreeMap<Vec<L>, Amplitude> = self
            .amps
            .iter()
            .filter(|(key, _)| key.iter().zip(pattern).all(|(l, p)| l.path() == *p))
            .map(|(k, a)| (k.clone(), *a))
            .collect();
        let probability: f64 = kept.values().map(|a| a.norm_sqr()).sum();
        if kept.is_empty() {
            return Ok(PathProjection {
                probability: 0.0,
                conditional: None,
            });
        }
        let projected = Self {
            n_photons: self.n_photons,
            amps: kept,
        };
        Ok(PathProjection {
            probability,
            conditional: Some(projected.normalized()?),
        })
    }

    /// Photon `i` measured on path `pattern[i]`, for every complete pattern
    /// present in the state, in lexicographic path order.
    pub fn occupied_patterns(&self) -> BTreeSet<Vec<PathId>> {
        self.amps
            .keys()
            .map(|k| k.iter().map(Label::path).collect())
            .collect()
    }

    pub(crate) fn check_photon(&self, photon: usize) -> Result<()> {
        if photon >= self.n_photons {
            return Err(Error::structural(format!(
                "photon index {photon} out of range for {} photons",
                self.n_photons
            )));
        }
        Ok(())
    }
}

fn check_reference<L: Label>(reference: &PureState<L>) -> Result<()> {
    let norm = reference.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::domain(format!(
            "reference state is not normalized (squared norm {norm})"
        )));
    }
    Ok(())
}

impl PureState<BasisLabel> {
    /// Applies an optical element to photon `photon`.
    pub fn apply_element(&self, photon: usize, op: &ElementOp) -> Result<Self> {
        self.map_photon(photon, |label| op.image(label))
    }

    /// Drops the frequency label. Every photon must carry one definite
    /// frequency across all terms.
    pub fn strip_frequency(&self) -> Result<PureState<PolLabel>> {
        let mut freqs: Vec<Option<FrequencyMode>> = vec![None; self.n_photons];
        for key in self.amps.keys() {
            for (i, label) in key.iter().enumerate() {
                match freqs[i] {
                    None => freqs[i] = Some(label.freq),
                    Some(f) if f != label.freq => {
                        return Err(Error::precondition(format!(
                            "photon {i} is in a superposition of frequencies; \
                             frequency is not separable"
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        let amps = self
            .amps
            .iter()
            .map(|(key, a)| {
                let stripped = key.iter().map(|l| PolLabel::new(l.pol, l.path)).collect();
                (stripped, *a)
            })
            .collect();
        Ok(PureState {
            n_photons: self.n_photons,
            amps,
        })
    }
}

/// One line per term: `amp_re amp_im : (label)(label)…` in canonical order.
impl<L: Label> fmt::Display for PureState<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (key, amp) in &self.amps {
            write!(f, "{:.12e} {:.12e} :", amp.re, amp.im)?;
            write!(f, " ")?;
            for label in key {
                write!(f, "{label}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use proptest::prelude::*;

    use super::*;
    use crate::elements::{collective_noise, NoiseAngles};
    use crate::qstate::Polarization::{H, V};
    use crate::qstate::{FrequencyMode::*, PathId, Polarization};

    fn c(re: f64) -> Amplitude {
        Amplitude::new(re, 0.0)
    }

    fn b(pol: Polarization, freq: FrequencyMode, path: u32) -> BasisLabel {
        BasisLabel::new(pol, freq, PathId(path))
    }

    fn pl(pol: Polarization, path: u32) -> PolLabel {
        PolLabel::new(pol, PathId(path))
    }

    fn bell(
        first: [Polarization; 2],
        second: [Polarization; 2],
        paths: [u32; 2],
    ) -> PureState<PolLabel> {
        PureState::from_terms(
            2,
            [
                (
                    vec![pl(first[0], paths[0]), pl(first[1], paths[1])],
                    c(FRAC_1_SQRT_2),
                ),
                (
                    vec![pl(second[0], paths[0]), pl(second[1], paths[1])],
                    c(FRAC_1_SQRT_2),
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn tensor_of_unit_kets() {
        let x = PureState::ket(vec![b(H, W1, 0)]).unwrap();
        let y = PureState::ket(vec![b(H, W2, 1)]).unwrap();
        let t = x.tensor(&y).unwrap();
        assert_eq!(t.n_photons(), 2);
        assert_eq!(t.len(), 1);
        assert_eq!(t.amplitude(&[b(H, W1, 0), b(H, W2, 1)]), c(1.0));
    }

    #[test]
    fn tensor_distributes() {
        let sup = PureState::from_terms(
            1,
            [
                (vec![b(H, W1, 0)], c(FRAC_1_SQRT_2)),
                (vec![b(V, W1, 0)], c(FRAC_1_SQRT_2)),
            ],
        )
        .unwrap();
        let z = PureState::ket(vec![b(H, W2, 1)]).unwrap();
        let t = sup.tensor(&z).unwrap();
        assert_eq!(t.len(), 2);
        for (_, a) in t.terms() {
            assert!((a - c(FRAC_1_SQRT_2)).norm() < 1e-15);
        }
        assert!((t.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_rejects_shared_paths() {
        let x = PureState::ket(vec![b(H, W1, 0)]).unwrap();
        assert!(matches!(x.tensor(&x), Err(Error::Structural(_))));
    }

    #[test]
    fn constructors_reject_subnormalized() {
        let r = PureState::from_terms(1, [(vec![b(H, W1, 0)], c(0.5))]);
        assert!(matches!(r, Err(Error::Domain(_))));
        let r = PureState::<BasisLabel>::from_terms(2, [(vec![b(H, W1, 0)], c(1.0))]);
        assert!(matches!(r, Err(Error::Structural(_))));
    }

    #[test]
    fn zero_amplitudes_are_not_stored() {
        let s = PureState::from_terms(
            1,
            [
                (vec![b(H, W1, 0)], c(1.0)),
                (vec![b(V, W1, 0)], c(0.0)),
                (vec![b(V, W2, 0)], c(0.5)),
                (vec![b(V, W2, 0)], c(-0.5)),
            ],
        )
        .unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn inner_products() {
        let h = PureState::ket(vec![pl(H, 0)]).unwrap();
        let v = PureState::ket(vec![pl(V, 0)]).unwrap();
        assert_eq!(h.inner_product(&v).unwrap(), c(0.0));
        assert_eq!(h.inner_product(&h).unwrap(), c(1.0));
        let psi = bell([H, V], [V, H], [4, 5]);
        let phi = bell([H, H], [V, V], [4, 5]);
        assert_eq!(psi.inner_product(&phi).unwrap(), c(0.0));
        let ip = psi.inner_product(&psi).unwrap();
        assert!(ip.im == 0.0 && (ip.re - psi.norm_sqr()).abs() < 1e-15);
        assert!(matches!(h.inner_product(&psi), Err(Error::Structural(_))));
    }

    #[test]
    fn inner_product_conjugate_symmetric() {
        let a = PureState::from_terms(
            1,
            [
                (vec![pl(H, 0)], Amplitude::new(0.6, 0.0)),
                (vec![pl(V, 0)], Amplitude::new(0.0, 0.8)),
            ],
        )
        .unwrap();
        let b = PureState::from_terms(
            1,
            [
                (vec![pl(H, 0)], Amplitude::new(0.0, FRAC_1_SQRT_2)),
                (vec![pl(V, 0)], Amplitude::new(FRAC_1_SQRT_2, 0.0)),
            ],
        )
        .unwrap();
        let ab = a.inner_product(&b).unwrap();
        let ba = b.inner_product(&a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-15);
        // ⟨a|b⟩ = 0.6 · i/√2 + (−0.8i) · 1/√2
        let expected = Amplitude::new(0.0, (0.6 - 0.8) * FRAC_1_SQRT_2);
        assert!((ab - expected).norm() < 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        let psi = bell([H, V], [V, H], [0, 1]);
        let phi = bell([H, H], [V, V], [0, 1]);
        assert!((psi.fidelity(&psi).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(psi.fidelity(&phi).unwrap(), 0.0);
        let uniform = PureState::from_terms(
            2,
            [[H, V], [V, H], [H, H], [V, V]].map(|[x, y]| (vec![pl(x, 0), pl(y, 1)], c(0.5))),
        )
        .unwrap();
        // |⟨ψ+|u⟩|² = (2 · 0.5/√2)² = 1/2
        assert!((uniform.fidelity(&psi).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projection_of_absent_pattern() {
        let psi = bell([H, V], [V, H], [0, 1]);
        let p = psi.project_paths(&[PathId(0), PathId(7)]).unwrap();
        assert_eq!(p.probability, 0.0);
        assert!(p.conditional.is_none());
        assert!(psi.project_paths(&[PathId(0)]).is_err());
    }

    #[test]
    fn projection_renormalizes() {
        let s =
            PureState::from_terms(1, [(vec![pl(H, 0)], c(0.6)), (vec![pl(V, 1)], c(0.8))]).unwrap();
        let p = s.project_paths(&[PathId(1)]).unwrap();
        assert!((p.probability - 0.64).abs() < 1e-15);
        let cond = p.conditional.unwrap();
        assert!((cond.norm_sqr() - 1.0).abs() < 1e-15);
        assert_eq!(cond.len(), 1);
    }

    #[test]
    fn strip_frequency_examples() {
        let s = PureState::ket(vec![b(H, W2, 3), b(V, W2, 5)]).unwrap();
        let stripped = s.strip_frequency().unwrap();
        assert_eq!(stripped.amplitude(&[pl(H, 3), pl(V, 5)]), c(1.0));

        let mixed = PureState::from_terms(
            2,
            [
                (vec![b(H, W1, 0), b(H, W2, 1)], c(FRAC_1_SQRT_2)),
                (vec![b(H, W2, 0), b(H, W1, 1)], c(FRAC_1_SQRT_2)),
            ],
        )
        .unwrap();
        assert!(matches!(
            mixed.strip_frequency(),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn identity_element_is_bitwise_noop() {
        let s = PureState::from_terms(
            1,
            [
                (vec![b(H, W1, 0)], Amplitude::new(0.6, 0.1)),
                (
                    vec![b(V, W2, 0)],
                    Amplitude::new(0.0, (1.0f64 - 0.37).sqrt()),
                ),
            ],
        )
        .unwrap();
        let out = s.apply_element(0, &ElementOp::identity()).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn apply_element_out_of_range_photon() {
        let s = PureState::ket(vec![b(H, W1, 0)]).unwrap();
        assert!(matches!(
            s.apply_element(1, &ElementOp::identity()),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn display_is_canonical() {
        let s = PureState::from_terms(
            2,
            [
                (vec![b(V, W2, 1), b(H, W1, 0)], c(FRAC_1_SQRT_2)),
                (vec![b(H, W1, 1), b(V, W1, 0)], c(-FRAC_1_SQRT_2)),
            ],
        )
        .unwrap();
        let text = s.to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].ends_with(": (H,w1,1)(V,w1,0)"), "{}", lines[0]);
        assert!(lines[0].starts_with("-7.071067811865e-1 0.000000000000e0"));
        assert!(lines[1].ends_with(": (V,w2,1)(H,w1,0)"));
    }

    fn arb_state() -> impl Strategy<Value = PureState> {
        // random single-photon state over a few labels on paths 0..2
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8).prop_filter_map(
            "nonzero",
            |coeffs| {
                let labels = [H, V]
                    .iter()
                    .flat_map(|&p| [W1, W2].map(move |f| (p, f)))
                    .flat_map(|(p, f)| [0u32, 1].map(move |path| b(p, f, path)));
                let terms: Vec<_> = labels
                    .zip(coeffs)
                    .map(|(l, (re, im))| (vec![l], Amplitude::new(re, im)))
                    .collect();
                PureState::from_raw(1, terms).ok()?.normalized().ok()
            },
        )
    }

    proptest! {
        #[test]
        fn noise_preserves_norm(s in arb_state(), theta in 0.0..std::f64::consts::FRAC_PI_2, phi in 0.0..std::f64::consts::TAU) {
            let op = collective_noise(NoiseAngles::new(theta, phi).unwrap().params());
            let out = s.apply_element(0, &op).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn apply_element_is_linear(s1 in arb_state(), s2 in arb_state(), theta in 0.0..1.5, phi in 0.0..6.2) {
            let op = collective_noise(NoiseAngles::new(theta, phi).unwrap().params());
            let sum = PureState::from_raw(1, s1.terms().chain(s2.terms()).map(|(k, a)| (k.to_vec(), a)));
            prop_assume!(sum.is_ok());
            let lhs = sum.unwrap().apply_element(0, &op).unwrap();
            let r1 = s1.apply_element(0, &op).unwrap();
            let r2 = s2.apply_element(0, &op).unwrap();
            let keys: BTreeSet<Vec<BasisLabel>> = lhs.terms().chain(r1.terms()).chain(r2.terms()).map(|(k, _)| k.to_vec()).collect();
            for k in keys {
                let diff = lhs.amplitude(&k) - r1.amplitude(&k) - r2.amplitude(&k);
                prop_assert!(diff.norm() < 1e-12);
            }
        }

        #[test]
        fn tensor_norm_is_multiplicative(s1 in arb_state(), theta in 0.0..1.5) {
            let shifted = s1.map_photon(0, |l| Ok(vec![(BasisLabel { path: PathId(l.path.0 + 10), ..*l }, c(1.0))])).unwrap();
            let other = shifted.apply_element(0, &collective_noise(NoiseAngles::new(theta, 0.3).unwrap().params())).unwrap();
            let t = s1.tensor(&other).unwrap();
            prop_assert!((t.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
