//! The full distribution setup for two or more parties.
//!
//! Each party receives one photon of a frequency-entangled source state. Its
//! pipeline is collective noise, a WDM splitting `ω1`/`ω2` onto an upper and a
//! lower arm, a frequency shifter on the upper arm, a half-wave plate on the
//! lower arm, and a PBS recombining both arms onto two output ports. The
//! output port pattern reveals which noise component each photon picked up;
//! the polarization state conditioned on that pattern is a fixed Bell or
//! GHZ-class state.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::elements::{
    collective_noise, frequency_shifter, half_wave_plate, mixed_polarization_noise, pbs, wdm,
    ElementOp, MixedNoiseWeights, NoiseParams,
};
use crate::qstate::{
    BasisLabel, EnsembleState, FrequencyMode, PathId, PathRegistry, PolLabel, Polarization,
    PureState,
};
use crate::{Amplitude, Error, Result};

/// Largest supported party count (one letter per party).
pub const MAX_PARTIES: usize = 26;

/// Paths owned by one party.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartyPaths {
    pub source: PathId,
    pub upper: PathId,
    pub lower: PathId,
    pub out1: PathId,
    pub out2: PathId,
}

impl PartyPaths {
    pub fn output(&self, port: Port) -> PathId {
        match port {
            Port::One => self.out1,
            Port::Two => self.out2,
        }
    }
}

/// Which PBS output a photon left through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Port {
    One,
    Two,
}

/// Path registry for `n` parties named `a, b, c, …` with ports `a1, a2, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    registry: PathRegistry,
    parties: Vec<PartyPaths>,
}

impl Layout {
    pub fn new(n_parties: usize) -> Result<Self> {
        if !(2..=MAX_PARTIES).contains(&n_parties) {
            return Err(Error::domain(format!(
                "party count must be in 2..={MAX_PARTIES}, got {n_parties}"
            )));
        }
        let mut registry = PathRegistry::new();
        let mut parties = Vec::with_capacity(n_parties);
        for j in 0..n_parties {
            let name = party_name(j);
            parties.push(PartyPaths {
                source: registry.register(format!("source-arm-{name}"))?,
                upper: registry.register(format!("upper-{name}"))?,
                lower: registry.register(format!("lower-{name}"))?,
                out1: registry.register(format!("{name}1"))?,
                out2: registry.register(format!("{name}2"))?,
            });
        }
        Ok(Self { registry, parties })
    }

    pub fn n_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn party(&self, j: usize) -> &PartyPaths {
        &self.parties[j]
    }

    pub fn registry(&self) -> &PathRegistry {
        &self.registry
    }

    pub fn setup(&self, j: usize, noise: NoiseParams) -> PartySetup {
        PartySetup {
            index: j,
            noise,
            paths: self.parties[j],
        }
    }

    /// Output paths for a port pattern.
    pub fn pattern_paths(&self, ports: &[Port]) -> Vec<PathId> {
        ports
            .iter()
            .zip(&self.parties)
            .map(|(p, paths)| paths.output(*p))
            .collect()
    }

    /// Port names such as `a1b2`.
    pub fn pattern_name(&self, ports: &[Port]) -> String {
        self.pattern_paths(ports)
            .into_iter()
            .map(|p| self.registry.name(p).unwrap_or("?"))
            .collect()
    }
}

fn party_name(j: usize) -> char {
    (b'a' + j as u8) as char
}

/// All port patterns in lexicographic order (party 0 varies slowest).
pub fn port_patterns(n_parties: usize) -> impl Iterator<Item = Vec<Port>> {
    (0..1usize << n_parties).map(move |bits| {
        (0..n_parties)
            .map(|j| {
                if bits >> (n_parties - 1 - j) & 1 == 0 {
                    Port::One
                } else {
                    Port::Two
                }
            })
            .collect()
    })
}

/// One party: its channel noise and its paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartySetup {
    pub index: usize,
    pub noise: NoiseParams,
    pub paths: PartyPaths,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellStateId {
    /// `(|HV⟩ + |VH⟩)/√2`
    PsiPlus,
    /// `(|HH⟩ + |VV⟩)/√2`
    PhiPlus,
}

impl BellStateId {
    pub fn name(self) -> &'static str {
        match self {
            BellStateId::PsiPlus => "psi_plus",
            BellStateId::PhiPlus => "phi_plus",
        }
    }

    /// First term of the superposition; the second is its complement.
    fn leading_term(self) -> [Polarization; 2] {
        use Polarization::{H, V};
        match self {
            BellStateId::PsiPlus => [H, V],
            BellStateId::PhiPlus => [H, H],
        }
    }

    pub fn state(self, paths: [PathId; 2]) -> PureState<PolLabel> {
        complement_pair(&self.leading_term(), &paths)
    }
}

/// Per-pattern reference state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ReferenceState {
    Bell(BellStateId),
    /// `(|x⟩ + |x̄⟩)/√2`: the GHZ state with `H ↔ V` flipped on every party
    /// whose entry of `x` is `V`.
    Ghz(Vec<Polarization>),
}

impl ReferenceState {
    pub fn name(&self) -> String {
        match self {
            ReferenceState::Bell(b) => b.name().to_string(),
            ReferenceState::Ghz(x) => {
                let s: String = x.iter().map(ToString::to_string).collect();
                format!("ghz_{s}")
            }
        }
    }

    pub fn leading_term(&self) -> Vec<Polarization> {
        match self {
            ReferenceState::Bell(b) => b.leading_term().to_vec(),
            ReferenceState::Ghz(x) => x.clone(),
        }
    }

    /// Parties whose polarization must be flipped to turn this state into
    /// `(|H…H⟩ + |V…V⟩)/√2`.
    pub fn flips(&self) -> Vec<bool> {
        self.leading_term()
            .iter()
            .map(|p| *p == Polarization::V)
            .collect()
    }

    pub fn state(&self, paths: &[PathId]) -> PureState<PolLabel> {
        complement_pair(&self.leading_term(), paths)
    }
}

impl fmt::Display for ReferenceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

fn complement_pair(leading: &[Polarization], paths: &[PathId]) -> PureState<PolLabel> {
    let term = |flip: bool| -> Vec<PolLabel> {
        leading
            .iter()
            .zip(paths)
            .map(|(p, path)| PolLabel::new(if flip { p.flipped() } else { *p }, *path))
            .collect()
    };
    let amp = Amplitude::new(FRAC_1_SQRT_2, 0.0);
    PureState::from_terms(leading.len(), [(term(false), amp), (term(true), amp)])
        .expect("complementary kets are orthogonal and normalized")
}

/// Reference for each two-party pattern: `a1b1 → ψ+`, `a1b2 → φ+`,
/// `a2b1 → φ+`, `a2b2 → ψ+`.
pub fn bell_reference(ports: [Port; 2]) -> BellStateId {
    if ports[0] == ports[1] {
        BellStateId::PsiPlus
    } else {
        BellStateId::PhiPlus
    }
}

/// Reference for an N-party pattern.
///
/// A photon leaving port 2 picked up the `V` component of its noise. The
/// upper arm keeps polarization and the lower arm flips it, and only the last
/// party holds `ω2` in the leading frequency term, so the leading
/// polarization term is `x_j = port_j ⊕ [j = N−1]`.
pub fn ghz_reference(ports: &[Port]) -> ReferenceState {
    let last = ports.len() - 1;
    let x = ports
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let flip = (*p == Port::Two) ^ (j == last);
            if flip {
                Polarization::V
            } else {
                Polarization::H
            }
        })
        .collect();
    ReferenceState::Ghz(x)
}

/// Reference used in reports: Bell ids for two parties, GHZ-class states
/// otherwise.
pub fn reference_for(ports: &[Port]) -> ReferenceState {
    if ports.len() == 2 {
        ReferenceState::Bell(bell_reference([ports[0], ports[1]]))
    } else {
        ghz_reference(ports)
    }
}

/// Source state on the layout's source arms: all photons `H`, frequency
/// factor `(|ω1…ω1 ω2⟩ + |ω2…ω2 ω1⟩)/√2`.
pub fn source_state_on(layout: &Layout) -> PureState {
    let n = layout.n_parties();
    let term = |lead: FrequencyMode, tail: FrequencyMode| -> Vec<BasisLabel> {
        (0..n)
            .map(|j| {
                let freq = if j + 1 == n { tail } else { lead };
                BasisLabel::new(Polarization::H, freq, layout.party(j).source)
            })
            .collect()
    };
    let amp = Amplitude::new(FRAC_1_SQRT_2, 0.0);
    PureState::from_terms(
        n,
        [
            (term(FrequencyMode::W1, FrequencyMode::W2), amp),
            (term(FrequencyMode::W2, FrequencyMode::W1), amp),
        ],
    )
    .expect("source terms are orthonormal")
}

/// Source state for `n_parties` on the default [`Layout`].
pub fn source_state(n_parties: usize) -> Result<PureState> {
    Ok(source_state_on(&Layout::new(n_parties)?))
}

/// Elements a party's photon passes through, in order.
pub fn build_pipeline(setup: &PartySetup) -> Result<Vec<ElementOp>> {
    let p = setup.paths;
    Ok(vec![
        collective_noise(setup.noise),
        wdm(p.source, p.upper, p.lower)?,
        frequency_shifter(p.upper),
        half_wave_plate(p.lower),
        pbs(p.upper, p.lower, p.out1, p.out2)?,
    ])
}

/// Post-selected polarization state for one pattern.
#[derive(Debug, Clone, PartialEq)]
pub enum Conditional {
    Pure(PureState<PolLabel>),
    Mixed(EnsembleState<PolLabel>),
}

impl Conditional {
    pub fn fidelity(&self, reference: &PureState<PolLabel>) -> Result<f64> {
        match self {
            Conditional::Pure(s) => s.fidelity(reference),
            Conditional::Mixed(e) => e.fidelity(reference),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionOutcome {
    pub ports: Vec<Port>,
    pub pattern: Vec<PathId>,
    pub pattern_name: String,
    pub probability: f64,
    /// `None` when the pattern has probability zero.
    pub conditional: Option<Conditional>,
    pub reference: ReferenceState,
    /// Fidelity of `conditional` with `reference`; `None` when absent.
    pub fidelity: Option<f64>,
}

/// Flat report row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub pattern: String,
    pub probability: f64,
    pub reference: String,
    pub fidelity: Option<f64>,
}

impl DistributionOutcome {
    pub fn row(&self) -> OutcomeRow {
        OutcomeRow {
            pattern: self.pattern_name.clone(),
            probability: self.probability,
            reference: self.reference.name(),
            fidelity: self.fidelity,
        }
    }
}

pub fn total_probability(outcomes: &[DistributionOutcome]) -> f64 {
    outcomes.iter().map(|o| o.probability).sum()
}

/// Runs `source` through every party's pipeline.
pub fn propagate(layout: &Layout, source: &PureState, noise: &[NoiseParams]) -> Result<PureState> {
    if noise.len() != layout.n_parties() {
        return Err(Error::structural(format!(
            "{} noise settings for {} parties",
            noise.len(),
            layout.n_parties()
        )));
    }
    let mut state = source.clone();
    for (j, n) in noise.iter().enumerate() {
        for op in build_pipeline(&layout.setup(j, *n))? {
            state = state.apply_element(j, &op)?;
        }
    }
    Ok(state)
}

/// Frequency-stripped output state after all PBSs.
pub fn output_state(noise: &[NoiseParams]) -> Result<(Layout, PureState<PolLabel>)> {
    let layout = Layout::new(noise.len())?;
    let out = propagate(&layout, &source_state_on(&layout), noise)?;
    Ok((layout, out.strip_frequency()?))
}

fn tabulate(layout: &Layout, output: &PureState) -> Result<Vec<DistributionOutcome>> {
    let n = layout.n_parties();
    port_patterns(n)
        .map(|ports| {
            let pattern = layout.pattern_paths(&ports);
            let proj = output.project_paths(&pattern)?;
            let reference = reference_for(&ports);
            let conditional = proj
                .conditional
                .map(|c| c.strip_frequency())
                .transpose()?
                .map(Conditional::Pure);
            let fidelity = conditional
                .as_ref()
                .map(|c| c.fidelity(&reference.state(&pattern)))
                .transpose()?;
            Ok(DistributionOutcome {
                pattern_name: layout.pattern_name(&ports),
                ports,
                pattern,
                probability: proj.probability,
                conditional,
                reference,
                fidelity,
            })
        })
        .collect()
}

/// Two-party run with noise `(α, β)` on channel a and `(δ, γ)` on channel b.
pub fn run_distribution(
    noise_a: NoiseParams,
    noise_b: NoiseParams,
) -> Result<Vec<DistributionOutcome>> {
    run_parties(&[noise_a, noise_b])
}

/// N-party run, `n ≥ 3`.
pub fn run_distribution_n(noise: &[NoiseParams]) -> Result<Vec<DistributionOutcome>> {
    if noise.len() < 3 {
        return Err(Error::structural(format!(
            "N-party distribution needs at least 3 noise settings, got {}",
            noise.len()
        )));
    }
    run_parties(noise)
}

/// Any party count `≥ 2`.
pub fn run_parties(noise: &[NoiseParams]) -> Result<Vec<DistributionOutcome>> {
    let layout = Layout::new(noise.len())?;
    let out = propagate(&layout, &source_state_on(&layout), noise)?;
    tabulate(&layout, &out)
}

/// Two-party run under the mixed polarization noise. Each ensemble component
/// goes through the noiseless circuit; per-pattern conditionals are the
/// resulting ensembles.
pub fn run_distribution_mixed(w: MixedNoiseWeights) -> Result<Vec<DistributionOutcome>> {
    let layout = Layout::new(2)?;
    let ensemble = mixed_polarization_noise(w).apply(&source_state_on(&layout))?;
    let quiet = [NoiseParams::identity(); 2];
    let mut per_component = Vec::new();
    for (weight, component) in ensemble.components() {
        let out = propagate(&layout, component, &quiet)?;
        per_component.push((*weight, tabulate(&layout, &out)?));
    }
    let base = &per_component[0].1;
    let mut merged = Vec::with_capacity(base.len());
    for (i, template) in base.iter().enumerate() {
        let mut probability = 0.0;
        let mut parts = Vec::new();
        for (weight, outcomes) in &per_component {
            let o = &outcomes[i];
            if let Some(Conditional::Pure(state)) = &o.conditional {
                let p = weight * o.probability;
                probability += p;
                parts.push((p, state.clone()));
            }
        }
        let conditional = if parts.is_empty() {
            None
        } else {
            let parts = parts
                .into_iter()
                .map(|(p, s)| (p / probability, s))
                .collect();
            Some(Conditional::Mixed(EnsembleState::new(parts)?))
        };
        let fidelity = conditional
            .as_ref()
            .map(|c| c.fidelity(&template.reference.state(&template.pattern)))
            .transpose()?;
        merged.push(DistributionOutcome {
            probability,
            conditional,
            fidelity,
            ..template.clone()
        });
    }
    Ok(merged)
}

/// One row of the closed-form two-party output table.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticRow {
    pub ports: [Port; 2],
    pub pattern_name: &'static str,
    /// Amplitude multiplying the Bell state on this pattern.
    pub coefficient: Amplitude,
    pub bell: BellStateId,
}

impl AnalyticRow {
    pub fn probability(&self) -> f64 {
        self.coefficient.norm_sqr()
    }
}

/// Closed-form output: `αδ ψ+(a1b1) + αγ φ+(a1b2) + βδ φ+(a2b1) + βγ ψ+(a2b2)`.
pub fn analytic_two_party(noise_a: NoiseParams, noise_b: NoiseParams) -> [AnalyticRow; 4] {
    let (alpha, beta) = (noise_a.alpha(), noise_a.beta());
    let (delta, gamma) = (noise_b.alpha(), noise_b.beta());
    use Port::{One, Two};
    [
        AnalyticRow {
            ports: [One, One],
            pattern_name: "a1b1",
            coefficient: alpha * delta,
            bell: BellStateId::PsiPlus,
        },
        AnalyticRow {
            ports: [One, Two],
            pattern_name: "a1b2",
            coefficient: alpha * gamma,
            bell: BellStateId::PhiPlus,
        },
        AnalyticRow {
            ports: [Two, One],
            pattern_name: "a2b1",
            coefficient: beta * delta,
            bell: BellStateId::PhiPlus,
        },
        AnalyticRow {
            ports: [Two, Two],
            pattern_name: "a2b2",
            coefficient: beta * gamma,
            bell: BellStateId::PsiPlus,
        },
    ]
}
