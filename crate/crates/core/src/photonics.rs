//! Photon emission, beamsplitting, absorption by the two broker atoms and
//! detector conditioning.
//!
//! The full simulation runs on `atom₁ ⊗ atom₂ ⊗ arm₁ ⊗ arm₂`, with each atom a
//! lambda system `{|0⟩, |e⟩, |1⟩}` and each arm a Fock space truncated at two
//! photons (81 dimensions). After the π pulses the photons are traced out and
//! the atoms are restricted to their `{|0⟩, |1⟩}` qubit, leaving the 4-dim
//! broker-pair resource state.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::densop::{
    apply_kraus, apply_unitary, c, embed, identity, kron, partial_trace, tensor, CMatrix,
    DensityOp, KrausSet, PureState,
};
use crate::error::{Error, Result};

/// Highest photon number per arm the simulation represents.
pub const FOCK_CUTOFF: usize = 2;

const FOCK_DIM: usize = FOCK_CUTOFF + 1;
const ATOM_DIM: usize = 3;
const GROUND: usize = 0;
const EXCITED: usize = 1;
const METASTABLE: usize = 2;
const LAYOUT: [usize; 4] = [ATOM_DIM, ATOM_DIM, FOCK_DIM, FOCK_DIM];

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} = {v} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Absorption probabilities of the two broker atoms and the path phase.
///
/// `a1`/`a2` are conditional on the photon occupying that atom's arm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeParams {
    a1: f64,
    a2: f64,
    delta: f64,
}

impl NodeParams {
    pub fn new(a1: f64, a2: f64, delta: f64) -> Result<Self> {
        check_unit("A1", a1)?;
        check_unit("A2", a2)?;
        if !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta = {delta}")));
        }
        Ok(Self { a1, a2, delta })
    }

    pub fn symmetric(a: f64, delta: f64) -> Result<Self> {
        Self::new(a, a, delta)
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    /// Weight of the coherent single-excitation component, `(A1 + A2)/2`.
    pub fn bell_weight(&self) -> f64 {
        (self.a1 + self.a2) / 2.0
    }

    /// Asymmetry angle, `sin 2φ = (A2 − A1)/(A1 + A2)`, in `[−π/4, π/4]`.
    pub fn phi(&self) -> f64 {
        let sum = self.a1 + self.a2;
        if sum == 0.0 {
            return 0.0;
        }
        (((self.a2 - self.a1) / sum).clamp(-1.0, 1.0)).asin() / 2.0
    }

    /// `cos² 2φ = 4·A1·A2/(A1 + A2)²`, exact where trig round-off is not.
    pub fn cos2phi_squared(&self) -> f64 {
        let sum = self.a1 + self.a2;
        if sum == 0.0 {
            return 1.0;
        }
        4.0 * self.a1 * self.a2 / (sum * sum)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorModel {
    present: bool,
    eta: f64,
    dark: f64,
}

impl DetectorModel {
    pub fn absent() -> Self {
        Self {
            present: false,
            eta: 0.0,
            dark: 0.0,
        }
    }

    /// `dark = 1` is accepted and means every trial is rejected.
    pub fn new(eta: f64, dark: f64) -> Result<Self> {
        check_unit("eta", eta)?;
        check_unit("dark", dark)?;
        Ok(Self {
            present: true,
            eta,
            dark,
        })
    }

    pub fn is_present(&self) -> bool {
        self.present
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dark(&self) -> f64 {
        self.dark
    }
}

/// Photon-number distribution of the source, truncated at two photons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceModel {
    p0: f64,
    p1: f64,
    p2: f64,
    indistinguishable: bool,
}

impl SourceModel {
    pub fn ideal() -> Self {
        Self {
            p0: 0.0,
            p1: 1.0,
            p2: 0.0,
            indistinguishable: true,
        }
    }

    /// Vacuum and two-photon probabilities; the rest is single-photon.
    pub fn new(p0: f64, p2: f64) -> Result<Self> {
        Self::from_distribution(&[p0, 1.0 - p0 - p2, p2])
    }

    /// `probs[m]` is the probability of emitting `m` photons.
    pub fn from_distribution(probs: &[f64]) -> Result<Self> {
        if let Some((m, _)) = probs
            .iter()
            .enumerate()
            .skip(FOCK_CUTOFF + 1)
            .find(|(_, &p)| p != 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "{m}-photon emission requested; truncation is at {FOCK_CUTOFF} photons"
            )));
        }
        let get = |i: usize| probs.get(i).copied().unwrap_or(0.0);
        let (p0, p1, p2) = (get(0), get(1), get(2));
        for (name, p) in [("p0", p0), ("p1", p1), ("p2", p2)] {
            if !(-1e-12..=1.0 + 1e-12).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {p} outside [0, 1]"
                )));
            }
        }
        if (p0 + p1 + p2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "emission probabilities sum to {}",
                p0 + p1 + p2
            )));
        }
        Ok(Self {
            p0: p0.max(0.0),
            p1: p1.max(0.0),
            p2: p2.max(0.0),
            indistinguishable: true,
        })
    }

    pub fn with_indistinguishable(self, indistinguishable: bool) -> Self {
        Self {
            indistinguishable,
            ..self
        }
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn is_indistinguishable(&self) -> bool {
        self.indistinguishable
    }
}

/// One accepted photon trial: its acceptance probability and the normalized
/// broker-pair state it leaves behind.
#[derive(Clone, Debug)]
pub struct ResourceOutcome {
    pub accept_prob: f64,
    pub state: DensityOp,
    /// Population of the single-excitation subspace `{|01⟩, |10⟩}`.
    pub bell_weight: f64,
}

impl ResourceOutcome {
    pub fn from_state(accept_prob: f64, state: DensityOp) -> Result<Self> {
        if state.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: state.dim(),
            });
        }
        let state = state.normalize();
        let bell_weight = state.population(1) + state.population(2);
        Ok(Self {
            accept_prob,
            state,
            bell_weight,
        })
    }

    /// Resource given by the closed form, accepted with certainty.
    pub fn closed_form(node: &NodeParams) -> Self {
        let state = resource_closed_form(node);
        let bell_weight = state.population(1) + state.population(2);
        Self {
            accept_prob: 1.0,
            state,
            bell_weight,
        }
    }
}

/// Single-qubit operator acting on broker 1 in the closed-form resource.
pub type Zeta = Matrix2<Complex64>;

/// `[cos φ·𝟙 + sin φ·σ_z][cos Δ·𝟙 + i sin Δ·σ_z]`.
pub fn zeta_operator(phi: f64, delta: f64) -> Zeta {
    let (s, co) = phi.sin_cos();
    let (sd, cd) = delta.sin_cos();
    Matrix2::new(
        c(co + s, 0.) * c(cd, sd),
        c(0., 0.),
        c(0., 0.),
        c(co - s, 0.) * c(cd, -sd),
    )
}

fn psi_plus() -> PureState {
    let mut v = vec![c(0., 0.); 4];
    v[1] = c(FRAC_1_SQRT_2, 0.);
    v[2] = c(FRAC_1_SQRT_2, 0.);
    PureState::new(v).expect("unit norm")
}

fn closed_form_matrix(
    bell_weight: f64,
    node: &NodeParams,
    zeta: impl Fn(f64, f64) -> Matrix2<Complex64>,
) -> CMatrix {
    let lift = |m: Matrix2<Complex64>| {
        let local = CMatrix::from_iterator(2, 2, m.iter().copied());
        kron(&local, &identity(2))
    };
    let phi = node.phi();
    let left = lift(zeta(phi, node.delta()));
    let right = lift(zeta(phi, -node.delta()));
    let psi = psi_plus();
    let v = psi.amplitudes();
    let bell = &left * (v * v.adjoint()) * &right;
    let mut ground = CMatrix::zeros(4, 4);
    ground[(0, 0)] = c(1., 0.);
    bell * c(bell_weight, 0.) + ground * c(1.0 - bell_weight, 0.)
}

/// `p̄·Ẑ₁|Ψ⁺⟩⟨Ψ⁺|Ẑ₁^{φ,−Δ} + (1 − p̄)|00⟩⟨00|` with `p̄ = (A1 + A2)/2`.
pub fn resource_closed_form(node: &NodeParams) -> DensityOp {
    resource_closed_form_with(node, zeta_operator).expect("closed form is a valid state")
}

/// Closed form with a caller-supplied `Ẑ`; lets validation run against
/// deliberately broken operators.
pub fn resource_closed_form_with(
    node: &NodeParams,
    zeta: impl Fn(f64, f64) -> Matrix2<Complex64>,
) -> Result<DensityOp> {
    DensityOp::new(closed_form_matrix(node.bell_weight(), node, zeta))
}

/// Trial acceptance probability for an ideal single-photon source,
/// `(1 − d)²(p̄ + (1 − p̄)(1 − η))`, or 1 without detectors.
pub fn acceptance_probability(node: &NodeParams, detectors: &DetectorModel) -> f64 {
    if !detectors.is_present() {
        return 1.0;
    }
    let p = node.bell_weight();
    let survive = 1.0 - detectors.dark();
    survive * survive * (p + (1.0 - p) * (1.0 - detectors.eta()))
}

/// Bell weight of the resource after conditioning on no click,
/// `p̄/(p̄ + (1 − p̄)(1 − η))`.
pub fn conditioned_bell_weight(node: &NodeParams, detectors: &DetectorModel) -> Result<f64> {
    let p = node.bell_weight();
    if !detectors.is_present() {
        return Ok(p);
    }
    let denom = p + (1.0 - p) * (1.0 - detectors.eta());
    if denom <= 0.0 || detectors.dark() >= 1.0 {
        return Err(Error::ZeroAcceptance);
    }
    Ok(p / denom)
}

/// Analytic no-click-conditioned resource for an ideal source.
pub fn resource_conditioned_closed_form(
    node: &NodeParams,
    detectors: &DetectorModel,
) -> Result<DensityOp> {
    let weight = conditioned_bell_weight(node, detectors)?;
    DensityOp::new(closed_form_matrix(weight, node, zeta_operator))
}

/// No-click Kraus operator on one arm:
/// `√(1−d)·diag(1, √(1−η), 1−η)` over `{|0⟩, |1⟩, |2⟩}`.
pub fn noclick_kraus(detectors: &DetectorModel) -> Result<KrausSet> {
    if !detectors.is_present() {
        return Err(Error::InvalidParameter("no detectors present".into()));
    }
    let scale = (1.0 - detectors.dark()).sqrt();
    let miss = 1.0 - detectors.eta();
    let diag: Vec<Complex64> = (0..FOCK_DIM)
        .map(|n| c(scale * miss.powf(n as f64 / 2.0), 0.))
        .collect();
    KrausSet::new(
        "no click",
        vec![CMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))],
    )
}

fn fock_index(n1: usize, n2: usize) -> usize {
    n1 * FOCK_DIM + n2
}

/// Arm state after a 50/50 beamsplitter for `m` photons entering one port.
fn split_photons(m: usize, indistinguishable: bool) -> DensityOp {
    let amps = |entries: &[(usize, f64)]| {
        let mut v = vec![c(0., 0.); FOCK_DIM * FOCK_DIM];
        for &(i, a) in entries {
            v[i] = c(a, 0.);
        }
        DensityOp::from_pure(&PureState::new(v).expect("unit norm"))
    };
    match m {
        0 => DensityOp::basis(FOCK_DIM * FOCK_DIM, fock_index(0, 0)),
        1 => amps(&[
            (fock_index(1, 0), FRAC_1_SQRT_2),
            (fock_index(0, 1), FRAC_1_SQRT_2),
        ]),
        _ if indistinguishable => amps(&[
            (fock_index(2, 0), 0.5),
            (fock_index(1, 1), FRAC_1_SQRT_2),
            (fock_index(0, 2), 0.5),
        ]),
        _ => {
            let b = |n1, n2| DensityOp::basis(FOCK_DIM * FOCK_DIM, fock_index(n1, n2));
            let (a, m, z) = (b(2, 0), b(1, 1), b(0, 2));
            DensityOp::mixture(&[(0.25, &a), (0.5, &m), (0.25, &z)]).expect("valid mixture")
        }
    }
}

/// Absorption on one atom⊗arm pair, defined for an atom that starts in `|0⟩`:
/// each photon passing the atom is absorbed with probability `A` until the
/// atom is excited; leftover photons stay in the arm. Inputs with the atom in
/// `|1⟩` pass through; `|e⟩` inputs never occur.
fn absorption_local(a: f64) -> CMatrix {
    let dim = ATOM_DIM * FOCK_DIM;
    let idx = |atom: usize, n: usize| atom * FOCK_DIM + n;
    let mut k = CMatrix::zeros(dim, dim);
    k[(idx(GROUND, 0), idx(GROUND, 0))] = c(1., 0.);
    for n in 1..FOCK_DIM {
        // All n photons pass with probability (1 − A)^n.
        let keep = (1.0 - a).powf(n as f64 / 2.0);
        k[(idx(EXCITED, n - 1), idx(GROUND, n))] = c((1.0 - keep * keep).sqrt(), 0.);
        k[(idx(GROUND, n), idx(GROUND, n))] = c(keep, 0.);
    }
    for n in 0..FOCK_DIM {
        k[(idx(METASTABLE, n), idx(METASTABLE, n))] = c(1., 0.);
    }
    k
}

fn pi_pulse() -> CMatrix {
    let mut u = CMatrix::zeros(ATOM_DIM, ATOM_DIM);
    u[(GROUND, GROUND)] = c(1., 0.);
    u[(EXCITED, METASTABLE)] = c(1., 0.);
    u[(METASTABLE, EXCITED)] = c(1., 0.);
    u
}

fn path_phase(delta: f64) -> CMatrix {
    let mut u = CMatrix::zeros(ATOM_DIM, ATOM_DIM);
    u[(GROUND, GROUND)] = c(delta.cos(), delta.sin());
    u[(EXCITED, EXCITED)] = c(1., 0.);
    u[(METASTABLE, METASTABLE)] = c(delta.cos(), -delta.sin());
    u
}

/// Restriction of the two lambda atoms to their `{|0⟩, |1⟩}` qubits.
fn qubit_restriction() -> CMatrix {
    let levels = [GROUND, METASTABLE];
    let mut p = CMatrix::zeros(4, ATOM_DIM * ATOM_DIM);
    for (q1, &l1) in levels.iter().enumerate() {
        for (q2, &l2) in levels.iter().enumerate() {
            p[(q1 * 2 + q2, l1 * ATOM_DIM + l2)] = c(1., 0.);
        }
    }
    p
}

/// Full photonic simulation of one trial, conditioned on acceptance.
pub fn simulate_resource(
    node: &NodeParams,
    source: &SourceModel,
    detectors: &DetectorModel,
) -> Result<ResourceOutcome> {
    let photons: Vec<(f64, DensityOp)> = [source.p0, source.p1, source.p2]
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(m, &p)| (p, split_photons(m, source.indistinguishable)))
        .collect();
    let parts: Vec<(f64, &DensityOp)> = photons.iter().map(|(p, r)| (*p, r)).collect();
    let field = DensityOp::mixture(&parts)?;
    let atoms = DensityOp::basis(ATOM_DIM * ATOM_DIM, 0);
    let mut rho = tensor(&atoms, &field)?;

    for (atom, arm, a) in [(0, 2, node.a1), (1, 3, node.a2)] {
        let k = KrausSet::new(
            "absorb",
            vec![embed(&absorption_local(a), &LAYOUT, &[atom, arm])?],
        )?;
        rho = apply_kraus(&rho, &k)?.ok_or(Error::BadTrace(0.0))?;
    }

    let pulses = embed(&kron(&pi_pulse(), &pi_pulse()), &LAYOUT, &[0, 1])?;
    rho = apply_unitary(&rho, &pulses)?;
    rho = apply_unitary(&rho, &embed(&path_phase(node.delta), &LAYOUT, &[0])?)?;

    if detectors.is_present() {
        let v = noclick_kraus(detectors)?.operators()[0].clone();
        let both = KrausSet::new("no click", vec![embed(&kron(&v, &v), &LAYOUT, &[2, 3])?])?;
        rho = match apply_kraus(&rho, &both)? {
            Some(r) => r,
            None => return Err(Error::ZeroAcceptance),
        };
    }

    let atoms = partial_trace(&rho, &LAYOUT, &[0, 1])?;
    let excited: f64 = (0..ATOM_DIM * ATOM_DIM)
        .filter(|i| i / ATOM_DIM == EXCITED || i % ATOM_DIM == EXCITED)
        .map(|i| atoms.population(i))
        .sum();
    if excited > 1e-12 {
        return Err(Error::ExcitedPopulation(excited));
    }
    let qubits = KrausSet::new("qubit", vec![qubit_restriction()])?;
    let brokers = apply_kraus(&atoms, &qubits)?.ok_or(Error::ZeroAcceptance)?;
    let accept_prob = if detectors.is_present() {
        brokers.trace().min(1.0)
    } else {
        1.0
    };
    ResourceOutcome::from_state(accept_prob, brokers)
}
