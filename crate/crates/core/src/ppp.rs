//! Two-round parity projection on the client (logical) qubits.
//!
//! Each round entangles every client with its node's broker through a CNOT
//! (client control, broker target) and reads the brokers out in Z. A run is
//! heralded when the second round's broker outcomes are the bitwise
//! complement of the first round's. Under that pattern every branch that
//! used a ground-state resource is annihilated and the path phases of the two
//! rounds cancel, so the surviving map is an exact parity projector.

use std::fmt;

use crate::densop::{
    apply_kraus, apply_unitary, c, embed, identity, kron, outer_basis, partial_trace, pauli_x,
    tensor, CMatrix, DensityOp, KrausSet,
};
use crate::error::{Error, Result};
use crate::photonics::{conditioned_bell_weight, DetectorModel, NodeParams, ResourceOutcome};

/// Z-measurement results of broker 1 and broker 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Outcome(pub u8, pub u8);

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome(0, 0), Outcome(0, 1), Outcome(1, 0), Outcome(1, 1)];

    pub fn complement(self) -> Self {
        Outcome(1 - self.0, 1 - self.1)
    }

    fn index(self) -> usize {
        (self.0 as usize) * 2 + self.1 as usize
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.0, self.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    /// span{|00⟩, |11⟩}
    Even,
    /// span{|01⟩, |10⟩}
    Odd,
}

impl Parity {
    /// Parity projected by a heralded run whose first round read `first`.
    pub fn heralded_by(first: Outcome) -> Self {
        if first.0 ^ first.1 == 1 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn projector(self) -> CMatrix {
        match self {
            Parity::Even => outer_basis(4, 0, 0) + outer_basis(4, 3, 3),
            Parity::Odd => outer_basis(4, 1, 1) + outer_basis(4, 2, 2),
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// Accept iff the second round is the bitwise complement of the first.
pub fn herald(first: Outcome, second: Outcome) -> bool {
    second == first.complement()
}

/// One broker readout of a round and the sub-normalized client state it
/// leaves; `state` is `None` for impossible outcomes.
#[derive(Clone, Debug)]
pub struct RoundBranch {
    pub outcome: Outcome,
    pub state: Option<DensityOp>,
}

impl RoundBranch {
    pub fn probability(&self) -> f64 {
        self.state.as_ref().map_or(0.0, DensityOp::trace)
    }
}

// Subsystem order for a round: client₁, client₂, broker₁, broker₂.
const ROUND_LAYOUT: [usize; 4] = [2, 2, 2, 2];

fn cnot() -> CMatrix {
    let mut u = CMatrix::zeros(4, 4);
    for (row, col) in [(0, 0), (1, 1), (3, 2), (2, 3)] {
        u[(row, col)] = c(1., 0.);
    }
    u
}

fn round_entangler() -> Result<CMatrix> {
    let first = embed(&cnot(), &ROUND_LAYOUT, &[0, 2])?;
    let second = embed(&cnot(), &ROUND_LAYOUT, &[1, 3])?;
    Ok(second * first)
}

fn broker_readout(m: Outcome) -> Result<KrausSet> {
    let proj = kron(&identity(4), &outer_basis(4, m.index(), m.index()));
    KrausSet::new(format!("brokers {m}"), vec![proj])
}

/// One round: CNOT client→broker at each node, then Z readout of both brokers.
/// The four branch traces sum to the trace of `clients`.
pub fn run_round(clients: &DensityOp, resource: &ResourceOutcome) -> Result<Vec<RoundBranch>> {
    if clients.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: clients.dim(),
        });
    }
    let joint = tensor(clients, &resource.state)?;
    let joint = apply_unitary(&joint, &round_entangler()?)?;
    Outcome::ALL
        .iter()
        .map(|&m| {
            let state = apply_kraus(&joint, &broker_readout(m)?)?
                .map(|branch| partial_trace(&branch, &ROUND_LAYOUT, &[0, 1]))
                .transpose()?;
            Ok(RoundBranch { outcome: m, state })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct HeraldedBranch {
    pub first: Outcome,
    pub second: Outcome,
    pub parity: Parity,
    pub probability: f64,
    /// Normalized client state.
    pub state: DensityOp,
}

#[derive(Clone, Debug)]
pub struct FailureBranch {
    pub first: Outcome,
    pub second: Outcome,
    pub probability: f64,
    pub state: DensityOp,
}

#[derive(Clone, Debug)]
pub struct PppResult {
    pub p_success: f64,
    pub p_failure: f64,
    /// Heralded outcome pairs with nonzero probability, in outcome order.
    pub branches: Vec<HeraldedBranch>,
    /// Non-heralded outcome pairs with nonzero probability.
    pub failures: Vec<FailureBranch>,
}

impl PppResult {
    /// Probability-weighted heralded state after mapping odd branches onto the
    /// even subspace with X on client 2, the correction a user would apply
    /// knowing the parity label.
    pub fn success_state_even_frame(&self) -> Option<DensityOp> {
        if self.p_success <= 0.0 || self.branches.is_empty() {
            return None;
        }
        let flip = kron(&identity(2), &pauli_x());
        let mut acc = CMatrix::zeros(4, 4);
        for b in &self.branches {
            let m = match b.parity {
                Parity::Even => b.state.matrix().clone(),
                Parity::Odd => &flip * b.state.matrix() * &flip,
            };
            acc += m * c(b.probability / self.p_success, 0.);
        }
        DensityOp::new(acc).ok().map(|r| r.normalize())
    }
}

/// Both rounds, with branch bookkeeping over all 16 outcome pairs.
/// Probabilities are relative to the trace of `clients`.
pub fn run_ppp(
    clients: &DensityOp,
    round1: &ResourceOutcome,
    round2: &ResourceOutcome,
) -> Result<PppResult> {
    let norm = clients.trace();
    let mut p_success = 0.0;
    let mut p_failure = 0.0;
    let mut branches = Vec::new();
    let mut failures = Vec::new();
    for first in run_round(clients, round1)? {
        let Some(after_first) = first.state.as_ref() else {
            continue;
        };
        for second in run_round(after_first, round2)? {
            let Some(state) = second.state else {
                continue;
            };
            let probability = state.trace() / norm;
            let state = state.normalize();
            if herald(first.outcome, second.outcome) {
                p_success += probability;
                branches.push(HeraldedBranch {
                    first: first.outcome,
                    second: second.outcome,
                    parity: Parity::heralded_by(first.outcome),
                    probability,
                    state,
                });
            } else {
                p_failure += probability;
                failures.push(FailureBranch {
                    first: first.outcome,
                    second: second.outcome,
                    probability,
                    state,
                });
            }
        }
    }
    Ok(PppResult {
        p_success,
        p_failure,
        branches,
        failures,
    })
}

/// `(cos² 2φ / 2)·p̄'²`, with `p̄'` the no-click-conditioned Bell weight.
pub fn success_probability_analytic(node: &NodeParams, detectors: &DetectorModel) -> Result<f64> {
    let weight = conditioned_bell_weight(node, detectors)?;
    Ok(node.cos2phi_squared() / 2.0 * weight * weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densop::PureState;
    use crate::photonics::{simulate_resource, SourceModel};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn plus_plus() -> DensityOp {
        DensityOp::from_pure(&PureState::new(vec![c(0.5, 0.); 4]).unwrap())
    }

    fn bell(parity: Parity) -> DensityOp {
        let mut v = vec![c(0., 0.); 4];
        let (i, j) = match parity {
            Parity::Even => (0, 3),
            Parity::Odd => (1, 2),
        };
        v[i] = c(FRAC_1_SQRT_2, 0.);
        v[j] = c(FRAC_1_SQRT_2, 0.);
        DensityOp::from_pure(&PureState::new(v).unwrap())
    }

    fn ideal() -> ResourceOutcome {
        ResourceOutcome::closed_form(&NodeParams::symmetric(1.0, 0.0).unwrap())
    }

    #[test]
    fn herald_rule() {
        assert!(herald(Outcome(0, 1), Outcome(1, 0)));
        assert!(!herald(Outcome(0, 0), Outcome(0, 0)));
        assert!(!herald(Outcome(1, 0), Outcome(1, 1)));
        let accepted = Outcome::ALL
            .iter()
            .flat_map(|&m| Outcome::ALL.iter().map(move |&n| (m, n)))
            .filter(|&(m, n)| herald(m, n))
            .count();
        assert_eq!(accepted, 4);
    }

    #[test]
    fn round_with_bell_resource_is_uniform() {
        let out = run_round(&plus_plus(), &ideal()).unwrap();
        for b in &out {
            assert_abs_diff_eq!(b.probability(), 0.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn round_all_ground() {
        let ground = ResourceOutcome::closed_form(&NodeParams::symmetric(0.0, 0.0).unwrap());
        let out = run_round(&DensityOp::basis(4, 0), &ground).unwrap();
        assert_abs_diff_eq!(out[0].probability(), 1.0, epsilon = 1e-15);
        assert!(out[1..].iter().all(|b| b.state.is_none()));
    }

    #[test]
    fn round_ground_resource_collapses_clients() {
        let ground = ResourceOutcome::closed_form(&NodeParams::symmetric(0.0, 0.0).unwrap());
        for b in run_round(&plus_plus(), &ground).unwrap() {
            assert_abs_diff_eq!(b.probability(), 0.25, epsilon = 1e-14);
            let idx = b.outcome.index();
            let post = b.state.unwrap().normalize();
            assert!(post.max_abs_diff(&DensityOp::basis(4, idx)) < 1e-14);
        }
    }

    #[test]
    fn round_rejects_wrong_dimension() {
        assert!(run_round(&DensityOp::basis(2, 0), &ideal()).is_err());
    }

    #[test]
    fn ideal_ppp_yields_bell_pairs() {
        let res = run_ppp(&plus_plus(), &ideal(), &ideal()).unwrap();
        assert_abs_diff_eq!(res.p_success, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(res.p_success + res.p_failure, 1.0, epsilon = 1e-10);
        assert_eq!(res.branches.len(), 4);
        for b in &res.branches {
            assert!(
                b.state.max_abs_diff(&bell(b.parity)) < 1e-12,
                "{:?}",
                b.first
            );
        }
    }

    #[test]
    fn weak_absorption_success_probability() {
        let r = ResourceOutcome::closed_form(&NodeParams::symmetric(0.1, 0.0).unwrap());
        let res = run_ppp(&plus_plus(), &r, &r).unwrap();
        assert_abs_diff_eq!(res.p_success, 0.005, epsilon = 1e-12);
        for b in &res.branches {
            assert!(b.state.max_abs_diff(&bell(b.parity)) < 1e-10);
        }
    }

    #[test]
    fn half_absorption_with_phase() {
        let node = NodeParams::symmetric(0.5, 0.7).unwrap();
        let r = ResourceOutcome::closed_form(&node);
        let res = run_ppp(&plus_plus(), &r, &r).unwrap();
        assert_abs_diff_eq!(res.p_success, 0.125, epsilon = 1e-12);
        let flat = ResourceOutcome::closed_form(&node.with_delta(0.0));
        let reference = run_ppp(&plus_plus(), &flat, &flat).unwrap();
        for (a, b) in res.branches.iter().zip(&reference.branches) {
            assert!(a.state.max_abs_diff(&b.state) < 1e-12);
        }
    }

    #[test]
    fn phase_drift_between_rounds_breaks_invariance() {
        let node = NodeParams::symmetric(0.5, 0.0).unwrap();
        let r1 = ResourceOutcome::closed_form(&node);
        let r2 = ResourceOutcome::closed_form(&node.with_delta(0.4));
        let res = run_ppp(&plus_plus(), &r1, &r2).unwrap();
        let worst = res
            .branches
            .iter()
            .map(|b| 1.0 - b.state.expectation(&pure_bell(b.parity)))
            .fold(0.0, f64::max);
        assert!(worst > 0.1);
    }

    fn pure_bell(parity: Parity) -> PureState {
        let mut v = vec![c(0., 0.); 4];
        let (i, j) = match parity {
            Parity::Even => (0, 3),
            Parity::Odd => (1, 2),
        };
        v[i] = c(FRAC_1_SQRT_2, 0.);
        v[j] = c(FRAC_1_SQRT_2, 0.);
        PureState::new(v).unwrap()
    }

    #[test]
    fn parity_labels_match_support() {
        let r = ResourceOutcome::closed_form(&NodeParams::new(0.3, 0.6, 1.1).unwrap());
        let res = run_ppp(&plus_plus(), &r, &r).unwrap();
        for b in &res.branches {
            let off = match b.parity {
                Parity::Even => [1, 2],
                Parity::Odd => [0, 3],
            };
            for i in off {
                assert!(b.state.population(i).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn analytic_success_probability() {
        let none = DetectorModel::absent();
        let p =
            success_probability_analytic(&NodeParams::symmetric(0.1, 0.0).unwrap(), &none).unwrap();
        assert_abs_diff_eq!(p, 0.005, epsilon = 1e-15);
        let lopsided =
            success_probability_analytic(&NodeParams::new(0.0, 0.2, 0.0).unwrap(), &none).unwrap();
        assert_abs_diff_eq!(lopsided, 0.0, epsilon = 1e-15);
        let perfect = DetectorModel::new(1.0, 0.0).unwrap();
        let p = success_probability_analytic(&NodeParams::symmetric(0.1, 0.0).unwrap(), &perfect)
            .unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-15);
        assert_eq!(
            success_probability_analytic(&NodeParams::symmetric(0.0, 0.0).unwrap(), &perfect),
            Err(Error::ZeroAcceptance)
        );
    }

    #[test]
    fn simulated_success_matches_analytic_with_detectors() {
        for &(a1, a2) in &[(0.1, 0.1), (0.2, 0.5), (0.9, 0.05)] {
            for &eta in &[0.0, 0.5, 0.9, 1.0] {
                let node = NodeParams::new(a1, a2, 0.3).unwrap();
                let det = DetectorModel::new(eta, 0.2).unwrap();
                let r = simulate_resource(&node, &SourceModel::ideal(), &det).unwrap();
                let res = run_ppp(&plus_plus(), &r, &r).unwrap();
                let want = success_probability_analytic(&node, &det).unwrap();
                assert_abs_diff_eq!(res.p_success, want, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn even_frame_state_of_ideal_run_is_even_bell() {
        let res = run_ppp(&plus_plus(), &ideal(), &ideal()).unwrap();
        let s = res.success_state_even_frame().unwrap();
        assert!(s.max_abs_diff(&bell(Parity::Even)) < 1e-12);
    }
}
