//! Figures of merit: concurrence, Bell fidelity, trial counts and the
//! imperfect-source analysis.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Geometric};

use crate::densop::{c, kron, pauli_y, CMatrix, DensityOp, PureState};
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::photonics::{
    acceptance_probability, simulate_resource, DetectorModel, NodeParams, SourceModel,
};
use crate::ppp::{run_ppp, success_probability_analytic, Parity};

/// Identifier of the generator behind [`expected_trials_mc`].
pub const RNG_ALGORITHM: &str = "chacha8";

/// Samples per independent RNG stream.
pub const MC_CHUNK: usize = 4096;

/// Acceptance probabilities at or below this are reported as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e-12;

// Eigenvalues of ρ below this are treated as exact zeros before taking
// square roots; otherwise round-off surfaces as ~1e-8 in the concurrence.
const RANK_CUTOFF: f64 = 1e-13;

pub fn bell_state(parity: Parity) -> PureState {
    let mut v = vec![c(0., 0.); 4];
    let (i, j) = match parity {
        Parity::Even => (0, 3),
        Parity::Odd => (1, 2),
    };
    v[i] = c(FRAC_1_SQRT_2, 0.);
    v[j] = c(FRAC_1_SQRT_2, 0.);
    PureState::new(v).expect("unit norm")
}

fn check_two_qubit_normalized(rho: &DensityOp) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    if (rho.trace() - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(rho.trace()));
    }
    Ok(())
}

fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let eig = m.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let roots = eig.eigenvalues.map(|l| {
        if l <= RANK_CUTOFF * top.max(1.0) {
            c(0., 0.)
        } else {
            c(l.sqrt(), 0.)
        }
    });
    &eig.eigenvectors * CMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Wootters concurrence. The `λᵢ` are taken as singular values of
/// `√ρ·√ρ̃`, which equal the square roots of the eigenvalues of `ρρ̃`.
pub fn concurrence(rho: &DensityOp) -> Result<f64> {
    check_two_qubit_normalized(rho)?;
    let yy = kron(&pauli_y(), &pauli_y());
    let root = hermitian_sqrt(rho.matrix());
    let root_tilde = &yy * root.conjugate() * &yy;
    let mut s: Vec<f64> = (root * root_tilde)
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok((s[0] - s[1] - s[2] - s[3]).clamp(0.0, 1.0))
}

/// `⟨Φ|ρ|Φ⟩` against the Bell state of the given parity.
pub fn bell_fidelity(rho: &DensityOp, parity: Parity) -> Result<f64> {
    check_two_qubit_normalized(rho)?;
    Ok(rho.expectation(&bell_state(parity)).clamp(0.0, 1.0))
}

/// What one counted "trial" is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrialBasis {
    /// Photons sent per accepted (no-click) resource.
    Accept,
    /// Photons sent per PPP attempt (two accepted resources).
    Attempt,
    /// Photons sent per heralded PPP success; failed attempts restart.
    Ppp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialStats {
    pub basis: TrialBasis,
    pub expected_per_accept: f64,
    /// `None` when the heralded success probability is zero.
    pub expected_per_ppp: Option<f64>,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub rng: &'static str,
}

/// Expected photons sent per unit of `basis` for an ideal source.
pub fn expected_trials_analytic(
    node: &NodeParams,
    detectors: &DetectorModel,
    basis: TrialBasis,
) -> Result<f64> {
    let q = acceptance_probability(node, detectors);
    if q <= DIVERGENCE_THRESHOLD {
        return Err(Error::Divergent);
    }
    match basis {
        TrialBasis::Accept => Ok(1.0 / q),
        TrialBasis::Attempt => Ok(2.0 / q),
        TrialBasis::Ppp => {
            let p = success_probability_analytic(node, detectors)?;
            if p <= DIVERGENCE_THRESHOLD {
                return Err(Error::Divergent);
            }
            Ok(2.0 / (q * p))
        }
    }
}

struct Sampler {
    accept: Geometric,
    herald: Bernoulli,
    basis: TrialBasis,
}

impl Sampler {
    fn resource<R: Rng>(&self, rng: &mut R) -> u64 {
        self.accept.sample(rng) + 1
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> u64 {
        match self.basis {
            TrialBasis::Accept => self.resource(rng),
            TrialBasis::Attempt => self.resource(rng) + self.resource(rng),
            TrialBasis::Ppp => {
                let mut total = 0;
                loop {
                    total += self.resource(rng) + self.resource(rng);
                    if self.herald.sample(rng) {
                        return total;
                    }
                }
            }
        }
    }
}

/// Monte Carlo estimate of [`expected_trials_analytic`].
///
/// Samples are split into fixed chunks of [`MC_CHUNK`], each drawn from its
/// own ChaCha8 stream of the master seed, and reduced in chunk order with
/// exact integer sums, so the result does not depend on `exec`.
pub fn expected_trials_mc(
    node: &NodeParams,
    detectors: &DetectorModel,
    basis: TrialBasis,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<TrialStats> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let expected_per_accept = expected_trials_analytic(node, detectors, TrialBasis::Accept)?;
    let expected_per_ppp = match expected_trials_analytic(node, detectors, TrialBasis::Ppp) {
        Ok(v) => Some(v),
        Err(Error::Divergent) => None,
        Err(e) => return Err(e),
    };
    let q = acceptance_probability(node, detectors);
    let p_herald = if basis == TrialBasis::Ppp {
        success_probability_analytic(node, detectors)?
    } else {
        1.0
    };
    if basis == TrialBasis::Ppp && expected_per_ppp.is_none() {
        return Err(Error::Divergent);
    }
    let sampler = Sampler {
        accept: Geometric::new(q.min(1.0)).map_err(|e| Error::InvalidParameter(e.to_string()))?,
        herald: Bernoulli::new(p_herald.clamp(0.0, 1.0))
            .map_err(|e| Error::InvalidParameter(e.to_string()))?,
        basis,
    };

    let chunks: Vec<(usize, usize)> = (0..samples.div_ceil(MC_CHUNK))
        .map(|i| (i, MC_CHUNK.min(samples - i * MC_CHUNK)))
        .collect();
    let partial = map_ordered(exec, &chunks, |&(index, len)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        (0..len).fold((0u128, 0u128), |(s, s2), _| {
            let x = sampler.draw(&mut rng) as u128;
            (s + x, s2 + x * x)
        })
    });
    let (sum, sum_sq) = partial
        .iter()
        .fold((0u128, 0u128), |(a, b), &(s, s2)| (a + s, b + s2));

    let n = samples as f64;
    let mc_mean = sum as f64 / n;
    let mc_stderr = if samples > 1 {
        let var = ((sum_sq as f64 - sum as f64 * mc_mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(TrialStats {
        basis,
        expected_per_accept,
        expected_per_ppp,
        mc_mean,
        mc_stderr,
        samples,
        seed,
        rng: RNG_ALGORITHM,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Figures {
    pub fidelity: f64,
    pub concurrence: f64,
    pub p_success: f64,
}

pub fn plus_plus() -> DensityOp {
    DensityOp::from_pure(&PureState::new(vec![c(0.5, 0.); 4]).expect("unit norm"))
}

/// Runs the PPP on `|++⟩` with resources from `source` and reports the
/// heralded pair's quality. Odd branches are mapped to the even frame before
/// averaging (see [`crate::ppp::PppResult::success_state_even_frame`]).
pub fn source_fault_analysis(
    node: &NodeParams,
    source: &SourceModel,
    detectors: &DetectorModel,
) -> Result<Figures> {
    let resource = simulate_resource(node, source, detectors)?;
    let result = run_ppp(&plus_plus(), &resource, &resource)?;
    let state = result
        .success_state_even_frame()
        .ok_or(Error::ZeroSuccess)?;
    Ok(Figures {
        fidelity: bell_fidelity(&state, Parity::Even)?,
        concurrence: concurrence(&state)?,
        p_success: result.p_success,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densop::CVector;
    use approx::assert_abs_diff_eq;

    fn werner(p: f64) -> DensityOp {
        let bell = DensityOp::from_pure(&bell_state(Parity::Odd));
        DensityOp::mixture(&[(p, &bell), (1.0 - p, &DensityOp::maximally_mixed(4))]).unwrap()
    }

    /// Independent route: with `ρ = ΨΨ†` for an explicit ensemble `Ψ`, the
    /// `λᵢ` are the singular values of `Ψᵀ(σy⊗σy)Ψ`.
    fn concurrence_from_ensemble(columns: &[CVector]) -> f64 {
        let psi = CMatrix::from_columns(columns);
        let yy = kron(&pauli_y(), &pauli_y());
        let tau = psi.transpose() * yy * &psi;
        let mut s: Vec<f64> = tau
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        s.resize(4.max(s.len()), 0.0);
        s.sort_by(|a, b| b.total_cmp(a));
        (s[0] - s[1..].iter().sum::<f64>()).max(0.0)
    }

    #[test]
    fn concurrence_of_bell_and_product() {
        let bell = DensityOp::from_pure(&bell_state(Parity::Even));
        assert_abs_diff_eq!(concurrence(&bell).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            concurrence(&DensityOp::basis(4, 1)).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn concurrence_of_werner_state() {
        // Ensemble: √p·|Ψ⁺⟩ plus √((1−p)/4)·|basis k⟩.
        let p: f64 = 0.5;
        let mut cols = vec![bell_state(Parity::Odd).amplitudes() * c(p.sqrt(), 0.)];
        for k in 0..4 {
            cols.push(PureState::basis(4, k).amplitudes() * c(((1.0 - p) / 4.0).sqrt(), 0.));
        }
        let oracle = concurrence_from_ensemble(&cols);
        assert_abs_diff_eq!(oracle, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(concurrence(&werner(p)).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn concurrence_rejects_unnormalized() {
        let half = DensityOp::mixture(&[(0.5, &DensityOp::basis(4, 0))]).unwrap();
        assert!(matches!(concurrence(&half), Err(Error::NotNormalized(_))));
        assert!(concurrence(&DensityOp::basis(2, 0)).is_err());
    }

    #[test]
    fn fidelity_cases() {
        let even = DensityOp::from_pure(&bell_state(Parity::Even));
        assert_abs_diff_eq!(
            bell_fidelity(&even, Parity::Even).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            bell_fidelity(&even, Parity::Odd).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn trial_counts_at_reference_point() {
        let node = NodeParams::symmetric(0.1, 0.0).unwrap();
        let det = DetectorModel::new(1.0, 0.5).unwrap();
        assert_eq!(
            expected_trials_analytic(&node, &det, TrialBasis::Accept).unwrap(),
            40.0
        );
        let clean = DetectorModel::new(1.0, 0.0).unwrap();
        assert_abs_diff_eq!(
            expected_trials_analytic(&node, &clean, TrialBasis::Accept).unwrap(),
            10.0,
            epsilon = 1e-12
        );
        // Conditioned resources are pure Bell pairs: success 1/2 per attempt.
        assert_abs_diff_eq!(
            expected_trials_analytic(&node, &det, TrialBasis::Ppp).unwrap(),
            160.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn divergence_is_signaled() {
        let node = NodeParams::symmetric(0.1, 0.0).unwrap();
        let blind = DetectorModel::new(1.0, 1.0).unwrap();
        assert_eq!(
            expected_trials_analytic(&node, &blind, TrialBasis::Accept),
            Err(Error::Divergent)
        );
        let dark = NodeParams::symmetric(0.0, 0.0).unwrap();
        let det = DetectorModel::new(1.0, 0.2).unwrap();
        assert_eq!(
            expected_trials_analytic(&dark, &det, TrialBasis::Accept),
            Err(Error::Divergent)
        );
    }

    #[test]
    fn certain_acceptance_gives_one_trial() {
        let node = NodeParams::symmetric(0.3, 0.0).unwrap();
        let stats = expected_trials_mc(
            &node,
            &DetectorModel::absent(),
            TrialBasis::Accept,
            1000,
            7,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(stats.mc_mean, 1.0);
        assert_eq!(stats.mc_stderr, 0.0);
        assert_eq!(stats.rng, RNG_ALGORITHM);
    }

    #[test]
    fn monte_carlo_matches_analytic_and_is_deterministic() {
        let node = NodeParams::symmetric(0.1, 0.0).unwrap();
        let det = DetectorModel::new(1.0, 0.5).unwrap();
        let run = |exec| {
            expected_trials_mc(&node, &det, TrialBasis::Accept, 100_000, 2024, exec).unwrap()
        };
        let a = run(Execution::Parallel);
        let b = run(Execution::Sequential);
        assert_eq!(a, b);
        assert!((a.mc_mean - 40.0).abs() <= 3.0 * a.mc_stderr, "{a:?}");
    }

    #[test]
    fn ideal_source_gives_perfect_pair() {
        let node = NodeParams::symmetric(0.1, 0.0).unwrap();
        let f =
            source_fault_analysis(&node, &SourceModel::ideal(), &DetectorModel::absent()).unwrap();
        assert_abs_diff_eq!(f.concurrence, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.fidelity, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.p_success, 0.005, epsilon = 1e-12);
    }

    #[test]
    fn vacuum_emission_only_costs_rate() {
        let node = NodeParams::symmetric(0.1, 0.0).unwrap();
        let src = SourceModel::new(0.5, 0.0).unwrap();
        let f = source_fault_analysis(&node, &src, &DetectorModel::absent()).unwrap();
        assert_abs_diff_eq!(f.concurrence, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.p_success, 0.05 * 0.05 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn reported_source_gives_high_fidelity() {
        let node = NodeParams::symmetric(0.1, 0.0).unwrap();
        let src = SourceModel::new(0.14, 0.0008).unwrap();
        let f = source_fault_analysis(&node, &src, &DetectorModel::absent()).unwrap();
        assert!(f.fidelity >= 0.99, "{f:?}");
        assert!(f.concurrence < 1.0);
    }

    #[test]
    fn zero_success_is_an_error() {
        let node = NodeParams::new(0.0, 0.2, 0.0).unwrap();
        assert_eq!(
            source_fault_analysis(&node, &SourceModel::ideal(), &DetectorModel::absent()),
            Err(Error::ZeroSuccess)
        );
    }
}
