//! Self-check of the simulator against its closed forms.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use herald_core::densop::PureState;
use herald_core::exec::map_ordered;
use herald_core::metrics::{
    bell_fidelity, concurrence, expected_trials_analytic, expected_trials_mc, plus_plus,
    RNG_ALGORITHM,
};
use herald_core::photonics::{
    resource_closed_form_with, resource_conditioned_closed_form, simulate_resource, zeta_operator,
    Zeta,
};
use herald_core::ppp::{run_ppp, success_probability_analytic};
use herald_core::{
    DensityOp, DetectorModel, Execution, NodeParams, Parity, ResourceOutcome, SourceModel,
    TrialBasis,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 2008;

/// Replaceable pieces of the model, so tests can confirm a broken operator
/// is caught.
#[derive(Clone, Copy)]
pub struct Hooks {
    pub zeta: fn(f64, f64) -> Zeta,
}

impl Default for Hooks {
    fn default() -> Self {
        Hooks {
            zeta: zeta_operator,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    pub max_dev: f64,
    pub tol: f64,
    pub error: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.max_dev <= self.tol
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        match &self.error {
            Some(e) => write!(f, "{status} {:<24} error: {e}", self.name),
            None => write!(
                f,
                "{status} {:<24} max_dev={:.3e} tol={:.1e} cases={}",
                self.name, self.max_dev, self.tol, self.cases
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "herald validate: seed {} rng {}",
            self.seed, RNG_ALGORITHM
        )?;
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let ok = self.checks.iter().filter(|c| c.passed()).count();
        writeln!(f, "{ok} of {} checks passed", self.checks.len())
    }
}

type Outcome = herald_core::Result<(f64, usize)>;

fn finish(name: &'static str, tol: f64, outcome: Outcome) -> Check {
    match outcome {
        Ok((max_dev, cases)) => Check {
            name,
            cases,
            max_dev,
            tol,
            error: None,
        },
        Err(e) => Check {
            name,
            cases: 0,
            max_dev: f64::INFINITY,
            tol,
            error: Some(e.to_string()),
        },
    }
}

/// Runs `f` over `cases` and keeps the largest deviation.
fn worst<T: Sync>(
    exec: Execution,
    cases: &[T],
    f: impl Fn(&T) -> herald_core::Result<f64> + Sync + Send,
) -> Outcome {
    let devs = map_ordered(exec, cases, f);
    let mut max = 0.0f64;
    for d in devs {
        max = max.max(d?);
    }
    Ok((max, cases.len()))
}

const ABSORPTIONS: [f64; 5] = [0.0, 0.05, 0.1, 0.5, 1.0];

fn ideal(node: &NodeParams, det: &DetectorModel) -> herald_core::Result<ResourceOutcome> {
    simulate_resource(node, &SourceModel::ideal(), det)
}

fn closed_form_equivalence(hooks: &Hooks, exec: Execution) -> Outcome {
    let mut cases = Vec::new();
    for a1 in ABSORPTIONS {
        for a2 in ABSORPTIONS {
            for delta in [0.0, 0.3, FRAC_PI_2] {
                cases.push(NodeParams::new(a1, a2, delta)?);
            }
        }
    }
    worst(exec, &cases, |node| {
        let sim = ideal(node, &DetectorModel::absent())?;
        let closed = resource_closed_form_with(node, hooks.zeta)?;
        Ok(sim.state.max_abs_diff(&closed))
    })
}

fn detector_grid() -> herald_core::Result<Vec<DetectorModel>> {
    Ok(vec![
        DetectorModel::absent(),
        DetectorModel::new(0.0, 0.0)?,
        DetectorModel::new(0.5, 0.0)?,
        DetectorModel::new(0.9, 0.3)?,
        DetectorModel::new(1.0, 0.0)?,
    ])
}

fn p_success_match(exec: Execution) -> Outcome {
    let mut cases = Vec::new();
    for (a1, a2) in [(0.1, 0.1), (0.5, 0.5), (1.0, 1.0), (0.0, 0.2), (0.3, 0.8)] {
        for det in detector_grid()? {
            cases.push((NodeParams::new(a1, a2, 0.4)?, det));
        }
    }
    worst(exec, &cases, |(node, det)| {
        let r = ideal(node, det)?;
        let sim = run_ppp(&plus_plus(), &r, &r)?.p_success;
        Ok((sim - success_probability_analytic(node, det)?).abs())
    })
}

struct Figures {
    state: DensityOp,
    p_success: f64,
    fidelity: f64,
}

fn figures(node: &NodeParams, det: &DetectorModel) -> herald_core::Result<Figures> {
    let r = ideal(node, det)?;
    let res = run_ppp(&plus_plus(), &r, &r)?;
    let fidelity = match res.success_state_even_frame() {
        Some(s) => bell_fidelity(&s, Parity::Even)?,
        None => 0.0,
    };
    Ok(Figures {
        state: r.state,
        p_success: res.p_success,
        fidelity,
    })
}

fn dark_count_invariance(exec: Execution) -> Outcome {
    let mut cases = Vec::new();
    for (a1, a2) in [(0.1, 0.1), (0.2, 0.6)] {
        for eta in [0.5, 0.9] {
            cases.push((NodeParams::new(a1, a2, 0.7)?, eta));
        }
    }
    worst(exec, &cases, |&(node, eta)| {
        let reference = figures(&node, &DetectorModel::new(eta, 0.0)?)?;
        let closed = resource_conditioned_closed_form(&node, &DetectorModel::new(eta, 0.0)?)?;
        let mut dev = reference.state.max_abs_diff(&closed);
        for dark in [0.3, 0.5, 0.9] {
            let f = figures(&node, &DetectorModel::new(eta, dark)?)?;
            dev = dev
                .max(f.state.max_abs_diff(&reference.state))
                .max((f.p_success - reference.p_success).abs())
                .max((f.fidelity - reference.fidelity).abs());
        }
        Ok(dev)
    })
}

/// Round one uses the closed form, round two the simulation, so a closed
/// form whose phase disagrees with the physics leaves a Δ-dependent state.
fn delta_invariance(hooks: &Hooks, exec: Execution) -> Outcome {
    let heralded = |node: &NodeParams| -> herald_core::Result<Vec<DensityOp>> {
        let closed =
            ResourceOutcome::from_state(1.0, resource_closed_form_with(node, hooks.zeta)?)?;
        let sim = ideal(node, &DetectorModel::absent())?;
        Ok(run_ppp(&plus_plus(), &closed, &sim)?
            .branches
            .into_iter()
            .map(|b| b.state)
            .collect())
    };
    let cases = [(0.1, 0.1), (0.3, 0.7), (1.0, 1.0)];
    worst(exec, &cases, |&(a1, a2)| {
        let reference = heralded(&NodeParams::new(a1, a2, 0.0)?)?;
        let mut dev = 0.0f64;
        for delta in [0.3, FRAC_PI_2, -1.1, 2.5] {
            let states = heralded(&NodeParams::new(a1, a2, delta)?)?;
            if states.len() != reference.len() {
                return Ok(f64::INFINITY);
            }
            for (s, r) in states.iter().zip(&reference) {
                dev = dev.max(s.max_abs_diff(r));
            }
        }
        Ok(dev)
    })
}

fn separable_failure(exec: Execution) -> Outcome {
    let cases = [
        (0.1, 0.1, 0.0),
        (0.3, 0.7, 1.0),
        (1.0, 1.0, 0.5),
        (0.05, 0.9, -2.0),
    ];
    worst(exec, &cases, |&(a1, a2, delta)| {
        let r = ideal(&NodeParams::new(a1, a2, delta)?, &DetectorModel::absent())?;
        let res = run_ppp(&plus_plus(), &r, &r)?;
        let mut c = 0.0f64;
        for f in &res.failures {
            c = c.max(concurrence(&f.state)?);
        }
        Ok(c)
    })
}

fn parity_projection(seed: u64, exec: Execution) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(Vec<Complex64>, NodeParams)> = (0..100)
        .map(|_| {
            let amps = (0..4)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let node = NodeParams::new(
                rng.random_range(0.05..1.0),
                rng.random_range(0.05..1.0),
                rng.random_range(-3.0..3.0),
            );
            node.map(|n| (amps, n))
        })
        .collect::<herald_core::Result<_>>()?;
    worst(exec, &cases, |(amps, node)| {
        let clients = DensityOp::from_pure(&PureState::normalized(amps.clone())?);
        let r = ideal(node, &DetectorModel::absent())?;
        let mut dev = 0.0f64;
        for b in run_ppp(&clients, &r, &r)?.branches {
            let p = b.parity.projector();
            let projected = &p * clients.matrix() * &p;
            let tr = projected.trace().re;
            if tr < 1e-9 {
                continue;
            }
            let want = DensityOp::new(projected.unscale(tr))?;
            dev = dev.max(b.state.max_abs_diff(&want));
        }
        Ok(dev)
    })
}

fn trials_reference() -> Outcome {
    let node = NodeParams::symmetric(0.1, 0.0)?;
    let t = expected_trials_analytic(&node, &DetectorModel::new(1.0, 0.5)?, TrialBasis::Accept)?;
    Ok(((t - 40.0).abs(), 1))
}

/// Deviation in standard errors.
fn trials_monte_carlo(seed: u64, exec: Execution) -> Outcome {
    let node = NodeParams::symmetric(0.1, 0.0)?;
    let det = DetectorModel::new(1.0, 0.5)?;
    let mut dev = 0.0f64;
    let bases = [TrialBasis::Accept, TrialBasis::Attempt, TrialBasis::Ppp];
    for basis in bases {
        let stats = expected_trials_mc(&node, &det, basis, 100_000, seed, exec)?;
        let exact = expected_trials_analytic(&node, &det, basis)?;
        dev = dev.max((stats.mc_mean - exact).abs() / stats.mc_stderr);
    }
    Ok((dev, bases.len()))
}

pub fn validate(seed: u64, exec: Execution) -> Report {
    validate_with(&Hooks::default(), seed, exec)
}

pub fn validate_with(hooks: &Hooks, seed: u64, exec: Execution) -> Report {
    let checks = vec![
        finish(
            "closed_form_equivalence",
            1e-10,
            closed_form_equivalence(hooks, exec),
        ),
        finish("p_success_match", 1e-9, p_success_match(exec)),
        finish("dark_count_invariance", 1e-10, dark_count_invariance(exec)),
        finish("delta_invariance", 1e-10, delta_invariance(hooks, exec)),
        finish("separable_failure", 1e-10, separable_failure(exec)),
        finish("parity_projection", 1e-9, parity_projection(seed, exec)),
        finish("trials_reference", 0.0, trials_reference()),
        finish("trials_monte_carlo", 3.0, trials_monte_carlo(seed, exec)),
    ];
    Report { seed, checks }
}
