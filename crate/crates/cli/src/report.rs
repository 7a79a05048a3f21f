//! Text reports for a single parameter point.

use std::fmt::Write;

use herald_core::metrics::{bell_fidelity, concurrence, plus_plus};
use herald_core::photonics::{conditioned_bell_weight, resource_closed_form, simulate_resource};
use herald_core::ppp::{run_ppp, success_probability_analytic};
use herald_core::{DensityOp, Error, PppResult, ResourceOutcome};

use crate::config::Point;

const BASIS: [&str; 4] = ["00", "01", "10", "11"];
const PURE_TOL: f64 = 1e-10;

fn opt(value: Option<f64>) -> String {
    value.map_or_else(|| "none".to_string(), |v| format!("{v:.12}"))
}

fn parameters(p: &Point) -> String {
    let mut s = format!("a1={} a2={} delta={}", p.a1, p.a2, p.delta);
    if p.detectors {
        let _ = write!(s, " eta={} dark={}", p.eta, p.dark);
    } else {
        s.push_str(" detectors=absent");
    }
    let _ = write!(
        s,
        " p0={} p2={} photons={}",
        p.p0,
        p.p2,
        if p.indistinguishable {
            "indistinguishable"
        } else {
            "distinguishable"
        }
    );
    s
}

fn odd_weight(rho: &DensityOp) -> f64 {
    rho.population(1) + rho.population(2)
}

fn kind(rho: &DensityOp) -> &'static str {
    let w = odd_weight(rho);
    if w >= 1.0 - PURE_TOL && rho.purity() >= 1.0 - PURE_TOL {
        "pure Bell state"
    } else if w <= PURE_TOL && rho.population(0) >= 1.0 - PURE_TOL {
        "ground state |00>"
    } else {
        "mixture of a Bell state and |00>"
    }
}

fn matrix(out: &mut String, rho: &DensityOp) {
    let _ = writeln!(out, "  basis |00> |01> |10> |11>");
    for (r, label) in BASIS.iter().enumerate() {
        let _ = write!(out, "  {label}");
        for c in 0..4 {
            let z = rho.element(r, c);
            let _ = write!(out, "  {:+.6}{:+.6}i", z.re, z.im);
        }
        out.push('\n');
    }
}

fn simulate(p: &Point) -> herald_core::Result<ResourceOutcome> {
    simulate_resource(&p.node()?, &p.source()?, &p.detector_model()?)
}

fn resource_section(out: &mut String, p: &Point, r: &ResourceOutcome) -> herald_core::Result<()> {
    let node = p.node()?;
    let det = p.detector_model()?;
    let _ = writeln!(out, "resource: {}", kind(&r.state));
    let _ = writeln!(out, "  acceptance_probability   {:.12}", r.accept_prob);
    let _ = writeln!(
        out,
        "  bell_weight_conditioned  {}",
        opt(conditioned_bell_weight(&node, &det).ok())
    );
    let _ = writeln!(
        out,
        "  odd_subspace_weight      {:.12}",
        odd_weight(&r.state)
    );
    let _ = writeln!(out, "  purity                   {:.12}", r.state.purity());
    if !det.is_present() && p.p0 == 0.0 && p.p2 == 0.0 {
        let dev = r.state.max_abs_diff(&resource_closed_form(&node));
        let _ = writeln!(out, "  closed_form_deviation    {dev:.3e}");
    }
    matrix(out, &r.state);
    Ok(())
}

fn ppp_section(out: &mut String, p: &Point, res: &PppResult) -> herald_core::Result<()> {
    let analytic = match success_probability_analytic(&p.node()?, &p.detector_model()?) {
        Ok(v) => Some(v),
        Err(Error::ZeroAcceptance) => None,
        Err(e) => return Err(e),
    };
    let heralded = res.success_state_even_frame();
    let fidelity = match &heralded {
        Some(s) => Some(bell_fidelity(s, herald_core::Parity::Even)?),
        None => None,
    };
    let conc = match &heralded {
        Some(s) => Some(concurrence(s)?),
        None => None,
    };
    let _ = writeln!(out, "ppp on |++>:");
    let _ = writeln!(out, "  p_success_analytic   {}", opt(analytic));
    let _ = writeln!(out, "  p_success_simulated  {:.12}", res.p_success);
    let _ = writeln!(out, "  p_failure            {:.12}", res.p_failure);
    let _ = writeln!(out, "  heralded_fidelity    {}", opt(fidelity));
    let _ = writeln!(out, "  heralded_concurrence {}", opt(conc));
    let _ = writeln!(
        out,
        "  round1 round2 herald  probability     concurrence     bell_fidelity"
    );
    for b in &res.branches {
        let _ = writeln!(
            out,
            "  {:<6} {:<6} {:<7} {:.12}  {:.12}  {:.12}",
            b.first.to_string(),
            b.second.to_string(),
            b.parity.to_string(),
            b.probability,
            concurrence(&b.state)?,
            bell_fidelity(&b.state, b.parity)?
        );
    }
    for f in &res.failures {
        let _ = writeln!(
            out,
            "  {:<6} {:<6} {:<7} {:.12}  {:.12}  -",
            f.first.to_string(),
            f.second.to_string(),
            "fail",
            f.probability,
            concurrence(&f.state)?
        );
    }
    Ok(())
}

fn with_resource(
    p: &Point,
    body: impl FnOnce(&mut String, &ResourceOutcome) -> herald_core::Result<()>,
) -> herald_core::Result<String> {
    p.validate()?;
    let mut out = format!("parameters: {}\n", parameters(p));
    match simulate(p) {
        Ok(r) => body(&mut out, &r)?,
        Err(Error::ZeroAcceptance) => {
            out.push_str("resource: never accepted (acceptance probability 0)\n")
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

pub fn resource_report(p: &Point) -> herald_core::Result<String> {
    with_resource(p, |out, r| resource_section(out, p, r))
}

pub fn ppp_report(p: &Point) -> herald_core::Result<String> {
    with_resource(p, |out, r| {
        let res = run_ppp(&plus_plus(), r, r)?;
        ppp_section(out, p, &res)
    })
}

pub fn describe(p: &Point) -> herald_core::Result<String> {
    with_resource(p, |out, r| {
        resource_section(out, p, r)?;
        let res = run_ppp(&plus_plus(), r, r)?;
        ppp_section(out, p, &res)
    })
}
