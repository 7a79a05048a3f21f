//! Grid evaluation and CSV output.
//!
//! CSV: comma separated, header row, LF endings, floats as `{:.16e}`
//! (17 significant digits). Points where a metric does not exist carry
//! `undefined`; trial counts that diverge carry `divergent`.

use herald_core::exec::map_ordered;
use herald_core::metrics::{expected_trials_analytic, expected_trials_mc, source_fault_analysis};
use herald_core::ppp::success_probability_analytic;
use herald_core::{Error, Execution, SourceModel, TrialBasis};

use crate::config::{Figure, Point, SweepConfig};
use crate::error::Result;

pub const UNDEFINED: &str = "undefined";
pub const DIVERGENT: &str = "divergent";

const SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed for the Monte Carlo run at grid index `index`.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_mul(SEED_MIX)
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn cell(value: herald_core::Result<f64>, missing: &'static str) -> herald_core::Result<String> {
    match value {
        Ok(v) => Ok(num(v)),
        Err(Error::ZeroAcceptance | Error::Divergent | Error::ZeroSuccess) => {
            Ok(missing.to_string())
        }
        Err(e) => Err(e),
    }
}

pub fn header(cfg: &SweepConfig) -> Vec<&'static str> {
    match cfg.figure {
        Figure::Fig2 => vec!["p_abs", "eta", "p_success_analytic", "p_success_simulated"],
        Figure::Fig3 => vec!["p_abs", "dark", "trials_analytic", "trials_mc", "mc_stderr"],
        Figure::Fig4 => vec!["p0", "p2", "concurrence", "fidelity"],
        Figure::Custom => {
            let mut h: Vec<&'static str> = cfg.axes.iter().map(|a| a.param.name()).collect();
            h.extend([
                "p_success_analytic",
                "p_success_simulated",
                "concurrence",
                "fidelity",
                "trials_analytic",
            ]);
            h
        }
    }
}

fn simulated_p_success(p: &Point, source: &SourceModel) -> herald_core::Result<f64> {
    match source_fault_analysis(&p.node()?, source, &p.detector_model()?) {
        Ok(f) => Ok(f.p_success),
        Err(Error::ZeroSuccess) => Ok(0.0),
        Err(e) => Err(e),
    }
}

fn row(cfg: &SweepConfig, index: usize, p: &Point) -> herald_core::Result<Vec<String>> {
    let node = p.node()?;
    let det = p.detector_model()?;
    let source = p.source()?;
    let mut cells: Vec<String> = cfg.axes.iter().map(|a| num(p.get(a.param))).collect();
    match cfg.figure {
        Figure::Fig2 => {
            cells.push(cell(success_probability_analytic(&node, &det), UNDEFINED)?);
            cells.push(cell(simulated_p_success(p, &source), UNDEFINED)?);
        }
        Figure::Fig3 => {
            let seed = point_seed(cfg.seed, index);
            // Each point is already a parallel task.
            match expected_trials_mc(
                &node,
                &det,
                TrialBasis::Accept,
                cfg.samples,
                seed,
                Execution::Sequential,
            ) {
                Ok(stats) => {
                    cells.push(num(stats.expected_per_accept));
                    cells.push(num(stats.mc_mean));
                    cells.push(num(stats.mc_stderr));
                }
                Err(Error::Divergent) => {
                    cells.extend([DIVERGENT.to_string(), DIVERGENT.into(), DIVERGENT.into()])
                }
                Err(e) => return Err(e),
            }
        }
        Figure::Fig4 => match source_fault_analysis(&node, &source, &det) {
            Ok(f) => cells.extend([num(f.concurrence), num(f.fidelity)]),
            Err(Error::ZeroSuccess | Error::ZeroAcceptance) => {
                cells.extend([UNDEFINED.to_string(), UNDEFINED.to_string()])
            }
            Err(e) => return Err(e),
        },
        Figure::Custom => {
            cells.push(cell(success_probability_analytic(&node, &det), UNDEFINED)?);
            match source_fault_analysis(&node, &source, &det) {
                Ok(f) => cells.extend([num(f.p_success), num(f.concurrence), num(f.fidelity)]),
                Err(Error::ZeroSuccess) => {
                    cells.extend([num(0.0), UNDEFINED.to_string(), UNDEFINED.to_string()])
                }
                Err(Error::ZeroAcceptance) => {
                    cells.extend(std::iter::repeat_n(UNDEFINED.to_string(), 3))
                }
                Err(e) => return Err(e),
            }
            cells.push(cell(
                expected_trials_analytic(&node, &det, TrialBasis::Accept),
                DIVERGENT,
            )?);
        }
    }
    Ok(cells)
}

/// Evaluates every grid point and renders the CSV document.
pub fn run_sweep(cfg: &SweepConfig, exec: Execution) -> Result<String> {
    let grid: Vec<(usize, Point)> = cfg.grid().into_iter().enumerate().collect();
    let rows = map_ordered(exec, &grid, |(i, p)| row(cfg, *i, p));
    let mut out = header(cfg).join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r?.join(","));
        out.push('\n');
    }
    Ok(out)
}
