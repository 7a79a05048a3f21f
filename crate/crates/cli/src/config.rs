//! Sweep configuration.
//!
//! The file format is one `key = value` per line. `#` starts a comment,
//! blank lines are ignored, and a key may appear at most once per file.
//!
//! ```text
//! figure = fig2            # fig2 | fig3 | fig4 | custom (or 2, 3, 4)
//! seed = 7
//! samples = 100000         # Monte Carlo samples per point (fig3)
//! output = surface.csv
//! axis.p_abs = 0, 1, 41    # start, stop, steps (steps >= 2)
//! eta = 0.8                # fixed parameter
//! detectors = true
//! indistinguishable = true
//! ```
//!
//! Parameters: `p_abs` (sets both `a1` and `a2`), `a1`, `a2`, `delta`, `eta`,
//! `dark`, `p0`, `p2`. Each may be fixed or swept, not both. Command-line
//! overrides are applied after the file and win.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use herald_core::{DetectorModel, NodeParams, SourceModel};

use crate::error::{CliError, Result};

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Custom,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Custom => "custom",
        }
    }

    fn default_axes(self) -> Vec<Axis> {
        let axis = |param, start, stop, steps| Axis {
            param,
            start,
            stop,
            steps,
        };
        match self {
            Figure::Fig2 => vec![
                axis(Param::PAbs, 0.0, 1.0, 41),
                axis(Param::Eta, 0.0, 1.0, 41),
            ],
            Figure::Fig3 => vec![
                axis(Param::PAbs, 0.0, 1.0, 41),
                axis(Param::Dark, 0.0, 1.0, 41),
            ],
            Figure::Fig4 => vec![
                axis(Param::P0, 0.0, 0.5, 26),
                axis(Param::P2, 0.0, 0.05, 26),
            ],
            Figure::Custom => Vec::new(),
        }
    }
}

impl FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "2" | "fig2" => Ok(Figure::Fig2),
            "3" | "fig3" => Ok(Figure::Fig3),
            "4" | "fig4" => Ok(Figure::Fig4),
            "custom" => Ok(Figure::Custom),
            other => Err(format!(
                "unknown figure `{other}` (expected 2, 3, 4 or custom)"
            )),
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Param {
    PAbs,
    A1,
    A2,
    Delta,
    Eta,
    Dark,
    P0,
    P2,
}

impl Param {
    pub const ALL: [Param; 8] = [
        Param::PAbs,
        Param::A1,
        Param::A2,
        Param::Delta,
        Param::Eta,
        Param::Dark,
        Param::P0,
        Param::P2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::PAbs => "p_abs",
            Param::A1 => "a1",
            Param::A2 => "a2",
            Param::Delta => "delta",
            Param::Eta => "eta",
            Param::Dark => "dark",
            Param::P0 => "p0",
            Param::P2 => "p2",
        }
    }

    fn lookup(name: &str) -> Option<Param> {
        Param::ALL.into_iter().find(|p| p.name() == name)
    }

    fn overlaps(self, other: Param) -> bool {
        let absorb = |p| matches!(p, Param::PAbs | Param::A1 | Param::A2);
        self == other
            || (absorb(self) && absorb(other) && (self == Param::PAbs || other == Param::PAbs))
    }

    fn check(self, value: f64) -> std::result::Result<(), String> {
        if !value.is_finite() {
            return Err(format!("{} must be finite", self.name()));
        }
        if self != Param::Delta && !(0.0..=1.0).contains(&value) {
            return Err(format!("{} = {value} is outside [0, 1]", self.name()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Axis {
    /// Evenly spaced values with both endpoints included exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == last {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / last as f64
                }
            })
            .collect()
    }

    fn max(&self) -> f64 {
        self.start.max(self.stop)
    }
}

/// One point of parameter space plus the switches that select models.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub a1: f64,
    pub a2: f64,
    pub delta: f64,
    pub eta: f64,
    pub dark: f64,
    pub p0: f64,
    pub p2: f64,
    pub detectors: bool,
    pub indistinguishable: bool,
}

impl Default for Point {
    fn default() -> Self {
        Point {
            a1: 0.1,
            a2: 0.1,
            delta: 0.0,
            eta: 1.0,
            dark: 0.0,
            p0: 0.0,
            p2: 0.0,
            detectors: false,
            indistinguishable: true,
        }
    }
}

impl Point {
    pub fn set(&mut self, param: Param, value: f64) {
        match param {
            Param::PAbs => {
                self.a1 = value;
                self.a2 = value;
            }
            Param::A1 => self.a1 = value,
            Param::A2 => self.a2 = value,
            Param::Delta => self.delta = value,
            Param::Eta => self.eta = value,
            Param::Dark => self.dark = value,
            Param::P0 => self.p0 = value,
            Param::P2 => self.p2 = value,
        }
    }

    pub fn get(&self, param: Param) -> f64 {
        match param {
            Param::PAbs | Param::A1 => self.a1,
            Param::A2 => self.a2,
            Param::Delta => self.delta,
            Param::Eta => self.eta,
            Param::Dark => self.dark,
            Param::P0 => self.p0,
            Param::P2 => self.p2,
        }
    }

    pub fn node(&self) -> herald_core::Result<NodeParams> {
        NodeParams::new(self.a1, self.a2, self.delta)
    }

    pub fn detector_model(&self) -> herald_core::Result<DetectorModel> {
        if self.detectors {
            DetectorModel::new(self.eta, self.dark)
        } else {
            Ok(DetectorModel::absent())
        }
    }

    pub fn source(&self) -> herald_core::Result<SourceModel> {
        Ok(SourceModel::new(self.p0, self.p2)?.with_indistinguishable(self.indistinguishable))
    }

    /// Builds all three models, surfacing the first domain error.
    pub fn validate(&self) -> herald_core::Result<()> {
        self.node()?;
        self.detector_model()?;
        self.source()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub figure: Figure,
    /// First axis is the outermost loop.
    pub axes: Vec<Axis>,
    pub fixed: Point,
    pub seed: u64,
    pub samples: usize,
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn defaults(figure: Figure) -> Self {
        let mut fixed = Point::default();
        match figure {
            Figure::Fig2 | Figure::Fig3 => fixed.detectors = true,
            Figure::Fig4 | Figure::Custom => {}
        }
        SweepConfig {
            figure,
            axes: figure.default_axes(),
            fixed,
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            output: None,
        }
    }

    pub fn points(&self) -> usize {
        self.axes.iter().map(|a| a.steps).product()
    }

    /// Every grid point in row order, first axis outermost.
    pub fn grid(&self) -> Vec<Point> {
        let values: Vec<Vec<f64>> = self.axes.iter().map(Axis::values).collect();
        let mut out = Vec::with_capacity(self.points());
        let mut index = vec![0usize; self.axes.len()];
        loop {
            let mut p = self.fixed.clone();
            for (k, axis) in self.axes.iter().enumerate() {
                p.set(axis.param, values[k][index[k]]);
            }
            out.push(p);
            let mut k = self.axes.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                index[k] += 1;
                if index[k] < self.axes[k].steps {
                    break;
                }
                index[k] = 0;
            }
        }
    }
}

/// One `key = value` assignment and where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub origin: String,
    pub key: String,
    pub value: String,
}

impl Entry {
    fn error(&self, message: impl Into<String>) -> CliError {
        CliError::Syntax {
            origin: self.origin.clone(),
            message: message.into(),
        }
    }
}

/// Splits config text into entries; rejects malformed lines and duplicates.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut entries: Vec<Entry> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let origin = format!("line {}", n + 1);
        let entry = split_assignment(line, origin)?;
        if entries.iter().any(|e| e.key == entry.key) {
            return Err(entry.error(format!("duplicate key `{}`", entry.key)));
        }
        entries.push(entry);
    }
    Ok(entries)
}

/// Parses a command-line `key=value` override.
pub fn parse_override(text: &str) -> Result<Entry> {
    split_assignment(text.trim(), format!("override `{text}`"))
}

fn split_assignment(line: &str, origin: String) -> Result<Entry> {
    let Some((key, value)) = line.split_once('=') else {
        return Err(CliError::Syntax {
            origin,
            message: "expected `key = value`".into(),
        });
    };
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() || value.is_empty() {
        return Err(CliError::Syntax {
            origin,
            message: "empty key or value".into(),
        });
    }
    Ok(Entry {
        origin,
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_f64(entry: &Entry, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| entry.error(format!("`{}` is not a number", text.trim())))?;
    if !v.is_finite() {
        return Err(entry.error("value must be finite"));
    }
    Ok(v)
}

fn parse_bool(entry: &Entry) -> Result<bool> {
    match entry.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(entry.error(format!("`{other}` is not a boolean"))),
    }
}

fn parse_axis(entry: &Entry, param: Param) -> Result<Axis> {
    let parts: Vec<&str> = entry.value.split(',').collect();
    if parts.len() != 3 {
        return Err(entry.error("axis needs `start, stop, steps`"));
    }
    let start = parse_f64(entry, parts[0])?;
    let stop = parse_f64(entry, parts[1])?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| entry.error(format!("`{}` is not a step count", parts[2].trim())))?;
    if steps < 2 {
        return Err(entry.error("an axis needs at least 2 steps"));
    }
    param.check(start).map_err(|m| entry.error(m))?;
    param.check(stop).map_err(|m| entry.error(m))?;
    Ok(Axis {
        param,
        start,
        stop,
        steps,
    })
}

/// Figure named by the entries, if any; the last assignment wins.
pub fn figure_of(entries: &[Entry]) -> Result<Option<Figure>> {
    let mut figure = None;
    for e in entries.iter().filter(|e| e.key == "figure") {
        figure = Some(e.value.parse().map_err(|m: String| e.error(m))?);
    }
    Ok(figure)
}

/// Builds a config for `figure` from its defaults and `entries`, applied in
/// order so later entries win.
pub fn build(figure: Figure, entries: &[Entry]) -> Result<SweepConfig> {
    let mut cfg = SweepConfig::defaults(figure);
    let mut fixed_params: Vec<Param> = Vec::new();
    let mut user_axes: Vec<Axis> = Vec::new();
    let mut detectors_explicit = false;

    for e in entries {
        let key = e.key.as_str();
        if let Some(name) = key.strip_prefix("axis.") {
            let param = Param::lookup(name)
                .ok_or_else(|| e.error(format!("unknown axis parameter `{name}`")))?;
            let axis = parse_axis(e, param)?;
            match user_axes.iter_mut().find(|a| a.param == param) {
                Some(slot) => *slot = axis,
                None => user_axes.push(axis),
            }
            continue;
        }
        if let Some(param) = Param::lookup(key) {
            let v = parse_f64(e, &e.value)?;
            param.check(v).map_err(|m| e.error(m))?;
            cfg.fixed.set(param, v);
            fixed_params.push(param);
            continue;
        }
        match key {
            "figure" => {
                e.value.parse::<Figure>().map_err(|m| e.error(m))?;
            }
            "seed" => {
                cfg.seed = e
                    .value
                    .parse()
                    .map_err(|_| e.error(format!("`{}` is not a u64 seed", e.value)))?;
            }
            "samples" => {
                cfg.samples = e
                    .value
                    .parse()
                    .ok()
                    .filter(|&n: &usize| n >= 1)
                    .ok_or_else(|| e.error("samples must be a positive integer"))?;
            }
            "output" => cfg.output = Some(PathBuf::from(&e.value)),
            "detectors" => {
                cfg.fixed.detectors = parse_bool(e)?;
                detectors_explicit = true;
            }
            "indistinguishable" => cfg.fixed.indistinguishable = parse_bool(e)?,
            other => return Err(e.error(format!("unknown key `{other}`"))),
        }
    }

    match figure {
        Figure::Custom => {
            if user_axes.is_empty() {
                return Err(CliError::Config(
                    "custom sweeps need at least one axis".into(),
                ));
            }
            cfg.axes = user_axes;
        }
        _ => {
            for axis in user_axes {
                let slot = cfg
                    .axes
                    .iter_mut()
                    .find(|a| a.param == axis.param)
                    .ok_or_else(|| {
                        CliError::Config(format!("{figure} does not sweep `{}`", axis.param.name()))
                    })?;
                *slot = axis;
            }
        }
    }

    for (i, a) in cfg.axes.iter().enumerate() {
        if cfg.axes[..i].iter().any(|b| b.param.overlaps(a.param)) {
            return Err(CliError::Config(format!(
                "axis `{}` overlaps another axis",
                a.param.name()
            )));
        }
        if let Some(p) = fixed_params.iter().find(|p| p.overlaps(a.param)) {
            return Err(CliError::Config(format!(
                "`{}` is fixed but `{}` is swept",
                p.name(),
                a.param.name()
            )));
        }
    }

    let wants_detectors = cfg
        .axes
        .iter()
        .any(|a| matches!(a.param, Param::Eta | Param::Dark))
        || fixed_params
            .iter()
            .any(|p| matches!(p, Param::Eta | Param::Dark));
    if wants_detectors && !cfg.fixed.detectors {
        if detectors_explicit {
            return Err(CliError::Config(
                "eta/dark given but detectors = false".into(),
            ));
        }
        cfg.fixed.detectors = true;
    }

    // Grids are linear, so the extremes bound every point.
    let max_of = |param: Param| {
        cfg.axes
            .iter()
            .find(|a| a.param == param)
            .map_or(cfg.fixed.get(param), Axis::max)
    };
    if max_of(Param::P0) + max_of(Param::P2) > 1.0 {
        return Err(CliError::Config(
            "p0 + p2 exceeds 1 somewhere on the grid".into(),
        ));
    }
    cfg.fixed.validate()?;
    Ok(cfg)
}
