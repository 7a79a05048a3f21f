//! Exact density-operator simulation of photon-absorption heralded
//! entanglement between two remote nodes.
//!
//! A single photon is split between two broker atoms; whatever they absorb is
//! turned into a two-round parity projection on the nodes' client qubits.
//! Loss, absorption asymmetry, path phase and dark counts change only how
//! often the projection succeeds, never the state it heralds.

pub mod densop;
pub mod error;
pub mod exec;
pub mod metrics;
pub mod photonics;
pub mod ppp;

pub use densop::{DensityOp, KrausSet, PureState};
pub use error::{Error, Result};
pub use exec::Execution;
pub use metrics::{Figures, TrialBasis, TrialStats};
pub use photonics::{DetectorModel, NodeParams, ResourceOutcome, SourceModel};
pub use ppp::{Outcome, Parity, PppResult};
