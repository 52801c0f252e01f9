//! Discrete entropic witnesses of position-momentum EPR steering.
//!
//! Coincidence histograms of two parties' positions and momenta are
//! normalized into joint distributions, and their conditional entropies or
//! mutual informations are compared with bounds set by the window widths
//! and viewing extents. Significance comes from a Poisson bootstrap of the
//! counts. A double-Gaussian biphoton model supplies synthetic data with
//! known continuous entropies.

pub mod boot;
pub mod coarse;
pub mod config;
pub mod dist;
pub mod entropy;
pub mod error;
pub mod grid;
pub mod io;
pub mod quad;
pub mod run;
pub mod selftest;
pub mod synth;
pub mod witness;

pub use dist::{CountTensor, Histogram, JointDistribution};
pub use entropy::{EntropyValue, LogBase};
pub use error::{Error, Result};
pub use grid::{AxisGrid, GridSpec, Observable, Party};
pub use witness::{Direction, EvaluationMode, WitnessResult};
