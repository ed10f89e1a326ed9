//! Simulation, constructive parameter recovery and online estimation for the
//! SIQR epidemic model (SIR with a quarantine compartment).
//!
//! * [`model`]: the two model variants and their assumptions.
//! * [`integrator`]: fixed-step RK4, autonomous and input-driven.
//! * [`observation`]: measured outputs, analytic output jets, noise, smoothing.
//! * [`identifiability`]: exact recovery of the parameters from output jets.
//! * [`observer`]: the seven-state observer, its gain design and error analysis.
//! * [`batch`]: data-parallel batches (recovery sweeps, noise ensembles).
//! * [`scenario`]: scenario files and the end-to-end estimation pipeline.
//! * [`cli`]: the commands behind the `siqr` binary.

pub mod batch;
pub mod cli;
pub mod error;
pub mod identifiability;
pub mod integrator;
pub mod model;
pub mod observation;
pub mod observer;
pub mod scenario;

pub use error::{Error, Result};
