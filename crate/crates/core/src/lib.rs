//! Simulation engine for ergodic McKean-Vlasov SDEs: interacting, ensemble and
//! self-interacting particle systems, ergodic-average estimators of `∫ f dπ`,
//! an ε-driven parameter planner with its cost model, and rate diagnostics on
//! the exactly solvable linear model.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and thread
//! pools live in the `ergomv` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod model;
pub mod numeric;
pub mod planner;
pub mod rng;

pub use dynamics::{
    CostLedger, DynamicsKind, EnsembleState, Evaluation, ParticleCloud, ParticleSchedule,
    SimulationConfig, TimeGrid,
};
pub use error::{Error, Result};
pub use estimators::{Accumulator, EstimatorKind, ExperimentResult};
pub use model::{InitialLaw, LinearModel, ModelSpec, Observable};
pub use rng::{RngStream, StreamId};
