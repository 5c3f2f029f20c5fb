//! Reflected Weibull distribution: density, sampling and moments, three
//! estimators of its parameters, and a Monte Carlo harness comparing them.

pub mod data;
pub mod error;
pub mod estimate;
pub mod gof;
pub mod io;
pub mod model;
pub mod numerics;
pub mod simulation;

pub use data::{GroupClass, GroupedSample, Sample};
pub use error::{Error, Result};
pub use estimate::{EstimationResult, Method};
pub use model::RwParams;
