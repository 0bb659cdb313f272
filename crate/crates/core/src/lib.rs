//! Dynamic fair allocation of sequentially arriving divisible resources.
//!
//! Resources of `L` known types arrive one per period and must be split
//! irrevocably among `n` agents. Policies are scored by a Hölder-mean welfare
//! of the agents' cumulative utilities against the hindsight optimum.

pub mod arrivals;
pub mod error;
pub mod policies;
pub mod simulator;
pub mod solvers;
pub mod welfare;

pub use error::{Error, Result};
