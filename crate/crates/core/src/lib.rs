pub mod basis;
pub mod config;
pub mod energy;
pub mod error;
pub mod idealgas;
pub mod meanfield;
pub mod observables;
pub mod sampler;
pub mod scan;
pub mod stats;

pub use error::{Error, Result};
