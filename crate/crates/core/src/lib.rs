pub mod cli;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod metric;
pub mod observables;
pub mod pipeline;
pub mod spectral;
pub mod spin;

pub use error::{Error, Result};
