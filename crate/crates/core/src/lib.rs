pub mod augment;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod plot;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
