//! Rate-distortion analysis of CSI feedback after MMSE training with Gaussian pilots.

pub mod bounds;
pub mod channel;
pub mod cli;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod numerics;
pub mod pilots;
pub mod rdf;

pub use error::{Error, Result};
