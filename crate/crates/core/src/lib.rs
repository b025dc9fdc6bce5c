//! Reverse-correlation toolkit for auditory classification images.

pub mod aci;
pub mod dsp;
pub mod error;
pub mod experiment;
pub mod listener;
pub mod noise;
pub mod persist;
pub mod pipeline;
pub mod predict;
pub mod seed;
pub mod signal;
pub mod stats;
pub mod targets;
pub mod tfrep;

pub use error::{Error, Result};
