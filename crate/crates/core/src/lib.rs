//! Temporally segmented distortionless-response beamforming.
//!
//! Batch and online segmentation of snapshot records into locally stationary
//! intervals, each beamformed with its own MVDR weights, together with the
//! classical baselines, scenario generators and a Monte Carlo harness.

pub mod beamformers;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod scenarios;
pub mod segmentation;

pub use error::{Error, Result};
