//! Event-camera multi-object tracking.
//!
//! Events are aggregated into fixed-period binary frames, median filtered,
//! and turned into region proposals from their X/Y projections. An
//! overlap-based tracker with velocity prediction and occlusion handling
//! follows up to eight objects. An event-by-event mean-shift tracker serves
//! as a baseline, and an IoU-sweep harness scores both against synthetic
//! ground truth.

pub mod classify_export;
pub mod cli;
pub mod config;
pub mod ebms;
pub mod error;
pub mod eval;
pub mod event_io;
pub mod image;
pub mod instrument;
pub mod pipeline;
pub mod quant;
pub mod region;
pub mod regionprop;
pub mod synth;
pub mod tracker;

pub use error::{Error, Result};
pub use region::{Region, RegionF};
