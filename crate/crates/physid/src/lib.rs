//! Dataset handling, experiment pipelines and report writing on top of
//! [`physid_core`].

pub mod config;
pub mod dataset;
pub mod experiments;
pub mod report;

pub use physid_core as core;
