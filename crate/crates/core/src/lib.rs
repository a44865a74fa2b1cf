//! Workplace bidirectional EV charging: a seeded station simulator and a
//! hierarchical multi-agent actor-critic controller that trades off building
//! electricity cost, demand-charge penalties and EV charging targets.

pub mod config;
pub mod error;
pub mod evalkit;
pub mod hicontrol;
pub mod locontrol;
pub mod netcore;
pub mod simenv;
pub mod traceio;
pub mod trainer;

pub use error::{Error, Result};
