//! File formats, the config-driven pipeline and the acceptance harness
//! around [`shellvib_core`].

pub mod accept;
pub mod config;
mod error;
pub mod obj;
pub mod pipeline;
pub mod report;
pub mod vtk;

pub use error::{Error, Result};
pub use shellvib_core as core;
