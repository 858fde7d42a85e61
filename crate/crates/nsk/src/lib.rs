//! File formats, statistics, parallel ensembles and the `nsk` command line
//! on top of `nsk-core`.

pub mod cli;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod io;
pub mod stats;

pub use error::{Error, Result};
