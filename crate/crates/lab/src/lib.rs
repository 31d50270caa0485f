//! File formats, parameter sweeps and the `fecsim` command line on top of
//! [`fecsim_core`].

pub mod cli;
pub mod config;
pub mod report;
pub mod sweep;
pub mod trace_csv;
pub mod traffic_csv;

pub use fecsim_core as core;
