//! Command-line front end for the mixsmooth toolkit: run configs, experiment
//! dispatch and report files.

pub mod config;
pub mod run;
