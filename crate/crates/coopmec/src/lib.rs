//! Configuration files, report formats, parallel sweeps and the command
//! line on top of `coopmec-core`.

pub mod certify;
pub mod cli;
pub mod config;
pub mod report;
pub mod sweep;
