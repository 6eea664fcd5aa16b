//! Command-line front end, configuration, report formats and the
//! multi-threaded executor for `percolab-core`.

pub mod config;
pub mod exec;
pub mod experiments;
pub mod oracle;
pub mod report;
pub mod selftest;
