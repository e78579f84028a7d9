//! Command-line harness around `cmop-core`: seeded instance files, solver
//! runs with CSV traces, certificate checks and step-size sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod instance;
pub mod trace;

pub use error::{CliError, CliResult, Status};
pub use experiment::{AlphaSpec, Method, MonitorTag, Source};
pub use instance::{gen_instance, InstanceFile, SolutionFile};
