//! Batch driver behind the `qds` binary: problem files, subcommands and run
//! reports.

pub mod commands;
pub mod format;
pub mod report;

pub use commands::{
    cmd_check, cmd_corner, cmd_decompose, cmd_demo, cmd_dilate, cmd_evolve, DilateArgs, Settings,
};
pub use format::{ProblemSpec, HS_BASIS_TAG, SPEC_SCHEMA};
pub use report::RunReport;

/// Unreadable or inconsistent input; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError(pub String);

impl InputError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}
