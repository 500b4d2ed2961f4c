//! Library side of the `fracrothe` command-line tool: configuration
//! parsing, run orchestration and file output. The binary in
//! `main.rs` is a thin argument-parsing shell over [`commands`].

pub mod commands;
pub mod config;
pub mod oracle;
pub mod output;

/// Stable exit-code contract of the CLI.
pub mod exit_codes {
    pub const SUCCESS: i32 = 0;
    pub const SOLVER_FAILURE: i32 = 1;
    pub const DECAY_DIAGNOSTIC: i32 = 2;
    pub const VERIFICATION_FAILURE: i32 = 3;
}
