//! Library side of the command-line tool: scenario-file schema, validation,
//! and the exit-code-carrying error type. The binary in `main.rs` wires
//! these into subcommands.

// Validation guards use `!(x > 0.0)` so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod scenario_file;

use lightpulse_core::CoreError;

/// Error carrying its process exit code: 2 for input validation problems,
/// 1 for failures during computation.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn validation(message: String) -> Self {
        CliError { message, code: 2 }
    }

    pub fn computation(message: String) -> Self {
        CliError { message, code: 1 }
    }

    pub fn from_validation(err: CoreError) -> Self {
        CliError::from(err)
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        let code = match err {
            CoreError::InvalidInput(_)
            | CoreError::OpenGeometry { .. }
            | CoreError::UnsupportedMechanism { .. }
            | CoreError::Causality { .. }
            | CoreError::FitUnderdetermined { .. }
            | CoreError::FitIllConditioned => 2,
            CoreError::NoBracket { .. } | CoreError::OutsideSpan { .. } => 1,
        };
        CliError {
            message: err.to_string(),
            code,
        }
    }
}
