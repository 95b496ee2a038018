//! Command-line surface: run configuration, versioned artifact and report
//! files, and one function per subcommand.

mod artifact;
mod commands;
mod config;

pub use artifact::{load_artifact, save_artifact, ArtifactFile, RouterPayload, ARTIFACT_FORMAT, FORMAT_VERSION};
pub use commands::{cmd_eval, cmd_filter, cmd_route, cmd_split, cmd_synth, cmd_tau, cmd_train, train_router};
pub use config::{ConfigFile, RouterKind, RunConfig, SEED_ENV};

use std::fmt;

use crate::Error;

/// Exit code for errors caused by bad input (files, flags, data).
pub const EXIT_INPUT: i32 = 2;
/// Exit code for internal invariant violations.
pub const EXIT_INTERNAL: i32 = 3;

/// A module error annotated with the file or step it came from.
#[derive(Debug)]
pub struct CliError {
    pub context: String,
    pub source: Error,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        if self.source.is_internal() {
            EXIT_INTERNAL
        } else {
            EXIT_INPUT
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.context, self.source)
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

pub(crate) trait Context<T> {
    fn context(self, ctx: impl fmt::Display) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, Error> {
    fn context(self, ctx: impl fmt::Display) -> Result<T, CliError> {
        self.map_err(|source| CliError {
            context: ctx.to_string(),
            source,
        })
    }
}
