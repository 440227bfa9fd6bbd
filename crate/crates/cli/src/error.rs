use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Pipeline stage that produced an error; each maps to its own exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Config,
    Input,
    Generate,
    Correct,
    Fit,
    Compare,
    Export,
    Io,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Input => 3,
            Stage::Generate => 4,
            Stage::Correct => 5,
            Stage::Fit => 6,
            Stage::Compare => 7,
            Stage::Export => 8,
            Stage::Io => 9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Input => "input",
            Stage::Generate => "generate",
            Stage::Correct => "correct",
            Stage::Fit => "fit",
            Stage::Compare => "compare",
            Stage::Export => "export",
            Stage::Io => "io",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct CliError {
    pub stage: Stage,
    pub message: String,
}

impl CliError {
    pub fn new(stage: Stage, message: impl fmt::Display) -> Self {
        CliError {
            stage,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Tags any displayable error with a stage.
pub trait AtStage<T> {
    fn at(self, stage: Stage) -> CliResult<T>;
}

impl<T, E: fmt::Display> AtStage<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> CliResult<T> {
        self.map_err(|e| CliError::new(stage, e))
    }
}
