use prs_core::dataset::DatasetError;
use serde::Serialize;
use thiserror::Error;

/// Failure of a subcommand; the variant fixes the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Missing or unreadable input, bad config. Exit 2.
    #[error("{0}")]
    Input(String),
    /// Inputs readable but failing validation. Exit 3.
    #[error("{kind}: {message}")]
    Validation { kind: &'static str, message: String },
    /// A pipeline stage failed. Exit 4.
    #[error("{stage}: {message}")]
    Pipeline { stage: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Validation { .. } => 3,
            CliError::Pipeline { .. } => 4,
        }
    }

    pub fn stage(stage: &'static str) -> impl FnOnce(String) -> CliError {
        move |message| CliError::Pipeline { stage, message }
    }

    /// One-line JSON form for machine consumers.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            exit_code: i32,
            kind: &'a str,
            stage: Option<&'a str>,
            message: String,
        }
        let (kind, stage) = match self {
            CliError::Input(_) => ("Input", None),
            CliError::Validation { kind, .. } => (*kind, None),
            CliError::Pipeline { stage, .. } => ("Pipeline", Some(*stage)),
        };
        let message = match self {
            CliError::Validation { message, .. } => message.clone(),
            other => other.to_string(),
        };
        serde_json::to_string(&Record { exit_code: self.exit_code(), kind, stage, message }).expect("record serialises")
    }
}

fn dataset_kind(e: &DatasetError) -> &'static str {
    match e {
        DatasetError::MissingFile(_) => "MissingFile",
        DatasetError::Io { .. } => "Io",
        DatasetError::Csv { .. } => "Csv",
        DatasetError::MissingColumn(_) => "MissingColumn",
        DatasetError::BadEnum { .. } => "BadEnum",
        DatasetError::BadRole { .. } => "BadRole",
        DatasetError::BadNumber { .. } => "BadNumber",
        DatasetError::OutOfRange { .. } => "OutOfRange",
        DatasetError::UnknownPlayer { .. } => "UnknownPlayer",
        DatasetError::UnknownCount { .. } => "UnknownCount",
        DatasetError::ShooterNotParticipant { .. } => "ShooterNotParticipant",
        DatasetError::TeamMismatch { .. } => "TeamMismatch",
        DatasetError::EmptyParticipants { .. } => "EmptyParticipants",
        DatasetError::DuplicateActionId(_) => "DuplicateActionId",
        DatasetError::DuplicatePlayerId(_) => "DuplicatePlayerId",
        DatasetError::EmptyResult => "EmptyResult",
        DatasetError::InvalidConfig(_) => "InvalidConfig",
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::MissingFile(_) | DatasetError::Io { .. } | DatasetError::InvalidConfig(_) => {
                CliError::Input(format!("{}: {e}", dataset_kind(&e)))
            }
            _ => CliError::Validation { kind: dataset_kind(&e), message: e.to_string() },
        }
    }
}
