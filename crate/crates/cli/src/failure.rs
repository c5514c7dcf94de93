//! Errors as seen by the user, split by exit code.

use std::fmt::Display;
use std::process::ExitCode;

use latnet_autodiff::TensorError;
use latnet_lbm::LbmError;
use latnet_model::ModelError;
use latnet_train::TrainError;

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, missing files, incompatible shapes: exit 1.
    User(String),
    /// Instability, divergence or non-finite values: exit 2.
    Numeric(String),
}

pub type CliResult<T> = Result<T, Failure>;

impl Failure {
    pub fn user(msg: impl Display) -> Self {
        Failure::User(msg.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::User(_) => ExitCode::from(1),
            Failure::Numeric(_) => ExitCode::from(2),
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::User(m) | Failure::Numeric(m) => m,
        }
    }
}

fn classify(numeric: bool, msg: String) -> Failure {
    if numeric {
        Failure::Numeric(msg)
    } else {
        Failure::User(msg)
    }
}

impl From<LbmError> for Failure {
    fn from(e: LbmError) -> Self {
        let numeric = matches!(e, LbmError::Instability { .. } | LbmError::Distribution { .. });
        classify(numeric, e.to_string())
    }
}

impl From<TensorError> for Failure {
    fn from(e: TensorError) -> Self {
        classify(matches!(e, TensorError::Numeric { .. }), e.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let numeric = matches!(
            e,
            ModelError::Diverged { .. } | ModelError::Tensor(TensorError::Numeric { .. })
        );
        classify(numeric, e.to_string())
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        classify(e.is_numeric(), e.to_string())
    }
}
