use std::fmt;

use convnilm_core::{DataError, MetricsError, ModelError, TensorError, TrainError};

/// A command failure tagged with the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub const USAGE: u8 = 1;
pub const DATA: u8 = 2;
pub const NUMERIC: u8 = 3;

impl Failure {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Self {
            code: USAGE,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Self {
            code: DATA,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn numeric(msg: impl fmt::Display) -> Self {
        Self {
            code: NUMERIC,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        Self {
            code: self.code,
            error: self.error.context(what.to_string()),
        }
    }
}

fn tensor_code(e: &TensorError) -> u8 {
    match e {
        TensorError::NonFinite { .. } | TensorError::DivisionByZero => NUMERIC,
        _ => DATA,
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Self {
            code: DATA,
            error: e.into(),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let code = match &e {
            ModelError::Config(_) | ModelError::NotStreamable => USAGE,
            ModelError::Tensor(t) => tensor_code(t),
            _ => DATA,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        let code = match &e {
            TrainError::Setup(_) => USAGE,
            TrainError::NonFiniteGradient(_) => NUMERIC,
            TrainError::Model(ModelError::Tensor(t)) | TrainError::Tensor(t) => tensor_code(t),
            TrainError::Model(ModelError::Config(_)) => USAGE,
            TrainError::Model(_) => DATA,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        Self {
            code: DATA,
            error: e.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: DATA,
            error: e.into(),
        }
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;
