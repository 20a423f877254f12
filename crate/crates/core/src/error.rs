use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("function is identically zero")]
    ZeroFunction,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid grid function data: {0}")]
    InvalidData(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
