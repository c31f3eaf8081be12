use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("explicit expansion would produce {needed} rectangles, above the limit {limit}; use the implicit operations instead")]
    ExplicitExpansion { needed: u128, limit: u64 },

    #[error("endpoint {0} lies strictly inside an obstacle")]
    InvalidEndpoint(String),

    #[error("no valid path between the endpoints")]
    Unreachable,

    #[error("undefined result: {0}")]
    Undefined(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
