use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured resource cap would be exceeded.
    #[error("capacity exceeded: {what} = {requested} exceeds cap {cap}")]
    Capacity {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    #[error("quadrature did not converge after {doublings} doublings (nodes = {nodes}, last relative change = {last_change:e})")]
    Quadrature {
        doublings: u32,
        nodes: usize,
        last_change: f64,
    },

    #[error("root solve failed: {reason} (bracket [{lo:e}, {hi:e}], {iterations} iterations)")]
    Solver {
        reason: String,
        lo: f64,
        hi: f64,
        iterations: u32,
    },

    /// Two independent computations of the same quantity disagree.
    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
