use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// A query point lies outside the closed domain, or a stencil does not fit.
    #[error("domain error: {0}")]
    Domain(String),

    /// A constraint set or supremand violates its modelling assumptions.
    #[error("model error: {0}")]
    Model(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Invalid domain geometry (self-intersections, slits outside the domain, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// The mesh spacing cannot resolve a feature of the domain.
    #[error("refinement error: {0}")]
    Refinement(String),

    #[error("boundary datum is not 1-Lipschitz w.r.t. d: worst margin {margin:.6e} on nodes {from} -> {to}")]
    Admissibility { from: usize, to: usize, margin: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    /// Malformed configuration or expression.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema(_) | Error::Argument(_) => 2,
            _ => 3,
        }
    }

    /// Short machine-readable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Model(_) => "model",
            Error::Argument(_) => "argument",
            Error::Geometry(_) => "geometry",
            Error::Refinement(_) => "refinement",
            Error::Admissibility { .. } => "admissibility",
            Error::Precondition(_) => "precondition",
            Error::Bracket(_) => "bracket",
            Error::Resolution(_) => "resolution",
            Error::Schema(_) => "schema",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
