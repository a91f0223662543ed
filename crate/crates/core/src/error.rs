use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Mesh connectivity does not describe a closed 2-manifold.
    #[error("topology error: {0}")]
    Topology(String),

    /// Degenerate geometry (zero-length edge, non-positive area, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("parse error in {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("unsupported file version: expected {expected}, found {found}")]
    Version { expected: String, found: String },

    /// Interpolated vertex thickness is not positive; the scheme has no wetting/drying.
    #[error("dry vertex {vertex}: interpolated thickness {thickness}")]
    DryVertex { vertex: usize, thickness: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    /// A failure while advancing the solution, tagged with the step number.
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
