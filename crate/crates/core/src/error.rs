use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh import failed at line {line}: {msg}")]
    Import { line: usize, msg: String },

    #[error("interface crosses the boundary of cell {cell} more than twice; refine the mesh")]
    RefineMesh { cell: usize },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("singular system: no usable pivot at index {pivot}")]
    Singular { pivot: usize },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
