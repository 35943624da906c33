use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A point or length lies outside the chart or model domain.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid annulus: {0}")]
    InvalidSpec(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    /// The requested quantity is undefined for this configuration
    /// (for example the angle at the inner center when the balls are concentric).
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("oracle error: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Prefixes the message with where the error occurred, keeping the kind.
    pub fn context(self, at: &str) -> Self {
        use Error::*;
        match self {
            Domain(m) => Domain(format!("{at}: {m}")),
            InvalidSpec(m) => InvalidSpec(format!("{at}: {m}")),
            InvalidPoint(m) => InvalidPoint(format!("{at}: {m}")),
            Degenerate(m) => Degenerate(format!("{at}: {m}")),
            Geometry(m) => Geometry(format!("{at}: {m}")),
            Mesh(m) => Mesh(format!("{at}: {m}")),
            Assembly(m) => Assembly(format!("{at}: {m}")),
            Solver(m) => Solver(format!("{at}: {m}")),
            Oracle(m) => Oracle(format!("{at}: {m}")),
        }
    }
}
