use std::path::PathBuf;

use crate::grid::GridPoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge within {terms} terms at |k|/n = {ratio}")]
    NonConvergence { terms: usize, ratio: f64 },

    #[error("{0} lies outside the de Moivre-Laplace window")]
    Window(GridPoint),

    #[error("sweep grid has {cells} cells, exceeding the cap of {cap}")]
    Resource { cells: u64, cap: u64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
