use thiserror::Error;

use crate::simulator::Crossing;
use crate::zeros::ZeroReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("degenerate corner: {0}")]
    DegenerateCorner(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid perturbation: {0}")]
    InvalidSpec(String),

    #[error("unresolved zero cluster in [{lo}, {hi}]")]
    Resolution { lo: f64, hi: f64 },

    #[error("realization failed after {attempts} attempts")]
    Realization {
        attempts: usize,
        last: Box<Option<ZeroReport>>,
    },

    #[error("integration failed: {reason}")]
    Integration {
        reason: String,
        trace: Vec<Crossing>,
    },

    #[error("singular linear system")]
    Singular,
}

pub type Result<T> = std::result::Result<T, Error>;
