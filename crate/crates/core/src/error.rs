use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A spectral component sits at or above the barrier top.
    #[error("component k = {k} Å⁻¹ has E = {energy} eV, not below V₀ = {v0} eV")]
    OverBarrierComponent { k: f64, energy: f64, v0: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    /// The flux at either end of the time window is not negligible.
    #[error("time window too narrow at x = {x} Å: endpoint |J| is {ratio:.3e} of peak")]
    WindowTooNarrow { x: f64, ratio: f64 },

    #[error("unreliable statistic ({what}): normalisation {norm:.3e} below floor")]
    UnreliableStatistic { what: &'static str, norm: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Errors a finer grid may cure.
    pub fn is_resolution_limited(&self) -> bool {
        matches!(self, Error::WindowTooNarrow { .. })
    }
}
