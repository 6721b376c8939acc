//! Tunnelling time statistics for Gaussian wave packets on a rectangular
//! potential barrier.
//!
//! The packet is synthesized from exact stationary scattering states, the
//! probability flux at fixed positions is split into forward and backward
//! parts, and their time moments give mean durations and variances of
//! penetration, return, tunnelling, transmission and reflection processes.
//! Dwell and phase times are provided as reference quantities.
//!
//! ```
//! use tunneltime::{Scenario, quadrature::{DEFAULT_TOL, DEFAULT_MAX_LEVELS}};
//!
//! let scenario = Scenario::from_parameters(10.0, 5.0, 5.0, 0.02)?;
//! let base = scenario.base_resolution(5.0)?;
//! let (tun, refl, report) = scenario.tunnelling_refined(base, DEFAULT_TOL, DEFAULT_MAX_LEVELS)?;
//! assert!(report.converged);
//! assert!(tun.mean > 0.0 && refl.mean > tun.mean);
//! # Ok::<(), tunneltime::Error>(())
//! ```
//!
//! Units are eV, Å and s throughout.

pub mod chronostats;
mod error;
pub mod experiment;
pub mod packet;
pub mod quadrature;
pub mod scatter;

pub use error::{Error, Result};
pub use experiment::{DwellTimes, ProfilePoint, ProfileRun, Scenario, Simulation, SummaryRun};
pub use packet::{OverBarrierPolicy, PacketField, PacketSpec};
pub use scatter::{BarrierSpec, PhysicalConstants};

// The guide's code blocks run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scattering.md")]
    mod scattering {}
    #[doc = include_str!("../../../book/src/packets.md")]
    mod packets {}
    #[doc = include_str!("../../../book/src/durations.md")]
    mod durations {}
    #[doc = include_str!("../../../book/src/dwell-phase.md")]
    mod dwell_phase {}
    #[doc = include_str!("../../../book/src/refinement.md")]
    mod refinement {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
