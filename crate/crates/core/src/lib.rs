//! Opportunistic spectrum access in overlaid Poisson networks.
//!
//! A primary ad hoc network (Aloha access) shares spectrum with a secondary
//! network whose transmitters only activate when they sense a spatial
//! spectrum hole. Four access rules are modelled:
//!
//! * **PRA** – the strongest beacon received from active primary receivers
//!   must not exceed a threshold `N_ra`;
//! * **PTA** – the strongest pilot received from active primary transmitters
//!   must not exceed `N_ta`;
//! * **ERR / ERT** – the transmitter must lie outside every disc of radius
//!   `D` around active primary receivers / transmitters.
//!
//! [`analytic`] evaluates the closed-form spatial opportunity, conditional
//! densities, coverage probabilities (exact, approximate or bounds) and
//! spatial throughput. [`montecarlo`] estimates the same quantities from
//! Palm-conditioned simulation built on [`geometry`], [`channel`] and
//! [`protocols`].

pub mod analytic;
pub mod channel;
mod error;
pub mod geometry;
pub mod montecarlo;
pub mod params;
pub mod protocols;
pub mod rng;

pub use error::{Error, Result};
pub use params::SystemParams;
pub use protocols::ProtocolKind;
