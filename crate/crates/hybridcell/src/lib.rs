//! Dual-engine evaluator for SINR and rate coverage in multi-tier hybrid
//! sub-6 GHz / mmWave / THz cellular networks under a decoupled downlink/uplink
//! cell-association strategy.
//!
//! Two independent engines answer the same questions and cross-validate each
//! other:
//!
//! * [`association`] and [`coverage`] evaluate the closed-form expressions
//!   (per-tier association probabilities, serving-distance densities, and
//!   conditional/total SINR and rate coverage) by numerical quadrature.
//! * [`montecarlo`] samples Poisson network realizations, performs the biased
//!   strongest-average-received-power association per direction, and measures
//!   the same metrics empirically.
//!
//! [`network`] holds the scenario schema shared by both, [`antenna`] the
//! beamforming patterns, per-band propagation losses, fading samplers and
//! noise models, and [`numerics`] the quadrature / Lambert-W kernels the
//! analytical engine is built on.

pub mod antenna;
pub mod association;
pub mod coverage;
pub mod error;
pub mod montecarlo;
pub mod network;
pub mod numerics;

pub use error::{Error, Result};
pub use network::{
    BandKind, BlockageConfig, BlockageDerived, Direction, MmwaveNlos, NetworkConfig, TierConfig,
    Violation,
};
