//! Upper and lower bounds on the bottleneck rate of a primitive Gaussian
//! diamond channel: one source, two oblivious relays observing the source
//! through i.i.d. Rayleigh fading, and error-free relay-to-destination links
//! of capacity `C1` and `C2` bits per complex dimension.
//!
//! The crate provides
//!
//! - the informed-receiver upper bound with full relay cooperation
//!   ([`upper_bound`]),
//! - three achievable schemes: quantized channel inversion ([`qci`]),
//!   truncated channel inversion ([`tci`]) and MMSE estimation followed by
//!   Gaussian compression ([`mmse`]),
//! - the fixed-SNR max-min rate that the first two schemes reuse
//!   ([`fixed_rate`]),
//! - shared numerical kernels ([`numerics`]) and the channel model
//!   ([`channel`]),
//! - sweep and verification drivers that emit CSV ([`experiments`]).
//!
//! All rates are in bits per complex dimension.

#![forbid(unsafe_code)]

pub mod channel;
pub mod error;
pub mod experiments;
pub mod fixed_rate;
pub mod mmse;
pub mod numerics;
pub mod qci;
pub mod tci;
pub mod upper_bound;

pub use channel::{ChannelState, SnrPair, SystemConfig};
pub use error::{Error, Result};
pub use numerics::SolverSettings;
