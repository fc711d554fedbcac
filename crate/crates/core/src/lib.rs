//! Liability liquidity stress testing.
//!
//! The crate turns fund-flow records into redemption-rate samples, fits
//! frequency/severity models to them (zero-inflated, individual-based and
//! copula-correlated), and produces analytical and Monte Carlo stress
//! scenarios together with their return times.

pub mod error;
pub mod quad;
pub mod optim;
pub mod special;
pub mod severity;

pub use error::{Error, Result};
pub use severity::{beta_from_musigma, Moments, SeverityDist, SeverityFamily};
pub mod flowdata;
pub mod riskmeasures;
pub mod zeroinflated;
pub mod liability;
pub mod copula;
pub mod simulate;
pub mod factors;
