//! Multi-cell massive MIMO uplink under double-scattering channels.
//!
//! The crate covers the whole chain for one large-scale realization ("drop"):
//!
//! * [`geometry`] and [`channel`]: network layout, 3GPP pathloss with
//!   shadowing, local-scattering / exponential correlation matrices and
//!   double-scattering channel draws;
//! * [`pilot`] and [`estimation`]: pilot reuse and LMMSE estimation under
//!   pilot contamination;
//! * [`se`]: ergodic uplink spectral efficiency with MR combining, both in
//!   closed form and by Monte-Carlo estimation of the use-and-then-forget bound;
//! * [`power`]: total transmit power minimization under per-user SE targets by
//!   fixed-point iteration of a standard interference function, with two
//!   congestion policies for infeasible targets;
//! * [`harness`]: batch experiments over many drops with CSV/JSON outputs.
//!
//! [`scenario::Scenario`] wires the per-drop pieces together.

pub mod channel;
pub mod config;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod pilot;
pub mod power;
pub mod rng;
pub mod scenario;
pub mod se;

pub use config::NetworkConfig;
pub use error::{Error, Result};
pub use scenario::Scenario;
