//! Download-delay analysis for MDS-coded storage spread over mobile devices
//! in one cell, with device-to-device (D2D) delivery and base-station (BS)
//! fallback.
//!
//! * [`kernels`]: availability, per-slot departure and requester-survival
//!   probabilities of the node-churn process.
//! * [`delay_model`]: the attempt recursion, outcome probabilities and the
//!   average file download delay.
//! * [`event_sim`]: a discrete-event simulator of the same cell.
//! * [`oracles`]: independent reference computations used by the tests.
//! * [`harness`]: configuration, parameter sweeps, CSV and SVG output.

pub mod delay_model;
pub mod error;
pub mod event_sim;
pub mod harness;
pub mod kernels;
pub mod numerics;
pub mod oracles;
pub mod params;

pub use delay_model::{
    avg_download_delay, outcome_distribution, DelaySummary, GammaTable, ModelOptions,
    OutcomeDistribution, SurvivalAccounting,
};
pub use error::{ModelError, Result};
pub use params::{CodeParams, SystemParams};
