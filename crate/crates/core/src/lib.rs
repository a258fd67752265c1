//! Simulation and analysis toolkit for a fiber-based Sagnac source of
//! polarization- and energy-time-entangled photon pairs distributed over a
//! DWDM network.
//!
//! * [`spectral`]: ITU grid, channel-pair planning, emission spectrum and rates
//! * [`state`]: two-qubit polarization algebra and waveplates
//! * [`detection`]: Monte-Carlo time tags and coincidence counting
//! * [`tomography`]: 16-setting tomography, linear inversion and MLE
//! * [`franson`]: energy-time interferometer admissibility and visibility fits
//! * [`qkd`]: link budget, sifting and secret-key-rate sessions
//! * [`scenario`]: configuration and report generation behind the `sagnac` CLI

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod error;
pub mod franson;
pub mod qkd;
mod sampling;
pub mod scenario;
pub mod spectral;
pub mod state;
pub mod tomography;

mod optimize;

pub use error::{Error, Result};
