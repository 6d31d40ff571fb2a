//! Deterministic simulator and sizing toolkit for fuel-cell/battery hybrid
//! power supplies on mobile robots.
//!
//! The crate is organised bottom-up:
//!
//! * [`profile`]: mission power-demand profiles (CSV I/O, gait synthesis, stats, resampling)
//! * [`powertrain`]: behavioral models of the stack, battery, fuel tank and electronics
//! * [`controller`]: the constant-output dispatch policy and oscillation-suppression filter
//! * [`simulator`]: the time-stepping engine plus the analytic constant-load oracle
//! * [`sizing`]: mass-budget sizing, system life and the fuel-cell setpoint optimizer
//! * [`report`]: comparison tables, configuration files and JSON/CSV emission
//!
//! Every operation is a pure function of its inputs. Nothing reads the clock,
//! the environment or a random source, so identical inputs always produce
//! bit-identical results.

pub mod controller;
pub mod error;
pub mod powertrain;
pub mod presets;
pub mod profile;
pub mod report;
pub mod sigfig;
pub mod simulator;
pub mod sizing;

pub use error::{Error, Result};
