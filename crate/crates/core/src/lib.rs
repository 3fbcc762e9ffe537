//! Contextualized physical-performance analytics for soccer tracking data.
//!
//! The pipeline turns 10 Hz tracking and event data into segmented player
//! runs, puts each run in tactical context (opponent lines and block,
//! possession phase, formation role), attributes possession value to
//! high-intensity efforts and aggregates everything into effective-time
//! normalized player and team profiles.

pub mod aggregation;
pub mod artifacts;
pub mod config;
pub mod formations;
pub mod io;
pub mod kinematics;
pub mod model;
pub mod pipeline;
pub mod possession;
pub mod tactical;
pub mod synth;
pub mod valuation;
