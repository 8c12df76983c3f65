//! Simulator for visible-light links between ceiling attocells and a VR
//! headset covered with photodetectors.
//!
//! The crate is layered bottom-up: [`geometry`] places detectors on the
//! headset hemisphere and poses them, [`channel`] computes LOS power and
//! receiver noise per transmitter-detector pair, [`combining`] turns
//! per-detector observations into a receiver SINR, [`arena`] holds the room
//! and its users, and [`sweep`] runs the connectivity and SINR studies.
//! [`config`] and [`cli`] back the `vlcvr` command-line tool.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arena;
pub mod channel;
#[cfg(feature = "cli")]
pub mod cli;
pub mod combining;
pub mod config;
pub mod error;
pub mod geometry;
pub mod report;
pub mod sweep;

pub use error::{Error, Result};
