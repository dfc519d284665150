//! Link-level toolkit for the 5G-Advanced time-domain channel property (TDCP)
//! feedback: time-varying channel generators, TRS-based measurement, the
//! normalized channel-correlation metric, report encoding rules, and
//! threshold-switching evaluation.
//!
//! The crate is `no_std` (with `alloc`); all I/O, configuration files and the
//! command line live in the companion `tdcp-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod channel;
pub mod linkeval;
pub mod math;
pub mod metric;
pub mod policy;
pub mod report;
pub mod rng;
pub mod trs;
