//! Control-barrier-function controllers for sequences of reachability tasks,
//! with smooth time-varying transitions between consecutive targets.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`] barrier functions and the log-sum-exp soft minimum
//! * [`dynamics`] single-integrator and unicycle models, RK4, the NID map
//! * [`qp`] the exact minimum-norm QP solver and its grid oracle
//! * [`constraints`] FCBF, ZCBF and composite rows
//! * [`scheduler`] task bookkeeping and the transition-weight phase machine
//! * [`harness`] scenarios, the closed-loop simulator and its outputs

pub mod constraints;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod qp;
pub mod scheduler;

pub use error::{Error, Result};
