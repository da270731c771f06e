//! Two-party quantum protocol laboratory.
//!
//! Simulates s-round protocols between a server (party A) and a client
//! (party B), measures correctness and privacy of private information
//! retrieval protocols, and turns any such protocol into a random access
//! encoding whose size is checked against the Nayak bound.

pub mod config;
pub mod error;
pub mod linalg;
mod par;

pub use config::{Exec, LabConfig};
pub use error::{Error, Result};
pub mod protocol;
pub mod adversary;
pub mod qpir;
pub mod reduction;
pub mod source;
pub mod fuzz;
