//! Coded compressed sensing for unsourced random access over a massive-MIMO
//! uplink.
//!
//! The receiver is a concatenation of two decoders:
//!
//! * an inner covariance-matching activity detector ([`activity`]) that
//!   recovers, slot by slot, which codebook columns were transmitted, and
//! * an outer tree code ([`tree_code`]) that stitches the recovered sub-blocks
//!   back into payloads using GF(2) parity checks.
//!
//! [`pipeline`] runs them either in isolation (the baseline receiver) or in
//! tandem, where the tree decoder's surviving paths prune the detector's
//! codebook before every slot (successive cancellation list decoding).
//! [`experiment`] wraps everything into a seeded Monte Carlo harness that
//! reports per-user probability of error and decoder run time.

pub mod activity;
pub mod channel;
pub mod codebook;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod linalg;
pub mod pipeline;
pub mod rng;
pub mod tree_code;

pub use error::{Error, Result};
pub use num_complex::Complex64;
