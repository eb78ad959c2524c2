//! Bidirectional MMSE adaptive interference suppression for fast-fading
//! multiuser channels.
//!
//! The crate is organised bottom-up:
//!
//! * [`fading`] – Clarke sum-of-sinusoids Rayleigh fading and lag-correlation estimates.
//! * [`signal`] – DBPSK streams, spreading codes, multipath and AF relay received vectors.
//! * [`receivers`] – receive filters, differential detection, the known-channel MMSE
//!   bound and the conventional / two-instant differential adaptive baselines.
//! * [`bidirectional`] – three-instant error terms, bidirectional NLMS, the LS
//!   correlation structures, conjugate gradient, switching / mixing weights and the
//!   output power constraint.
//! * [`analysis`] – ensemble correlation matrices and the weight-error recursions
//!   behind the analytical SINR curve.
//! * [`metrics`] – instantaneous SINR, SINR normalised by the instantaneous SNR, BER.
//! * [`harness`] – experiment configuration, the paired Monte-Carlo packet loop and
//!   the validation suite driven by the `bimmse` CLI.

// NaN-rejecting checks are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bidirectional;
mod error;
pub mod fading;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod receivers;
pub mod signal;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
pub use num_complex::Complex64;
