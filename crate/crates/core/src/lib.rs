//! Detection, classification and scoring of learners' attempts at English
//! Grammar Profile (EGP) constructs.
//!
//! The crate is organised bottom-up:
//!
//! * [`corpus`] loads tagged sentence pairs, essays, annotations and the
//!   EGP catalog.
//! * [`ruleset`] is a token-pattern rule engine with the built-in construct
//!   detectors and broad pre-filters.
//! * [`llm_client`] builds the yes/no prompt and turns first-token log
//!   probabilities into a presence probability.
//! * [`attempts`] maps dual labels or dual probabilities onto the three
//!   attempt classes.
//! * [`metrics`] evaluates detection quality, including the dual-threshold
//!   maximum-precision envelope.
//! * [`scoring`] aggregates unique attempts into a CEFR-weighted essay score
//!   and tunes per-level thresholds.

pub mod attempts;
pub mod cefr;
pub mod corpus;
pub mod error;
pub mod llm_client;
pub mod metrics;
pub mod ruleset;
pub mod scoring;

pub use cefr::{Band, Level};
pub use error::{Error, Result};
