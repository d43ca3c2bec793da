//! Character-level adversarial attacks on text classifiers.
//!
//! The crate is organised around the sentence algebra in [`sentence`]
//! (Levenshtein distance, expansion/contraction, single edits, edit balls),
//! the classifier contract in [`oracle`], the greedy attack in [`attack`], the
//! projected-gradient relaxation in [`pga`] and the batch evaluation harness
//! in [`harness`].

pub mod attack;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod pga;
pub mod sentence;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
