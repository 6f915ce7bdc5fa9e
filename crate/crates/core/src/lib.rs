//! Thresholding bandits with dueling choices.
//!
//! A learner faces `K` arms with unknown means and a known threshold `tau`.
//! It may either *pull* an arm (a noisy reward sample) or *duel* two arms
//! (a Bernoulli outcome saying which one looks better). The goal is to
//! recover the set of arms with mean above `tau` with probability at least
//! `1 - delta`, spending as few pulls as possible without exploding the
//! number of duels.
//!
//! The crate is organised around the query oracle in [`environment`]:
//! every algorithm ([`rank_search`], [`baselines`]) sees an instance only
//! through [`environment::Oracle`], which also keeps exact query counts.
//! Ground-truth diagnostics live in [`complexity`], instance generators and
//! link fitting in [`instances`], and the seeded Monte-Carlo runner in
//! [`harness`].

pub mod baselines;
pub mod complexity;
pub mod environment;
pub mod error;
pub mod harness;
pub mod instances;
pub mod rank_search;
pub mod seeding;

mod outcome;

pub use error::{Error, Result};
pub use outcome::{AlgorithmOutcome, BinarySearchTrace, CapFlag, RoundTrace};
