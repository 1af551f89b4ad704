//! Exhaustive factor-chain search engine for lower bounds on the number of
//! distinct prime factors of an odd perfect number.
//!
//! The tree search branches on prime components p^a, derives forced divisors
//! from σ(p^a), and closes every branch with a catalogued contradiction.
//! All bound logic runs on exact big-integer rationals; floating point is
//! never consulted when pruning a branch.

pub mod arith;
pub mod bounds;
pub mod chain;
pub mod config;
pub mod factordb;
pub mod fermat;
pub mod nonfermat;

pub use chain::{run, verify_log, Checkpoint, Contradiction, RunOutcome, SearchState};
pub use config::RunConfig;

pub use factordb::{EffortBudget, FactorDb, Factorization, Primality};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("arguments not coprime: gcd({0}, {1}) != 1")]
    NotCoprime(String, String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("table verification failed: {0}")]
    TableVerification(String),
    #[error("missing congruence certification for q={0} at threshold {1}")]
    MissingCertification(u64, String),
    #[error("log verification failed at line {line}: {reason}")]
    LogMismatch { line: usize, reason: String },
    #[error("checkpoint does not match configuration (digest {found} != {expected})")]
    CheckpointMismatch { found: String, expected: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
