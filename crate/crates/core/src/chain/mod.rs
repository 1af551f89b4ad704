//! The factor-chain tree search: state bookkeeping, branching, contradiction
//! detection, interval stepping, logging, checkpoint/resume, and log audit.

pub mod analysis;
pub mod checkpoint;
pub mod logfmt;
pub mod search;
pub mod state;
pub mod verify;

pub use analysis::{analyze, perfect_check, Analysis, Contradiction};
pub use checkpoint::Checkpoint;
pub use search::{apply_move, children, run, Move, RunOutcome, Session, StuckReason};
pub use state::{Component, ComponentStatus, SearchState};
pub use verify::verify_log;
