//! Rank-minimizing assignment as a set-valued mechanism, and an exhaustive
//! auditor for obvious manipulations.
//!
//! The rank-minimizing mechanism returns every feasible allocation whose sum
//! of agents' ranks is minimal. [`audit`] checks, by sweeping every opponent
//! profile, whether any misreport improves an agent's worst case or best
//! case over truth-telling. Boston and deferred acceptance are provided as
//! controls.

pub mod assignment;
pub mod audit;
pub mod cli;
pub mod error;
pub mod format;
pub mod mechanisms;
pub mod model;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
pub use mechanisms::{Mechanism, PriorityProfile};
pub use model::{Allocation, Instance, Preference, Profile, RankTotal};
pub use solver::AllocationSet;
