use thiserror::Error;

/// Errors raised by model construction, solvers and audits.
///
/// Object and agent numbers carried by variants are 1-based, matching every
/// external format.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("instance needs at least one agent and one object")]
    EmptyInstance,
    #[error("object {object} has zero capacity")]
    ZeroCapacity { object: usize },
    #[error("total capacity {total} is less than the number of agents {agents}")]
    InsufficientCapacity { total: usize, agents: usize },
    #[error("object {object} is out of range 1..={objects}")]
    ObjectOutOfRange { object: usize, objects: usize },
    #[error("agent {agent} is out of range 1..={agents}")]
    AgentOutOfRange { agent: usize, agents: usize },
    #[error("ranking is not a permutation of 1..={objects}: {reason}")]
    NotAPermutation { objects: usize, reason: String },
    #[error("expected {expected} entries, found {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("object {object} assigned to {assigned} agents but capacity is {capacity}")]
    OverCapacity {
        object: usize,
        assigned: usize,
        capacity: usize,
    },
    #[error("{agents} agents exceeds the exhaustive enumeration limit of {limit}")]
    ExhaustiveLimit { agents: usize, limit: usize },
    #[error("sweep requires {required} mechanism evaluations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("mechanism {mechanism} requires a priority profile")]
    MissingPriorities { mechanism: &'static str },
    #[error("misreport must differ from the true preference")]
    MisreportEqualsTruth,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
