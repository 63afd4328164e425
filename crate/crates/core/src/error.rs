use thiserror::Error;

use crate::ballots::Candidate;

/// Errors raised while reading ballot files.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: malformed header: {reason}")]
    Header { line: usize, reason: String },
    #[error("line {line}: malformed ballot: {reason}")]
    Ballot { line: usize, reason: String },
    #[error("line {line}: candidate {candidate} out of range 1..={count}")]
    CandidateOutOfRange {
        line: usize,
        candidate: usize,
        count: usize,
    },
    #[error("line {line}: candidate {candidate} ranked twice")]
    DuplicateCandidate { line: usize, candidate: usize },
    #[error("line {line}: ballot is missing its terminating 0")]
    MissingTerminator { line: usize },
    #[error("line {line}: {reason}")]
    Trailer { line: usize, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("ballot {index} is empty; WIGM requires every ballot to rank a candidate")]
    EmptyBallot { index: usize },
    #[error("election states of degree {degree} are not supported (maximum is 2)")]
    UnsupportedDegree { degree: usize },
    #[error("prefix depth {depth} is not supported (maximum is 2)")]
    UnsupportedDepth { depth: usize },
    #[error("keep factors did not converge after {iterations} iterations (last max excess {excess:e})")]
    NonConvergence {
        iterations: usize,
        excess: f64,
        last_factors: Vec<(Candidate, f64)>,
    },
    #[error("election state is degenerate: {0}")]
    Degenerate(String),
    #[error("singular margin estimate: {0}")]
    Singular(String),
    #[error("audit graph exceeded the vertex cap of {cap} (frontier of {frontier} states at depth {depth})")]
    GraphTooLarge {
        cap: usize,
        depth: usize,
        frontier: usize,
    },
    #[error("audit graph is incoherent")]
    Incoherent,
    #[error("infeasible witness construction: {0}")]
    Infeasible(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
