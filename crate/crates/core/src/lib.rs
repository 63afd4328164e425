//! Meek and WIGM single transferable vote tabulation with graph-based
//! ballot-comparison risk-limiting audits.

pub mod asn;
pub mod audit;
pub mod ballots;
pub mod candidates;
pub mod error;
pub mod graph;
pub mod numeric;
pub mod state;
pub mod stats;
pub mod tabulation;

pub use ballots::{Candidate, Profile, Ranking};
pub use candidates::CandidateSet;
pub use error::{Error, ParseError, Result};
pub use state::ElectionState;
