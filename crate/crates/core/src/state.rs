use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ballots::Candidate;
use crate::candidates::CandidateSet;

/// A pair of hopeful and elected candidate sets.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElectionState {
    pub hopefuls: CandidateSet,
    pub winners: CandidateSet,
}

impl ElectionState {
    pub fn new(hopefuls: CandidateSet, winners: CandidateSet) -> Self {
        assert!(
            hopefuls.intersection(winners).is_empty(),
            "hopeful and winner sets overlap"
        );
        ElectionState { hopefuls, winners }
    }

    /// The root state: every candidate hopeful, nobody elected.
    pub fn root(candidate_count: usize) -> Self {
        ElectionState::new(CandidateSet::all(candidate_count), CandidateSet::empty())
    }

    /// Candidates still in the count.
    pub fn continuing(&self) -> CandidateSet {
        self.hopefuls.union(self.winners)
    }

    /// Number of candidates that are no longer hopeful.
    pub fn depth(&self, candidate_count: usize) -> usize {
        candidate_count - self.hopefuls.len()
    }

    pub fn degree(&self) -> usize {
        self.winners.len()
    }

    /// No further elections or eliminations can change the outcome.
    pub fn is_terminal(&self, seats: usize) -> bool {
        self.winners.len() >= seats || self.continuing().len() <= seats
    }

    /// The winner set a terminal state settles on.
    pub fn outcome(&self, seats: usize) -> Option<CandidateSet> {
        if self.winners.len() >= seats {
            Some(self.winners)
        } else if self.continuing().len() <= seats {
            Some(self.continuing())
        } else {
            None
        }
    }

    pub fn elect(&self, c: Candidate) -> Self {
        debug_assert!(self.hopefuls.contains(c));
        ElectionState::new(self.hopefuls.without(c), self.winners.with(c))
    }

    pub fn eliminate(&self, c: Candidate) -> Self {
        debug_assert!(self.hopefuls.contains(c));
        ElectionState::new(self.hopefuls.without(c), self.winners)
    }

    /// Winners in increasing index order.
    pub fn winner_list(&self) -> Vec<Candidate> {
        self.winners.iter().collect()
    }
}

impl fmt::Debug for ElectionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(H={:?}, W={:?})", self.hopefuls, self.winners)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminal_states() {
        let s = ElectionState::root(6);
        assert_eq!(s.depth(6), 0);
        assert!(!s.is_terminal(3));
        let s = s.elect(0).elect(1).elect(3);
        assert!(s.is_terminal(3));
        assert_eq!(s.outcome(3), Some([0, 1, 3].into_iter().collect()));
        let t = ElectionState::root(4).eliminate(0);
        assert_eq!(t.outcome(3), Some([1, 2, 3].into_iter().collect()));
        assert_eq!(t.depth(4), 1);
    }
}
