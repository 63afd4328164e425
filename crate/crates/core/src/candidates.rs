use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ballots::Candidate;

/// Maximum number of candidates a [`CandidateSet`] can hold.
pub const MAX_CANDIDATES: usize = 64;

/// A set of candidate indices stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "Vec<Candidate>", from = "Vec<Candidate>")]
pub struct CandidateSet(u64);

impl CandidateSet {
    pub const fn empty() -> Self {
        CandidateSet(0)
    }

    /// The set `{0, 1, ..., count - 1}`.
    pub fn all(count: usize) -> Self {
        assert!(count <= MAX_CANDIDATES, "at most {MAX_CANDIDATES} candidates");
        if count == MAX_CANDIDATES {
            CandidateSet(u64::MAX)
        } else {
            CandidateSet((1u64 << count) - 1)
        }
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, c: Candidate) -> bool {
        c < MAX_CANDIDATES && self.0 & (1 << c) != 0
    }

    pub fn insert(&mut self, c: Candidate) {
        assert!(c < MAX_CANDIDATES);
        self.0 |= 1 << c;
    }

    pub fn remove(&mut self, c: Candidate) {
        if c < MAX_CANDIDATES {
            self.0 &= !(1 << c);
        }
    }

    pub fn with(mut self, c: Candidate) -> Self {
        self.insert(c);
        self
    }

    pub fn without(mut self, c: Candidate) -> Self {
        self.remove(c);
        self
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        CandidateSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        CandidateSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        CandidateSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Candidates in increasing index order.
    pub fn iter(self) -> impl Iterator<Item = Candidate> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let c = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(c)
            }
        })
    }
}

impl FromIterator<Candidate> for CandidateSet {
    fn from_iter<I: IntoIterator<Item = Candidate>>(iter: I) -> Self {
        let mut set = CandidateSet::empty();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

impl From<Vec<Candidate>> for CandidateSet {
    fn from(v: Vec<Candidate>) -> Self {
        v.into_iter().collect()
    }
}

impl From<CandidateSet> for Vec<Candidate> {
    fn from(s: CandidateSet) -> Self {
        s.iter().collect()
    }
}

impl fmt::Debug for CandidateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
