//! Rankings, profiles and ballot-file ingestion.

mod blt;
mod csv;
mod tally;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::candidates::{CandidateSet, MAX_CANDIDATES};
use crate::error::{Error, Result};

pub use blt::{parse_blt, write_blt, BltFile};
pub use csv::parse_csv;
pub use tally::{tally_profile, Signature, SignatureCounts, TallyTable, MAX_PREFIX_DEPTH};

/// Dense candidate index in `0..M`.
pub type Candidate = usize;

/// An ordered list of distinct candidates, most preferred first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ranking(Vec<Candidate>);

impl Ranking {
    /// Builds a ranking, rejecting repeated candidates.
    pub fn new(entries: Vec<Candidate>) -> Result<Self> {
        let mut seen = CandidateSet::empty();
        for &c in &entries {
            if c >= MAX_CANDIDATES {
                return Err(Error::Config(format!("candidate index {c} exceeds {MAX_CANDIDATES}")));
            }
            if seen.contains(c) {
                return Err(Error::Config(format!("candidate {c} ranked twice")));
            }
            seen.insert(c);
        }
        Ok(Ranking(entries))
    }

    pub fn empty() -> Self {
        Ranking(Vec::new())
    }

    pub fn as_slice(&self) -> &[Candidate] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<Candidate> {
        self.0
    }

    /// Candidates appearing in the ranking.
    pub fn candidates(&self) -> CandidateSet {
        self.0.iter().copied().collect()
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<Candidate>) -> Self {
        debug_assert!(Ranking::new(entries.clone()).is_ok());
        Ranking(entries)
    }
}

/// Subsequence of `r` restricted to `keep`, order preserved.
pub fn project_ranking(r: &Ranking, keep: CandidateSet) -> Ranking {
    Ranking(r.0.iter().copied().filter(|&c| keep.contains(c)).collect())
}

/// First candidate of `r` that lies in `hopefuls`.
pub fn fpv(r: &Ranking, hopefuls: CandidateSet) -> Option<Candidate> {
    r.0.iter().copied().find(|&c| hopefuls.contains(c))
}

/// The first `len` entries of `r`.
pub fn first_restrict(r: &Ranking, len: usize) -> Ranking {
    Ranking(r.0[..len.min(r.0.len())].to_vec())
}

/// An ordered collection of ballots over `candidate_count` candidates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub voters: Vec<Ranking>,
    pub candidate_count: usize,
    pub names: Vec<String>,
    pub label: String,
}

impl Profile {
    /// Builds a profile with default candidate names, checking every ranking.
    pub fn new(voters: Vec<Ranking>, candidate_count: usize) -> Result<Self> {
        let names = (0..candidate_count).map(|c| format!("Candidate {}", c + 1)).collect();
        Profile::with_names(voters, names, String::new())
    }

    pub fn with_names(voters: Vec<Ranking>, names: Vec<String>, label: String) -> Result<Self> {
        let candidate_count = names.len();
        if candidate_count > MAX_CANDIDATES {
            return Err(Error::Config(format!(
                "{candidate_count} candidates exceeds the supported maximum of {MAX_CANDIDATES}"
            )));
        }
        for (i, r) in voters.iter().enumerate() {
            if let Some(&c) = r.0.iter().find(|&&c| c >= candidate_count) {
                return Err(Error::Config(format!(
                    "ballot {i} ranks candidate index {c} but only {candidate_count} candidates exist"
                )));
            }
        }
        Ok(Profile {
            voters,
            candidate_count,
            names,
            label,
        })
    }

    pub fn len(&self) -> usize {
        self.voters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voters.is_empty()
    }

    pub fn all_candidates(&self) -> CandidateSet {
        CandidateSet::all(self.candidate_count)
    }

    pub fn name(&self, c: Candidate) -> &str {
        self.names.get(c).map(String::as_str).unwrap_or("?")
    }

    /// Distinct rankings with their multiplicities, in ranking order.
    pub fn compress(&self) -> Vec<(Ranking, u64)> {
        let mut counts: BTreeMap<&Ranking, u64> = BTreeMap::new();
        for r in &self.voters {
            *counts.entry(r).or_default() += 1;
        }
        counts.into_iter().map(|(r, n)| (r.clone(), n)).collect()
    }

    /// Count of ballots listing `c` first.
    pub fn first_preferences(&self) -> Vec<u64> {
        let mut out = vec![0; self.candidate_count];
        for r in &self.voters {
            if let Some(&c) = r.0.first() {
                out[c] += 1;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[Candidate]) -> Ranking {
        Ranking::new(v.to_vec()).unwrap()
    }

    #[test]
    fn projection_examples() {
        let keep: CandidateSet = [5, 12, 7].into_iter().collect();
        assert_eq!(project_ranking(&r(&[5, 3, 12]), keep), r(&[5, 12]));
        assert_eq!(project_ranking(&Ranking::empty(), keep), Ranking::empty());
        assert_eq!(project_ranking(&r(&[0, 1, 2]), CandidateSet::all(3)), r(&[0, 1, 2]));
    }

    #[test]
    fn fpv_examples() {
        let h: CandidateSet = [1, 4].into_iter().collect();
        assert_eq!(fpv(&r(&[3, 1, 4]), h), Some(1));
        assert_eq!(fpv(&r(&[3, 1, 4]), CandidateSet::from(vec![9])), None);
        assert_eq!(fpv(&Ranking::empty(), CandidateSet::all(5)), None);
    }

    #[test]
    fn first_restrict_examples() {
        assert_eq!(first_restrict(&r(&[2, 7, 1]), 2), r(&[2, 7]));
        assert_eq!(first_restrict(&r(&[2, 7, 1]), 5), r(&[2, 7, 1]));
        assert_eq!(first_restrict(&Ranking::empty(), 3), Ranking::empty());
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(Ranking::new(vec![1, 2, 1]).is_err());
        assert!(Profile::new(vec![r(&[0, 3])], 3).is_err());
    }

    #[test]
    fn compress_counts_duplicates() {
        let p = Profile::new(vec![r(&[0, 1]), r(&[1]), r(&[0, 1])], 2).unwrap();
        assert_eq!(p.compress(), vec![(r(&[0, 1]), 2), (r(&[1]), 1)]);
        assert_eq!(p.first_preferences(), vec![2, 1]);
    }
}
