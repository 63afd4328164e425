use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Candidate, Profile, Ranking};
use crate::error::{Error, Result};
use crate::state::ElectionState;

/// Deepest winner prefix the tally tables support.
pub const MAX_PREFIX_DEPTH: usize = 2;

/// Where a ballot sits in an election state: the winners it passes through
/// (in ballot order) before reaching its first hopeful, if any.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    pub lead: Vec<Candidate>,
    pub next: Option<Candidate>,
}

impl Signature {
    pub fn of(r: &Ranking, state: &ElectionState) -> Self {
        let mut lead = Vec::new();
        for &c in r.as_slice() {
            if state.hopefuls.contains(c) {
                return Signature {
                    lead,
                    next: Some(c),
                };
            }
            if state.winners.contains(c) {
                lead.push(c);
            }
        }
        Signature { lead, next: None }
    }

    /// The projected ranking truncated just after the first hopeful.
    pub fn prefix(&self) -> Vec<Candidate> {
        let mut p = self.lead.clone();
        p.extend(self.next);
        p
    }
}

/// Ballot counts per [`Signature`] for one election state.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureCounts {
    pub state: ElectionState,
    pub counts: BTreeMap<Signature, u64>,
    pub total: u64,
}

impl SignatureCounts {
    pub fn from_profile(profile: &Profile, state: &ElectionState) -> Self {
        let mut counts = BTreeMap::new();
        for r in &profile.voters {
            *counts.entry(Signature::of(r, state)).or_insert(0) += 1;
        }
        SignatureCounts {
            state: *state,
            counts,
            total: profile.len() as u64,
        }
    }

    pub fn from_compressed(ballots: &[(Ranking, u64)], state: &ElectionState) -> Self {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for (r, n) in ballots {
            *counts.entry(Signature::of(r, state)).or_insert(0) += n;
            total += n;
        }
        SignatureCounts {
            state: *state,
            counts,
            total,
        }
    }

    pub fn max_lead(&self) -> usize {
        self.counts.keys().map(|s| s.lead.len()).max().unwrap_or(0)
    }
}

/// Initially-like and exactly-like counts for one election state.
///
/// `initially_like[s]` counts ballots whose projection onto the continuing
/// candidates starts with `s`, for `s` a winner prefix (possibly followed by
/// one hopeful). `exactly_like[s]` counts ballots whose projection is exactly
/// the winner sequence `s`; the empty sequence gives the ghost number.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyTable {
    pub initially_like: BTreeMap<Vec<Candidate>, u64>,
    pub exactly_like: BTreeMap<Vec<Candidate>, u64>,
    pub ghost: u64,
    pub total: u64,
}

impl TallyTable {
    pub fn from_signatures(sig: &SignatureCounts) -> Self {
        let mut table = TallyTable {
            total: sig.total,
            ..TallyTable::default()
        };
        for (s, &n) in &sig.counts {
            for len in 1..=s.lead.len() {
                *table.initially_like.entry(s.lead[..len].to_vec()).or_insert(0) += n;
            }
            match s.next {
                Some(_) => *table.initially_like.entry(s.prefix()).or_insert(0) += n,
                None => *table.exactly_like.entry(s.lead.clone()).or_insert(0) += n,
            }
        }
        table.ghost = table.exactly(&[]);
        table
    }

    /// `T_s`, zero when absent.
    pub fn initially(&self, s: &[Candidate]) -> u64 {
        self.initially_like.get(s).copied().unwrap_or(0)
    }

    /// `t_s`, zero when absent.
    pub fn exactly(&self, s: &[Candidate]) -> u64 {
        self.exactly_like.get(s).copied().unwrap_or(0)
    }
}

/// Tallies `profile` in `state`, tracking winner prefixes up to `max_prefix_depth`.
pub fn tally_profile(
    profile: &Profile,
    state: &ElectionState,
    max_prefix_depth: usize,
) -> Result<TallyTable> {
    if max_prefix_depth > MAX_PREFIX_DEPTH {
        return Err(Error::UnsupportedDepth {
            depth: max_prefix_depth,
        });
    }
    if state.degree() > max_prefix_depth {
        return Err(Error::UnsupportedDegree {
            degree: state.degree(),
        });
    }
    let sig = SignatureCounts::from_profile(profile, state);
    Ok(TallyTable::from_signatures(&sig))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ballots::{first_restrict, project_ranking};
    use crate::candidates::CandidateSet;
    use proptest::prelude::*;

    fn state(h: &[usize], w: &[usize]) -> ElectionState {
        ElectionState::new(h.iter().copied().collect(), w.iter().copied().collect())
    }

    #[test]
    fn single_ballot() {
        let p = Profile::new(vec![Ranking::new(vec![0, 1]).unwrap()], 3).unwrap();
        let t = tally_profile(&p, &state(&[1, 2], &[0]), 1).unwrap();
        assert_eq!(t.initially(&[0]), 1);
        assert_eq!(t.initially(&[0, 1]), 1);
        assert_eq!(t.exactly(&[0]), 0);
        assert_eq!(t.ghost, 0);
    }

    #[test]
    fn rejects_deep_prefixes() {
        let p = Profile::new(vec![], 4).unwrap();
        assert!(tally_profile(&p, &state(&[3], &[0]), 3).is_err());
        assert!(tally_profile(&p, &state(&[3], &[0, 1, 2]), 2).is_err());
    }

    fn arb_profile(m: usize, max_n: usize) -> impl Strategy<Value = Profile> {
        let ranking = Just((0..m).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_flat_map(move |perm| (Just(perm), 0..=m))
            .prop_map(|(perm, len)| Ranking::new(perm[..len].to_vec()).unwrap());
        prop::collection::vec(ranking, 1..max_n).prop_map(move |v| Profile::new(v, m).unwrap())
    }

    fn arb_state(m: usize) -> impl Strategy<Value = ElectionState> {
        prop::collection::vec(0u8..3, m).prop_map(|roles| {
            let h = roles.iter().enumerate().filter(|(_, &r)| r == 0).map(|(c, _)| c).collect();
            let mut w: CandidateSet = roles.iter().enumerate().filter(|(_, &r)| r == 1).map(|(c, _)| c).collect();
            while w.len() > 2 {
                let top = w.iter().last().unwrap();
                w.remove(top);
            }
            ElectionState::new(h, w)
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(p in arb_profile(5, 200), s in arb_state(5)) {
            let table = tally_profile(&p, &s, 2).unwrap();
            let keep = s.continuing();
            let mut winner_seqs: Vec<Vec<usize>> = vec![vec![]];
            for a in s.winners.iter() {
                winner_seqs.push(vec![a]);
                for b in s.winners.iter().filter(|&b| b != a) {
                    winner_seqs.push(vec![a, b]);
                }
            }
            for seq in &winner_seqs {
                let count_exact = p.voters.iter()
                    .filter(|r| project_ranking(r, keep).as_slice() == seq.as_slice())
                    .count() as u64;
                prop_assert_eq!(table.exactly(seq), count_exact);
                let starts = |pre: &[usize]| p.voters.iter()
                    .filter(|r| first_restrict(&project_ranking(r, keep), pre.len()).as_slice() == pre)
                    .count() as u64;
                if !seq.is_empty() {
                    prop_assert_eq!(table.initially(seq), starts(seq));
                }
                for c in s.hopefuls.iter() {
                    let mut pre = seq.clone();
                    pre.push(c);
                    prop_assert_eq!(table.initially(&pre), starts(&pre));
                }
            }
            let first_sum: u64 = s.continuing().iter().map(|c| table.initially(&[c])).sum();
            prop_assert_eq!(first_sum + table.ghost, p.len() as u64);
        }

        #[test]
        fn projection_is_functorial(p in arb_profile(6, 20), a in arb_state(6), b in arb_state(6)) {
            let outer = a.continuing();
            let inner = outer.intersection(b.continuing());
            for r in &p.voters {
                let once = project_ranking(r, inner);
                prop_assert_eq!(project_ranking(&project_ranking(r, outer), inner), once.clone());
                prop_assert_eq!(project_ranking(&once, inner), once);
            }
        }
    }
}
