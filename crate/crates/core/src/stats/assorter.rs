use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ballots::{project_ranking, Candidate, Ranking, TallyTable};
use crate::state::ElectionState;

/// A profile projection whose population correction is estimated from the sample.
///
/// `Initially` sums the counts of ballots whose projection starts with any
/// of the listed prefixes (its assorter is the sum of the per-prefix `delta`
/// assorters); `Exactly` counts ballots whose projection equals the prefix
/// (its assorter is `lambda`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParamKey {
    Initially(Vec<Vec<Candidate>>),
    Exactly(Vec<Candidate>),
}

impl ParamKey {
    pub fn initially(prefix: &[Candidate]) -> Self {
        ParamKey::Initially(vec![prefix.to_vec()])
    }

    pub fn exactly(prefix: &[Candidate]) -> Self {
        ParamKey::Exactly(prefix.to_vec())
    }

    /// The projection's value on a tally table.
    pub fn count(&self, table: &TallyTable) -> f64 {
        match self {
            ParamKey::Initially(ps) => ps.iter().map(|p| table.initially(p) as f64).sum(),
            ParamKey::Exactly(p) => table.exactly(p) as f64,
        }
    }

    /// Assorter value of one ballot/CVR pair, both already projected.
    pub fn assort(&self, bal: &[Candidate], cvr: &[Candidate]) -> i8 {
        match self {
            ParamKey::Initially(ps) => ps.iter().map(|p| flip(bal.starts_with(p), cvr.starts_with(p))).sum(),
            ParamKey::Exactly(p) => flip(bal == p.as_slice(), cvr == p.as_slice()),
        }
    }

    /// Human-readable name using `names`.
    pub fn label(&self, names: &[String]) -> String {
        let seq = |p: &[Candidate]| {
            p.iter()
                .map(|&c| names.get(c).cloned().unwrap_or_else(|| (c + 1).to_string()))
                .collect::<Vec<_>>()
                .join(">")
        };
        match self {
            ParamKey::Initially(ps) => ps.iter().map(|p| format!("mu[{}]", seq(p))).collect::<Vec<_>>().join("+"),
            ParamKey::Exactly(p) => format!("nu[{}]", seq(p)),
        }
    }
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let seq = |p: &[Candidate]| p.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>().join(",");
        match self {
            ParamKey::Initially(ps) => {
                let parts: Vec<_> = ps.iter().map(|p| format!("mu({})", seq(p))).collect();
                write!(f, "{}", parts.join("+"))
            }
            ParamKey::Exactly(p) => write!(f, "nu({})", seq(p)),
        }
    }
}

fn flip(bal: bool, cvr: bool) -> i8 {
    match (cvr, bal) {
        (true, false) => -1,
        (false, true) => 1,
        _ => 0,
    }
}

/// Assorter values of a sample of ballot/CVR pairs, one column per parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssorterSample {
    pub keys: Vec<ParamKey>,
    /// `columns[j][i]` is parameter `j`'s assorter on sampled pair `i`.
    pub columns: Vec<Vec<i8>>,
    /// Sampled pairs whose ballot and CVR rankings differ at all.
    pub discrepant: usize,
}

impl AssorterSample {
    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn means(&self) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        self.columns.iter().map(|c| c.iter().map(|&v| v as f64).sum::<f64>() / n).collect()
    }

    pub fn nonzero(&self) -> Vec<usize> {
        self.columns.iter().map(|c| c.iter().filter(|&&v| v != 0).count()).collect()
    }
}

/// Evaluates the assorters of `keys` on sampled `(ballot, cvr)` pairs in `state`.
pub fn assort(pairs: &[(&Ranking, &Ranking)], state: &ElectionState, keys: &[ParamKey]) -> AssorterSample {
    let keep = state.continuing();
    let mut columns = vec![Vec::with_capacity(pairs.len()); keys.len()];
    let mut discrepant = 0;
    for (bal, cvr) in pairs {
        if bal != cvr {
            discrepant += 1;
        }
        let (b, c) = (project_ranking(bal, keep), project_ranking(cvr, keep));
        for (col, key) in columns.iter_mut().zip(keys) {
            col.push(key.assort(b.as_slice(), c.as_slice()));
        }
    }
    AssorterSample {
        keys: keys.to_vec(),
        columns,
        discrepant,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ballots::{tally_profile, Profile};
    use proptest::prelude::*;

    fn r(v: &[usize]) -> Ranking {
        Ranking::new(v.to_vec()).unwrap()
    }

    #[test]
    fn definition_cases() {
        let s = ElectionState::root(3);
        let (a, b) = (r(&[0, 1]), r(&[0, 1]));
        let keys = [ParamKey::initially(&[0]), ParamKey::exactly(&[])];
        let x = assort(&[(&a, &b)], &s, &keys);
        assert_eq!(x.columns, vec![vec![0], vec![0]]);
        assert_eq!(x.discrepant, 0);

        let (bal, cvr) = (r(&[1]), r(&[0]));
        let keys = [ParamKey::initially(&[0]), ParamKey::initially(&[1])];
        let x = assort(&[(&bal, &cvr)], &s, &keys);
        assert_eq!(x.columns, vec![vec![-1], vec![1]]);
    }

    #[test]
    fn winner_prefixes() {
        let s = ElectionState::new([1, 2].into_iter().collect(), [0].into_iter().collect());
        let (bal, cvr) = (r(&[0, 2]), r(&[0, 1]));
        let keys = [ParamKey::initially(&[0, 1]), ParamKey::initially(&[0, 2]), ParamKey::initially(&[0])];
        let x = assort(&[(&bal, &cvr)], &s, &keys);
        assert_eq!(x.columns, vec![vec![-1], vec![1], vec![0]]);
    }

    #[test]
    fn composite_stays_unit_bounded() {
        let k = ParamKey::Initially(vec![vec![0, 1, 2], vec![1, 0, 2]]);
        assert_eq!(k.assort(&[1, 0, 2], &[0, 1, 2]), 0);
        assert_eq!(k.assort(&[1, 0, 2], &[2]), 1);
        assert_eq!(k.assort(&[0], &[0, 1, 2]), -1);
    }

    fn ranking() -> impl Strategy<Value = Ranking> {
        Just((0..5).collect::<Vec<usize>>())
            .prop_shuffle()
            .prop_flat_map(|v| (0..=5usize).prop_map(move |len| Ranking::new(v[..len].to_vec()).unwrap()))
    }

    proptest! {
        // Full-population sums of the assorters turn CVR projections into ballot projections.
        #[test]
        fn correction_identity(pairs in prop::collection::vec((ranking(), ranking()), 1..40), h in 0u64..32, w in 0u64..32) {
            let winners = (w & !h) & 0b11;
            let hopefuls = h & !winners & 0b11111;
            let state = ElectionState::new(
                (0..5).filter(|c| hopefuls >> c & 1 == 1).collect(),
                (0..5).filter(|c| winners >> c & 1 == 1).collect(),
            );
            let bal = Profile::new(pairs.iter().map(|p| p.0.clone()).collect(), 5).unwrap();
            let cvr = Profile::new(pairs.iter().map(|p| p.1.clone()).collect(), 5).unwrap();
            let tb = tally_profile(&bal, &state, 2).unwrap();
            let tc = tally_profile(&cvr, &state, 2).unwrap();
            let mut keys = vec![ParamKey::exactly(&[])];
            for c in state.continuing().iter() {
                keys.push(ParamKey::initially(&[c]));
                keys.push(ParamKey::exactly(&[c]));
                for d in state.continuing().iter().filter(|&d| d != c) {
                    keys.push(ParamKey::initially(&[c, d]));
                    keys.push(ParamKey::exactly(&[c, d]));
                }
            }
            let refs: Vec<_> = pairs.iter().map(|(a, b)| (a, b)).collect();
            let x = assort(&refs, &state, &keys);
            for (key, col) in keys.iter().zip(&x.columns) {
                let sum: i64 = col.iter().map(|&v| v as i64).sum();
                let winner_only = match key {
                    ParamKey::Initially(ps) => ps[0][..ps[0].len() - 1].iter().all(|&c| state.winners.contains(c)),
                    ParamKey::Exactly(p) => p.iter().all(|&c| state.winners.contains(c)),
                };
                if winner_only {
                    prop_assert_eq!(key.count(&tb) as i64, key.count(&tc) as i64 + sum, "{}", key);
                }
            }
        }
    }
}
