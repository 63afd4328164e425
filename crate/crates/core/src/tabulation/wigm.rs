use std::collections::BTreeMap;

use super::{argmax, argmin, droop_quota, Action, RoundRecord, Tabulation};
use crate::ballots::{fpv, Candidate, Profile, Ranking};
use crate::candidates::CandidateSet;
use crate::error::{Error, Result};

struct Parcel {
    ranking: Ranking,
    count: f64,
    weight: f64,
    holder: Option<Candidate>,
}

/// Tabulates `profile` with the Weighted Inclusive Gregory Method.
pub fn run_wigm(profile: &Profile, seats: usize) -> Result<Tabulation> {
    if profile.candidate_count <= seats {
        return Err(Error::Config(format!(
            "{} candidates cannot fill {seats} seats with a contest",
            profile.candidate_count
        )));
    }
    if seats == 0 {
        return Err(Error::Config("at least one seat is required".into()));
    }
    if let Some(index) = profile.voters.iter().position(|r| r.is_empty()) {
        return Err(Error::EmptyBallot { index });
    }
    let quota = droop_quota(profile.len() as u64, seats) as f64;
    let mut hopefuls = profile.all_candidates();
    let mut parcels: Vec<Parcel> = profile
        .compress()
        .into_iter()
        .map(|(ranking, n)| Parcel {
            holder: fpv(&ranking, hopefuls),
            ranking,
            count: n as f64,
            weight: 1.0,
        })
        .collect();
    let mut winners = Vec::new();
    let mut rounds = Vec::new();

    while winners.len() < seats {
        let mut tallies: BTreeMap<Candidate, f64> = hopefuls.iter().map(|c| (c, 0.0)).collect();
        for p in &parcels {
            if let Some(c) = p.holder {
                *tallies.get_mut(&c).expect("holder is hopeful") += p.count * p.weight;
            }
        }
        let (top, top_tally) = argmax(&tallies).expect("hopefuls remain");
        let fill_remaining = winners.len() + hopefuls.len() <= seats;
        let (action, transfer_value) = if fill_remaining || top_tally >= quota {
            let tv = if top_tally >= quota {
                Some((top_tally - quota) / top_tally)
            } else {
                None
            };
            (Action::Elected(top), tv)
        } else {
            (Action::Eliminated(argmin(&tallies).expect("hopefuls remain").0), None)
        };
        let c = action.candidate();
        hopefuls.remove(c);
        if let Action::Elected(_) = action {
            winners.push(c);
        }
        transfer(&mut parcels, c, hopefuls, transfer_value.unwrap_or(1.0));
        rounds.push(RoundRecord {
            round: rounds.len() + 1,
            tallies,
            quota,
            action,
            keep_factors: BTreeMap::new(),
            transfer_value,
        });
    }
    Ok(Tabulation { winners, rounds })
}

fn transfer(parcels: &mut [Parcel], from: Candidate, hopefuls: CandidateSet, factor: f64) {
    for p in parcels.iter_mut().filter(|p| p.holder == Some(from)) {
        p.weight *= factor;
        p.holder = fpv(&p.ranking, hopefuls);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ballots(rows: &[(usize, &[usize])], m: usize) -> Profile {
        let mut v = Vec::new();
        for &(n, r) in rows {
            for _ in 0..n {
                v.push(Ranking::new(r.to_vec()).unwrap());
            }
        }
        Profile::new(v, m).unwrap()
    }

    #[test]
    fn single_seat_majority() {
        let p = ballots(&[(3, &[0]), (2, &[1])], 2);
        let t = run_wigm(&p, 1).unwrap();
        assert_eq!(t.winners, vec![0]);
        assert_eq!(t.rounds.len(), 1);
        assert_eq!(t.rounds[0].quota, 3.0);
    }

    #[test]
    fn surplus_transfer_removes_one_quota() {
        // quota = 10/3 + 1 = 4; A has 6, surplus 2 split by transfer value 1/3.
        let p = ballots(&[(6, &[0, 1]), (2, &[1]), (2, &[2])], 3);
        let t = run_wigm(&p, 2).unwrap();
        let r1 = &t.rounds[0];
        assert_eq!(r1.action, Action::Elected(0));
        let tv = r1.transfer_value.unwrap();
        assert!((6.0 * (1.0 - tv) - r1.quota).abs() < 1e-12);
        assert!((t.rounds[1].tallies[&1] - 4.0).abs() < 1e-12);
        assert_eq!(t.winners, vec![0, 1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            run_wigm(&ballots(&[(1, &[0]), (1, &[])], 3), 1),
            Err(Error::EmptyBallot { index: 1 })
        ));
        assert!(matches!(run_wigm(&ballots(&[(1, &[0])], 2), 2), Err(Error::Config(_))));
    }
}
