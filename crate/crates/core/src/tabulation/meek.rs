use std::collections::BTreeMap;

use super::{argmax, argmin, Action, MeekParams, RoundRecord, Tabulation};
use crate::ballots::{project_ranking, Candidate, Profile, Ranking};
use crate::error::{Error, Result};
use crate::state::ElectionState;

/// Result of iterative keep-factor calibration in one election state.
#[derive(Clone, Debug, PartialEq)]
pub struct MeekCalibration {
    pub keep: BTreeMap<Candidate, f64>,
    /// Tallies of every continuing candidate (winners and hopefuls).
    pub tallies: BTreeMap<Candidate, f64>,
    pub quota: f64,
    pub exhausted: f64,
    pub iterations: usize,
}

fn distribute(
    ballots: &[(Ranking, f64)],
    state: &ElectionState,
    keep: &BTreeMap<Candidate, f64>,
) -> (BTreeMap<Candidate, f64>, f64) {
    let mut tallies: BTreeMap<Candidate, f64> = state.continuing().iter().map(|c| (c, 0.0)).collect();
    let mut exhausted = 0.0;
    for (r, n) in ballots {
        let mut w = *n;
        for &c in r.as_slice() {
            match keep.get(&c) {
                Some(&k) => {
                    *tallies.get_mut(&c).expect("continuing") += w * k;
                    w *= 1.0 - k;
                }
                None => {
                    *tallies.get_mut(&c).expect("continuing") += w;
                    w = 0.0;
                    break;
                }
            }
        }
        exhausted += w;
    }
    (tallies, exhausted)
}

fn project_all(profile: &Profile, state: &ElectionState) -> Vec<(Ranking, f64)> {
    let keep = state.continuing();
    let mut grouped: BTreeMap<Ranking, u64> = BTreeMap::new();
    for r in &profile.voters {
        *grouped.entry(project_ranking(r, keep)).or_insert(0) += 1;
    }
    grouped.into_iter().map(|(r, n)| (r, n as f64)).collect()
}

/// Calibrates keep factors for the winners of `state` by the Meek iteration.
pub fn meek_calibrate(
    profile: &Profile,
    state: &ElectionState,
    params: &MeekParams,
) -> Result<MeekCalibration> {
    let ballots = project_all(profile, state);
    calibrate_projected(&ballots, state, params)
}

fn calibrate_projected(
    ballots: &[(Ranking, f64)],
    state: &ElectionState,
    params: &MeekParams,
) -> Result<MeekCalibration> {
    let seats = params.seats as f64;
    let mut keep: BTreeMap<Candidate, f64> = state.winners.iter().map(|w| (w, 1.0)).collect();
    for iterations in 0..=params.max_iterations {
        let (tallies, exhausted) = distribute(ballots, state, &keep);
        let quota = tallies.values().sum::<f64>() / (seats + 1.0) + params.min_surplus;
        let excess = keep
            .keys()
            .map(|w| tallies[w] - quota)
            .fold(f64::NEG_INFINITY, f64::max);
        if keep.is_empty() || excess < params.tolerance {
            return Ok(MeekCalibration {
                keep,
                tallies,
                quota,
                exhausted,
                iterations,
            });
        }
        if iterations == params.max_iterations {
            return Err(Error::NonConvergence {
                iterations,
                excess,
                last_factors: keep.into_iter().collect(),
            });
        }
        for (w, k) in keep.iter_mut() {
            let t = tallies[w];
            if t > 0.0 {
                *k *= (quota / t).min(1.0);
            }
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Tabulates `profile` with the Meek rule, one election or elimination per round.
pub fn run_meek(profile: &Profile, params: &MeekParams) -> Result<Tabulation> {
    let seats = params.seats;
    if profile.candidate_count <= seats || seats == 0 {
        return Err(Error::Config(format!(
            "{} candidates cannot fill {seats} seats with a contest",
            profile.candidate_count
        )));
    }
    let mut state = ElectionState::root(profile.candidate_count);
    let mut winners = Vec::new();
    let mut rounds = Vec::new();
    while winners.len() < seats {
        let cal = meek_calibrate(profile, &state, params)?;
        let hopeful: BTreeMap<Candidate, f64> = state
            .hopefuls
            .iter()
            .map(|c| (c, cal.tallies[&c]))
            .collect();
        let (top, top_tally) = argmax(&hopeful).expect("hopefuls remain");
        let fill_remaining = state.continuing().len() <= seats;
        let action = if fill_remaining || top_tally >= cal.quota {
            Action::Elected(top)
        } else {
            Action::Eliminated(argmin(&hopeful).expect("hopefuls remain").0)
        };
        state = match action {
            Action::Elected(c) => {
                winners.push(c);
                state.elect(c)
            }
            Action::Eliminated(c) => state.eliminate(c),
        };
        rounds.push(RoundRecord {
            round: rounds.len() + 1,
            tallies: cal.tallies,
            quota: cal.quota,
            action,
            keep_factors: cal.keep,
            transfer_value: None,
        });
    }
    Ok(Tabulation { winners, rounds })
}
