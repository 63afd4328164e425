//! WIGM and Meek tabulation, instant keep factors and state classification.

mod instant;
mod meek;
mod wigm;
mod witness;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ballots::{Candidate, Profile};

pub use instant::{
    classify_state, extended_meek_step, hopeful_tally, instant_quota, instant_tallies, keep_factors,
    projections, solve_instant_keep, winner_tally, HopefulProjections, InstantTallies, Projections, KEEP_FACTOR_CAP,
};
pub use meek::{meek_calibrate, run_meek, MeekCalibration};
pub use wigm::run_wigm;
pub use witness::{degenerate_witness, witness_discriminant, Witness};

/// Parameters of the Meek rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeekParams {
    pub seats: usize,
    /// Minimum surplus added to the quota, in votes.
    pub min_surplus: f64,
    /// Convergence tolerance on winner excess, in votes.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl MeekParams {
    pub fn new(seats: usize) -> Self {
        MeekParams {
            seats,
            min_surplus: 1e-6,
            tolerance: 1e-6,
            max_iterations: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    /// Every keep factor lies in (0, 1].
    Regular,
    /// A finite positive solution exists but some factor exceeds 1.
    Irregular,
    /// No finite positive solution.
    Degenerate,
}

/// Instant keep factors of an election state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeepFactorSolution {
    pub factors: BTreeMap<Candidate, f64>,
    /// Votes still held by continuing candidates, `(m + 1)(q - eps)`.
    pub active_votes: f64,
    pub quota: f64,
    pub classification: Classification,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "candidate")]
pub enum Action {
    Elected(Candidate),
    Eliminated(Candidate),
}

impl Action {
    pub fn candidate(&self) -> Candidate {
        match *self {
            Action::Elected(c) | Action::Eliminated(c) => c,
        }
    }
}

/// One round of a tabulation log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub tallies: BTreeMap<Candidate, f64>,
    pub quota: f64,
    pub action: Action,
    /// Meek keep factors in force during the round.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub keep_factors: BTreeMap<Candidate, f64>,
    /// WIGM transfer value applied to the elected candidate's ballots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer_value: Option<f64>,
}

/// Full result of a tabulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tabulation {
    pub winners: Vec<Candidate>,
    pub rounds: Vec<RoundRecord>,
}

/// `floor(N / (m + 1)) + 1`.
pub fn droop_quota(ballots: u64, seats: usize) -> u64 {
    ballots / (seats as u64 + 1) + 1
}

/// Index of the largest value, ties to the smallest candidate index.
pub(crate) fn argmax(tallies: &BTreeMap<Candidate, f64>) -> Option<(Candidate, f64)> {
    let mut best: Option<(Candidate, f64)> = None;
    for (&c, &t) in tallies {
        if best.is_none_or(|(_, b)| t > b) {
            best = Some((c, t));
        }
    }
    best
}

/// Index of the smallest value, ties to the smallest candidate index.
pub(crate) fn argmin(tallies: &BTreeMap<Candidate, f64>) -> Option<(Candidate, f64)> {
    let mut best: Option<(Candidate, f64)> = None;
    for (&c, &t) in tallies {
        if best.is_none_or(|(_, b)| t < b) {
            best = Some((c, t));
        }
    }
    best
}

/// Renders a round log as JSON keyed by candidate name.
pub fn rounds_to_json(profile: &Profile, rounds: &[RoundRecord]) -> serde_json::Value {
    use serde_json::json;
    let name = |c: Candidate| profile.name(c).to_string();
    let rows: Vec<_> = rounds
        .iter()
        .map(|r| {
            let tallies: serde_json::Map<_, _> =
                r.tallies.iter().map(|(&c, &t)| (name(c), json!(t))).collect();
            let keep: serde_json::Map<_, _> =
                r.keep_factors.iter().map(|(&c, &k)| (name(c), json!(k))).collect();
            let (kind, who) = match r.action {
                Action::Elected(c) => ("elected", c),
                Action::Eliminated(c) => ("eliminated", c),
            };
            let mut row = json!({
                "round": r.round,
                "tallies": tallies,
                "quota": r.quota,
                "action": {"kind": kind, "candidate": name(who)},
                "keep_factors": keep,
            });
            if let Some(tv) = r.transfer_value {
                row["transfer_value"] = json!(tv);
            }
            row
        })
        .collect();
    serde_json::Value::Array(rows)
}

/// Candidates x rounds text table.
pub fn render_table(profile: &Profile, tab: &Tabulation) -> String {
    use std::fmt::Write as _;
    let width = profile.names.iter().map(|n| n.len()).max().unwrap_or(8).max(8);
    let mut out = String::new();
    let _ = write!(out, "{:width$}", "");
    for r in &tab.rounds {
        let _ = write!(out, " {:>10}", format!("Round {}", r.round));
    }
    out.push('\n');
    for c in 0..profile.candidate_count {
        let _ = write!(out, "{:width$}", profile.name(c));
        for r in &tab.rounds {
            match r.tallies.get(&c) {
                Some(t) => {
                    let mark = if r.action == Action::Elected(c) { "*" } else { " " };
                    let _ = write!(out, " {:>9.2}{}", t, mark);
                }
                None => {
                    let _ = write!(out, " {:>10}", "");
                }
            }
        }
        out.push('\n');
    }
    let _ = write!(out, "{:width$}", "Quota");
    for r in &tab.rounds {
        let _ = write!(out, " {:>10.2}", r.quota);
    }
    out.push('\n');
    let _ = write!(out, "{:width$}", "Action");
    for r in &tab.rounds {
        let a = match r.action {
            Action::Elected(c) => format!("+{}", c + 1),
            Action::Eliminated(c) => format!("-{}", c + 1),
        };
        let _ = write!(out, " {:>10}", a);
    }
    out.push('\n');
    let names: Vec<_> = tab.winners.iter().map(|&c| profile.name(c)).collect();
    let _ = writeln!(out, "Winners: {}", names.join(", "));
    out
}
