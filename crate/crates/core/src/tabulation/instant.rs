use std::collections::BTreeMap;

use super::{argmax, argmin, Action, Classification, KeepFactorSolution, MeekParams, RoundRecord};
use crate::ballots::{tally_profile, Candidate, Profile, TallyTable};
use crate::error::{Error, Result};
use crate::numeric::{positive_roots, Real};
use crate::state::ElectionState;

/// Keep factors above this value are treated as having no finite solution.
pub const KEEP_FACTOR_CAP: f64 = 100.0;

/// The winner-side profile projections that determine instant keep factors
/// of a state of degree at most 2. Winners are ordered by index; slot `i`
/// refers to `winners[i]`, and `pair_*[0]` is the `(w0, w1)` ordering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projections<T> {
    pub total: T,
    pub ghost: T,
    pub degree: usize,
    /// `T_{w_i}`.
    pub first: [T; 2],
    /// `t_{w_i}`.
    pub only: [T; 2],
    /// `T_{w0 w1}`, `T_{w1 w0}`.
    pub pair_first: [T; 2],
    /// `t_{w0 w1}`, `t_{w1 w0}`.
    pub pair_only: [T; 2],
}

/// Projections feeding one hopeful's tally.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopefulProjections<T> {
    /// `T_c`.
    pub first: T,
    /// `T_{w_i c}`.
    pub after: [T; 2],
    /// `T_{w0 w1 c} + T_{w1 w0 c}`.
    pub after_pair: T,
}

/// Reads the projections of `state` from a tally table.
pub fn projections(
    state: &ElectionState,
    table: &TallyTable,
) -> Result<(Projections<f64>, BTreeMap<Candidate, HopefulProjections<f64>>)> {
    let w = state.winner_list();
    if w.len() > 2 {
        return Err(Error::UnsupportedDegree { degree: w.len() });
    }
    let t = |s: &[Candidate]| table.initially(s) as f64;
    let x = |s: &[Candidate]| table.exactly(s) as f64;
    let mut p = Projections {
        total: table.total as f64,
        ghost: table.ghost as f64,
        degree: w.len(),
        first: [0.0; 2],
        only: [0.0; 2],
        pair_first: [0.0; 2],
        pair_only: [0.0; 2],
    };
    for (i, &wi) in w.iter().enumerate() {
        p.first[i] = t(&[wi]);
        p.only[i] = x(&[wi]);
    }
    if w.len() == 2 {
        p.pair_first = [t(&[w[0], w[1]]), t(&[w[1], w[0]])];
        p.pair_only = [x(&[w[0], w[1]]), x(&[w[1], w[0]])];
    }
    let hopefuls = state
        .hopefuls
        .iter()
        .map(|c| {
            let mut h = HopefulProjections {
                first: t(&[c]),
                after: [0.0; 2],
                after_pair: 0.0,
            };
            for (i, &wi) in w.iter().enumerate() {
                h.after[i] = t(&[wi, c]);
            }
            if w.len() == 2 {
                h.after_pair = t(&[w[0], w[1], c]) + t(&[w[1], w[0], c]);
            }
            (c, h)
        })
        .collect();
    Ok((p, hopefuls))
}

/// Coefficients of the quadratic whose root is the keep factor of winner 2,
/// given the projections with winner 1 in slot 0.
#[allow(clippy::too_many_arguments)]
pub(crate) fn quadratic_coefficients<T: Real>(
    t1: T,
    t2: T,
    t12: T,
    t21: T,
    x1: T,
    x2: T,
    x12: T,
    x21: T,
    active: T,
    seats: usize,
    eps: f64,
) -> (T, T, T) {
    let m1 = T::cst(seats as f64 + 1.0);
    let e = T::cst(eps);
    let two = T::cst(2.0);
    let a = t2 * x12 - t12 * x2 + t2 * x21 + t21 * x12 + t21 * x2 + t21 * x21 - m1 * (t12 * t21 + t2 * t21);
    let b = -(t1 * x12) - t1 * x2 + t12 * x2 - t2 * x1 - t2 * x12 - t1 * x21 - t2 * x21
        + active * (t21 - t12)
        - t21 * x1
        - two * (t21 * x12 + t21 * x2 + t21 * x21)
        + m1 * (t1 * t12 + t1 * t2 + t12 * t21 + t2 * t21 - t12 * e + t21 * e);
    let c = -(t1 + t21) * (active - x1 - x12 - x2 - x21 + m1 * e);
    (a, b, c)
}

impl<T: Real> Projections<T> {
    /// Coefficients of the quadratic for the keep factor of winner `slot`.
    pub fn quadratic(&self, slot: usize, seats: usize, eps: f64) -> (T, T, T) {
        let active = self.total - self.ghost;
        let (o, s) = (1 - slot, slot);
        quadratic_coefficients(
            self.first[o],
            self.first[s],
            self.pair_first[o],
            self.pair_first[s],
            self.only[o],
            self.only[s],
            self.pair_only[o],
            self.pair_only[s],
            active,
            seats,
            eps,
        )
    }
}

/// Instant keep factors, one per winner in index order; `None` when the
/// state is degenerate.
pub fn keep_factors<T: Real>(p: &Projections<T>, seats: usize, eps: f64) -> Option<Vec<T>> {
    let one = T::cst(1.0);
    let m1 = T::cst(seats as f64 + 1.0);
    let e = T::cst(eps);
    let active = p.total - p.ghost;
    let ks = match p.degree {
        0 => vec![],
        1 => {
            let cu = active - p.only[0] + m1 * e;
            let cv = m1 * p.first[0] - p.only[0];
            if cv.val() <= 0.0 {
                return None;
            }
            vec![cu / cv]
        }
        2 => {
            let (a, b, c) = p.quadratic(1, seats, eps);
            let pair_x = p.pair_only[0] + p.pair_only[1];
            let scale = p.total.val().abs().max(1.0);
            let mut found = None;
            for root in positive_roots(a.val(), b.val(), c.val()) {
                let k2 = T::implicit_root(a, b, c, root);
                let rest = active - p.only[0] - (one - k2) * (p.only[1] + pair_x);
                let slope = p.only[0] + (one - k2) * pair_x;
                let denom = p.first[0] + (one - k2) * p.pair_first[1] - slope / m1;
                if denom.val().abs() < 1e-12 * scale {
                    continue;
                }
                let k1 = (rest / m1 + e) / denom;
                if !(k1.val() > 1e-12) || !k1.val().is_finite() {
                    continue;
                }
                let q = (rest + k1 * slope) / m1 + e;
                let resid = k2 * (p.first[1] + (one - k1) * p.pair_first[0]) - q;
                if resid.val().abs() <= 1e-7 * scale {
                    found = Some(vec![k1, k2]);
                    break;
                }
            }
            found?
        }
        _ => return None,
    };
    if ks.iter().any(|k| !(k.val() > 0.0) || !k.val().is_finite() || k.val() > KEEP_FACTOR_CAP) {
        return None;
    }
    Some(ks)
}

/// Quota under keep factors `k`.
pub fn instant_quota<T: Real>(p: &Projections<T>, k: &[T], seats: usize, eps: f64) -> T {
    let one = T::cst(1.0);
    let mut kept = p.total - p.ghost;
    if p.degree >= 1 {
        kept = kept - (one - k[0]) * p.only[0];
    }
    if p.degree == 2 {
        kept = kept - (one - k[1]) * p.only[1] - (one - k[0]) * (one - k[1]) * (p.pair_only[0] + p.pair_only[1]);
    }
    kept / T::cst(seats as f64 + 1.0) + T::cst(eps)
}

/// Tally of a hopeful under keep factors `k`.
pub fn hopeful_tally<T: Real>(h: &HopefulProjections<T>, k: &[T]) -> T {
    let one = T::cst(1.0);
    let mut t = h.first;
    for (i, ki) in k.iter().enumerate() {
        t = t + (one - *ki) * h.after[i];
    }
    if k.len() == 2 {
        t = t + (one - k[0]) * (one - k[1]) * h.after_pair;
    }
    t
}

/// Tally held by winner `slot` under keep factors `k`.
pub fn winner_tally<T: Real>(p: &Projections<T>, k: &[T], slot: usize) -> T {
    let one = T::cst(1.0);
    match k.len() {
        1 => k[0] * p.first[0],
        2 => k[slot] * (p.first[slot] + (one - k[1 - slot]) * p.pair_first[1 - slot]),
        _ => T::cst(0.0),
    }
}

fn classify(ks: &[f64]) -> Classification {
    if ks.iter().all(|&k| k <= 1.0 + 1e-12) {
        Classification::Regular
    } else {
        Classification::Irregular
    }
}

/// Instant keep factors and quota of `state` from its tally table.
pub fn solve_instant_keep(
    state: &ElectionState,
    table: &TallyTable,
    params: &MeekParams,
) -> Result<KeepFactorSolution> {
    let (p, _) = projections(state, table)?;
    Ok(solution_from(&p, state, params))
}

fn solution_from(p: &Projections<f64>, state: &ElectionState, params: &MeekParams) -> KeepFactorSolution {
    let m1 = params.seats as f64 + 1.0;
    match keep_factors(p, params.seats, params.min_surplus) {
        Some(ks) => {
            let quota = instant_quota(p, &ks, params.seats, params.min_surplus);
            KeepFactorSolution {
                factors: state.winners.iter().zip(ks.iter().copied()).collect(),
                active_votes: (quota - params.min_surplus) * m1,
                quota,
                classification: classify(&ks),
            }
        }
        None => KeepFactorSolution {
            factors: BTreeMap::new(),
            active_votes: f64::NAN,
            quota: f64::NAN,
            classification: Classification::Degenerate,
        },
    }
}

/// Regularity class of `state`.
pub fn classify_state(
    state: &ElectionState,
    table: &TallyTable,
    params: &MeekParams,
) -> Result<Classification> {
    Ok(solve_instant_keep(state, table, params)?.classification)
}

/// Keep factors, quota and tallies of one state under instant keep factors.
#[derive(Clone, Debug, PartialEq)]
pub struct InstantTallies {
    pub state: ElectionState,
    pub solution: KeepFactorSolution,
    pub hopefuls: BTreeMap<Candidate, f64>,
    pub winners: BTreeMap<Candidate, f64>,
    pub projections: Projections<f64>,
    pub hopeful_projections: BTreeMap<Candidate, HopefulProjections<f64>>,
}

impl InstantTallies {
    /// The extended Meek decision in this state, or `None` if degenerate.
    pub fn action(&self, seats: usize) -> Option<Action> {
        if self.solution.classification == Classification::Degenerate {
            return None;
        }
        let (top, top_tally) = argmax(&self.hopefuls)?;
        if self.state.continuing().len() <= seats || top_tally >= self.solution.quota {
            Some(Action::Elected(top))
        } else {
            Some(Action::Eliminated(argmin(&self.hopefuls)?.0))
        }
    }
}

/// Computes instant tallies of `state` from its tally table.
pub fn instant_tallies(
    state: &ElectionState,
    table: &TallyTable,
    params: &MeekParams,
) -> Result<InstantTallies> {
    let (p, hp) = projections(state, table)?;
    let solution = solution_from(&p, state, params);
    let ks: Vec<f64> = solution.factors.values().copied().collect();
    let degenerate = solution.classification == Classification::Degenerate;
    let hopefuls = hp
        .iter()
        .map(|(&c, h)| (c, if degenerate { f64::NAN } else { hopeful_tally(h, &ks) }))
        .collect();
    let winners = state
        .winner_list()
        .into_iter()
        .enumerate()
        .map(|(i, w)| (w, if degenerate { f64::NAN } else { winner_tally(&p, &ks, i) }))
        .collect();
    Ok(InstantTallies {
        state: *state,
        solution,
        hopefuls,
        winners,
        projections: p,
        hopeful_projections: hp,
    })
}

/// One step of the extended Meek rule from `state`.
pub fn extended_meek_step(
    state: &ElectionState,
    profile: &Profile,
    params: &MeekParams,
) -> Result<(ElectionState, RoundRecord)> {
    if state.is_terminal(params.seats) {
        return Err(Error::Config(format!("{state:?} is terminal")));
    }
    let table = tally_profile(profile, state, state.degree())?;
    let it = instant_tallies(state, &table, params)?;
    let action = it
        .action(params.seats)
        .ok_or_else(|| Error::Degenerate(format!("{state:?} has no finite positive keep factors")))?;
    let next = match action {
        Action::Elected(c) => state.elect(c),
        Action::Eliminated(c) => state.eliminate(c),
    };
    let mut tallies = it.hopefuls.clone();
    tallies.extend(it.winners.iter().map(|(&w, &t)| (w, t)));
    let record = RoundRecord {
        round: state.depth(profile.candidate_count) + 1,
        tallies,
        quota: it.solution.quota,
        action,
        keep_factors: it.solution.factors.clone(),
        transfer_value: None,
    };
    Ok((next, record))
}
