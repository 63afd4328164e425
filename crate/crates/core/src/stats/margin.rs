use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::assorter::{AssorterSample, ParamKey};
use super::hypergeom::k_upper;
use crate::ballots::{Candidate, TallyTable};
use crate::error::{Error, Result};
use crate::numeric::{Dual, Real, MAX_PARAMS};
use crate::state::ElectionState;
use crate::tabulation::{hopeful_tally, instant_quota, keep_factors, HopefulProjections, MeekParams, Projections};

/// Which margin of an election state is being estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum MarginTarget {
    /// `T_c - T_l`.
    CandidateVsCandidate { c: Candidate, l: Candidate },
    /// `T_c - q`.
    CandidateVsQuota { c: Candidate },
    /// `q - T_c`.
    QuotaVsCandidate { c: Candidate },
}

/// How the hypergeometric discrepancy count behind the variance bound is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscrepancyCount {
    /// Sampled pairs with a nonzero assorter among the margin's own parameters.
    MarginBallots,
    /// Nonzero assorter entries over the margin's own parameters.
    MarginEntries,
    /// Sampled pairs whose ballot and CVR differ at all; shared by every margin.
    AnyDiscrepancy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsParams {
    /// Risk spent on the normal confidence bounds.
    pub alpha0: f64,
    /// Risk spent on the hypergeometric variance bound.
    pub alpha_k: f64,
    /// Bound on the absolute value of every assorter.
    pub bound: f64,
    /// Parameters with more nonzero sampled entries than this use their sample variance.
    pub sample_variance_threshold: usize,
    pub discrepancy_count: DiscrepancyCount,
}

impl Default for StatsParams {
    fn default() -> Self {
        StatsParams {
            alpha0: 0.045,
            alpha_k: 0.005,
            bound: 1.0,
            sample_variance_threshold: 20,
            discrepancy_count: DiscrepancyCount::MarginBallots,
        }
    }
}

impl StatsParams {
    /// `z_{1 - alpha0}`.
    pub fn z(&self) -> f64 {
        Normal::standard().inverse_cdf(1.0 - self.alpha0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceSource {
    Hypergeometric,
    Sample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub key: ParamKey,
    pub mean: f64,
    /// Variance of the sample mean before the finite population correction.
    pub variance: f64,
    pub source: VarianceSource,
    pub gradient: f64,
}

/// Delta-method estimate of one margin with a one-sided lower confidence bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginEstimate {
    pub target: MarginTarget,
    /// The margin on the CVR alone.
    pub cvr_margin: f64,
    pub point: f64,
    /// `grad' Sigma grad` before the finite population correction.
    pub variance_bound: f64,
    pub std_err: f64,
    pub lower_bound: f64,
    pub parameters: Vec<ParamEstimate>,
    /// Keep factors of the state's winners under the sampled parameters.
    pub keep_factors: Vec<f64>,
    pub discrepancies: u64,
    pub k_upper: u64,
}

/// Parameters a margin depends on, in a fixed order.
pub fn margin_parameters(state: &ElectionState, target: MarginTarget) -> Result<Vec<ParamKey>> {
    let w = state.winner_list();
    let i = ParamKey::initially;
    let x = ParamKey::exactly;
    let (c, l) = match target {
        MarginTarget::CandidateVsCandidate { c, l } => (c, Some(l)),
        MarginTarget::CandidateVsQuota { c } | MarginTarget::QuotaVsCandidate { c } => (c, None),
    };
    for h in std::iter::once(c).chain(l) {
        if !state.hopefuls.contains(h) {
            return Err(Error::Config(format!("candidate {} is not hopeful in {state:?}", h + 1)));
        }
    }
    let keys = match (w.len(), l) {
        (0, Some(l)) => vec![i(&[c]), i(&[l])],
        (0, None) => vec![i(&[c]), x(&[])],
        (1, Some(l)) => vec![i(&[c]), i(&[l]), i(&[w[0], c]), i(&[w[0], l]), x(&[]), x(&[w[0]]), i(&[w[0]])],
        (1, None) => vec![i(&[c]), i(&[w[0], c]), x(&[]), x(&[w[0]]), i(&[w[0]])],
        (2, l) => {
            let (a, b) = (w[0], w[1]);
            let mut keys = vec![
                x(&[]),
                i(&[a]),
                i(&[b]),
                i(&[a, b]),
                i(&[b, a]),
                x(&[a]),
                x(&[b]),
                x(&[a, b]),
                x(&[b, a]),
            ];
            let pair = |h: Candidate| ParamKey::Initially(vec![vec![a, b, h], vec![b, a, h]]);
            match l {
                Some(l) => keys.extend([i(&[c]), i(&[l]), i(&[a, c]), i(&[a, l]), i(&[b, c]), i(&[b, l]), pair(c), pair(l)]),
                None => keys.extend([i(&[c]), i(&[a, c]), i(&[b, c]), pair(c)]),
            }
            keys
        }
        (d, _) => return Err(Error::UnsupportedDegree { degree: d }),
    };
    debug_assert!(keys.len() <= MAX_PARAMS);
    Ok(keys)
}

fn corrected<T: Real>(table: &TallyTable, keys: &[ParamKey], theta: &[T], key: ParamKey) -> T {
    let base = T::cst(key.count(table));
    match keys.iter().position(|k| *k == key) {
        Some(j) => base + T::cst(table.total as f64) * theta[j],
        None => base,
    }
}

/// Winner-side projections of `state` corrected by the parameter means `theta`.
fn corrected_projections<T: Real>(
    state: &ElectionState,
    table: &TallyTable,
    keys: &[ParamKey],
    theta: &[T],
) -> Projections<T> {
    let get = |key| corrected(table, keys, theta, key);
    let w = state.winner_list();
    let zero = T::cst(0.0);
    let mut p = Projections {
        total: T::cst(table.total as f64),
        ghost: get(ParamKey::exactly(&[])),
        degree: w.len(),
        first: [zero; 2],
        only: [zero; 2],
        pair_first: [zero; 2],
        pair_only: [zero; 2],
    };
    for (s, &wi) in w.iter().enumerate() {
        p.first[s] = get(ParamKey::initially(&[wi]));
        p.only[s] = get(ParamKey::exactly(&[wi]));
    }
    if w.len() == 2 {
        p.pair_first = [get(ParamKey::initially(&[w[0], w[1]])), get(ParamKey::initially(&[w[1], w[0]]))];
        p.pair_only = [get(ParamKey::exactly(&[w[0], w[1]])), get(ParamKey::exactly(&[w[1], w[0]]))];
    }
    p
}

fn corrected_hopeful<T: Real>(
    state: &ElectionState,
    table: &TallyTable,
    keys: &[ParamKey],
    theta: &[T],
    h: Candidate,
) -> HopefulProjections<T> {
    let get = |key| corrected(table, keys, theta, key);
    let w = state.winner_list();
    let zero = T::cst(0.0);
    let mut hp = HopefulProjections {
        first: get(ParamKey::initially(&[h])),
        after: [zero; 2],
        after_pair: zero,
    };
    for (s, &wi) in w.iter().enumerate() {
        hp.after[s] = get(ParamKey::initially(&[wi, h]));
    }
    if w.len() == 2 {
        hp.after_pair = get(ParamKey::Initially(vec![vec![w[0], w[1], h], vec![w[1], w[0], h]]));
    }
    hp
}

/// A margin as a function of the parameter means `theta`; `None` when the
/// corrected projections admit no finite positive keep factors.
pub fn margin_at<T: Real>(
    state: &ElectionState,
    table: &TallyTable,
    target: MarginTarget,
    keys: &[ParamKey],
    theta: &[T],
    meek: &MeekParams,
) -> Option<T> {
    let p = corrected_projections(state, table, keys, theta);
    let k = keep_factors(&p, meek.seats, meek.min_surplus)?;
    let tally = |h| hopeful_tally(&corrected_hopeful(state, table, keys, theta, h), &k);
    let quota = || instant_quota(&p, &k, meek.seats, meek.min_surplus);
    Some(match target {
        MarginTarget::CandidateVsCandidate { c, l } => tally(c) - tally(l),
        MarginTarget::CandidateVsQuota { c } => tally(c) - quota(),
        MarginTarget::QuotaVsCandidate { c } => quota() - tally(c),
    })
}

/// Keep factors of the winners of `state` at parameter means `theta`.
pub fn sampled_keep_factors(
    state: &ElectionState,
    table: &TallyTable,
    keys: &[ParamKey],
    theta: &[f64],
    meek: &MeekParams,
) -> Option<Vec<f64>> {
    keep_factors(&corrected_projections(state, table, keys, theta), meek.seats, meek.min_surplus)
}

/// Gradient of a margin with respect to the parameter means, by forward-mode differentiation.
pub fn margin_gradient(
    state: &ElectionState,
    table: &TallyTable,
    target: MarginTarget,
    keys: &[ParamKey],
    theta: &[f64],
    meek: &MeekParams,
) -> Option<(f64, Vec<f64>)> {
    let lifted: Vec<Dual> = theta.iter().enumerate().map(|(j, &t)| Dual::var(t, j)).collect();
    let m = margin_at(state, table, target, keys, &lifted, meek)?;
    Some((m.v, m.d[..keys.len()].to_vec()))
}

/// Covariance bound of the parameter sample means, before the finite
/// population correction, with the discrepancy count and `K_u` behind it.
pub fn covariance_bound(
    sample: &AssorterSample,
    population: u64,
    params: &StatsParams,
) -> (Vec<Vec<f64>>, Vec<VarianceSource>, u64, u64) {
    let n = sample.len();
    let d = sample.keys.len();
    let nz = sample.nonzero();
    let y = match params.discrepancy_count {
        DiscrepancyCount::MarginEntries => nz.iter().sum::<usize>() as u64,
        DiscrepancyCount::MarginBallots => (0..n).filter(|&i| sample.columns.iter().any(|c| c[i] != 0)).count() as u64,
        DiscrepancyCount::AnyDiscrepancy => sample.discrepant as u64,
    };
    let ku = k_upper(y.min(n as u64), n as u64, population, params.alpha_k);
    let means = sample.means();
    let nf = n as f64;
    let denom = (nf - 1.0).max(1.0);
    let mut cov = vec![vec![0.0; d]; d];
    for a in 0..d {
        for b in a..d {
            let s: f64 = sample.columns[a]
                .iter()
                .zip(&sample.columns[b])
                .map(|(&x, &y)| (x as f64 - means[a]) * (y as f64 - means[b]))
                .sum();
            cov[a][b] = s / denom / nf;
            cov[b][a] = cov[a][b];
        }
    }
    let hyper = params.bound * params.bound * ku as f64 / population as f64 / nf;
    let mut sources = Vec::with_capacity(d);
    for j in 0..d {
        if nz[j] > params.sample_variance_threshold {
            sources.push(VarianceSource::Sample);
        } else {
            cov[j][j] = hyper;
            sources.push(VarianceSource::Hypergeometric);
        }
    }
    (cov, sources, y, ku)
}

/// Estimates `target` in `state` from the CVR tally table and an assorter
/// sample over [`margin_parameters`], and bounds it from below.
pub fn estimate_margin(
    state: &ElectionState,
    cvr: &TallyTable,
    target: MarginTarget,
    sample: &AssorterSample,
    meek: &MeekParams,
    params: &StatsParams,
) -> Result<MarginEstimate> {
    let keys = &sample.keys;
    if *keys != margin_parameters(state, target)? {
        return Err(Error::Config("assorter sample does not match the margin's parameters".into()));
    }
    let population = cvr.total;
    let n = sample.len() as u64;
    if n == 0 || n > population {
        return Err(Error::Config(format!("sample size {n} outside 1..={population}")));
    }
    let zeros = vec![0.0; keys.len()];
    let cvr_margin = margin_at(state, cvr, target, keys, &zeros, meek)
        .ok_or_else(|| Error::Degenerate(format!("{state:?} is degenerate on the CVR")))?;
    let theta = sample.means();
    let (point, grad) = margin_gradient(state, cvr, target, keys, &theta, meek).ok_or_else(|| {
        Error::Degenerate(format!("{state:?} has no finite positive keep factors under the sampled parameters"))
    })?;
    let (cov, sources, y, ku) = covariance_bound(sample, population, params);
    let mut variance = 0.0;
    for a in 0..keys.len() {
        for b in 0..keys.len() {
            variance += grad[a] * cov[a][b] * grad[b];
        }
    }
    let variance = variance.max(0.0);
    let fpc = (population - n) as f64 / (population as f64 - 1.0).max(1.0);
    let std_err = (variance * fpc).sqrt();
    let keep = sampled_keep_factors(state, cvr, keys, &theta, meek).unwrap_or_default();
    Ok(MarginEstimate {
        target,
        cvr_margin,
        point,
        variance_bound: variance,
        std_err,
        lower_bound: point - params.z() * std_err,
        parameters: keys
            .iter()
            .enumerate()
            .map(|(j, k)| ParamEstimate {
                key: k.clone(),
                mean: theta[j],
                variance: cov[j][j],
                source: sources[j],
                gradient: grad[j],
            })
            .collect(),
        keep_factors: keep,
        discrepancies: y,
        k_upper: ku,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ballots::{tally_profile, Profile, Ranking};
    use crate::stats::assort;

    fn profile(rows: &[(usize, &[usize])], m: usize) -> Profile {
        let mut v = Vec::new();
        for &(n, r) in rows {
            for _ in 0..n {
                v.push(Ranking::new(r.to_vec()).unwrap());
            }
        }
        Profile::new(v, m).unwrap()
    }

    fn fd_check(state: &ElectionState, table: &TallyTable, target: MarginTarget, meek: &MeekParams, theta: &[f64], tol: f64) {
        let keys = margin_parameters(state, target).unwrap();
        let (_, grad) = margin_gradient(state, table, target, &keys, theta, meek).unwrap();
        let h = 1e-6;
        for j in 0..keys.len() {
            let mut up = theta.to_vec();
            up[j] += h;
            let mut dn = theta.to_vec();
            dn[j] -= h;
            let fd = (margin_at(state, table, target, &keys, &up, meek).unwrap()
                - margin_at(state, table, target, &keys, &dn, meek).unwrap())
                / (2.0 * h);
            let scale = fd.abs().max(grad[j].abs()).max(1.0);
            assert!((fd - grad[j]).abs() / scale < tol, "{} {fd} vs {}", keys[j], grad[j]);
        }
    }

    fn sample_profile() -> Profile {
        profile(
            &[
                (40, &[0, 1, 2]),
                (10, &[0, 2]),
                (35, &[1, 0, 3]),
                (5, &[1]),
                (20, &[2]),
                (18, &[3, 2]),
                (4, &[0, 1]),
                (6, &[0, 1, 3]),
                (3, &[1, 0]),
                (7, &[]),
            ],
            4,
        )
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = sample_profile();
        let meek = MeekParams::new(3);
        let states = [
            ElectionState::root(4),
            ElectionState::root(4).elect(0),
            ElectionState::root(4).elect(0).elect(1),
        ];
        for (d, s) in states.iter().enumerate() {
            let t = tally_profile(&p, s, d).unwrap();
            let hs: Vec<_> = s.hopefuls.iter().collect();
            for target in [
                MarginTarget::CandidateVsCandidate { c: hs[0], l: hs[1] },
                MarginTarget::CandidateVsQuota { c: hs[1] },
                MarginTarget::QuotaVsCandidate { c: hs[0] },
            ] {
                let keys = margin_parameters(s, target).unwrap();
                let theta: Vec<f64> = (0..keys.len()).map(|j| 0.002 * ((j as f64 * 1.7).sin())).collect();
                fd_check(s, &t, target, &meek, &theta, if d == 2 { 1e-3 } else { 1e-4 });
            }
        }
    }

    #[test]
    fn parameter_counts() {
        let s = ElectionState::root(5).elect(0).elect(1);
        assert_eq!(margin_parameters(&s, MarginTarget::CandidateVsCandidate { c: 2, l: 3 }).unwrap().len(), 17);
        assert_eq!(margin_parameters(&s, MarginTarget::CandidateVsQuota { c: 2 }).unwrap().len(), 13);
        let s = ElectionState::root(5).elect(0);
        assert_eq!(margin_parameters(&s, MarginTarget::CandidateVsCandidate { c: 2, l: 3 }).unwrap().len(), 7);
        assert_eq!(margin_parameters(&s, MarginTarget::CandidateVsQuota { c: 2 }).unwrap().len(), 5);
        assert!(margin_parameters(&s, MarginTarget::CandidateVsQuota { c: 0 }).is_err());
    }

    #[test]
    fn noiseless_sample_reproduces_cvr_margin() {
        let p = sample_profile();
        let meek = MeekParams::new(3);
        let s = ElectionState::root(4).elect(0);
        let t = tally_profile(&p, &s, 1).unwrap();
        let target = MarginTarget::CandidateVsCandidate { c: 2, l: 3 };
        let keys = margin_parameters(&s, target).unwrap();
        let pairs: Vec<_> = p.voters.iter().take(60).map(|r| (r, r)).collect();
        let x = assort(&pairs, &s, &keys);
        let est = estimate_margin(&s, &t, target, &x, &meek, &StatsParams::default()).unwrap();
        assert_eq!(est.point, est.cvr_margin);
        assert_eq!(est.discrepancies, 0);
        assert!(est.std_err > 0.0);
        assert!(est.lower_bound < est.point);
    }

    #[test]
    fn symmetric_corrections_shift_by_twice() {
        let p = sample_profile();
        let meek = MeekParams::new(3);
        let s = ElectionState::root(4);
        let t = tally_profile(&p, &s, 0).unwrap();
        let target = MarginTarget::CandidateVsCandidate { c: 0, l: 1 };
        let keys = margin_parameters(&s, target).unwrap();
        let base = margin_at(&s, &t, target, &keys, &[0.0, 0.0], &meek).unwrap();
        let moved = margin_at(&s, &t, target, &keys, &[0.01, -0.01], &meek).unwrap();
        assert!((moved - base - 2.0 * 148.0 * 0.01).abs() < 1e-9);
    }
}
