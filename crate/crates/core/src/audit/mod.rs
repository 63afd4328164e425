//! Ballot-comparison risk-limiting audits over an audit graph's boundary,
//! synthetic noise, and Monte Carlo checks of the rejection design.

mod design;
mod noise;

use std::collections::HashMap;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ballots::{Candidate, Profile, SignatureCounts, TallyTable};
use crate::candidates::CandidateSet;
use crate::error::{Error, Result};
use crate::graph::{boundary, coherence_check, AuditGraph, Coherence, EdgeKind};
use crate::state::ElectionState;
use crate::stats::{assort, estimate_margin, margin_parameters, MarginEstimate, MarginTarget, StatsParams};
use crate::tabulation::InstantTallies;

pub use design::{design_csv, verify_design, DesignReport, DesignScenario};
pub use noise::{
    add_ghost_count, add_ghosts, draw_sample, noise_profile, noise_profile_with_indices, perturb, trial_rng,
    Perturbation,
};

/// Ghost ballots appended to a profile before auditing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Ghosts {
    /// `ceil(rate * N)` ghosts.
    Rate(f64),
    Count(usize),
}

impl Ghosts {
    pub fn apply(self, p: &Profile) -> Profile {
        match self {
            Ghosts::Rate(r) => add_ghosts(p, r),
            Ghosts::Count(c) => add_ghost_count(p, c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub sample_size: usize,
    pub stats: StatsParams,
    pub seed: u64,
    /// Least auditable margin of the graph, in votes.
    pub lam: f64,
    /// Fraction of ballots perturbed when a ballot record is synthesized.
    pub noise: f64,
    pub ghosts: Ghosts,
}

impl AuditConfig {
    pub fn new(sample_size: usize, lam: f64) -> Self {
        AuditConfig {
            sample_size,
            stats: StatsParams::default(),
            seed: 0,
            lam,
            noise: 0.0,
            ghosts: Ghosts::Count(0),
        }
    }

    /// Overall risk limit `alpha0 + alpha_k`.
    pub fn alpha(&self) -> f64 {
        self.stats.alpha0 + self.stats.alpha_k
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.alpha();
        if !(self.stats.alpha0 > 0.0 && self.stats.alpha_k > 0.0 && a < 1.0) {
            return Err(Error::Config(format!(
                "risk split ({}, {}) must be positive and sum below 1",
                self.stats.alpha0, self.stats.alpha_k
            )));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Config(format!("noise level {} outside [0, 1]", self.noise)));
        }
        Ok(())
    }
}

/// Decision on one boundary edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeDecision {
    /// Graph vertex the edge leaves.
    pub from: usize,
    pub from_state: ElectionState,
    pub to: ElectionState,
    pub kind: EdgeKind,
    /// The check selected on the CVR, if the state admits one.
    pub check: Option<MarginTarget>,
    pub estimate: Option<MarginEstimate>,
    pub rejected: bool,
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    /// Whether every boundary edge's local null was rejected.
    pub rejected: bool,
    /// Winner set of the graph, certified when `rejected`.
    pub certified: Option<Vec<Candidate>>,
    pub edges: Vec<EdgeDecision>,
    pub sample: Vec<usize>,
    /// Sampled pairs whose ballot and CVR differ.
    pub discrepancies: usize,
}

impl AuditResult {
    pub fn rejected_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.rejected).count()
    }
}

/// Checks that can reject an edge, each with its margin on the CVR.
pub fn candidate_checks(it: &InstantTallies, kind: EdgeKind) -> Vec<(MarginTarget, f64)> {
    let q = it.solution.quota;
    let mut out = Vec::new();
    match kind {
        EdgeKind::Loser(c) => {
            let tc = it.hopefuls[&c];
            for (&x, &tx) in &it.hopefuls {
                if x != c {
                    out.push((MarginTarget::CandidateVsCandidate { c, l: x }, tc - tx));
                }
            }
            for (&h, &th) in &it.hopefuls {
                out.push((MarginTarget::CandidateVsQuota { c: h }, th - q));
            }
        }
        EdgeKind::Winner(c) => {
            let tc = it.hopefuls[&c];
            out.push((MarginTarget::QuotaVsCandidate { c }, q - tc));
            for (&h, &th) in &it.hopefuls {
                if h != c {
                    out.push((MarginTarget::CandidateVsCandidate { c: h, l: c }, th - tc));
                }
            }
        }
    }
    out
}

/// The check with the largest CVR margin; ties go to the first listed.
pub fn select_check(it: &InstantTallies, kind: EdgeKind) -> Option<(MarginTarget, f64)> {
    candidate_checks(it, kind)
        .into_iter()
        .filter(|(_, m)| m.is_finite())
        .fold(None, |best, (t, m)| match best {
            Some((_, bm)) if bm >= m => best,
            _ => Some((t, m)),
        })
}

/// Boundary edges the audit must reject: universal edges out of non-terminal
/// vertices that leave the graph, except those landing on a terminal state
/// with the graph's own winner set.
pub fn auditable_boundary(g: &AuditGraph, winners: CandidateSet) -> Vec<crate::graph::BoundaryEdge> {
    boundary(g)
        .into_iter()
        .filter(|e| e.to.outcome(g.seats) != Some(winners))
        .collect()
}

fn cvr_tables(cvr: &Profile, states: &[ElectionState]) -> HashMap<ElectionState, TallyTable> {
    let ballots = cvr.compress();
    states
        .par_iter()
        .map(|s| (*s, TallyTable::from_signatures(&SignatureCounts::from_compressed(&ballots, s))))
        .collect()
}

/// Runs one ballot-comparison audit of `g` on the sampled pairs of `bal` and `cvr`.
pub fn run_rla(bal: &Profile, cvr: &Profile, g: &AuditGraph, config: &AuditConfig) -> Result<AuditResult> {
    config.validate()?;
    let winners = match coherence_check(g) {
        Coherence::Coherent(w) => w,
        Coherence::Incoherent(..) => return Err(Error::Incoherent),
    };
    if bal.len() != cvr.len() || bal.candidate_count != cvr.candidate_count {
        return Err(Error::Config(format!(
            "ballot record has {} ballots over {} candidates, CVR has {} over {}",
            bal.len(),
            bal.candidate_count,
            cvr.len(),
            cvr.candidate_count
        )));
    }
    let n = config.sample_size;
    if n > cvr.len() {
        return Err(Error::Config(format!("sample size {n} exceeds {} ballots", cvr.len())));
    }
    let sample = draw_sample(cvr.len(), n, &mut trial_rng(config.seed, 0));
    let pairs: Vec<_> = sample.iter().map(|&i| (&bal.voters[i], &cvr.voters[i])).collect();
    let discrepancies = pairs.iter().filter(|(b, c)| b != c).count();

    let edges = auditable_boundary(g, winners);
    let mut states: Vec<ElectionState> = edges.iter().map(|e| g.vertices[e.from].state).collect();
    states.sort_by_key(|s| (s.hopefuls.bits(), s.winners.bits()));
    states.dedup();
    let tables = cvr_tables(cvr, &states);

    let decisions: Vec<EdgeDecision> = edges
        .par_iter()
        .map(|e| {
            let vertex = &g.vertices[e.from];
            let mut d = EdgeDecision {
                from: e.from,
                from_state: vertex.state,
                to: e.to,
                kind: e.kind,
                check: None,
                estimate: None,
                rejected: false,
                diagnostic: None,
            };
            let Some(it) = vertex.tallies.as_ref().filter(|_| !vertex.is_degenerate()) else {
                d.diagnostic = Some("state is degenerate on the CVR".into());
                return d;
            };
            let Some((target, _)) = select_check(it, e.kind) else {
                d.diagnostic = Some("no finite check".into());
                return d;
            };
            d.check = Some(target);
            let estimate = margin_parameters(&vertex.state, target).and_then(|keys| {
                let s = assort(&pairs, &vertex.state, &keys);
                estimate_margin(&vertex.state, &tables[&vertex.state], target, &s, &g.meek, &config.stats)
            });
            match estimate {
                Ok(m) => {
                    d.rejected = m.lower_bound > 0.0;
                    d.estimate = Some(m);
                }
                Err(err) => d.diagnostic = Some(err.to_string()),
            }
            d
        })
        .collect();
    let rejected = n > 0 && decisions.iter().all(|d| d.rejected);
    Ok(AuditResult {
        rejected,
        certified: rejected.then(|| winners.iter().collect()),
        edges: decisions,
        sample,
        discrepancies,
    })
}

/// Seed of trial `t` under `seed`.
pub fn trial_seed(seed: u64, t: u64) -> u64 {
    trial_rng(seed, t).next_u64()
}

/// Outcome of repeated synthetic audits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub successes: usize,
    pub sample_size: usize,
    /// Per trial: rejected boundary edges out of the total.
    pub edge_rejections: Vec<(usize, usize)>,
}

impl TrialSummary {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials.max(1) as f64
    }
}

/// Audits `trials` ballot records synthesized by noising `cvr` afresh per
/// trial, each with its own sample.
pub fn simulate_audits(cvr: &Profile, g: &AuditGraph, config: &AuditConfig, trials: usize) -> Result<TrialSummary> {
    let results: Vec<(bool, usize, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(config.seed, t);
            let (bal, _) = noise_profile_with_indices(cvr, config.noise, &mut trial_rng(seed, 1));
            let r = run_rla(&bal, cvr, g, &AuditConfig { seed, ..*config })?;
            Ok((r.rejected, r.rejected_edges(), r.edges.len()))
        })
        .collect::<Result<_>>()?;
    Ok(TrialSummary {
        trials,
        successes: results.iter().filter(|r| r.0).count(),
        sample_size: config.sample_size,
        edge_rejections: results.iter().map(|r| (r.1, r.2)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ballots::Ranking;
    use crate::graph::{build_audit_graph, GraphParams};

    fn profile(rows: &[(usize, &[usize])], m: usize) -> Profile {
        let mut v = Vec::new();
        for &(n, r) in rows {
            for _ in 0..n {
                v.push(Ranking::new(r.to_vec()).unwrap());
            }
        }
        Profile::new(v, m).unwrap()
    }

    fn landslide() -> Profile {
        profile(&[(500, &[0, 1]), (300, &[1, 2]), (150, &[2, 1]), (50, &[])], 3)
    }

    #[test]
    fn noiseless_large_sample_certifies() {
        let cvr = landslide();
        let g = build_audit_graph(&cvr, &GraphParams::new(1, 20.0)).unwrap();
        let mut cfg = AuditConfig::new(200, 20.0);
        cfg.seed = 11;
        let r = run_rla(&cvr, &cvr, &g, &cfg).unwrap();
        assert!(!r.edges.is_empty());
        assert!(r.rejected, "{:#?}", r.edges);
        assert_eq!(r.certified, Some(vec![0]));
        assert_eq!(r.discrepancies, 0);
    }

    #[test]
    fn zero_sample_never_rejects() {
        let cvr = landslide();
        let g = build_audit_graph(&cvr, &GraphParams::new(1, 20.0)).unwrap();
        let r = run_rla(&cvr, &cvr, &g, &AuditConfig::new(0, 20.0)).unwrap();
        assert!(!r.rejected);
        assert!(r.edges.iter().all(|e| !e.rejected));
    }

    #[test]
    fn incoherent_graph_refused() {
        let cvr = profile(&[(50, &[0]), (50, &[1])], 2);
        let g = build_audit_graph(&cvr, &GraphParams::new(1, 10.0)).unwrap();
        assert!(matches!(run_rla(&cvr, &cvr, &g, &AuditConfig::new(10, 10.0)), Err(Error::Incoherent)));
    }

    #[test]
    fn reproducible_under_seed() {
        let cvr = landslide();
        let g = build_audit_graph(&cvr, &GraphParams::new(1, 20.0)).unwrap();
        let bal = noise_profile(&cvr, 0.05, 3);
        let mut cfg = AuditConfig::new(150, 20.0);
        cfg.seed = 5;
        assert_eq!(run_rla(&bal, &cvr, &g, &cfg).unwrap(), run_rla(&bal, &cvr, &g, &cfg).unwrap());
    }

    #[test]
    fn checks_pick_largest_cvr_margin() {
        let cvr = landslide();
        let g = build_audit_graph(&cvr, &GraphParams::new(1, 0.0)).unwrap();
        let root = g.vertices[0].tallies.as_ref().unwrap();
        let (t, m) = select_check(root, EdgeKind::Loser(0)).unwrap();
        assert_eq!(t, MarginTarget::CandidateVsCandidate { c: 0, l: 2 });
        assert!((m - 350.0).abs() < 1e-9);
        let (t, _) = select_check(root, EdgeKind::Winner(1)).unwrap();
        assert_eq!(t, MarginTarget::CandidateVsCandidate { c: 0, l: 1 });
    }

    #[test]
    fn global_rejection_is_intersection() {
        let cvr = landslide();
        let g = build_audit_graph(&cvr, &GraphParams::new(1, 20.0)).unwrap();
        let mut cfg = AuditConfig::new(60, 20.0);
        cfg.noise = 0.1;
        let s = simulate_audits(&cvr, &g, &cfg, 40).unwrap();
        let all = s.edge_rejections.iter().filter(|(r, t)| r == t).count();
        assert_eq!(all, s.successes);
    }
}
