//! Audit graphs: the election states an audit must account for under a
//! least auditable margin, their coherence, and their boundary.

mod dot;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ballots::{Candidate, Profile, Ranking, SignatureCounts, TallyTable};
use crate::candidates::CandidateSet;
use crate::error::{Error, Result};
use crate::state::ElectionState;
use crate::tabulation::{instant_tallies, Action, Classification, InstantTallies, MeekParams};

pub use dot::{export_dot, graph_to_json};

/// Default limit on the number of vertices in an audit graph.
pub const DEFAULT_VERTEX_CAP: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "candidate")]
pub enum EdgeKind {
    Winner(Candidate),
    Loser(Candidate),
}

impl EdgeKind {
    pub fn candidate(&self) -> Candidate {
        match *self {
            EdgeKind::Winner(c) | EdgeKind::Loser(c) => c,
        }
    }

    pub fn apply(&self, s: &ElectionState) -> ElectionState {
        match *self {
            EdgeKind::Winner(c) => s.elect(c),
            EdgeKind::Loser(c) => s.eliminate(c),
        }
    }
}

impl From<Action> for EdgeKind {
    fn from(a: Action) -> Self {
        match a {
            Action::Elected(c) => EdgeKind::Winner(c),
            Action::Eliminated(c) => EdgeKind::Loser(c),
        }
    }
}

/// Every state one election or elimination away from `s`.
pub fn universal_neighbors(s: &ElectionState, seats: usize) -> Vec<(ElectionState, EdgeKind)> {
    let mut out = Vec::with_capacity(2 * s.hopefuls.len());
    if s.winners.len() < seats {
        out.extend(s.hopefuls.iter().map(|c| (s.elect(c), EdgeKind::Winner(c))));
    }
    out.extend(s.hopefuls.iter().map(|c| (s.eliminate(c), EdgeKind::Loser(c))));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    pub meek: MeekParams,
    /// Least auditable margin, in votes.
    pub lam: f64,
    pub vertex_cap: usize,
}

impl GraphParams {
    pub fn new(seats: usize, lam: f64) -> Self {
        GraphParams {
            meek: MeekParams::new(seats),
            lam,
            vertex_cap: DEFAULT_VERTEX_CAP,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Vertex {
    pub state: ElectionState,
    pub depth: usize,
    /// Instant tallies of non-terminal states.
    pub tallies: Option<InstantTallies>,
}

impl Vertex {
    pub fn is_degenerate(&self) -> bool {
        self.tallies
            .as_ref()
            .is_some_and(|t| t.solution.classification == Classification::Degenerate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    /// The edge the extended Meek rule takes on the reported ballots.
    pub canonical: bool,
}

/// A layered subgraph of the universal election-state graph.
#[derive(Clone, Debug)]
pub struct AuditGraph {
    pub candidate_count: usize,
    pub seats: usize,
    pub lam: f64,
    pub meek: MeekParams,
    pub vertices: Vec<Vertex>,
    /// Vertex ids by depth.
    pub layers: Vec<Vec<usize>>,
    pub edges: Vec<GraphEdge>,
    index: HashMap<ElectionState, usize>,
}

impl AuditGraph {
    pub fn vertex_of(&self, s: &ElectionState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn contains(&self, s: &ElectionState) -> bool {
        self.index.contains_key(s)
    }

    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = &GraphEdge> {
        self.edges.iter().filter(move |e| e.from == v)
    }

    pub fn is_terminal(&self, v: usize) -> bool {
        self.vertices[v].state.is_terminal(self.seats)
    }

    /// Vertex ids along the canonical path from the root.
    pub fn canonical_path(&self) -> Vec<usize> {
        let mut path = vec![0];
        while let Some(e) = self.out_edges(*path.last().expect("nonempty")).find(|e| e.canonical) {
            path.push(e.to);
        }
        path
    }

    pub fn terminal_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&v| self.is_terminal(v))
    }
}

/// Edges out of a non-terminal state that the margin `lam` cannot rule out,
/// the canonical one first.
///
/// Flipping `lam / 2` ballots moves one tally up and another down by that
/// much each, so a gap between two tallies closes when it is below `lam`,
/// and a tally can cross the quota when it is within `lam / 2` of it.
pub fn plausible_edges(it: &InstantTallies, seats: usize, lam: f64) -> Vec<EdgeKind> {
    let Some(canonical) = it.action(seats) else {
        return Vec::new();
    };
    let mut out = vec![EdgeKind::from(canonical)];
    let q = it.solution.quota;
    let max = it.hopefuls.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = it.hopefuls.values().copied().fold(f64::INFINITY, f64::min);
    for (&c, &t) in &it.hopefuls {
        if t - q > -lam / 2.0 && max - t < lam {
            out.push(EdgeKind::Winner(c));
        }
    }
    if max - q < lam / 2.0 {
        for (&c, &t) in &it.hopefuls {
            if t - min < lam {
                out.push(EdgeKind::Loser(c));
            }
        }
    }
    let first = out[0];
    let mut rest: Vec<_> = out[1..].iter().copied().filter(|&k| k != first).collect();
    rest.sort();
    rest.dedup();
    out.truncate(1);
    out.extend(rest);
    out
}

fn state_tallies(
    ballots: &[(Ranking, u64)],
    state: &ElectionState,
    seats: usize,
    meek: &MeekParams,
) -> Result<Option<InstantTallies>> {
    if state.is_terminal(seats) {
        return Ok(None);
    }
    if state.degree() > crate::ballots::MAX_PREFIX_DEPTH {
        return Err(Error::UnsupportedDegree {
            degree: state.degree(),
        });
    }
    let table = TallyTable::from_signatures(&SignatureCounts::from_compressed(ballots, state));
    instant_tallies(state, &table, meek).map(Some)
}

/// Builds the audit graph of the reported ballots `cvr` at margin `params.lam`.
pub fn build_audit_graph(cvr: &Profile, params: &GraphParams) -> Result<AuditGraph> {
    let seats = params.meek.seats;
    let m = cvr.candidate_count;
    if m <= seats || seats == 0 {
        return Err(Error::Config(format!("{m} candidates cannot fill {seats} seats with a contest")));
    }
    if !(params.lam >= 0.0) {
        return Err(Error::Config(format!("lam must be non-negative, got {}", params.lam)));
    }
    let ballots = cvr.compress();
    let root = ElectionState::root(m);
    let mut g = AuditGraph {
        candidate_count: m,
        seats,
        lam: params.lam,
        meek: params.meek,
        vertices: Vec::new(),
        layers: Vec::new(),
        edges: Vec::new(),
        index: HashMap::new(),
    };
    let mut frontier = vec![root];
    let mut depth = 0;
    while !frontier.is_empty() {
        let computed: Vec<(ElectionState, Option<InstantTallies>)> = frontier
            .par_iter()
            .map(|s| Ok((*s, state_tallies(&ballots, s, seats, &params.meek)?)))
            .collect::<Result<_>>()?;
        let mut layer = Vec::with_capacity(computed.len());
        for (state, tallies) in computed {
            let id = g.vertices.len();
            g.index.insert(state, id);
            g.vertices.push(Vertex { state, depth, tallies });
            layer.push(id);
        }
        let mut next: Vec<ElectionState> = Vec::new();
        let mut seen: HashMap<ElectionState, ()> = HashMap::new();
        let mut pending = Vec::new();
        for &v in &layer {
            let Some(it) = &g.vertices[v].tallies else { continue };
            for (i, kind) in plausible_edges(it, seats, params.lam).into_iter().enumerate() {
                let to = kind.apply(&g.vertices[v].state);
                if seen.insert(to, ()).is_none() {
                    next.push(to);
                }
                pending.push((v, to, kind, i == 0));
            }
        }
        g.layers.push(layer);
        if g.vertices.len() + next.len() > params.vertex_cap {
            return Err(Error::GraphTooLarge {
                cap: params.vertex_cap,
                depth: depth + 1,
                frontier: next.len(),
            });
        }
        let base = g.vertices.len();
        let order: HashMap<ElectionState, usize> = next.iter().enumerate().map(|(i, s)| (*s, base + i)).collect();
        g.edges.extend(pending.into_iter().map(|(from, to, kind, canonical)| GraphEdge {
            from,
            to: order[&to],
            kind,
            canonical,
        }));
        frontier = next;
        depth += 1;
    }
    Ok(g)
}

/// Outcome of a coherence check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coherence {
    /// Every terminal state elects this winner set.
    Coherent(CandidateSet),
    /// Two terminal states with different winner sets.
    Incoherent(ElectionState, ElectionState),
}

impl Coherence {
    pub fn is_coherent(&self) -> bool {
        matches!(self, Coherence::Coherent(_))
    }
}

/// Checks that every terminal state of `g` settles on the same winners.
pub fn coherence_check(g: &AuditGraph) -> Coherence {
    let mut first: Option<(ElectionState, CandidateSet)> = None;
    for v in g.terminal_vertices() {
        let s = g.vertices[v].state;
        let w = s.outcome(g.seats).expect("terminal");
        match first {
            None => first = Some((s, w)),
            Some((s0, w0)) if w0 != w => return Coherence::Incoherent(s0, s),
            _ => {}
        }
    }
    Coherence::Coherent(first.map_or(CandidateSet::empty(), |(_, w)| w))
}

/// A universal edge leaving the graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub from: usize,
    pub to: ElectionState,
    pub kind: EdgeKind,
}

/// Universal edges from non-terminal vertices of `g` to states outside `g`.
pub fn boundary(g: &AuditGraph) -> Vec<BoundaryEdge> {
    let mut out = Vec::new();
    for (v, vertex) in g.vertices.iter().enumerate() {
        if g.is_terminal(v) {
            continue;
        }
        for (to, kind) in universal_neighbors(&vertex.state, g.seats) {
            if !g.contains(&to) {
                out.push(BoundaryEdge { from: v, to, kind });
            }
        }
    }
    out
}
