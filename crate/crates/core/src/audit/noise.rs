use rand::seq::{index, IndexedRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ballots::{Profile, Ranking};

/// Generator for stream `stream` of `seed`; trials use their index as the stream.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One edit to a ranking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Perturbation {
    /// Replace a listed candidate with one not listed.
    Replace,
    /// Insert an unlisted candidate at any position.
    Insert,
    /// Swap the positions of two listed candidates.
    Swap,
    /// Remove a listed candidate.
    Remove,
}

impl Perturbation {
    pub const ALL: [Perturbation; 4] = [
        Perturbation::Replace,
        Perturbation::Insert,
        Perturbation::Swap,
        Perturbation::Remove,
    ];

    pub fn applicable(self, len: usize, candidate_count: usize) -> bool {
        match self {
            Perturbation::Replace => len >= 1 && len < candidate_count,
            Perturbation::Insert => len < candidate_count,
            Perturbation::Swap => len >= 2,
            Perturbation::Remove => len >= 1,
        }
    }
}

/// Applies one uniformly chosen applicable perturbation to `r`; the result always differs from `r`.
pub fn perturb<R: Rng + ?Sized>(r: &Ranking, candidate_count: usize, rng: &mut R) -> Option<Ranking> {
    let kinds: Vec<Perturbation> = Perturbation::ALL
        .into_iter()
        .filter(|p| p.applicable(r.len(), candidate_count))
        .collect();
    let kind = *kinds.choose(rng)?;
    let mut v = r.as_slice().to_vec();
    let listed = r.candidates();
    let unlisted: Vec<usize> = (0..candidate_count).filter(|&c| !listed.contains(c)).collect();
    match kind {
        Perturbation::Replace => {
            let i = rng.random_range(0..v.len());
            v[i] = *unlisted.choose(rng)?;
        }
        Perturbation::Insert => {
            let i = rng.random_range(0..=v.len());
            v.insert(i, *unlisted.choose(rng)?);
        }
        Perturbation::Swap => {
            let picked = index::sample(rng, v.len(), 2);
            v.swap(picked.index(0), picked.index(1));
        }
        Perturbation::Remove => {
            let i = rng.random_range(0..v.len());
            v.remove(i);
        }
    }
    Some(Ranking::new(v).expect("perturbation keeps rankings duplicate-free"))
}

/// Perturbs `floor(eta * N)` distinct ballots of `p`, returning the noised
/// profile and the sorted indices that changed.
pub fn noise_profile_with_indices<R: Rng + ?Sized>(p: &Profile, eta: f64, rng: &mut R) -> (Profile, Vec<usize>) {
    assert!((0.0..=1.0).contains(&eta), "noise level must lie in [0, 1]");
    let count = (eta * p.len() as f64).floor() as usize;
    let mut out = p.clone();
    let mut changed = index::sample(rng, p.len(), count).into_vec();
    changed.sort_unstable();
    changed.retain(|&i| match perturb(&p.voters[i], p.candidate_count, rng) {
        Some(r) => {
            out.voters[i] = r;
            true
        }
        None => false,
    });
    (out, changed)
}

/// Perturbs `floor(eta * N)` distinct ballots of `p` under `seed`.
pub fn noise_profile(p: &Profile, eta: f64, seed: u64) -> Profile {
    noise_profile_with_indices(p, eta, &mut trial_rng(seed, 0)).0
}

/// Appends `count` empty rankings.
pub fn add_ghost_count(p: &Profile, count: usize) -> Profile {
    let mut out = p.clone();
    out.voters.extend(std::iter::repeat_n(Ranking::empty(), count));
    out
}

/// Appends `ceil(rate * N)` empty rankings.
pub fn add_ghosts(p: &Profile, rate: f64) -> Profile {
    assert!(rate >= 0.0, "ghost rate must be non-negative");
    add_ghost_count(p, (rate * p.len() as f64).ceil() as usize)
}

/// Simple random sample of `n` of `0..population` without replacement, sorted.
pub fn draw_sample<R: Rng + ?Sized>(population: usize, n: usize, rng: &mut R) -> Vec<usize> {
    assert!(n <= population, "cannot draw {n} of {population}");
    let mut v = index::sample(rng, population, n).into_vec();
    v.sort_unstable();
    v
}
