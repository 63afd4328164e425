use crate::ballots::{Profile, Ranking};
use crate::error::{Error, Result};
use crate::state::ElectionState;

/// A regular profile whose two-winner state turns degenerate after two ballots change.
#[derive(Clone, Debug)]
pub struct Witness {
    /// State with winners `{0, 1}` and every other candidate hopeful.
    pub state: ElectionState,
    pub base: Profile,
    /// `base` with one `(0, 1)` and one `(1, 0)` ballot replaced by bullet votes for `m - 1`.
    pub perturbed: Profile,
    pub x: usize,
    pub y: usize,
}

/// Builds the witness on `m` candidates with `n` voters and minimum surplus `eps`.
pub fn degenerate_witness(m: usize, n: usize, eps: f64) -> Result<Witness> {
    if m < 3 {
        return Err(Error::Infeasible(format!("witness needs at least 3 seats, got {m}")));
    }
    let share = n as f64 / (m as f64 + 1.0);
    let x = (share + eps).ceil() as usize;
    let y = (share - eps).floor() as usize;
    let used = 2 * x + (m - 3) * y;
    if used > n || x < 2 {
        return Err(Error::Infeasible(format!("{n} voters cannot hold the witness for {m} seats")));
    }
    let build = |xs: usize| {
        let mut v = Vec::with_capacity(n);
        v.extend((0..xs).map(|_| Ranking::new(vec![0, 1]).expect("distinct")));
        v.extend((0..xs).map(|_| Ranking::new(vec![1, 0]).expect("distinct")));
        for j in 2..m - 1 {
            v.extend((0..y).map(|_| Ranking::new(vec![j]).expect("distinct")));
        }
        let rest = n - v.len();
        v.extend((0..rest).map(|_| Ranking::new(vec![m - 1]).expect("distinct")));
        Profile::new(v, m)
    };
    let winners = [0, 1].into_iter().collect();
    let hopefuls = (2..m).collect();
    Ok(Witness {
        state: ElectionState::new(hopefuls, winners),
        base: build(x)?,
        perturbed: build(x - 1)?,
        x,
        y,
    })
}

/// Discriminant of the symmetric keep-factor quadratic when `x_prime`
/// ballots rank each winner first and the other second.
pub fn witness_discriminant(m: usize, n: usize, x_prime: usize, eps: f64) -> f64 {
    let (m, n, x) = (m as f64, n as f64, x_prime as f64);
    4.0 * m * x * (m * x - (n + (m + 1.0) * eps - x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ballots::tally_profile;
    use crate::tabulation::{classify_state, Classification, MeekParams};

    fn class(p: &Profile, s: &ElectionState, m: usize) -> Classification {
        let t = tally_profile(p, s, 2).unwrap();
        classify_state(s, &t, &MeekParams::new(m)).unwrap()
    }

    #[test]
    fn witness_flips_to_degenerate() {
        for (m, n) in [(3, 1000), (4, 2000), (5, 3001)] {
            let w = degenerate_witness(m, n, 1e-6).unwrap();
            assert_eq!(w.base.len(), n);
            assert_eq!(w.perturbed.len(), n);
            assert_eq!(class(&w.base, &w.state, m), Classification::Regular);
            assert_eq!(class(&w.perturbed, &w.state, m), Classification::Degenerate);
            assert!(witness_discriminant(m, n, w.x - 1, 1e-6) < 0.0);
        }
    }

    #[test]
    fn sizes() {
        let w = degenerate_witness(3, 1000, 1e-6).unwrap();
        assert_eq!((w.x, w.y), (251, 249));
        assert!(matches!(degenerate_witness(2, 1000, 1e-6), Err(Error::Infeasible(_))));
        assert!(matches!(degenerate_witness(3, 2, 1e-6), Err(Error::Infeasible(_))));
    }

    #[test]
    fn discriminant_sign_tracks_quota() {
        // (m + 1) x' > N + (m + 1) eps exactly when x' exceeds the quota.
        for x in 240..260 {
            let q = 1000.0 / 4.0 + 1e-6;
            assert_eq!(witness_discriminant(3, 1000, x, 1e-6) >= 0.0, x as f64 > q);
        }
    }
}
