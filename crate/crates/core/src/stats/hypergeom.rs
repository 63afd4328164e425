use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

/// `X ~ Hypergeometric(population, successes, draws)`, asking about `X <= observed`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypergeomQuery {
    pub population: u64,
    pub successes: u64,
    pub draws: u64,
    pub observed: u64,
}

/// `ln P(X = k)`; `-inf` outside the support.
pub fn hypergeom_ln_pmf(population: u64, successes: u64, draws: u64, k: u64) -> f64 {
    let failures = population - successes;
    if k > successes || k > draws || draws - k > failures {
        return f64::NEG_INFINITY;
    }
    ln_binomial(successes, k) + ln_binomial(failures, draws - k) - ln_binomial(population, draws)
}

/// `P(X <= observed)`, summed in log space.
pub fn hypergeom_cdf(q: HypergeomQuery) -> f64 {
    let HypergeomQuery {
        population,
        successes,
        draws,
        observed,
    } = q;
    assert!(successes <= population && draws <= population, "invalid query {q:?}");
    let lo = draws.saturating_sub(population - successes);
    let hi = observed.min(successes).min(draws);
    if hi < lo {
        return 0.0;
    }
    if observed >= draws.min(successes) {
        return 1.0;
    }
    let terms: Vec<f64> = (lo..=hi)
        .map(|k| hypergeom_ln_pmf(population, successes, draws, k))
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    (max + sum.ln()).exp().min(1.0)
}

/// Largest `K` such that `P_K(X <= x) >= alpha` when `n` of `population`
/// items are drawn; a `1 - alpha` upper confidence bound on the number of
/// successes.
pub fn k_upper(x: u64, n: u64, population: u64, alpha: f64) -> u64 {
    assert!(x <= n && n <= population, "need x <= n <= N");
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let cdf = |k: u64| {
        hypergeom_cdf(HypergeomQuery {
            population,
            successes: k,
            draws: n,
            observed: x,
        })
    };
    if cdf(population) >= alpha {
        return population;
    }
    // P_K(X <= x) is non-increasing in K.
    let (mut lo, mut hi) = (0, population);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if cdf(mid) >= alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
