//! Hypergeometric variance bounds, discrepancy assorters and delta-method
//! margin estimates for local null hypotheses.

mod assorter;
mod hypergeom;
mod margin;

pub use assorter::{assort, AssorterSample, ParamKey};
pub use hypergeom::{hypergeom_cdf, hypergeom_ln_pmf, k_upper, HypergeomQuery};
pub use margin::{
    covariance_bound, estimate_margin, margin_at, margin_gradient, margin_parameters, sampled_keep_factors,
    DiscrepancyCount, MarginEstimate, MarginTarget, ParamEstimate, StatsParams, VarianceSource,
};
