//! Average sampling numbers: the large-sample approximation and an empirical
//! search for the smallest sample that certifies often enough.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::audit::{simulate_audits, AuditConfig};
use crate::ballots::Profile;
use crate::error::{Error, Result};
use crate::graph::{build_audit_graph, coherence_check, AuditGraph, GraphParams};

/// Sample fractions tried before bisecting.
pub const ASN_GRID: [f64; 8] = [0.005, 0.01, 0.025, 0.05, 0.1, 0.2, 0.3, 0.5];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsnQuery {
    /// Smallest audited margin, in votes.
    pub margin: f64,
    /// Number of assorter parameters behind the margin.
    pub params: usize,
    pub alpha0: f64,
    pub alpha_k: f64,
    pub population: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsnEstimate {
    /// `n / N`.
    pub fraction: f64,
    pub sample_size: u64,
    /// The approximation assumes `n` much smaller than `N`; false above a tenth.
    pub small_sample: bool,
    /// False when the approximation asks for more than the whole population.
    pub auditable: bool,
}

/// `n / N ~ z_{1-alpha0} sqrt(d ln(1/alpha_K)) / margin`.
pub fn asn_formula(q: &AsnQuery) -> Result<AsnEstimate> {
    if !(q.margin > 0.0) || q.params == 0 {
        return Err(Error::Config(format!(
            "need a positive margin and at least one parameter, got {} and {}",
            q.margin, q.params
        )));
    }
    if !(q.alpha0 > 0.0 && q.alpha0 < 1.0 && q.alpha_k > 0.0 && q.alpha_k < 1.0) {
        return Err(Error::Config("risk levels must lie in (0, 1)".into()));
    }
    let z = Normal::standard().inverse_cdf(1.0 - q.alpha0);
    let fraction = z * (q.params as f64 * (1.0 / q.alpha_k).ln()).sqrt() / q.margin;
    Ok(AsnEstimate {
        fraction,
        sample_size: (fraction * q.population as f64).ceil() as u64,
        small_sample: fraction <= 0.1,
        auditable: fraction <= 1.0,
    })
}

/// Success rate of the audit at one sample size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsnPoint {
    pub sample_size: usize,
    pub success_rate: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalAsn {
    /// Smallest sample size found meeting the target; `None` if not auditable.
    pub sample_size: Option<usize>,
    pub success_target: f64,
    /// Every sample size evaluated, in evaluation order.
    pub points: Vec<AsnPoint>,
}

/// Smallest sample size whose simulated audits certify at least
/// `success_target` of the time: grid first, then bisection.
pub fn empirical_asn(
    cvr: &Profile,
    g: &AuditGraph,
    config: &AuditConfig,
    success_target: f64,
    trials: usize,
) -> Result<EmpiricalAsn> {
    if trials < 20 {
        return Err(Error::Config(format!("need at least 20 trials per sample size, got {trials}")));
    }
    let big_n = cvr.len();
    let eval = |n: usize| -> Result<AsnPoint> {
        let s = simulate_audits(cvr, g, &AuditConfig { sample_size: n, ..*config }, trials)?;
        Ok(AsnPoint {
            sample_size: n,
            success_rate: s.success_rate(),
            trials,
        })
    };
    let mut grid: Vec<usize> = ASN_GRID
        .iter()
        .map(|f| ((f * big_n as f64).ceil() as usize).clamp(1, big_n))
        .chain(std::iter::once(big_n))
        .collect();
    grid.dedup();
    let mut points: Vec<AsnPoint> = grid.par_iter().map(|&n| eval(n)).collect::<Result<_>>()?;
    let Some(hit) = points.iter().position(|p| p.success_rate >= success_target) else {
        return Ok(EmpiricalAsn {
            sample_size: None,
            success_target,
            points,
        });
    };
    let mut hi = points[hit].sample_size;
    let mut lo = if hit == 0 { 0 } else { points[hit - 1].sample_size };
    let resolution = (big_n / 400).max(1);
    while hi - lo > resolution {
        let mid = lo + (hi - lo) / 2;
        let p = eval(mid)?;
        points.push(p);
        if p.success_rate >= success_target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(EmpiricalAsn {
        sample_size: Some(hi),
        success_target,
        points,
    })
}

/// Largest `lam` on the ascending `lam_grid` whose graph builds within the
/// vertex cap and is coherent, with that graph.
pub fn greedy_lam_search(cvr: &Profile, params: &GraphParams, lam_grid: &[f64]) -> Result<(f64, AuditGraph)> {
    if lam_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("lam grid must be ascending".into()));
    }
    let mut best = None;
    for &lam in lam_grid {
        let g = match build_audit_graph(cvr, &GraphParams { lam, ..*params }) {
            Ok(g) => g,
            Err(Error::GraphTooLarge { .. }) => break,
            Err(e) => return Err(e),
        };
        // Graphs grow with lam, so coherence is lost for good once lost.
        if !coherence_check(&g).is_coherent() {
            break;
        }
        best = Some((lam, g));
    }
    best.ok_or(Error::Incoherent)
}

/// One row of the sample-size report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsnRow {
    pub profile: String,
    #[serde(rename = "N")]
    pub population: usize,
    pub lam: f64,
    pub lam_pct: f64,
    pub n: usize,
    pub n_pct: f64,
    pub success_rate: f64,
    pub trials: usize,
}

impl AsnRow {
    pub fn new(profile: &str, population: usize, lam: f64, point: &AsnPoint) -> Self {
        let pct = |x: f64| 100.0 * x / population.max(1) as f64;
        AsnRow {
            profile: profile.to_string(),
            population,
            lam,
            lam_pct: pct(lam),
            n: point.sample_size,
            n_pct: pct(point.sample_size as f64),
            success_rate: point.success_rate,
            trials: point.trials,
        }
    }
}

/// CSV with columns `profile,N,lam,lam_pct,n,n_pct,success_rate,trials`.
pub fn asn_csv(rows: &[AsnRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
    }
    if rows.is_empty() {
        w.write_record(["profile", "N", "lam", "lam_pct", "n", "n_pct", "success_rate", "trials"])
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ballots::Ranking;

    fn q(margin: f64, params: usize) -> AsnQuery {
        AsnQuery {
            margin,
            params,
            alpha0: 0.045,
            alpha_k: 0.005,
            population: 3839,
        }
    }

    // Acklam's rational approximation to the normal quantile.
    fn quantile(p: f64) -> f64 {
        let a = [-3.969683028665376e1, 2.209460984245205e2, -2.759285104469687e2, 1.383577518672690e2, -3.066479806614716e1, 2.506628277459239];
        let b = [-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2, 6.680131188771972e1, -1.328068155288572e1];
        let c = [-7.784894002430293e-3, -3.223964580411365e-1, -2.400758277161838, -2.549732539343734, 4.374664141464968, 2.938163982698783];
        let d = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
        let r = p - 0.5;
        if r.abs() <= 0.5 - 0.02425 {
            let s = r * r;
            (((((a[0] * s + a[1]) * s + a[2]) * s + a[3]) * s + a[4]) * s + a[5]) * r
                / (((((b[0] * s + b[1]) * s + b[2]) * s + b[3]) * s + b[4]) * s + 1.0)
        } else {
            let s = (-2.0 * (1.0 - p).ln()).sqrt();
            -(((((c[0] * s + c[1]) * s + c[2]) * s + c[3]) * s + c[4]) * s + c[5])
                / ((((d[0] * s + d[1]) * s + d[2]) * s + d[3]) * s + 1.0)
        }
    }

    #[test]
    fn formula_matches_independent_quantile() {
        let got = asn_formula(&q(150.0, 5)).unwrap();
        let want = quantile(0.955) * (5.0 * 200f64.ln()).sqrt() / 150.0;
        assert!((got.fraction - want).abs() < 1e-6, "{} vs {want}", got.fraction);
        assert_eq!(got.sample_size, (want * 3839.0).ceil() as u64);
    }

    #[test]
    fn formula_scaling() {
        let base = asn_formula(&q(150.0, 5)).unwrap().fraction;
        assert!((asn_formula(&q(300.0, 5)).unwrap().fraction - base / 2.0).abs() < 1e-12);
        assert!((asn_formula(&q(150.0, 20)).unwrap().fraction - base * 2.0).abs() < 1e-12);
        assert!(!asn_formula(&q(0.01, 5)).unwrap().auditable);
        assert!(asn_formula(&q(0.0, 5)).is_err());
    }

    #[test]
    fn formula_fraction_depends_on_margin_only() {
        let small = asn_formula(&AsnQuery { population: 5000, ..q(150.0, 5) }).unwrap();
        let large = asn_formula(&AsnQuery { population: 1_000_000, ..q(150.0, 5) }).unwrap();
        assert_eq!(small.fraction, large.fraction);
        assert_eq!(large.sample_size, (small.fraction * 1e6).ceil() as u64);
    }

    fn landslide() -> Profile {
        let mut v = Vec::new();
        for (n, r) in [(500, vec![0, 1]), (300, vec![1, 2]), (150, vec![2, 1]), (50, vec![])] {
            v.extend(std::iter::repeat_n(Ranking::new(r).unwrap(), n));
        }
        Profile::new(v, 3).unwrap()
    }

    #[test]
    fn greedy_search_picks_largest_coherent() {
        let p = landslide();
        let (lam, g) = greedy_lam_search(&p, &GraphParams::new(1, 0.0), &[0.0, 20.0, 100.0, 1000.0]).unwrap();
        assert_eq!(lam, 20.0);
        assert!(coherence_check(&g).is_coherent());
        assert!(greedy_lam_search(&p, &GraphParams::new(1, 0.0), &[20.0, 0.0]).is_err());
    }

    #[test]
    fn empirical_asn_noiseless() {
        let p = landslide();
        let g = build_audit_graph(&p, &GraphParams::new(1, 20.0)).unwrap();
        let cfg = AuditConfig::new(0, 20.0);
        let a = empirical_asn(&p, &g, &cfg, 0.9, 20).unwrap();
        let n = a.sample_size.unwrap();
        assert!(n > 0 && n < p.len());
        let below = a.points.iter().filter(|x| x.sample_size < n).all(|x| x.success_rate < 0.9);
        assert!(below, "{:?}", a.points);
    }

    #[test]
    fn csv_header() {
        let row = AsnRow::new(
            "x",
            1000,
            40.0,
            &AsnPoint {
                sample_size: 200,
                success_rate: 0.95,
                trials: 50,
            },
        );
        let s = asn_csv(&[row]).unwrap();
        assert_eq!(s.lines().next().unwrap(), "profile,N,lam,lam_pct,n,n_pct,success_rate,trials");
        assert_eq!(s.lines().nth(1).unwrap(), "x,1000,40.0,4.0,200,20.0,0.95,50");
        assert!(asn_csv(&[]).unwrap().starts_with("profile,N"));
    }
}
