use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::trial_rng;
use crate::error::Result;

/// Points in each simulated population.
pub const DESIGN_POPULATION: usize = 1000;
/// Ones per component, on the boundary of every local null.
pub const DESIGN_SUCCESSES: usize = 200;
/// Points inspected per trial.
pub const DESIGN_SAMPLE: usize = 100;

/// Rejection designs on binary-hypercube populations whose components all
/// hold exactly the boundary count of ones, so every local null is true.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DesignScenario {
    /// Six components; reject when every count falls below 14.
    P6,
    /// Nine components; reject when any count falls below 14.
    P9Naive,
    /// Nine components; reject when any count is at most 10.
    P9Budgeted,
    /// Nine components; reject when the first count falls below 14.
    P9SingleEdge,
}

impl DesignScenario {
    pub const ALL: [DesignScenario; 4] = [
        DesignScenario::P6,
        DesignScenario::P9Naive,
        DesignScenario::P9Budgeted,
        DesignScenario::P9SingleEdge,
    ];

    pub fn dimension(self) -> usize {
        match self {
            DesignScenario::P6 => 6,
            _ => 9,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DesignScenario::P6 => "P6",
            DesignScenario::P9Naive => "P9-naive",
            DesignScenario::P9Budgeted => "P9-budgeted",
            DesignScenario::P9SingleEdge => "P9-single-edge",
        }
    }

    /// Whether the design rejects given the per-component counts of ones in the sample.
    pub fn rejects(self, counts: &[usize]) -> bool {
        match self {
            DesignScenario::P6 => counts.iter().all(|&k| k < 14),
            DesignScenario::P9Naive => counts.iter().any(|&k| k < 14),
            DesignScenario::P9Budgeted => counts.iter().any(|&k| k <= 10),
            DesignScenario::P9SingleEdge => counts[0] < 14,
        }
    }
}

impl std::str::FromStr for DesignScenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        DesignScenario::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown design {s:?}; expected one of P6, P9-naive, P9-budgeted, P9-single-edge"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub design: DesignScenario,
    pub trials: usize,
    pub errors: usize,
}

impl DesignReport {
    /// Empirical Type-I error rate.
    pub fn risk(&self) -> f64 {
        self.errors as f64 / self.trials.max(1) as f64
    }
}

/// Counts the trials in which `scenario` wrongly rejects: each trial draws a
/// fresh population and inspects its first points.
pub fn verify_design(scenario: DesignScenario, trials: usize, seed: u64) -> DesignReport {
    assert!(trials >= 1, "need at least one trial");
    let errors = (0..trials as u64)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = trial_rng(seed, t);
            let counts: Vec<usize> = (0..scenario.dimension())
                .map(|_| {
                    index::sample(&mut rng, DESIGN_POPULATION, DESIGN_SUCCESSES)
                        .iter()
                        .filter(|&i| i < DESIGN_SAMPLE)
                        .count()
                })
                .collect();
            scenario.rejects(&counts)
        })
        .count();
    DesignReport {
        design: scenario,
        trials,
        errors,
    }
}

/// CSV with columns `design,trials,errors,risk`.
pub fn design_csv(reports: &[DesignReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["design", "trials", "errors", "risk"]).map_err(csv_err)?;
    for r in reports {
        w.write_record([
            r.design.name().to_string(),
            r.trials.to_string(),
            r.errors.to_string(),
            format!("{:.6}", r.risk()),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::error::Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Config(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{hypergeom_cdf, HypergeomQuery};

    #[test]
    fn rules() {
        assert!(DesignScenario::P6.rejects(&[13; 6]));
        assert!(!DesignScenario::P6.rejects(&[13, 13, 13, 13, 13, 14]));
        assert!(DesignScenario::P9Naive.rejects(&[20, 20, 13, 20, 20, 20, 20, 20, 20]));
        assert!(!DesignScenario::P9Budgeted.rejects(&[11; 9]));
        assert!(!DesignScenario::P9SingleEdge.rejects(&[14, 0, 0, 0, 0, 0, 0, 0, 0]));
        assert_eq!("p9-naive".parse::<DesignScenario>().unwrap(), DesignScenario::P9Naive);
    }

    #[test]
    fn rates_match_closed_form() {
        let p = |x| {
            hypergeom_cdf(HypergeomQuery {
                population: 1000,
                successes: 200,
                draws: 100,
                observed: x,
            })
        };
        let single = p(13);
        let expect = [
            (DesignScenario::P9Naive, 1.0 - (1.0 - single).powi(9)),
            (DesignScenario::P9Budgeted, 1.0 - (1.0 - p(10)).powi(9)),
            (DesignScenario::P9SingleEdge, single),
        ];
        for (d, want) in expect {
            let r = verify_design(d, 5000, 7);
            let sd = (want * (1.0 - want) / 5000.0).sqrt();
            assert!((r.risk() - want).abs() < 4.0 * sd, "{d:?}: {} vs {want}", r.risk());
        }
        assert_eq!(verify_design(DesignScenario::P6, 5000, 7).errors, 0);
    }

    #[test]
    fn csv_layout() {
        let s = design_csv(&[DesignReport {
            design: DesignScenario::P9Naive,
            trials: 4,
            errors: 1,
        }])
        .unwrap();
        assert_eq!(s, "design,trials,errors,risk\nP9-naive,4,1,0.250000\n");
    }
}
