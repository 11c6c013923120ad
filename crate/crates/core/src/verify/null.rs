//! Reduced configurations of the statistical suites under their nulls, for
//! calibration across many seeds.

use serde::{Deserialize, Serialize};

use super::{
    burke_suite, fdd_suite, null_calibration, sh_fdd_suite, speed_marginal, speed_projection_suite, speed_runs, stationarity_suite,
    BurkeConfig, FddConfig, ProjectionConfig, ShCheckConfig, StationarityConfig, TestReport,
};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullSuite {
    Burke,
    Horizon,
    Fdd,
    Speed,
    Stationarity,
}

impl NullSuite {
    pub const ALL: [NullSuite; 5] = [NullSuite::Burke, NullSuite::Horizon, NullSuite::Fdd, NullSuite::Speed, NullSuite::Stationarity];

    pub fn name(self) -> &'static str {
        match self {
            NullSuite::Burke => "burke",
            NullSuite::Horizon => "horizon",
            NullSuite::Fdd => "fdd",
            NullSuite::Speed => "speed",
            NullSuite::Stationarity => "stationarity",
        }
    }

    /// One run of the suite at its null configuration.
    ///
    /// Burke and the two-line horizon checks are exact nulls. Stationarity
    /// relies on the multiline initial queues, whose class gaps here are wide
    /// enough to relax within the burn-in. The fdd and speed runs are at
    /// sizes where the finite-`N` and finite-`T` biases sit well below the
    /// resolution of the tests.
    pub fn run(self, seed: u64) -> Result<Vec<TestReport>> {
        match self {
            NullSuite::Burke => burke_suite(&BurkeConfig::new(0.5, 0.05, 10_000, 50, seed)),
            NullSuite::Horizon => sh_fdd_suite(&ShCheckConfig::new(vec![0.0, 1.0], vec![0.5, 1.0], 1000, seed)),
            NullSuite::Fdd => {
                let mut cfg = FddConfig::new(vec![0.0, 1.0], 1e4, vec![1.0], 1000, seed);
                cfg.two_point_max_distance = 0.08;
                fdd_suite(&cfg)
            }
            NullSuite::Speed => {
                let runs = speed_runs(1000, 400.0, 12, seed)?;
                let mut cfg = ProjectionConfig::new(vec![-0.5, 0.0, 0.5], seed);
                cfg.margin = 1000;
                let mut out = speed_projection_suite(&runs, &cfg)?;
                out.push(speed_marginal(&runs, 0.1)?);
                Ok(out)
            }
            NullSuite::Stationarity => Ok(vec![stationarity_suite(&StationarityConfig::new(vec![0.3, 0.2, 0.1], 400, 200.0, 40, seed))?]),
        }
    }
}

/// [`null_calibration`] for each suite.
pub fn null_calibration_all(suites: &[NullSuite], seeds: u64, max_failures: u64, base_seed: u64) -> Result<Vec<TestReport>> {
    suites
        .iter()
        .map(|&s| null_calibration(s.name(), seeds, max_failures, base_seed, |seed| s.run(seed)))
        .collect()
}
