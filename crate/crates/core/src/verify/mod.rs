//! Named test suites, each producing [`TestReport`]s.

pub mod burke;
pub mod exact;
pub mod fdd;
pub mod null;
pub mod speed;

use std::io::Write;

pub use crate::stats::{all_passed, EmpiricalCdf, PassRule, TestReport};
pub use burke::{burke_suite, BurkeConfig, BurkeInit};
pub use exact::{exact_suites, interchange_suite, lemma_cl_batch, minplus_batch, monotonicity_suite, walk_oracle_batch, ExactConfig};
pub use fdd::{fdd_suite, fdd_trend, jump_suite, sh_fdd_suite, FddConfig, JumpConfig, ShCheckConfig};
pub use null::{null_calibration_all, NullSuite};
pub use speed::{
    speed_marginal, speed_projection_suite, speed_runs, stationarity_suite, ProjectionConfig, SpeedRun, StationarityConfig,
};

use crate::error::Result;

/// One JSON object per line.
pub fn write_jsonl<W: Write>(reports: &[TestReport], mut w: W) -> Result<()> {
    for r in reports {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(text: &str) -> Result<Vec<TestReport>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Human-readable table: one line per report and a closing count.
pub fn summary_table(reports: &[TestReport]) -> String {
    let mut s = String::new();
    for r in reports {
        s.push_str(&r.summary_line());
        s.push('\n');
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    s.push_str(&format!("{} reports, {} failed\n", reports.len(), failed));
    s
}

/// Runs `suite` for seeds `0..seeds` (through `child_seed`) and counts the
/// seeds on which every report passed. Passes if at most `max_failures`
/// seeds failed.
pub fn null_calibration<F>(name: &str, seeds: u64, max_failures: u64, base_seed: u64, suite: F) -> Result<TestReport>
where
    F: Fn(u64) -> Result<Vec<TestReport>> + Sync,
{
    use rayon::prelude::*;
    let outcomes: Vec<bool> = (0..seeds)
        .into_par_iter()
        .map(|k| suite(crate::rng::child_seed(base_seed, "null", k)).map(|r| all_passed(&r)))
        .collect::<Result<_>>()?;
    let failures = outcomes.iter().filter(|&&ok| !ok).count() as u64;
    Ok(
        TestReport::new(format!("null/{name}"), failures as f64, None, PassRule::AtMost, max_failures as f64)
            .with("seeds", seeds)
            .with("passed_seeds", seeds - failures),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let reports = vec![
            TestReport::exact("a", 0, 10).with("seed", 3),
            TestReport::new("b", 0.2, Some(0.5), PassRule::PValueAbove, 0.01),
        ];
        let mut buf = Vec::new();
        write_jsonl(&reports, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(read_jsonl(&text).unwrap(), reports);
        assert!(summary_table(&reports).ends_with("2 reports, 0 failed\n"));
    }

    #[test]
    fn calibration_counts_failures() {
        let r = null_calibration("toy", 10, 2, 0, |s| {
            Ok(vec![TestReport::exact("x", s % 4, 1)])
        })
        .unwrap();
        let failed: f64 = r.statistic;
        assert!(failed > 0.0);
        assert_eq!(r.metadata["seeds"], "10");
    }
}
