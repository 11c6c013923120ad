//! Speed process marginals and projections, and ring stationarity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::queue::{fm_sample_stationary, DensityVector};
use crate::rng::{child_seed, stream};
use crate::seq::{Label, Window, HOLE};
use crate::stats::{bonferroni, ks_distance_mixed, ks_p_value, ks_two_sample, welch_t, EmpiricalCdf, PassRule, TestReport};
use crate::tasep::{clean_sites, speed_process_estimate, stationarity_probe_with, Direction, ProbeOptions};

/// Speed estimates of the seam-free sites of one ring run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedRun {
    pub first_site: usize,
    pub speeds: Vec<f64>,
}

/// Fraction of `T` kept between the clean sites and the seam.
pub const SEAM_FRACTION: f64 = 0.9;

/// One run of the fully labelled ring per replicate, seeded
/// `child_seed(seed, "speed", r)`.
pub fn speed_runs(len: usize, t: f64, reps: usize, seed: u64) -> Result<Vec<SpeedRun>> {
    let clean = clean_sites(len, t, SEAM_FRACTION);
    if clean.len() < 2 {
        return Err(Error::param("L", format!("ring of {len} sites has no seam-free block at T = {t}")));
    }
    (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let est = speed_process_estimate(len, t, child_seed(seed, "speed", r))?;
            Ok(SpeedRun {
                first_site: clean.start,
                speeds: est[clean.clone()].iter().map(|e| e.estimate).collect(),
            })
        })
        .collect()
}

/// KS distance of all pooled speed estimates against Uniform[-1, 1]. The
/// estimates within a run are dependent, so the test is on the distance;
/// the p-value is reported as if they were not.
pub fn speed_marginal(runs: &[SpeedRun], max_distance: f64) -> Result<TestReport> {
    let sample = EmpiricalCdf::new(runs.iter().flat_map(|r| r.speeds.iter().copied()).collect())?;
    let cdf = |v: f64| ((v + 1.0) / 2.0).clamp(0.0, 1.0);
    let d = ks_distance_mixed(&sample, cdf, cdf);
    Ok(TestReport::new("speed/marginal_uniform", d, Some(ks_p_value(d, sample.len() as f64)), PassRule::StatisticBelow, max_distance)
        .with("values", sample.len())
        .with("runs", runs.len())
        .with("mean", sample.mean())
        .with("variance", sample.variance()))
}

/// Densities for the projection `U -> min{j : U <= c_j}`: `P(U <= c) = (1 + c) / 2`.
pub fn cutoff_densities(cutoffs: &[f64]) -> Result<DensityVector> {
    if cutoffs.is_empty() || cutoffs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("cutoffs", "need strictly increasing cutoffs"));
    }
    if cutoffs[0] <= -1.0 || cutoffs[cutoffs.len() - 1] >= 1.0 {
        return Err(Error::param("cutoffs", "must lie strictly inside (-1, 1)"));
    }
    let mut l = vec![(1.0 + cutoffs[0]) / 2.0];
    l.extend(cutoffs.windows(2).map(|w| (w[1] - w[0]) / 2.0));
    DensityVector::new(l)
}

pub fn project(speeds: &[f64], cutoffs: &[f64]) -> Vec<Label> {
    speeds
        .iter()
        .map(|&u| match cutoffs.iter().position(|&c| u <= c) {
            Some(j) => j as Label + 1,
            None => HOLE,
        })
        .collect()
}

/// Class densities, then adjacent ordered pair frequencies, of a block.
fn block_features(labels: &[Label], m: usize) -> Vec<f64> {
    let idx = |l: Label| if l == HOLE { m } else { (l - 1) as usize };
    let mut dens = vec![0.0; m];
    for &l in labels {
        if l != HOLE {
            dens[idx(l)] += 1.0;
        }
    }
    let n = labels.len() as f64;
    let mut pairs = vec![0.0; (m + 1) * (m + 1)];
    for w in labels.windows(2) {
        pairs[idx(w[0]) * (m + 1) + idx(w[1])] += 1.0;
    }
    dens.iter()
        .map(|c| c / n)
        .chain(pairs.iter().map(|c| c / (n - 1.0)))
        .collect()
}

fn feature_names(m: usize) -> Vec<String> {
    let name = |k: usize| if k == m { "H".to_string() } else { (k + 1).to_string() };
    let mut out: Vec<String> = (0..m).map(|k| format!("density[{}]", k + 1)).collect();
    for a in 0..=m {
        for b in 0..=m {
            out.push(format!("pair[{},{}]", name(a), name(b)));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub cutoffs: Vec<f64>,
    pub seed: u64,
    /// Family-wise floor, split by Bonferroni.
    pub p_floor: f64,
    /// Multiline burn-in sites for the comparison samples.
    pub margin: usize,
    /// Length of the central window whose class counts are compared.
    pub count_window: usize,
}

impl ProjectionConfig {
    pub fn new(cutoffs: Vec<f64>, seed: u64) -> Self {
        ProjectionConfig {
            cutoffs,
            seed,
            p_floor: 0.001,
            margin: 2000,
            count_window: 10,
        }
    }
}

/// Projected speed blocks against blocks of the right-jump multiline
/// measure at the matching densities (the left-jump sample read backwards).
/// Each feature (class densities, adjacent pair frequencies) gets a Welch
/// test across replicates, and the count of class `<= j` in a short central
/// window a two-sample KS test.
///
/// Counts are not compared over whole blocks: at finite `T` the number of
/// slow particles in a block of length comparable to `T^{2/3}` or more is
/// pinned by height fluctuations of order `T^{1/3}`, far below the
/// binomial-size spread of the limit.
pub fn speed_projection_suite(runs: &[SpeedRun], cfg: &ProjectionConfig) -> Result<Vec<TestReport>> {
    let lambdas = cutoff_densities(&cfg.cutoffs)?;
    let m = cfg.cutoffs.len();
    if runs.len() < 2 {
        return Err(Error::param("reps", "need at least two runs"));
    }
    let block = runs[0].speeds.len();
    if cfg.count_window == 0 || cfg.count_window > block {
        return Err(Error::param("count_window", format!("must be in 1..={block}")));
    }
    let centre = (block - cfg.count_window) / 2..(block + cfg.count_window) / 2;
    let speed_blocks: Vec<Vec<Label>> = runs.iter().map(|r| project(&r.speeds, &cfg.cutoffs)).collect();
    let fm_blocks: Vec<Vec<Label>> = (0..runs.len() as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<Label>> {
            let mut rng = stream(cfg.seed, "projection-fm", r);
            let window = Window::int(-(cfg.margin as i64), block as i64 - 1)?;
            let v = fm_sample_stationary(&lambdas, window, &mut rng)?.output;
            let mut labels = v.slice(Window::int(0, block as i64 - 1)?)?.labels().to_vec();
            labels.reverse();
            Ok(labels)
        })
        .collect::<Result<_>>()?;

    let fs: Vec<Vec<f64>> = speed_blocks.iter().map(|b| block_features(b, m)).collect();
    let ff: Vec<Vec<f64>> = fm_blocks.iter().map(|b| block_features(b, m)).collect();
    let names = feature_names(m);
    let floor = bonferroni(cfg.p_floor, names.len() + m);
    let mut out = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let a: Vec<f64> = fs.iter().map(|f| f[k]).collect();
        let b: Vec<f64> = ff.iter().map(|f| f[k]).collect();
        out.push(welch_t(&format!("projection/{name}"), &a, &b, floor)?);
    }
    for j in 1..=m as Label {
        let count = |b: &Vec<Label>| b[centre.clone()].iter().filter(|&&l| l <= j).count() as f64;
        let a = EmpiricalCdf::new(speed_blocks.iter().map(count).collect())?;
        let b = EmpiricalCdf::new(fm_blocks.iter().map(count).collect())?;
        out.push(ks_two_sample(&format!("projection/count_leq{j}"), &a, &b, floor)?);
    }
    Ok(out
        .into_iter()
        .map(|r| {
            r.with("cutoffs", format!("{:?}", cfg.cutoffs))
                .with("block", block)
                .with("count_window", cfg.count_window)
                .with("runs", runs.len())
                .with("seed", cfg.seed)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityConfig {
    pub lambdas: Vec<f64>,
    pub len: usize,
    pub t: f64,
    pub reps: usize,
    pub seed: u64,
    pub direction: Direction,
    pub p_floor: f64,
}

impl StationarityConfig {
    pub fn new(lambdas: Vec<f64>, len: usize, t: f64, reps: usize, seed: u64) -> Self {
        StationarityConfig {
            lambdas,
            len,
            t,
            reps,
            seed,
            direction: Direction::Left,
            p_floor: 0.01,
        }
    }
}

/// Multiline sample on a ring, evolved by TASEP: see
/// [`stationarity_probe_with`].
pub fn stationarity_suite(cfg: &StationarityConfig) -> Result<TestReport> {
    let lambdas = DensityVector::new(cfg.lambdas.clone())?;
    let opts = ProbeOptions {
        direction: cfg.direction,
        margin: None,
        p_floor: cfg.p_floor,
    };
    stationarity_probe_with(&lambdas, cfg.len, cfg.t, cfg.reps, cfg.seed, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_densities_use_half_lebesgue() {
        let d = cutoff_densities(&[-0.5, 0.0, 0.5]).unwrap();
        assert_eq!(d.lambdas(), &[0.25, 0.25, 0.25]);
        assert!(cutoff_densities(&[0.5, 0.0]).is_err());
        assert!(cutoff_densities(&[1.0]).is_err());
    }

    #[test]
    fn projection_labels() {
        let l = project(&[-0.9, -0.2, 0.3, 0.9], &[-0.5, 0.5]);
        assert_eq!(l, vec![1, 2, 2, HOLE]);
    }

    #[test]
    fn features_of_a_block() {
        let f = block_features(&[1, HOLE, 1, 1], 1);
        assert_eq!(f[0], 0.75);
        // pairs (1,1), (1,H), (H,1), (H,H) over three adjacent pairs
        assert_eq!(&f[1..], &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]);
        assert_eq!(feature_names(1).len(), f.len());
    }

    #[test]
    fn zero_time_control_fails() {
        let runs = speed_runs(400, 0.0, 10, 1);
        // with T = 0 every site is seam-free and every speed is 0
        let runs = runs.unwrap();
        assert!(runs.iter().all(|r| r.speeds.iter().all(|&s| s == 0.0)));
        let mut cfg = ProjectionConfig::new(vec![-0.5, 0.5], 3);
        cfg.margin = 200;
        cfg.count_window = 1000;
        assert!(speed_projection_suite(&runs, &cfg).is_err());
        cfg.count_window = 10;
        let reports = speed_projection_suite(&runs, &cfg).unwrap();
        assert!(reports.iter().any(|r| !r.passed));
        assert!(!speed_marginal(&runs, 0.05).unwrap().passed);
    }

    #[test]
    fn short_runs_are_roughly_uniform() {
        let runs = speed_runs(400, 150.0, 6, 2).unwrap();
        let r = speed_marginal(&runs, 0.15).unwrap();
        assert!(r.passed, "{}", r.summary_line());
    }
}
