//! Finite-dimensional laws of the scaled multiline lines, the horizon
//! sampler against its closed forms, and jump counts.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horizon::{diff_cdf, expected_jumps, sample_sh, Grid, ShOptions};
use crate::rng::{child_seed, stream};
use crate::scaling::{drift_grid, h_n_lines_from_fm, jump_count_finite_n, ScalingParams};
use crate::stats::{bonferroni, ks_distance_mixed, ks_one_sample, ks_one_sample_mixed, normal_cdf, EmpiricalCdf, PassRule, TestReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FddConfig {
    pub drifts: Vec<f64>,
    pub n: f64,
    /// Positive evaluation points.
    pub xs: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    /// Family-wise floor for the marginal KS tests.
    pub p_floor: f64,
    /// Largest accepted KS distance of the two-point law at finite `N`.
    pub two_point_max_distance: f64,
    /// Multiline burn-in sites; `None` uses the default of [`ScalingParams`].
    pub margin: Option<i64>,
}

impl FddConfig {
    pub fn new(drifts: Vec<f64>, n: f64, xs: Vec<f64>, reps: usize, seed: u64) -> Self {
        FddConfig {
            drifts,
            n,
            xs,
            reps,
            seed,
            p_floor: 0.01,
            two_point_max_distance: 0.05,
            margin: None,
        }
    }

    fn validate(&self) -> Result<ScalingParams> {
        if self.xs.is_empty() || self.xs.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::param("x", "need positive evaluation points"));
        }
        if self.reps < 10 {
            return Err(Error::param("reps", "need at least 10 replicates"));
        }
        let x0 = self.xs.iter().copied().fold(0.0, f64::max);
        ScalingParams::new(self.n, self.drifts.clone(), x0)
    }
}

/// The lattice point nearest to `x`: index `k` with `x' = k / (2 N^{2/3})`.
pub fn lattice_point(n: f64, x: f64) -> (i64, f64) {
    let step = 1.0 / (2.0 * n.powf(2.0 / 3.0));
    let k = (x / step).round() as i64;
    (k, k as f64 * step)
}

/// Per replicate: jittered line values at each `(drift, x)`, and raw and
/// jittered increment differences for each adjacent drift pair and `x`.
struct FddDraw {
    values: Vec<f64>,
    diffs: Vec<f64>,
    jittered_diffs: Vec<f64>,
}

/// Values at a lattice point move in steps of `2 N^{-1/3}`; adding a uniform
/// of that width spreads each atom over its cell so the law can be compared
/// with a continuous one. Increment differences are `2 N^{-1/3} C` with
/// `C >= 0` an integer: `C = 0` stays an atom at 0, `C >= 1` is spread over
/// `2 N^{-1/3} (C - 1/2, C + 1/2)`.
fn fdd_draw(cfg: &FddConfig, params: &ScalingParams, r: u64) -> Result<FddDraw> {
    let mut rng = stream(cfg.seed, "fdd", r);
    let lines = h_n_lines_from_fm(params, cfg.margin, &mut rng)?.lines;
    let h = params.n.cbrt().recip();
    let w = params.half_width();
    let at = |line: usize, k: i64| lines[line].values()[(w + k) as usize];
    let mut values = Vec::new();
    for j in 0..lines.len() {
        for &x in &cfg.xs {
            let (k, _) = lattice_point(params.n, x);
            values.push(at(j, k) + h * rng.random_range(-1.0..1.0));
        }
    }
    let mut diffs = Vec::new();
    let mut jittered_diffs = Vec::new();
    for j in 1..lines.len() {
        for &x in &cfg.xs {
            let (k, _) = lattice_point(params.n, x);
            let d = (at(j, k) - at(j, -k)) - (at(j - 1, k) - at(j - 1, -k));
            let c = (d / (2.0 * h)).round();
            let u: f64 = rng.random();
            diffs.push(2.0 * h * c.max(0.0));
            jittered_diffs.push(if c <= 0.0 { 0.0 } else { 2.0 * h * (c - 0.5 + u) });
        }
    }
    Ok(FddDraw {
        values,
        diffs,
        jittered_diffs,
    })
}

fn two_point_cdf(gap: f64, x: f64) -> impl Fn(f64) -> f64 {
    move |z| if z < 0.0 { 0.0 } else { diff_cdf(z, x, gap).unwrap_or(f64::NAN) }
}

fn two_point_cdf_left(gap: f64, x: f64) -> impl Fn(f64) -> f64 {
    move |z| if z <= 0.0 { 0.0 } else { diff_cdf(z, x, gap).unwrap_or(f64::NAN) }
}

/// KS distance of an increment-difference sample against the two-point law.
pub fn two_point_distance(sample: &EmpiricalCdf, gap: f64, x: f64) -> f64 {
    ks_distance_mixed(sample, two_point_cdf(gap, x), two_point_cdf_left(gap, x))
}

/// Marginal and two-point laws of the multiline lines at scale `N`:
/// each jittered line value at the lattice point `x'` nearest `x` against
/// Normal(2μx', 2x') (KS, Bonferroni floor), and each adjacent pair's
/// increment difference over `[-x', x']` against the horizon two-point law.
/// The two-point statistic is the KS distance of the lattice law itself, so
/// it includes the discretisation error; it must stay below
/// `two_point_max_distance`. The jittered distance and its p-value are
/// recorded as metadata.
pub fn fdd_suite(cfg: &FddConfig) -> Result<Vec<TestReport>> {
    let params = cfg.validate()?;
    let draws: Vec<FddDraw> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| fdd_draw(cfg, &params, r))
        .collect::<Result<_>>()?;
    let k = cfg.drifts.len();
    let nx = cfg.xs.len();
    let floor = bonferroni(cfg.p_floor, k * nx);
    let mut out = Vec::new();
    for (j, &mu) in cfg.drifts.iter().enumerate() {
        for (i, &x) in cfg.xs.iter().enumerate() {
            let (_, xl) = lattice_point(cfg.n, x);
            let sample = EmpiricalCdf::new(draws.iter().map(|d| d.values[j * nx + i]).collect())?;
            let sd = (2.0 * xl).sqrt();
            let rep = ks_one_sample(&format!("fdd/marginal mu={mu} x={x}"), &sample, |v| normal_cdf((v - 2.0 * mu * xl) / sd), floor)?;
            out.push(rep.with("lattice_x", xl).with("mean", sample.mean()).with("variance", sample.variance()));
        }
    }
    for j in 1..k {
        let gap = cfg.drifts[j] - cfg.drifts[j - 1];
        for (i, &x) in cfg.xs.iter().enumerate() {
            let (_, xl) = lattice_point(cfg.n, x);
            let column = |f: fn(&FddDraw) -> &Vec<f64>| -> Result<EmpiricalCdf> {
                EmpiricalCdf::new(draws.iter().map(|d| f(d)[(j - 1) * nx + i]).collect())
            };
            let raw = column(|d| &d.diffs)?;
            let smooth = column(|d| &d.jittered_diffs)?;
            let distance = two_point_distance(&raw, gap, xl);
            let jittered = ks_one_sample_mixed(
                "jittered",
                &smooth,
                two_point_cdf(gap, xl),
                two_point_cdf_left(gap, xl),
                cfg.p_floor,
            )?;
            out.push(
                TestReport::new(
                    format!("fdd/two_point mu={},{} x={x}", cfg.drifts[j - 1], cfg.drifts[j]),
                    distance,
                    None,
                    PassRule::StatisticBelow,
                    cfg.two_point_max_distance,
                )
                .with("lattice_x", xl)
                .with("atom_at_zero", raw.eval(0.0))
                .with("model_atom_at_zero", diff_cdf(0.0, xl, gap)?)
                .with("jittered_distance", jittered.statistic)
                .with("jittered_p_value", jittered.p_value.unwrap_or(f64::NAN)),
            );
        }
    }
    Ok(out
        .into_iter()
        .map(|r| r.with("N", cfg.n).with("reps", cfg.reps).with("seed", cfg.seed))
        .collect())
}

/// Configuration of the horizon sampler checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShCheckConfig {
    pub drifts: Vec<f64>,
    pub xs: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub step: f64,
    pub options: ShOptions,
    pub p_floor: f64,
    /// If set, the two-point reports are judged by KS distance below this
    /// value instead of by p-value.
    pub two_point_max_distance: Option<f64>,
}

impl ShCheckConfig {
    pub fn new(drifts: Vec<f64>, xs: Vec<f64>, reps: usize, seed: u64) -> Self {
        ShCheckConfig {
            drifts,
            xs,
            reps,
            seed,
            step: 1.0 / 16.0,
            options: ShOptions::default(),
            p_floor: 0.01,
            two_point_max_distance: None,
        }
    }
}

/// The fdd tests applied to [`sample_sh`] output, where the laws are exact
/// for two lines; evaluation points are rounded to the sampler grid.
pub fn sh_fdd_suite(cfg: &ShCheckConfig) -> Result<Vec<TestReport>> {
    if cfg.xs.is_empty() || cfg.xs.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::param("x", "need positive evaluation points"));
    }
    let x0 = cfg.xs.iter().copied().fold(0.0, f64::max);
    let half = (x0 / cfg.step).ceil() * cfg.step;
    let grid = Grid::symmetric(half, cfg.step)?;
    let pts: Vec<(usize, usize, f64)> = cfg
        .xs
        .iter()
        .map(|&x| {
            let k = (x / cfg.step).round().max(1.0);
            let c = (half / cfg.step).round();
            ((c + k) as usize, (c - k) as usize, k * cfg.step)
        })
        .collect();
    let samples: Vec<Vec<Vec<f64>>> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<Vec<f64>>> {
            let s = sample_sh(&cfg.drifts, grid, cfg.options, child_seed(cfg.seed, "sh-fdd", r))?;
            Ok(s.lines.iter().map(|l| l.values().to_vec()).collect())
        })
        .collect::<Result<_>>()?;
    let k = cfg.drifts.len();
    let tests = k * pts.len() + (k - 1) * pts.len();
    let floor = bonferroni(cfg.p_floor, tests);
    let mut out = Vec::new();
    for (j, &mu) in cfg.drifts.iter().enumerate() {
        for &(hi, _, x) in &pts {
            let sample = EmpiricalCdf::new(samples.iter().map(|s| s[j][hi]).collect())?;
            let sd = (2.0 * x).sqrt();
            out.push(ks_one_sample(&format!("sh/marginal mu={mu} x={x}"), &sample, |v| normal_cdf((v - 2.0 * mu * x) / sd), floor)?);
        }
    }
    for j in 1..k {
        let gap = cfg.drifts[j] - cfg.drifts[j - 1];
        for &(hi, lo, x) in &pts {
            let sample = EmpiricalCdf::new(
                samples
                    .iter()
                    .map(|s| {
                        let d = (s[j][hi] - s[j][lo]) - (s[j - 1][hi] - s[j - 1][lo]);
                        // the difference is a sum of suprema; rounding leaves
                        // residues of order 1e-15 where it should vanish
                        if d < 1e-9 { 0.0 } else { d }
                    })
                    .collect(),
            )?;
            let rep = ks_one_sample_mixed(
                &format!("sh/two_point mu={},{} x={x}", cfg.drifts[j - 1], cfg.drifts[j]),
                &sample,
                two_point_cdf(gap, x),
                two_point_cdf_left(gap, x),
                floor,
            )?;
            let rep = match cfg.two_point_max_distance {
                Some(d) => rep.judged(PassRule::StatisticBelow, d),
                None => rep,
            };
            out.push(rep.with("atom_at_zero", sample.eval(0.0)).with("model_atom_at_zero", diff_cdf(0.0, x, gap)?));
        }
    }
    Ok(out
        .into_iter()
        .map(|r| {
            r.with("reps", cfg.reps)
                .with("seed", cfg.seed)
                .with("step", cfg.step)
                .with("tail", format!("{:?}", cfg.options.tail))
        })
        .collect())
}

/// Two-point KS distance of the multiline lines at each `N`; passes when the
/// distance decreases strictly from one `N` to the next.
pub fn fdd_trend(drifts: [f64; 2], ns: &[f64], x: f64, reps: usize, seed: u64) -> Result<TestReport> {
    if ns.len() < 2 {
        return Err(Error::param("N", "need at least two scales"));
    }
    let mut distances = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let cfg = FddConfig::new(drifts.to_vec(), n, vec![x], reps, child_seed(seed, "fdd-trend", i as u64));
        let reports = fdd_suite(&cfg)?;
        let two = reports
            .iter()
            .find(|r| r.name.starts_with("fdd/two_point"))
            .ok_or_else(|| Error::pre("no two-point report"))?;
        distances.push(two.statistic);
    }
    let increases = distances.windows(2).filter(|w| w[1] >= w[0]).count();
    Ok(TestReport::exact("fdd/two_point_trend", increases as u64, (ns.len() - 1) as u64)
        .with("N", format!("{ns:?}"))
        .with("distances", format!("{distances:?}"))
        .with("reps", reps)
        .with("seed", seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpConfig {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub x0: f64,
    pub n: f64,
    pub reps: usize,
    pub seed: u64,
    /// Accepted relative deviation of the mean from the limit value.
    pub rel_tol: f64,
    pub margin: Option<i64>,
}

impl JumpConfig {
    pub fn new(n: f64, reps: usize, seed: u64) -> Self {
        JumpConfig {
            lo: -1.0,
            hi: 1.0,
            step: 0.01,
            x0: 1.0,
            n,
            reps,
            seed,
            rel_tol: 0.1,
            margin: None,
        }
    }
}

/// Mean finite-`N` jump count on the drift grid against the horizon's
/// expected number of jump directions on `[lo, hi]` over `[-x0, x0]`.
pub fn jump_suite(cfg: &JumpConfig) -> Result<TestReport> {
    let grid = drift_grid(cfg.lo, cfg.hi, cfg.step)?;
    let counts: Vec<f64> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, "jumps", r);
            jump_count_finite_n(&grid, cfg.n, cfg.x0, cfg.margin, &mut rng).map(|c| c as f64)
        })
        .collect::<Result<_>>()?;
    let target = expected_jumps(cfg.lo, cfg.hi, -cfg.x0, cfg.x0)?;
    let m = crate::stats::mean(&counts);
    let se = (crate::stats::sample_variance(&counts) / counts.len() as f64).sqrt();
    Ok(TestReport::new("jumps/mean_count", (m / target - 1.0).abs(), None, PassRule::StatisticBelow, cfg.rel_tol)
        .with("mean", m)
        .with("std_error", se)
        .with("target", target)
        .with("grid_points", grid.len())
        .with("N", cfg.n)
        .with("x0", cfg.x0)
        .with("reps", cfg.reps)
        .with("seed", cfg.seed))
}
