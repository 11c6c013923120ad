//! Diffusive scaling of multi-type configurations towards horizon lines.
//!
//! With `N` the scaling parameter, a class-`≤ j` indicator sequence `b` is
//! turned into `H(x) = N^{-1/3} P[b](2 x N^{2/3})` where `P` is the height
//! map. Spatial grid spacing is therefore `1 / (2 N^{2/3})` and one lattice
//! step of height is `N^{-1/3}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::queue::{fm_sample_stationary, DensityVector};
use crate::seq::{height_map, BinarySeq, Label, MultiClassSeq, PathFn, Reflect, Window};

/// Scaling parameter, drifts and observation half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub n: f64,
    pub drifts: Vec<f64>,
    pub x0: f64,
}

impl ScalingParams {
    pub fn new(n: f64, drifts: Vec<f64>, x0: f64) -> Result<Self> {
        let p = ScalingParams { n, drifts, x0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x0 > 0.0) {
            return Err(Error::param("x0", "must be positive"));
        }
        check_drifts(&self.drifts, self.n)
    }

    /// Lattice half-width `w = ceil(2 x0 N^{2/3})`.
    pub fn half_width(&self) -> i64 {
        lattice_half_width(self.n, self.x0)
    }

    /// Default left margin `8 N^{1/3}` for the multiline sample.
    pub fn default_margin(&self) -> i64 {
        (8.0 * self.n.cbrt()).ceil() as i64
    }
}

fn check_drifts(drifts: &[f64], n: f64) -> Result<()> {
    if drifts.is_empty() {
        return Err(Error::param("drifts", "need at least one drift"));
    }
    if drifts.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("drifts", "must be strictly increasing"));
    }
    let bound = drifts[0].abs().max(drifts[drifts.len() - 1].abs()).powi(3);
    if !(n > bound) {
        return Err(Error::param("N", format!("need N > {bound} for these drifts, got {n}")));
    }
    Ok(())
}

pub fn lattice_half_width(n: f64, x0: f64) -> i64 {
    // Guard against 2 x0 N^{2/3} landing a hair above an integer.
    (2.0 * x0 * n.powf(2.0 / 3.0) - 1e-9).ceil() as i64
}

/// `λ_1 = (1 + μ_1 N^{-1/3}) / 2`, `λ_j = (μ_j - μ_{j-1}) N^{-1/3} / 2`.
pub fn densities_for_drifts(drifts: &[f64], n: f64) -> Result<DensityVector> {
    check_drifts(drifts, n)?;
    let s = n.cbrt().recip();
    let mut lambdas = vec![(1.0 + drifts[0] * s) / 2.0];
    lambdas.extend(drifts.windows(2).map(|w| (w[1] - w[0]) * s / 2.0));
    DensityVector::new(lambdas)
}

/// `x -> N^{-1/3} P[bits](2 x N^{2/3})` on the lattice points of
/// `[-w, w] / (2 N^{2/3})`, `w = ceil(2 x0 N^{2/3})`. The bits must cover
/// the sites `[-w, w - 1]`.
pub fn h_n_from_bits(bits: &BinarySeq, n: f64, x0: f64) -> Result<PathFn> {
    if !(n > 0.0) || !(x0 > 0.0) {
        return Err(Error::param("N, x0", "must be positive"));
    }
    let w = lattice_half_width(n, x0);
    let need = Window::int(-w, w - 1)?;
    if bits.lo() > need.lo || bits.hi() < need.hi {
        return Err(Error::pre(format!(
            "bits on [{}, {}] do not cover [{}, {}]",
            bits.lo(),
            bits.hi(),
            need.lo,
            need.hi
        )));
    }
    let p = height_map(&bits.slice(need)?)?;
    let scale = n.cbrt().recip();
    let step = 1.0 / (2.0 * n.powf(2.0 / 3.0));
    PathFn::new(
        -(w as f64) * step,
        step,
        p.values().iter().map(|v| v * scale).collect(),
    )
}

/// Multiline sample and the scaled lines it produces.
#[derive(Debug, Clone)]
pub struct FmLines {
    pub sample: MultiClassSeq,
    pub lines: Vec<PathFn>,
}

/// Samples `v ~ μ^λ` for the densities of `params` on `[-w - margin, w - 1]`
/// with stationary stage queues, and returns for each `j` the line built from
/// the reflected indicator `1[v(-i-1) <= j]`.
///
/// The multiline measure is stationary for left jumps; reflecting the index
/// turns it into the right-jump measure that projections of the speed process
/// have, so these lines approximate `(G_{μ_1}, ..., G_{μ_k})`.
pub fn h_n_lines_from_fm<R: Rng + ?Sized>(params: &ScalingParams, margin: Option<i64>, rng: &mut R) -> Result<FmLines> {
    params.validate()?;
    let lambdas = densities_for_drifts(&params.drifts, params.n)?;
    let w = params.half_width();
    let margin = margin.unwrap_or_else(|| params.default_margin());
    let window = Window::int(-w - margin, w - 1)?;
    let sample = fm_sample_stationary(&lambdas, window, rng)?.output;
    let lines = (1..=params.drifts.len() as Label)
        .map(|j| {
            let bits = sample.indicator_leq(j)?.reflect();
            h_n_from_bits(&bits, params.n, params.x0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FmLines { sample, lines })
}

/// Classes `2..=k` with at least one particle among the sites `[lo, hi]`.
pub fn classes_present(v: &MultiClassSeq, lo: i64, hi: i64) -> Result<u64> {
    let k = v.num_classes() as usize;
    let mut seen = vec![false; k + 1];
    for i in lo..=hi {
        let l = v.get(i)?;
        if (l as usize) <= k {
            seen[l as usize] = true;
        }
    }
    Ok(seen.iter().skip(2).filter(|&&s| s).count() as u64)
}

/// Number of adjacent drift pairs `(μ_{j-1}, μ_j)` whose scaled lines differ
/// in their increment over `[-x0, x0]`, i.e. classes `j >= 2` present in the
/// observation window, read off one multiline sample at the grid's
/// densities.
///
/// With many closely spaced classes the stage queues are near critical and
/// the shared-uniform initial class counts are far from their stationary
/// joint law, which spreads the classes out and inflates the count. Use
/// [`jump_count_finite_n`] for counts whose mean is exact.
pub fn jump_count_multiline<R: Rng + ?Sized>(drift_grid: &[f64], n: f64, x0: f64, margin: Option<i64>, rng: &mut R) -> Result<u64> {
    let params = ScalingParams::new(n, drift_grid.to_vec(), x0)?;
    if drift_grid.len() == 1 {
        return Ok(0);
    }
    let lambdas = densities_for_drifts(drift_grid, n)?;
    let w = params.half_width();
    let margin = margin.unwrap_or_else(|| params.default_margin());
    let window = Window::int(-w - margin, w - 1)?;
    let v = fm_sample_stationary(&lambdas, window, rng)?.output;
    // The observation sites [-w, w-1] are mapped onto themselves by the
    // reflection i -> -i-1, so no reflection is needed for counting.
    classes_present(&v, -w, w - 1)
}

/// Jump count on a drift grid, as a sum over adjacent pairs `(j-1, j)` of
/// the indicator that class 2 is present in the window of a two-class
/// multiline sample with densities `(S_{j-1}, λ_j)`, one independent
/// sample per pair.
///
/// Merging classes `<= j-1` into class 1 and dropping classes above `j`
/// maps the grid's multiline measure to exactly this two-class measure, and
/// two-class samples with stationary initial queues are exact. Each term,
/// and hence the mean of the count, therefore matches the finite-`N`
/// quantity; only the dependence between terms is dropped.
pub fn jump_count_finite_n<R: Rng + ?Sized>(drift_grid: &[f64], n: f64, x0: f64, margin: Option<i64>, rng: &mut R) -> Result<u64> {
    let params = ScalingParams::new(n, drift_grid.to_vec(), x0)?;
    let lambdas = densities_for_drifts(drift_grid, n)?;
    let cum = lambdas.cumulative();
    let w = params.half_width();
    let margin = margin.unwrap_or_else(|| params.default_margin());
    let window = Window::int(-w - margin, w - 1)?;
    let mut count = 0;
    for j in 1..drift_grid.len() {
        let pair = DensityVector::new(vec![cum[j - 1], lambdas.lambdas()[j]])?;
        let v = fm_sample_stationary(&pair, window, rng)?.output;
        count += classes_present(&v, -w, w - 1)?;
    }
    Ok(count)
}

/// Drifts `lo, lo + step, ..., hi` (inclusive up to rounding).
pub fn drift_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || hi < lo {
        return Err(Error::param("drift grid", format!("bad range [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}
