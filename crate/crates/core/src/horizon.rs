//! Stationary horizon marginals built from independent drifted Brownian
//! motions, and closed-form statistics of the horizon.
//!
//! Brownian motions here have diffusivity √2 (variance `2|x|` at `x`) and
//! drift `2μ`. For `f(0) = g(0) = 0`,
//!
//! `Φ(f, g)(y) = f(y) + sup_{x <= y} (g - f)(x) - sup_{x <= 0} (g - f)(x)`
//!
//! and the lines `(G_{μ_1}, ..., G_{μ_k})` are `(f_1, Φ(f_1, f_2), ...,
//! Φ(f_1, Φ(f_2, ... Φ(f_{k-1}, f_k))))`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng::{child_seed, stream};
use crate::seq::PathFn;

/// A uniform grid `x_lo, x_lo + step, ..., x_hi` through 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub step: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            x_lo: -8.0,
            x_hi: 8.0,
            step: 1.0 / 1024.0,
        }
    }
}

impl Grid {
    pub fn new(x_lo: f64, x_hi: f64, step: f64) -> Result<Self> {
        let g = Grid { x_lo, x_hi, step };
        g.validate()?;
        Ok(g)
    }

    pub fn symmetric(half_width: f64, step: f64) -> Result<Self> {
        Grid::new(-half_width, half_width, step)
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::param("step", "must be positive"));
        }
        if !(self.x_lo <= 0.0 && 0.0 <= self.x_hi && self.x_lo < self.x_hi) {
            return Err(Error::InvalidWindow {
                lo: self.x_lo,
                hi: self.x_hi,
            });
        }
        for (name, v) in [("x_lo", self.x_lo), ("x_hi", self.x_hi)] {
            let t = v / self.step;
            if (t - t.round()).abs() > 1e-6 {
                return Err(Error::param(name, format!("{v} is not a multiple of the step {}", self.step)));
            }
        }
        Ok(())
    }

    /// Grid points left and right of 0.
    fn counts(&self) -> (usize, usize) {
        (
            (-self.x_lo / self.step).round() as usize,
            (self.x_hi / self.step).round() as usize,
        )
    }

    pub fn len(&self) -> usize {
        let (l, r) = self.counts();
        l + r + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The same grid extended `extension` to the left (rounded up to whole
    /// steps).
    fn extended(&self, extension: f64) -> Grid {
        let extra = (extension / self.step).ceil().max(0.0);
        Grid {
            x_lo: self.x_lo - extra * self.step,
            ..*self
        }
    }
}

/// A two-sided Brownian motion with drift `2 * drift` on `grid`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrownianSpec {
    pub drift: f64,
    pub grid: Grid,
}

fn bm_values<R: Rng + ?Sized>(drift: f64, grid: &Grid, rng: &mut R) -> Vec<f64> {
    let (left, right) = grid.counts();
    let mean = 2.0 * drift * grid.step;
    let sd = (2.0 * grid.step).sqrt();
    let mut v = vec![0.0; left + right + 1];
    for k in left + 1..v.len() {
        let z: f64 = StandardNormal.sample(rng);
        v[k] = v[k - 1] + mean + sd * z;
    }
    for k in (0..left).rev() {
        let z: f64 = StandardNormal.sample(rng);
        v[k] = v[k + 1] - mean - sd * z;
    }
    v
}

pub fn sample_bm_with<R: Rng + ?Sized>(spec: &BrownianSpec, rng: &mut R) -> Result<PathFn> {
    spec.grid.validate()?;
    PathFn::new(spec.grid.x_lo, spec.grid.step, bm_values(spec.drift, &spec.grid, rng))
}

pub fn sample_bm(spec: &BrownianSpec, seed: u64) -> Result<PathFn> {
    sample_bm_with(spec, &mut stream(seed, "bm", 0))
}

/// How `Φ` treats the part of the supremum it cannot see.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiOptions {
    /// Add `sup_{x <= x_lo} (g - f)(x) - (g - f)(x_lo)`, drawn as
    /// `Exp(drift_gap)`, at the left edge. Exact when `g - f` is a Brownian
    /// motion with variance 4 per unit and drift `2 * drift_gap`.
    pub exponential_tail: bool,
    /// Variance rate of `g - f`, if it is Brownian: the supremum inside each
    /// grid cell is then drawn from the Brownian-bridge maximum given the
    /// endpoints, so the suprema are exact at the grid points rather than
    /// biased low by the discretisation.
    pub bridge_variance: Option<f64>,
}

impl PhiOptions {
    /// Suprema over the grid points only.
    pub fn plain() -> Self {
        PhiOptions {
            exponential_tail: false,
            bridge_variance: None,
        }
    }
}

/// Maximum of a Brownian bridge from `a` to `b` over a cell of length `h`
/// with variance rate `var`, by inverting `P(max >= y) = exp(-2(y-a)(y-b)/(var h))`.
fn bridge_max(a: f64, b: f64, var_h: f64, u: f64) -> f64 {
    let d = a - b;
    0.5 * (a + b + (d * d - 2.0 * var_h * u.ln()).sqrt())
}

fn phi_values<R: Rng + ?Sized>(
    f: &[f64],
    g: &[f64],
    origin: usize,
    step: f64,
    drift_gap: f64,
    opts: PhiOptions,
    rng: &mut R,
) -> Result<(Vec<f64>, Option<f64>)> {
    let mut tail_draw = None;
    let mut m = f64::NEG_INFINITY;
    if opts.exponential_tail {
        let u: f64 = 1.0 - rng.random::<f64>();
        let e = -u.ln() / drift_gap;
        tail_draw = Some(e);
        m = g[0] - f[0] + e;
    }
    let mut sup = Vec::with_capacity(f.len());
    let mut prev = g[0] - f[0];
    for k in 0..f.len() {
        let w = g[k] - f[k];
        if let (Some(var), true) = (opts.bridge_variance, k > 0) {
            let u: f64 = 1.0 - rng.random::<f64>();
            m = m.max(bridge_max(prev, w, var * step, u));
        }
        m = m.max(w);
        sup.push(m);
        prev = w;
    }
    let at0 = sup[origin];
    Ok((f.iter().zip(&sup).map(|(fv, s)| fv + s - at0).collect(), tail_draw))
}

fn origin_of(p: &PathFn) -> Result<usize> {
    p.grid_index(0.0)
        .ok_or_else(|| Error::pre("path grid does not contain 0"))
}

/// `Φ(f, g)` on the common grid of `f` and `g`. The drift gap is half the
/// drift difference of `g` over `f` and must be positive.
pub fn phi(f: &PathFn, g: &PathFn, drift_gap: f64, opts: PhiOptions, seed: u64) -> Result<PathFn> {
    if !(drift_gap > 0.0) {
        return Err(Error::pre(format!("drift gap {drift_gap} must be positive")));
    }
    if f.len() != g.len() || (f.x_lo() - g.x_lo()).abs() > 1e-9 || (f.step() - g.step()).abs() > 1e-12 {
        return Err(Error::pre("phi needs both paths on one grid"));
    }
    let origin = origin_of(f)?;
    if f.values()[origin].abs() > 1e-12 || g.values()[origin].abs() > 1e-12 {
        return Err(Error::pre("phi needs f(0) = g(0) = 0"));
    }
    let mut rng = stream(seed, "phi", 0);
    let (v, _) = phi_values(f.values(), g.values(), origin, f.step(), drift_gap, opts, &mut rng)?;
    PathFn::new(f.x_lo(), f.step(), v)
}

/// Seed used by [`phi_k`] for every call `Φ(f_i, ·)` (one-based `i`).
///
/// All lines share the uniforms behind the tail and bridge draws of a given
/// outer path. Both draws are monotone in their inputs, so the shared
/// randomness keeps the differences between lines nondecreasing.
pub fn phi_seed(seed: u64, outer: usize) -> u64 {
    child_seed(seed, "phi-k", outer as u64)
}

/// `(Φ^1(f_1), Φ^2(f_1, f_2), ..., Φ^k(f_1, ..., f_k))` with
/// `Φ^j(f_1, ..., f_j) = Φ(f_1, Φ^{j-1}(f_2, ..., f_j))`.
///
/// `drifts[i]` is `μ_i` (path drift `2μ_i`). Inner calls see a second
/// argument that is not exactly Brownian, so their tail and bridge
/// corrections use the pairwise values as an approximation.
pub fn phi_k(paths: &[PathFn], drifts: &[f64], opts: PhiOptions, seed: u64) -> Result<Vec<PathFn>> {
    if paths.is_empty() || paths.len() != drifts.len() {
        return Err(Error::pre("need one drift per path"));
    }
    check_increasing(drifts)?;
    let mut lines = vec![paths[0].clone()];
    for j in 1..paths.len() {
        let mut h = paths[j].clone();
        for i in (0..j).rev() {
            h = phi(&paths[i], &h, drifts[j] - drifts[i], opts, phi_seed(seed, i + 1))?;
        }
        lines.push(h);
    }
    Ok(lines)
}

fn check_increasing(drifts: &[f64]) -> Result<()> {
    if drifts.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::pre("drifts must be strictly increasing"));
    }
    Ok(())
}

/// Treatment of the half-line left of the sampled grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// Suprema start at the left grid edge.
    None,
    /// Grid extended left, plus one exponential tail draw per `Φ` call.
    Exponential,
    /// Grid extended left, no tail draw.
    LongGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShOptions {
    pub tail: TailMode,
    /// Left extension of the grid for [`TailMode::Exponential`] and
    /// [`TailMode::LongGrid`].
    pub extension: f64,
    /// Brownian-bridge correction of the cell suprema.
    pub bridge: bool,
}

impl Default for ShOptions {
    fn default() -> Self {
        ShOptions {
            tail: TailMode::Exponential,
            extension: 32.0,
            bridge: true,
        }
    }
}

impl ShOptions {
    pub fn long_grid(extension: f64) -> Self {
        ShOptions {
            tail: TailMode::LongGrid,
            extension,
            bridge: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub options: ShOptions,
    /// Left end of the grid actually simulated.
    pub simulated_x_lo: f64,
    pub grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShSample {
    pub drifts: Vec<f64>,
    pub lines: Vec<PathFn>,
    pub truncation: Truncation,
}

impl ShSample {
    /// `x,line_1,...,line_k` rows.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        write_lines_csv(&self.lines, w)
    }

    /// Drifts and truncation record, for the JSON sidecar of the CSV.
    pub fn metadata_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Meta<'a> {
            drifts: &'a [f64],
            truncation: &'a Truncation,
        }
        Ok(serde_json::to_string_pretty(&Meta {
            drifts: &self.drifts,
            truncation: &self.truncation,
        })?)
    }
}

/// Writes paths sharing one grid as CSV columns.
pub fn write_lines_csv<W: std::io::Write>(lines: &[PathFn], w: W) -> Result<()> {
    let first = lines.first().ok_or_else(|| Error::pre("no lines"))?;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["x".to_string()];
    header.extend((1..=lines.len()).map(|k| format!("line_{k}")));
    out.write_record(&header)?;
    for k in 0..first.len() {
        let mut row = vec![first.x_at(k).to_string()];
        row.extend(lines.iter().map(|l| l.values()[k].to_string()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn sample_sh(drifts: &[f64], grid: Grid, opts: ShOptions, seed: u64) -> Result<ShSample> {
    if drifts.is_empty() {
        return Err(Error::pre("no drifts"));
    }
    check_increasing(drifts)?;
    grid.validate()?;
    let sim = match opts.tail {
        TailMode::None => grid,
        TailMode::Exponential | TailMode::LongGrid => grid.extended(opts.extension),
    };
    let paths = drifts
        .iter()
        .enumerate()
        .map(|(i, &mu)| {
            let mut rng = stream(seed, "sh-bm", i as u64);
            PathFn::new(sim.x_lo, sim.step, bm_values(mu, &sim, &mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    let phi_opts = PhiOptions {
        exponential_tail: opts.tail == TailMode::Exponential,
        bridge_variance: opts.bridge.then_some(4.0),
    };
    let lines = phi_k(&paths, drifts, phi_opts, child_seed(seed, "sh-phi", 0))?
        .into_iter()
        .map(|l| l.restrict(grid.x_lo, grid.x_hi))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShSample {
        drifts: drifts.to_vec(),
        lines,
        truncation: Truncation {
            options: opts,
            simulated_x_lo: sim.x_lo,
            grid,
        },
    })
}

/// `exp(t^2) erfc(t)`, finite for large `t`.
fn erfcx(t: f64) -> f64 {
    if t < 20.0 {
        (t * t).exp() * erfc(t)
    } else {
        let s = 1.0 / (t * t);
        (1.0 - 0.5 * s + 0.75 * s * s - 1.875 * s * s * s) / (t * std::f64::consts::PI.sqrt())
    }
}

/// `P(G_{μ0+μ}(-x, x) - G_{μ0}(-x, x) <= z)`; the law does not depend on
/// `μ0`.
///
/// The increment difference is `max(0, S - E)`-shaped: with `W` the
/// difference of the two driving Brownian motions (drift `c = 2μ`, variance 4
/// per unit), it equals `(sup_{[-x,x]} W - sup_{(-∞,-x]} W)^+`. Integrating
/// the law of the running maximum against the exponential overshoot gives
///
/// `Φ((z - 2cx)/s) + e^{cz/2} ((1 + cz/2 + c²x) Φ(-(z + 2cx)/s) - c √(x/π) e^{-(z + 2cx)²/(16x)})`
///
/// with `s = 2√(2x)`. The exponential factors are folded into the normal
/// tails so the expression stays finite for large `z`.
pub fn diff_cdf(z: f64, x: f64, mu: f64) -> Result<f64> {
    if !(z >= 0.0) || !(x > 0.0) || !(mu > 0.0) {
        return Err(Error::param("z, x, mu", format!("need z >= 0, x > 0, mu > 0; got {z}, {x}, {mu}")));
    }
    let c = 2.0 * mu;
    let s = 2.0 * (2.0 * x).sqrt();
    let first = crate::stats::normal_cdf((z - 2.0 * c * x) / s);
    // cz/2 - (z + 2cx)²/(16x) = -(z - 2cx)²/(16x), and
    // Φ(-a) = erfcx(a/√2) e^{-a²/2} / 2 with a²/2 = (z + 2cx)²/(16x).
    let damp = (-(z - 2.0 * c * x).powi(2) / (16.0 * x)).exp();
    let a = (z + 2.0 * c * x) / s;
    let tail = 0.5 * erfcx(a / std::f64::consts::SQRT_2) * damp;
    let value = first + (1.0 + 0.5 * c * z + c * c * x) * tail - c * (x / std::f64::consts::PI).sqrt() * damp;
    Ok(value.clamp(0.0, 1.0))
}

/// Expected number of jump directions `μ ∈ (α, β)` of `G_μ(x, y)`:
/// `2 √(2/π) (β - α) √(y - x)`.
pub fn expected_jumps(alpha: f64, beta: f64, x: f64, y: f64) -> Result<f64> {
    if alpha > beta || x >= y {
        return Err(Error::param(
            "alpha, beta, x, y",
            format!("need alpha <= beta and x < y; got {alpha}, {beta}, {x}, {y}"),
        ));
    }
    Ok(2.0 * (2.0 / std::f64::consts::PI).sqrt() * (beta - alpha) * (y - x).sqrt())
}

/// Checks the ordering structure of a sample: every line vanishes at 0, and
/// for each pair of lines the difference (higher drift minus lower) is
/// nondecreasing and vanishes exactly on a grid interval containing 0.
/// Returns the number of violations.
pub fn ordering_violations(lines: &[PathFn], tol: f64) -> u64 {
    let mut bad = 0;
    for l in lines {
        match l.eval(0.0) {
            Ok(v) if v.abs() <= tol => {}
            _ => bad += 1,
        }
    }
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let d: Vec<f64> = lines[j]
                .values()
                .iter()
                .zip(lines[i].values())
                .map(|(a, b)| a - b)
                .collect();
            bad += d.windows(2).filter(|w| w[1] < w[0] - tol).count() as u64;
            let zero: Vec<bool> = d.iter().map(|v| v.abs() <= tol).collect();
            let first = zero.iter().position(|&z| z);
            let last = zero.iter().rposition(|&z| z);
            match (first, last) {
                (Some(a), Some(b)) => {
                    if zero[a..=b].iter().any(|&z| !z) {
                        bad += 1;
                    }
                }
                _ => bad += 1,
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(grid: Grid, f: impl Fn(f64) -> f64) -> PathFn {
        let n = grid.len();
        PathFn::new(grid.x_lo, grid.step, (0..n).map(|k| f(grid.x_lo + k as f64 * grid.step)).collect()).unwrap()
    }

    #[test]
    fn phi_examples() {
        let grid = Grid::new(-2.0, 2.0, 0.25).unwrap();
        let id = path(grid, |x| x);
        let neg = path(grid, |x| -x);
        let zero = path(grid, |_| 0.0);

        let out = phi(&neg, &id, 1.0, PhiOptions::plain(), 0).unwrap();
        for (k, v) in out.values().iter().enumerate() {
            assert!((v - id.values()[k]).abs() < 1e-12);
        }

        // f = 0, g(y) = y: running max of g from x_lo is y itself.
        let out = phi(&zero, &id, 1.0, PhiOptions::plain(), 0).unwrap();
        for (k, v) in out.values().iter().enumerate() {
            assert!((v - id.values()[k]).abs() < 1e-12);
        }

        let bm = sample_bm(&BrownianSpec { drift: 0.3, grid }, 4).unwrap();
        let same = phi(&bm, &bm, 1e-9, PhiOptions::plain(), 0).unwrap();
        assert_eq!(same.values(), bm.values());

        assert!(phi(&zero, &id, 0.0, PhiOptions::plain(), 0).is_err());
        let shifted = path(grid, |x| x + 1.0);
        assert!(phi(&zero, &shifted, 1.0, PhiOptions::plain(), 0).is_err());
    }

    #[test]
    fn phi_k_nesting_is_compositional() {
        let grid = Grid::new(-4.0, 4.0, 1.0 / 16.0).unwrap();
        let drifts = [-0.5, 0.0, 0.7];
        let paths: Vec<PathFn> = drifts
            .iter()
            .enumerate()
            .map(|(i, &mu)| sample_bm(&BrownianSpec { drift: mu, grid }, 10 + i as u64).unwrap())
            .collect();
        let opts = PhiOptions {
            exponential_tail: true,
            bridge_variance: Some(4.0),
        };
        let lines = phi_k(&paths, &drifts, opts, 99).unwrap();
        assert_eq!(lines[0], paths[0]);
        let two = phi(&paths[0], &paths[1], 0.5, opts, phi_seed(99, 1)).unwrap();
        assert_eq!(lines[1], two);
        let inner = phi(&paths[1], &paths[2], 0.7, opts, phi_seed(99, 2)).unwrap();
        let outer = phi(&paths[0], &inner, 1.2, opts, phi_seed(99, 1)).unwrap();
        assert_eq!(lines[2], outer);
        assert!(phi_k(&paths, &[0.0, 0.0, 1.0], opts, 1).is_err());
    }

    #[test]
    fn sh_sample_shape_and_ordering() {
        let grid = Grid::new(-2.0, 2.0, 1.0 / 64.0).unwrap();
        for mode in [TailMode::None, TailMode::Exponential, TailMode::LongGrid] {
            let opts = ShOptions {
                tail: mode,
                extension: 8.0,
                bridge: true,
            };
            let s = sample_sh(&[-0.5, 0.0, 0.5], grid, opts, 3).unwrap();
            assert_eq!(s.lines.len(), 3);
            assert_eq!(s.lines[0].len(), grid.len());
            assert!((s.lines[0].x_lo() + 2.0).abs() < 1e-12);
            assert_eq!(ordering_violations(&s.lines, 1e-9), 0);
        }
        let one = sample_sh(&[0.4], grid, ShOptions::default(), 5).unwrap();
        assert_eq!(one.lines.len(), 1);
        assert!(sample_sh(&[1.0, 0.0], grid, ShOptions::default(), 5).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(-1.0, 1.0, 0.3).is_err());
        assert!(Grid::new(0.5, 1.0, 0.5).is_err());
        assert!(Grid::new(-1.0, 1.0, 0.0).is_err());
        assert_eq!(Grid::new(-1.0, 1.0, 0.25).unwrap().len(), 9);
    }

    #[test]
    fn diff_cdf_limits() {
        for z in [0.0, 0.5, 2.0, 10.0] {
            assert!((diff_cdf(z, 1.0, 1e-9).unwrap() - 1.0).abs() < 1e-6);
        }
        assert!((diff_cdf(200.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let mut prev = 0.0;
        for k in 0..200 {
            let v = diff_cdf(k as f64 * 0.05, 1.0, 1.0).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        assert!(diff_cdf(-1.0, 1.0, 1.0).is_err());
        assert!(diff_cdf(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn expected_jumps_values() {
        assert_eq!(expected_jumps(0.3, 0.3, -1.0, 1.0).unwrap(), 0.0);
        let v = expected_jumps(-1.0, 1.0, -1.0, 1.0).unwrap();
        assert!((v - 4.0 * (2.0f64 / std::f64::consts::PI).sqrt() * 2f64.sqrt()).abs() < 1e-12);
        assert!((v - 4.5135).abs() < 1e-4);
        let w = expected_jumps(-2.0, 2.0, -1.0, 1.0).unwrap();
        assert!((w - 2.0 * v).abs() < 1e-12);
        assert!(expected_jumps(1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn bridge_max_is_above_endpoints() {
        for u in [1e-9, 0.3, 0.999_999] {
            let m = bridge_max(0.2, -0.4, 0.1, u);
            assert!(m >= 0.2);
        }
        assert!((bridge_max(0.2, -0.4, 0.1, 1.0) - 0.2).abs() < 1e-12);
    }
}
