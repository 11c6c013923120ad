//! Configurations on finite integer windows and piecewise-linear paths.
//!
//! The objects of the theory live on all of `Z` or `R`; here they are
//! restricted to finite windows and every operation states what it does at
//! the window boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A class label. Smaller labels have higher priority; [`HOLE`] is an empty
/// site and compares above every class.
pub type Label = u32;

/// Empty site. Never confused with a class: classes start at 1.
pub const HOLE: Label = Label::MAX;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: PartialOrd + Copy + Into<f64>> Window<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidWindow {
                lo: lo.into(),
                hi: hi.into(),
            });
        }
        Ok(Window { lo, hi })
    }
}

impl Window<i64> {
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: i64) -> bool {
        self.lo <= i && i <= self.hi
    }
}

// i64 does not implement Into<f64>; integer windows get their own constructor.
impl Window<i64> {
    pub fn int(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidWindow {
                lo: lo as f64,
                hi: hi as f64,
            });
        }
        Ok(Window { lo, hi })
    }
}

fn check_index(i: i64, lo: i64, hi: i64) -> Result<usize> {
    if i < lo || i > hi {
        Err(Error::OutOfWindow { index: i, lo, hi })
    } else {
        Ok((i - lo) as usize)
    }
}

/// A `{0,1}` configuration on `[window_lo, window_hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SeqRepr<u8>", into = "SeqRepr<u8>")]
pub struct BinarySeq {
    lo: i64,
    bits: Vec<bool>,
}

impl BinarySeq {
    pub fn new(lo: i64, bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::pre("a sequence needs at least one site"));
        }
        Ok(BinarySeq { lo, bits })
    }

    pub fn zeros(window: Window<i64>) -> Self {
        BinarySeq {
            lo: window.lo,
            bits: vec![false; window.len()],
        }
    }

    pub fn ones(window: Window<i64>) -> Self {
        BinarySeq {
            lo: window.lo,
            bits: vec![true; window.len()],
        }
    }

    /// Parses a string of `0`/`1` characters placed from `lo` upward.
    pub fn from_str01(lo: i64, s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::pre(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(lo, bits)
    }

    /// Low bits of `mask` as a sequence of length `len` starting at `lo`.
    pub fn from_mask(lo: i64, len: usize, mask: u64) -> Self {
        let bits = (0..len).map(|k| (mask >> k) & 1 == 1).collect();
        BinarySeq { lo, bits }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.bits.len() as i64 - 1
    }

    pub fn window(&self) -> Window<i64> {
        Window {
            lo: self.lo,
            hi: self.hi(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    pub fn get(&self, i: i64) -> Result<bool> {
        let k = check_index(i, self.lo, self.hi())?;
        Ok(self.bits[k])
    }

    pub fn set(&mut self, i: i64, value: bool) -> Result<()> {
        let k = check_index(i, self.lo, self.hi())?;
        self.bits[k] = value;
        Ok(())
    }

    /// Number of ones in `[i, j]`; the empty interval `i = j + 1` counts zero.
    pub fn count(&self, i: i64, j: i64) -> Result<u64> {
        if i == j + 1 {
            return Ok(0);
        }
        if i > j {
            return Err(Error::pre(format!("count over reversed interval [{i}, {j}]")));
        }
        let a = check_index(i, self.lo, self.hi())?;
        let b = check_index(j, self.lo, self.hi())?;
        Ok(self.bits[a..=b].iter().filter(|&&x| x).count() as u64)
    }

    pub fn total(&self) -> u64 {
        self.bits.iter().filter(|&&x| x).count() as u64
    }

    /// Partial sums `c[k] = #ones in [lo, lo + k - 1]`, length `len + 1`.
    pub fn prefix_counts(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.bits.len() + 1);
        let mut acc = 0u64;
        out.push(0);
        for &b in &self.bits {
            acc += u64::from(b);
            out.push(acc);
        }
        out
    }

    /// Pointwise order: every one of `self` is a one of `other`.
    pub fn is_dominated_by(&self, other: &BinarySeq) -> Result<bool> {
        same_window(self.window(), other.window())?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b))
    }

    /// Restriction to a sub-window.
    pub fn slice(&self, window: Window<i64>) -> Result<BinarySeq> {
        let a = check_index(window.lo, self.lo, self.hi())?;
        let b = check_index(window.hi, self.lo, self.hi())?;
        Ok(BinarySeq {
            lo: window.lo,
            bits: self.bits[a..=b].to_vec(),
        })
    }

    /// The sequence as a two-class configuration: ones become class 1.
    pub fn to_multiclass(&self) -> MultiClassSeq {
        MultiClassSeq {
            lo: self.lo,
            labels: self
                .bits
                .iter()
                .map(|&b| if b { 1 } else { HOLE })
                .collect(),
            num_classes: 1,
        }
    }
}

impl std::fmt::Display for BinarySeq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub(crate) fn same_window(a: Window<i64>, b: Window<i64>) -> Result<()> {
    if a != b {
        return Err(Error::WindowMismatch {
            lo_a: a.lo,
            hi_a: a.hi,
            lo_b: b.lo,
            hi_b: b.hi,
        });
    }
    Ok(())
}

/// A configuration with labels in `{1, ..., m} ∪ {HOLE}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MultiRepr", into = "MultiRepr")]
pub struct MultiClassSeq {
    lo: i64,
    labels: Vec<Label>,
    num_classes: u32,
}

impl MultiClassSeq {
    pub fn new(lo: i64, labels: Vec<Label>, num_classes: u32) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::pre("a sequence needs at least one site"));
        }
        if num_classes == 0 {
            return Err(Error::param("num_classes", "must be positive"));
        }
        if let Some(&bad) = labels
            .iter()
            .find(|&&l| l != HOLE && (l == 0 || l > num_classes))
        {
            return Err(Error::ClassOutOfRange {
                label: bad,
                max: num_classes,
            });
        }
        Ok(MultiClassSeq {
            lo,
            labels,
            num_classes,
        })
    }

    /// Construction from labels already known to be valid.
    pub(crate) fn from_parts(lo: i64, labels: Vec<Label>, num_classes: u32) -> Self {
        debug_assert!(labels
            .iter()
            .all(|&l| l == HOLE || (1..=num_classes).contains(&l)));
        MultiClassSeq {
            lo,
            labels,
            num_classes,
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.labels.len() as i64 - 1
    }

    pub fn window(&self) -> Window<i64> {
        Window {
            lo: self.lo,
            hi: self.hi(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn get(&self, i: i64) -> Result<Label> {
        let k = check_index(i, self.lo, self.hi())?;
        Ok(self.labels[k])
    }

    pub fn slice(&self, window: Window<i64>) -> Result<MultiClassSeq> {
        let a = check_index(window.lo, self.lo, self.hi())?;
        let b = check_index(window.hi, self.lo, self.hi())?;
        Ok(MultiClassSeq {
            lo: window.lo,
            labels: self.labels[a..=b].to_vec(),
            num_classes: self.num_classes,
        })
    }

    /// Bit is one exactly where the label is at most `k`.
    pub fn indicator_leq(&self, k: Label) -> Result<BinarySeq> {
        if k == 0 || k > self.num_classes {
            return Err(Error::ClassOutOfRange {
                label: k,
                max: self.num_classes,
            });
        }
        Ok(BinarySeq {
            lo: self.lo,
            bits: self.labels.iter().map(|&l| l <= k).collect(),
        })
    }
}

impl std::fmt::Display for MultiClassSeq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .labels
            .iter()
            .map(|&l| {
                if l == HOLE {
                    "H".to_string()
                } else {
                    l.to_string()
                }
            })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Free-function form of [`MultiClassSeq::indicator_leq`].
pub fn indicator_leq(v: &MultiClassSeq, k: Label) -> Result<BinarySeq> {
    v.indicator_leq(k)
}

/// Number of ones of `x` in `[i, j]`.
pub fn count(x: &BinarySeq, i: i64, j: i64) -> Result<u64> {
    x.count(i, j)
}

#[derive(Serialize, Deserialize)]
struct SeqRepr<T> {
    window_lo: i64,
    window_hi: i64,
    values: Vec<T>,
}

impl TryFrom<SeqRepr<u8>> for BinarySeq {
    type Error = Error;

    fn try_from(r: SeqRepr<u8>) -> Result<Self> {
        if r.window_hi - r.window_lo + 1 != r.values.len() as i64 {
            return Err(Error::pre("window does not match number of values"));
        }
        let bits = r
            .values
            .iter()
            .map(|&v| match v {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::pre(format!("binary value {v}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        BinarySeq::new(r.window_lo, bits)
    }
}

impl From<BinarySeq> for SeqRepr<u8> {
    fn from(s: BinarySeq) -> Self {
        SeqRepr {
            window_lo: s.lo,
            window_hi: s.hi(),
            values: s.bits.iter().map(|&b| u8::from(b)).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MultiRepr {
    window_lo: i64,
    window_hi: i64,
    num_classes: u32,
    /// `null` marks a hole.
    labels: Vec<Option<u32>>,
}

impl TryFrom<MultiRepr> for MultiClassSeq {
    type Error = Error;

    fn try_from(r: MultiRepr) -> Result<Self> {
        if r.window_hi - r.window_lo + 1 != r.labels.len() as i64 {
            return Err(Error::pre("window does not match number of labels"));
        }
        let labels = r.labels.into_iter().map(|l| l.unwrap_or(HOLE)).collect();
        MultiClassSeq::new(r.window_lo, labels, r.num_classes)
    }
}

impl From<MultiClassSeq> for MultiRepr {
    fn from(s: MultiClassSeq) -> Self {
        MultiRepr {
            window_lo: s.lo,
            window_hi: s.hi(),
            num_classes: s.num_classes,
            labels: s
                .labels
                .iter()
                .map(|&l| if l == HOLE { None } else { Some(l) })
                .collect(),
        }
    }
}

/// A continuous function sampled on a uniform grid, linear in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFn {
    x_lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl PathFn {
    pub fn new(x_lo: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::param("step", "grid spacing must be positive"));
        }
        if values.len() < 2 {
            return Err(Error::pre("a path needs at least two grid points"));
        }
        Ok(PathFn {
            x_lo,
            step,
            values,
        })
    }

    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }

    pub fn x_hi(&self) -> f64 {
        self.x_at(self.values.len() - 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x_at(&self, k: usize) -> f64 {
        self.x_lo + k as f64 * self.step
    }

    /// Grid index of `x`, if `x` is (up to rounding) a grid point.
    pub fn grid_index(&self, x: f64) -> Option<usize> {
        let t = (x - self.x_lo) / self.step;
        let k = t.round();
        if (t - k).abs() < 1e-9 && k >= 0.0 && (k as usize) < self.values.len() {
            Some(k as usize)
        } else {
            None
        }
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        let tol = 1e-9 * self.step;
        self.x_lo <= lo + tol && hi <= self.x_hi() + tol
    }

    /// Linear interpolant at `x`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let t = (x - self.x_lo) / self.step;
        let last = (self.values.len() - 1) as f64;
        let tol = 1e-9;
        if !(t >= -tol && t <= last + tol) {
            return Err(Error::pre(format!(
                "x = {x} outside [{}, {}]",
                self.x_lo,
                self.x_hi()
            )));
        }
        let t = t.clamp(0.0, last);
        if (t - t.round()).abs() < tol {
            return Ok(self.values[t.round() as usize]);
        }
        let k = t.floor() as usize;
        if k as f64 == t || k + 1 >= self.values.len() {
            return Ok(self.values[k.min(self.values.len() - 1)]);
        }
        let w = t - k as f64;
        Ok((1.0 - w) * self.values[k] + w * self.values[k + 1])
    }

    /// Restriction to the grid points inside `[lo, hi]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<PathFn> {
        let tol = 1e-9;
        let a = ((lo - self.x_lo) / self.step - tol).ceil().max(0.0) as usize;
        let b = (((hi - self.x_lo) / self.step + tol).floor() as usize).min(self.values.len() - 1);
        if b <= a {
            return Err(Error::pre(format!("[{lo}, {hi}] holds fewer than two grid points")));
        }
        PathFn::new(self.x_at(a), self.step, self.values[a..=b].to_vec())
    }

    /// Writes `x,value` rows with a header.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "value"])?;
        for (k, v) in self.values.iter().enumerate() {
            out.write_record([self.x_at(k).to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the two-column format written by [`PathFn::write_csv`].
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<PathFn> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Io(format!("bad number {s:?}: {e}")))
            };
            xs.push(parse(&rec[0])?);
            vs.push(parse(&rec[1])?);
        }
        if xs.len() < 2 {
            return Err(Error::pre("a path needs at least two grid points"));
        }
        let step = xs[1] - xs[0];
        for w in xs.windows(2) {
            if ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(1.0) {
                return Err(Error::pre("grid is not uniform"));
            }
        }
        PathFn::new(xs[0], step, vs)
    }
}

/// Height function: `P(0) = 0`, `P(i+1) - P(i) = 2 eta(i) - 1`, returned on
/// `[lo, hi + 1]` with unit spacing. The anchor 0 must lie in that range.
pub fn height_map(eta: &BinarySeq) -> Result<PathFn> {
    if eta.lo() > 0 || eta.hi() + 1 < 0 {
        return Err(Error::pre(format!(
            "height map anchor 0 outside [{}, {} + 1]",
            eta.lo(),
            eta.hi()
        )));
    }
    let n = eta.len();
    let origin = (-eta.lo()) as usize;
    let mut values = vec![0.0; n + 1];
    for k in origin..n {
        values[k + 1] = values[k] + if eta.bits[k] { 1.0 } else { -1.0 };
    }
    for k in (0..origin).rev() {
        values[k] = values[k + 1] - if eta.bits[k] { 1.0 } else { -1.0 };
    }
    PathFn::new(eta.lo() as f64, 1.0, values)
}

/// Mirror image: `out(i) = in(-i-1)` for sequences, `out(x) = -in(-x)` for
/// paths.
pub trait Reflect {
    fn reflect(&self) -> Self;
}

impl Reflect for BinarySeq {
    fn reflect(&self) -> Self {
        let mut bits = self.bits.clone();
        bits.reverse();
        BinarySeq {
            lo: -self.hi() - 1,
            bits,
        }
    }
}

impl Reflect for MultiClassSeq {
    fn reflect(&self) -> Self {
        let mut labels = self.labels.clone();
        labels.reverse();
        MultiClassSeq {
            lo: -self.hi() - 1,
            labels,
            num_classes: self.num_classes,
        }
    }
}

impl Reflect for PathFn {
    fn reflect(&self) -> Self {
        let values = self.values.iter().rev().map(|v| -v).collect();
        PathFn {
            x_lo: -self.x_hi(),
            step: self.step,
            values,
        }
    }
}

pub fn reflect<T: Reflect>(x: &T) -> T {
    x.reflect()
}

/// `sup_{x in [-n, n]} |f(x) - g(x)|`, evaluated on the merged grid.
///
/// `f - g` is linear between consecutive points of the union of both grids,
/// so its supremum is attained at one of those points or at `±n`.
pub fn metric_dn(f: &PathFn, g: &PathFn, n: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::param("n", "must be positive"));
    }
    for p in [f, g] {
        if !p.covers(-n, n) {
            return Err(Error::pre(format!(
                "path on [{}, {}] does not cover [-{n}, {n}]",
                p.x_lo(),
                p.x_hi()
            )));
        }
    }
    let mut points = vec![-n, n];
    for p in [f, g] {
        let a = ((-n - p.x_lo) / p.step).ceil().max(0.0) as usize;
        let b = (((n - p.x_lo) / p.step).floor() as usize).min(p.len() - 1);
        points.extend((a..=b).map(|k| p.x_at(k)).filter(|x| x.abs() <= n));
    }
    let mut sup: f64 = 0.0;
    for x in points {
        sup = sup.max((f.eval(x)? - g.eval(x)?).abs());
    }
    Ok(sup)
}
