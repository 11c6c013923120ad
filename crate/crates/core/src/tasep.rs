//! Continuous-time multi-type TASEP on a ring or a closed segment.
//!
//! Every site carries a rate-1 Poisson clock. When the clock at `x` rings the
//! occupant of `x` tries to jump to its neighbour (right or left, depending on
//! the direction) and succeeds iff it has strictly higher priority, i.e. a
//! strictly smaller label; holes have the largest label.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::queue::{fm_sample_stationary, DensityVector};
use crate::rng::{child_seed, stream, SimRng};
use crate::seq::{Label, MultiClassSeq, Window, HOLE};
use crate::stats::{self, bonferroni, PassRule, TestReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Ring,
    Segment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

/// Per-site exponential clocks merged into one event queue.
///
/// Site `x` draws its waiting times from its own generator, so the event list
/// does not depend on the order in which events are consumed.
#[derive(Debug, Clone)]
pub struct ClockStream {
    rngs: Vec<SimRng>,
    heap: BinaryHeap<Reverse<(u64, usize)>>,
}

impl ClockStream {
    /// Clocks for `len` sites; site `x` uses stream index `x`.
    pub fn new(seed: u64, len: usize) -> Self {
        Self::with_index(seed, len, |x| x as u64)
    }

    /// Clocks for the mirrored system: site `x` uses the stream of site
    /// `len - 1 - x` of [`ClockStream::new`].
    pub fn reflected(seed: u64, len: usize) -> Self {
        Self::with_index(seed, len, |x| (len - 1 - x) as u64)
    }

    fn with_index(seed: u64, len: usize, index: impl Fn(usize) -> u64) -> Self {
        let mut rngs: Vec<SimRng> = (0..len).map(|x| stream(seed, "clock", index(x))).collect();
        let mut heap = BinaryHeap::with_capacity(len);
        for (x, rng) in rngs.iter_mut().enumerate() {
            let t: f64 = Exp1.sample(rng);
            heap.push(Reverse((t.to_bits(), x)));
        }
        ClockStream { rngs, heap }
    }

    pub fn len(&self) -> usize {
        self.rngs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rngs.is_empty()
    }

    fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|Reverse((t, _))| f64::from_bits(*t))
    }

    /// Next ring `(time, site)` if it happens no later than `horizon`.
    /// Positive floats order like their bit patterns, so the heap key is the
    /// raw bits; ties fall back to the site index.
    pub fn next_until(&mut self, horizon: f64) -> Option<(f64, usize)> {
        let t = self.peek_time()?;
        if t > horizon {
            return None;
        }
        let Reverse((_, x)) = self.heap.pop()?;
        let gap: f64 = Exp1.sample(&mut self.rngs[x]);
        self.heap.push(Reverse(((t + gap).to_bits(), x)));
        Some((t, x))
    }
}

/// A configuration with particle identities and signed displacements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TasepState {
    pub geometry: Geometry,
    pub direction: Direction,
    /// Label per site; [`HOLE`] is empty.
    labels: Vec<Label>,
    /// Identity of the occupant of each site (holes have identities too).
    ids: Vec<u32>,
    /// Net displacement per identity, unwound on the ring.
    displacement: Vec<i64>,
    pub time: f64,
}

impl TasepState {
    pub fn new(labels: Vec<Label>, geometry: Geometry, direction: Direction) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::param("L", "need at least two sites"));
        }
        let n = labels.len();
        Ok(TasepState {
            geometry,
            direction,
            labels,
            ids: (0..n as u32).collect(),
            displacement: vec![0; n],
            time: 0.0,
        })
    }

    pub fn from_seq(v: &MultiClassSeq, geometry: Geometry, direction: Direction) -> Result<Self> {
        Self::new(v.labels().to_vec(), geometry, direction)
    }

    /// Every site gets its own class: site `i` holds label `i + 1`.
    pub fn fully_labeled(len: usize, geometry: Geometry, direction: Direction) -> Result<Self> {
        Self::new((1..=len as Label).collect(), geometry, direction)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Net displacement of the particle that started at site `id`.
    pub fn displacement(&self, id: usize) -> i64 {
        self.displacement[id]
    }

    pub fn to_seq(&self, num_classes: u32) -> Result<MultiClassSeq> {
        MultiClassSeq::new(0, self.labels.clone(), num_classes)
    }

    /// Mirror image `x -> L - 1 - x` with the jump direction flipped.
    /// Identities are relabelled so that identity `L - 1 - i` of the mirror
    /// is the particle that started at site `i` here.
    pub fn reflected(&self) -> TasepState {
        let n = self.len();
        let mut labels = self.labels.clone();
        labels.reverse();
        let ids = self.ids.iter().rev().map(|&id| (n - 1) as u32 - id).collect();
        let displacement = self.displacement.iter().rev().map(|d| -d).collect();
        TasepState {
            geometry: self.geometry,
            direction: self.direction.flipped(),
            labels,
            ids,
            displacement,
            time: self.time,
        }
    }

    fn target(&self, x: usize) -> Option<usize> {
        let n = self.len();
        match (self.direction, self.geometry) {
            (Direction::Right, Geometry::Ring) => Some((x + 1) % n),
            (Direction::Left, Geometry::Ring) => Some((x + n - 1) % n),
            (Direction::Right, Geometry::Segment) => (x + 1 < n).then_some(x + 1),
            (Direction::Left, Geometry::Segment) => x.checked_sub(1),
        }
    }

    /// Applies one clock ring at `x`; returns whether a jump happened.
    pub fn ring(&mut self, x: usize) -> bool {
        let Some(y) = self.target(x) else {
            return false;
        };
        if self.labels[x] >= self.labels[y] {
            return false;
        }
        let step = match self.direction {
            Direction::Right => 1,
            Direction::Left => -1,
        };
        self.displacement[self.ids[x] as usize] += step;
        self.displacement[self.ids[y] as usize] -= step;
        self.labels.swap(x, y);
        self.ids.swap(x, y);
        true
    }

    /// Evolves to time `t` using the rings of `clocks` in `(time, t]`.
    pub fn run(&mut self, clocks: &mut ClockStream, t: f64) -> Result<()> {
        run_basic_coupling(std::slice::from_mut(self), clocks, t)
    }
}

/// Drives several configurations with one shared event list.
pub fn run_basic_coupling(states: &mut [TasepState], clocks: &mut ClockStream, t: f64) -> Result<()> {
    let first = states.first().ok_or_else(|| Error::pre("no states"))?;
    let (geometry, direction, len, time) = (first.geometry, first.direction, first.len(), first.time);
    if states
        .iter()
        .any(|s| s.geometry != geometry || s.direction != direction || s.len() != len || s.time != time)
    {
        return Err(Error::pre("coupled states differ in geometry, direction, size or time"));
    }
    if clocks.len() != len {
        return Err(Error::pre(format!("{} clocks for {len} sites", clocks.len())));
    }
    if t < time {
        return Err(Error::pre(format!("target time {t} before current time {time}")));
    }
    while let Some((_, x)) = clocks.next_until(t) {
        for s in states.iter_mut() {
            s.ring(x);
        }
    }
    for s in states.iter_mut() {
        s.time = t;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub site: usize,
    pub estimate: f64,
    pub horizon: f64,
}

/// Speeds `(X_T(i) - i) / T` of the particles of the fully labelled ring.
///
/// Only particles far from the seam, where the lowest class sits next to the
/// highest, behave like particles on the line up to time `T`; see
/// [`clean_sites`].
pub fn speed_process_estimate(len: usize, t: f64, seed: u64) -> Result<Vec<SpeedEstimate>> {
    let mut state = TasepState::fully_labeled(len, Geometry::Ring, Direction::Right)?;
    let mut clocks = ClockStream::new(seed, len);
    state.run(&mut clocks, t)?;
    Ok((0..len)
        .map(|i| SpeedEstimate {
            site: i,
            estimate: if t > 0.0 { state.displacement(i) as f64 / t } else { 0.0 },
            horizon: t,
        })
        .collect())
}

/// Sites of the fully labelled ring whose distance to the seam on both sides
/// is at least `fraction * t` lattice units.
pub fn clean_sites(len: usize, t: f64, fraction: f64) -> std::ops::Range<usize> {
    let margin = (fraction * t).ceil() as usize;
    let lo = margin.saturating_sub(1).min(len);
    let hi = len.saturating_sub(margin).max(lo);
    lo..hi
}

/// Per-class counts and ordered nearest-neighbour label pair counts on the
/// ring. Labels are mapped to `0..m` and holes to `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RingStats {
    pub num_classes: u32,
    pub class_counts: Vec<u64>,
    /// `pairs[a * (m + 1) + b]` counts sites `x` with `(η(x), η(x + 1)) = (a, b)`.
    pub pairs: Vec<u64>,
}

impl RingStats {
    pub fn of(labels: &[Label], num_classes: u32) -> Self {
        let m = num_classes as usize;
        let idx = |l: Label| if l == HOLE { m } else { (l - 1) as usize };
        let mut class_counts = vec![0; m + 1];
        let mut pairs = vec![0; (m + 1) * (m + 1)];
        let n = labels.len();
        for x in 0..n {
            let a = idx(labels[x]);
            class_counts[a] += 1;
            pairs[a * (m + 1) + idx(labels[(x + 1) % n])] += 1;
        }
        RingStats {
            num_classes,
            class_counts,
            pairs,
        }
    }

    /// Statistic names and per-site frequencies: class densities for
    /// `1..=m`, then every ordered label pair.
    pub fn features(&self) -> Vec<(String, f64)> {
        let m = self.num_classes as usize;
        let n: u64 = self.class_counts.iter().sum();
        let name = |k: usize| if k == m { "H".to_string() } else { (k + 1).to_string() };
        let mut out: Vec<(String, f64)> = (0..m)
            .map(|k| (format!("density[{}]", k + 1), self.class_counts[k] as f64 / n as f64))
            .collect();
        for a in 0..=m {
            for b in 0..=m {
                out.push((
                    format!("pair[{},{}]", name(a), name(b)),
                    self.pairs[a * (m + 1) + b] as f64 / n as f64,
                ));
            }
        }
        out
    }
}

/// Options for [`stationarity_probe_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub direction: Direction,
    /// Extra sites sampled to the left of the ring window so that the
    /// stationary queue initialisation has relaxed; `None` picks a default.
    pub margin: Option<usize>,
    pub p_floor: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            direction: Direction::Left,
            margin: None,
            p_floor: 0.01,
        }
    }
}

/// Samples the multiline measure, wraps it onto a ring of `len` sites, runs
/// left-jump TASEP to `t` and compares time-0 and time-`t` class densities and
/// pair frequencies with paired t-tests across replicates (Bonferroni across
/// statistics).
pub fn stationarity_probe(lambdas: &DensityVector, len: usize, t: f64, reps: usize, seed: u64) -> Result<TestReport> {
    stationarity_probe_with(lambdas, len, t, reps, seed, ProbeOptions::default())
}

pub fn stationarity_probe_with(
    lambdas: &DensityVector,
    len: usize,
    t: f64,
    reps: usize,
    seed: u64,
    opts: ProbeOptions,
) -> Result<TestReport> {
    if reps < 2 {
        return Err(Error::param("reps", "need at least two replicates"));
    }
    if len < 2 {
        return Err(Error::param("L", "need at least two sites"));
    }
    let m = lambdas.len() as u32;
    let margin = opts.margin.unwrap_or(len / 4 + 64);
    let diffs: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let mut rng = stream(seed, "stationarity", r);
            let window = Window::int(-(margin as i64), len as i64 - 1)?;
            let sample = fm_sample_stationary(lambdas, window, &mut rng)?;
            let ring = sample.output.slice(Window::int(0, len as i64 - 1)?)?;
            let before = RingStats::of(ring.labels(), m).features();
            let mut state = TasepState::from_seq(&ring, Geometry::Ring, opts.direction)?;
            let mut clocks = ClockStream::new(child_seed(seed, "stationarity-clock", r), len);
            state.run(&mut clocks, t)?;
            let after = RingStats::of(state.labels(), m).features();
            Ok(after.iter().zip(&before).map(|(a, b)| a.1 - b.1).collect())
        })
        .collect::<Result<_>>()?;
    let names: Vec<String> = RingStats::of(&[HOLE; 2], m)
        .features()
        .into_iter()
        .map(|(n, _)| n)
        .collect();
    let floor = bonferroni(opts.p_floor, names.len());
    let mut worst: Option<TestReport> = None;
    for (k, name) in names.iter().enumerate() {
        let column: Vec<f64> = diffs.iter().map(|d| d[k]).collect();
        let rep = stats::t_test_zero(name, &column, floor)?;
        let p = rep.p_value.unwrap_or(0.0);
        if worst.as_ref().is_none_or(|w| p < w.p_value.unwrap_or(0.0)) {
            worst = Some(rep);
        }
    }
    let worst = worst.expect("at least one statistic");
    let p = worst.p_value.unwrap_or(0.0);
    Ok(TestReport::new("stationarity", worst.statistic, Some(p), PassRule::PValueAbove, floor)
        .with("worst_statistic", &worst.name)
        .with("statistics", names.len())
        .with("lambdas", format!("{:?}", lambdas.lambdas()))
        .with("L", len)
        .with("T", t)
        .with("reps", reps)
        .with("seed", seed)
        .with("direction", format!("{:?}", opts.direction)))
}

/// Writes `time,site,label` rows, holes as an empty label.
pub fn write_snapshot_csv<W: std::io::Write>(state: &TasepState, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time", "site", "label"])?;
    for (x, &l) in state.labels().iter().enumerate() {
        let label = if l == HOLE { String::new() } else { l.to_string() };
        out.write_record([state.time.to_string(), x.to_string(), label])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_speeds_csv<W: std::io::Write>(speeds: &[SpeedEstimate], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["site", "estimate"])?;
    for s in speeds {
        out.write_record([s.site.to_string(), s.estimate.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Random configuration for tests and benches: each site independently a
/// hole with probability `hole`, otherwise a uniform class in `1..=m`.
pub fn random_labels<R: Rng + ?Sized>(len: usize, m: u32, hole: f64, rng: &mut R) -> Vec<Label> {
    (0..len)
        .map(|_| {
            if rng.random::<f64>() < hole {
                HOLE
            } else {
                rng.random_range(1..=m)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_ring_is_frozen() {
        let mut s = TasepState::new(vec![1; 10], Geometry::Ring, Direction::Right).unwrap();
        let mut c = ClockStream::new(1, 10);
        s.run(&mut c, 50.0).unwrap();
        assert_eq!(s.labels(), &[1; 10]);
        assert!((0..10).all(|i| s.displacement(i) == 0));
    }

    #[test]
    fn two_site_ring_replay() {
        // Replays the event list by hand: on a two-site ring both neighbours
        // are the other site, so the class-1 particle swaps whenever its own
        // site rings.
        let mut s = TasepState::new(vec![1, 2], Geometry::Ring, Direction::Right).unwrap();
        let mut clocks = ClockStream::new(5, 2);
        let mut replay = ClockStream::new(5, 2);
        let mut pos = 0usize;
        let mut jumps = 0i64;
        while let Some((_, x)) = replay.next_until(10.0) {
            if x == pos {
                pos = 1 - pos;
                jumps += 1;
            }
        }
        s.run(&mut clocks, 10.0).unwrap();
        assert_eq!(s.labels()[pos], 1);
        assert_eq!(s.displacement(0), jumps);
        assert_eq!(s.displacement(1), -jumps);
    }

    #[test]
    fn segment_blocks_at_edge() {
        let mut s = TasepState::new(vec![HOLE, 1], Geometry::Segment, Direction::Right).unwrap();
        let mut c = ClockStream::new(2, 2);
        s.run(&mut c, 100.0).unwrap();
        assert_eq!(s.labels(), &[HOLE, 1]);
        let mut s = TasepState::new(vec![1, HOLE], Geometry::Segment, Direction::Right).unwrap();
        let mut c = ClockStream::new(2, 2);
        s.run(&mut c, 100.0).unwrap();
        assert_eq!(s.labels(), &[HOLE, 1]);
    }

    #[test]
    fn zero_horizon_speeds() {
        let u = speed_process_estimate(50, 0.0, 1).unwrap();
        assert!(u.iter().all(|s| s.estimate == 0.0));
    }

    #[test]
    fn clean_range() {
        assert_eq!(clean_sites(2000, 1000.0, 0.9), 899..1100);
        assert_eq!(clean_sites(10, 0.0, 0.9), 0..10);
    }

    #[test]
    fn ring_stats_counts() {
        let st = RingStats::of(&[1, 2, HOLE, 1], 2);
        assert_eq!(st.class_counts, vec![2, 1, 1]);
        // pairs: (1,2), (2,H), (H,1), (1,1) with wrap
        let f = st.features();
        let get = |n: &str| f.iter().find(|(k, _)| k == n).unwrap().1;
        assert_eq!(get("pair[1,2]"), 0.25);
        assert_eq!(get("pair[1,1]"), 0.25);
        assert_eq!(get("pair[2,1]"), 0.0);
        assert_eq!(get("density[1]"), 0.5);
    }

    #[test]
    fn probe_at_time_zero_passes() {
        let d = DensityVector::new(vec![0.3, 0.2]).unwrap();
        let r = stationarity_probe(&d, 100, 0.0, 4, 1).unwrap();
        assert!(r.passed);
        assert_eq!(r.statistic, 0.0);
    }
}
