//! Discrete-time queues fed by Bernoulli-type streams.
//!
//! At each time step the arrival (if any) joins first and the service (if
//! any) then removes one customer, so a customer can leave in the step it
//! arrives. The infinite past is replaced by an explicit initial queue
//! content: zero gives the truncated maps, a geometric draw gives the
//! stationary ones.

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::seq::{same_window, BinarySeq, Label, MultiClassSeq, PathFn, Window, HOLE};

/// Ordered class intensities `λ_1, ..., λ_n`, each positive, summing to at
/// most one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DensityVector(Vec<f64>);

impl DensityVector {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::param("lambdas", "need at least one class"));
        }
        if let Some(bad) = lambdas.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
            return Err(Error::param("lambdas", format!("{bad} is not in (0, 1)")));
        }
        let total: f64 = lambdas.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::param("lambdas", format!("sum {total} exceeds 1")));
        }
        Ok(DensityVector(lambdas))
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `S_k = λ_1 + ... + λ_k` for `k = 1..=n`: the intensity of stream `k`.
    pub fn cumulative(&self) -> Vec<f64> {
        self.0
            .iter()
            .scan(0.0, |acc, &l| {
                *acc += l;
                Some((*acc).min(1.0))
            })
            .collect()
    }
}

impl TryFrom<Vec<f64>> for DensityVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        DensityVector::new(v)
    }
}

impl From<DensityVector> for Vec<f64> {
    fn from(d: DensityVector) -> Self {
        d.0
    }
}

/// Everything one queue stage produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueResult {
    pub departures: BinarySeq,
    pub unused: BinarySeq,
    pub duals: BinarySeq,
    /// Queue length after each time step of the window.
    pub qlen: Vec<u64>,
    pub q_final: u64,
}

impl QueueResult {
    /// `time,qlen` rows.
    pub fn write_qlen_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["time", "qlen"])?;
        let lo = self.departures.lo();
        for (k, q) in self.qlen.iter().enumerate() {
            out.write_record([(lo + k as i64).to_string(), q.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Single-server queue with arrivals `a`, services `s` and `q_init`
/// customers waiting just before the window starts.
pub fn serve(a: &BinarySeq, s: &BinarySeq, q_init: u64) -> Result<QueueResult> {
    same_window(a.window(), s.window())?;
    let n = a.len();
    let mut d = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    let mut qlen = Vec::with_capacity(n);
    let mut q = q_init;
    for (&ai, &si) in a.bits().iter().zip(s.bits()) {
        let busy = q > 0 || ai;
        let di = si && busy;
        let ui = si && !busy;
        q = q + u64::from(ai) - u64::from(di);
        d.push(di);
        u.push(ui);
        r.push(ai || ui);
        qlen.push(q);
    }
    let lo = a.lo();
    Ok(QueueResult {
        departures: BinarySeq::new(lo, d)?,
        unused: BinarySeq::new(lo, u)?,
        duals: BinarySeq::new(lo, r)?,
        qlen,
        q_final: q,
    })
}

/// Departures `D(a, s)` with an empty initial queue.
pub fn depart(a: &BinarySeq, s: &BinarySeq) -> Result<BinarySeq> {
    Ok(serve(a, s, 0)?.departures)
}

/// Dual services `R(a, s)` with an empty initial queue.
pub fn dual(a: &BinarySeq, s: &BinarySeq) -> Result<BinarySeq> {
    Ok(serve(a, s, 0)?.duals)
}

/// `D^n(x_1, ..., x_n)`: `x_1` feeds the queue served by `x_2`, whose output
/// feeds the queue served by `x_3`, and so on.
pub fn tandem_depart(streams: &[BinarySeq], q_inits: &[u64]) -> Result<BinarySeq> {
    if streams.len() < 2 {
        return Err(Error::pre("a tandem needs at least two streams"));
    }
    if q_inits.len() != streams.len() - 1 {
        return Err(Error::pre(format!(
            "{} streams need {} initial queues, got {}",
            streams.len(),
            streams.len() - 1,
            q_inits.len()
        )));
    }
    let mut out = streams[0].clone();
    for (s, &q) in streams[1..].iter().zip(q_inits) {
        out = serve(&out, s, q)?.departures;
    }
    Ok(out)
}

/// Truncated `D^n` (all queues start empty). A single stream is returned
/// unchanged, which is the convention `D^1(x) = x`.
pub fn tandem_truncated(streams: &[BinarySeq]) -> Result<BinarySeq> {
    match streams.len() {
        0 => Err(Error::pre("no streams")),
        1 => Ok(streams[0].clone()),
        n => tandem_depart(streams, &vec![0; n - 1]),
    }
}

/// Two queues in tandem evaluated through the min-plus formula for the
/// cumulative departures:
///
/// `#d[k, t-1] = min_{k <= l <= v <= t} a[k, l-1] + s1[l, v-1] + s2[v, t-1]`
///
/// with `k` the window start. The minimum over `l` is carried as a running
/// minimum, giving `O(n^2)` work overall.
pub fn tandem_minplus_oracle(a: &BinarySeq, s1: &BinarySeq, s2: &BinarySeq) -> Result<BinarySeq> {
    same_window(a.window(), s1.window())?;
    same_window(a.window(), s2.window())?;
    let n = a.len();
    let ca = a.prefix_counts();
    let c1 = s1.prefix_counts();
    let c2 = s2.prefix_counts();
    // Offsets are relative to the window start, so `t` runs over 0..=n.
    let mut cum = vec![0i64; n + 1];
    for t in 1..=n {
        let mut best = i64::MAX;
        let mut inner = i64::MAX;
        for v in 0..=t {
            // min over l <= v of a[0, l-1] - s1[0, l-1]
            inner = inner.min(ca[v] as i64 - c1[v] as i64);
            let total = inner + c1[v] as i64 + (c2[t] - c2[v]) as i64;
            best = best.min(total);
        }
        cum[t] = best;
    }
    let bits = (0..n)
        .map(|t| match cum[t + 1] - cum[t] {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::pre(format!("cumulative departures jumped by {other}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    BinarySeq::new(a.lo(), bits)
}

/// Height function of the departures computed from the walk representation
///
/// `P[D](i) = P[s](i) + sup_{j<=0} W(j) - sup_{j<=i} W(j)`, `W = P[s] - P[a]`,
///
/// with the suprema restricted to the window. This agrees with
/// `height_map(serve(a, s, 0).departures)` because an empty queue at the
/// window start makes the restricted suprema exact.
pub fn depart_walk_oracle(a: &BinarySeq, s: &BinarySeq) -> Result<PathFn> {
    same_window(a.window(), s.window())?;
    let pa = crate::seq::height_map(a)?;
    let ps = crate::seq::height_map(s)?;
    let w: Vec<f64> = ps
        .values()
        .iter()
        .zip(pa.values())
        .map(|(x, y)| x - y)
        .collect();
    let mut running = Vec::with_capacity(w.len());
    let mut m = f64::NEG_INFINITY;
    for &x in &w {
        m = m.max(x);
        running.push(m);
    }
    let origin = (-a.lo()) as usize;
    let sup0 = running[origin];
    let values = ps
        .values()
        .iter()
        .zip(&running)
        .map(|(p, r)| p + sup0 - r)
        .collect();
    PathFn::new(ps.x_lo(), 1.0, values)
}

/// Priority queue over classes `1..=m`, keeping per-class counts and a bitset
/// of nonempty classes.
#[derive(Debug, Clone)]
pub struct ClassQueue {
    counts: Vec<u64>,
    nonempty: Vec<u64>,
}

impl ClassQueue {
    pub fn new(m: u32) -> Self {
        let m = m as usize;
        ClassQueue {
            counts: vec![0; m],
            nonempty: vec![0; m.div_ceil(64)],
        }
    }

    /// Queue holding `init[c - 1]` customers of class `c`.
    pub fn with_counts(init: &[u64]) -> Self {
        let mut q = ClassQueue::new(init.len() as u32);
        for (k, &c) in init.iter().enumerate() {
            if c > 0 {
                q.counts[k] = c;
                q.nonempty[k / 64] |= 1 << (k % 64);
            }
        }
        q
    }

    pub fn push(&mut self, class: Label) {
        let k = (class - 1) as usize;
        self.counts[k] += 1;
        self.nonempty[k / 64] |= 1 << (k % 64);
    }

    /// Removes and returns the highest-priority (smallest) class.
    pub fn pop(&mut self) -> Option<Label> {
        let (w, word) = self
            .nonempty
            .iter()
            .enumerate()
            .find(|(_, &word)| word != 0)?;
        let k = w * 64 + word.trailing_zeros() as usize;
        self.counts[k] -= 1;
        if self.counts[k] == 0 {
            self.nonempty[w] &= !(1 << (k % 64));
        }
        Some(k as Label + 1)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// The priority map `F_m`: arrivals carry classes `1..=m`, lower classes are
/// served first, an unused service leaves class `m + 1` and a step without
/// service leaves a hole. `init[c - 1]` is the initial number of class-`c`
/// customers (all zero when `None`).
pub fn multiclass_serve(
    a: &MultiClassSeq,
    s: &BinarySeq,
    init: Option<&[u64]>,
) -> Result<MultiClassSeq> {
    same_window(a.window(), s.window())?;
    let m = a.num_classes();
    let mut q = match init {
        Some(c) if c.len() != m as usize => {
            return Err(Error::pre(format!(
                "{} initial class counts for {m} classes",
                c.len()
            )))
        }
        Some(c) => ClassQueue::with_counts(c),
        None => ClassQueue::new(m),
    };
    let labels = a
        .labels()
        .iter()
        .zip(s.bits())
        .map(|(&l, &si)| {
            if l != HOLE {
                q.push(l);
            }
            if !si {
                HOLE
            } else {
                q.pop().unwrap_or(m + 1)
            }
        })
        .collect();
    Ok(MultiClassSeq::from_parts(a.lo(), labels, m + 1))
}

/// Multiline construction `v_1 = x_1`, `v_m = F_{m-1}(v_{m-1}, x_m)` with
/// empty initial queues.
pub fn fm_construct(xs: &[BinarySeq]) -> Result<MultiClassSeq> {
    fm_construct_with_init(xs, &[])
}

/// As [`fm_construct`], with `inits[m - 1]` the class counts of the queue
/// served by `x_{m+1}` (length `m`). An empty `inits` means all queues start
/// empty.
pub fn fm_construct_with_init(xs: &[BinarySeq], inits: &[Vec<u64>]) -> Result<MultiClassSeq> {
    let first = xs.first().ok_or_else(|| Error::pre("no input streams"))?;
    if !inits.is_empty() && inits.len() != xs.len() - 1 {
        return Err(Error::pre(format!(
            "{} streams need {} stage initial states, got {}",
            xs.len(),
            xs.len() - 1,
            inits.len()
        )));
    }
    let mut v = first.to_multiclass();
    for (stage, x) in xs[1..].iter().enumerate() {
        let init = inits.get(stage).map(Vec::as_slice);
        v = multiclass_serve(&v, x, init)?;
    }
    Ok(v)
}

/// Number of sites in `[i, j]` whose label is at most `m`.
pub fn class_count(v: &MultiClassSeq, m: Label, i: i64, j: i64) -> Result<u64> {
    v.indicator_leq(m)?.count(i, j)
}

/// Checks that class counts of the multiline output agree with tandem
/// departures: the sites with label `<= k` in `fm_construct(x)` are exactly
/// the departures `D(x_k, ..., x_n)`, for every `k` (truncated convention
/// on both sides). Agreement of prefix counts is agreement on every interval.
pub fn lemma_cl_check(xs: &[BinarySeq]) -> Result<bool> {
    let v = fm_construct(xs)?;
    for k in 1..=xs.len() {
        let lhs = v.indicator_leq(k as Label)?.prefix_counts();
        let rhs = tandem_truncated(&xs[k - 1..])?.prefix_counts();
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Class projection: the output label is at most `l` exactly when the input
/// label is at most `idx[l - 1]`; labels beyond the last index become holes.
pub fn relabel(v: &MultiClassSeq, idx: &[Label]) -> Result<MultiClassSeq> {
    if idx.is_empty() {
        return Err(Error::pre("empty class index list"));
    }
    if idx.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::pre("class indices must be strictly increasing"));
    }
    let m = v.num_classes();
    if idx[0] == 0 || *idx.last().unwrap() > m {
        return Err(Error::ClassOutOfRange {
            label: if idx[0] == 0 { 0 } else { *idx.last().unwrap() },
            max: m,
        });
    }
    // lookup[c] = new label for old class c
    let mut lookup = vec![HOLE; m as usize + 1];
    let mut l = 0usize;
    for c in 1..=m {
        while l < idx.len() && idx[l] < c {
            l += 1;
        }
        if l < idx.len() {
            lookup[c as usize] = l as Label + 1;
        }
    }
    let labels = v
        .labels()
        .iter()
        .map(|&c| if c == HOLE { HOLE } else { lookup[c as usize] })
        .collect();
    Ok(MultiClassSeq::from_parts(v.lo(), labels, idx.len() as u32))
}

/// Bernoulli stream of intensity `p` on `window`.
pub fn bernoulli_seq<R: Rng + ?Sized>(p: f64, window: Window<i64>, rng: &mut R) -> Result<BinarySeq> {
    let dist = Bernoulli::new(p).map_err(|e| Error::param("p", e.to_string()))?;
    let bits = (0..window.len()).map(|_| dist.sample(rng)).collect();
    BinarySeq::new(window.lo, bits)
}

/// Independent input streams: stream `k` has intensity `λ_1 + ... + λ_k`.
pub fn sample_inputs_with<R: Rng + ?Sized>(
    lambdas: &DensityVector,
    window: Window<i64>,
    rng: &mut R,
) -> Result<Vec<BinarySeq>> {
    lambdas
        .cumulative()
        .into_iter()
        .map(|p| bernoulli_seq(p, window, rng))
        .collect()
}

pub fn sample_inputs(lambdas: &DensityVector, window: Window<i64>, seed: u64) -> Result<Vec<BinarySeq>> {
    let mut rng = stream(seed, "inputs", 0);
    sample_inputs_with(lambdas, window, &mut rng)
}

/// `γ = β / ((1 - α)(α + β))`, the parameter of the stationary queue length
/// for arrival rate `α` and service rate `α + β`.
pub fn stationary_gamma(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0 && alpha + beta < 1.0) {
        return Err(Error::param(
            "alpha, beta",
            format!("need 0 < alpha < alpha + beta < 1, got alpha={alpha}, beta={beta}"),
        ));
    }
    Ok((beta / ((1.0 - alpha) * (alpha + beta))).min(1.0))
}

/// One draw of the stationary queue length, `P(Q = k) = γ (1 - γ)^k`.
pub fn stationary_queue_init_with<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> Result<u64> {
    let gamma = stationary_gamma(alpha, beta)?;
    let geo = Geometric::new(gamma).map_err(|e| Error::param("gamma", e.to_string()))?;
    Ok(geo.sample(rng))
}

pub fn stationary_queue_init(alpha: f64, beta: f64, seed: u64) -> Result<u64> {
    stationary_queue_init_with(alpha, beta, &mut stream(seed, "queue-init", 0))
}

/// Quantile of the failure-count geometric law at uniform `u ∈ (0, 1]`.
pub fn geometric_quantile(gamma: f64, u: f64) -> u64 {
    if gamma >= 1.0 {
        return 0;
    }
    let k = (u.ln() / (1.0 - gamma).ln()).floor();
    if k.is_finite() && k >= 0.0 {
        k.min(u64::MAX as f64 / 2.0) as u64
    } else {
        0
    }
}

/// Initial class counts for the multiline stage whose service stream has
/// intensity `cum[stage]` (zero-based stage `m - 1` serves `x_{m+1}`).
///
/// The number of customers of class `<= k` is geometric with parameter
/// `(S_{m+1} - S_k) / ((1 - S_k) S_{m+1})`, its stationary law. All `k` share
/// one uniform, which nests the counts; the joint law is exact for two
/// classes and an approximation beyond that, which the burn-in margin of the
/// callers absorbs.
pub fn stationary_class_init<R: Rng + ?Sized>(cum: &[f64], stage: usize, rng: &mut R) -> Vec<u64> {
    let m = stage + 1;
    let service = cum[m];
    let u: f64 = 1.0 - rng.random::<f64>();
    let mut out = Vec::with_capacity(m);
    let mut prev = 0u64;
    for &sk in &cum[..m] {
        let gamma = ((service - sk) / ((1.0 - sk) * service)).clamp(f64::MIN_POSITIVE, 1.0);
        let q = geometric_quantile(gamma, u).max(prev);
        out.push(q - prev);
        prev = q;
    }
    out
}

/// Inputs and output of the multiline construction with stationary stage
/// initial states.
#[derive(Debug, Clone)]
pub struct FmSample {
    pub inputs: Vec<BinarySeq>,
    pub inits: Vec<Vec<u64>>,
    pub output: MultiClassSeq,
}

pub fn fm_sample_stationary<R: Rng + ?Sized>(
    lambdas: &DensityVector,
    window: Window<i64>,
    rng: &mut R,
) -> Result<FmSample> {
    let inputs = sample_inputs_with(lambdas, window, rng)?;
    let cum = lambdas.cumulative();
    let inits: Vec<Vec<u64>> = (0..inputs.len() - 1)
        .map(|stage| stationary_class_init(&cum, stage, rng))
        .collect();
    let output = fm_construct_with_init(&inputs, &inits)?;
    Ok(FmSample {
        inputs,
        inits,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(lo: i64, s: &str) -> BinarySeq {
        BinarySeq::from_str01(lo, s).unwrap()
    }

    /// Textbook queue: a list of waiting customers, one step at a time.
    fn naive_departures(a: &[bool], s: &[bool], q0: usize) -> Vec<bool> {
        let mut waiting = vec![(); q0];
        a.iter()
            .zip(s)
            .map(|(&ai, &si)| {
                if ai {
                    waiting.push(());
                }
                si && waiting.pop().is_some()
            })
            .collect()
    }

    #[test]
    fn serve_example() {
        let r = serve(&b(1, "101100"), &b(1, "011011"), 0).unwrap();
        assert_eq!(r.departures.to_string(), "011010");
        assert_eq!(r.unused.to_string(), "000001");
        assert_eq!(r.duals.to_string(), "101101");
        assert_eq!(r.q_final, 0);
    }

    #[test]
    fn serve_degenerate_streams() {
        let s = b(0, "110101");
        let r = serve(&b(0, "000000"), &s, 0).unwrap();
        assert_eq!(r.departures.total(), 0);
        assert_eq!(r.unused, s);
        assert_eq!(r.duals, s);

        let a = b(0, "101101");
        let r = serve(&a, &b(0, "000000"), 3).unwrap();
        assert_eq!(r.departures.total(), 0);
        assert_eq!(r.qlen, vec![4, 4, 5, 6, 6, 7]);

        assert!(serve(&a, &b(1, "101101"), 0).is_err());
    }

    #[test]
    fn tandem_basics() {
        let x1 = b(0, "1101001");
        let x2 = b(0, "0111011");
        let x3 = b(0, "1011110");
        assert_eq!(tandem_depart(&[x1.clone(), x2.clone()], &[0]).unwrap(), depart(&x1, &x2).unwrap());
        let zero = BinarySeq::zeros(x1.window());
        assert_eq!(tandem_depart(&[zero, x2.clone(), x3.clone()], &[0, 0]).unwrap().total(), 0);
        assert!(tandem_depart(std::slice::from_ref(&x1), &[]).is_err());
        assert!(tandem_depart(&[x1, x2], &[0, 0]).is_err());
    }

    #[test]
    fn minplus_examples() {
        let ones = BinarySeq::ones(Window::int(0, 9).unwrap());
        let zeros = BinarySeq::zeros(Window::int(0, 9).unwrap());
        assert_eq!(tandem_minplus_oracle(&zeros, &ones, &ones).unwrap().total(), 0);
        let a = b(0, "1011001110");
        assert_eq!(tandem_minplus_oracle(&a, &ones, &ones).unwrap(), a);
    }

    #[test]
    fn walk_oracle_trivial_cases() {
        let a = b(-3, "101100");
        let p = depart_walk_oracle(&a, &a).unwrap();
        assert_eq!(p.values(), crate::seq::height_map(&a).unwrap().values());
        let zeros = b(-3, "000000");
        let p = depart_walk_oracle(&zeros, &a).unwrap();
        for w in p.values().windows(2) {
            assert_eq!(w[1] - w[0], -1.0);
        }
        assert!(depart_walk_oracle(&b(1, "10"), &b(1, "11")).is_err());
    }

    #[test]
    fn multiclass_serve_examples() {
        let a = MultiClassSeq::new(0, vec![1, HOLE, 1, HOLE], 1).unwrap();
        let out = multiclass_serve(&a, &b(0, "0111"), None).unwrap();
        assert_eq!(out.labels(), &[HOLE, 1, 1, 2]);
        assert_eq!(out.num_classes(), 2);

        let a = MultiClassSeq::new(0, vec![2, 1, HOLE, 3], 3).unwrap();
        let out = multiclass_serve(&a, &b(0, "0000"), None).unwrap();
        assert!(out.labels().iter().all(|&l| l == HOLE));

        let a = MultiClassSeq::new(0, vec![HOLE; 4], 2).unwrap();
        let out = multiclass_serve(&a, &b(0, "1010"), None).unwrap();
        assert_eq!(out.labels(), &[3, HOLE, 3, HOLE]);
    }

    #[test]
    fn multiclass_serve_priority_and_init() {
        // class 2 waits while class 1 arrives and is served first
        let a = MultiClassSeq::new(0, vec![2, 1, HOLE, HOLE], 2).unwrap();
        let out = multiclass_serve(&a, &b(0, "0111"), None).unwrap();
        assert_eq!(out.labels(), &[HOLE, 1, 2, 3]);
        let a = MultiClassSeq::new(0, vec![HOLE, HOLE, HOLE], 2).unwrap();
        let out = multiclass_serve(&a, &b(0, "111"), Some(&[0, 2])).unwrap();
        assert_eq!(out.labels(), &[2, 2, 3]);
    }

    #[test]
    fn fm_small_cases() {
        let x1 = b(0, "10110");
        let v = fm_construct(std::slice::from_ref(&x1)).unwrap();
        assert_eq!(v.indicator_leq(1).unwrap(), x1);
        let x2 = b(0, "01111");
        let v = fm_construct(&[x1.clone(), x2.clone()]).unwrap();
        assert_eq!(v.indicator_leq(1).unwrap(), depart(&x1, &x2).unwrap());
        assert!(fm_construct(&[]).is_err());
    }

    #[test]
    fn class_count_examples() {
        let v = MultiClassSeq::new(0, vec![1, 3, 2, HOLE], 3).unwrap();
        assert_eq!(class_count(&v, 2, 0, 3).unwrap(), 2);
        assert_eq!(class_count(&v, 3, 0, 3).unwrap(), 3);
        assert_eq!(class_count(&v, 1, 0, 3).unwrap(), 1);
        assert!(class_count(&v, 4, 0, 3).is_err());
    }

    #[test]
    fn relabel_examples() {
        let v = MultiClassSeq::new(0, vec![1, 3, 2, 4], 4).unwrap();
        assert_eq!(relabel(&v, &[1, 2, 3, 4]).unwrap(), v);
        assert_eq!(relabel(&v, &[2, 4]).unwrap().labels(), &[1, 2, 1, 2]);
        let w = MultiClassSeq::new(0, vec![1, HOLE, 4, 2], 4).unwrap();
        assert_eq!(relabel(&w, &[4]).unwrap().labels(), &[1, HOLE, 1, 1]);
        assert_eq!(relabel(&w, &[2]).unwrap().labels(), &[1, HOLE, HOLE, 1]);
        assert!(relabel(&v, &[2, 2]).is_err());
        assert!(relabel(&v, &[3, 1]).is_err());
        assert!(relabel(&v, &[5]).is_err());
    }

    #[test]
    fn densities_and_gamma() {
        assert!(DensityVector::new(vec![0.6, 0.5]).is_err());
        assert!(DensityVector::new(vec![0.0]).is_err());
        let d = DensityVector::new(vec![0.3, 0.2, 0.1]).unwrap();
        let c = d.cumulative();
        assert!((c[2] - 0.6).abs() < 1e-12);
        assert!((stationary_gamma(0.5, 0.25).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((stationary_gamma(0.5, 0.05).unwrap() - 0.05 / 0.275).abs() < 1e-12);
        assert!(stationary_gamma(0.5, 0.5).is_err());
        assert_eq!(geometric_quantile(1.0, 0.3), 0);
        assert_eq!(geometric_quantile(0.5, 1.0), 0);
        assert_eq!(geometric_quantile(0.5, 0.25), 2);
    }

    #[test]
    fn sampling_is_reproducible() {
        let d = DensityVector::new(vec![0.3, 0.2]).unwrap();
        let w = Window::int(-50, 49).unwrap();
        assert_eq!(sample_inputs(&d, w, 4).unwrap(), sample_inputs(&d, w, 4).unwrap());
        assert_ne!(sample_inputs(&d, w, 4).unwrap(), sample_inputs(&d, w, 5).unwrap());
        assert_eq!(stationary_queue_init(0.5, 0.25, 9).unwrap(), stationary_queue_init(0.5, 0.25, 9).unwrap());
    }

    #[test]
    fn class_init_is_nested_and_sized() {
        let d = DensityVector::new(vec![0.3, 0.2, 0.1, 0.05]).unwrap();
        let cum = d.cumulative();
        let mut rng = stream(1, "t", 0);
        for stage in 0..3 {
            let c = stationary_class_init(&cum, stage, &mut rng);
            assert_eq!(c.len(), stage + 1);
        }
    }

    fn pair(max: usize) -> impl Strategy<Value = (BinarySeq, BinarySeq)> {
        (1..max).prop_flat_map(|n| {
            (
                prop::collection::vec(any::<bool>(), n),
                prop::collection::vec(any::<bool>(), n),
            )
                .prop_map(|(a, s)| (BinarySeq::new(-3, a).unwrap(), BinarySeq::new(-3, s).unwrap()))
        })
    }

    proptest! {
        #[test]
        fn serve_matches_textbook_queue((a, s) in pair(60), q0 in 0u64..5) {
            let r = serve(&a, &s, q0).unwrap();
            let naive = naive_departures(a.bits(), s.bits(), q0 as usize);
            prop_assert_eq!(r.departures.bits(), &naive[..]);
        }

        #[test]
        fn conservation_and_balance((a, s) in pair(60), q0 in 0u64..5) {
            let r = serve(&a, &s, q0).unwrap();
            for k in 0..a.len() {
                let (d, u) = (r.departures.bits()[k], r.unused.bits()[k]);
                prop_assert_eq!(u8::from(d) + u8::from(u), u8::from(s.bits()[k]));
                prop_assert!(!(a.bits()[k] && u));
                prop_assert_eq!(r.duals.bits()[k], a.bits()[k] || u);
            }
            let lo = a.lo();
            let q = |t: i64| if t < lo { q0 } else { r.qlen[(t - lo) as usize] };
            for j in lo..=a.hi() {
                for i in j..=a.hi() {
                    let lhs = r.departures.count(j, i).unwrap() as i64;
                    let rhs = q(j - 1) as i64 - q(i) as i64 + a.count(j, i).unwrap() as i64;
                    prop_assert_eq!(lhs, rhs);
                }
            }
        }

        #[test]
        fn single_class_priority_queue_is_plain_queue((a, s) in pair(60)) {
            let out = multiclass_serve(&a.to_multiclass(), &s, None).unwrap();
            let r = serve(&a, &s, 0).unwrap();
            for k in 0..a.len() {
                let expect = if r.departures.bits()[k] { 1 } else if r.unused.bits()[k] { 2 } else { HOLE };
                prop_assert_eq!(out.labels()[k], expect);
            }
        }

        #[test]
        fn lemma_cl_holds(xs in (2usize..6, 1usize..40).prop_flat_map(|(n, len)|
            prop::collection::vec(prop::collection::vec(any::<bool>(), len), n))) {
            let xs: Vec<BinarySeq> = xs.into_iter().map(|b| BinarySeq::new(0, b).unwrap()).collect();
            prop_assert!(lemma_cl_check(&xs).unwrap());
        }
    }
}
