//! Tolerance-free checks of the queueing identities, over every input up to
//! a small length plus random longer instances.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::queue::{
    bernoulli_seq, depart, depart_walk_oracle, fm_construct, lemma_cl_check, serve, tandem_depart,
    tandem_minplus_oracle, tandem_truncated,
};
use crate::rng::{stream, SimRng};
use crate::seq::{height_map, BinarySeq, Window};
use crate::stats::TestReport;

/// Sizes for the exact suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactConfig {
    /// Random instances per suite.
    pub reps: usize,
    /// Longest random instance.
    pub max_len: usize,
    /// Every input of length up to this is checked.
    pub exhaustive_len: usize,
    pub seed: u64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig {
            reps: 1000,
            max_len: 200,
            exhaustive_len: 8,
            seed: 0,
        }
    }
}

#[derive(Default)]
struct Tally {
    mismatches: u64,
    checked: u64,
}

impl Tally {
    fn check(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.mismatches += 1;
        }
    }

    fn report(self, name: &str, cfg: &ExactConfig) -> TestReport {
        TestReport::exact(name, self.mismatches, self.checked)
            .with("reps", cfg.reps)
            .with("max_len", cfg.max_len)
            .with("exhaustive_len", cfg.exhaustive_len)
            .with("seed", cfg.seed)
    }
}

/// `D` and `R` of every pair of masks of length `len`, indexed `[a << len | s]`.
struct PairTable {
    len: usize,
    d: Vec<u16>,
    r: Vec<u16>,
}

impl PairTable {
    fn new(len: usize) -> Result<Self> {
        assert!(len <= 8);
        let n = 1usize << len;
        let mut d = vec![0; n * n];
        let mut r = vec![0; n * n];
        for a in 0..n {
            for s in 0..n {
                let out = serve(&seq(len, a), &seq(len, s), 0)?;
                d[a << len | s] = mask(&out.departures);
                r[a << len | s] = mask(&out.duals);
            }
        }
        Ok(PairTable { len, d, r })
    }

    fn d(&self, a: u16, s: u16) -> u16 {
        self.d[(a as usize) << self.len | s as usize]
    }

    fn r(&self, a: u16, s: u16) -> u16 {
        self.r[(a as usize) << self.len | s as usize]
    }
}

fn seq(len: usize, m: usize) -> BinarySeq {
    BinarySeq::from_mask(0, len, m as u64)
}

fn mask(x: &BinarySeq) -> u16 {
    x.bits()
        .iter()
        .enumerate()
        .fold(0, |m, (k, &b)| m | (u16::from(b) << k))
}

/// Random instance: `n` streams of a random common length, each with its own
/// random intensity, on a window that contains the origin.
fn random_streams(rng: &mut SimRng, n: usize, max_len: usize) -> Result<Vec<BinarySeq>> {
    let len = rng.random_range(1..=max_len.max(1)) as i64;
    let lo = -rng.random_range(0..=len);
    let window = Window::int(lo, lo + len - 1)?;
    (0..n)
        .map(|_| {
            let p = rng.random_range(0.05..0.95);
            bernoulli_seq(p, window, rng)
        })
        .collect()
}

/// Regrouping and pair-swap identities of the truncated tandem map on one
/// instance. Returns `(mismatches, checked)`.
fn interchange_instance(xs: &[BinarySeq]) -> Result<(u64, u64)> {
    let n = xs.len();
    let lhs = tandem_truncated(xs)?;
    let (mut bad, mut total) = (0, 0);
    for k in 1..n {
        let mut grouped = vec![tandem_truncated(&xs[..n - k])?];
        grouped.extend_from_slice(&xs[n - k..]);
        total += 1;
        bad += u64::from(tandem_truncated(&grouped)? != lhs);
    }
    for k in 2..n {
        let out = serve(&xs[k - 1], &xs[k], 0)?;
        let mut swapped = xs[..k - 1].to_vec();
        swapped.push(out.duals);
        swapped.push(out.departures);
        swapped.extend_from_slice(&xs[k + 1..]);
        total += 1;
        bad += u64::from(tandem_truncated(&swapped)? != lhs);
    }
    Ok((bad, total))
}

/// Interchangeability of the tandem maps: regrouping
/// `D^n(x) = D^{k+1}(D^{n-k}(x_1..x_{n-k}), x_{n-k+1}..x_n)` and the pair swap
/// `D^n(x) = D^n(.., R(x_k, x_{k+1}), D(x_k, x_{k+1}), ..)`.
///
/// Random instances use `n` up to 5. The exhaustive part covers `n = 3`: the
/// pair swap through lookup tables built from [`serve`], and regrouping
/// against [`tandem_truncated`] for lengths up to 7.
pub fn interchange_suite(cfg: &ExactConfig) -> Result<TestReport> {
    let mut t = Tally::default();
    let mut rng = stream(cfg.seed, "interchange", 0);
    for _ in 0..cfg.reps {
        let n = rng.random_range(2..=5);
        let xs = random_streams(&mut rng, n, cfg.max_len)?;
        let (bad, total) = interchange_instance(&xs)?;
        t.mismatches += bad;
        t.checked += total;
    }
    for len in 1..=cfg.exhaustive_len.min(8) {
        let table = PairTable::new(len)?;
        let n = 1u16 << len;
        for x1 in 0..n {
            for x2 in 0..n {
                let d12 = table.d(x1, x2);
                for x3 in 0..n {
                    let lhs = table.d(d12, x3);
                    let rhs = table.d(table.d(x1, table.r(x2, x3)), table.d(x2, x3));
                    t.check(lhs == rhs);
                }
            }
        }
        if len <= 7 {
            for x1 in 0..n {
                for x2 in 0..n {
                    let d12 = seq(len, table.d(x1, x2) as usize);
                    for x3 in 0..n {
                        let xs = [seq(len, x1 as usize), seq(len, x2 as usize), seq(len, x3 as usize)];
                        let full = tandem_truncated(&xs)?;
                        let grouped = tandem_truncated(&[d12.clone(), xs[2].clone()])?;
                        t.check(full == grouped);
                    }
                }
            }
        }
    }
    Ok(t.report("interchange", cfg))
}

/// Class-count identity of the multiline construction (see
/// [`lemma_cl_check`]): exhaustive for two streams up to the configured
/// length and for three streams up to one less; random instances with up
/// to five streams.
pub fn lemma_cl_batch(cfg: &ExactConfig) -> Result<TestReport> {
    let mut t = Tally::default();
    let mut rng = stream(cfg.seed, "lemma-cl", 0);
    for _ in 0..cfg.reps {
        let n = rng.random_range(1..=5);
        let xs = random_streams(&mut rng, n, cfg.max_len)?;
        t.check(lemma_cl_check(&xs)?);
    }
    for len in 1..=cfg.exhaustive_len.min(8) {
        let n = 1usize << len;
        for a in 0..n {
            for b in 0..n {
                t.check(lemma_cl_check(&[seq(len, a), seq(len, b)])?);
                if len < cfg.exhaustive_len {
                    for c in 0..n {
                        t.check(lemma_cl_check(&[seq(len, a), seq(len, b), seq(len, c)])?);
                    }
                }
            }
        }
    }
    Ok(t.report("lemma_cl", cfg))
}

/// Two queues in tandem against the min-plus formula for cumulative
/// departures.
pub fn minplus_batch(cfg: &ExactConfig) -> Result<TestReport> {
    let mut t = Tally::default();
    let mut rng = stream(cfg.seed, "minplus", 0);
    for _ in 0..cfg.reps {
        let xs = random_streams(&mut rng, 3, cfg.max_len)?;
        let direct = tandem_truncated(&xs)?;
        t.check(tandem_minplus_oracle(&xs[0], &xs[1], &xs[2])? == direct);
    }
    for len in 1..=cfg.exhaustive_len.min(8) {
        let table = PairTable::new(len)?;
        let n = 1u16 << len;
        for a in 0..n {
            let sa = seq(len, a as usize);
            for s1 in 0..n {
                let ss1 = seq(len, s1 as usize);
                let d1 = table.d(a, s1);
                for s2 in 0..n {
                    let oracle = tandem_minplus_oracle(&sa, &ss1, &seq(len, s2 as usize))?;
                    t.check(mask(&oracle) == table.d(d1, s2));
                }
            }
        }
    }
    Ok(t.report("minplus_oracle", cfg))
}

/// Height function of the departures against the walk representation.
pub fn walk_oracle_batch(cfg: &ExactConfig) -> Result<TestReport> {
    let mut t = Tally::default();
    let mut check = |a: &BinarySeq, s: &BinarySeq| -> Result<()> {
        let direct = height_map(&depart(a, s)?)?;
        let walk = depart_walk_oracle(a, s)?;
        t.check(direct.values() == walk.values() && direct.x_lo() == walk.x_lo());
        Ok(())
    };
    let mut rng = stream(cfg.seed, "walk-oracle", 0);
    for _ in 0..cfg.reps {
        let xs = random_streams(&mut rng, 2, cfg.max_len)?;
        check(&xs[0], &xs[1])?;
    }
    for len in 1..=cfg.exhaustive_len.min(8) {
        let n = 1u64 << len;
        let lo = -(len as i64) / 2;
        for a in 0..n {
            for s in 0..n {
                check(
                    &BinarySeq::from_mask(lo, len, a),
                    &BinarySeq::from_mask(lo, len, s),
                )?;
            }
        }
    }
    Ok(t.report("walk_oracle", cfg))
}

fn dominated_prefix(lo: &BinarySeq, hi: &BinarySeq) -> bool {
    lo.prefix_counts()
        .iter()
        .zip(hi.prefix_counts())
        .all(|(a, b)| *a <= b)
}

/// Monotonicity of one instance: `d ⪯ s` and `a ⪯ r` bitwise at the first
/// queue, cumulative tandem departures nondecreasing when any single input
/// bit is switched on, and truncated departures cumulatively below those of
/// tandems started with customers waiting.
fn monotone_instance(xs: &[BinarySeq], t: &mut Tally) -> Result<()> {
    let first = serve(&xs[0], &xs[1], 0)?;
    t.check(first.departures.is_dominated_by(&xs[1])?);
    t.check(xs[0].is_dominated_by(&first.duals)?);
    let base = tandem_truncated(xs)?;
    for (j, x) in xs.iter().enumerate() {
        for i in x.lo()..=x.hi() {
            if !x.get(i)? {
                let mut up = xs.to_vec();
                up[j].set(i, true)?;
                t.check(dominated_prefix(&base, &tandem_truncated(&up)?));
            }
        }
    }
    for q in 1..=3u64 {
        let inits = vec![q; xs.len() - 1];
        t.check(dominated_prefix(&base, &tandem_depart(xs, &inits)?));
    }
    Ok(())
}

/// Order properties of the queueing maps; zero violations required.
/// Random instances use two to four streams and are capped at length 60
/// because every single-bit upgrade is recomputed.
pub fn monotonicity_suite(cfg: &ExactConfig) -> Result<TestReport> {
    let mut t = Tally::default();
    let mut rng = stream(cfg.seed, "monotone", 0);
    for _ in 0..cfg.reps {
        let n = rng.random_range(2..=4);
        let xs = random_streams(&mut rng, n, cfg.max_len.min(60))?;
        monotone_instance(&xs, &mut t)?;
    }
    for len in 1..=cfg.exhaustive_len.min(8) {
        let n = 1usize << len;
        for a in 0..n {
            for s in 0..n {
                monotone_instance(&[seq(len, a), seq(len, s)], &mut t)?;
            }
        }
    }
    Ok(t.report("monotonicity", cfg))
}

/// The multiline map with all queues empty is deterministic; this is used
/// by the zero-input checks in the tests.
pub fn all_zero_fm(len: usize, n: usize) -> Result<bool> {
    let z = BinarySeq::zeros(Window::int(0, len as i64 - 1)?);
    let v = fm_construct(&vec![z; n])?;
    Ok(v.indicator_leq(n as u32)?.total() == 0)
}

/// Every exact suite in order.
pub fn exact_suites(cfg: &ExactConfig) -> Result<Vec<TestReport>> {
    Ok(vec![
        interchange_suite(cfg)?,
        lemma_cl_batch(cfg)?,
        minplus_batch(cfg)?,
        walk_oracle_batch(cfg)?,
        monotonicity_suite(cfg)?,
    ])
}
