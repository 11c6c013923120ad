//! Output theorem for the stationary discrete-time queue.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::queue::{bernoulli_seq, serve, stationary_gamma, stationary_queue_init_with};
use crate::rng::stream;
use crate::seq::{BinarySeq, Window};
use crate::stats::{
    binomial_z, bonferroni, chi_square, ks_two_sample, pool_tail, t_test_zero, EmpiricalCdf, PassRule, TestReport,
};

/// Initial queue of each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurkeInit {
    /// Geometric with the stationary parameter.
    Stationary,
    /// Empty queue; a negative control.
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurkeConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Steps per replicate.
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub init: BurkeInit,
    /// Family-wise floor for the p-value tests, split by Bonferroni.
    pub p_floor: f64,
    /// Marginal frequencies must be within this many standard deviations.
    pub z_max: f64,
    pub max_lag: usize,
    /// Block length for the block-sum comparisons.
    pub block: usize,
}

impl BurkeConfig {
    pub fn new(alpha: f64, beta: f64, n: usize, reps: usize, seed: u64) -> Self {
        BurkeConfig {
            alpha,
            beta,
            n,
            reps,
            seed,
            init: BurkeInit::Stationary,
            p_floor: 0.01,
            z_max: 4.0,
            max_lag: 5,
            block: 100,
        }
    }

    fn validate(&self) -> Result<()> {
        stationary_gamma(self.alpha, self.beta)?;
        if self.n < 2 * self.block.max(self.max_lag + 1) {
            return Err(Error::param("n", "too short for the block and lag statistics"));
        }
        if self.reps < 2 {
            return Err(Error::param("reps", "need at least two replicates"));
        }
        if self.block == 0 {
            return Err(Error::param("block", "must be positive"));
        }
        Ok(())
    }
}

/// Mean of standardized products `(x - mx)(y - my) / (sx sy)` with the means
/// and deviations of the null law, so that every term has mean zero when
/// `x` and `y` are independent.
#[derive(Debug, Clone, Copy, Default)]
struct Corr {
    n: f64,
    sum: f64,
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    mean: f64,
    sd: f64,
}

impl Moments {
    fn bernoulli(p: f64) -> Self {
        Moments { mean: p, sd: (p * (1.0 - p)).sqrt() }
    }

    fn geometric(gamma: f64) -> Self {
        Moments {
            mean: (1.0 - gamma) / gamma,
            sd: (1.0 - gamma).sqrt() / gamma,
        }
    }

    fn z(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }
}

impl Corr {
    fn add(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        self.sum += x * y;
    }

    fn r(&self) -> f64 {
        if self.n == 0.0 {
            0.0
        } else {
            self.sum / self.n
        }
    }
}

/// Everything one replicate contributes.
struct Replicate {
    departures: u64,
    duals: u64,
    q_final: u64,
    /// lag 1..=max_lag autocorrelations of d, then of r
    auto: Vec<Corr>,
    /// d_t against r_{t+l}, l = -2..=2
    cross: Vec<Corr>,
    /// queue after step t against d_{t-j}, j = 0..max_lag-1
    past: Vec<Corr>,
    /// counts of (d_t, d_{t+1}, d_{t+2}) on disjoint triples
    d_patterns: [u64; 8],
    /// counts of (d_t, r_t)
    dr_patterns: [u64; 4],
    d_blocks: Vec<f64>,
    r_blocks: Vec<f64>,
    a_blocks: Vec<f64>,
    s_blocks: Vec<f64>,
}

fn block_sums(x: &BinarySeq, block: usize) -> Vec<f64> {
    x.bits()
        .chunks_exact(block)
        .map(|c| c.iter().filter(|&&b| b).count() as f64)
        .collect()
}

fn replicate(cfg: &BurkeConfig, r: u64) -> Result<Replicate> {
    let mut rng = stream(cfg.seed, "burke", r);
    let window = Window::int(0, cfg.n as i64 - 1)?;
    let a = bernoulli_seq(cfg.alpha, window, &mut rng)?;
    let s = bernoulli_seq(cfg.alpha + cfg.beta, window, &mut rng)?;
    let q0 = match cfg.init {
        BurkeInit::Stationary => stationary_queue_init_with(cfg.alpha, cfg.beta, &mut rng)?,
        BurkeInit::Empty => 0,
    };
    let out = serve(&a, &s, q0)?;
    let d: Vec<f64> = out.departures.bits().iter().map(|&b| f64::from(u8::from(b))).collect();
    let rr: Vec<f64> = out.duals.bits().iter().map(|&b| f64::from(u8::from(b))).collect();
    let n = d.len();
    let lags = cfg.max_lag;
    let (md, mr) = (Moments::bernoulli(cfg.alpha), Moments::bernoulli(cfg.alpha + cfg.beta));
    let mq = Moments::geometric(stationary_gamma(cfg.alpha, cfg.beta)?);
    let zd: Vec<f64> = d.iter().map(|&x| md.z(x)).collect();
    let zr: Vec<f64> = rr.iter().map(|&x| mr.z(x)).collect();

    let mut auto = vec![Corr::default(); 2 * lags];
    for l in 1..=lags {
        for t in 0..n - l {
            auto[l - 1].add(zd[t], zd[t + l]);
            auto[lags + l - 1].add(zr[t], zr[t + l]);
        }
    }
    let mut cross = vec![Corr::default(); 5];
    for (k, l) in (-2i64..=2).enumerate() {
        for t in 2..n - 2 {
            cross[k].add(zd[t], zr[(t as i64 + l) as usize]);
        }
    }
    let mut past = vec![Corr::default(); lags];
    for j in 0..lags {
        for t in j..n {
            past[j].add(mq.z(out.qlen[t] as f64), zd[t - j]);
        }
    }
    let mut d_patterns = [0u64; 8];
    for t in (0..n - 2).step_by(3) {
        let k = (d[t] as usize) << 2 | (d[t + 1] as usize) << 1 | d[t + 2] as usize;
        d_patterns[k] += 1;
    }
    let mut dr_patterns = [0u64; 4];
    for t in 0..n {
        dr_patterns[(d[t] as usize) << 1 | rr[t] as usize] += 1;
    }

    // fresh streams with the claimed output laws
    let mut fresh = stream(cfg.seed, "burke-fresh", r);
    let fa = bernoulli_seq(cfg.alpha, window, &mut fresh)?;
    let fs = bernoulli_seq(cfg.alpha + cfg.beta, window, &mut fresh)?;

    Ok(Replicate {
        departures: out.departures.total(),
        duals: out.duals.total(),
        q_final: out.q_final,
        auto,
        cross,
        past,
        d_patterns,
        dr_patterns,
        d_blocks: block_sums(&out.departures, cfg.block),
        r_blocks: block_sums(&out.duals, cfg.block),
        a_blocks: block_sums(&fa, cfg.block),
        s_blocks: block_sums(&fs, cfg.block),
    })
}

fn pattern_expected(p: &[f64], total: u64) -> Vec<f64> {
    p.iter().map(|q| q * total as f64).collect()
}

/// Departures and dual services of the stationary queue are independent
/// Bernoulli(α) and Bernoulli(α+β) sequences, independent of the final
/// queue length, which is Geom(γ).
///
/// Reports, in order: the two marginal frequencies (z within `z_max`),
/// the final queue length against Geom(γ) (chi-square, tail pooled), lag
/// autocorrelations of d and r, d/r cross-correlations, queue length
/// against recent departures (per-replicate correlations, t-tested across
/// replicates), joint pattern chi-squares, and two-sample KS
/// of block sums against fresh Bernoulli streams. All p-value tests share a
/// Bonferroni-split floor.
pub fn burke_suite(cfg: &BurkeConfig) -> Result<Vec<TestReport>> {
    cfg.validate()?;
    let reps: Vec<Replicate> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| replicate(cfg, r))
        .collect::<Result<_>>()?;
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    let gamma = stationary_gamma(alpha, beta)?;
    let lags = cfg.max_lag;
    let p_tests = 1 + 2 * lags + 5 + lags + 2 + 2;
    let floor = bonferroni(cfg.p_floor, p_tests);
    let steps = (cfg.n * cfg.reps) as u64;
    let mut out = Vec::new();

    out.push(binomial_z("burke/departure_rate", reps.iter().map(|r| r.departures).sum(), steps, alpha, cfg.z_max));
    out.push(binomial_z("burke/dual_rate", reps.iter().map(|r| r.duals).sum(), steps, alpha + beta, cfg.z_max));

    let max_q = reps.iter().map(|r| r.q_final).max().unwrap_or(0) as usize;
    let mut observed = vec![0.0; max_q + 2];
    for r in &reps {
        observed[r.q_final as usize] += 1.0;
    }
    let total = reps.len() as f64;
    let mut expected: Vec<f64> = (0..=max_q)
        .map(|k| total * gamma * (1.0 - gamma).powi(k as i32))
        .collect();
    expected.push(total * (1.0 - gamma).powi(max_q as i32 + 1));
    let (o, e) = pool_tail(&observed, &expected, 5.0);
    let geo = if o.len() >= 2 {
        chi_square("burke/q_final_geometric", &o, &e, 0, floor)?
    } else {
        // too few replicates to form two bins of expected size five
        TestReport::new("burke/q_final_geometric", 0.0, None, PassRule::PValueAbove, floor)
    };
    out.push(geo.with("gamma", gamma).with("mean_q_final", reps.iter().map(|r| r.q_final as f64).sum::<f64>() / total));

    // The queue length is autocorrelated, so pairs within a replicate are
    // dependent; each replicate contributes one correlation and the test is
    // across replicates.
    let corr_test = |name: String, f: &dyn Fn(&Replicate) -> &Vec<Corr>, k: usize| -> Result<TestReport> {
        let rs: Vec<f64> = reps.iter().map(|r| f(r)[k].r()).collect();
        Ok(t_test_zero(&name, &rs, floor)?.with("mean_correlation", crate::stats::mean(&rs)))
    };
    for l in 1..=lags {
        out.push(corr_test(format!("burke/autocorr_d_lag{l}"), &|r| &r.auto, l - 1)?);
    }
    for l in 1..=lags {
        out.push(corr_test(format!("burke/autocorr_r_lag{l}"), &|r| &r.auto, lags + l - 1)?);
    }
    for (k, l) in (-2i64..=2).enumerate() {
        out.push(corr_test(format!("burke/cross_d_r_shift{l}"), &|r| &r.cross, k)?);
    }
    for j in 0..lags {
        out.push(corr_test(format!("burke/queue_vs_departure_back{j}"), &|r| &r.past, j)?);
    }

    let mut dp = [0.0; 8];
    let mut drp = [0.0; 4];
    for r in &reps {
        for k in 0..8 {
            dp[k] += r.d_patterns[k] as f64;
        }
        for k in 0..4 {
            drp[k] += r.dr_patterns[k] as f64;
        }
    }
    let triple: Vec<f64> = (0..8)
        .map(|k| {
            (0..3)
                .map(|b| if k >> b & 1 == 1 { alpha } else { 1.0 - alpha })
                .product()
        })
        .collect();
    out.push(chi_square("burke/pattern_d_triples", &dp, &pattern_expected(&triple, dp.iter().sum::<f64>() as u64), 0, floor)?);
    let s = alpha + beta;
    let pair = [(1.0 - alpha) * (1.0 - s), (1.0 - alpha) * s, alpha * (1.0 - s), alpha * s];
    out.push(chi_square("burke/pattern_d_r", &drp, &pattern_expected(&pair, steps), 0, floor)?);

    let gather = |f: &dyn Fn(&Replicate) -> &Vec<f64>| -> Result<EmpiricalCdf> {
        EmpiricalCdf::new(reps.iter().flat_map(|r| f(r).iter().copied()).collect())
    };
    out.push(ks_two_sample("burke/blocks_d_vs_fresh_a", &gather(&|r| &r.d_blocks)?, &gather(&|r| &r.a_blocks)?, floor)?);
    out.push(ks_two_sample("burke/blocks_r_vs_fresh_s", &gather(&|r| &r.r_blocks)?, &gather(&|r| &r.s_blocks)?, floor)?);

    Ok(out
        .into_iter()
        .map(|r| {
            r.with("alpha", alpha)
                .with("beta", beta)
                .with("n", cfg.n)
                .with("reps", cfg.reps)
                .with("seed", cfg.seed)
                .with("init", format!("{:?}", cfg.init))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::all_passed;

    #[test]
    fn stationary_queue_passes() {
        let cfg = BurkeConfig::new(0.5, 0.05, 20_000, 40, 3);
        let reports = burke_suite(&cfg).unwrap();
        for r in &reports {
            assert!(r.passed, "{}", r.summary_line());
        }
        assert_eq!(reports.len(), 2 + 1 + 10 + 5 + 5 + 2 + 2);
    }

    #[test]
    fn empty_start_fails_on_short_windows() {
        let mut cfg = BurkeConfig::new(0.5, 0.05, 20, 400, 3);
        cfg.block = 5;
        cfg.init = BurkeInit::Empty;
        let reports = burke_suite(&cfg).unwrap();
        let geo = reports.iter().find(|r| r.name == "burke/q_final_geometric").unwrap();
        assert!(!geo.passed, "{}", geo.summary_line());
        assert!(!all_passed(&reports));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(burke_suite(&BurkeConfig::new(0.6, 0.5, 1000, 4, 0)).is_err());
        assert!(burke_suite(&BurkeConfig::new(0.5, 0.1, 10, 4, 0)).is_err());
    }
}
