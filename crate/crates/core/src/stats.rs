//! Goodness-of-fit tests and the report type shared by all suites.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// How a report decides pass/fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassRule {
    /// Pass iff `p_value > threshold`.
    PValueAbove,
    /// Pass iff `statistic < threshold`.
    StatisticBelow,
    /// Pass iff `statistic <= threshold`; used for mismatch counts.
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub p_value: Option<f64>,
    pub rule: PassRule,
    pub passed: bool,
    pub metadata: BTreeMap<String, String>,
}

impl TestReport {
    pub fn new(name: impl Into<String>, statistic: f64, p_value: Option<f64>, rule: PassRule, threshold: f64) -> Self {
        let mut r = TestReport {
            name: name.into(),
            statistic,
            threshold,
            p_value,
            rule,
            passed: false,
            metadata: BTreeMap::new(),
        };
        r.passed = r.evaluate();
        r
    }

    /// Report for a count of exact-identity failures; passes only at zero.
    pub fn exact(name: impl Into<String>, mismatches: u64, checked: u64) -> Self {
        TestReport::new(name, mismatches as f64, None, PassRule::AtMost, 0.0).with("checked", checked)
    }

    fn evaluate(&self) -> bool {
        match self.rule {
            PassRule::PValueAbove => self.p_value.is_some_and(|p| p > self.threshold),
            PassRule::StatisticBelow => self.statistic < self.threshold,
            PassRule::AtMost => self.statistic <= self.threshold,
        }
    }

    /// Same test judged by a different rule.
    pub fn judged(mut self, rule: PassRule, threshold: f64) -> Self {
        self.rule = rule;
        self.threshold = threshold;
        self.passed = self.evaluate();
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    /// One line for the summary table.
    pub fn summary_line(&self) -> String {
        let p = self
            .p_value
            .map(|p| format!("{p:.4}"))
            .unwrap_or_else(|| "-".to_string());
        let rule = match self.rule {
            PassRule::PValueAbove => format!("p > {}", self.threshold),
            PassRule::StatisticBelow => format!("stat < {}", self.threshold),
            PassRule::AtMost => format!("stat <= {}", self.threshold),
        };
        format!(
            "{:<4} {:<48} stat={:<12.6} p={:<8} ({rule})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.statistic,
            p
        )
    }
}

pub fn all_passed(reports: &[TestReport]) -> bool {
    reports.iter().all(|r| r.passed)
}

/// Sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut sample: Vec<f64>) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::DegenerateSample("empty sample".into()));
        }
        if sample.iter().any(|x| x.is_nan()) {
            return Err(Error::DegenerateSample("NaN in sample".into()));
        }
        sample.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted: sample })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// `F_n(x) = #{x_i <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// `F_n(x-) = #{x_i < x} / n`.
    pub fn eval_left(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v < x) as f64 / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.len() as f64
    }

    pub fn variance(&self) -> f64 {
        sample_variance(&self.sorted)
    }

    /// Distinct values with `F_n` just before and at each.
    fn steps(&self) -> Vec<(f64, f64, f64)> {
        let n = self.len() as f64;
        let mut out = Vec::new();
        let mut k = 0;
        while k < self.sorted.len() {
            let v = self.sorted[k];
            let mut j = k;
            while j < self.sorted.len() && self.sorted[j] == v {
                j += 1;
            }
            out.push((v, k as f64 / n, j as f64 / n));
            k = j;
        }
        out
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// Pearson correlation; zero when either side is constant.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Survival function of the Kolmogorov distribution,
/// `P(K > t) = 2 Σ_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2)`.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 1.0 {
        // Theta-function form converges fast for small t.
        let c = std::f64::consts::PI.powi(2) / (8.0 * t * t);
        let mut s = 0.0;
        for k in 0..20 {
            let j = (2 * k + 1) as f64;
            s += (-j * j * c).exp();
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / t * s;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * t * t).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Asymptotic p-value for a KS statistic with effective size `n`, using the
/// small-sample correction `(√n + 0.12 + 0.11/√n) D`.
pub fn ks_p_value(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// One-sample KS distance against a distribution given by its CDF `cdf` and
/// left limit `cdf_left` (equal for continuous laws). Both the empirical and
/// the model CDF may have atoms; the distance compares them at and just
/// before every sample value.
pub fn ks_distance_mixed(sample: &EmpiricalCdf, cdf: impl Fn(f64) -> f64, cdf_left: impl Fn(f64) -> f64) -> f64 {
    sample
        .steps()
        .into_iter()
        .map(|(v, before, at)| (at - cdf(v)).abs().max((before - cdf_left(v)).abs()))
        .fold(0.0, f64::max)
}

pub fn ks_one_sample(name: &str, sample: &EmpiricalCdf, cdf: impl Fn(f64) -> f64, p_floor: f64) -> Result<TestReport> {
    ks_one_sample_mixed(name, sample, &cdf, &cdf, p_floor)
}

pub fn ks_one_sample_mixed(
    name: &str,
    sample: &EmpiricalCdf,
    cdf: impl Fn(f64) -> f64,
    cdf_left: impl Fn(f64) -> f64,
    p_floor: f64,
) -> Result<TestReport> {
    if sample.len() < 10 {
        return Err(Error::DegenerateSample(format!("{} points, need at least 10", sample.len())));
    }
    let d = ks_distance_mixed(sample, cdf, cdf_left);
    let p = ks_p_value(d, sample.len() as f64);
    Ok(TestReport::new(name, d, Some(p), PassRule::PValueAbove, p_floor).with("n", sample.len()))
}

/// Two-sample KS distance `sup |F_a - F_b|`.
pub fn ks_two_sample_distance(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let (x, y) = (a.values(), b.values());
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

pub fn ks_two_sample(name: &str, a: &EmpiricalCdf, b: &EmpiricalCdf, p_floor: f64) -> Result<TestReport> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::DegenerateSample("two-sample KS needs two points per side".into()));
    }
    let d = ks_two_sample_distance(a, b);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let p = ks_p_value(d, n * m / (n + m));
    Ok(TestReport::new(name, d, Some(p), PassRule::PValueAbove, p_floor)
        .with("n_a", a.len())
        .with("n_b", b.len()))
}

/// Pearson chi-square of observed counts against expected counts.
/// `fitted` parameters reduce the degrees of freedom.
pub fn chi_square(name: &str, observed: &[f64], expected: &[f64], fitted: usize, p_floor: f64) -> Result<TestReport> {
    if observed.len() != expected.len() {
        return Err(Error::pre("observed and expected bins differ in number"));
    }
    if observed.len() < fitted + 2 {
        return Err(Error::DegenerateSample("too few bins for a chi-square test".into()));
    }
    let mut stat = 0.0;
    for (o, e) in observed.iter().zip(expected) {
        if *e <= 0.0 {
            return Err(Error::DegenerateSample("empty expected bin".into()));
        }
        stat += (o - e).powi(2) / e;
    }
    let dof = (observed.len() - 1 - fitted) as f64;
    let p = ChiSquared::new(dof)
        .map_err(|e| Error::pre(e.to_string()))?
        .sf(stat);
    Ok(TestReport::new(name, stat, Some(p), PassRule::PValueAbove, p_floor)
        .with("dof", dof)
        .with("bins", observed.len()))
}

/// Merges adjacent bins from the right until every expected count reaches
/// `min_expected`. Returns the merged `(observed, expected)`.
pub fn pool_tail(observed: &[f64], expected: &[f64], min_expected: f64) -> (Vec<f64>, Vec<f64>) {
    let mut o = Vec::new();
    let mut e = Vec::new();
    let (mut acc_o, mut acc_e) = (0.0, 0.0);
    for k in (0..observed.len()).rev() {
        acc_o += observed[k];
        acc_e += expected[k];
        if acc_e >= min_expected {
            o.push(acc_o);
            e.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        match (o.last_mut(), e.last_mut()) {
            (Some(lo), Some(le)) => {
                *lo += acc_o;
                *le += acc_e;
            }
            _ => {
                o.push(acc_o);
                e.push(acc_e);
            }
        }
    }
    o.reverse();
    e.reverse();
    (o, e)
}

pub fn normal_cdf(x: f64) -> f64 {
    // Normal::new(0, 1) cannot fail.
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// Two-sided p-value of a standard normal statistic.
pub fn z_p_value(z: f64) -> f64 {
    (2.0 * normal_cdf(-z.abs())).min(1.0)
}

/// z-test of a binomial frequency `successes / n` against `p`.
pub fn binomial_z(name: &str, successes: u64, n: u64, p: f64, z_max: f64) -> TestReport {
    let freq = successes as f64 / n as f64;
    let z = (freq - p) / (p * (1.0 - p) / n as f64).sqrt();
    TestReport::new(name, z.abs(), Some(z_p_value(z)), PassRule::StatisticBelow, z_max)
        .with("frequency", freq)
        .with("expected", p)
        .with("n", n)
}

/// One-sample t-test of mean zero; a sample with no spread and mean zero is a
/// perfect match.
pub fn t_test_zero(name: &str, x: &[f64], p_floor: f64) -> Result<TestReport> {
    if x.len() < 2 {
        return Err(Error::DegenerateSample("t-test needs two values".into()));
    }
    let m = mean(x);
    let sd = sample_variance(x).sqrt();
    let n = x.len() as f64;
    let (t, p) = if sd == 0.0 {
        if m == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let t = m / (sd / n.sqrt());
        let dist = StudentsT::new(0.0, 1.0, n - 1.0).map_err(|e| Error::pre(e.to_string()))?;
        (t, 2.0 * dist.cdf(-t.abs()))
    };
    Ok(TestReport::new(name, t.abs(), Some(p), PassRule::PValueAbove, p_floor)
        .with("mean", m)
        .with("n", x.len()))
}

/// Welch two-sample t-test of equal means.
pub fn welch_t(name: &str, a: &[f64], b: &[f64], p_floor: f64) -> Result<TestReport> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::DegenerateSample("Welch test needs two values per side".into()));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a) / a.len() as f64, sample_variance(b) / b.len() as f64);
    let se2 = va + vb;
    let (t, p) = if se2 == 0.0 {
        if ma == mb {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let t = (ma - mb) / se2.sqrt();
        let dof = se2 * se2
            / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64).max(f64::MIN_POSITIVE);
        let dist = StudentsT::new(0.0, 1.0, dof.max(1.0)).map_err(|e| Error::pre(e.to_string()))?;
        (t, 2.0 * dist.cdf(-t.abs()))
    };
    Ok(TestReport::new(name, t.abs(), Some(p), PassRule::PValueAbove, p_floor)
        .with("mean_a", ma)
        .with("mean_b", mb))
}

/// Fisher z-test of a sample correlation against zero.
pub fn correlation_test(name: &str, x: &[f64], y: &[f64], p_floor: f64) -> TestReport {
    let r = correlation(x, y);
    let z = r * (x.len() as f64).sqrt();
    TestReport::new(name, r, Some(z_p_value(z)), PassRule::PValueAbove, p_floor).with("n", x.len())
}

/// Divides a family-wise floor among `k` tests.
pub fn bonferroni(floor: f64, k: usize) -> f64 {
    floor / k.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn kolmogorov_tail_values() {
        // standard table values
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_sf(1.63) - 0.0098).abs() < 1e-3);
        assert!((kolmogorov_sf(0.5) - 0.9639).abs() < 1e-3);
        // the two series agree where they meet
        assert!((kolmogorov_sf(0.999_999) - kolmogorov_sf(1.000_001)).abs() < 1e-5);
    }

    #[test]
    fn ks_repeated_value() {
        let s = EmpiricalCdf::new(vec![0.3; 20]).unwrap();
        let d = ks_distance_mixed(&s, |x| x.clamp(0.0, 1.0), |x| x.clamp(0.0, 1.0));
        assert!((d - 0.7).abs() < 1e-12);
    }

    #[test]
    fn ks_power_and_null() {
        let mut rng = stream(3, "ks", 0);
        let u: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let s = EmpiricalCdf::new(u).unwrap();
        assert!(ks_one_sample("u", &s, |x| x.clamp(0.0, 1.0), 0.01).unwrap().passed);
        let shifted = EmpiricalCdf::new(s.values().iter().map(|x| x + 0.05).collect()).unwrap();
        assert!(!ks_one_sample("u", &shifted, |x| x.clamp(0.0, 1.0), 0.01).unwrap().passed);
        assert!(ks_one_sample("tiny", &EmpiricalCdf::new(vec![0.1; 5]).unwrap(), |x| x, 0.01).is_err());
    }

    #[test]
    fn two_sample_small_exact() {
        // F_a and F_b by enumeration: after 1: 1/3 vs 0, after 2: 2/3 vs 1/2,
        // after 3: 2/3 vs 1, after 4: 1 vs 1
        let a = EmpiricalCdf::new(vec![1.0, 2.0, 4.0]).unwrap();
        let b = EmpiricalCdf::new(vec![2.0, 3.0]).unwrap();
        assert!((ks_two_sample_distance(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(ks_two_sample_distance(&a, &a), 0.0);
    }

    #[test]
    fn pooling_keeps_totals() {
        let o = [10.0, 5.0, 2.0, 1.0, 0.0];
        let e = [9.0, 6.0, 2.5, 1.0, 0.5];
        let (po, pe) = pool_tail(&o, &e, 3.0);
        assert_eq!(po.iter().sum::<f64>(), 18.0);
        assert_eq!(pe.iter().sum::<f64>(), 19.0);
        assert!(pe.iter().all(|&x| x >= 3.0));
    }

    #[test]
    fn t_tests() {
        let r = t_test_zero("z", &[0.0, 0.0, 0.0], 0.01).unwrap();
        assert!(r.passed);
        let r = t_test_zero("z", &[1.0, 1.1, 0.9, 1.05], 0.01).unwrap();
        assert!(!r.passed);
        let r = welch_t("w", &[1.0, 2.0, 3.0], &[1.5, 2.5, 2.0], 0.01).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn report_rules() {
        assert!(TestReport::exact("e", 0, 10).passed);
        assert!(!TestReport::exact("e", 1, 10).passed);
        assert!(TestReport::new("s", 0.01, None, PassRule::StatisticBelow, 0.02).passed);
        assert!(!TestReport::new("p", 0.0, None, PassRule::PValueAbove, 0.01).passed);
        let json = serde_json::to_string(&TestReport::exact("e", 0, 3)).unwrap();
        assert!(json.contains("\"rule\":\"at_most\""));
    }
}
