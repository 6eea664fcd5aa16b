//! Monte Carlo estimates, confidence intervals and the replica contract.
//!
//! Replicas are pure functions of their [`SeedSpec`]; an [`Executor`] may
//! evaluate them on any number of workers, but results are always folded in
//! replica-index order, so every estimate is bit-identical across worker
//! counts.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::Error;
use crate::rng::SeedSpec;

/// A point estimate with a confidence interval and its provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
    pub replicas: u64,
    /// Present for Bernoulli proportions.
    pub successes: Option<u64>,
    pub seed: Option<SeedSpec>,
}

impl Estimate {
    /// A known value with a zero-width interval.
    pub fn exact(value: f64) -> Self {
        Estimate { value, lower: value, upper: value, confidence: 1.0, replicas: 0, successes: None, seed: None }
    }

    pub fn with_seed(mut self, seed: SeedSpec) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    /// Standard error implied by the interval half-width.
    pub fn std_error(&self) -> f64 {
        if self.confidence >= 1.0 {
            return 0.0;
        }
        self.half_width() / z_score(self.confidence)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Two-sided standard normal critical value for `confidence`.
pub fn z_score(confidence: f64) -> f64 {
    normal_quantile(0.5 + 0.5 * confidence)
}

/// Inverse standard normal CDF (Acklam's rational approximation refined by
/// one Halley step).
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    const LOW: f64 = 0.02425;
    let x = if p < LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2) - p;
    let u = e * libm::sqrt(2.0 * core::f64::consts::PI) * libm::exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<Estimate, Error> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    if successes > trials {
        return Err(Error::TooManySuccesses { successes, trials });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidParameter("confidence must lie in (0, 1)"));
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z = z_score(confidence);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let spread = z * libm::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    // the boundary cases are exact in closed form; keep them free of rounding
    let lower = if successes == 0 { 0.0 } else { (centre - spread).max(0.0) };
    let upper = if successes == trials { 1.0 } else { (centre + spread).min(1.0) };
    Ok(Estimate {
        value: phat,
        lower: lower.min(phat),
        upper: upper.max(phat),
        confidence,
        replicas: trials,
        successes: Some(successes),
        seed: None,
    })
}

/// Delta-method interval for `num / den` of independent estimates.
///
/// If `num` and `den` are the same estimate the ratio is exactly 1 with a
/// zero-width interval.
pub fn ratio_estimate(num: &Estimate, den: &Estimate) -> Result<Estimate, Error> {
    if den.lower <= 0.0 {
        return Err(Error::DenominatorTouchesZero);
    }
    let confidence = num.confidence.min(den.confidence);
    if num == den {
        return Ok(Estimate { confidence, replicas: num.replicas, ..Estimate::exact(1.0) });
    }
    let r = num.value / den.value;
    let (sa, sb) = (num.std_error(), den.std_error());
    let sd = libm::sqrt(sa * sa + r * r * sb * sb) / den.value;
    Ok(spread_estimate(r, sd, confidence, num.replicas.min(den.replicas)))
}

/// Delta-method interval for the product of independent estimates.
pub fn product_estimate(a: &Estimate, b: &Estimate) -> Estimate {
    let confidence = a.confidence.min(b.confidence);
    let v = a.value * b.value;
    let (sa, sb) = (a.std_error(), b.std_error());
    let sd = libm::sqrt(b.value * b.value * sa * sa + a.value * a.value * sb * sb);
    spread_estimate(v, sd, confidence, a.replicas.min(b.replicas))
}

/// `c · x` for an exact constant `c ≥ 0`.
pub fn scale_estimate(x: &Estimate, c: f64) -> Estimate {
    Estimate { value: c * x.value, lower: c * x.lower, upper: c * x.upper, successes: None, ..*x }
}

fn spread_estimate(value: f64, sd: f64, confidence: f64, replicas: u64) -> Estimate {
    let h = if confidence >= 1.0 { 0.0 } else { z_score(confidence) * sd };
    Estimate { value, lower: (value - h).max(0.0), upper: value + h, confidence, replicas, successes: None, seed: None }
}

/// A contiguous block of replica indices and its partition into workers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplicaPlan {
    pub start: u64,
    pub end: u64,
    pub workers: usize,
    pub seed: SeedSpec,
}

impl ReplicaPlan {
    pub fn new(total: u64, workers: usize, seed: SeedSpec) -> Self {
        Self::span(0..total, workers, seed)
    }

    pub fn span(range: Range<u64>, workers: usize, seed: SeedSpec) -> Self {
        ReplicaPlan { start: range.start, end: range.end.max(range.start), workers: workers.max(1), seed }
    }

    pub fn total(&self) -> u64 {
        self.end - self.start
    }

    /// Contiguous, ordered chunks that partition `start..end`.
    pub fn ranges(&self) -> Vec<Range<u64>> {
        let total = self.total();
        let w = (self.workers as u64).min(total.max(1));
        let base = total / w;
        let extra = total % w;
        let mut out = Vec::with_capacity(w as usize);
        let mut lo = self.start;
        for i in 0..w {
            let len = base + u64::from(i < extra);
            out.push(lo..lo + len);
            lo += len;
        }
        debug_assert_eq!(lo, self.end);
        out
    }
}

/// Evaluates replica functions over index ranges.
///
/// Implementations must return, for each input range in order, the results
/// for each index of that range in order. A panicking replica is reported
/// as `Err(index)`.
pub trait Executor {
    fn workers(&self) -> usize;

    fn execute<T, F>(&self, ranges: &[Range<u64>], replica: &F) -> Result<Vec<Vec<T>>, u64>
    where
        T: Send,
        F: Fn(u64) -> T + Sync;
}

/// Runs every replica on the calling thread. Panics propagate.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn workers(&self) -> usize {
        1
    }

    fn execute<T, F>(&self, ranges: &[Range<u64>], replica: &F) -> Result<Vec<Vec<T>>, u64>
    where
        T: Send,
        F: Fn(u64) -> T + Sync,
    {
        Ok(ranges.iter().map(|r| r.clone().map(replica).collect()).collect())
    }
}

/// Run `experiment` for every replica of the plan and fold the results in
/// replica-index order.
pub fn run_replicas<X, T, A, F, G>(
    exec: &X,
    plan: &ReplicaPlan,
    experiment: F,
    init: A,
    mut fold: G,
) -> Result<A, Error>
where
    X: Executor + ?Sized,
    T: Send,
    F: Fn(SeedSpec) -> T + Sync,
    G: FnMut(A, T) -> A,
{
    let seed = plan.seed;
    let chunks = exec
        .execute(&plan.ranges(), &|i| experiment(seed.with_replica(i)))
        .map_err(|index| Error::ReplicaPanicked { index, seed: seed.with_replica(index) })?;
    let mut acc = init;
    for chunk in chunks {
        for t in chunk {
            acc = fold(acc, t);
        }
    }
    Ok(acc)
}

/// Count successes of a Bernoulli experiment over `range`.
pub fn count_successes<X, F>(exec: &X, range: Range<u64>, seed: SeedSpec, trial: F) -> Result<u64, Error>
where
    X: Executor + ?Sized,
    F: Fn(SeedSpec) -> bool + Sync,
{
    let plan = ReplicaPlan::span(range, exec.workers(), seed);
    run_replicas(exec, &plan, trial, 0u64, |acc, hit| acc + u64::from(hit))
}

/// Wilson-interval estimate of `P[trial]` over `replicas` replicas.
pub fn estimate_proportion<X, F>(
    exec: &X,
    replicas: u64,
    seed: SeedSpec,
    confidence: f64,
    trial: F,
) -> Result<Estimate, Error>
where
    X: Executor + ?Sized,
    F: Fn(SeedSpec) -> bool + Sync,
{
    let hits = count_successes(exec, 0..replicas, seed, trial)?;
    Ok(wilson_interval(hits, replicas, confidence)?.with_seed(seed))
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form Wilson bounds, written out independently.
    fn wilson_oracle(s: f64, n: f64, z: f64) -> (f64, f64) {
        let p = s / n;
        let a = p + z * z / (2.0 * n);
        let b = z * libm::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n));
        let d = 1.0 + z * z / n;
        ((a - b) / d, (a + b) / d)
    }

    #[test]
    fn quantiles() {
        assert!((z_score(0.95) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((z_score(0.99) - 2.575_829_303_548_901).abs() < 1e-12);
        assert!((normal_quantile(0.5)).abs() < 1e-15);
        assert!((normal_quantile(0.001) + 3.090_232_306_167_813_5).abs() < 1e-11);
    }

    #[test]
    fn wilson_examples() {
        let z = z_score(0.95);
        let zero = wilson_interval(0, 100, 0.95).unwrap();
        assert_eq!(zero.lower, 0.0);
        assert!(zero.upper < 0.05);
        let (_, hi) = wilson_oracle(0.0, 100.0, z);
        assert!((zero.upper - hi).abs() < 1e-14);

        let full = wilson_interval(100, 100, 0.95).unwrap();
        assert!((full.lower - (1.0 - zero.upper)).abs() < 1e-14);
        assert_eq!(full.upper, 1.0);

        let half = wilson_interval(50, 100, 0.95).unwrap();
        let (lo, hi) = wilson_oracle(50.0, 100.0, z);
        assert!((half.lower - lo).abs() < 1e-14 && (half.upper - hi).abs() < 1e-14);
        assert!((half.lower - 0.4038).abs() < 5e-4 && (half.upper - 0.5962).abs() < 5e-4);

        assert_eq!(wilson_interval(1, 0, 0.95), Err(Error::ZeroTrials));
        assert!(wilson_interval(5, 4, 0.95).is_err());
    }

    #[test]
    fn ratio_examples() {
        let e = wilson_interval(40, 100, 0.95).unwrap();
        let same = ratio_estimate(&e, &e).unwrap();
        assert_eq!((same.value, same.lower, same.upper), (1.0, 1.0, 1.0));

        let z = z_score(0.95);
        let mk = |v: f64, se: f64| Estimate {
            value: v,
            lower: v - z * se,
            upper: v + z * se,
            confidence: 0.95,
            replicas: 1000,
            successes: None,
            seed: None,
        };
        let r = ratio_estimate(&mk(0.2, 0.01), &mk(0.4, 0.01)).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);
        // delta method: sd = sqrt(0.01² + 0.5²·0.01²) / 0.4
        let sd = libm::sqrt(0.0001 + 0.25 * 0.0001) / 0.4;
        assert!((r.half_width() - z * sd).abs() < 1e-12);
        let r2 = ratio_estimate(&mk(0.4, 0.01), &mk(0.4, 0.02)).unwrap();
        assert!((r2.value - 2.0 * r.value).abs() < 1e-15);

        let zero_den = wilson_interval(0, 10, 0.95).unwrap();
        assert_eq!(ratio_estimate(&e, &zero_den), Err(Error::DenominatorTouchesZero));
    }

    #[test]
    fn plan_partitions() {
        let s = SeedSpec::new(1, "plan");
        for total in [0u64, 1, 7, 100] {
            for workers in [1usize, 2, 3, 8] {
                let ranges = ReplicaPlan::new(total, workers, s).ranges();
                let flat: Vec<u64> = ranges.iter().flat_map(|r| r.clone()).collect();
                assert_eq!(flat, (0..total).collect::<Vec<_>>());
            }
        }
        let span = ReplicaPlan::span(10..25, 4, s).ranges();
        assert_eq!(span.first().unwrap().start, 10);
        assert_eq!(span.last().unwrap().end, 25);
    }

    #[test]
    fn empty_plan_folds_to_init() {
        let plan = ReplicaPlan::new(0, 4, SeedSpec::new(1, "empty"));
        let out = run_replicas(
            &Sequential,
            &plan,
            |s| s.replica,
            Vec::new(),
            |mut v, x| {
                v.push(x);
                v
            },
        )
        .unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn fair_coin() {
        let seed = SeedSpec::new(2024, "coin");
        let est = estimate_proportion(&Sequential, 10_000, seed, 0.99, |s| s.key().uniform(0) < 0.5).unwrap();
        assert!(est.contains(0.5), "{est:?}");
    }

    #[test]
    fn slope() {
        assert_eq!(ols_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]), Some(2.0));
        assert_eq!(ols_slope(&[1.0], &[1.0]), None);
    }
}
