//! Finite-size scaling correlation length.
//!
//! `L(p)` is the smallest `n` for which the square `[0, n]²` has an open
//! left-right crossing with probability at least `1 − ε`, and
//! `p_n = sup{p : L(p) > n}` is located by noisy bisection on the `[0, n]²`
//! crossing probability. All probes of one bisection share a single set of
//! coupled weight fields, so the empirical crossing curve is monotone in `p`.

use alloc::vec::Vec;

use crate::connectivity::has_lr_crossing;
use crate::error::Error;
use crate::field::{check_probability, EdgeWeights, SeededField};
use crate::lattice::BoxSpec;
use crate::rng::SeedSpec;
use crate::stats::{count_successes, wilson_interval, Estimate, Executor};
use crate::Params;

pub const CROSSING_TAG: &str = "crossing";

/// Per-probe replica budgets: `initial, 2·initial, 4·initial, …`, capped at `max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplicaSchedule {
    pub initial: u64,
    pub max: u64,
}

impl Default for ReplicaSchedule {
    fn default() -> Self {
        ReplicaSchedule { initial: 1_000, max: 100_000 }
    }
}

impl ReplicaSchedule {
    pub fn budgets(&self) -> Vec<u64> {
        let mut out = Vec::new();
        let mut b = self.initial.max(1);
        while b < self.max {
            out.push(b);
            b = b.saturating_mul(2);
        }
        out.push(self.max.max(1));
        out
    }
}

fn crossing_trial(p: f64, n: u32, seed: SeedSpec) -> bool {
    // B(n) contains [0, n]²; weights do not depend on the region
    let field = SeededField::new(BoxSpec::new(n).expect("radius checked"), seed);
    has_lr_crossing(&field.at_level(p), n, n).expect("rectangle inside B(n)")
}

/// Monte Carlo probability of an open left-right crossing of `[0, n]²` at level `p`.
pub fn crossing_probability<X: Executor + ?Sized>(
    exec: &X,
    p: f64,
    n: u32,
    replicas: u64,
    seed: SeedSpec,
    confidence: f64,
) -> Result<Estimate, Error> {
    check_probability(p)?;
    if n == 0 {
        return Err(Error::InvalidParameter("crossing size must be >= 1"));
    }
    BoxSpec::new(n)?;
    let hits = count_successes(exec, 0..replicas, seed, |s| crossing_trial(p, n, s))?;
    Ok(wilson_interval(hits, replicas, confidence)?.with_seed(seed))
}

/// Which side of `1 − ε` a probe landed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Crossing probability at least `1 − ε`: `L(p) ≤ n`, so `p ≥ p_n`.
    Above,
    Below,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub p: f64,
    pub estimate: Estimate,
    pub side: Side,
    /// `false` when the replica budget ran out before the interval
    /// separated from `1 − ε`; the side is then the point estimate's.
    pub resolved: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PnStatus {
    Resolved,
    /// Even `p_c` already crosses with probability `≥ 1 − ε`.
    Degenerate,
    /// Unresolved probes widened the bracket beyond the tolerance.
    Unresolved,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PnEstimate {
    pub n: u32,
    pub epsilon: f64,
    pub p_hat: f64,
    /// Bracket containing `p_n`, widened to include every unresolved probe.
    pub lower: f64,
    pub upper: f64,
    pub tolerance: f64,
    pub status: PnStatus,
    /// Crossing probability measured at `p_hat` with the full budget.
    pub crossing: Estimate,
    pub probes: Vec<Probe>,
    pub seed: SeedSpec,
}

impl PnEstimate {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

fn probe<X: Executor + ?Sized>(
    exec: &X,
    p: f64,
    n: u32,
    target: f64,
    seed: SeedSpec,
    confidence: f64,
    schedule: &ReplicaSchedule,
) -> Result<Probe, Error> {
    let mut hits = 0;
    let mut done = 0;
    let mut estimate = None;
    for budget in schedule.budgets() {
        hits += count_successes(exec, done..budget, seed, |s| crossing_trial(p, n, s))?;
        done = budget;
        let est = wilson_interval(hits, done, confidence)?.with_seed(seed);
        if est.lower > target {
            return Ok(Probe { p, estimate: est, side: Side::Above, resolved: true });
        }
        if est.upper < target {
            return Ok(Probe { p, estimate: est, side: Side::Below, resolved: true });
        }
        estimate = Some(est);
    }
    let est = estimate.expect("schedule has at least one budget");
    let side = if est.value >= target { Side::Above } else { Side::Below };
    Ok(Probe { p, estimate: est, side, resolved: false })
}

/// Noisy bisection for `p_n` on `[p_c, 1]`.
pub fn estimate_pn<X: Executor + ?Sized>(
    exec: &X,
    n: u32,
    epsilon: f64,
    tolerance: f64,
    seed: SeedSpec,
    params: &Params,
    schedule: &ReplicaSchedule,
) -> Result<PnEstimate, Error> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter("epsilon must lie in (0, 1/2)"));
    }
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive"));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("crossing size must be >= 1"));
    }
    let target = 1.0 - epsilon;
    let conf = params.confidence;
    let mut probes = Vec::new();

    let at_pc = probe(exec, params.p_c, n, target, seed, conf, schedule)?;
    probes.push(at_pc);
    if at_pc.side == Side::Above && at_pc.resolved {
        return Ok(PnEstimate {
            n,
            epsilon,
            p_hat: params.p_c,
            lower: params.p_c,
            upper: params.p_c,
            tolerance,
            status: PnStatus::Degenerate,
            crossing: at_pc.estimate,
            probes,
            seed,
        });
    }

    // crossing at p = 1 is certain, so 1 is a valid upper end
    let (mut lo, mut hi) = (params.p_c, 1.0f64);
    if at_pc.side == Side::Above {
        hi = params.p_c;
    }
    while 0.5 * (hi - lo) > tolerance {
        let mid = 0.5 * (lo + hi);
        let pr = probe(exec, mid, n, target, seed, conf, schedule)?;
        match pr.side {
            Side::Above => hi = mid,
            Side::Below => lo = mid,
        }
        probes.push(pr);
    }
    let (mut wlo, mut whi) = (lo, hi);
    for pr in probes.iter().filter(|pr| !pr.resolved) {
        wlo = wlo.min(pr.p);
        whi = whi.max(pr.p);
    }
    let p_hat = 0.5 * (wlo + whi);
    let status = if 0.5 * (whi - wlo) <= tolerance { PnStatus::Resolved } else { PnStatus::Unresolved };
    let crossing = crossing_probability(exec, p_hat, n, schedule.max, seed, conf)?;
    Ok(PnEstimate { n, epsilon, p_hat, lower: wlo, upper: whi, tolerance, status, crossing, probes, seed })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationRow {
    pub n: u32,
    pub pn: PnEstimate,
    /// `(p̂_n − p_c)·n²`.
    pub divergence: f64,
    /// The statistic at the two ends of the bracket.
    pub divergence_band: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTable {
    pub epsilon: f64,
    pub p_c: f64,
    pub rows: Vec<CorrelationRow>,
    /// Sizes dropped because their bisection was unresolved.
    pub excluded: Vec<u32>,
}

impl CorrelationTable {
    pub fn divergence_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].divergence < w[1].divergence)
    }

    /// Consecutive rows' statistic bands do not overlap.
    pub fn bands_disjoint(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].divergence_band.1 < w[1].divergence_band.0)
    }

    pub fn row(&self, n: u32) -> Option<&CorrelationRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// `p̂_n` and the divergence statistic for each `n` in `n_list`.
pub fn divergence_table<X: Executor + ?Sized>(
    exec: &X,
    n_list: &[u32],
    epsilon: f64,
    tolerance: f64,
    seed: SeedSpec,
    params: &Params,
    schedule: &ReplicaSchedule,
) -> Result<CorrelationTable, Error> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n list must be strictly increasing"));
    }
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for &n in n_list {
        let pn = estimate_pn(exec, n, epsilon, tolerance, seed, params, schedule)?;
        if pn.status == PnStatus::Unresolved {
            excluded.push(n);
            continue;
        }
        let n2 = f64::from(n) * f64::from(n);
        rows.push(CorrelationRow {
            n,
            divergence: (pn.p_hat - params.p_c) * n2,
            divergence_band: ((pn.lower - params.p_c) * n2, (pn.upper - params.p_c) * n2),
            pn,
        });
    }
    Ok(CorrelationTable { epsilon, p_c: params.p_c, rows, excluded })
}
