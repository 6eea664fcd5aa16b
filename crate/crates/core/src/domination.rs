//! Certified lower bounds for invasion events and the comparison with the
//! incipient infinite cluster.
//!
//! For the annulus event `E(n)`: if every edge of `Ann(n, 2n)` is p-open and
//! `B(2n)` is not p-connected to `∂B(4n)`, the invasion started at the origin
//! invades the whole annulus before it first touches `∂B(4n)`. The two
//! conditions live on disjoint edge sets, so
//!
//! ```text
//! ℙ[E_IPC(n)] ≥ p^{|Ann(n,2n)|} · ℙ_p[B(2n) ↮ ∂B(4n)]
//! ```
//!
//! while `ν[E_IIC(n)] ≤ Ĉ · p_c^{|Ann(n,2n)|}`. All bound arithmetic is in
//! log space since `p^{|Ann|}` underflows quickly.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::connectivity::{box_reaches, cluster_of, disconnecting_edges, FiniteCluster};
use crate::error::Error;
use crate::field::{check_probability, EdgeWeights, SeededField};
use crate::iic::{iic_rejection_sample, one_arm_probability};
use crate::invasion::{annulus_coverage_event, run_invasion, Coverage, StopReason, StopRule};
use crate::lattice::{Annulus, BoxSpec, Edge, Vertex, Window};
use crate::nearcrit::{estimate_pn, PnEstimate, PnStatus, ReplicaSchedule};
use crate::rng::SeedSpec;
use crate::stats::{estimate_proportion, ols_slope, run_replicas, wilson_interval, Estimate, Executor, ReplicaPlan};
use crate::Params;

pub const DISCONNECTION_TAG: &str = "disconnection";
pub const SOUNDNESS_TAG: &str = "soundness";
pub const DSV_TAG: &str = "dsv";

/// Grid of levels tried by the gap pipeline, as multiples of `p̂_n − p_c` above `p_c`.
pub const GRID_FACTORS: [f64; 12] = [0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0, 1.25, 1.5];

/// `ℙ_p[B(inner) ↮ ∂B(outer)]`, sampled on `B(outer)`.
pub fn disconnection_probability<X: Executor + ?Sized>(
    exec: &X,
    p: f64,
    inner: u32,
    outer: u32,
    replicas: u64,
    seed: SeedSpec,
    confidence: f64,
) -> Result<Estimate, Error> {
    check_probability(p)?;
    if inner >= outer {
        return Err(Error::InvalidAnnulus { inner, outer });
    }
    let region = BoxSpec::new(outer)?;
    estimate_proportion(exec, replicas, seed, confidence, |s| {
        !box_reaches(&SeededField::new(region, s).at_level(p), inner, outer).expect("radii checked")
    })
}

/// Smallest level at which `B(inner) ↔ ∂B(outer)`: the minimax weight over
/// shell paths. `B(inner) ↮ ∂B(outer)` at level `p` iff the result is `≥ p`.
/// Fields whose shell is already connected at `floor` return some value
/// below `floor` without finishing the search.
pub fn shell_bottleneck<W: EdgeWeights>(field: &W, inner: u32, outer: u32, floor: f64) -> Result<f64, Error> {
    if inner >= outer {
        return Err(Error::InvalidAnnulus { inner, outer });
    }
    let region = field.region();
    if outer > region.radius() {
        return Err(Error::RadiusTooLarge(outer));
    }
    if floor > 0.0 && box_reaches(&field.at_level(floor), inner, outer)? {
        return Ok(floor.next_down());
    }
    let mut best = vec![u64::MAX; region.vertex_count()];
    let mut heap = BinaryHeap::new();
    let starts: Vec<Vertex> = if inner == 0 { vec![Vertex::ORIGIN] } else { BoxSpec::new(inner)?.boundary().collect() };
    for v in starts {
        best[region.index(v)] = 0;
        heap.push(Reverse((0u64, v)));
    }
    while let Some(Reverse((b, v))) = heap.pop() {
        if b > best[region.index(v)] {
            continue;
        }
        if v.norm() >= outer {
            return Ok(f64::from_bits(b));
        }
        for e in v.incident_edges() {
            if !region.contains_edge(&e) || (e.a().norm() <= inner && e.b().norm() <= inner) {
                continue;
            }
            let w = e.other(v);
            let nb = b.max(field.weight(&e).to_bits());
            let slot = &mut best[region.index(w)];
            if nb < *slot {
                *slot = nb;
                heap.push(Reverse((nb, w)));
            }
        }
    }
    unreachable!("the outer boundary is reachable inside the region")
}

/// `p ↦ ℙ_p[B(inner) ↮ ∂B(outer)]` for every `p ≥ floor` from one set of
/// coupled fields.
#[derive(Clone, Debug, PartialEq)]
pub struct DisconnectionCurve {
    pub inner: u32,
    pub outer: u32,
    pub floor: f64,
    pub replicas: u64,
    pub confidence: f64,
    pub seed: SeedSpec,
    /// Bottleneck levels `≥ floor`, ascending.
    tail: Vec<f64>,
}

impl DisconnectionCurve {
    pub fn at(&self, p: f64) -> Result<Estimate, Error> {
        if p < self.floor {
            return Err(Error::InvalidParameter("level below the curve floor"));
        }
        let below = self.tail.partition_point(|&t| t < p);
        let hits = (self.tail.len() - below) as u64;
        Ok(wilson_interval(hits, self.replicas, self.confidence)?.with_seed(self.seed))
    }

    pub fn tail(&self) -> &[f64] {
        &self.tail
    }
}

/// Same fields as [`disconnection_probability`] with the same seed, so
/// `curve.at(p)` reproduces it exactly.
#[allow(clippy::too_many_arguments)]
pub fn disconnection_curve<X: Executor + ?Sized>(
    exec: &X,
    inner: u32,
    outer: u32,
    floor: f64,
    replicas: u64,
    seed: SeedSpec,
    confidence: f64,
) -> Result<DisconnectionCurve, Error> {
    check_probability(floor)?;
    if inner >= outer {
        return Err(Error::InvalidAnnulus { inner, outer });
    }
    let region = BoxSpec::new(outer)?;
    let plan = ReplicaPlan::new(replicas, exec.workers(), seed);
    let mut tail = run_replicas(
        exec,
        &plan,
        |s| shell_bottleneck(&SeededField::new(region, s), inner, outer, floor).expect("radii checked"),
        Vec::new(),
        |mut acc, t| {
            if t >= floor {
                acc.push(t);
            }
            acc
        },
    )?;
    tail.sort_unstable_by(f64::total_cmp);
    Ok(DisconnectionCurve { inner, outer, floor, replicas, confidence, seed, tail })
}

/// Which event is certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CertGeometry {
    /// `Ann(n, 2n)` invaded; shell `B(2n) ↮ ∂B(4n)`.
    Annulus,
    /// `B(n)` invaded; shell `B(n) ↮ ∂B(3n)`.
    Box,
}

impl CertGeometry {
    pub fn window(self, n: u32) -> Result<Window, Error> {
        match self {
            CertGeometry::Annulus => Ok(Window::Annulus(Annulus::doubling(n)?)),
            CertGeometry::Box => {
                if n == 0 {
                    return Err(Error::EmptyBoundary);
                }
                Ok(Window::Box(BoxSpec::new(n)?))
            }
        }
    }

    /// `(inner, outer)` radii of the disconnection shell.
    pub fn shell(self, n: u32) -> (u32, u32) {
        match self {
            CertGeometry::Annulus => (2 * n, 4 * n),
            CertGeometry::Box => (n, 3 * n),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CertGeometry::Annulus => "annulus",
            CertGeometry::Box => "box",
        }
    }
}

/// No window edge can be used by the shell connection test.
pub fn supports_disjoint(geometry: CertGeometry, n: u32) -> Result<bool, Error> {
    let window = geometry.window(n)?;
    let (inner, _) = geometry.shell(n);
    Ok(window.edges().iter().all(|e| e.a().norm() <= inner && e.b().norm() <= inner))
}

/// Direct check of the certificate on fields conditioned on all window
/// edges being p-open.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SoundnessTally {
    pub fields: u64,
    /// Fields on which the shell disconnection also held.
    pub certified: u64,
    pub covered: u64,
    pub violations: u64,
    pub first_violation: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateOutcome {
    pub n: u32,
    pub p: f64,
    pub geometry: CertGeometry,
    pub window_edges: usize,
    /// `|W| ln p`.
    pub ln_open_factor: f64,
    pub disconnection: Estimate,
    pub soundness: Option<SoundnessTally>,
}

impl CertificateOutcome {
    /// `ln(p^{|W|} · disconnection)` at the point estimate.
    pub fn ln_bound(&self) -> f64 {
        self.ln_open_factor + libm::log(self.disconnection.value)
    }

    pub fn ln_bound_interval(&self) -> (f64, f64) {
        (
            self.ln_open_factor + libm::log(self.disconnection.lower),
            self.ln_open_factor + libm::log(self.disconnection.upper),
        )
    }

    pub fn bound(&self) -> f64 {
        libm::exp(self.ln_bound())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Verdict {
    Uncertified,
    Covered,
    Violated,
}

/// Fields for the soundness check. Window edges are always p-open; with
/// `shell_closed = Some(q)` every edge the shell test can use is p-closed
/// with probability `q` instead of `1 − p`, which makes the rare shell
/// disconnection common without touching the conditional law of anything
/// else. The certificate is a statement about every field, so any such law
/// is a valid test bed.
#[derive(Clone, Copy, Debug)]
struct SoundnessField {
    base: SeededField,
    window: Window,
    shell_inner: u32,
    p: f64,
    shell_closed: Option<f64>,
}

impl EdgeWeights for SoundnessField {
    fn region(&self) -> BoxSpec {
        self.base.region()
    }

    fn weight(&self, e: &Edge) -> f64 {
        let u = self.base.weight(e);
        let p = self.p;
        let w = if self.window.contains_edge(e) {
            p * u
        } else {
            match self.shell_closed {
                Some(q) if e.a().norm() > self.shell_inner || e.b().norm() > self.shell_inner => {
                    if u < q {
                        p + (1.0 - p) * (u / q)
                    } else {
                        p * (u - q) / (1.0 - q)
                    }
                }
                _ => return u,
            }
        };
        w.min(1.0f64.next_down())
    }

    fn seed(&self) -> Option<SeedSpec> {
        self.base.seed()
    }
}

fn certificate_trial(geometry: CertGeometry, n: u32, p: f64, shell_closed: Option<f64>, seed: SeedSpec) -> Verdict {
    let window = geometry.window(n).expect("geometry checked");
    let (inner, outer) = geometry.shell(n);
    let region = BoxSpec::new(outer).expect("radius checked");
    let field = SoundnessField { base: SeededField::new(region, seed), window, shell_inner: inner, p, shell_closed };
    // p · u < p for u < 1, but rounding may land on p; closed window edges void the certificate
    if window.edges().iter().any(|e| field.weight(e) >= p) {
        return Verdict::Uncertified;
    }
    if box_reaches(&field.at_level(p), inner, outer).expect("radii checked") {
        return Verdict::Uncertified;
    }
    let run = run_invasion(&field, StopRule::covered(window)).expect("valid rule");
    let covered = run.reason == StopReason::Covered
        && annulus_coverage_event(&run.state, window).expect("window inside horizon") == Coverage::Covered;
    if covered {
        Verdict::Covered
    } else {
        Verdict::Violated
    }
}

/// How many certified fields to check and how to draw them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SoundnessPlan {
    pub target: u64,
    pub max_fields: u64,
    /// Closed probability of shell edges; `None` keeps the conditional law
    /// given only the window condition.
    pub shell_closed: Option<f64>,
}

impl SoundnessPlan {
    pub fn new(target: u64) -> Self {
        SoundnessPlan { target, max_fields: target.saturating_mul(100), shell_closed: Some(0.7) }
    }
}

/// Sample conditioned fields in deterministic batches until `target`
/// certified fields were checked or `max_fields` were drawn.
pub fn soundness_check<X: Executor + ?Sized>(
    exec: &X,
    geometry: CertGeometry,
    n: u32,
    p: f64,
    plan: SoundnessPlan,
    seed: SeedSpec,
) -> Result<SoundnessTally, Error> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    if plan.shell_closed.is_some_and(|q| !(q > 0.0 && q < 1.0)) {
        return Err(Error::InvalidParameter("shell closed probability must lie in (0, 1)"));
    }
    let SoundnessPlan { target, max_fields, shell_closed } = plan;
    geometry.window(n)?;
    BoxSpec::new(geometry.shell(n).1)?;
    const BATCH: u64 = 1_000;
    let mut tally = SoundnessTally::default();
    while tally.certified < target && tally.fields < max_fields {
        let end = (tally.fields + BATCH).min(max_fields);
        let batch = ReplicaPlan::span(tally.fields..end, exec.workers(), seed);
        let start = tally.fields;
        let verdicts = run_replicas(
            exec,
            &batch,
            |s| (s.replica, certificate_trial(geometry, n, p, shell_closed, s)),
            Vec::with_capacity((end - start) as usize),
            |mut acc, v| {
                acc.push(v);
                acc
            },
        )?;
        for (replica, v) in verdicts {
            tally.fields += 1;
            match v {
                Verdict::Uncertified => {}
                Verdict::Covered => {
                    tally.certified += 1;
                    tally.covered += 1;
                }
                Verdict::Violated => {
                    tally.certified += 1;
                    tally.violations += 1;
                    tally.first_violation.get_or_insert(replica);
                }
            }
        }
    }
    Ok(tally)
}

/// Certified lower bound `p^{|W|} · ℙ_p[shell disconnected]` on the
/// invasion event, with an optional soundness cross-check.
#[allow(clippy::too_many_arguments)]
pub fn ipc_certificate_bound<X: Executor + ?Sized>(
    exec: &X,
    geometry: CertGeometry,
    n: u32,
    p: f64,
    replicas: u64,
    checks: Option<SoundnessPlan>,
    seed: SeedSpec,
    params: &Params,
) -> Result<CertificateOutcome, Error> {
    check_probability(p)?;
    if p < params.p_c {
        return Err(Error::InvalidParameter("certificate level must be at least p_c"));
    }
    let window = geometry.window(n)?;
    let (inner, outer) = geometry.shell(n);
    let disconnection = disconnection_probability(
        exec,
        p,
        inner,
        outer,
        replicas,
        seed.with_tag(DISCONNECTION_TAG),
        params.confidence,
    )?;
    let soundness = match checks {
        None => None,
        Some(plan) => {
            let tally = soundness_check(exec, geometry, n, p, plan, seed.with_tag(SOUNDNESS_TAG))?;
            if let Some(replica) = tally.first_violation {
                return Err(Error::CertificateViolation { n, p, replica });
            }
            Some(tally)
        }
    };
    let window_edges = window.edge_count();
    Ok(CertificateOutcome {
        n,
        p,
        geometry,
        window_edges,
        ln_open_factor: window_edges as f64 * libm::log(p),
        disconnection,
        soundness,
    })
}

/// Best certificate over `grid`, all levels evaluated on one set of
/// coupled fields. Returns the index of the maximizer among the
/// outcomes, which are in grid order.
pub fn optimize_certificate<X: Executor + ?Sized>(
    exec: &X,
    geometry: CertGeometry,
    n: u32,
    grid: &[f64],
    replicas: u64,
    seed: SeedSpec,
    params: &Params,
) -> Result<(usize, Vec<CertificateOutcome>), Error> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty level grid"));
    }
    if grid.iter().any(|&p| !(p >= params.p_c && p < 1.0)) {
        return Err(Error::InvalidParameter("grid levels must lie in [p_c, 1)"));
    }
    let window = geometry.window(n)?;
    let (inner, outer) = geometry.shell(n);
    let floor = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let curve =
        disconnection_curve(exec, inner, outer, floor, replicas, seed.with_tag(DISCONNECTION_TAG), params.confidence)?;
    let window_edges = window.edge_count();
    let mut outcomes = Vec::with_capacity(grid.len());
    for &p in grid {
        outcomes.push(CertificateOutcome {
            n,
            p,
            geometry,
            window_edges,
            ln_open_factor: window_edges as f64 * libm::log(p),
            disconnection: curve.at(p)?,
            soundness: None,
        });
    }
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.ln_bound() > outcomes[best].ln_bound() {
            best = i;
        }
    }
    Ok((best, outcomes))
}

/// Levels `p_c + f·(p̂ − p_c)` for the standard factors, kept below 1.
pub fn level_grid(p_c: f64, p_hat: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = GRID_FACTORS.iter().map(|f| p_c + f * (p_hat - p_c)).filter(|&p| p < 1.0).collect();
    grid.dedup();
    grid
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapSettings {
    pub epsilon: f64,
    pub tolerance: f64,
    pub schedule: ReplicaSchedule,
    /// Replicas per disconnection estimate.
    pub replicas: u64,
    /// Quasi-multiplicativity constant used for the invasion-free upper bound.
    pub c_hat: f64,
    /// Fixed certificate levels; `None` uses [`level_grid`] around each `p̂_n`.
    pub grid: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapRow {
    pub n: u32,
    pub p_hat: f64,
    pub divergence: f64,
    pub p_star: f64,
    pub certificate: CertificateOutcome,
    pub ln_ipc_lower: f64,
    pub ln_iic_upper: f64,
    pub ln_ratio: f64,
    /// `ln 2` cleared by the lower end of the certificate interval.
    pub witness: bool,
}

impl GapRow {
    pub fn ratio(&self) -> f64 {
        libm::exp(self.ln_ratio)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub geometry: CertGeometry,
    pub epsilon: f64,
    pub c_hat: f64,
    pub rows: Vec<GapRow>,
    /// Sizes whose `p̂_n` was unresolved.
    pub skipped: Vec<u32>,
}

impl GapReport {
    pub fn ratio_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].ln_ratio < w[1].ln_ratio)
    }

    pub fn all_positive(&self) -> bool {
        self.rows.iter().all(|r| r.ln_ratio.is_finite())
    }

    pub fn smallest_witness(&self) -> Option<u32> {
        self.rows.iter().find(|r| r.witness).map(|r| r.n)
    }

    /// OLS slope of `ln ratio` against the divergence statistic.
    pub fn log_ratio_slope(&self) -> Option<f64> {
        let rows: Vec<&GapRow> = self.rows.iter().filter(|r| r.ln_ratio.is_finite()).collect();
        let x: Vec<f64> = rows.iter().map(|r| r.divergence).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.ln_ratio).collect();
        ols_slope(&x, &y)
    }
}

/// Gap rows from already computed `p̂_n`. `ln_iic_upper(n)` supplies the
/// invasion-free upper bound for each size.
pub fn gap_rows<X, U>(
    exec: &X,
    geometry: CertGeometry,
    pns: &[PnEstimate],
    settings: &GapSettings,
    seed: SeedSpec,
    params: &Params,
    mut ln_iic_upper: U,
) -> Result<GapReport, Error>
where
    X: Executor + ?Sized,
    U: FnMut(u32) -> Result<f64, Error>,
{
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for pn in pns {
        if pn.status == PnStatus::Unresolved {
            skipped.push(pn.n);
            continue;
        }
        let n = pn.n;
        let grid = match &settings.grid {
            Some(g) => g.clone(),
            None => level_grid(params.p_c, pn.p_hat),
        };
        let (best, mut outcomes) = optimize_certificate(exec, geometry, n, &grid, settings.replicas, seed, params)?;
        let certificate = outcomes.swap_remove(best);
        let ln_ipc_lower = certificate.ln_bound();
        let ln_upper = ln_iic_upper(n)?;
        rows.push(GapRow {
            n,
            p_hat: pn.p_hat,
            divergence: (pn.p_hat - params.p_c) * f64::from(n) * f64::from(n),
            p_star: certificate.p,
            ln_ipc_lower,
            ln_iic_upper: ln_upper,
            ln_ratio: ln_ipc_lower - ln_upper,
            witness: certificate.ln_bound_interval().0 - ln_upper >= core::f64::consts::LN_2,
            certificate,
        });
    }
    Ok(GapReport { geometry, epsilon: settings.epsilon, c_hat: settings.c_hat, rows, skipped })
}

fn pn_list<X: Executor + ?Sized>(
    exec: &X,
    n_list: &[u32],
    settings: &GapSettings,
    seed: SeedSpec,
    params: &Params,
) -> Result<Vec<PnEstimate>, Error> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n list must be strictly increasing"));
    }
    n_list
        .iter()
        .map(|&n| estimate_pn(exec, n, settings.epsilon, settings.tolerance, seed, params, &settings.schedule))
        .collect()
}

/// `ln(Ĉ p_c^{|Ann(n,2n)|})`.
pub fn ln_iic_annulus_upper(c_hat: f64, n: u32, p_c: f64) -> Result<f64, Error> {
    Ok(libm::log(c_hat) + Annulus::doubling(n)?.edge_count() as f64 * libm::log(p_c))
}

/// Annulus gap: certified invasion bound over `Ĉ p_c^{|Ann(n,2n)|}`.
pub fn gap_test<X: Executor + ?Sized>(
    exec: &X,
    n_list: &[u32],
    settings: &GapSettings,
    seed: SeedSpec,
    params: &Params,
) -> Result<GapReport, Error> {
    let pns = pn_list(exec, n_list, settings, seed, params)?;
    gap_rows(exec, CertGeometry::Annulus, &pns, settings, seed, params, |n| {
        ln_iic_annulus_upper(settings.c_hat, n, params.p_c)
    })
}

/// Box gap. `ν[B(n) open]` is at most `p_c^{|B(n)|} ρ(n, N) / π(N)`, and
/// quasi-multiplicativity at `m = ⌈n/2⌉` gives `ρ(n, N)/π(N) ≤ Ĉ / π(m)`.
/// `π(m)` enters through its lower confidence bound.
pub fn box_variant_gap<X: Executor + ?Sized>(
    exec: &X,
    n_list: &[u32],
    settings: &GapSettings,
    seed: SeedSpec,
    params: &Params,
) -> Result<GapReport, Error> {
    let pns = pn_list(exec, n_list, settings, seed, params)?;
    gap_rows(exec, CertGeometry::Box, &pns, settings, seed, params, |n| {
        ln_iic_box_upper(exec, settings.c_hat, n, settings.replicas, seed, params)
    })
}

pub fn ln_iic_box_upper<X: Executor + ?Sized>(
    exec: &X,
    c_hat: f64,
    n: u32,
    replicas: u64,
    seed: SeedSpec,
    params: &Params,
) -> Result<f64, Error> {
    let m = n.div_ceil(2);
    let pi = one_arm_probability(exec, m, params.p_c, replicas, seed.with_tag("box-gap-arm"), params.confidence)?;
    if pi.lower <= 0.0 {
        return Err(Error::DenominatorTouchesZero);
    }
    let edges = BoxSpec::new(n)?.edge_count() as f64;
    Ok(libm::log(c_hat) + edges * libm::log(params.p_c) - libm::log(pi.lower))
}

/// Where the clusters for the disconnecting-edge statistics come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DsvSource {
    /// Invasion cluster up to its first visit of `∂B(horizon)`.
    Ipc,
    /// Origin cluster of a conditioned sample on `B(horizon)`.
    Iic { attempt_cap: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DsvReport {
    pub source: DsvSource,
    pub windows: Vec<Annulus>,
    pub horizon: u32,
    pub replicas: u64,
    /// Samplers that failed to produce a cluster.
    pub censored: u64,
    /// Per window: clusters with no disconnecting edge in the window.
    pub occurrences: Vec<u64>,
    pub frequencies: Vec<Estimate>,
}

impl DsvReport {
    pub fn censoring_rate(&self) -> f64 {
        if self.replicas == 0 {
            0.0
        } else {
            self.censored as f64 / self.replicas as f64
        }
    }

    /// More than a fifth of the replicas were censored.
    pub fn excess_censoring(&self) -> bool {
        5 * self.censored > self.replicas
    }
}

/// Whether the cluster has no disconnecting edge in each window.
pub fn dsv_events(cluster: &FiniteCluster, windows: &[Annulus], horizon: BoxSpec) -> Result<Vec<bool>, Error> {
    windows.iter().map(|w| Ok(disconnecting_edges(cluster, Vertex::ORIGIN, w, horizon)?.is_empty())).collect()
}

fn dsv_cluster(source: DsvSource, horizon: BoxSpec, p_c: f64, seed: SeedSpec) -> Result<Option<FiniteCluster>, Error> {
    match source {
        DsvSource::Ipc => {
            let field = SeededField::new(horizon, seed);
            let run = run_invasion(&field, StopRule::exit_box(horizon.radius()))?;
            if run.reason != StopReason::ExitBox {
                return Ok(None);
            }
            Ok(Some(FiniteCluster::from_edges(Vertex::ORIGIN, run.state.invaded_edges())?))
        }
        DsvSource::Iic { attempt_cap } => match iic_rejection_sample(horizon.radius(), p_c, seed, attempt_cap) {
            Ok(sample) => Ok(Some(cluster_of(&sample.config, Vertex::ORIGIN)?)),
            Err(Error::AttemptCapExceeded { .. }) => Ok(None),
            Err(e) => Err(e),
        },
    }
}

#[allow(clippy::too_many_arguments)]
pub fn dsv_event_counter<X: Executor + ?Sized>(
    exec: &X,
    source: DsvSource,
    windows: &[Annulus],
    horizon: u32,
    replicas: u64,
    seed: SeedSpec,
    params: &Params,
) -> Result<DsvReport, Error> {
    let largest = windows.iter().map(|w| w.outer()).max().ok_or(Error::InvalidParameter("no windows"))?;
    if horizon < 2 * largest {
        return Err(Error::InvalidParameter("horizon must be at least twice the largest window"));
    }
    let hbox = BoxSpec::new(horizon)?;
    let plan = ReplicaPlan::new(replicas, exec.workers(), seed);
    let init = (0u64, alloc::vec![0u64; windows.len()], None::<Error>);
    let (censored, occurrences, failure) = run_replicas(
        exec,
        &plan,
        |s| dsv_cluster(source, hbox, params.p_c, s).and_then(|c| c.map(|c| dsv_events(&c, windows, hbox)).transpose()),
        init,
        |(mut censored, mut occ, mut failure), outcome| {
            match outcome {
                Ok(None) => censored += 1,
                Ok(Some(events)) => {
                    for (o, hit) in occ.iter_mut().zip(events) {
                        *o += u64::from(hit);
                    }
                }
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
            (censored, occ, failure)
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let sampled = replicas - censored;
    let frequencies = if sampled == 0 {
        Vec::new()
    } else {
        occurrences
            .iter()
            .map(|&k| Ok(wilson_interval(k, sampled, params.confidence)?.with_seed(seed)))
            .collect::<Result<_, Error>>()?
    };
    Ok(DsvReport { source, windows: windows.to_vec(), horizon, replicas, censored, occurrences, frequencies })
}
