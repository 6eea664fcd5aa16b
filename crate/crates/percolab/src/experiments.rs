//! One runner per subcommand: resolve parameters, call the kernels, write
//! a report.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use percolab_core::domination::{
    box_variant_gap, dsv_event_counter, gap_test, ipc_certificate_bound, CertGeometry, DsvSource, GapReport,
    GapSettings, SoundnessPlan, DSV_TAG,
};
use percolab_core::field::SeededField;
use percolab_core::iic::{
    nu_annulus_estimate, one_arm_probability, quasi_mult_constant, validated_c_hat, DEFAULT_ATTEMPT_CAP, ONE_ARM_TAG,
};
use percolab_core::invasion::{run_invasion, running_max_trace, StopRule};
use percolab_core::lattice::{Annulus, BoxSpec};
use percolab_core::nearcrit::{crossing_probability, divergence_table, ReplicaSchedule, CROSSING_TAG};
use percolab_core::rng::SeedSpec;
use percolab_core::stats::Estimate;
use percolab_core::{Error as CoreError, Params};

use crate::config::{Command, ExperimentConfig, Geometry, Source};
use crate::exec::Threaded;
use crate::report::{sci_from_ln, write_report};
use crate::selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNRESOLVED: i32 = 3;
pub const EXIT_SOUNDNESS: i32 = 4;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("soundness check failed: {0}")]
    Soundness(String),
    #[error(transparent)]
    Core(CoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        match e {
            InvalidParameter(_)
            | InvalidProbability(_)
            | InvalidAnnulus { .. }
            | RadiusTooLarge(_)
            | EmptyBoundary
            | NoStopRule
            | BurnInTooLarge { .. }
            | RectangleOutsideRegion { .. }
            | ZeroTrials => RunError::Config(e.to_string()),
            CertificateViolation { .. } => RunError::Soundness(e.to_string()),
            other => RunError::Core(other),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Soundness(_) => EXIT_SOUNDNESS,
            RunError::Core(_) | RunError::Io(_) => EXIT_FAILURE,
        }
    }
}

/// How a completed run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Some estimate could not be resolved to the requested tolerance.
    Unresolved,
    /// The self-test found a mismatch.
    SelftestFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => EXIT_OK,
            Status::Unresolved => EXIT_UNRESOLVED,
            Status::SelftestFailed => EXIT_SOUNDNESS,
        }
    }
}

fn params(cfg: &ExperimentConfig) -> Params {
    Params { confidence: cfg.confidence, ..Params::default() }
}

fn seed(cfg: &ExperimentConfig, tag: &'static str) -> SeedSpec {
    SeedSpec::new(cfg.seed, tag)
}

#[derive(Serialize)]
struct TraceRow {
    step: usize,
    ax: i32,
    ay: i32,
    bx: i32,
    by: i32,
    weight: f64,
    suffix_max: f64,
}

#[derive(Serialize)]
struct EstimateRow {
    n: u32,
    p: f64,
    estimate: f64,
    ci_lo: f64,
    ci_hi: f64,
    replicas: u64,
    successes: Option<u64>,
    seed: String,
}

impl EstimateRow {
    fn new(n: u32, p: f64, e: &Estimate) -> Self {
        EstimateRow {
            n,
            p,
            estimate: e.value,
            ci_lo: e.lower,
            ci_hi: e.upper,
            replicas: e.replicas,
            successes: e.successes,
            seed: e.seed.map(|s| s.to_string()).unwrap_or_default(),
        }
    }
}

#[derive(Serialize)]
struct CorrelationRow {
    n: u32,
    epsilon: f64,
    p_hat: f64,
    ci_lo: f64,
    ci_hi: f64,
    replicas: u64,
    divergence_stat: f64,
    seed: String,
}

#[derive(Serialize)]
struct NuRow {
    n: u32,
    #[serde(rename = "N")]
    big_n: u32,
    prefactor: String,
    ratio: f64,
    ci_lo: String,
    ci_hi: String,
    lower: String,
    upper: String,
    #[serde(rename = "C_hat")]
    c_hat: f64,
    sandwich: bool,
    seed: String,
}

#[derive(Serialize)]
struct CertificateRow {
    n: u32,
    p: f64,
    geometry: &'static str,
    window_edges: usize,
    open_factor: String,
    disconnection: f64,
    ci_lo: f64,
    ci_hi: f64,
    bound: String,
    fields: u64,
    certified: u64,
    covered: u64,
    violations: u64,
    seed: String,
}

#[derive(Serialize)]
struct GapRow {
    n: u32,
    p_star: f64,
    ipc_lower: String,
    iic_upper: String,
    ratio: String,
    ln_ratio: f64,
    verdict: bool,
    pn_hat: f64,
    divergence_stat: f64,
    seeds: String,
}

#[derive(Serialize)]
struct DsvRow {
    source: &'static str,
    inner: u32,
    outer: u32,
    horizon: u32,
    replicas: u64,
    censored: u64,
    occurrences: u64,
    frequency: f64,
    ci_lo: f64,
    ci_hi: f64,
    seed: String,
}

/// Run the configured experiment and write its report to `out`. Progress
/// and warnings go to `log`.
pub fn run(cfg: &ExperimentConfig, out: &mut dyn Write, log: &mut dyn Write) -> Result<Status, RunError> {
    let exec = Threaded::new(cfg.workers);
    let params = params(cfg);
    let report = cfg.command.name();
    let mut status = Status::Ok;
    match cfg.command {
        Command::Invade => {
            let region = BoxSpec::new(cfg.horizon)?;
            let s = seed(cfg, "invade");
            let run = run_invasion(&SeededField::new(region, s), StopRule::max_steps(cfg.steps))?;
            let trace = run.state.trace();
            let suffix = if trace.is_empty() { Vec::new() } else { running_max_trace(&run.state, 0)? };
            let rows: Vec<TraceRow> = trace
                .iter()
                .zip(&suffix)
                .enumerate()
                .map(|(i, (step, &m))| TraceRow {
                    step: i + 1,
                    ax: step.edge.a().x,
                    ay: step.edge.a().y,
                    bx: step.edge.b().x,
                    by: step.edge.b().y,
                    weight: step.weight,
                    suffix_max: m,
                })
                .collect();
            writeln!(log, "invasion: {} steps, stopped by {:?}", trace.len(), run.reason)?;
            if cfg.burn_in < suffix.len() {
                writeln!(log, "suffix max after {} steps: {:.6}", cfg.burn_in, suffix[cfg.burn_in])?;
            }
            write_report(out, cfg.format, report, cfg, &rows)?;
        }
        Command::Crossing => {
            let e = crossing_probability(&exec, cfg.p, cfg.n, cfg.replicas, seed(cfg, CROSSING_TAG), cfg.confidence)?;
            write_report(out, cfg.format, report, cfg, &[EstimateRow::new(cfg.n, cfg.p, &e)])?;
        }
        Command::Onearm => {
            let e = one_arm_probability(&exec, cfg.n, cfg.p, cfg.replicas, seed(cfg, ONE_ARM_TAG), cfg.confidence)?;
            write_report(out, cfg.format, report, cfg, &[EstimateRow::new(cfg.n, cfg.p, &e)])?;
        }
        Command::Corrlen => {
            let table = divergence_table(
                &exec,
                &cfg.n_list,
                cfg.epsilon,
                cfg.tolerance,
                seed(cfg, CROSSING_TAG),
                &params,
                &schedule(cfg),
            )?;
            for n in &table.excluded {
                writeln!(log, "warning: p_n unresolved for n = {n}; row excluded")?;
                status = Status::Unresolved;
            }
            if !table.divergence_increasing() {
                writeln!(log, "warning: divergence statistic not increasing over the tested sizes")?;
            }
            let rows: Vec<CorrelationRow> = table
                .rows
                .iter()
                .map(|r| CorrelationRow {
                    n: r.n,
                    epsilon: table.epsilon,
                    p_hat: r.pn.p_hat,
                    ci_lo: r.pn.lower,
                    ci_hi: r.pn.upper,
                    replicas: r.pn.crossing.replicas,
                    divergence_stat: r.divergence,
                    seed: r.pn.seed.to_string(),
                })
                .collect();
            write_report(out, cfg.format, report, cfg, &rows)?;
        }
        Command::IicNu => {
            let q = quasi_mult_constant(&exec, cfg.n, cfg.big_n, cfg.replicas, seed(cfg, "quasi-mult"), &params)?;
            let nu = nu_annulus_estimate(&exec, cfg.n, cfg.big_n, cfg.replicas, seed(cfg, "nu"), &params)?;
            let c_hat = cfg.c_hat.unwrap_or(q.c_hat.upper);
            let c_est = Estimate { upper: c_hat, ..q.c_hat };
            let sandwich = nu.sandwich_holds(&c_est);
            if !sandwich {
                writeln!(log, "warning: estimate outside [p_c^|Ann|, C_hat p_c^|Ann|] within CI")?;
            }
            let row = NuRow {
                n: cfg.n,
                big_n: cfg.big_n,
                prefactor: sci_from_ln(nu.ln_prefactor),
                ratio: nu.ratio.value,
                ci_lo: sci_from_ln(nu.ln_prefactor + nu.ratio.lower.ln()),
                ci_hi: sci_from_ln(nu.ln_prefactor + nu.ratio.upper.ln()),
                lower: sci_from_ln(nu.ln_prefactor),
                upper: sci_from_ln(nu.ln_prefactor + c_hat.ln()),
                c_hat,
                sandwich,
                seed: cfg.seed.to_string(),
            };
            write_report(out, cfg.format, report, cfg, &[row])?;
        }
        Command::Certificate => {
            let checks = (cfg.checks > 0).then(|| SoundnessPlan::new(cfg.checks));
            let o = ipc_certificate_bound(
                &exec,
                geometry(cfg.geometry),
                cfg.n,
                cfg.p,
                cfg.replicas,
                checks,
                seed(cfg, "certificate"),
                &params,
            )?;
            let t = o.soundness.unwrap_or_default();
            let row = CertificateRow {
                n: o.n,
                p: o.p,
                geometry: o.geometry.name(),
                window_edges: o.window_edges,
                open_factor: sci_from_ln(o.ln_open_factor),
                disconnection: o.disconnection.value,
                ci_lo: o.disconnection.lower,
                ci_hi: o.disconnection.upper,
                bound: sci_from_ln(o.ln_bound()),
                fields: t.fields,
                certified: t.certified,
                covered: t.covered,
                violations: t.violations,
                seed: cfg.seed.to_string(),
            };
            write_report(out, cfg.format, report, cfg, &[row])?;
        }
        Command::Gap | Command::BoxGap => {
            let c_hat = match cfg.c_hat {
                Some(c) => c,
                None => measure_c_hat(&exec, cfg, &params, log)?,
            };
            let settings = GapSettings {
                epsilon: cfg.epsilon,
                tolerance: cfg.tolerance,
                schedule: schedule(cfg),
                replicas: cfg.replicas,
                c_hat,
                grid: (!cfg.grid.is_empty()).then(|| cfg.grid.clone()),
            };
            let s = seed(cfg, "gap");
            let gap = if cfg.command == Command::Gap {
                gap_test(&exec, &cfg.n_list, &settings, s, &params)?
            } else {
                box_variant_gap(&exec, &cfg.n_list, &settings, s, &params)?
            };
            if !gap.skipped.is_empty() {
                status = Status::Unresolved;
            }
            summarize_gap(&gap, log)?;
            let rows: Vec<GapRow> = gap
                .rows
                .iter()
                .map(|r| GapRow {
                    n: r.n,
                    p_star: r.p_star,
                    ipc_lower: sci_from_ln(r.ln_ipc_lower),
                    iic_upper: sci_from_ln(r.ln_iic_upper),
                    ratio: sci_from_ln(r.ln_ratio),
                    ln_ratio: r.ln_ratio,
                    verdict: r.witness,
                    pn_hat: r.p_hat,
                    divergence_stat: r.divergence,
                    seeds: format!(
                        "{};{}",
                        s,
                        r.certificate.disconnection.seed.map(|x| x.to_string()).unwrap_or_default()
                    ),
                })
                .collect();
            write_report(out, cfg.format, report, cfg, &rows)?;
        }
        Command::DsvCount => {
            let windows = cfg.windows.iter().map(|w| Annulus::new(w.inner, w.outer)).collect::<Result<Vec<_>, _>>()?;
            let source = match cfg.source {
                Source::Ipc => DsvSource::Ipc,
                Source::Iic => DsvSource::Iic { attempt_cap: DEFAULT_ATTEMPT_CAP },
            };
            let r = dsv_event_counter(&exec, source, &windows, cfg.horizon, cfg.replicas, seed(cfg, DSV_TAG), &params)?;
            if r.excess_censoring() {
                writeln!(
                    log,
                    "warning: {:.1}% of replicas censored; horizon {} is too small",
                    100.0 * r.censoring_rate(),
                    cfg.horizon
                )?;
            }
            let name = match cfg.source {
                Source::Ipc => "ipc",
                Source::Iic => "iic",
            };
            let rows: Vec<DsvRow> = windows
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let f = r.frequencies.get(i);
                    DsvRow {
                        source: name,
                        inner: w.inner(),
                        outer: w.outer(),
                        horizon: r.horizon,
                        replicas: r.replicas,
                        censored: r.censored,
                        occurrences: r.occurrences[i],
                        frequency: f.map_or(f64::NAN, |e| e.value),
                        ci_lo: f.map_or(f64::NAN, |e| e.lower),
                        ci_hi: f.map_or(f64::NAN, |e| e.upper),
                        seed: seed(cfg, DSV_TAG).to_string(),
                    }
                })
                .collect();
            write_report(out, cfg.format, report, cfg, &rows)?;
        }
        Command::Selftest => {
            let checks = selftest::run(&exec);
            for c in &checks {
                writeln!(log, "[{}] {}", if c.pass { "pass" } else { "FAIL" }, c.name)?;
            }
            if checks.iter().any(|c| !c.pass) {
                status = Status::SelftestFailed;
            }
            write_report(out, cfg.format, report, cfg, &checks)?;
        }
    }
    Ok(status)
}

fn geometry(g: Geometry) -> CertGeometry {
    match g {
        Geometry::Annulus => CertGeometry::Annulus,
        Geometry::Box => CertGeometry::Box,
    }
}

fn schedule(cfg: &ExperimentConfig) -> ReplicaSchedule {
    ReplicaSchedule { initial: cfg.max_replicas.min(1_000), max: cfg.max_replicas }
}

/// Largest upper confidence bound of `Ĉ` over small `(n, N)` pairs.
fn measure_c_hat(
    exec: &Threaded,
    cfg: &ExperimentConfig,
    params: &Params,
    log: &mut dyn Write,
) -> Result<f64, RunError> {
    let mut measured = Vec::new();
    for (n, big_n) in [(1, 16), (2, 16), (1, 32), (2, 32)] {
        measured.push(quasi_mult_constant(exec, n, big_n, cfg.replicas, seed(cfg, "quasi-mult"), params)?);
    }
    let c = validated_c_hat(&measured).expect("nonempty");
    writeln!(log, "C_hat = {c:.4} (largest upper bound over {} pairs)", measured.len())?;
    Ok(c)
}

fn summarize_gap(gap: &GapReport, log: &mut dyn Write) -> std::io::Result<()> {
    writeln!(log, "{} gap, epsilon = {}, C_hat = {:.4}", gap.geometry.name(), gap.epsilon, gap.c_hat)?;
    for r in &gap.rows {
        writeln!(
            log,
            "  n = {:>3}  p_hat = {:.5}  p* = {:.5}  ln ratio = {:>10.3}  witness = {}",
            r.n, r.p_hat, r.p_star, r.ln_ratio, r.witness
        )?;
    }
    for n in &gap.skipped {
        writeln!(log, "  n = {n:>3}  skipped: p_n unresolved")?;
    }
    writeln!(log, "  ratio increasing: {}", gap.ratio_increasing())?;
    if let Some(slope) = gap.log_ratio_slope() {
        writeln!(log, "  slope of ln ratio against (p_hat - p_c) n^2: {slope:.4}")?;
    }
    match gap.smallest_witness() {
        Some(n) => writeln!(log, "  ratio >= 2 first at n = {n}"),
        None => writeln!(log, "  ratio >= 2 not reached"),
    }
}
