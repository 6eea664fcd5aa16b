//! End-to-end acceptance run. Prints one line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use percolab::exec::Threaded;
use percolab::{oracle, selftest};
use percolab_core::connectivity::{cluster_of, disconnecting_edges, has_lr_crossing};
use percolab_core::domination::{
    gap_rows, ln_iic_annulus_upper, soundness_check, CertGeometry, GapSettings, SoundnessPlan,
};
use percolab_core::field::{EdgeWeights, SeededField};
use percolab_core::iic::{nu_annulus_estimate, quasi_mult_constant, validated_c_hat, QuasiMult};
use percolab_core::invasion::{run_invasion, running_max_trace, StopRule};
use percolab_core::lattice::{Annulus, BoxSpec, Vertex};
use percolab_core::nearcrit::{
    crossing_probability, divergence_table, CorrelationTable, ReplicaSchedule, CROSSING_TAG,
};
use percolab_core::rng::SeedSpec;
use percolab_core::stats::{count_successes, wilson_interval, Executor};
use percolab_core::Params;

const P_HAT_8: f64 = 0.66015625;
const LIMSUP_ANCHOR: f64 = 0.4946;
const GAP_REPLICAS: u64 = 400_000;

struct Outcome {
    pass: bool,
    detail: String,
    digest: String,
}

fn params() -> Params {
    Params { confidence: 0.99, ..Params::default() }
}

/// Estimates several criteria share.
struct Shared {
    table: CorrelationTable,
    qm: Vec<QuasiMult>,
}

fn shared<X: Executor + Sync>(exec: &X) -> Shared {
    let table = divergence_table(
        exec,
        &[4, 8, 16, 32],
        0.02,
        0.004,
        SeedSpec::new(7, CROSSING_TAG),
        &params(),
        &ReplicaSchedule::default(),
    )
    .unwrap();
    let mut qm = Vec::new();
    for n in [1, 2] {
        for big_n in [16, 32] {
            qm.push(quasi_mult_constant(exec, n, big_n, 100_000, SeedSpec::new(7, "qm"), &params()).unwrap());
        }
    }
    Shared { table, qm }
}

fn invasion_oracle() -> Outcome {
    let mut mismatches = 0;
    let mut steps = 0;
    for r in 0..100 {
        let field = SeededField::new(BoxSpec::new(5).unwrap(), SeedSpec::new(7, "acceptance-invasion").with_replica(r));
        let run = run_invasion(&field, StopRule::max_steps(1_000_000)).unwrap();
        let fast: Vec<_> = run.state.trace().iter().map(|s| (s.edge, s.weight)).collect();
        let slow = oracle::scan_invasion(|e| field.weight(e), 5, 1_000_000);
        steps += fast.len();
        mismatches += usize::from(fast != slow);
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("{mismatches} mismatching traces out of 100 ({steps} steps)"),
        digest: format!("{mismatches}/{steps}"),
    }
}

fn rectangle_crossing<X: Executor + Sync>(exec: &X, w: u32, h: u32, p: f64, replicas: u64, seed: SeedSpec) -> u64 {
    let region = BoxSpec::new(w.max(h)).unwrap();
    count_successes(exec, 0..replicas, seed, |s| {
        has_lr_crossing(&SeededField::new(region, s).at_level(p), w, h).unwrap()
    })
    .unwrap()
}

fn self_duality<X: Executor + Sync>(exec: &X) -> Outcome {
    let exact = oracle::enumerate_crossing(2, 1);
    let kernel = selftest::kernel_crossing(2, 1);
    let hits = rectangle_crossing(exec, 17, 16, 0.5, 100_000, SeedSpec::new(7, "acceptance-duality"));
    let ci = wilson_interval(hits, 100_000, 0.997).unwrap();
    Outcome {
        pass: exact == 0.5 && kernel == 0.5 && ci.contains(0.5),
        detail: format!(
            "[0,2]x[0,1] exact {exact} kernel {kernel}; [0,17]x[0,16] MC {:.5} in [{:.5}, {:.5}]",
            ci.value, ci.lower, ci.upper
        ),
        digest: format!("{hits}"),
    }
}

fn small_crossing<X: Executor + Sync>(exec: &X) -> Outcome {
    let exact = oracle::enumerate_crossing(1, 1);
    let kernel = selftest::kernel_crossing(1, 1);
    let mc = crossing_probability(exec, 0.5, 1, 100_000, SeedSpec::new(7, "acceptance-square"), 0.95).unwrap();
    let sigma = (0.75f64 * 0.25 / 100_000.0).sqrt();
    let dev = (mc.value - 0.75) / sigma;
    Outcome {
        pass: exact == 0.75 && kernel == 0.75 && dev.abs() <= 3.0,
        detail: format!("exact {exact} kernel {kernel}; MC {:.5} ({dev:+.2} sigma)", mc.value),
        digest: format!("{:?}", mc),
    }
}

fn certificate_soundness<X: Executor + Sync>(exec: &X, shared: &Shared) -> Outcome {
    let p_hat = |n: u32| -> f64 {
        let pn = percolab_core::nearcrit::estimate_pn(
            exec,
            n,
            0.02,
            0.004,
            SeedSpec::new(7, CROSSING_TAG),
            &params(),
            &ReplicaSchedule::default(),
        )
        .unwrap();
        pn.p_hat
    };
    let four = shared.table.row(4).map(|r| r.pn.p_hat).unwrap_or(f64::NAN);
    let mut pass = true;
    let mut parts = Vec::new();
    let mut digest = String::new();
    for (n, ph) in [(1, p_hat(1)), (2, p_hat(2)), (4, four)] {
        for p in [0.5, ph] {
            for geometry in [CertGeometry::Annulus, CertGeometry::Box] {
                let seed = SeedSpec::new(7, "acceptance-soundness");
                let t = soundness_check(exec, geometry, n, p, SoundnessPlan::new(1_000), seed).unwrap();
                pass &= t.violations == 0 && t.certified >= 1_000 && t.covered == t.certified;
                parts.push(format!("{}:{n}@{p:.4} {}/{}", geometry.name(), t.covered, t.certified));
                digest.push_str(&format!("{t:?}"));
            }
        }
    }
    Outcome { pass, detail: format!("covered/certified {}", parts.join(", ")), digest }
}

fn sandwich<X: Executor + Sync>(exec: &X, shared: &Shared) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut digest = String::new();
    for q in &shared.qm {
        let nu =
            nu_annulus_estimate(exec, q.n, q.big_n, 100_000, SeedSpec::new(7, "acceptance-nu"), &params()).unwrap();
        let ok = q.left_inequality_holds() && nu.sandwich_holds(&q.c_hat) && nu.positive();
        pass &= ok;
        parts.push(format!(
            "n={} N={}: ratio {:.4} [{:.4}, {:.4}] C^ {:.3} (<= {:.3})",
            q.n, q.big_n, nu.ratio.value, nu.ratio.lower, nu.ratio.upper, q.c_hat.value, q.c_hat.upper
        ));
        digest.push_str(&format!("{q:?}{nu:?}"));
    }
    Outcome { pass, detail: parts.join("; "), digest }
}

fn divergence(shared: &Shared) -> Outcome {
    let t = &shared.table;
    let p8 = t.row(8).map(|r| r.pn.p_hat).unwrap_or(f64::NAN);
    let stats: Vec<String> = t
        .rows
        .iter()
        .map(|r| {
            format!(
                "n={} p^={} stat={:.2} band [{:.3}, {:.3}]",
                r.n, r.pn.p_hat, r.divergence, r.divergence_band.0, r.divergence_band.1
            )
        })
        .collect();
    Outcome {
        pass: t.excluded.is_empty()
            && t.rows.len() == 4
            && t.divergence_increasing()
            && t.bands_disjoint()
            && p8 == P_HAT_8,
        detail: stats.join(", "),
        digest: format!("{t:?}"),
    }
}

fn gap<X: Executor + Sync>(exec: &X, shared: &Shared) -> Outcome {
    let c_hat = validated_c_hat(&shared.qm).unwrap();
    let settings = GapSettings {
        epsilon: 0.02,
        tolerance: 0.004,
        schedule: ReplicaSchedule::default(),
        replicas: GAP_REPLICAS,
        c_hat,
        grid: None,
    };
    let pns: Vec<_> = shared.table.rows.iter().filter(|r| r.n <= 16).map(|r| r.pn.clone()).collect();
    let report =
        gap_rows(exec, CertGeometry::Annulus, &pns, &settings, SeedSpec::new(7, "acceptance-gap"), &params(), |n| {
            ln_iic_annulus_upper(c_hat, n, 0.5)
        })
        .unwrap();
    let slope = report.log_ratio_slope();
    let rows: Vec<String> =
        report.rows.iter().map(|r| format!("n={} p*={:.4} ln ratio {:.2}", r.n, r.p_star, r.ln_ratio)).collect();
    let witness =
        report.smallest_witness().map_or("no ratio >= 2 witness".to_string(), |n| format!("ratio >= 2 at n={n}"));
    Outcome {
        pass: report.rows.len() == 3 && report.ratio_increasing() && slope.is_some_and(|s| s > 0.0),
        detail: format!("C^={c_hat:.3}; {}; slope {:.3}; {witness}", rows.join(", "), slope.unwrap_or(f64::NAN)),
        digest: format!("{report:?}"),
    }
}

fn disconnecting_oracle() -> Outcome {
    let horizon = BoxSpec::new(6).unwrap();
    let mut mismatches = 0;
    let mut with_edges = 0;
    let mut clusters = 0u64;
    let mut attempt = 0u64;
    while clusters < 1_000 {
        let seed = SeedSpec::new(7, "acceptance-bridges").with_replica(attempt);
        attempt += 1;
        let field = SeededField::new(horizon, seed);
        let level = 0.45 + 0.15 * seed.key().child(u64::MAX).uniform(0);
        let cluster = cluster_of(&field.at_level(level), Vertex::ORIGIN).unwrap();
        if cluster.edges().len() > 100 {
            continue;
        }
        clusters += 1;
        let inner = 1 + (attempt % 3) as u32;
        let outer = inner + 2;
        let window = Annulus::new(inner, outer).unwrap();
        let fast = disconnecting_edges(&cluster, Vertex::ORIGIN, &window, horizon).unwrap();
        let slow = oracle::disconnecting_by_deletion(cluster.edges(), Vertex::ORIGIN, inner, outer, 6);
        with_edges += usize::from(!slow.is_empty());
        mismatches += usize::from(fast != slow);
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("{mismatches} mismatches over 1000 clusters ({with_edges} with disconnecting edges)"),
        digest: format!("{mismatches}/{with_edges}/{attempt}"),
    }
}

fn limsup() -> Outcome {
    let field = SeededField::new(BoxSpec::new(1500).unwrap(), SeedSpec::new(7, "limsup"));
    let run = run_invasion(&field, StopRule::max_steps(100_000)).unwrap();
    let suffix = running_max_trace(&run.state, 10_000).unwrap();
    let m = suffix[0];
    Outcome {
        pass: run.state.step_count() == 100_000 && m < 0.55 && (m - LIMSUP_ANCHOR).abs() <= 0.02,
        detail: format!("suffix max {m:.4} (anchor {LIMSUP_ANCHOR}, cap 0.55)"),
        digest: format!("{:?}", run.state.trace().last()),
    }
}

fn all_criteria<X: Executor + Sync>(exec: &X) -> Vec<(&'static str, Outcome)> {
    let t = Instant::now();
    let shared = shared(exec);
    eprintln!("  shared estimates in {:.1?}", t.elapsed());
    let mut out = Vec::new();
    let mut timed = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        eprintln!("  {name} in {:.1?}", t.elapsed());
        out.push((name, o));
    };
    timed("invasion matches min-scan oracle", &mut invasion_oracle);
    timed("self-duality crossing anchor", &mut || self_duality(exec));
    timed("unit-square crossing 3/4", &mut || small_crossing(exec));
    timed("certificate soundness", &mut || certificate_soundness(exec, &shared));
    timed("conditioned-measure sandwich", &mut || sandwich(exec, &shared));
    timed("correlation-length divergence", &mut || divergence(&shared));
    timed("invasion/incipient gap trend", &mut || gap(exec, &shared));
    timed("disconnecting-edge oracle", &mut disconnecting_oracle);
    timed("limsup of invaded weights", &mut limsup);
    out
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    eprintln!("acceptance run with 4 workers");
    let four = all_criteria(&Threaded::new(4));
    eprintln!("acceptance run with 1 worker");
    let one = all_criteria(&Threaded::new(1));

    let mut failed = 0;
    for (i, (name, o)) in four.iter().enumerate() {
        println!("criterion {:>2} {}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
        failed += usize::from(!o.pass);
    }
    let differing: Vec<&str> =
        four.iter().zip(&one).filter(|((_, a), (_, b))| a.digest != b.digest).map(|((n, _), _)| *n).collect();
    let reproducible = differing.is_empty();
    println!(
        "criterion 10 {}: bit-identical across 1 and 4 workers ({})",
        if reproducible { "PASS" } else { "FAIL" },
        if reproducible { "all criteria".to_string() } else { format!("differs: {}", differing.join(", ")) }
    );
    failed += usize::from(!reproducible);
    if failed == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
