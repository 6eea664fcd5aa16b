//! Built-in oracle suite: every fast kernel against an exhaustive or
//! closed-form reference.

use serde::Serialize;

use percolab_core::connectivity::{cluster_of, disconnecting_edges, has_lr_crossing, origin_reaches};
use percolab_core::field::{sample_weights, Configuration, EdgeWeights, SeededField};
use percolab_core::iic::{iic_rejection_sample, one_arm_probability, DEFAULT_ATTEMPT_CAP};
use percolab_core::invasion::{run_invasion, StopRule};
use percolab_core::lattice::{induced_edges, Annulus, BoxSpec, Edge, Vertex};
use percolab_core::nearcrit::crossing_probability;
use percolab_core::rng::SeedSpec;
use percolab_core::stats::{ratio_estimate, wilson_interval, Estimate, Executor, Sequential};

use crate::oracle;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

fn check(name: &str, expected: impl ToString, observed: impl ToString, pass: bool) -> Check {
    Check { name: name.to_string(), expected: expected.to_string(), observed: observed.to_string(), pass }
}

/// Crossing probability of `[0, w] × [0, h]` at 1/2 computed by the fast
/// kernel over every configuration.
pub fn kernel_crossing(w: i32, h: i32) -> f64 {
    let region = BoxSpec::new(w.max(h) as u32).unwrap();
    let edges: Vec<Edge> = region
        .edges()
        .filter(|e| {
            let (a, b) = e.endpoints();
            [a, b].iter().all(|v| (0..=w).contains(&v.x) && (0..=h).contains(&v.y))
        })
        .collect();
    let total = 1u64 << edges.len();
    let mut hits = 0;
    for mask in 0..total {
        let open = edges.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| e);
        let cfg = Configuration::from_edges(region, open).unwrap();
        hits += u64::from(has_lr_crossing(&cfg, w as u32, h as u32).unwrap());
    }
    hits as f64 / total as f64
}

fn brute_annulus_count(inner: u32, outer: u32) -> usize {
    let vs: Vec<Vertex> = BoxSpec::new(outer).unwrap().vertices().filter(|v| v.norm() > inner).collect();
    let mut n = 0;
    for (i, a) in vs.iter().enumerate() {
        for b in &vs[i + 1..] {
            n += usize::from(a.l1_distance(*b) == 1);
        }
    }
    n
}

pub fn run<X: Executor + ?Sized>(exec: &X) -> Vec<Check> {
    let mut out = Vec::new();

    for (w, h, want) in [(1, 1, 0.75), (2, 1, 0.5)] {
        let exact = oracle::enumerate_crossing(w, h);
        let fast = kernel_crossing(w, h);
        out.push(check(&format!("crossing [0,{w}]x[0,{h}] by enumeration"), want, fast, exact == want && fast == want));
    }

    let mc = crossing_probability(exec, 0.5, 1, 100_000, SeedSpec::new(7, "selftest-crossing"), 0.997).unwrap();
    out.push(check("crossing [0,1]^2 Monte Carlo", 0.75, mc.value, mc.contains(0.75)));

    let mut counts_ok = true;
    for (m, n) in [(1, 2), (2, 4), (3, 7), (4, 8)] {
        counts_ok &= Annulus::new(m, n).unwrap().edge_count() == brute_annulus_count(m, n);
    }
    out.push(check("annulus edge counts", "brute force", counts_ok, counts_ok));

    let (arm, cond) = oracle::enumerate_conditioned_b1(&[Edge::horizontal(Vertex::ORIGIN)]);
    let fast_arm = {
        let region = BoxSpec::new(1).unwrap();
        let mut hits = 0;
        for mask in 0u32..1 << 12 {
            let open = region.edges().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| e);
            let vec: Vec<Edge> = open.collect();
            let cfg = Configuration::from_edges(region, vec.iter()).unwrap();
            hits += u64::from(origin_reaches(&cfg, 1).unwrap());
        }
        hits as f64 / 4096.0
    };
    out.push(check("one-arm B(1) by enumeration", 15.0 / 16.0, fast_arm, arm == 15.0 / 16.0 && fast_arm == arm));

    let pi1 = one_arm_probability(exec, 1, 0.5, 50_000, SeedSpec::new(7, "selftest-arm"), 0.997).unwrap();
    out.push(check("one-arm B(1) Monte Carlo", 15.0 / 16.0, pi1.value, pi1.contains(15.0 / 16.0)));

    let samples = 20_000u64;
    let mut hits = 0u64;
    for r in 0..samples {
        let s = iic_rejection_sample(1, 0.5, SeedSpec::new(7, "selftest-iic").with_replica(r), DEFAULT_ATTEMPT_CAP)
            .unwrap();
        hits += u64::from(s.config.open_edges().contains(&Edge::horizontal(Vertex::ORIGIN)));
    }
    let freq = hits as f64 / samples as f64;
    let sigma = (cond * (1.0 - cond) / samples as f64).sqrt();
    out.push(check("conditioned B(1) cylinder", cond, freq, (freq - cond).abs() < 4.0 * sigma));

    let mut mismatches = 0;
    for r in 0..20 {
        let field = sample_weights(BoxSpec::new(4).unwrap(), SeedSpec::new(7, "selftest-invasion").with_replica(r));
        let fast = run_invasion(&field, StopRule::max_steps(10_000)).unwrap();
        let fast: Vec<(Edge, f64)> = fast.state.trace().iter().map(|s| (s.edge, s.weight)).collect();
        let slow = oracle::scan_invasion(|e| field.weight(e), 4, 10_000);
        mismatches += usize::from(fast != slow);
    }
    out.push(check("invasion against per-step scan", 0, mismatches, mismatches == 0));

    let mut mismatches = 0;
    let window = Annulus::new(1, 4).unwrap();
    let horizon = BoxSpec::new(5).unwrap();
    for r in 0..100 {
        let field = SeededField::new(horizon, SeedSpec::new(7, "selftest-bridges").with_replica(r));
        let cluster = cluster_of(&field.at_level(0.55), Vertex::ORIGIN).unwrap();
        let fast = disconnecting_edges(&cluster, Vertex::ORIGIN, &window, horizon).unwrap();
        let slow = oracle::disconnecting_by_deletion(cluster.edges(), Vertex::ORIGIN, 1, 4, 5);
        mismatches += usize::from(fast != slow);
    }
    out.push(check("disconnecting edges against deletion", 0, mismatches, mismatches == 0));

    let w = wilson_interval(50, 100, 0.95).unwrap();
    let (lo, hi) = oracle::wilson(50.0, 100.0, 1.959963984540054);
    let ok = (w.lower - lo).abs() < 1e-9 && (w.upper - hi).abs() < 1e-9 && (lo - 0.404).abs() < 1e-3;
    out.push(check("Wilson 50/100", format!("({lo:.4}, {hi:.4})"), format!("({:.4}, {:.4})", w.lower, w.upper), ok));

    let z = 1.959963984540054;
    let num =
        Estimate { value: 0.2, lower: 0.19, upper: 0.21, confidence: 0.95, replicas: 1, successes: None, seed: None };
    let den = Estimate { value: 0.4, lower: 0.39, upper: 0.41, ..num };
    let r = ratio_estimate(&num, &den).unwrap();
    let sd = ((0.01f64 / z).powi(2) + 0.25 * (0.01f64 / z).powi(2)).sqrt() / 0.4;
    let ok = (r.value - 0.5).abs() < 1e-12 && (r.half_width() - z * sd).abs() < 1e-12;
    out.push(check("delta-method ratio", "0.5", r.value, ok));

    let region = BoxSpec::new(3).unwrap();
    let induced = induced_edges(&region.vertices().collect::<Vec<_>>()).len();
    out.push(check("induced edges of B(3)", region.edge_count(), induced, induced == region.edge_count()));

    let seq = crossing_probability(&Sequential, 0.55, 8, 2_000, SeedSpec::new(7, "selftest-det"), 0.95).unwrap();
    let par = crossing_probability(exec, 0.55, 8, 2_000, SeedSpec::new(7, "selftest-det"), 0.95).unwrap();
    out.push(check("worker-count invariance", seq.value, par.value, seq == par));

    out
}
