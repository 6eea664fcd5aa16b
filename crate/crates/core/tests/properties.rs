use proptest::prelude::*;

use percolab_core::connectivity::{bridges, cluster_of, connected, disconnecting_edges, has_lr_crossing};
use percolab_core::field::{threshold, EdgeWeights, OpenEdges, SeededField};
use percolab_core::invasion::{run_invasion, running_max_trace, InvasionState, StopRule};
use percolab_core::lattice::{induced_edges, Annulus, BoxSpec, Vertex};
use percolab_core::nearcrit::crossing_probability;
use percolab_core::rng::SeedSpec;
use percolab_core::stats::{wilson_interval, Sequential};

fn field(radius: u32, master: u64, replica: u64) -> SeededField {
    SeededField::new(BoxSpec::new(radius).unwrap(), SeedSpec::new(master, "properties").with_replica(replica))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn open_sets_grow_with_level(master in any::<u64>(), p in 0.0f64..1.0, q in 0.0f64..1.0) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let f = field(4, master, 0);
        let a = threshold(&f, lo).unwrap();
        let b = threshold(&f, hi).unwrap();
        prop_assert!(a.open_edges().is_subset(b.open_edges()));
    }

    #[test]
    fn crossing_is_monotone_in_level(master in any::<u64>(), n in 1u32..8, p in 0.0f64..1.0, q in 0.0f64..1.0) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let f = field(n, master, 1);
        let a = has_lr_crossing(&f.at_level(lo), n, n).unwrap();
        let b = has_lr_crossing(&f.at_level(hi), n, n).unwrap();
        prop_assert!(!a || b);
    }

    #[test]
    fn weights_are_reproducible_uniforms(master in any::<u64>(), replica in any::<u64>()) {
        let f = field(3, master, replica);
        let g = field(3, master, replica);
        for e in f.region().edges() {
            let w = f.weight(&e);
            prop_assert!((0.0..1.0).contains(&w));
            prop_assert_eq!(w.to_bits(), g.weight(&e).to_bits());
        }
    }

    #[test]
    fn induced_edges_are_monotone(mask in any::<u32>(), extra in any::<u32>()) {
        let vs: Vec<Vertex> = BoxSpec::new(2).unwrap().vertices().collect();
        let small: Vec<Vertex> = vs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, v)| *v).collect();
        let large: Vec<Vertex> =
            vs.iter().enumerate().filter(|(i, _)| (mask | extra) >> i & 1 == 1).map(|(_, v)| *v).collect();
        let a = induced_edges(&small);
        let b = induced_edges(&large);
        prop_assert!(a.iter().all(|e| b.contains(e)));
        prop_assert!(a.iter().all(|e| small.contains(&e.a()) && small.contains(&e.b())));
    }

    #[test]
    fn cluster_membership_matches_connectivity(master in any::<u64>(), p in 0.3f64..0.7) {
        let f = field(4, master, 2);
        let view = f.at_level(p);
        let cluster = cluster_of(&view, Vertex::ORIGIN).unwrap();
        for v in view.region().vertices() {
            let joined = connected(&view, &[Vertex::ORIGIN], &[v]).unwrap();
            prop_assert_eq!(joined, cluster.contains(v));
        }
        let induced = induced_edges(cluster.vertices());
        prop_assert!(cluster.edges().iter().all(|e| induced.contains(e) && view.is_open(e)));
    }

    #[test]
    fn disconnecting_edges_are_window_bridges(master in any::<u64>(), p in 0.4f64..0.65, inner in 1u32..3) {
        let horizon = BoxSpec::new(6).unwrap();
        let f = SeededField::new(horizon, SeedSpec::new(master, "properties"));
        let cluster = cluster_of(&f.at_level(p), Vertex::ORIGIN).unwrap();
        let window = Annulus::new(inner, inner + 2).unwrap();
        let all = bridges(&cluster);
        for e in disconnecting_edges(&cluster, Vertex::ORIGIN, &window, horizon).unwrap() {
            prop_assert!(all.contains(&e));
            prop_assert!(window.contains_edge(&e));
        }
    }

    #[test]
    fn invasion_grows_through_the_frontier(master in any::<u64>()) {
        let f = field(6, master, 3);
        let mut state = InvasionState::new(&f).unwrap();
        let mut seen = Vec::new();
        while !state.censored() && state.step_count() < 200 {
            let frontier = state.frontier_edges();
            let min = frontier.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
            let step = state.invade_step(&f).unwrap();
            prop_assert_eq!(step.weight, min);
            prop_assert!(!seen.contains(&step.edge));
            seen.push(step.edge);
        }
    }

    #[test]
    fn suffix_maxima_never_increase(master in any::<u64>(), burn_in in 0usize..50) {
        let run = run_invasion(&field(20, master, 4), StopRule::max_steps(200)).unwrap();
        let m = running_max_trace(&run.state, burn_in).unwrap();
        prop_assert!(m.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn annulus_counts_match_enumeration(inner in 1u32..6, width in 1u32..6) {
        let a = Annulus::new(inner, inner + width).unwrap();
        prop_assert_eq!(a.edges().count(), a.edge_count());
    }
}

#[test]
fn uniform_stream_passes_moments_and_ks() {
    let mut s = SeedSpec::new(11, "ks").key().stream();
    let mut xs: Vec<f64> = (0..20_000).map(|_| s.next_f64()).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    assert!((mean - 0.5).abs() < 4.0 * (1.0f64 / 12.0 / 20_000.0).sqrt());
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max);
    // 1% critical value
    assert!(d < 1.63 / n.sqrt(), "KS statistic {d}");
}

#[test]
fn sibling_streams_are_uncorrelated() {
    let a = SeedSpec::new(3, "pair").key();
    let b = SeedSpec::new(3, "pair").with_replica(1).key();
    let n = 20_000u64;
    let cov = (0..n).map(|i| (a.uniform(i) - 0.5) * (b.uniform(i) - 0.5)).sum::<f64>() / n as f64;
    let corr = cov * 12.0;
    assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "correlation {corr}");
}

#[test]
fn wilson_intervals_are_calibrated() {
    let mut covered = 0;
    for batch in 0..1_000u64 {
        let key = SeedSpec::new(5, "coverage").with_replica(batch).key();
        let hits = (0..200).filter(|&i| key.uniform(i) < 0.3).count() as u64;
        covered += u64::from(wilson_interval(hits, 200, 0.95).unwrap().contains(0.3));
    }
    assert!((930..=970).contains(&covered), "coverage {covered}/1000");
}

#[test]
fn coupled_crossing_estimates_are_monotone() {
    let seed = SeedSpec::new(9, "coupled");
    let mut last = 0.0;
    for p in [0.3, 0.4, 0.5, 0.6, 0.7] {
        let e = crossing_probability(&Sequential, p, 6, 1_000, seed, 0.95).unwrap();
        assert!(e.value >= last);
        last = e.value;
    }
}
