//! Slow reference implementations used to check the fast kernels.
//!
//! Nothing here shares code with the kernels it checks beyond the lattice
//! types: invasion is a per-step scan of every edge, disconnection is
//! recomputed by deleting edges, probabilities come from enumerating every
//! configuration.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use percolab_core::lattice::{Edge, Vertex};

fn square_edges(radius: i32) -> Vec<Edge> {
    let mut out = Vec::new();
    for x in -radius..=radius {
        for y in -radius..=radius {
            let v = Vertex::new(x, y);
            if x < radius {
                out.push(Edge::horizontal(v));
            }
            if y < radius {
                out.push(Edge::vertical(v));
            }
        }
    }
    out
}

/// Invasion by exhaustive scan: at each step look at every edge of `B(radius)`
/// with an invaded endpoint that is not itself invaded and take the lightest,
/// ties to the smaller edge. Stops after `steps` steps or once an invaded
/// vertex lies on `∂B(radius)`.
pub fn scan_invasion(weight: impl Fn(&Edge) -> f64, radius: u32, steps: usize) -> Vec<(Edge, f64)> {
    let r = radius as i32;
    let edges = square_edges(r);
    let mut vertices: HashSet<Vertex> = HashSet::from([Vertex::ORIGIN]);
    let mut invaded: HashSet<Edge> = HashSet::new();
    let mut trace = Vec::new();
    while trace.len() < steps && vertices.iter().all(|v| v.norm() < radius) {
        let mut best: Option<(f64, Edge)> = None;
        for e in &edges {
            if invaded.contains(e) || !(vertices.contains(&e.a()) || vertices.contains(&e.b())) {
                continue;
            }
            let w = weight(e);
            best = match best {
                Some((bw, be)) if (bw, be) <= (w, *e) => Some((bw, be)),
                _ => Some((w, *e)),
            };
        }
        let Some((w, e)) = best else { break };
        invaded.insert(e);
        vertices.insert(e.a());
        vertices.insert(e.b());
        trace.push((e, w));
    }
    trace
}

fn component(edges: &[Edge], start: Vertex, skip: Option<&Edge>) -> HashSet<Vertex> {
    let mut adj: HashMap<Vertex, Vec<Vertex>> = HashMap::new();
    for e in edges.iter().filter(|e| Some(*e) != skip) {
        adj.entry(e.a()).or_default().push(e.b());
        adj.entry(e.b()).or_default().push(e.a());
    }
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in adj.get(&v).into_iter().flatten() {
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Edges inside the annulus `inner < |v| ≤ outer` whose deletion cuts
/// `origin` off from every vertex of norm `≥ horizon`.
pub fn disconnecting_by_deletion(edges: &[Edge], origin: Vertex, inner: u32, outer: u32, horizon: u32) -> Vec<Edge> {
    let in_window = |v: Vertex| inner < v.norm() && v.norm() <= outer;
    let reaches = |set: &HashSet<Vertex>| set.iter().any(|v| v.norm() >= horizon);
    if !reaches(&component(edges, origin, None)) {
        return Vec::new();
    }
    let unique: BTreeSet<Edge> = edges.iter().copied().collect();
    unique
        .into_iter()
        .filter(|e| in_window(e.a()) && in_window(e.b()))
        .filter(|e| !reaches(&component(edges, origin, Some(e))))
        .collect()
}

/// Exact probability at `p = 1/2` of a left-right open crossing of
/// `[0, w] × [0, h]`, by enumerating all `2^{edges}` configurations.
pub fn enumerate_crossing(w: i32, h: i32) -> f64 {
    let mut edges = Vec::new();
    for x in 0..=w {
        for y in 0..=h {
            let v = Vertex::new(x, y);
            if x < w {
                edges.push(Edge::horizontal(v));
            }
            if y < h {
                edges.push(Edge::vertical(v));
            }
        }
    }
    assert!(edges.len() < 26, "enumeration too large");
    let mut hits = 0u64;
    for mask in 0u64..1 << edges.len() {
        let open: Vec<Edge> = edges.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| *e).collect();
        let crosses = (0..=h).any(|y| component(&open, Vertex::new(0, y), None).iter().any(|v| v.x == w));
        hits += u64::from(crosses);
    }
    hits as f64 / (1u64 << edges.len()) as f64
}

/// `(ℙ[0 ↔ ∂B(1)], ℙ[cylinder open | 0 ↔ ∂B(1)])` at `p = 1/2`, enumerating
/// the `2^{12}` configurations of `B(1)`.
pub fn enumerate_conditioned_b1(cylinder: &[Edge]) -> (f64, f64) {
    let edges = square_edges(1);
    assert_eq!(edges.len(), 12);
    let (mut arm, mut both) = (0u64, 0u64);
    for mask in 0u32..1 << 12 {
        let open: Vec<Edge> = edges.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| *e).collect();
        if component(&open, Vertex::ORIGIN, None).iter().any(|v| v.norm() >= 1) {
            arm += 1;
            if cylinder.iter().all(|c| open.contains(c)) {
                both += 1;
            }
        }
    }
    (arm as f64 / 4096.0, both as f64 / arm as f64)
}

/// Closed-form Wilson score interval.
pub fn wilson(successes: f64, trials: f64, z: f64) -> (f64, f64) {
    let p = successes / trials;
    let denom = 1.0 + z * z / trials;
    let centre = p + z * z / (2.0 * trials);
    let spread = z * (p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)).sqrt();
    ((centre - spread) / denom, (centre + spread) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_anchors() {
        assert_eq!(enumerate_crossing(1, 1), 0.75);
        assert_eq!(enumerate_crossing(2, 1), 0.5);
    }

    #[test]
    fn first_shell() {
        let (arm, _) = enumerate_conditioned_b1(&[]);
        assert_eq!(arm, 15.0 / 16.0);
    }

    #[test]
    fn deletion_on_a_path() {
        let path: Vec<Edge> = (1..6).map(|x| Edge::horizontal(Vertex::new(x, 0))).collect();
        let got = disconnecting_by_deletion(&path, Vertex::new(1, 0), 0, 6, 6);
        assert_eq!(got, path);
    }

    #[test]
    fn scan_first_step() {
        let w = |e: &Edge| if *e == Edge::vertical(Vertex::new(0, -1)) { 0.01 } else { 0.5 };
        let t = scan_invasion(w, 3, 1);
        assert_eq!(t, [(Edge::vertical(Vertex::new(0, -1)), 0.01)]);
    }
}
