//! Invasion percolation from the origin.
//!
//! At every step the minimum-weight edge among all not-yet-invaded edges
//! with at least one invaded endpoint is added to the cluster. Edges whose
//! two endpoints are both already invaded stay eligible, so the invaded edge
//! set can contain cycles. Ties in weight are broken by canonical edge order.
//!
//! The simulation lives in a horizon box `B(M)`; once an invaded vertex
//! reaches `∂B(M)` the run is censored and stops.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::error::Error;
use crate::field::EdgeWeights;
use crate::lattice::{BoxSpec, Edge, Vertex, Window};

#[derive(Clone, Debug, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }

    #[inline]
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
}

/// One invaded edge of the trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Invaded {
    pub edge: Edge,
    pub weight: f64,
}

/// Growing invasion cluster.
#[derive(Clone, Debug)]
pub struct InvasionState {
    horizon: BoxSpec,
    vertices: Bits,
    edges: Bits,
    /// Queued edges, keyed by (weight bits, canonical order). Non-negative
    /// f64 bit patterns order like the values themselves.
    frontier: BinaryHeap<Reverse<(u64, Edge)>>,
    trace: Vec<Invaded>,
    vertex_count: usize,
    censored: bool,
}

impl InvasionState {
    /// `G_0`: the origin alone, its incident edges queued.
    pub fn new<W: EdgeWeights>(field: &W) -> Result<Self, Error> {
        let horizon = field.region();
        if horizon.radius() == 0 {
            return Err(Error::InvalidParameter("horizon must have radius >= 1"));
        }
        let mut state = InvasionState {
            horizon,
            vertices: Bits::new(horizon.vertex_count()),
            edges: Bits::new(horizon.edge_slots()),
            frontier: BinaryHeap::new(),
            trace: Vec::new(),
            vertex_count: 0,
            censored: false,
        };
        state.add_vertex(Vertex::ORIGIN, field);
        Ok(state)
    }

    fn add_vertex<W: EdgeWeights>(&mut self, v: Vertex, field: &W) {
        self.vertices.set(self.horizon.index(v));
        self.vertex_count += 1;
        if self.horizon.on_boundary(v) {
            self.censored = true;
        }
        for e in v.incident_edges() {
            if !self.horizon.contains_edge(&e) {
                continue;
            }
            // an edge whose other endpoint is invaded was queued from there
            if self.vertices.get(self.horizon.index(e.other(v))) {
                continue;
            }
            let w = field.weight(&e);
            debug_assert!((0.0..1.0).contains(&w));
            self.frontier.push(Reverse((w.to_bits(), e)));
        }
    }

    /// Invade the minimum-weight frontier edge.
    pub fn invade_step<W: EdgeWeights>(&mut self, field: &W) -> Result<Invaded, Error> {
        if self.censored {
            return Err(Error::Censored);
        }
        loop {
            let Reverse((bits, edge)) = self.frontier.pop().ok_or(Error::FrontierEmpty)?;
            let slot = self.horizon.edge_index(&edge);
            if self.edges.get(slot) {
                continue;
            }
            self.edges.set(slot);
            let step = Invaded { edge, weight: f64::from_bits(bits) };
            self.trace.push(step);
            let (a, b) = edge.endpoints();
            let a_in = self.vertices.get(self.horizon.index(a));
            let b_in = self.vertices.get(self.horizon.index(b));
            debug_assert!(a_in || b_in);
            if !a_in {
                self.add_vertex(a, field);
            } else if !b_in {
                self.add_vertex(b, field);
            }
            return Ok(step);
        }
    }

    pub fn horizon(&self) -> BoxSpec {
        self.horizon
    }

    pub fn step_count(&self) -> usize {
        self.trace.len()
    }

    pub fn trace(&self) -> &[Invaded] {
        &self.trace
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn censored(&self) -> bool {
        self.censored
    }

    pub fn is_invaded(&self, v: Vertex) -> bool {
        self.horizon.contains(v) && self.vertices.get(self.horizon.index(v))
    }

    pub fn is_edge_invaded(&self, e: &Edge) -> bool {
        self.horizon.contains_edge(e) && self.edges.get(self.horizon.edge_index(e))
    }

    /// Live frontier edges (at least one endpoint invaded, edge not invaded).
    pub fn frontier_edges(&self) -> Vec<(Edge, f64)> {
        let mut out: Vec<(Edge, f64)> = self
            .frontier
            .iter()
            .filter(|Reverse((_, e))| !self.is_edge_invaded(e))
            .map(|Reverse((w, e))| (*e, f64::from_bits(*w)))
            .collect();
        out.sort_by_key(|x| x.0);
        out
    }

    pub fn invaded_edges(&self) -> Vec<Edge> {
        self.trace.iter().map(|s| s.edge).collect()
    }
}

/// When to stop an invasion. At least one condition must be set; the run
/// stops as soon as any of them holds. Reaching the horizon boundary always
/// stops the run as well.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StopRule {
    pub max_steps: Option<usize>,
    /// Stop once an invaded vertex reaches `∂B(r)`.
    pub exit_radius: Option<u32>,
    /// Stop once every induced edge of the window is invaded.
    pub covered: Option<Window>,
}

impl StopRule {
    pub fn max_steps(k: usize) -> Self {
        StopRule { max_steps: Some(k), ..Default::default() }
    }

    pub fn exit_box(r: u32) -> Self {
        StopRule { exit_radius: Some(r), ..Default::default() }
    }

    pub fn covered(window: impl Into<Window>) -> Self {
        StopRule { covered: Some(window.into()), ..Default::default() }
    }

    pub fn or_max_steps(mut self, k: usize) -> Self {
        self.max_steps = Some(k);
        self
    }
}

/// Which condition ended a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxSteps,
    ExitBox,
    Covered,
    /// The horizon boundary was reached before any rule fired.
    Censored,
    FrontierEmpty,
}

#[derive(Clone, Debug)]
pub struct InvasionRun {
    pub state: InvasionState,
    pub reason: StopReason,
}

impl InvasionRun {
    pub fn censored(&self) -> bool {
        self.reason == StopReason::Censored
    }
}

/// Iterate [`InvasionState::invade_step`] until the rule fires.
pub fn run_invasion<W: EdgeWeights>(field: &W, rule: StopRule) -> Result<InvasionRun, Error> {
    if rule.max_steps.is_none() && rule.exit_radius.is_none() && rule.covered.is_none() {
        return Err(Error::NoStopRule);
    }
    let horizon = field.region();
    if let Some(w) = rule.covered {
        if w.outer_radius() > horizon.radius() {
            return Err(Error::InvalidParameter("covered window exceeds horizon"));
        }
    }
    if rule.exit_radius.is_some_and(|r| r == 0 || r > horizon.radius()) {
        return Err(Error::InvalidParameter("exit radius must lie in 1..=horizon"));
    }
    let mut state = InvasionState::new(field)?;
    let mut remaining = rule.covered.map(|w| w.edge_count());
    let done = |state: &InvasionState, remaining: Option<usize>, last: Option<Vertex>| {
        if remaining == Some(0) {
            return Some(StopReason::Covered);
        }
        if let (Some(r), Some(v)) = (rule.exit_radius, last) {
            if v.norm() >= r {
                return Some(StopReason::ExitBox);
            }
        }
        if rule.max_steps.is_some_and(|k| state.step_count() >= k) {
            return Some(StopReason::MaxSteps);
        }
        if state.censored() {
            return Some(StopReason::Censored);
        }
        None
    };
    let mut last = None;
    let reason = loop {
        if let Some(r) = done(&state, remaining, last) {
            break r;
        }
        let step = match state.invade_step(field) {
            Ok(s) => s,
            Err(Error::FrontierEmpty) => break StopReason::FrontierEmpty,
            Err(e) => return Err(e),
        };
        if let (Some(w), Some(left)) = (rule.covered, remaining.as_mut()) {
            if w.contains_edge(&step.edge) {
                *left -= 1;
            }
        }
        let (a, b) = step.edge.endpoints();
        last = Some(if a.norm() >= b.norm() { a } else { b });
    };
    Ok(InvasionRun { state, reason })
}

/// `M_k = max{τ_{e_j} : j ≥ k}` for `k = burn_in, …, steps − 1`.
pub fn running_max_trace(state: &InvasionState, burn_in: usize) -> Result<Vec<f64>, Error> {
    let steps = state.step_count();
    if burn_in >= steps {
        return Err(Error::BurnInTooLarge { burn_in, steps });
    }
    let tail = &state.trace[burn_in..];
    let mut out = vec![0.0; tail.len()];
    let mut running = f64::NEG_INFINITY;
    for (slot, step) in out.iter_mut().zip(tail).rev() {
        running = running.max(step.weight);
        *slot = running;
    }
    Ok(out)
}

/// Tri-state outcome of a coverage event on a finite run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coverage {
    Covered,
    NotCovered,
    /// Censored before coverage; carries no information.
    Indeterminate,
}

/// Whether every induced edge of `window` has been invaded.
pub fn annulus_coverage_event(state: &InvasionState, window: impl Into<Window>) -> Result<Coverage, Error> {
    let window = window.into();
    if window.outer_radius() > state.horizon.radius() {
        return Err(Error::InvalidParameter("window exceeds horizon"));
    }
    let all = window.edges().iter().all(|e| state.is_edge_invaded(e));
    Ok(match (all, state.censored()) {
        (true, _) => Coverage::Covered,
        (false, false) => Coverage::NotCovered,
        (false, true) => Coverage::Indeterminate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_weights, TableField};
    use crate::lattice::{Annulus, Vertex};
    use crate::rng::SeedSpec;

    fn b(n: u32) -> BoxSpec {
        BoxSpec::new(n).unwrap()
    }

    #[test]
    fn first_step_is_min_incident_edge() {
        let f = sample_weights(b(4), SeedSpec::new(1, "inv"));
        let mut s = InvasionState::new(&f).unwrap();
        let step = s.invade_step(&f).unwrap();
        let want =
            Vertex::ORIGIN.incident_edges().into_iter().min_by(|x, y| f.weight(x).total_cmp(&f.weight(y))).unwrap();
        assert_eq!(step.edge, want);
    }

    #[test]
    fn hand_trace() {
        // right 0.1, up 0.2; from (1,0): right 0.15; everything else 0.9
        let mut f = TableField::constant(b(3), 0.9);
        let o = Vertex::ORIGIN;
        f.set(&Edge::horizontal(o), 0.1).unwrap();
        f.set(&Edge::vertical(o), 0.2).unwrap();
        f.set(&Edge::horizontal(Vertex::new(1, 0)), 0.15).unwrap();
        f.set(&Edge::vertical(Vertex::new(1, 0)), 0.3).unwrap();
        let run = run_invasion(&f, StopRule::max_steps(3)).unwrap();
        let trace: Vec<_> = run.state.trace().iter().map(|s| (s.edge, s.weight)).collect();
        assert_eq!(
            trace,
            [(Edge::horizontal(o), 0.1), (Edge::horizontal(Vertex::new(1, 0)), 0.15), (Edge::vertical(o), 0.2),]
        );
        assert_eq!(run.reason, StopReason::MaxSteps);
        let censored = run_invasion(&TableField::from_fn(b(2), |e| f.weight(e)), StopRule::max_steps(3)).unwrap();
        // step 2 reaches (2,0) on the horizon boundary
        assert_eq!(censored.reason, StopReason::Censored);
        assert_eq!(censored.state.step_count(), 2);
    }

    #[test]
    fn ties_break_by_canonical_order() {
        let f = TableField::constant(b(3), 0.5);
        let run = run_invasion(&f, StopRule::max_steps(1)).unwrap();
        let smallest = Vertex::ORIGIN.incident_edges().into_iter().min().unwrap();
        assert_eq!(run.state.trace()[0].edge, smallest);
        assert_eq!(smallest, Edge::horizontal(Vertex::new(-1, 0)));
    }

    #[test]
    fn zero_steps_is_origin_only() {
        let f = sample_weights(b(3), SeedSpec::new(2, "inv"));
        let run = run_invasion(&f, StopRule::max_steps(0)).unwrap();
        assert_eq!(run.state.step_count(), 0);
        assert_eq!(run.state.vertex_count(), 1);
        assert!(run.state.is_invaded(Vertex::ORIGIN));
        assert_eq!(run_invasion(&f, StopRule::default()).unwrap_err(), Error::NoStopRule);
    }

    #[test]
    fn covers_cheap_ring() {
        let ann = Annulus::new(1, 2).unwrap();
        let f = TableField::from_fn(b(4), |e| {
            if ann.contains_edge(e) {
                0.05
            } else if e.has_endpoint(Vertex::ORIGIN) && e.a() == Vertex::ORIGIN {
                0.4
            } else {
                0.6 + 0.001 * (e.key() % 97) as f64
            }
        });
        let run = run_invasion(&f, StopRule::covered(ann)).unwrap();
        assert_eq!(run.reason, StopReason::Covered);
        assert_eq!(annulus_coverage_event(&run.state, ann).unwrap(), Coverage::Covered);
        for e in ann.edges() {
            assert!(run.state.is_edge_invaded(&e));
        }
    }

    #[test]
    fn coverage_tristate() {
        let ann = Annulus::new(1, 2).unwrap();
        let f = sample_weights(b(4), SeedSpec::new(3, "inv"));
        let short = run_invasion(&f, StopRule::max_steps(2)).unwrap();
        assert_eq!(annulus_coverage_event(&short.state, ann).unwrap(), Coverage::NotCovered);
        let long = run_invasion(&f, StopRule::max_steps(10_000)).unwrap();
        assert!(long.censored());
        let cov = annulus_coverage_event(&long.state, ann).unwrap();
        assert_ne!(cov, Coverage::NotCovered);
    }

    #[test]
    fn suffix_max() {
        let mut f = TableField::constant(b(6), 0.95);
        let path: Vec<Edge> = (0..4).map(|x| Edge::horizontal(Vertex::new(x, 0))).collect();
        for (e, w) in path.iter().zip([0.9, 0.3, 0.7, 0.2]) {
            f.set(e, w).unwrap();
        }
        let run = run_invasion(&f, StopRule::max_steps(4)).unwrap();
        // step 1 must take the 0.9 edge: every other origin edge is 0.95
        let m = running_max_trace(&run.state, 0).unwrap();
        assert_eq!(m, [0.9, 0.7, 0.7, 0.2]);
        assert!(running_max_trace(&run.state, 4).is_err());
    }

    #[test]
    fn step_after_censor_is_rejected() {
        let f = sample_weights(b(1), SeedSpec::new(4, "inv"));
        let mut s = InvasionState::new(&f).unwrap();
        s.invade_step(&f).unwrap();
        assert!(s.censored());
        assert_eq!(s.invade_step(&f), Err(Error::Censored));
    }
}
