//! Integer geometry of the square lattice: sites, nearest-neighbour bonds,
//! l∞ balls, their internal boundaries and annuli.
//!
//! Every finite region used by the simulator is a centred box `B(n)`.
//! Boxes double as flat index spaces: vertex `(x, y)` of `B(n)` lives at
//! `(y + n) * side + (x + n)` and the two bonds leaving it in the `+x` and
//! `+y` directions live at `2 * vertex_index` and `2 * vertex_index + 1`.

use alloc::vec::Vec;
use core::fmt;

use crate::error::Error;

/// Largest admissible coordinate magnitude. Keeps packed edge keys in 45 bits.
pub const MAX_RADIUS: u32 = 1 << 20;

const KEY_OFFSET: i64 = MAX_RADIUS as i64;

/// A site of Z².
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    pub x: i32,
    pub y: i32,
}

impl Vertex {
    pub const ORIGIN: Vertex = Vertex { x: 0, y: 0 };

    #[inline]
    pub const fn new(x: i32, y: i32) -> Self {
        Vertex { x, y }
    }

    /// l∞ norm.
    #[inline]
    pub fn norm(self) -> u32 {
        self.x.unsigned_abs().max(self.y.unsigned_abs())
    }

    #[inline]
    pub fn l1_distance(self, other: Vertex) -> u64 {
        (self.x as i64 - other.x as i64).unsigned_abs() + (self.y as i64 - other.y as i64).unsigned_abs()
    }

    /// The four nearest neighbours, in the order right, up, left, down.
    #[inline]
    pub fn neighbours(self) -> [Vertex; 4] {
        [
            Vertex::new(self.x + 1, self.y),
            Vertex::new(self.x, self.y + 1),
            Vertex::new(self.x - 1, self.y),
            Vertex::new(self.x, self.y - 1),
        ]
    }

    /// The four bonds incident to this site.
    #[inline]
    pub fn incident_edges(self) -> [Edge; 4] {
        [
            Edge::horizontal(self),
            Edge::vertical(self),
            Edge::horizontal(Vertex::new(self.x - 1, self.y)),
            Edge::vertical(Vertex::new(self.x, self.y - 1)),
        ]
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A nearest-neighbour bond stored with its lexicographically smaller
/// endpoint first. The derived ordering is the canonical edge order used
/// for tie-breaking throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    a: Vertex,
    b: Vertex,
}

impl Edge {
    pub fn new(u: Vertex, v: Vertex) -> Result<Self, Error> {
        if u.l1_distance(v) != 1 {
            return Err(Error::NotAdjacent(u, v));
        }
        Ok(if u < v { Edge { a: u, b: v } } else { Edge { a: v, b: u } })
    }

    /// The bond from `v` to `v + (1, 0)`.
    #[inline]
    pub const fn horizontal(v: Vertex) -> Self {
        Edge { a: v, b: Vertex::new(v.x + 1, v.y) }
    }

    /// The bond from `v` to `v + (0, 1)`.
    #[inline]
    pub const fn vertical(v: Vertex) -> Self {
        Edge { a: v, b: Vertex::new(v.x, v.y + 1) }
    }

    #[inline]
    pub fn a(&self) -> Vertex {
        self.a
    }

    #[inline]
    pub fn b(&self) -> Vertex {
        self.b
    }

    #[inline]
    pub fn endpoints(&self) -> (Vertex, Vertex) {
        (self.a, self.b)
    }

    #[inline]
    pub fn is_horizontal(&self) -> bool {
        self.a.y == self.b.y
    }

    #[inline]
    pub fn has_endpoint(&self, v: Vertex) -> bool {
        self.a == v || self.b == v
    }

    /// The endpoint that is not `v`. `v` must be an endpoint.
    #[inline]
    pub fn other(&self, v: Vertex) -> Vertex {
        debug_assert!(self.has_endpoint(v));
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }

    /// Packs the bond into a 45-bit integer; requires both coordinates of
    /// the lower endpoint to be within `MAX_RADIUS`.
    #[inline]
    pub fn key(&self) -> u64 {
        let x = (self.a.x as i64 + KEY_OFFSET) as u64;
        let y = (self.a.y as i64 + KEY_OFFSET) as u64;
        let dir = u64::from(!self.is_horizontal());
        x | (y << 22) | (dir << 44)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// The box `B(n) = [-n, n]²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BoxSpec {
    radius: u32,
}

impl BoxSpec {
    pub fn new(radius: u32) -> Result<Self, Error> {
        if radius > MAX_RADIUS {
            return Err(Error::RadiusTooLarge(radius));
        }
        Ok(BoxSpec { radius })
    }

    #[inline]
    pub fn radius(&self) -> u32 {
        self.radius
    }

    #[inline]
    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.side() * self.side()
    }

    /// Number of induced edges, `4n(2n + 1)`.
    #[inline]
    pub fn edge_count(&self) -> usize {
        2 * self.side() * (self.side() - 1)
    }

    /// Size of the flat edge index space (includes slots for bonds that
    /// would leave the box).
    #[inline]
    pub fn edge_slots(&self) -> usize {
        2 * self.vertex_count()
    }

    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        v.norm() <= self.radius
    }

    #[inline]
    pub fn contains_edge(&self, e: &Edge) -> bool {
        self.contains(e.a) && self.contains(e.b)
    }

    #[inline]
    pub fn on_boundary(&self, v: Vertex) -> bool {
        v.norm() == self.radius
    }

    /// Flat index of `v`; `v` must lie in the box.
    #[inline]
    pub fn index(&self, v: Vertex) -> usize {
        debug_assert!(self.contains(v), "{v} outside B({})", self.radius);
        let r = self.radius as i64;
        ((v.y as i64 + r) as usize) * self.side() + (v.x as i64 + r) as usize
    }

    #[inline]
    pub fn vertex_at(&self, index: usize) -> Vertex {
        let r = self.radius as i64;
        let side = self.side();
        Vertex::new(((index % side) as i64 - r) as i32, ((index / side) as i64 - r) as i32)
    }

    /// Flat slot of an induced edge.
    #[inline]
    pub fn edge_index(&self, e: &Edge) -> usize {
        debug_assert!(self.contains_edge(e), "{e} not induced by B({})", self.radius);
        2 * self.index(e.a) + usize::from(!e.is_horizontal())
    }

    /// Inverse of [`edge_index`](Self::edge_index); `None` for slots whose
    /// bond leaves the box.
    #[inline]
    pub fn edge_at(&self, slot: usize) -> Option<Edge> {
        let v = self.vertex_at(slot / 2);
        let e = if slot.is_multiple_of(2) { Edge::horizontal(v) } else { Edge::vertical(v) };
        self.contains(e.b).then_some(e)
    }

    pub fn vertices(self) -> impl Iterator<Item = Vertex> {
        (0..self.vertex_count()).map(move |i| self.vertex_at(i))
    }

    /// Induced edges in flat-slot order.
    pub fn edges(self) -> impl Iterator<Item = Edge> {
        (0..self.edge_slots()).filter_map(move |s| self.edge_at(s))
    }

    pub fn boundary(self) -> impl Iterator<Item = Vertex> {
        ring(self.radius)
    }
}

/// `Ann(m, n) = B(n) \ B(m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Annulus {
    inner: u32,
    outer: u32,
    edge_count: usize,
}

impl Annulus {
    pub fn new(inner: u32, outer: u32) -> Result<Self, Error> {
        if inner >= outer {
            return Err(Error::InvalidAnnulus { inner, outer });
        }
        BoxSpec::new(outer)?;
        // induced(B(n)) minus induced(B(m)) minus the 4(2m+1) bonds crossing ∂B(m)
        let n = outer as usize;
        let m = inner as usize;
        let edge_count = 4 * n * (2 * n + 1) - 4 * (m + 1) * (2 * m + 1);
        Ok(Annulus { inner, outer, edge_count })
    }

    /// `Ann(n, 2n)`.
    pub fn doubling(n: u32) -> Result<Self, Error> {
        Annulus::new(n, 2 * n)
    }

    #[inline]
    pub fn inner(&self) -> u32 {
        self.inner
    }

    #[inline]
    pub fn outer(&self) -> u32 {
        self.outer
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn outer_box(&self) -> BoxSpec {
        BoxSpec { radius: self.outer }
    }

    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        let r = v.norm();
        self.inner < r && r <= self.outer
    }

    #[inline]
    pub fn contains_edge(&self, e: &Edge) -> bool {
        self.contains(e.a) && self.contains(e.b)
    }

    pub fn vertices(self) -> impl Iterator<Item = Vertex> {
        (self.inner + 1..=self.outer).flat_map(ring)
    }

    pub fn edges(self) -> impl Iterator<Item = Edge> {
        let outer = self.outer_box();
        (0..outer.edge_slots()).filter_map(move |s| outer.edge_at(s)).filter(move |e| self.contains_edge(e))
    }
}

/// A region whose induced edge set is the target of a coverage event:
/// either an annulus `Ann(m, n)` or a full box `B(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Window {
    Annulus(Annulus),
    Box(BoxSpec),
}

impl Window {
    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        match self {
            Window::Annulus(a) => a.contains(v),
            Window::Box(b) => b.contains(v),
        }
    }

    #[inline]
    pub fn contains_edge(&self, e: &Edge) -> bool {
        self.contains(e.a) && self.contains(e.b)
    }

    pub fn edge_count(&self) -> usize {
        match self {
            Window::Annulus(a) => a.edge_count(),
            Window::Box(b) => b.edge_count(),
        }
    }

    pub fn outer_radius(&self) -> u32 {
        match self {
            Window::Annulus(a) => a.outer(),
            Window::Box(b) => b.radius(),
        }
    }

    pub fn edges(&self) -> Vec<Edge> {
        match self {
            Window::Annulus(a) => a.edges().collect(),
            Window::Box(b) => b.edges().collect(),
        }
    }
}

impl From<Annulus> for Window {
    fn from(a: Annulus) -> Self {
        Window::Annulus(a)
    }
}

impl From<BoxSpec> for Window {
    fn from(b: BoxSpec) -> Self {
        Window::Box(b)
    }
}

/// Sites with l∞ norm exactly `r`, walked counter-clockwise from `(r, -r)`.
fn ring(r: u32) -> impl Iterator<Item = Vertex> {
    let r = r as i32;
    let len = if r == 0 { 1 } else { 8 * r };
    (0..len).map(move |k| {
        if r == 0 {
            return Vertex::ORIGIN;
        }
        let side = 2 * r;
        let (leg, t) = (k / side, k % side);
        match leg {
            0 => Vertex::new(r, -r + t),
            1 => Vertex::new(r - t, r),
            2 => Vertex::new(-r, r - t),
            _ => Vertex::new(-r + t, -r),
        }
    })
}

/// All `(2n + 1)²` sites of `B(n)`.
pub fn box_vertices(spec: BoxSpec) -> Vec<Vertex> {
    spec.vertices().collect()
}

/// `∂B(n) = B(n) \ B(n - 1)`; `8n` sites. Undefined for `n = 0`.
pub fn internal_boundary(spec: BoxSpec) -> Result<Vec<Vertex>, Error> {
    if spec.radius == 0 {
        return Err(Error::EmptyBoundary);
    }
    Ok(ring(spec.radius).collect())
}

/// Bonds with both endpoints in `region`, sorted canonically, deduplicated.
pub fn induced_edges(region: &[Vertex]) -> Vec<Edge> {
    let mut sites: Vec<Vertex> = region.to_vec();
    sites.sort_unstable();
    sites.dedup();
    let mut out = Vec::new();
    for &v in &sites {
        for e in [Edge::horizontal(v), Edge::vertical(v)] {
            if sites.binary_search(&e.b).is_ok() {
                out.push(e);
            }
        }
    }
    out.sort_unstable();
    out
}
