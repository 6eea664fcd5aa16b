//! Connectivity queries on open-edge configurations.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::field::OpenEdges;
use crate::lattice::{Annulus, BoxSpec, Edge, Vertex};

/// Disjoint-set forest with union by size and path halving.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    #[inline]
    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Returns `true` if `a` and `b` were in different sets.
    #[inline]
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }

    #[inline]
    pub fn same(&mut self, a: u32, b: u32) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn component_size(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }
}

/// Cluster labels of every vertex of a configuration's region.
#[derive(Clone, Debug)]
pub struct ClusterLabeling {
    region: BoxSpec,
    forest: UnionFind,
}

impl ClusterLabeling {
    pub fn new<C: OpenEdges + ?Sized>(config: &C) -> Self {
        let region = config.region();
        let mut forest = UnionFind::new(region.vertex_count());
        for e in region.edges() {
            if config.is_open(&e) {
                forest.union(region.index(e.a()) as u32, region.index(e.b()) as u32);
            }
        }
        ClusterLabeling { region, forest }
    }

    pub fn label(&mut self, v: Vertex) -> Result<u32, Error> {
        if !self.region.contains(v) {
            return Err(Error::VertexOutsideRegion(v));
        }
        Ok(self.forest.find(self.region.index(v) as u32))
    }

    pub fn connected(&mut self, u: Vertex, v: Vertex) -> Result<bool, Error> {
        Ok(self.label(u)? == self.label(v)?)
    }

    pub fn cluster_size(&mut self, v: Vertex) -> Result<u32, Error> {
        let l = self.label(v)?;
        Ok(self.forest.component_size(l))
    }
}

/// `S1 ↔ S2`: some open path joins a vertex of `s1` to a vertex of `s2`.
pub fn connected<C: OpenEdges + ?Sized>(config: &C, s1: &[Vertex], s2: &[Vertex]) -> Result<bool, Error> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::EmptyVertexSet);
    }
    let region = config.region();
    if let Some(v) = s1.iter().chain(s2).find(|v| !region.contains(**v)) {
        return Err(Error::VertexOutsideRegion(*v));
    }
    let mut labels = ClusterLabeling::new(config);
    let mut roots: Vec<u32> = s1.iter().map(|&v| labels.label(v)).collect::<Result<_, _>>()?;
    roots.sort_unstable();
    for &v in s2 {
        if roots.binary_search(&labels.label(v)?).is_ok() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Open left-right crossing of `[0, w] × [0, h]` using edges inside the
/// closed rectangle. The two walls are joined to virtual terminals.
pub fn has_lr_crossing<C: OpenEdges + ?Sized>(config: &C, w: u32, h: u32) -> Result<bool, Error> {
    let region = config.region();
    if w == 0 || h == 0 || w > region.radius() || h > region.radius() {
        return Err(Error::RectangleOutsideRegion { width: w, height: h });
    }
    let cols = w as usize + 1;
    let rows = h as usize + 1;
    let at = |x: usize, y: usize| (y * cols + x) as u32;
    let left = (cols * rows) as u32;
    let right = left + 1;
    let mut forest = UnionFind::new(cols * rows + 2);
    for y in 0..rows {
        forest.union(left, at(0, y));
        forest.union(right, at(cols - 1, y));
    }
    for y in 0..rows {
        for x in 0..cols {
            let v = Vertex::new(x as i32, y as i32);
            if x + 1 < cols && config.is_open(&Edge::horizontal(v)) {
                forest.union(at(x, y), at(x + 1, y));
            }
            if y + 1 < rows && config.is_open(&Edge::vertical(v)) {
                forest.union(at(x, y), at(x, y + 1));
            }
        }
    }
    Ok(forest.same(left, right))
}

/// Breadth-first search over open edges accepted by `usable`, from `starts`
/// until a vertex satisfying `target` is reached.
pub fn reaches<C, I, U, T>(config: &C, starts: I, usable: U, target: T) -> bool
where
    C: OpenEdges + ?Sized,
    I: IntoIterator<Item = Vertex>,
    U: Fn(&Edge) -> bool,
    T: Fn(Vertex) -> bool,
{
    let region = config.region();
    let mut seen = vec![false; region.vertex_count()];
    let mut queue = VecDeque::new();
    for v in starts {
        if target(v) {
            return true;
        }
        let i = region.index(v);
        if !seen[i] {
            seen[i] = true;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        for e in v.incident_edges() {
            if !region.contains_edge(&e) || !usable(&e) || !config.is_open(&e) {
                continue;
            }
            let w = e.other(v);
            let i = region.index(w);
            if seen[i] {
                continue;
            }
            if target(w) {
                return true;
            }
            seen[i] = true;
            queue.push_back(w);
        }
    }
    false
}

/// `0 ↔ ∂B(radius)` within the configuration.
pub fn origin_reaches<C: OpenEdges + ?Sized>(config: &C, radius: u32) -> Result<bool, Error> {
    if radius == 0 {
        return Err(Error::EmptyBoundary);
    }
    if radius > config.region().radius() {
        return Err(Error::RadiusTooLarge(radius));
    }
    Ok(reaches(config, [Vertex::ORIGIN], |_| true, |v| v.norm() >= radius))
}

/// `B(inner) ↔ ∂B(outer)`, using only edges with an endpoint outside
/// `B(inner)` (edges inside the inner box cannot help).
pub fn box_reaches<C: OpenEdges + ?Sized>(config: &C, inner: u32, outer: u32) -> Result<bool, Error> {
    if inner >= outer {
        return Err(Error::InvalidAnnulus { inner, outer });
    }
    if outer > config.region().radius() {
        return Err(Error::RadiusTooLarge(outer));
    }
    let start = BoxSpec::new(inner)?;
    let starts = if inner == 0 { vec![Vertex::ORIGIN] } else { start.boundary().collect() };
    Ok(reaches(config, starts, |e| e.a().norm() > inner || e.b().norm() > inner, |v| v.norm() >= outer))
}

/// A finite connected open subgraph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteCluster {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    contains_origin: bool,
    bbox: (Vertex, Vertex),
}

impl FiniteCluster {
    /// Cluster spanned by `edges` together with `root` (which must be an
    /// endpoint unless `edges` is empty). Fails when not connected.
    pub fn from_edges(root: Vertex, mut edges: Vec<Edge>) -> Result<Self, Error> {
        edges.sort_unstable();
        edges.dedup();
        let mut vertices: Vec<Vertex> = Vec::with_capacity(edges.len() + 1);
        vertices.push(root);
        for e in &edges {
            vertices.push(e.a());
            vertices.push(e.b());
        }
        vertices.sort_unstable();
        vertices.dedup();
        let mut forest = UnionFind::new(vertices.len());
        let idx = |v: Vertex| vertices.binary_search(&v).unwrap() as u32;
        for e in &edges {
            forest.union(idx(e.a()), idx(e.b()));
        }
        if forest.component_size(idx(root)) as usize != vertices.len() {
            return Err(Error::DisconnectedCluster);
        }
        Ok(Self::assemble(vertices, edges))
    }

    fn assemble(vertices: Vec<Vertex>, edges: Vec<Edge>) -> Self {
        let mut lo = vertices[0];
        let mut hi = vertices[0];
        for v in &vertices {
            lo = Vertex::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Vertex::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        let contains_origin = vertices.binary_search(&Vertex::ORIGIN).is_ok();
        FiniteCluster { vertices, edges, contains_origin, bbox: (lo, hi) }
    }

    /// Sorted vertex list.
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Sorted edge list.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains_origin(&self) -> bool {
        self.contains_origin
    }

    pub fn bounding_box(&self) -> (Vertex, Vertex) {
        self.bbox
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn contains_edge(&self, e: &Edge) -> bool {
        self.edges.binary_search(e).is_ok()
    }

    fn local(&self, v: Vertex) -> usize {
        self.vertices.binary_search(&v).expect("vertex in cluster")
    }
}

/// The open cluster of `v`, by breadth-first exploration.
pub fn cluster_of<C: OpenEdges + ?Sized>(config: &C, v: Vertex) -> Result<FiniteCluster, Error> {
    let region = config.region();
    if !region.contains(v) {
        return Err(Error::VertexOutsideRegion(v));
    }
    let mut seen = vec![false; region.vertex_count()];
    let mut vertices = vec![v];
    let mut edges = Vec::new();
    seen[region.index(v)] = true;
    let mut head = 0;
    while head < vertices.len() {
        let u = vertices[head];
        head += 1;
        for e in u.incident_edges() {
            if !region.contains_edge(&e) || !config.is_open(&e) {
                continue;
            }
            let w = e.other(u);
            // count each edge once, from its lower endpoint's visit order
            if !seen[region.index(w)] {
                seen[region.index(w)] = true;
                vertices.push(w);
            }
            if e.a() == u {
                edges.push(e);
            }
        }
    }
    vertices.sort_unstable();
    edges.sort_unstable();
    Ok(FiniteCluster::assemble(vertices, edges))
}

/// Depth-first bridge search rooted at `root`.
struct BridgeSearch {
    /// `(edge index, child local index)` for each bridge.
    bridges: Vec<(usize, usize)>,
    /// Number of horizon-boundary vertices in each DFS subtree.
    subtree_marks: Vec<u32>,
    total_marks: u32,
}

fn bridge_search(cluster: &FiniteCluster, root: Vertex, mark: impl Fn(Vertex) -> bool) -> BridgeSearch {
    const UNSEEN: u32 = u32::MAX;
    let n = cluster.vertices.len();
    // CSR adjacency
    let mut degree = vec![0u32; n + 1];
    let ends: Vec<(usize, usize)> =
        cluster.edges.iter().map(|e| (cluster.local(e.a()), cluster.local(e.b()))).collect();
    for &(a, b) in &ends {
        degree[a + 1] += 1;
        degree[b + 1] += 1;
    }
    for i in 0..n {
        degree[i + 1] += degree[i];
    }
    let offsets = degree;
    let mut fill = offsets.clone();
    let mut adj = vec![(0u32, 0u32); 2 * ends.len()];
    for (ei, &(a, b)) in ends.iter().enumerate() {
        adj[fill[a] as usize] = (b as u32, ei as u32);
        fill[a] += 1;
        adj[fill[b] as usize] = (a as u32, ei as u32);
        fill[b] += 1;
    }

    let mut tin = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut parent_edge = vec![u32::MAX; n];
    let mut marks: Vec<u32> = cluster.vertices.iter().map(|&v| u32::from(mark(v))).collect();
    let total_marks = marks.iter().sum();
    let mut bridges = Vec::new();
    let mut timer = 0u32;
    let start = cluster.local(root);
    let mut stack: Vec<(usize, u32)> = vec![(start, offsets[start])];
    tin[start] = timer;
    low[start] = timer;
    timer += 1;
    while let Some(&mut (v, ref mut pos)) = stack.last_mut() {
        if *pos < offsets[v + 1] {
            let (w, ei) = adj[*pos as usize];
            *pos += 1;
            if ei == parent_edge[v] {
                continue;
            }
            let w = w as usize;
            if tin[w] == UNSEEN {
                tin[w] = timer;
                low[w] = timer;
                timer += 1;
                parent_edge[w] = ei;
                stack.push((w, offsets[w]));
            } else {
                low[v] = low[v].min(tin[w]);
            }
        } else {
            stack.pop();
            if let Some(&(p, _)) = stack.last() {
                low[p] = low[p].min(low[v]);
                marks[p] += marks[v];
                if low[v] > tin[p] {
                    bridges.push((parent_edge[v] as usize, v));
                }
            }
        }
    }
    BridgeSearch { bridges, subtree_marks: marks, total_marks }
}

/// All bridges of the cluster graph, sorted.
pub fn bridges(cluster: &FiniteCluster) -> Vec<Edge> {
    let root = cluster.vertices[0];
    let mut out: Vec<Edge> =
        bridge_search(cluster, root, |_| false).bridges.iter().map(|&(ei, _)| cluster.edges[ei]).collect();
    out.sort_unstable();
    out
}

/// Disconnecting edges of `cluster` inside `window`: edges whose removal
/// cuts `origin` off from `∂horizon` (the finite-volume stand-in for
/// "leaves the origin in a finite component"). A cluster that does not
/// reach `∂horizon` has none.
pub fn disconnecting_edges(
    cluster: &FiniteCluster,
    origin: Vertex,
    window: &Annulus,
    horizon: BoxSpec,
) -> Result<Vec<Edge>, Error> {
    if !cluster.contains(origin) {
        return Err(Error::NotInCluster(origin));
    }
    let search = bridge_search(cluster, origin, |v| v.norm() >= horizon.radius());
    let mut out: Vec<Edge> = search
        .bridges
        .iter()
        .filter(|&&(ei, child)| {
            // origin is the DFS root, so its side is everything outside the child's subtree
            window.contains_edge(&cluster.edges[ei])
                && search.total_marks > 0
                && search.total_marks == search.subtree_marks[child]
        })
        .map(|&(ei, _)| cluster.edges[ei])
        .collect();
    out.sort_unstable();
    Ok(out)
}
