//! Edge-weight fields and the p-open configurations they induce.
//!
//! A weight field assigns every induced edge of a box an i.i.d. uniform
//! weight in `[0, 1)`. Thresholding at level `p` (edge open iff weight < p)
//! couples Bernoulli(p) percolation at every `p` on the same probability
//! space; invasion runs on the same weights.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::lattice::{BoxSpec, Edge, Window};
use crate::rng::{SeedSpec, StreamKey};

/// Read access to edge weights on a box.
pub trait EdgeWeights {
    fn region(&self) -> BoxSpec;

    /// Weight of an induced edge of [`region`](Self::region).
    fn weight(&self, e: &Edge) -> f64;

    fn seed(&self) -> Option<SeedSpec> {
        None
    }

    /// Lazy p-open view of this field.
    fn at_level(&self, level: f64) -> LevelView<'_, Self>
    where
        Self: Sized,
    {
        LevelView { field: self, level }
    }
}

/// Open/closed state of the induced edges of a box.
pub trait OpenEdges {
    fn region(&self) -> BoxSpec;
    fn is_open(&self, e: &Edge) -> bool;
}

/// Weights drawn on demand from a counter-based stream keyed by the edge.
///
/// The weight of an edge depends only on the stream key and the edge, never
/// on the region or on query order.
#[derive(Clone, Copy, Debug)]
pub struct SeededField {
    region: BoxSpec,
    seed: SeedSpec,
    key: StreamKey,
}

impl SeededField {
    pub fn new(region: BoxSpec, seed: SeedSpec) -> Self {
        SeededField { region, seed, key: seed.key() }
    }

    /// Field on a child stream of `seed` (e.g. a rejection attempt).
    pub fn with_key(region: BoxSpec, seed: SeedSpec, key: StreamKey) -> Self {
        SeededField { region, seed, key }
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    /// Copy all weights into a table.
    pub fn materialize(&self) -> TableField {
        TableField::from_fn(self.region, |e| self.weight(e))
    }
}

impl EdgeWeights for SeededField {
    #[inline]
    fn region(&self) -> BoxSpec {
        self.region
    }

    #[inline]
    fn weight(&self, e: &Edge) -> f64 {
        self.key.uniform(e.key())
    }

    fn seed(&self) -> Option<SeedSpec> {
        Some(self.seed)
    }
}

/// `sample_weights`: the seeded field of `region`.
pub fn sample_weights(region: BoxSpec, seed: SeedSpec) -> SeededField {
    SeededField::new(region, seed)
}

/// Explicit weight table, for hand-built fields and cached weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TableField {
    region: BoxSpec,
    weights: Vec<f64>,
}

impl TableField {
    pub fn from_fn(region: BoxSpec, mut f: impl FnMut(&Edge) -> f64) -> Self {
        let mut weights = vec![f64::NAN; region.edge_slots()];
        for e in region.edges() {
            weights[region.edge_index(&e)] = f(&e);
        }
        TableField { region, weights }
    }

    /// Every edge gets `fill`.
    pub fn constant(region: BoxSpec, fill: f64) -> Self {
        Self::from_fn(region, |_| fill)
    }

    pub fn set(&mut self, e: &Edge, w: f64) -> Result<(), Error> {
        if !self.region.contains_edge(e) {
            return Err(Error::EdgeOutsideRegion(*e));
        }
        if !(0.0..1.0).contains(&w) {
            return Err(Error::InvalidProbability(w));
        }
        let slot = self.region.edge_index(e);
        self.weights[slot] = w;
        Ok(())
    }
}

impl EdgeWeights for TableField {
    #[inline]
    fn region(&self) -> BoxSpec {
        self.region
    }

    #[inline]
    fn weight(&self, e: &Edge) -> f64 {
        self.weights[self.region.edge_index(e)]
    }
}

/// A seeded field conditioned on every edge of `window` having weight
/// below `cap`: those weights are rescaled to `cap · u`, which is exactly
/// the conditional law of a uniform weight given `weight < cap`.
#[derive(Clone, Copy, Debug)]
pub struct CappedField {
    base: SeededField,
    window: Window,
    cap: f64,
}

impl CappedField {
    pub fn new(base: SeededField, window: Window, cap: f64) -> Result<Self, Error> {
        if !(cap > 0.0 && cap <= 1.0) {
            return Err(Error::InvalidProbability(cap));
        }
        if window.outer_radius() > base.region.radius() {
            return Err(Error::InvalidParameter("capped window exceeds field region"));
        }
        Ok(CappedField { base, window, cap })
    }
}

impl EdgeWeights for CappedField {
    #[inline]
    fn region(&self) -> BoxSpec {
        self.base.region
    }

    #[inline]
    fn weight(&self, e: &Edge) -> f64 {
        let w = self.base.weight(e);
        if self.window.contains_edge(e) {
            let scaled = w * self.cap;
            if scaled < self.cap {
                scaled
            } else {
                self.cap.next_down()
            }
        } else {
            w
        }
    }

    fn seed(&self) -> Option<SeedSpec> {
        Some(self.base.seed)
    }
}

/// p-open edges of a field, evaluated lazily.
#[derive(Clone, Copy, Debug)]
pub struct LevelView<'a, W> {
    field: &'a W,
    level: f64,
}

impl<W: EdgeWeights> LevelView<'_, W> {
    pub fn level(&self) -> f64 {
        self.level
    }
}

impl<W: EdgeWeights> OpenEdges for LevelView<'_, W> {
    #[inline]
    fn region(&self) -> BoxSpec {
        self.field.region()
    }

    #[inline]
    fn is_open(&self, e: &Edge) -> bool {
        self.field.weight(e) < self.level
    }
}

/// Another configuration with every induced edge of `window` forced open.
#[derive(Clone, Copy, Debug)]
pub struct ForcedOpen<'a, C: ?Sized> {
    pub base: &'a C,
    pub window: Window,
}

impl<C: OpenEdges + ?Sized> OpenEdges for ForcedOpen<'_, C> {
    #[inline]
    fn region(&self) -> BoxSpec {
        self.base.region()
    }

    #[inline]
    fn is_open(&self, e: &Edge) -> bool {
        self.window.contains_edge(e) || self.base.is_open(e)
    }
}

/// A set of induced edges of a box, stored as a bitset over edge slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSet {
    region: BoxSpec,
    words: Vec<u64>,
    len: usize,
}

impl EdgeSet {
    pub fn new(region: BoxSpec) -> Self {
        EdgeSet { region, words: vec![0; region.edge_slots().div_ceil(64)], len: 0 }
    }

    pub fn from_edges<'e>(region: BoxSpec, edges: impl IntoIterator<Item = &'e Edge>) -> Result<Self, Error> {
        let mut set = EdgeSet::new(region);
        for e in edges {
            set.insert(e)?;
        }
        Ok(set)
    }

    pub fn full(region: BoxSpec) -> Self {
        let mut set = EdgeSet::new(region);
        for e in region.edges() {
            set.insert_unchecked(region.edge_index(&e));
        }
        set
    }

    pub fn region(&self) -> BoxSpec {
        self.region
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Returns `true` if the edge was not yet present.
    pub fn insert(&mut self, e: &Edge) -> Result<bool, Error> {
        if !self.region.contains_edge(e) {
            return Err(Error::EdgeOutsideRegion(*e));
        }
        Ok(self.insert_unchecked(self.region.edge_index(e)))
    }

    #[inline]
    fn insert_unchecked(&mut self, slot: usize) -> bool {
        let (w, bit) = (slot / 64, 1u64 << (slot % 64));
        let fresh = self.words[w] & bit == 0;
        self.words[w] |= bit;
        self.len += usize::from(fresh);
        fresh
    }

    #[inline]
    pub fn contains(&self, e: &Edge) -> bool {
        self.region.contains_edge(e) && self.contains_slot(self.region.edge_index(e))
    }

    #[inline]
    fn contains_slot(&self, slot: usize) -> bool {
        self.words[slot / 64] & (1u64 << (slot % 64)) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Edge> + '_ {
        self.words.iter().enumerate().flat_map(move |(wi, &word)| {
            let mut bits = word;
            core::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + tz)
            })
            .filter_map(move |slot| self.region.edge_at(slot))
        })
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        if self.region == other.region {
            return self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0);
        }
        self.iter().all(|e| other.contains(&e))
    }
}

/// Where a configuration came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    /// `{e : τ_e < level}` of a weight field.
    Threshold {
        seed: Option<SeedSpec>,
        level: f64,
    },
    /// Direct Bernoulli(p) sample, possibly with forced-open edges.
    Bernoulli {
        seed: SeedSpec,
        p: f64,
    },
    Explicit,
}

/// A materialised open/closed assignment on a box.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    open: EdgeSet,
    forced: EdgeSet,
    provenance: Provenance,
}

impl Configuration {
    pub fn from_open(open: EdgeSet) -> Self {
        let forced = EdgeSet::new(open.region());
        Configuration { open, forced, provenance: Provenance::Explicit }
    }

    pub fn from_edges<'e>(region: BoxSpec, edges: impl IntoIterator<Item = &'e Edge>) -> Result<Self, Error> {
        Ok(Self::from_open(EdgeSet::from_edges(region, edges)?))
    }

    pub fn open_edges(&self) -> &EdgeSet {
        &self.open
    }

    pub fn forced_open(&self) -> &EdgeSet {
        &self.forced
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn open_count(&self) -> usize {
        self.open.len()
    }
}

impl OpenEdges for Configuration {
    #[inline]
    fn region(&self) -> BoxSpec {
        self.open.region()
    }

    #[inline]
    fn is_open(&self, e: &Edge) -> bool {
        self.open.contains(e)
    }
}

/// `{e : τ_e < p}`.
pub fn threshold<W: EdgeWeights>(field: &W, p: f64) -> Result<Configuration, Error> {
    check_probability(p)?;
    let region = field.region();
    let mut open = EdgeSet::new(region);
    for slot in 0..region.edge_slots() {
        if let Some(e) = region.edge_at(slot) {
            if field.weight(&e) < p {
                open.insert_unchecked(slot);
            }
        }
    }
    Ok(Configuration {
        open,
        forced: EdgeSet::new(region),
        provenance: Provenance::Threshold { seed: field.seed(), level: p },
    })
}

/// Bernoulli(p) configuration with every edge of `forced_open` open.
pub fn bernoulli_config(
    region: BoxSpec,
    p: f64,
    seed: SeedSpec,
    forced_open: &EdgeSet,
) -> Result<Configuration, Error> {
    check_probability(p)?;
    let mut forced = EdgeSet::new(region);
    for e in forced_open.iter() {
        forced.insert(&e)?;
    }
    let field = SeededField::new(region, seed);
    let mut open = forced.clone();
    for slot in 0..region.edge_slots() {
        if let Some(e) = region.edge_at(slot) {
            if field.weight(&e) < p {
                open.insert_unchecked(slot);
            }
        }
    }
    Ok(Configuration { open, forced, provenance: Provenance::Bernoulli { seed, p } })
}

pub(crate) fn check_probability(p: f64) -> Result<(), Error> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}
