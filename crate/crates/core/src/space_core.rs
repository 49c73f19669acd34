//! Finite topological spaces, continuous maps between them, subspaces and
//! submappings.
//!
//! Every finite space is Alexandrov: each point `x` has a smallest open
//! neighborhood `U_x`. The specialization preorder `z <= x` iff `z ∈ U_x`
//! determines the topology: open sets are the down-sets and closed sets are
//! the up-sets.

use std::collections::HashSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::set::{PointSet, MASK_BITS};

/// Default cap on the number of points of a space.
pub const DEFAULT_POINT_CAP: usize = 16;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FiniteSpace {
    n: usize,
    opens: Vec<PointSet>,
    nbhd: Vec<PointSet>,
    up: Vec<PointSet>,
}

impl std::fmt::Debug for FiniteSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiniteSpace")
            .field("n", &self.n)
            .field("opens", &self.opens)
            .finish()
    }
}

/// Validate an open-set family on `0..n` with the default point cap.
pub fn validate_topology(n: usize, opens: &[PointSet]) -> Result<FiniteSpace> {
    validate_topology_with_cap(n, opens, DEFAULT_POINT_CAP)
}

pub fn validate_topology_with_cap(n: usize, opens: &[PointSet], cap: usize) -> Result<FiniteSpace> {
    let cap = cap.min(MASK_BITS);
    if n > cap {
        return Err(Error::TooManyPoints { n, cap });
    }
    let full = PointSet::full(n);
    for &o in opens {
        if !o.is_subset(full) {
            return Err(Error::SetOutOfRange { set: o.0 as u64, n });
        }
    }
    let mut sorted: Vec<PointSet> = opens.to_vec();
    sorted.sort();
    sorted.dedup();

    let has = |s: PointSet, v: &[PointSet]| v.binary_search(&s).is_ok();
    if has(PointSet::EMPTY, &sorted) && has(full, &sorted) {
        let nbhd: Vec<PointSet> = (0..n)
            .map(|x| {
                sorted
                    .iter()
                    .filter(|o| o.contains(x))
                    .fold(full, |acc, &o| acc.inter(o))
            })
            .collect();
        let hull = |a: PointSet| a.iter().fold(PointSet::EMPTY, |acc, x| acc.union(nbhd[x]));
        let every_open_is_union = sorted.iter().all(|&o| hull(o) == o);
        let down_sets = if every_open_is_union {
            count_down_sets(n, &nbhd)
        } else {
            0
        };
        if every_open_is_union && down_sets == sorted.len() {
            return Ok(FiniteSpace::from_parts(n, sorted, nbhd));
        }
    }

    let set: HashSet<PointSet> = sorted.iter().copied().collect();
    for (i, &a) in sorted.iter().enumerate() {
        for &b in &sorted[i + 1..] {
            if !set.contains(&a.union(b)) {
                return Err(Error::NotClosedUnderUnion(a, b));
            }
        }
    }
    for (i, &a) in sorted.iter().enumerate() {
        for &b in &sorted[i + 1..] {
            if !set.contains(&a.inter(b)) {
                return Err(Error::NotClosedUnderIntersection(a, b));
            }
        }
    }
    Err(Error::MissingEmptyOrFull)
}

fn count_down_sets(n: usize, nbhd: &[PointSet]) -> usize {
    PointSet::full(n)
        .subsets()
        .filter(|a| a.iter().all(|x| nbhd[x].is_subset(*a)))
        .count()
}

impl FiniteSpace {
    fn from_parts(n: usize, opens: Vec<PointSet>, nbhd: Vec<PointSet>) -> FiniteSpace {
        let up = (0..n)
            .map(|x| PointSet::from_points((0..n).filter(|&z| nbhd[z].contains(x))))
            .collect();
        FiniteSpace { n, opens, nbhd, up }
    }

    /// Build a space from its minimal neighborhoods.
    ///
    /// `nbhd[x]` must contain `x` and be transitive (`z ∈ nbhd[x]` implies
    /// `nbhd[z] ⊆ nbhd[x]`).
    pub fn from_neighborhoods(nbhd: Vec<PointSet>) -> Result<FiniteSpace> {
        let n = nbhd.len();
        if n > MASK_BITS {
            return Err(Error::TooManyPoints { n, cap: MASK_BITS });
        }
        let full = PointSet::full(n);
        for (x, &u) in nbhd.iter().enumerate() {
            if !u.is_subset(full) {
                return Err(Error::SetOutOfRange { set: u.0 as u64, n });
            }
            if !u.contains(x) || u.iter().any(|z| !nbhd[z].is_subset(u)) {
                return Err(Error::Validation {
                    object: "preorder".into(),
                    reason: format!("neighborhood of {x} is not a down-set containing it"),
                });
            }
        }
        let opens: Vec<PointSet> = full
            .subsets()
            .filter(|a| a.iter().all(|x| nbhd[x].is_subset(*a)))
            .collect();
        Ok(FiniteSpace::from_parts(n, opens, nbhd))
    }

    /// The discrete space on `n` points.
    pub fn discrete(n: usize) -> FiniteSpace {
        FiniteSpace::from_neighborhoods((0..n).map(PointSet::singleton).collect())
            .expect("discrete space")
    }

    /// The indiscrete space on `n` points.
    pub fn indiscrete(n: usize) -> FiniteSpace {
        FiniteSpace::from_neighborhoods(vec![PointSet::full(n); n]).expect("indiscrete space")
    }

    /// The Sierpinski space: `{0}` is the only nontrivial open set.
    pub fn sierpinski() -> FiniteSpace {
        FiniteSpace::chain(2)
    }

    /// The chain `0 < 1 < ... < n-1`, with opens `{0..k}`.
    pub fn chain(n: usize) -> FiniteSpace {
        FiniteSpace::from_neighborhoods((0..n).map(|x| PointSet::full(x + 1)).collect())
            .expect("chain space")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> PointSet {
        PointSet::full(self.n)
    }

    /// Open sets in ascending bitmask order.
    pub fn opens(&self) -> &[PointSet] {
        &self.opens
    }

    /// Closed sets in ascending bitmask order.
    pub fn closeds(&self) -> Vec<PointSet> {
        let full = self.points();
        let mut c: Vec<PointSet> = self.opens.iter().map(|&o| full.minus(o)).collect();
        c.sort();
        c
    }

    pub fn check_set(&self, a: PointSet) -> Result<()> {
        if a.is_subset(self.points()) {
            Ok(())
        } else {
            Err(Error::SetOutOfRange { set: a.0 as u64, n: self.n })
        }
    }

    pub fn check_point(&self, x: usize) -> Result<()> {
        if x < self.n {
            Ok(())
        } else {
            Err(Error::PointOutOfRange { point: x, n: self.n })
        }
    }

    /// `z <= x` in the specialization preorder, i.e. `z ∈ U_x`.
    #[inline]
    pub fn leq(&self, z: usize, x: usize) -> bool {
        self.nbhd[x].contains(z)
    }

    /// The smallest open set containing `x`.
    #[inline]
    pub fn minimal_open_neighborhood(&self, x: usize) -> PointSet {
        self.nbhd[x]
    }

    /// `cl {x}`, the points above `x`.
    #[inline]
    pub fn closure_of_point(&self, x: usize) -> PointSet {
        self.up[x]
    }

    /// Open sets containing `x`, ascending.
    pub fn neighborhoods_of(&self, x: usize) -> impl Iterator<Item = PointSet> + '_ {
        let u = self.nbhd[x];
        self.opens.iter().copied().filter(move |o| u.is_subset(*o))
    }

    /// Smallest open superset of `a`.
    #[inline]
    pub fn hull(&self, a: PointSet) -> PointSet {
        a.iter().fold(PointSet::EMPTY, |acc, x| acc.union(self.nbhd[x]))
    }

    #[inline]
    pub fn closure(&self, a: PointSet) -> PointSet {
        a.iter().fold(PointSet::EMPTY, |acc, x| acc.union(self.up[x]))
    }

    #[inline]
    pub fn interior(&self, a: PointSet) -> PointSet {
        PointSet::from_points(a.iter().filter(|&x| self.nbhd[x].is_subset(a)))
    }

    #[inline]
    pub fn is_open(&self, a: PointSet) -> bool {
        a.is_subset(self.points()) && self.hull(a) == a
    }

    #[inline]
    pub fn is_closed(&self, a: PointSet) -> bool {
        a.is_subset(self.points()) && self.closure(a) == a
    }

    /// Closure inside the subspace `s`.
    #[inline]
    pub fn closure_in(&self, s: PointSet, a: PointSet) -> PointSet {
        self.closure(a.inter(s)).inter(s)
    }

    /// Interior inside the subspace `s`.
    #[inline]
    pub fn interior_in(&self, s: PointSet, a: PointSet) -> PointSet {
        let a = a.inter(s);
        PointSet::from_points(a.iter().filter(|&x| self.nbhd[x].inter(s).is_subset(a)))
    }

    #[inline]
    pub fn is_open_in(&self, s: PointSet, a: PointSet) -> bool {
        a.is_subset(s) && self.interior_in(s, a) == a
    }

    #[inline]
    pub fn is_closed_in(&self, s: PointSet, a: PointSet) -> bool {
        a.is_subset(s) && self.closure_in(s, a) == a
    }

    /// Open sets of the space contained in the open set `w`, ascending.
    /// These are exactly the open sets of the subspace `w`.
    pub fn opens_within(&self, w: PointSet) -> impl Iterator<Item = PointSet> + '_ {
        self.opens.iter().copied().filter(move |o| o.is_subset(w))
    }

    /// Connected components of the subspace `s`, ordered by least point.
    pub fn components_in(&self, s: PointSet) -> Vec<PointSet> {
        let mut rest = s;
        let mut out = Vec::new();
        while let Some(x) = rest.iter().next() {
            let mut comp = PointSet::singleton(x);
            loop {
                let grown = comp.iter().fold(comp, |acc, z| {
                    acc.union(self.nbhd[z].inter(s)).union(self.up[z].inter(s))
                });
                if grown == comp {
                    break;
                }
                comp = grown;
            }
            out.push(comp);
            rest = rest.minus(comp);
        }
        out
    }

    /// The subspace on `a`, re-indexed in ascending point order.
    pub fn subspace(&self, a: PointSet) -> Result<Subspace> {
        self.check_set(a)?;
        let back: Vec<usize> = a.iter().collect();
        let emb = Embedding { back, carrier: a };
        let nbhd = emb.back.iter().map(|&x| emb.lower(self.nbhd[x])).collect();
        let space = FiniteSpace::from_neighborhoods(nbhd)?;
        Ok(Subspace { space, embedding: emb })
    }

    /// The same topology with points renamed by `perm` (old `x` becomes
    /// `perm[x]`).
    pub fn relabel(&self, perm: &[usize]) -> FiniteSpace {
        let mut nbhd = vec![PointSet::EMPTY; self.n];
        for x in 0..self.n {
            nbhd[perm[x]] = PointSet::from_points(self.nbhd[x].iter().map(|z| perm[z]));
        }
        FiniteSpace::from_neighborhoods(nbhd).expect("relabeling preserves validity")
    }
}

impl Serialize for FiniteSpace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            n: usize,
            opens: &'a [PointSet],
        }
        Repr { n: self.n, opens: &self.opens }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteSpace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            n: usize,
            opens: Vec<PointSet>,
        }
        let r = Repr::deserialize(d)?;
        validate_topology_with_cap(r.n, &r.opens, MASK_BITS).map_err(serde::de::Error::custom)
    }
}

/// Inclusion of a subspace into its parent, as an index map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    /// `back[i]` is the parent point behind subspace point `i`.
    pub back: Vec<usize>,
    /// The image in the parent.
    pub carrier: PointSet,
}

impl Embedding {
    /// Subspace set to parent set.
    pub fn lift(&self, s: PointSet) -> PointSet {
        PointSet::from_points(s.iter().map(|i| self.back[i]))
    }

    /// Parent set (intersected with the carrier) to subspace set.
    pub fn lower(&self, s: PointSet) -> PointSet {
        PointSet::from_points(
            self.back
                .iter()
                .enumerate()
                .filter(|(_, &x)| s.contains(x))
                .map(|(i, _)| i),
        )
    }

    pub fn identity(n: usize) -> Embedding {
        Embedding { back: (0..n).collect(), carrier: PointSet::full(n) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    pub space: FiniteSpace,
    pub embedding: Embedding,
}

/// A continuous map `f: X -> Y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiberedMap {
    domain: FiniteSpace,
    codomain: FiniteSpace,
    table: Vec<usize>,
}

impl FiberedMap {
    pub fn new(domain: FiniteSpace, codomain: FiniteSpace, table: Vec<usize>) -> Result<FiberedMap> {
        if table.len() != domain.n() {
            return Err(Error::TableSize { expected: domain.n(), got: table.len() });
        }
        for &y in &table {
            codomain.check_point(y)?;
        }
        let f = FiberedMap { domain, codomain, table };
        for &o in f.codomain.opens() {
            if !f.domain.is_open(f.preimage(o)) {
                return Err(Error::NotContinuous { open: o });
            }
        }
        Ok(f)
    }

    /// The identity map of a space.
    pub fn identity(space: &FiniteSpace) -> FiberedMap {
        FiberedMap { domain: space.clone(), codomain: space.clone(), table: (0..space.n()).collect() }
    }

    /// The map from `space` to the one-point space.
    pub fn constant(space: &FiniteSpace) -> FiberedMap {
        FiberedMap {
            domain: space.clone(),
            codomain: FiniteSpace::discrete(1),
            table: vec![0; space.n()],
        }
    }

    pub fn domain(&self) -> &FiniteSpace {
        &self.domain
    }

    pub fn codomain(&self) -> &FiniteSpace {
        &self.codomain
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.table[x]
    }

    #[inline]
    pub fn preimage(&self, b: PointSet) -> PointSet {
        let mut m = 0u32;
        for (x, &y) in self.table.iter().enumerate() {
            if b.contains(y) {
                m |= 1 << x;
            }
        }
        PointSet(m)
    }

    pub fn image(&self, a: PointSet) -> PointSet {
        PointSet::from_points(a.iter().map(|x| self.table[x]))
    }

    /// Preimage of the minimal neighborhood of `y`.
    #[inline]
    pub fn tube(&self, y: usize) -> PointSet {
        self.preimage(self.codomain.minimal_open_neighborhood(y))
    }

    /// Total number of points in domain and codomain.
    pub fn size(&self) -> usize {
        self.domain.n() + self.codomain.n()
    }

    pub fn is_constant_map(&self) -> bool {
        self.codomain.n() == 1
    }
}

/// The restriction `f_O: f^{-1}O -> O` together with its embeddings.
#[derive(Debug, Clone)]
pub struct RestrictedMap {
    pub map: FiberedMap,
    pub domain: Embedding,
    pub codomain: Embedding,
}

pub fn restrict_map(f: &FiberedMap, o: PointSet) -> Result<RestrictedMap> {
    f.codomain.check_set(o)?;
    if !f.codomain.is_open(o) {
        return Err(Error::NotOpen(o));
    }
    let pre = f.preimage(o);
    let dsub = f.domain.subspace(pre)?;
    let csub = f.codomain.subspace(o)?;
    let table = dsub
        .embedding
        .back
        .iter()
        .map(|&x| csub.embedding.back.iter().position(|&y| y == f.table[x]).expect("image lies in O"))
        .collect();
    let map = FiberedMap::new(dsub.space, csub.space, table)?;
    Ok(RestrictedMap { map, domain: dsub.embedding, codomain: csub.embedding })
}

/// The restriction of `f` to a subset `X_0` of its domain, with the
/// subspace topology on `X_0` and the full codomain.
#[derive(Debug, Clone)]
pub struct Submapping {
    pub base: FiberedMap,
    pub carrier: PointSet,
    pub map: FiberedMap,
    pub embedding: Embedding,
}

pub fn submap(f: &FiberedMap, carrier: PointSet) -> Result<Submapping> {
    let sub = f.domain.subspace(carrier)?;
    let table = sub.embedding.back.iter().map(|&x| f.table[x]).collect();
    let map = FiberedMap::new(sub.space, f.codomain.clone(), table)?;
    Ok(Submapping { base: f.clone(), carrier, map, embedding: sub.embedding })
}

/// Result of the finite F_sigma test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FSigma {
    pub holds: bool,
    /// `cl {x}` for each `x` in the set, deduplicated, when `holds`.
    pub decomposition: Vec<PointSet>,
}

/// A finite union of closed sets is closed, so `t` is F_sigma exactly when
/// it contains the closure of each of its points.
pub fn is_f_sigma_subset(space: &FiniteSpace, t: PointSet) -> Result<FSigma> {
    space.check_set(t)?;
    Ok(f_sigma_in(space, space.points(), t))
}

/// F_sigma test for `t` inside the subspace `s`.
pub fn f_sigma_in(space: &FiniteSpace, s: PointSet, t: PointSet) -> FSigma {
    let t = t.inter(s);
    let holds = t.iter().all(|x| space.closure_of_point(x).inter(s).is_subset(t));
    let mut decomposition = Vec::new();
    if holds {
        for x in t.iter() {
            let c = space.closure_of_point(x).inter(s);
            if !decomposition.contains(&c) {
                decomposition.push(c);
            }
        }
    }
    FSigma { holds, decomposition }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FSigmaWitness {
    pub y: usize,
    #[serde(rename = "Oy")]
    pub oy: PointSet,
    pub decomposition: Vec<PointSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FSigmaSubmapping {
    pub holds: bool,
    pub witnesses: Vec<FSigmaWitness>,
    /// First `y` with no witness.
    pub failed_at: Option<usize>,
}

/// Whether the carrier is locally F_sigma over every point of the
/// codomain. The minimal neighborhood of `y` is tried for each `y`: if the
/// trace is F_sigma over a larger neighborhood it stays F_sigma over a
/// smaller one.
pub fn is_f_sigma_submapping(sub: &Submapping) -> FSigmaSubmapping {
    carrier_is_f_sigma(&sub.base, sub.carrier)
}

pub fn carrier_is_f_sigma(f: &FiberedMap, carrier: PointSet) -> FSigmaSubmapping {
    let mut witnesses = Vec::new();
    for y in 0..f.codomain.n() {
        let oy = f.codomain.minimal_open_neighborhood(y);
        let w = f.preimage(oy);
        let fs = f_sigma_in(&f.domain, w, carrier);
        if !fs.holds {
            return FSigmaSubmapping { holds: false, witnesses, failed_at: Some(y) };
        }
        witnesses.push(FSigmaWitness { y, oy, decomposition: fs.decomposition });
    }
    FSigmaSubmapping { holds: true, witnesses, failed_at: None }
}
