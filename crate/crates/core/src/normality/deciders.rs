//! Brute-force deciders for separation-type normality classes.
//!
//! Every search walks open sets in ascending bitmask order and tries the
//! minimal neighborhood of `y` before the larger ones, so certificates are
//! reproducible.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::normality::builder::{neighborhood_candidates, SearchMode};
use crate::oscillation::RationalFunction;
use crate::set::PointSet;
use crate::space_core::{carrier_is_f_sigma, submap, Embedding, FiberedMap, FiniteSpace};

/// Largest number of witnesses a decision keeps.
pub const WITNESS_LIMIT: usize = 64;

/// Local evidence at one point of the codomain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub y: usize,
    #[serde(rename = "Oy")]
    pub oy: PointSet,
    pub sets: BTreeMap<String, PointSet>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, RationalFunction>,
}

impl Witness {
    pub fn new(y: usize, oy: PointSet) -> Witness {
        Witness { y, oy, sets: BTreeMap::new(), functions: BTreeMap::new() }
    }

    pub fn set(mut self, name: &str, s: PointSet) -> Witness {
        self.sets.insert(name.to_string(), s);
        self
    }

    pub fn function(mut self, name: &str, phi: RationalFunction) -> Witness {
        self.functions.insert(name.to_string(), phi);
        self
    }
}

/// Why a class fails on a map. Sets are in the indexing of the map's
/// domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Counterexample {
    /// Closed sets of `f^{-1}O` with no separating neighborhoods over `y`.
    ClosedPair {
        #[serde(rename = "O")]
        o: PointSet,
        a: PointSet,
        b: PointSet,
        y: usize,
    },
    /// A closed set and an F_sigma set with no neighborhood family over `y`.
    SigmaPair {
        #[serde(rename = "O")]
        o: PointSet,
        closed: PointSet,
        f_sigma: PointSet,
        y: usize,
    },
    /// An open set whose trace over `y` is not cut out by a continuous
    /// family.
    OpenTrace { open: PointSet, y: usize },
    /// An open set that is not F_sigma over `y`.
    NotFSigma { carrier: PointSet, y: usize },
    /// A submapping on `carrier` fails the class.
    Carrier { carrier: PointSet, inner: Box<Counterexample> },
}

impl Counterexample {
    /// Rewrite subspace indices as indices of the parent domain.
    pub fn lift(&self, emb: &Embedding) -> Counterexample {
        match self {
            Counterexample::ClosedPair { o, a, b, y } => {
                Counterexample::ClosedPair { o: *o, a: emb.lift(*a), b: emb.lift(*b), y: *y }
            }
            Counterexample::SigmaPair { o, closed, f_sigma, y } => Counterexample::SigmaPair {
                o: *o,
                closed: emb.lift(*closed),
                f_sigma: emb.lift(*f_sigma),
                y: *y,
            },
            Counterexample::OpenTrace { open, y } => Counterexample::OpenTrace { open: emb.lift(*open), y: *y },
            Counterexample::NotFSigma { carrier, y } => Counterexample::NotFSigma { carrier: emb.lift(*carrier), y: *y },
            Counterexample::Carrier { carrier, inner } => {
                Counterexample::Carrier { carrier: emb.lift(*carrier), inner: Box::new(inner.lift(emb)) }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub holds: bool,
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

impl Decision {
    pub fn yes(witnesses: Vec<Witness>) -> Decision {
        Decision { holds: true, witnesses, counterexample: None }
    }

    pub fn no(c: Counterexample) -> Decision {
        Decision { holds: false, witnesses: Vec::new(), counterexample: Some(c) }
    }
}

fn push_witness(ws: &mut Vec<Witness>, w: impl FnOnce() -> Witness) {
    if ws.len() < WITNESS_LIMIT {
        ws.push(w());
    }
}

/// Disjoint open sets `U ⊇ A ∩ W`, `V ⊇ B ∩ W` of the subspace
/// `W = f^{-1} Oy`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeparationCertificate {
    pub y: usize,
    #[serde(rename = "Oy")]
    pub oy: PointSet,
    #[serde(rename = "U")]
    pub u: PointSet,
    #[serde(rename = "V")]
    pub v: PointSet,
    pub a_trace: PointSet,
    pub b_trace: PointSet,
}

impl SeparationCertificate {
    pub fn witness(&self) -> Witness {
        Witness::new(self.y, self.oy)
            .set("A", self.a_trace)
            .set("B", self.b_trace)
            .set("U", self.u)
            .set("V", self.v)
    }
}

/// Independent check of a separation certificate for `A`, `B`.
pub fn validate_separation_certificate(f: &FiberedMap, a: PointSet, b: PointSet, c: &SeparationCertificate) -> bool {
    let ys = f.codomain();
    let xs = f.domain();
    if c.y >= ys.n() || !ys.is_open(c.oy) || !c.oy.contains(c.y) {
        return false;
    }
    let w = f.preimage(c.oy);
    c.a_trace == a.inter(w)
        && c.b_trace == b.inter(w)
        && xs.is_open_in(w, c.u)
        && xs.is_open_in(w, c.v)
        && c.u.is_disjoint(c.v)
        && c.a_trace.is_subset(c.u)
        && c.b_trace.is_subset(c.v)
}

/// Exhaustive search for disjoint open neighborhoods inside `w`.
pub fn disjoint_open_pair(space: &FiniteSpace, w: PointSet, a: PointSet, b: PointSet) -> Option<(PointSet, PointSet)> {
    let opens: Vec<PointSet> = space.opens_within(w).collect();
    for &u in opens.iter().filter(|u| a.is_subset(**u)) {
        if let Some(&v) = opens.iter().find(|v| b.is_subset(**v) && u.is_disjoint(**v)) {
            return Some((u, v));
        }
    }
    None
}

/// Separate `A` and `B` over `y` with a neighborhood inside `o`.
pub fn separate_within(f: &FiberedMap, o: PointSet, a: PointSet, b: PointSet, y: usize) -> Option<SeparationCertificate> {
    for oy in neighborhood_candidates(f.codomain(), o, y, SearchMode::Minimal) {
        let w = f.preimage(oy);
        let (aw, bw) = (a.inter(w), b.inter(w));
        if let Some((u, v)) = disjoint_open_pair(f.domain(), w, aw, bw) {
            return Some(SeparationCertificate { y, oy, u, v, a_trace: aw, b_trace: bw });
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FSeparation {
    pub holds: bool,
    pub certificates: Vec<SeparationCertificate>,
    pub failed_at: Option<usize>,
}

/// Whether `A` and `B` are f-separated by neighborhoods.
pub fn are_f_separated(f: &FiberedMap, a: PointSet, b: PointSet) -> FSeparation {
    let mut certificates = Vec::new();
    for y in 0..f.codomain().n() {
        match separate_within(f, f.codomain().points(), a, b, y) {
            Some(c) => certificates.push(c),
            None => return FSeparation { holds: false, certificates, failed_at: Some(y) },
        }
    }
    FSeparation { holds: true, certificates, failed_at: None }
}

/// Closed subsets of the subspace `w`, ascending.
pub fn closed_subsets(space: &FiniteSpace, w: PointSet) -> Vec<PointSet> {
    w.subsets().filter(|&s| space.is_closed_in(w, s)).collect()
}

/// Prenormality of the restriction `f^{-1}O -> O`.
pub fn prenormal_within(f: &FiberedMap, o: PointSet) -> Decision {
    let xs = f.domain();
    let wo = f.preimage(o);
    let closeds = closed_subsets(xs, wo);
    let mut witnesses = Vec::new();
    for (i, &a) in closeds.iter().enumerate() {
        if a.is_empty() {
            continue;
        }
        for &b in &closeds[i + 1..] {
            if !a.is_disjoint(b) {
                continue;
            }
            for y in o.iter() {
                match separate_within(f, o, a, b, y) {
                    Some(c) => push_witness(&mut witnesses, || c.witness()),
                    None => return Decision::no(Counterexample::ClosedPair { o, a, b, y }),
                }
            }
        }
    }
    Decision::yes(witnesses)
}

pub fn is_prenormal(f: &FiberedMap) -> Decision {
    prenormal_within(f, f.codomain().points())
}

/// Prenormality of every restriction to an open set of the codomain.
pub fn is_normal(f: &FiberedMap) -> Decision {
    let mut witnesses = Vec::new();
    for &o in f.codomain().opens() {
        if o.is_empty() {
            continue;
        }
        let d = prenormal_within(f, o);
        if !d.holds {
            return d;
        }
        for w in d.witnesses {
            push_witness(&mut witnesses, || w);
        }
    }
    Decision::yes(witnesses)
}

/// `cl {x}` inside `w` for each `x ∈ t`, deduplicated.
pub fn canonical_decomposition(space: &FiniteSpace, w: PointSet, t: PointSet) -> Vec<PointSet> {
    let mut out: Vec<PointSet> = Vec::new();
    for x in t.iter() {
        let c = space.closure_of_point(x).inter(w);
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// Neighborhood `Oy` and open sets `O_l ⊇ T_l ∩ f^{-1}Oy` of `f^{-1}Oy`
/// whose closures miss `F`.
pub fn sigma_separate_within(
    f: &FiberedMap,
    o: PointSet,
    closed: PointSet,
    pieces: &[PointSet],
    y: usize,
) -> Option<(PointSet, Vec<PointSet>)> {
    let xs = f.domain();
    for oy in neighborhood_candidates(f.codomain(), o, y, SearchMode::Minimal) {
        let w = f.preimage(oy);
        let opens: Vec<PointSet> = xs.opens_within(w).collect();
        let found: Option<Vec<PointSet>> = pieces
            .iter()
            .map(|&t| {
                let tw = t.inter(w);
                opens
                    .iter()
                    .copied()
                    .find(|&v| tw.is_subset(v) && xs.closure_in(w, v).is_disjoint(closed))
            })
            .collect();
        if let Some(vs) = found {
            return Some((oy, vs));
        }
    }
    None
}

/// σ-prenormality of the restriction `f^{-1}O -> O`. F_sigma sets of a
/// finite space are its closed sets, each split into point closures.
pub fn sigma_prenormal_within(f: &FiberedMap, o: PointSet) -> Decision {
    let xs = f.domain();
    let wo = f.preimage(o);
    let closeds = closed_subsets(xs, wo);
    let mut witnesses = Vec::new();
    for &c in closeds.iter().filter(|c| !c.is_empty()) {
        for &t in closeds.iter().filter(|t| !t.is_empty() && t.is_disjoint(c)) {
            let pieces = canonical_decomposition(xs, wo, t);
            for y in o.iter() {
                match sigma_separate_within(f, o, c, &pieces, y) {
                    Some((oy, vs)) => push_witness(&mut witnesses, || {
                        let mut w = Witness::new(y, oy).set("F", c).set("T", t);
                        for (l, v) in vs.iter().enumerate() {
                            w = w.set(&format!("V{l}"), *v);
                        }
                        w
                    }),
                    None => return Decision::no(Counterexample::SigmaPair { o, closed: c, f_sigma: t, y }),
                }
            }
        }
    }
    Decision::yes(witnesses)
}

pub fn is_sigma_prenormal(f: &FiberedMap) -> Decision {
    sigma_prenormal_within(f, f.codomain().points())
}

pub fn is_sigma_normal(f: &FiberedMap) -> Decision {
    let mut witnesses = Vec::new();
    for &o in f.codomain().opens() {
        if o.is_empty() {
            continue;
        }
        let d = sigma_prenormal_within(f, o);
        if !d.holds {
            return d;
        }
        for w in d.witnesses {
            push_witness(&mut witnesses, || w);
        }
    }
    Decision::yes(witnesses)
}

/// Normality of every submapping.
pub fn is_hereditarily_normal(f: &FiberedMap) -> Decision {
    for carrier in f.domain().points().subsets() {
        let sub = submap(f, carrier).expect("submappings of a continuous map are continuous");
        let d = is_normal(&sub.map);
        if let Some(c) = d.counterexample {
            return Decision::no(Counterexample::Carrier { carrier, inner: Box::new(c.lift(&sub.embedding)) });
        }
    }
    Decision::yes(Vec::new())
}

/// First open set of the domain that is not an F_sigma submapping.
pub fn open_submappings_f_sigma(f: &FiberedMap) -> Decision {
    let mut witnesses = Vec::new();
    for &u in f.domain().opens() {
        let r = carrier_is_f_sigma(f, u);
        if let Some(y) = r.failed_at {
            return Decision::no(Counterexample::NotFSigma { carrier: u, y });
        }
        for w in r.witnesses {
            push_witness(&mut witnesses, || {
                let mut out = Witness::new(w.y, w.oy).set("U", u);
                for (l, t) in w.decomposition.iter().enumerate() {
                    out = out.set(&format!("T{l}"), *t);
                }
                out
            });
        }
    }
    Decision::yes(witnesses)
}

/// Normal, and every open submapping is an F_sigma submapping.
pub fn is_co_perfectly_normal(f: &FiberedMap) -> Decision {
    let d = is_normal(f);
    if !d.holds {
        return d;
    }
    open_submappings_f_sigma(f)
}

/// σ-normal, and every open submapping is an F_sigma submapping.
pub fn is_co_sigma_perfectly_normal(f: &FiberedMap) -> Decision {
    let d = is_sigma_normal(f);
    if !d.holds {
        return d;
    }
    open_submappings_f_sigma(f)
}
