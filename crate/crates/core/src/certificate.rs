//! JSON certificates for class decisions, re-verified before emission by
//! checks written separately from the deciders.

use serde::Serialize;

use crate::normality::deciders::{
    is_co_perfectly_normal, is_co_sigma_perfectly_normal, is_hereditarily_normal, is_normal, is_prenormal,
    is_sigma_normal, is_sigma_prenormal, Counterexample, Decision, Witness,
};
use crate::normality::perfect::{is_perfectly_normal_with, verify_perfect_family};
use crate::oscillation::RationalFunction;
use crate::set::PointSet;
use crate::space_core::{submap, FiberedMap, FiniteSpace};
use crate::urysohn_tietze::SeparatorCache;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Class {
    Prenormal,
    Normal,
    SigmaPrenormal,
    SigmaNormal,
    PerfectlyNormal,
    CoPerfect,
    CoSigmaPerfect,
    HereditarilyNormal,
}

impl Class {
    pub const ALL: [Class; 8] = [
        Class::Prenormal,
        Class::Normal,
        Class::SigmaPrenormal,
        Class::SigmaNormal,
        Class::PerfectlyNormal,
        Class::CoPerfect,
        Class::CoSigmaPerfect,
        Class::HereditarilyNormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Class::Prenormal => "prenormal",
            Class::Normal => "normal",
            Class::SigmaPrenormal => "sigma-prenormal",
            Class::SigmaNormal => "sigma-normal",
            Class::PerfectlyNormal => "perfectly-normal",
            Class::CoPerfect => "co-perfect",
            Class::CoSigmaPerfect => "co-sigma-perfect",
            Class::HereditarilyNormal => "hereditarily-normal",
        }
    }

    pub fn parse(s: &str) -> Option<Class> {
        Class::ALL.into_iter().find(|c| c.name() == s)
    }
}

pub fn decide(f: &FiberedMap, class: Class, depth: usize) -> Decision {
    match class {
        Class::Prenormal => is_prenormal(f),
        Class::Normal => is_normal(f),
        Class::SigmaPrenormal => is_sigma_prenormal(f),
        Class::SigmaNormal => is_sigma_normal(f),
        Class::PerfectlyNormal => is_perfectly_normal_with(f, depth, &mut SeparatorCache::new()),
        Class::CoPerfect => is_co_perfectly_normal(f),
        Class::CoSigmaPerfect => is_co_sigma_perfectly_normal(f),
        Class::HereditarilyNormal => is_hereditarily_normal(f),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub class: String,
    pub holds: bool,
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    pub verified: bool,
}

/// Decide, then re-check every emitted witness and the counterexample.
pub fn certify(f: &FiberedMap, class: Class, depth: usize) -> Certificate {
    let d = decide(f, class, depth);
    let verified = d.witnesses.iter().all(|w| verify_witness(f, w))
        && d.counterexample.as_ref().is_none_or(|c| verify_counterexample(f, c));
    Certificate {
        class: class.name().to_string(),
        holds: d.holds,
        witnesses: d.witnesses,
        counterexample: d.counterexample,
        verified,
    }
}

fn preimage_of_nbhd(f: &FiberedMap, y: usize, oy: PointSet) -> Option<PointSet> {
    let ys = f.codomain();
    (y < ys.n() && ys.is_open(oy) && oy.contains(y)).then(|| f.preimage(oy))
}

fn indexed<'a, T>(map: &'a std::collections::BTreeMap<String, T>, prefix: &str) -> Vec<&'a T> {
    let mut items: Vec<(usize, &T)> = map
        .iter()
        .filter_map(|(k, v)| k.strip_prefix(prefix)?.parse::<usize>().ok().map(|i| (i, v)))
        .collect();
    items.sort_by_key(|(i, _)| *i);
    items.into_iter().map(|(_, v)| v).collect()
}

/// Check a witness by its shape: separating pair, separating family,
/// F_sigma decomposition or cutting family.
pub fn verify_witness(f: &FiberedMap, w: &Witness) -> bool {
    let xs = f.domain();
    let Some(pre) = preimage_of_nbhd(f, w.y, w.oy) else { return false };
    let s = &w.sets;
    if let (Some(&a), Some(&b), Some(&u), Some(&v)) = (s.get("A"), s.get("B"), s.get("U"), s.get("V")) {
        return xs.is_open_in(pre, u)
            && xs.is_open_in(pre, v)
            && u.is_disjoint(v)
            && a.is_subset(u)
            && b.is_subset(v)
            && a.is_subset(pre)
            && b.is_subset(pre);
    }
    if let (Some(&closed), Some(&t)) = (s.get("F"), s.get("T")) {
        let vs = indexed(s, "V");
        let covered = vs.iter().fold(PointSet::EMPTY, |acc, v| acc.union(**v));
        return t.inter(pre).is_subset(covered)
            && vs
                .iter()
                .all(|&&v| xs.is_open_in(pre, v) && xs.closure_in(pre, v).is_disjoint(closed));
    }
    if let (Some(&u), true) = (s.get("U"), w.functions.is_empty()) {
        let ts = indexed(s, "T");
        let union = ts.iter().fold(PointSet::EMPTY, |acc, t| acc.union(**t));
        return union == u.inter(pre) && ts.iter().all(|&&t| xs.is_closed_in(pre, t));
    }
    if let (Some(&open), None) = (s.get("O"), s.get("U")) {
        let fs: Vec<RationalFunction> = indexed(&w.functions, "phi").into_iter().cloned().collect();
        return verify_perfect_family(f, open, w.y, w.oy, &fs);
    }
    false
}

/// Every neighborhood of `y` inside `o`.
fn nbhds_in(space: &FiniteSpace, o: PointSet, y: usize) -> Vec<PointSet> {
    space.opens().iter().copied().filter(|n| n.contains(y) && n.is_subset(o)).collect()
}

pub fn verify_counterexample(f: &FiberedMap, c: &Counterexample) -> bool {
    let xs = f.domain();
    let ys = f.codomain();
    match c {
        Counterexample::ClosedPair { o, a, b, y } => {
            let wo = f.preimage(*o);
            ys.is_open(*o)
                && o.contains(*y)
                && xs.is_closed_in(wo, *a)
                && xs.is_closed_in(wo, *b)
                && a.is_disjoint(*b)
                && nbhds_in(ys, *o, *y).iter().all(|&g| {
                    let w = f.preimage(g);
                    !xs.hull(a.inter(w)).is_disjoint(xs.hull(b.inter(w)))
                })
        }
        Counterexample::SigmaPair { o, closed, f_sigma, y } => {
            let wo = f.preimage(*o);
            ys.is_open(*o)
                && o.contains(*y)
                && xs.is_closed_in(wo, *closed)
                && xs.is_closed_in(wo, *f_sigma)
                && closed.is_disjoint(*f_sigma)
                && nbhds_in(ys, *o, *y).iter().all(|&g| {
                    let w = f.preimage(g);
                    f_sigma.iter().any(|x| {
                        let piece = xs.closure_of_point(x).inter(w);
                        !xs.closure_in(w, xs.hull(piece)).is_disjoint(*closed)
                    })
                })
        }
        Counterexample::OpenTrace { open, y } | Counterexample::NotFSigma { carrier: open, y } => {
            let w = f.tube(*y);
            xs.is_open(*open) && *y < ys.n() && !xs.is_closed_in(w, open.inter(w))
        }
        Counterexample::Carrier { carrier, inner } => {
            let Ok(sub) = submap(f, *carrier) else { return false };
            let emb = &sub.embedding;
            let lowered = lower(inner, &|s| emb.lower(s));
            verify_counterexample(&sub.map, &lowered)
        }
    }
}

fn lower(c: &Counterexample, g: &dyn Fn(PointSet) -> PointSet) -> Counterexample {
    match c {
        Counterexample::ClosedPair { o, a, b, y } => Counterexample::ClosedPair { o: *o, a: g(*a), b: g(*b), y: *y },
        Counterexample::SigmaPair { o, closed, f_sigma, y } => {
            Counterexample::SigmaPair { o: *o, closed: g(*closed), f_sigma: g(*f_sigma), y: *y }
        }
        Counterexample::OpenTrace { open, y } => Counterexample::OpenTrace { open: g(*open), y: *y },
        Counterexample::NotFSigma { carrier, y } => Counterexample::NotFSigma { carrier: g(*carrier), y: *y },
        Counterexample::Carrier { carrier, inner } => {
            Counterexample::Carrier { carrier: g(*carrier), inner: Box::new(lower(inner, g)) }
        }
    }
}
