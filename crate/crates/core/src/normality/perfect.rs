//! Perfect normality of maps and f-functionally open and closed sets.
//!
//! A family that is f-equicontinuous at `y` has zero oscillation on
//! `f^{-1} U_y`, so each member is constant on the components of that
//! subspace. Every search below runs over `Oy = U_y`.

use num::Zero;
use serde::Serialize;

use crate::normality::deciders::{Counterexample, Decision, Witness, WITNESS_LIMIT};
use crate::oscillation::{is_f_continuous_at, is_f_equicontinuous_at, q, qi, weighted_sum, dyadic, RationalFunction, Q};
use crate::error::{Error, Result};
use crate::set::PointSet;
use crate::space_core::{FiberedMap, FiniteSpace};
use crate::urysohn_tietze::{SeparatorCache, DEFAULT_DEPTH};

/// A finite family cutting an open set out over a neighborhood of `y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerfectNormalityWitness {
    pub open: PointSet,
    pub y: usize,
    #[serde(rename = "Oy")]
    pub oy: PointSet,
    pub functions: Vec<RationalFunction>,
    /// Whether the family came from separators rather than the fallback
    /// search.
    pub constructive: bool,
}

impl PerfectNormalityWitness {
    pub fn witness(&self) -> Witness {
        let mut w = Witness::new(self.y, self.oy).set("O", self.open);
        for (l, phi) in self.functions.iter().enumerate() {
            w = w.function(&format!("phi{l}"), phi.clone());
        }
        w
    }
}

/// Independent check of conditions (1), (2), equicontinuity at `y` and
/// the range `[0, 1]`.
pub fn verify_perfect_family(f: &FiberedMap, open: PointSet, y: usize, oy: PointSet, functions: &[RationalFunction]) -> bool {
    let ys = f.codomain();
    if y >= ys.n() || !ys.is_open(oy) || !oy.contains(y) {
        return false;
    }
    let w = f.preimage(oy);
    let one = qi(1);
    let ones = functions
        .iter()
        .fold(PointSet::EMPTY, |acc, p| acc.union(p.level_set(|v| *v == one)));
    let vanish = functions
        .iter()
        .all(|p| w.minus(open).is_subset(p.level_set(|v| v.is_zero())));
    let ranged = functions
        .iter()
        .all(|p| p.n() == f.domain().n() && p.values().iter().all(|v| *v >= qi(0) && *v <= one));
    ranged && vanish && ones.inter(w) == open.inter(w) && is_f_equicontinuous_at(f, functions, y).0
}

fn constructive_family(
    f: &FiberedMap,
    open: PointSet,
    y: usize,
    depth: usize,
    cache: &mut SeparatorCache,
) -> Option<Vec<RationalFunction>> {
    let xs = f.domain();
    let uy = f.codomain().minimal_open_neighborhood(y);
    let w = f.preimage(uy);
    let zero_side = w.minus(open);
    let mut out: Vec<RationalFunction> = Vec::new();
    for x in open.inter(w).iter() {
        let t = xs.closure_of_point(x).inter(w);
        if !t.is_disjoint(zero_side) {
            return None;
        }
        let sep = cache.get(f, uy, zero_side, t, y, depth).ok()?;
        if !out.contains(&sep.phi.phi) {
            out.push(sep.phi.phi);
        }
    }
    Some(out)
}

/// Exhaustive search over `{0, 1/2, 1}`-valued functions constant on the
/// components of `f^{-1} U_y`. Only members vanishing off `open` are
/// admissible, and adding an admissible member never breaks condition (1),
/// so the family of all admissible members decides the question.
fn fallback_family(space: &FiniteSpace, f: &FiberedMap, open: PointSet, y: usize) -> Option<Vec<RationalFunction>> {
    let w = f.preimage(f.codomain().minimal_open_neighborhood(y));
    let free: Vec<PointSet> = space
        .components_in(w)
        .into_iter()
        .filter(|c| c.is_subset(open))
        .collect();
    let levels = [qi(0), q(1, 2), qi(1)];
    let total = 3usize.pow(free.len() as u32);
    let mut family = Vec::new();
    let mut covered = PointSet::EMPTY;
    for code in 1..total {
        let mut phi = RationalFunction::zero(space.n());
        let mut c = code;
        for comp in &free {
            let v = &levels[c % 3];
            c /= 3;
            for x in comp.iter() {
                phi.set(x, v.clone());
            }
        }
        let ones = phi.level_set(|v| *v == qi(1));
        if !ones.is_subset(covered) {
            covered = covered.union(ones);
            family.push(phi);
        }
    }
    (covered == open.inter(w)).then_some(family)
}

/// A witness for `open` over `y`, constructive route first.
pub fn perfect_witness(
    f: &FiberedMap,
    open: PointSet,
    y: usize,
    depth: usize,
    cache: &mut SeparatorCache,
) -> Option<PerfectNormalityWitness> {
    let oy = f.codomain().minimal_open_neighborhood(y);
    if let Some(functions) = constructive_family(f, open, y, depth, cache) {
        if verify_perfect_family(f, open, y, oy, &functions) {
            return Some(PerfectNormalityWitness { open, y, oy, functions, constructive: true });
        }
    }
    let functions = fallback_family(f.domain(), f, open, y)?;
    verify_perfect_family(f, open, y, oy, &functions)
        .then_some(PerfectNormalityWitness { open, y, oy, functions, constructive: false })
}

pub fn is_perfectly_normal(f: &FiberedMap) -> Decision {
    is_perfectly_normal_with(f, DEFAULT_DEPTH, &mut SeparatorCache::new())
}

pub fn is_perfectly_normal_with(f: &FiberedMap, depth: usize, cache: &mut SeparatorCache) -> Decision {
    let mut witnesses = Vec::new();
    for &open in f.domain().opens() {
        for y in 0..f.codomain().n() {
            match perfect_witness(f, open, y, depth, cache) {
                Some(w) if witnesses.len() < WITNESS_LIMIT => witnesses.push(w.witness()),
                Some(_) => {}
                None => return Decision::no(Counterexample::OpenTrace { open, y }),
            }
        }
    }
    Decision::yes(witnesses)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionalWitness {
    pub y: usize,
    #[serde(rename = "Oy")]
    pub oy: PointSet,
    pub phi: RationalFunction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionalReport {
    pub holds: bool,
    pub witnesses: Vec<FunctionalWitness>,
    pub failed_at: Option<usize>,
}

/// The function that is 1 on the components of `f^{-1} U_y` inside `u`
/// and 0 elsewhere, when `u` is a union of such components.
fn component_indicator(f: &FiberedMap, u: PointSet, y: usize) -> Option<RationalFunction> {
    let xs = f.domain();
    let w = f.preimage(f.codomain().minimal_open_neighborhood(y));
    let mut phi = RationalFunction::zero(xs.n());
    for comp in xs.components_in(w) {
        if comp.is_subset(u) {
            for x in comp.iter() {
                phi.set(x, qi(1));
            }
        } else if !comp.is_disjoint(u) {
            return None;
        }
    }
    Some(phi)
}

fn cuts_out(f: &FiberedMap, u: PointSet, w: &FunctionalWitness) -> bool {
    let p = f.preimage(w.oy);
    let positive = w.phi.level_set(|v| *v > Q::zero());
    is_f_continuous_at(f, &w.phi, w.y).holds
        && w.phi.values().iter().all(|v| *v >= qi(0) && *v <= qi(1))
        && positive.inter(p) == u.inter(p)
}

fn functional_search(f: &FiberedMap, u: PointSet) -> FunctionalReport {
    let mut witnesses = Vec::new();
    for y in 0..f.codomain().n() {
        let oy = f.codomain().minimal_open_neighborhood(y);
        match component_indicator(f, u, y).map(|phi| FunctionalWitness { y, oy, phi }) {
            Some(w) if cuts_out(f, u, &w) => witnesses.push(w),
            _ => return FunctionalReport { holds: false, witnesses, failed_at: Some(y) },
        }
    }
    FunctionalReport { holds: true, witnesses, failed_at: None }
}

/// Whether `u` is locally `φ^{-1}(0, 1]` for f-continuous `φ`.
pub fn is_f_functionally_open(f: &FiberedMap, u: PointSet) -> FunctionalReport {
    functional_search(f, u)
}

/// Whether `c` is locally `φ^{-1}(0)` for f-continuous `φ`. The same
/// functions serve the complement as an f-functionally open set.
pub fn is_f_functionally_closed(f: &FiberedMap, c: PointSet) -> FunctionalReport {
    let u = f.domain().points().minus(c);
    let r = functional_search(f, u);
    let zero_ok = r.witnesses.iter().all(|w| {
        let p = f.preimage(w.oy);
        w.phi.level_set(|v| v.is_zero()).inter(p) == c.inter(p)
    });
    debug_assert!(zero_ok);
    FunctionalReport { holds: r.holds && zero_ok, ..r }
}

/// `Σ_l φ_l / 2^{l+1}` over a perfect-normality family, checked to cut out
/// the open set over `y`.
pub fn functional_witness_from_family(f: &FiberedMap, w: &PerfectNormalityWitness) -> Result<FunctionalWitness> {
    let weights: Vec<Q> = (1..=w.functions.len()).map(dyadic).collect();
    let phi = weighted_sum(f, &w.functions, &weights, w.y)?;
    let out = FunctionalWitness { y: w.y, oy: w.oy, phi };
    if !cuts_out(f, w.open, &out) {
        return Err(Error::CheckFailed("weighted sum does not cut out the open set".into()));
    }
    Ok(out)
}

/// The functional condition characterizing co-σ-perfect normality: for
/// every open `O` of `Y`, open `U ⊆ f^{-1} O`, closed pieces
/// `F_l = cl {x} ⊆ U` and `y ∈ O`, families `φ_l`, `ψ_l` over a shared
/// neighborhood of `y`.
pub fn functional_characterization(f: &FiberedMap) -> Decision {
    let xs = f.domain();
    let ys = f.codomain();
    let half = q(1, 2);
    let mut witnesses = Vec::new();
    for &o in ys.opens().iter().filter(|o| !o.is_empty()) {
        let wo = f.preimage(o);
        for u in xs.opens_within(wo) {
            let pieces: Vec<PointSet> = u
                .iter()
                .map(|x| xs.closure_of_point(x).inter(wo))
                .filter(|c| c.is_subset(u))
                .collect();
            for y in o.iter() {
                let oy = ys.minimal_open_neighborhood(y);
                let w = f.preimage(oy);
                let Some(psi_all) = component_indicator(f, u, y) else {
                    return Decision::no(Counterexample::OpenTrace { open: u, y });
                };
                let psis: Vec<RationalFunction> = u
                    .inter(w)
                    .iter()
                    .map(|x| {
                        let comp = xs.components_in(w).into_iter().find(|c| c.contains(x)).unwrap_or_default();
                        RationalFunction::indicator(xs.n(), comp)
                    })
                    .collect();
                let phis: Vec<RationalFunction> = pieces
                    .iter()
                    .map(|&p| {
                        let hit = xs
                            .components_in(w)
                            .into_iter()
                            .filter(|c| !c.is_disjoint(p))
                            .fold(PointSet::EMPTY, PointSet::union);
                        RationalFunction::indicator(xs.n(), hit)
                    })
                    .collect();
                let all: Vec<RationalFunction> = phis.iter().chain(&psis).cloned().collect();
                let outside = w.minus(u);
                let ones = |p: &RationalFunction| p.level_set(|v| *v == qi(1));
                let zeros = |p: &RationalFunction| p.level_set(|v| v.is_zero());
                let ok = is_f_equicontinuous_at(f, &all, y).0
                    && all.iter().all(|p| crate::oscillation::osc_on_set(xs, p, w) < half)
                    && all.iter().all(|p| outside.is_subset(zeros(p)))
                    && phis.iter().zip(&pieces).all(|(p, &piece)| piece.inter(w).is_subset(ones(p)))
                    && psis.iter().fold(PointSet::EMPTY, |acc, p| acc.union(ones(p))).inter(w) == u.inter(w)
                    && ones(&psi_all).inter(w) == u.inter(w);
                if !ok {
                    return Decision::no(Counterexample::OpenTrace { open: u, y });
                }
                if witnesses.len() < WITNESS_LIMIT {
                    let mut wt = Witness::new(y, oy).set("O", o).set("U", u);
                    for (l, p) in phis.iter().enumerate() {
                        wt = wt.function(&format!("phi{l}"), p.clone());
                    }
                    for (l, p) in psis.iter().enumerate() {
                        wt = wt.function(&format!("psi{l}"), p.clone());
                    }
                    witnesses.push(wt);
                }
            }
        }
    }
    Decision::yes(witnesses)
}
