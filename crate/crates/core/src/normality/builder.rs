//! Constructive consistent families of binary partitions for normal and
//! σ-normal maps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::{
    level_shape, validate_consistent_family, ConsistentBinaryFamily, Level, RegularKPartition, MAX_DEPTH,
};
use crate::set::PointSet;
use crate::space_core::{FiberedMap, FiniteSpace};

/// How the builder resolves its existential choices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Minimal neighborhood first, smallest open sets first.
    #[default]
    Minimal,
    /// Largest neighborhoods and largest open sets first.
    Widest,
}

/// Separation data handed to the builder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionProblem {
    /// Ambient open set `O` of the codomain.
    pub ambient: PointSet,
    /// Closed set `F` of `f^{-1} O` sent to 0.
    pub zero_set: PointSet,
    /// Closed sets `T_l` of `f^{-1} O` sent to 1.
    pub targets: Vec<PointSet>,
    pub y: usize,
}

impl PartitionProblem {
    pub fn new(ambient: PointSet, zero_set: PointSet, targets: Vec<PointSet>, y: usize) -> PartitionProblem {
        PartitionProblem { ambient, zero_set, targets, y }
    }

    /// `F` and the single target `T` over the whole codomain.
    pub fn global(f: &FiberedMap, zero_set: PointSet, target: PointSet, y: usize) -> PartitionProblem {
        PartitionProblem::new(f.codomain().points(), zero_set, vec![target], y)
    }

    pub fn check(&self, f: &FiberedMap) -> Result<PointSet> {
        let ys = f.codomain();
        let xs = f.domain();
        ys.check_set(self.ambient)?;
        ys.check_point(self.y)?;
        if !ys.is_open(self.ambient) {
            return Err(Error::NotOpen(self.ambient));
        }
        if !self.ambient.contains(self.y) {
            return Err(Error::PointNotInRegion(self.y));
        }
        let w = f.preimage(self.ambient);
        for &s in std::iter::once(&self.zero_set).chain(&self.targets) {
            xs.check_set(s)?;
            if !xs.is_closed_in(w, s) {
                return Err(Error::NotClosed(s));
            }
            if s != self.zero_set && !s.is_disjoint(self.zero_set) {
                return Err(Error::Overlap(self.zero_set, s));
            }
        }
        Ok(w)
    }
}

/// Families sharing one neighborhood chain, one per target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuiltFamilies {
    pub families: Vec<ConsistentBinaryFamily>,
    pub stationary_from: usize,
}

/// Find an open `V ⊆ w` with `inner ⊆ V` and `cl_w V ⊆ outer`.
pub fn solve_sandwich(
    space: &FiniteSpace,
    w: PointSet,
    inner: PointSet,
    outer: PointSet,
    mode: SearchMode,
) -> Option<PointSet> {
    let ok = |v: PointSet| inner.is_subset(v) && space.closure_in(w, v).is_subset(outer);
    match mode {
        // The smallest open superset is the first hit of an ascending scan.
        SearchMode::Minimal => {
            let v = space.hull(inner.inter(w));
            (inner.is_subset(w) && ok(v)).then_some(v)
        }
        SearchMode::Widest => {
            let mut opens: Vec<PointSet> = space.opens_within(w).collect();
            opens.reverse();
            opens.into_iter().find(|&v| ok(v))
        }
    }
}

/// Ascending scan of the open sets inside `w`; reference for the minimal
/// choice.
pub fn solve_sandwich_by_scan(space: &FiniteSpace, w: PointSet, inner: PointSet, outer: PointSet) -> Option<PointSet> {
    space
        .opens_within(w)
        .find(|&v| inner.is_subset(v) && space.closure_in(w, v).is_subset(outer))
}

/// Open neighborhoods of `y` inside `region`, in search order.
pub fn neighborhood_candidates(codomain: &FiniteSpace, region: PointSet, y: usize, mode: SearchMode) -> Vec<PointSet> {
    let uy = codomain.minimal_open_neighborhood(y);
    let mut rest: Vec<PointSet> = codomain
        .neighborhoods_of(y)
        .filter(|o| o.is_subset(region) && *o != uy)
        .collect();
    let mut out = Vec::with_capacity(rest.len() + 1);
    match mode {
        SearchMode::Minimal => {
            if uy.is_subset(region) {
                out.push(uy);
            }
            out.extend(rest);
        }
        SearchMode::Widest => {
            rest.reverse();
            out.extend(rest);
            if uy.is_subset(region) {
                out.push(uy);
            }
        }
    }
    out
}

/// The sets a block's splitting set must sit between, inside `w`.
fn sandwich_bounds(
    space: &FiniteSpace,
    part: &RegularKPartition,
    level: usize,
    q: u64,
    zero_set: PointSet,
    target: PointSet,
    w: PointSet,
) -> (PointSet, PointSet) {
    if level == 0 {
        return (target.inter(w), w.minus(zero_set));
    }
    let top = part.k - 1;
    if q == top {
        return (target.inter(w), part.block(q).inter(w));
    }
    let above = part.blocks.range(q + 1..).fold(PointSet::EMPTY, |a, (_, &b)| a.union(b));
    let below = part.blocks.range(..q).fold(PointSet::EMPTY, |a, (_, &b)| a.union(b));
    let inner = space.closure_in(w, above.inter(w));
    let mut outer = w.minus(below);
    if q == 0 {
        outer = outer.minus(zero_set);
    }
    (inner, outer)
}

/// Build consistent families at `y`, one per target, sharing the
/// neighborhood chain. The chain is extended past `depth` until the level
/// data repeats.
pub fn build_families(
    f: &FiberedMap,
    problem: &PartitionProblem,
    depth: usize,
    mode: SearchMode,
) -> Result<BuiltFamilies> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::DepthRange(depth));
    }
    problem.check(f)?;
    let xs = f.domain();
    let ys = f.codomain();
    let cap = depth.max(xs.n() + ys.n() + 4).min(MAX_DEPTH);

    let base = Level {
        o: ys.points(),
        partition: RegularKPartition {
            carrier: xs.points(),
            k: 1,
            blocks: if xs.n() > 0 { BTreeMap::from([(0, xs.points())]) } else { BTreeMap::new() },
        },
    };
    let mut levels: Vec<Vec<Level>> = vec![vec![base]; problem.targets.len()];
    let mut stationary: Option<usize> = None;
    let mut n = 0;
    loop {
        let next = next_level(f, problem, &levels, n, mode)?;
        for (l, lv) in next.into_iter().enumerate() {
            levels[l].push(lv);
        }
        n += 1;
        if stationary.is_none() && levels.iter().all(|ls| level_shape(&ls[n - 1]) == level_shape(&ls[n])) {
            stationary = Some(n - 1);
        }
        if let Some(s) = stationary {
            if n >= depth {
                let families = levels
                    .into_iter()
                    .map(|ls| validate_consistent_family(f, problem.y, ls, Some(s)))
                    .collect::<Result<Vec<_>>>()?;
                return Ok(BuiltFamilies { families, stationary_from: s });
            }
        }
        if n >= cap {
            return Err(Error::NotStationary(cap));
        }
    }
}

fn next_level(
    f: &FiberedMap,
    problem: &PartitionProblem,
    levels: &[Vec<Level>],
    n: usize,
    mode: SearchMode,
) -> Result<Vec<Level>> {
    let xs = f.domain();
    let current_o = if n == 0 { problem.ambient } else { levels.first().map_or(problem.ambient, |ls| ls[n].o) };
    let candidates = neighborhood_candidates(f.codomain(), current_o, problem.y, mode);
    let mut o_next = current_o;
    let mut splits: Vec<Vec<(u64, PointSet)>> = Vec::with_capacity(levels.len());
    for (l, ls) in levels.iter().enumerate() {
        let part = &ls[n].partition;
        let target = problem.targets[l];
        let mut per_block = Vec::with_capacity(part.blocks.len());
        for &q in part.blocks.keys() {
            let found = candidates.iter().find_map(|&cand| {
                let w = f.preimage(cand);
                let (inner, outer) = sandwich_bounds(xs, part, n, q, problem.zero_set, target, w);
                solve_sandwich(xs, w, inner, outer, mode).map(|v| (cand, v))
            });
            let (cand, v) = found.ok_or(Error::SearchFailed { level: n, step: q, target: l })?;
            o_next = o_next.inter(cand);
            per_block.push((q, v));
        }
        splits.push(per_block);
    }
    let w_next = f.preimage(o_next);
    let mut out = Vec::with_capacity(levels.len());
    for (l, ls) in levels.iter().enumerate() {
        let part = &ls[n].partition;
        let mut blocks = BTreeMap::new();
        for &(q, v) in &splits[l] {
            let u = part.block(q).inter(w_next);
            let v = v.inter(w_next);
            let low = u.minus(v);
            let high = u.inter(v);
            if !low.is_empty() {
                blocks.insert(2 * q, low);
            }
            if !high.is_empty() {
                blocks.insert(2 * q + 1, high);
            }
        }
        out.push(Level { o: o_next, partition: RegularKPartition { carrier: w_next, k: part.k * 2, blocks } });
    }
    Ok(out)
}

/// A single consistent family separating `F` from `T`.
pub fn build_binary_partitions(
    f: &FiberedMap,
    problem: &PartitionProblem,
    depth: usize,
    mode: SearchMode,
) -> Result<ConsistentBinaryFamily> {
    if problem.targets.len() != 1 {
        return Err(Error::Validation {
            object: "partition problem".into(),
            reason: "exactly one target set expected".into(),
        });
    }
    let mut built = build_families(f, problem, depth, mode)?;
    let family = built.families.pop().expect("one family per target");
    verify_partition_conditions(f, problem.zero_set, problem.targets[0], &family)?;
    Ok(family)
}

/// Families for the pieces `T_l` of an F_sigma set, with a shared chain.
pub fn build_binary_partitions_sigma(
    f: &FiberedMap,
    problem: &PartitionProblem,
    depth: usize,
    mode: SearchMode,
) -> Result<BuiltFamilies> {
    let built = build_families(f, problem, depth, mode)?;
    for (fam, &t) in built.families.iter().zip(&problem.targets) {
        verify_partition_conditions(f, problem.zero_set, t, fam)?;
    }
    Ok(built)
}

/// The separation properties every level `n >= 1` must have: `F` in the
/// bottom block and away from the closure of the rest, `T` in the top block
/// and away from the closure of the rest.
pub fn verify_partition_conditions(
    f: &FiberedMap,
    zero_set: PointSet,
    target: PointSet,
    family: &ConsistentBinaryFamily,
) -> Result<()> {
    let xs = f.domain();
    for (n, level) in family.levels.iter().enumerate().skip(1) {
        let p = &level.partition;
        let w = p.carrier;
        let top = p.k - 1;
        let fw = zero_set.inter(w);
        let tw = target.inter(w);
        if !fw.is_subset(p.block(0)) {
            return Err(Error::CheckFailed(format!("F leaves the bottom block at level {n}")));
        }
        if !tw.is_subset(p.block(top)) {
            return Err(Error::CheckFailed(format!("T leaves the top block at level {n}")));
        }
        let upper = w.minus(p.block(0));
        let lower = w.minus(p.block(top));
        if !fw.is_disjoint(xs.closure_in(w, upper)) {
            return Err(Error::CheckFailed(format!("F meets the closure of the upper blocks at level {n}")));
        }
        if !tw.is_disjoint(xs.closure_in(w, lower)) {
            return Err(Error::CheckFailed(format!("T meets the closure of the lower blocks at level {n}")));
        }
    }
    Ok(())
}

/// A neighborhood `Oy ⊆ O` of `y` and open sets `V_l` of `f^{-1} Oy` with
/// `T_l ∩ f^{-1}Oy ⊆ V_l ⊆ cl V_l ⊆ U ∩ f^{-1}Oy`.
pub fn small_urysohn_search(
    f: &FiberedMap,
    o: PointSet,
    targets: &[PointSet],
    u: PointSet,
    y: usize,
) -> Result<(PointSet, Vec<PointSet>)> {
    let xs = f.domain();
    let ys = f.codomain();
    ys.check_set(o)?;
    ys.check_point(y)?;
    if !ys.is_open(o) {
        return Err(Error::NotOpen(o));
    }
    if !o.contains(y) {
        return Err(Error::PointNotInRegion(y));
    }
    let w = f.preimage(o);
    xs.check_set(u)?;
    if !xs.is_open_in(w, u) {
        return Err(Error::NotOpen(u));
    }
    for &t in targets {
        xs.check_set(t)?;
        if !xs.is_closed_in(w, t) {
            return Err(Error::NotClosed(t));
        }
        if !t.is_subset(u) {
            return Err(Error::Overlap(t, w.minus(u)));
        }
    }
    for cand in neighborhood_candidates(ys, o, y, SearchMode::Minimal) {
        let wy = f.preimage(cand);
        let vs: Option<Vec<PointSet>> = targets
            .iter()
            .map(|&t| solve_sandwich_by_scan(xs, wy, t.inter(wy), u.inter(wy)))
            .collect();
        if let Some(vs) = vs {
            return Ok((cand, vs));
        }
    }
    Err(Error::NotFound(format!("no neighborhood of {y} admits the inclusions")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::{assemble_limit, stepwise_function};
    use crate::oscillation::qi;
    use crate::RationalFunction;

    fn ps(v: &[usize]) -> PointSet {
        PointSet::from_points(v.iter().copied())
    }

    #[test]
    fn discrete_family() {
        let d2 = FiniteSpace::discrete(2);
        let id = FiberedMap::identity(&d2);
        let pr = PartitionProblem::global(&id, ps(&[0]), ps(&[1]), 0);
        let fam = build_binary_partitions(&id, &pr, 3, SearchMode::Minimal).unwrap();
        for n in 1..=fam.depth() {
            let p = &fam.levels[n].partition;
            let w = p.carrier;
            assert!(ps(&[0]).inter(w).is_subset(p.block(0)));
            assert!(ps(&[1]).inter(w).is_subset(p.block(p.k - 1)));
        }
        let phi = stepwise_function(&id, &fam, 2).unwrap();
        assert_eq!(phi.get(0), &qi(0));
        assert_eq!(&phi, &stepwise_function(&id, &fam, 3).unwrap());
    }

    #[test]
    fn constant_map_limit() {
        let d2 = FiniteSpace::discrete(2);
        let c = FiberedMap::constant(&d2);
        let pr = PartitionProblem::global(&c, ps(&[0]), ps(&[1]), 0);
        let fam = build_binary_partitions(&c, &pr, 4, SearchMode::Minimal).unwrap();
        let lim = assemble_limit(&c, &fam).unwrap();
        assert!(lim.exact);
        assert_eq!(lim.phi, RationalFunction::new(vec![qi(0), qi(1)]));
    }

    #[test]
    fn empty_sets() {
        let s = FiniteSpace::sierpinski();
        let id = FiberedMap::identity(&s);
        for y in 0..2 {
            let pr = PartitionProblem::global(&id, PointSet::EMPTY, PointSet::EMPTY, y);
            let fam = build_binary_partitions(&id, &pr, 2, SearchMode::Minimal).unwrap();
            assert!(fam.depth() >= 2);
        }
    }

    #[test]
    fn minimal_choice_matches_scan() {
        let c3 = FiniteSpace::chain(3);
        for w in c3.opens().to_vec() {
            for inner in w.subsets() {
                for outer in w.subsets() {
                    assert_eq!(
                        solve_sandwich(&c3, w, inner, outer, SearchMode::Minimal),
                        solve_sandwich_by_scan(&c3, w, inner, outer)
                    );
                }
            }
        }
    }

    #[test]
    fn small_urysohn_examples() {
        let d2 = FiniteSpace::discrete(2);
        let id = FiberedMap::identity(&d2);
        let (oy, vs) = small_urysohn_search(&id, d2.points(), &[ps(&[1])], ps(&[1]), 0).unwrap();
        assert_eq!(oy, ps(&[0]));
        assert_eq!(vs, vec![PointSet::EMPTY]);
        let (_, vs) = small_urysohn_search(&id, d2.points(), &[ps(&[1])], ps(&[1]), 1).unwrap();
        assert_eq!(vs, vec![ps(&[1])]);
        let (_, vs) = small_urysohn_search(&id, d2.points(), &[PointSet::EMPTY], ps(&[1]), 1).unwrap();
        assert_eq!(vs, vec![PointSet::EMPTY]);

        let c3 = FiniteSpace::chain(3);
        let idc = FiberedMap::identity(&c3);
        assert_eq!(
            small_urysohn_search(&idc, c3.points(), &[ps(&[2])], ps(&[1, 2]), 2).unwrap_err(),
            Error::NotOpen(ps(&[1, 2]))
        );
    }

    #[test]
    fn sigma_discrete() {
        let d3 = FiniteSpace::discrete(3);
        let id = FiberedMap::identity(&d3);
        let pr = PartitionProblem::new(d3.points(), ps(&[0]), vec![ps(&[1]), ps(&[2])], 1);
        let built = build_binary_partitions_sigma(&id, &pr, 3, SearchMode::Minimal).unwrap();
        assert_eq!(built.families.len(), 2);
        assert_eq!(built.families[0].neighborhoods(), built.families[1].neighborhoods());
        let constant = FiberedMap::constant(&d3);
        let pr = PartitionProblem::new(ps(&[0]), ps(&[0]), vec![ps(&[1]), ps(&[2])], 0);
        let built = build_binary_partitions_sigma(&constant, &pr, 3, SearchMode::Widest).unwrap();
        assert!(built.families.iter().all(|f| f.neighborhoods().iter().all(|&o| o == ps(&[0]))));
    }

    #[test]
    fn rejects_overlap() {
        let d2 = FiniteSpace::discrete(2);
        let id = FiberedMap::identity(&d2);
        let pr = PartitionProblem::global(&id, ps(&[0, 1]), ps(&[1]), 0);
        assert!(matches!(build_binary_partitions(&id, &pr, 2, SearchMode::Minimal), Err(Error::Overlap(..))));
    }
}
