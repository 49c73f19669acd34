//! Regular k-partitions, consistent families of binary partitions and the
//! functions they define.

use std::collections::BTreeMap;

use num::{BigInt, Integer, One};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oscillation::{osc_on_set, q_string, step, RationalFunction, Q};
use crate::set::PointSet;
use crate::space_core::{FiberedMap, FiniteSpace};

/// Deepest supported level; block indices live in `u64`.
pub const MAX_DEPTH: usize = 62;

/// An ordered partition `U^0, ..., U^{k-1}` of a carrier subspace, stored
/// sparsely: absent indices are empty blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RegularKPartition {
    pub carrier: PointSet,
    pub k: u64,
    pub blocks: BTreeMap<u64, PointSet>,
}

impl RegularKPartition {
    #[inline]
    pub fn block(&self, i: u64) -> PointSet {
        self.blocks.get(&i).copied().unwrap_or_default()
    }

    /// Nonempty blocks with their indices, ascending.
    pub fn nonempty(&self) -> impl Iterator<Item = (u64, PointSet)> + '_ {
        self.blocks.iter().map(|(&i, &b)| (i, b))
    }

    /// Index of the block containing `x`.
    pub fn index_of(&self, x: usize) -> Option<u64> {
        self.blocks.iter().find(|(_, b)| b.contains(x)).map(|(&i, _)| i)
    }

    /// Dense list of all `k` blocks.
    pub fn dense(&self) -> Vec<PointSet> {
        (0..self.k).map(|i| self.block(i)).collect()
    }
}

/// Validate a dense block list as a regular partition of `carrier`.
pub fn validate_regular_partition(
    space: &FiniteSpace,
    carrier: PointSet,
    blocks: &[PointSet],
) -> Result<RegularKPartition> {
    let map = blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.is_empty())
        .map(|(i, &b)| (i as u64, b))
        .collect();
    validate_sparse_partition(space, carrier, blocks.len() as u64, map)
}

/// Validate a sparse block map with `k` slots.
pub fn validate_sparse_partition(
    space: &FiniteSpace,
    carrier: PointSet,
    k: u64,
    blocks: BTreeMap<u64, PointSet>,
) -> Result<RegularKPartition> {
    space.check_set(carrier)?;
    if k == 0 {
        return Err(Error::InvalidPartition("a partition needs at least one block".into()));
    }
    let mut seen = PointSet::EMPTY;
    for (&i, &b) in &blocks {
        if i >= k {
            return Err(Error::InvalidPartition(format!("block index {i} is not below {k}")));
        }
        if !b.is_subset(carrier) {
            return Err(Error::InvalidPartition(format!("block {i} leaves the carrier")));
        }
        if !seen.is_disjoint(b) {
            return Err(Error::NotDisjoint);
        }
        seen = seen.union(b);
    }
    if seen != carrier {
        return Err(Error::NotCovering);
    }
    let blocks: BTreeMap<u64, PointSet> = blocks.into_iter().filter(|(_, b)| !b.is_empty()).collect();

    let mut prefix = PointSet::EMPTY;
    for (&i, &b) in &blocks {
        prefix = prefix.union(b);
        if !space.is_closed_in(carrier, prefix) {
            return Err(Error::PrefixNotClosed(i));
        }
    }

    // Condition (2) fails at p exactly when some U^i meets cl U^j with
    // i <= p <= j - 2; the smallest such p is the smallest such i.
    for (&i, &bi) in &blocks {
        for (_, &bj) in blocks.range(i.saturating_add(2)..) {
            if !bi.is_disjoint(space.closure_in(carrier, bj)) {
                return Err(Error::Condition2Violated(i));
            }
        }
    }
    Ok(RegularKPartition { carrier, k, blocks })
}

/// `⋃_{m <= k-2} int (U^m ∪ U^{m+1})` equals the carrier.
pub fn interiors_cover_check(space: &FiniteSpace, p: &RegularKPartition) -> Result<bool> {
    if p.k < 3 {
        return Err(Error::InvalidPartition(format!("covering property needs k >= 3, got {}", p.k)));
    }
    let mut covered = PointSet::EMPTY;
    let mut candidates: Vec<u64> = Vec::new();
    for &i in p.blocks.keys() {
        if i > 0 {
            candidates.push(i - 1);
        }
        if i + 1 < p.k {
            candidates.push(i);
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    for m in candidates {
        let pair = p.block(m).union(p.block(m + 1));
        covered = covered.union(space.interior_in(p.carrier, pair));
    }
    Ok(covered == p.carrier)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Level {
    #[serde(rename = "O")]
    pub o: PointSet,
    pub partition: RegularKPartition,
}

/// Neighborhoods `O_n` of `y` with regular `2^n`-partitions of `f^{-1} O_n`
/// whose blocks split coherently from level to level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ConsistentBinaryFamily {
    pub y: usize,
    pub levels: Vec<Level>,
    /// Smallest `s` with identical level data at `s` and `s + 1`; every
    /// later level repeats it.
    pub stationary_from: Option<usize>,
}

/// What a level looks like once block indices are forgotten.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LevelShape {
    pub o: PointSet,
    pub blocks: Vec<PointSet>,
    pub first_at_bottom: bool,
    pub last_at_top: bool,
}

pub fn level_shape(level: &Level) -> LevelShape {
    let p = &level.partition;
    LevelShape {
        o: level.o,
        blocks: p.blocks.values().copied().collect(),
        first_at_bottom: p.blocks.contains_key(&0),
        last_at_top: p.blocks.contains_key(&(p.k - 1)),
    }
}

impl ConsistentBinaryFamily {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> Result<&Level> {
        self.levels
            .get(n)
            .ok_or(Error::DepthExceeded { requested: n, depth: self.depth() })
    }

    /// `f^{-1} O_n`.
    pub fn carrier(&self, n: usize) -> PointSet {
        self.levels[n].partition.carrier
    }

    /// Neighborhood chain `O_0 ⊇ O_1 ⊇ ...`.
    pub fn neighborhoods(&self) -> Vec<PointSet> {
        self.levels.iter().map(|l| l.o).collect()
    }
}

/// Check nesting, coherence and regularity of every level.
pub fn validate_consistent_family(
    f: &FiberedMap,
    y: usize,
    levels: Vec<Level>,
    stationary_from: Option<usize>,
) -> Result<ConsistentBinaryFamily> {
    let x = f.domain();
    let ys = f.codomain();
    ys.check_point(y)?;
    if levels.is_empty() {
        return Err(Error::MalformedFamily("no levels".into()));
    }
    if levels.len() - 1 > MAX_DEPTH {
        return Err(Error::DepthRange(levels.len() - 1));
    }
    let l0 = &levels[0];
    if l0.o != ys.points() || l0.partition.k != 1 || l0.partition.block(0) != x.points() {
        return Err(Error::MalformedFamily("level 0 must be O = Y with the single block X".into()));
    }
    for (n, level) in levels.iter().enumerate() {
        if !ys.is_open(level.o) || !level.o.contains(y) {
            return Err(Error::MalformedFamily(format!("O at level {n} is not an open neighborhood of {y}")));
        }
        if n > 0 && !level.o.is_subset(levels[n - 1].o) {
            return Err(Error::NeighborhoodNotNested(n));
        }
        let p = &level.partition;
        if p.k != 1u64 << n {
            return Err(Error::MalformedFamily(format!("level {n} has {} blocks", p.k)));
        }
        if p.carrier != f.preimage(level.o) {
            return Err(Error::MalformedFamily(format!("level {n} does not partition the preimage of O")));
        }
        if let Err(e) = validate_sparse_partition(x, p.carrier, p.k, p.blocks.clone()) {
            return Err(Error::LevelNotRegular { level: n, detail: e.to_string() });
        }
        if n > 0 {
            let parent = &levels[n - 1].partition;
            for k in 0..parent.k {
                let children = p.block(2 * k).union(p.block(2 * k + 1));
                if children != parent.block(k).inter(p.carrier) {
                    return Err(Error::CoherenceViolated(n - 1, k));
                }
            }
        }
    }
    if let Some(s) = stationary_from {
        if s + 1 >= levels.len() || level_shape(&levels[s]) != level_shape(&levels[s + 1]) {
            return Err(Error::MalformedFamily(format!("levels {s} and {} differ", s + 1)));
        }
    }
    Ok(ConsistentBinaryFamily { y, levels, stationary_from })
}

/// `φ_n = k/(2^n - 1)` on `U_n^k` and 0 off `f^{-1} O_n`; `φ_0 ≡ 0`.
pub fn stepwise_function(f: &FiberedMap, family: &ConsistentBinaryFamily, n: usize) -> Result<RationalFunction> {
    let level = family.level(n)?;
    let phi = stepwise_unchecked(f.domain().n(), level, n);
    if n > 0 && osc_on_set(f.domain(), &phi, level.partition.carrier) > step(n) {
        return Err(Error::CheckFailed(format!("oscillation of the level-{n} function exceeds its step")));
    }
    Ok(phi)
}

fn stepwise_unchecked(points: usize, level: &Level, n: usize) -> RationalFunction {
    let mut phi = RationalFunction::zero(points);
    if n == 0 {
        return phi;
    }
    let h = step(n);
    for (k, b) in level.partition.nonempty() {
        let v = &h * Q::from_integer(BigInt::from(k));
        for x in b.iter() {
            phi.set(x, v.clone());
        }
    }
    phi
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApproximateLimitFunction {
    pub phi: RationalFunction,
    /// `1/(2^N - 1)` for the depth `N`.
    #[serde(with = "q_string")]
    pub error_bound: Q,
    pub depth: usize,
    pub stationary_from: Option<usize>,
    /// `f^{-1} O_N`, where the value is a limit.
    pub core: PointSet,
    /// Whether every value is the exact limit.
    pub exact: bool,
}

/// The limit of the stepwise functions, evaluated level by level.
pub fn assemble_limit(f: &FiberedMap, family: &ConsistentBinaryFamily) -> Result<ApproximateLimitFunction> {
    let depth = family.depth();
    if depth == 0 {
        return Err(Error::DepthRange(0));
    }
    let x = f.domain();
    if family.levels[0].o != f.codomain().points() {
        return Err(Error::HypothesisFailed { which: 'a', level: 0 });
    }
    for n in 1..=depth {
        if !family.levels[n].o.is_subset(family.levels[n - 1].o) {
            return Err(Error::HypothesisFailed { which: 'a', level: n });
        }
    }
    let phis: Vec<RationalFunction> = (0..=depth)
        .map(|n| stepwise_unchecked(x.n(), &family.levels[n], n))
        .collect();
    for (n, phi) in phis.iter().enumerate().skip(1) {
        if osc_on_set(x, phi, family.carrier(n)) > step(n) {
            return Err(Error::HypothesisFailed { which: 'b', level: n });
        }
    }
    for n in 0..depth {
        if phis[n + 1].distance_on(&phis[n], family.carrier(n + 1)) > step(n + 1) {
            return Err(Error::HypothesisFailed { which: 'c', level: n });
        }
    }

    let stationary = family.stationary_from.filter(|&s| s < depth);
    let core = family.carrier(depth);
    let mut phi = RationalFunction::zero(x.n());
    for p in 0..x.n() {
        let n = (0..=depth).rev().find(|&n| family.carrier(n).contains(p)).unwrap_or(0);
        if n < depth || stationary.is_none() {
            phi.set(p, phis[n].get(p).clone());
        } else {
            let k = family.levels[depth].partition.index_of(p).expect("core point lies in a block");
            let k = BigInt::from(k);
            let bit = k.mod_floor(&BigInt::from(2));
            phi.set(p, Q::new(k + bit, BigInt::one() << depth));
        }
    }
    Ok(ApproximateLimitFunction {
        phi,
        error_bound: step(depth),
        depth,
        stationary_from: family.stationary_from,
        core,
        exact: stationary.is_some() || core.is_empty(),
    })
}

/// Interval `[k/2^N, (k+1)/2^N]` that contains the limit at a core point
/// with level-`N` index `k`.
pub fn limit_interval(k: u64, depth: usize) -> (Q, Q) {
    let d = BigInt::one() << depth;
    (Q::new(BigInt::from(k), d.clone()), Q::new(BigInt::from(k) + 1, d))
}

/// Largest `|φ_{n+1} - φ_n|` on `f^{-1} O_{n+1}` for each `n < N`.
pub fn increments(f: &FiberedMap, family: &ConsistentBinaryFamily) -> Vec<Q> {
    let x = f.domain();
    (0..family.depth())
        .map(|n| {
            let a = stepwise_unchecked(x.n(), &family.levels[n], n);
            let b = stepwise_unchecked(x.n(), &family.levels[n + 1], n + 1);
            b.distance_on(&a, family.carrier(n + 1))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillation::{q, qi};

    fn ps(v: &[usize]) -> PointSet {
        PointSet::from_points(v.iter().copied())
    }

    #[test]
    fn regular_partition_examples() {
        let s = FiniteSpace::sierpinski();
        let p = validate_regular_partition(&s, s.points(), &[ps(&[1]), ps(&[0])]).unwrap();
        assert_eq!(p.k, 2);

        let c3 = FiniteSpace::chain(3);
        let e = validate_regular_partition(&c3, c3.points(), &[ps(&[2]), ps(&[1]), ps(&[0])]).unwrap_err();
        assert_eq!(e, Error::Condition2Violated(0));

        let d3 = FiniteSpace::discrete(3);
        let p = validate_regular_partition(&d3, d3.points(), &[ps(&[1]), ps(&[2]), ps(&[0])]).unwrap();
        assert!(interiors_cover_check(&d3, &p).unwrap());
    }

    #[test]
    fn structural_errors() {
        let s = FiniteSpace::sierpinski();
        assert_eq!(
            validate_regular_partition(&s, s.points(), &[ps(&[0, 1]), ps(&[1])]).unwrap_err(),
            Error::NotDisjoint
        );
        assert_eq!(
            validate_regular_partition(&s, s.points(), &[ps(&[1]), PointSet::EMPTY]).unwrap_err(),
            Error::NotCovering
        );
        assert_eq!(
            validate_regular_partition(&s, s.points(), &[ps(&[0]), ps(&[1])]).unwrap_err(),
            Error::PrefixNotClosed(0)
        );
        let p = validate_regular_partition(&s, s.points(), &[ps(&[1]), ps(&[0])]).unwrap();
        assert!(matches!(interiors_cover_check(&s, &p), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn sierpinski_family() {
        let s = FiniteSpace::sierpinski();
        let id = FiberedMap::identity(&s);
        let l0 = Level {
            o: ps(&[0, 1]),
            partition: validate_regular_partition(&s, ps(&[0, 1]), &[ps(&[0, 1])]).unwrap(),
        };
        let fam = validate_consistent_family(&id, 0, vec![l0.clone()], None).unwrap();
        assert_eq!(fam.depth(), 0);

        let l1 = Level {
            o: ps(&[0]),
            partition: validate_regular_partition(&s, ps(&[0]), &[PointSet::EMPTY, ps(&[0])]).unwrap(),
        };
        let fam = validate_consistent_family(&id, 0, vec![l0.clone(), l1.clone()], None).unwrap();
        let phi1 = stepwise_function(&id, &fam, 1).unwrap();
        assert_eq!(phi1, RationalFunction::new(vec![qi(1), qi(0)]));
        assert_eq!(
            stepwise_function(&id, &fam, 2).unwrap_err(),
            Error::DepthExceeded { requested: 2, depth: 1 }
        );
        let lim = assemble_limit(&id, &fam).unwrap();
        assert_eq!(lim.phi, phi1);
        assert_eq!(lim.error_bound, qi(1));

        let flipped = Level {
            o: ps(&[0]),
            partition: validate_regular_partition(&s, ps(&[0]), &[ps(&[0]), PointSet::EMPTY]).unwrap(),
        };
        assert!(validate_consistent_family(&id, 0, vec![l0.clone(), flipped], None).is_ok());

        let swapped = Level {
            o: ps(&[0, 1]),
            partition: validate_regular_partition(&s, ps(&[0, 1]), &[ps(&[1]), ps(&[0])]).unwrap(),
        };
        let incoherent = Level {
            o: ps(&[0, 1]),
            partition: validate_regular_partition(&s, ps(&[0, 1]), &[PointSet::EMPTY, PointSet::EMPTY, ps(&[1]), ps(&[0])])
                .unwrap(),
        };
        assert_eq!(
            validate_consistent_family(&id, 1, vec![l0.clone(), swapped.clone(), incoherent.clone()], None).unwrap_err(),
            Error::CoherenceViolated(1, 0)
        );
        assert_eq!(
            validate_consistent_family(&id, 0, vec![l0, l1, incoherent], None).unwrap_err(),
            Error::NeighborhoodNotNested(2)
        );
    }

    #[test]
    fn level_values() {
        let d2 = FiniteSpace::discrete(2);
        let id = FiberedMap::identity(&d2);
        let full = d2.points();
        let lv = |blocks: &[PointSet]| Level {
            o: full,
            partition: validate_regular_partition(&d2, full, blocks).unwrap(),
        };
        let e = PointSet::EMPTY;
        let fam = validate_consistent_family(
            &id,
            0,
            vec![lv(&[full]), lv(&[ps(&[0]), ps(&[1])]), lv(&[ps(&[0]), e, e, ps(&[1])])],
            Some(1),
        )
        .unwrap();
        let phi2 = stepwise_function(&id, &fam, 2).unwrap();
        assert_eq!(phi2, RationalFunction::new(vec![qi(0), qi(1)]));
        let lim = assemble_limit(&id, &fam).unwrap();
        assert!(lim.exact);
        assert_eq!(lim.phi, RationalFunction::new(vec![qi(0), qi(1)]));
        assert_eq!(lim.error_bound, q(1, 3));
    }
}
