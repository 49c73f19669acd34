//! Exhaustive and sampled enumeration of small spaces and continuous maps,
//! with classification and the implication checks between classes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classical::is_vedenisov;
use crate::normality::deciders::{
    is_co_perfectly_normal, is_co_sigma_perfectly_normal, is_hereditarily_normal, is_normal, is_prenormal,
    is_sigma_normal, is_sigma_prenormal,
};
use crate::normality::perfect::{functional_characterization, is_perfectly_normal_with};
use crate::set::PointSet;
use crate::space_core::{carrier_is_f_sigma, submap, FiberedMap, FiniteSpace};
use crate::urysohn_tietze::{SeparatorCache, DEFAULT_DEPTH};

/// Every permutation of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

fn map_set(s: PointSet, perm: &[usize]) -> PointSet {
    PointSet::from_points(s.iter().map(|x| perm[x]))
}

/// Lexicographically least sorted open-set sequence over all relabelings.
pub fn canonical_opens(space: &FiniteSpace, perms: &[Vec<usize>]) -> Vec<PointSet> {
    perms
        .iter()
        .map(|p| {
            let mut v: Vec<PointSet> = space.opens().iter().map(|&o| map_set(o, p)).collect();
            v.sort();
            v
        })
        .min()
        .unwrap_or_default()
}

/// Every labeled topology on `n` points, as neighborhood vectors.
pub fn labeled_spaces(n: usize) -> Vec<FiniteSpace> {
    let mut out = Vec::new();
    let mut nbhd = vec![PointSet::EMPTY; n];
    fill(n, 0, &mut nbhd, &mut out);
    out
}

fn fill(n: usize, x: usize, nbhd: &mut Vec<PointSet>, out: &mut Vec<FiniteSpace>) {
    if x == n {
        let ok = (0..n).all(|a| nbhd[a].iter().all(|z| nbhd[z].is_subset(nbhd[a])));
        if ok {
            out.push(FiniteSpace::from_neighborhoods(nbhd.clone()).expect("transitive preorder"));
        }
        return;
    }
    let others = PointSet::full(n).minus(PointSet::singleton(x));
    for s in others.subsets() {
        nbhd[x] = s.with(x);
        fill(n, x + 1, nbhd, out);
    }
}

/// One space per homeomorphism class on `n` points, ordered by canonical
/// form and presented in canonical labeling.
pub fn spaces_up_to_homeomorphism(n: usize) -> Vec<FiniteSpace> {
    let perms = permutations(n);
    let mut forms: Vec<Vec<PointSet>> = labeled_spaces(n)
        .iter()
        .map(|s| canonical_opens(s, &perms))
        .collect();
    forms.sort();
    forms.dedup();
    forms
        .into_iter()
        .map(|opens| crate::space_core::validate_topology_with_cap(n, &opens, crate::set::MASK_BITS).expect("valid"))
        .collect()
}

/// Every continuous map `X -> Y`, tables in lexicographic order.
pub fn continuous_maps(x: &FiniteSpace, y: &FiniteSpace) -> Vec<FiberedMap> {
    let nx = x.n();
    let ny = y.n();
    let mut out = Vec::new();
    if ny == 0 {
        return out;
    }
    let mut table = vec![0usize; nx];
    loop {
        let monotone = (0..nx).all(|a| {
            x.minimal_open_neighborhood(a)
                .iter()
                .all(|z| y.minimal_open_neighborhood(table[a]).contains(table[z]))
        });
        if monotone {
            out.push(FiberedMap::new(x.clone(), y.clone(), table.clone()).expect("monotone tables are continuous"));
        }
        let mut i = nx;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            table[i] += 1;
            if table[i] < ny {
                break;
            }
            table[i] = 0;
        }
    }
}

/// All instances with `|X| >= 1`, `|Y| >= 1` and `|X| + |Y| <= total`.
pub fn instances_up_to(total: usize) -> Vec<FiberedMap> {
    let spaces: Vec<Vec<FiniteSpace>> = (0..total).map(spaces_up_to_homeomorphism).collect();
    let mut out = Vec::new();
    for ny in 1..total {
        for nx in 1..=total - ny {
            for y in &spaces[ny] {
                for x in &spaces[nx] {
                    out.extend(continuous_maps(x, y));
                }
            }
        }
    }
    out
}

/// All instances with `1 <= |X|, |Y| <= n`.
pub fn instances_with_sides(n: usize) -> Vec<FiberedMap> {
    let spaces: Vec<FiniteSpace> = (1..=n).flat_map(spaces_up_to_homeomorphism).collect();
    let mut out = Vec::new();
    for y in &spaces {
        for x in &spaces {
            out.extend(continuous_maps(x, y));
        }
    }
    out
}

/// A random topology on `n` points: random relation, reflexive-transitive
/// closure.
pub fn random_space(rng: &mut ChaCha8Rng, n: usize) -> FiniteSpace {
    let mut nbhd: Vec<PointSet> = (0..n)
        .map(|x| {
            let bits = rng.gen::<u32>() & PointSet::full(n).bits();
            let sparse = bits & rng.gen::<u32>();
            PointSet(sparse).with(x)
        })
        .collect();
    loop {
        let next: Vec<PointSet> = nbhd
            .iter()
            .map(|u| u.iter().fold(*u, |acc, z| acc.union(nbhd[z])))
            .collect();
        if next == nbhd {
            break;
        }
        nbhd = next;
    }
    FiniteSpace::from_neighborhoods(nbhd).expect("closure is a preorder")
}

/// A random continuous map between random spaces; the constant map when
/// rejection sampling runs dry.
pub fn random_instance(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> FiberedMap {
    let x = random_space(rng, nx);
    let y = random_space(rng, ny);
    for _ in 0..256 {
        let table: Vec<usize> = (0..nx).map(|_| rng.gen_range(0..ny)).collect();
        if let Ok(f) = FiberedMap::new(x.clone(), y.clone(), table) {
            return f;
        }
    }
    FiberedMap::new(x, y, vec![0; nx]).expect("constant maps are continuous")
}

/// `count` random instances with `|X| = n` and `1 <= |Y| <= 3`.
pub fn sample_instances(seed: u64, n: usize, count: usize) -> Vec<FiberedMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let ny = rng.gen_range(1..=3);
            random_instance(&mut rng, n, ny)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub prenormal: bool,
    pub normal: bool,
    pub sigma_prenormal: bool,
    pub sigma_normal: bool,
    pub perfectly_normal: bool,
    pub co_perfectly_normal: bool,
    pub co_sigma_perfectly_normal: bool,
    pub hereditarily_normal: bool,
    pub functional_condition: bool,
    pub constant: bool,
    /// The classical condition on the domain, for constant maps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vedenisov: Option<bool>,
}

pub fn classify(f: &FiberedMap) -> Classification {
    let constant = f.codomain().n() == 1;
    Classification {
        prenormal: is_prenormal(f).holds,
        normal: is_normal(f).holds,
        sigma_prenormal: is_sigma_prenormal(f).holds,
        sigma_normal: is_sigma_normal(f).holds,
        perfectly_normal: is_perfectly_normal_with(f, DEFAULT_DEPTH, &mut SeparatorCache::new()).holds,
        co_perfectly_normal: is_co_perfectly_normal(f).holds,
        co_sigma_perfectly_normal: is_co_sigma_perfectly_normal(f).holds,
        hereditarily_normal: is_hereditarily_normal(f).holds,
        functional_condition: functional_characterization(f).holds,
        constant,
        vedenisov: constant.then(|| is_vedenisov(f.domain())),
    }
}

/// Every class implication that fails on `f`.
pub fn implication_violations(f: &FiberedMap, c: &Classification) -> Vec<String> {
    let mut v = Vec::new();
    let mut need = |ok: bool, what: &str| {
        if !ok {
            v.push(what.to_string());
        }
    };
    need(!c.co_sigma_perfectly_normal || c.perfectly_normal, "co-sigma-perfect => perfect");
    need(!c.perfectly_normal || c.co_perfectly_normal, "perfect => co-perfect");
    need(!c.perfectly_normal || c.prenormal, "perfect => prenormal");
    need(!c.perfectly_normal || c.hereditarily_normal, "perfect => hereditarily normal");
    need(!c.sigma_normal || c.normal, "sigma-normal => normal");
    need(!c.normal || c.prenormal, "normal => prenormal");
    need(!c.sigma_normal || c.sigma_prenormal, "sigma-normal => sigma-prenormal");
    need(c.functional_condition == c.co_sigma_perfectly_normal, "functional condition <=> co-sigma-perfect");
    if c.constant {
        need(
            c.prenormal == c.normal && c.normal == c.sigma_prenormal && c.sigma_prenormal == c.sigma_normal,
            "constant map: prenormal <=> normal <=> sigma-prenormal <=> sigma-normal",
        );
        need(
            c.co_perfectly_normal == c.perfectly_normal && c.perfectly_normal == c.co_sigma_perfectly_normal,
            "constant map: perfect notions coincide",
        );
        need(c.vedenisov == Some(c.perfectly_normal), "constant map: perfect <=> classical Vedenisov");
    }
    if c.perfectly_normal || c.sigma_normal {
        for carrier in f.domain().points().subsets() {
            let sub = submap(f, carrier).expect("submappings are continuous");
            let mut cache = SeparatorCache::new();
            if c.perfectly_normal && !is_perfectly_normal_with(&sub.map, DEFAULT_DEPTH, &mut cache).holds {
                need(false, &format!("perfect normality inherited by the submapping on {carrier}"));
            }
            if c.sigma_normal && carrier_is_f_sigma(f, carrier).holds && !is_sigma_normal(&sub.map).holds {
                need(false, &format!("sigma-normality inherited by the F_sigma submapping on {carrier}"));
            }
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CensusRecord {
    pub id: usize,
    #[serde(rename = "X")]
    pub x: FiniteSpace,
    #[serde(rename = "Y")]
    pub y: FiniteSpace,
    pub table: Vec<usize>,
    pub classes: Classification,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CensusCounts {
    pub instances: usize,
    pub prenormal: usize,
    pub normal: usize,
    pub sigma_normal: usize,
    pub perfectly_normal: usize,
    pub co_perfectly_normal: usize,
    pub co_sigma_perfectly_normal: usize,
    pub hereditarily_normal: usize,
    /// Normal instances that are not σ-normal.
    pub normal_not_sigma_normal: usize,
    pub violations: usize,
}

pub fn census_records(instances: &[FiberedMap]) -> Vec<CensusRecord> {
    instances
        .par_iter()
        .enumerate()
        .map(|(id, f)| {
            let classes = classify(f);
            let violations = implication_violations(f, &classes);
            CensusRecord {
                id,
                x: f.domain().clone(),
                y: f.codomain().clone(),
                table: f.table().to_vec(),
                classes,
                violations,
            }
        })
        .collect()
}

pub fn tally(records: &[CensusRecord]) -> CensusCounts {
    let mut c = CensusCounts { instances: records.len(), ..CensusCounts::default() };
    for r in records {
        let k = &r.classes;
        c.prenormal += k.prenormal as usize;
        c.normal += k.normal as usize;
        c.sigma_normal += k.sigma_normal as usize;
        c.perfectly_normal += k.perfectly_normal as usize;
        c.co_perfectly_normal += k.co_perfectly_normal as usize;
        c.co_sigma_perfectly_normal += k.co_sigma_perfectly_normal as usize;
        c.hereditarily_normal += k.hereditarily_normal as usize;
        c.normal_not_sigma_normal += (k.normal && !k.sigma_normal) as usize;
        c.violations += r.violations.len();
    }
    c
}
