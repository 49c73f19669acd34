//! Cross-checks of the equivalence theorems on explicit instances.
//!
//! Each condition is evaluated by its own procedure on every
//! `(O, F, T, y)` with `O` a nonempty open set of the codomain, `F`, `T`
//! nonempty disjoint closed sets of `f^{-1} O` and `y ∈ O`. A condition
//! holds for an instance when it holds for all of them.

use num::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::normality::builder::{build_binary_partitions, build_binary_partitions_sigma, PartitionProblem, SearchMode};
use crate::normality::deciders::{
    canonical_decomposition, closed_subsets, is_co_sigma_perfectly_normal, is_normal, is_sigma_normal,
    separate_within,
};
use crate::normality::perfect::functional_characterization;
use crate::oscillation::{osc_on_set, q, step, RationalFunction};
use crate::partitions::{increments, stepwise_function, ConsistentBinaryFamily};
use crate::set::PointSet;
use crate::space_core::{FiberedMap, FiniteSpace};
use crate::urysohn_tietze::{
    separation_from_extension, sigma_separator_family, verify_condition_d, ExtensionResult, SeparatorCache,
    TietzeConfig,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HarnessConfig {
    pub depth: usize,
    pub tietze: TietzeConfig,
}

impl Default for HarnessConfig {
    fn default() -> HarnessConfig {
        HarnessConfig { depth: super::DEFAULT_DEPTH, tietze: TietzeConfig::default() }
    }
}

/// Truth values of the four separation conditions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SeparationConditions {
    /// Separation by neighborhoods, from the decider.
    pub a: bool,
    /// Partition-family builder success with validation.
    pub b: bool,
    /// A separating function exists: no component of `f^{-1} U_y` meets
    /// both sets.
    pub c: bool,
    /// The constructed separating function passes its inclusions.
    pub c_constructed: bool,
    /// The Tietze extension exists and passes its conditions.
    pub d: bool,
    pub cases: usize,
    /// Cases on which the per-case values differ.
    pub divergent_cases: usize,
}

/// Truth values of the family-separation conditions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SigmaConditions {
    pub decider: bool,
    pub builder: bool,
    pub family: bool,
    pub cases: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceReport {
    pub id: usize,
    #[serde(rename = "X")]
    pub x: FiniteSpace,
    #[serde(rename = "Y")]
    pub y: FiniteSpace,
    pub table: Vec<usize>,
    pub separation: SeparationConditions,
    pub sigma: SigmaConditions,
    pub co_sigma_perfect: bool,
    pub functional_condition: bool,
    pub families_checked: usize,
    pub stepwise_violations: usize,
    pub extensions_checked: usize,
    pub residual_violations: usize,
    pub mismatches: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HarnessReport {
    pub instances: usize,
    pub cases: usize,
    pub mismatches: usize,
    pub stepwise_violations: usize,
    pub residual_violations: usize,
    pub records: Vec<InstanceReport>,
}

/// Separating function exists over `y` exactly when no component of
/// `f^{-1} U_y` meets both sets.
pub fn separator_exists(f: &FiberedMap, zero_set: PointSet, target: PointSet, y: usize) -> bool {
    let w = f.preimage(f.codomain().minimal_open_neighborhood(y));
    f.domain()
        .components_in(w)
        .iter()
        .all(|c| c.is_disjoint(zero_set) || c.is_disjoint(target))
}

/// Violations of the stepwise oscillation and increment bounds.
pub fn stepwise_bound_violations(f: &FiberedMap, family: &ConsistentBinaryFamily) -> usize {
    let xs = f.domain();
    let mut bad = 0;
    for n in 1..=family.depth() {
        match stepwise_function(f, family, n) {
            Ok(phi) if osc_on_set(xs, &phi, family.carrier(n)) <= step(n) => {}
            _ => bad += 1,
        }
    }
    for (n, inc) in increments(f, family).iter().enumerate() {
        if *inc > step(n + 1) {
            bad += 1;
        }
    }
    bad
}

/// Violations of the residual law, the norm contract, and the agreement
/// or residual-bound contract of one extension run.
pub fn residual_violations(
    f: &FiberedMap,
    zero_set: PointSet,
    target: &RationalFunction,
    ext: &ExtensionResult,
) -> usize {
    let two_thirds = q(2, 3);
    let mut bad = ext
        .residuals
        .windows(2)
        .filter(|p| p[1] > &p[0] * &two_thirds)
        .count();
    let fw = zero_set.inter(f.preimage(ext.oy));
    let norm_target = target.norm_on(zero_set);
    let domain = f.domain().points();
    if ext.phi.norm_on(domain) > norm_target || ext.partial_sum.norm_on(domain) > norm_target {
        bad += 1;
    }
    let sup = target.distance_on(&ext.partial_sum, fw);
    if ext.exact {
        bad += (!sup.is_zero()) as usize;
    } else {
        let bound = (0..ext.iterations).fold(ext.residuals[0].clone(), |b, _| b * &two_thirds);
        bad += (sup > bound || bound != ext.residual_bound) as usize;
    }
    bad += (!ext.phi.agrees_on(target, fw)) as usize;
    bad
}

/// Run every cross-check on one instance.
pub fn check_instance(id: usize, f: &FiberedMap, cfg: &HarnessConfig) -> InstanceReport {
    let xs = f.domain();
    let ys = f.codomain();
    let mut cache = SeparatorCache::new();
    let mut sep = SeparationConditions { a: true, b: true, c: true, c_constructed: true, d: true, ..Default::default() };
    let mut sig = SigmaConditions { builder: true, family: true, ..Default::default() };
    let mut mismatches = Vec::new();
    let mut families_checked = 0;
    let mut stepwise = 0;
    let mut extensions = 0;
    let mut residual = 0;
    let normal = is_normal(f).holds;
    sep.a = normal;

    for &o in ys.opens().iter().filter(|o| !o.is_empty()) {
        let wo = f.preimage(o);
        let closeds: Vec<PointSet> = closed_subsets(xs, wo).into_iter().filter(|c| !c.is_empty()).collect();
        for &zero in &closeds {
            for &target in closeds.iter().filter(|t| t.is_disjoint(zero)) {
                let pieces = canonical_decomposition(xs, wo, target);
                for y in o.iter() {
                    sep.cases += 1;
                    let a = separate_within(f, o, zero, target, y).is_some();
                    let problem = PartitionProblem::new(o, zero, vec![target], y);
                    let b = match build_binary_partitions(f, &problem, cfg.depth, SearchMode::Minimal) {
                        Ok(fam) => {
                            families_checked += 1;
                            stepwise += stepwise_bound_violations(f, &fam);
                            true
                        }
                        Err(_) => false,
                    };
                    let c = separator_exists(f, zero, target, y);
                    let c_constructed = cache
                        .get(f, o, zero, target, y, cfg.depth)
                        .map(|s| s.checks.holds)
                        .unwrap_or(false);
                    let d = match separation_from_extension(f, o, zero, target, y, &cfg.tietze, &mut cache) {
                        Ok((_, ext)) => {
                            extensions += 1;
                            let both = zero.union(target);
                            let phit = RationalFunction::indicator(xs.n(), target);
                            residual += residual_violations(f, both, &phit, &ext);
                            verify_condition_d(f, o, both, &phit, &ext.phi, y).holds
                        }
                        Err(_) => false,
                    };
                    sep.b &= b;
                    sep.c &= c;
                    sep.c_constructed &= c_constructed;
                    sep.d &= d;
                    if !(a == b && b == c && c == c_constructed && c_constructed == d) {
                        sep.divergent_cases += 1;
                        if normal {
                            mismatches.push(format!(
                                "normal instance, O={o} F={zero} T={target} y={y}: a={a} b={b} c={c} c_constructed={c_constructed} d={d}"
                            ));
                        }
                    }
                    if c_constructed && !c {
                        mismatches.push(format!("constructed separator without an admissible one at F={zero} T={target} y={y}"));
                    }

                    sig.cases += 1;
                    let sproblem = PartitionProblem::new(o, zero, pieces.clone(), y);
                    let sb = build_binary_partitions_sigma(f, &sproblem, cfg.depth, SearchMode::Minimal).is_ok();
                    let sf = sigma_separator_family(f, o, zero, &pieces, y, cfg.depth)
                        .map(|r| r.checks.holds)
                        .unwrap_or(false);
                    sig.builder &= sb;
                    sig.family &= sf;
                }
            }
        }
    }
    sig.decider = is_sigma_normal(f).holds;
    if !(sep.a == sep.b && sep.b == sep.c && sep.c == sep.c_constructed && sep.c_constructed == sep.d) {
        mismatches.push(format!(
            "separation conditions disagree: a={} b={} c={} c_constructed={} d={}",
            sep.a, sep.b, sep.c, sep.c_constructed, sep.d
        ));
    }
    if !(sig.decider == sig.builder && sig.builder == sig.family) {
        mismatches.push(format!(
            "family conditions disagree: decider={} builder={} family={}",
            sig.decider, sig.builder, sig.family
        ));
    }
    let co_sigma_perfect = is_co_sigma_perfectly_normal(f).holds;
    let functional_condition = functional_characterization(f).holds;
    if co_sigma_perfect != functional_condition {
        mismatches.push(format!(
            "co-sigma-perfect={co_sigma_perfect} but functional condition={functional_condition}"
        ));
    }
    InstanceReport {
        id,
        x: xs.clone(),
        y: ys.clone(),
        table: f.table().to_vec(),
        separation: sep,
        sigma: sig,
        co_sigma_perfect,
        functional_condition,
        families_checked,
        stepwise_violations: stepwise,
        extensions_checked: extensions,
        residual_violations: residual,
        mismatches,
    }
}

/// Check every instance in parallel; records keep the input order.
pub fn equivalence_harness(instances: &[FiberedMap], cfg: &HarnessConfig) -> HarnessReport {
    let records: Vec<InstanceReport> = instances
        .par_iter()
        .enumerate()
        .map(|(id, f)| check_instance(id, f, cfg))
        .collect();
    HarnessReport {
        instances: records.len(),
        cases: records.iter().map(|r| r.separation.cases).sum(),
        mismatches: records.iter().map(|r| r.mismatches.len()).sum(),
        stepwise_violations: records.iter().map(|r| r.stepwise_violations).sum(),
        residual_violations: records.iter().map(|r| r.residual_violations).sum(),
        records,
    }
}
