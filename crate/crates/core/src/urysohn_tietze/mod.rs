//! Separating functions built from partition families, the fiberwise
//! Tietze iteration, and executable forms of the separation and extension
//! conditions.

pub mod harness;

use std::collections::HashMap;

use num::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::normality::builder::{
    build_binary_partitions, build_binary_partitions_sigma, neighborhood_candidates, PartitionProblem, SearchMode,
};
use crate::normality::deciders::{validate_separation_certificate, SeparationCertificate};
use crate::oscillation::{
    dyadic, is_f_continuous_at, is_f_continuous_at_in, is_f_equicontinuous_at, osc_on_set, q, q_string, q_vec, qi,
    EquicontinuityCertificate, RationalFunction, Q,
};
use crate::partitions::{assemble_limit, ApproximateLimitFunction, ConsistentBinaryFamily};
use crate::set::PointSet;
use crate::space_core::FiberedMap;

pub use harness::{equivalence_harness, HarnessConfig, HarnessReport, InstanceReport};

/// Default partition depth.
pub const DEFAULT_DEPTH: usize = 6;

/// Largest `k` in the sweep `ε = 1/2^k`.
pub const EPSILON_SWEEP: usize = 12;

fn check_region(f: &FiberedMap, o: PointSet, y: usize) -> Result<PointSet> {
    let ys = f.codomain();
    ys.check_set(o)?;
    ys.check_point(y)?;
    if !ys.is_open(o) {
        return Err(Error::NotOpen(o));
    }
    if !o.contains(y) {
        return Err(Error::PointNotInRegion(y));
    }
    Ok(f.preimage(o))
}

/// Independent evaluation of the separating-function inclusions on
/// `W = f^{-1} Oy`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionCReport {
    pub y: usize,
    #[serde(rename = "Oy")]
    pub oy: PointSet,
    #[serde(with = "q_string")]
    pub osc: Q,
    pub osc_below_half: bool,
    pub f_continuous: bool,
    pub in_unit_interval: bool,
    pub zero_on_f: bool,
    pub one_on_t: bool,
    pub f_misses_closure: bool,
    pub t_in_interior: bool,
    pub holds: bool,
}

pub fn verify_condition_c(
    f: &FiberedMap,
    zero_set: PointSet,
    target: PointSet,
    y: usize,
    phi: &RationalFunction,
    oy: PointSet,
) -> ConditionCReport {
    let xs = f.domain();
    let ys = f.codomain();
    let nbhd_ok = y < ys.n() && ys.is_open(oy) && oy.contains(y) && phi.n() == xs.n();
    let w = f.preimage(oy);
    let half = q(1, 2);
    let osc = osc_on_set(xs, phi, w);
    let upper = phi.level_set(|v| *v >= half).inter(w);
    let fw = zero_set.inter(w);
    let tw = target.inter(w);
    let zero = phi.level_set(|v| v.is_zero());
    let one = phi.level_set(|v| *v == qi(1));
    let mut r = ConditionCReport {
        y,
        oy,
        osc_below_half: osc < half,
        osc,
        f_continuous: nbhd_ok && is_f_continuous_at(f, phi, y).holds,
        in_unit_interval: phi.values().iter().all(|v| *v >= qi(0) && *v <= qi(1)),
        zero_on_f: fw.is_subset(zero),
        one_on_t: tw.is_subset(one),
        f_misses_closure: fw.is_disjoint(xs.closure_in(w, upper)),
        t_in_interior: tw.is_subset(xs.interior_in(w, upper)),
        holds: false,
    };
    r.holds = nbhd_ok
        && r.osc_below_half
        && r.f_continuous
        && r.in_unit_interval
        && r.zero_on_f
        && r.one_on_t
        && r.f_misses_closure
        && r.t_in_interior;
    r
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeparatorResult {
    pub phi: ApproximateLimitFunction,
    #[serde(rename = "Oy")]
    pub oy: PointSet,
    pub checks: ConditionCReport,
    pub family: ConsistentBinaryFamily,
}

/// First neighborhood in `chain`, then `U_y`, on whose preimage every
/// function oscillates by less than `bound`.
fn small_oscillation_nbhd(f: &FiberedMap, chain: &[PointSet], y: usize, phis: &[&RationalFunction], bound: &Q) -> PointSet {
    let uy = f.codomain().minimal_open_neighborhood(y);
    chain
        .iter()
        .copied()
        .chain(std::iter::once(uy))
        .find(|&o| {
            let w = f.preimage(o);
            phis.iter().all(|p| osc_on_set(f.domain(), p, w) < *bound)
        })
        .unwrap_or(uy)
}

/// A function `0` on `F` and `1` on `T` near the fiber over `y`, from the
/// limit of a consistent family of binary partitions.
pub fn build_separator(
    f: &FiberedMap,
    o: PointSet,
    zero_set: PointSet,
    target: PointSet,
    y: usize,
    depth: usize,
) -> Result<SeparatorResult> {
    let problem = PartitionProblem::new(o, zero_set, vec![target], y);
    let family = build_binary_partitions(f, &problem, depth, SearchMode::Minimal)?;
    let lim = assemble_limit(f, &family)?;
    let chain: Vec<PointSet> = family.neighborhoods().into_iter().skip(2.min(family.depth())).collect();
    let oy = small_oscillation_nbhd(f, &chain, y, &[&lim.phi], &q(1, 2));
    let checks = verify_condition_c(f, zero_set, target, y, &lim.phi, oy);
    if !checks.holds {
        return Err(Error::CheckFailed(format!("separator fails its inclusions: {checks:?}")));
    }
    Ok(SeparatorResult { phi: lim, oy, checks, family })
}

/// Memo of separator runs keyed by `(O, F, T, y, depth)`.
#[derive(Debug, Default)]
pub struct SeparatorCache {
    map: HashMap<(u32, u32, u32, usize, usize), Result<SeparatorResult>>,
}

impl SeparatorCache {
    pub fn new() -> SeparatorCache {
        SeparatorCache::default()
    }

    pub fn get(
        &mut self,
        f: &FiberedMap,
        o: PointSet,
        zero_set: PointSet,
        target: PointSet,
        y: usize,
        depth: usize,
    ) -> Result<SeparatorResult> {
        self.map
            .entry((o.bits(), zero_set.bits(), target.bits(), y, depth))
            .or_insert_with(|| build_separator(f, o, zero_set, target, y, depth))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TietzeConfig {
    pub depth: usize,
    #[serde(with = "q_string")]
    pub tolerance: Q,
    pub max_iter: Option<usize>,
}

impl Default for TietzeConfig {
    fn default() -> TietzeConfig {
        TietzeConfig { depth: DEFAULT_DEPTH, tolerance: q(1, 1024), max_iter: None }
    }
}

/// Smallest `N` with `(2/3)^N μ < tolerance`.
pub fn iterations_for(mu: &Q, tolerance: &Q) -> usize {
    let ratio = q(2, 3);
    let mut bound = mu.clone();
    let mut n = 0;
    while bound >= *tolerance {
        bound = &bound * &ratio;
        n += 1;
    }
    n
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtensionResult {
    pub y: usize,
    /// `U_y`, the neighborhood the iteration runs over.
    #[serde(rename = "Oy")]
    pub oy: PointSet,
    /// The partial sum, with the exact limit substituted on every
    /// component of `f^{-1} U_y` that meets `F`.
    pub phi: RationalFunction,
    /// `Σ_{n<N} ψ_n`.
    pub partial_sum: RationalFunction,
    pub corrections: Vec<RationalFunction>,
    /// Points of `F` where `phi` equals the target.
    pub agreement: PointSet,
    /// `μ_0, ..., μ_N`.
    #[serde(with = "q_vec")]
    pub residuals: Vec<Q>,
    pub iterations: usize,
    /// Whether the loop reached `μ_N = 0`.
    pub exact: bool,
    /// `(2/3)^N μ_0`.
    #[serde(with = "q_string")]
    pub residual_bound: Q,
    /// Largest `|target - partial_sum|` on `F ∩ f^{-1} U_y`.
    #[serde(with = "q_string")]
    pub sup_difference: Q,
    pub norm_ok: bool,
}

pub fn tietze_extend(
    f: &FiberedMap,
    o: PointSet,
    zero_set: PointSet,
    target: &RationalFunction,
    y: usize,
    cfg: &TietzeConfig,
) -> Result<ExtensionResult> {
    tietze_extend_cached(f, o, zero_set, target, y, cfg, &mut SeparatorCache::new())
}

/// Extend `target`, given on the closed set `F` of `f^{-1} O`, to an
/// f-continuous function on `f^{-1} O` by summing rescaled separators of
/// the residual's sublevel and superlevel sets.
pub fn tietze_extend_cached(
    f: &FiberedMap,
    o: PointSet,
    zero_set: PointSet,
    target: &RationalFunction,
    y: usize,
    cfg: &TietzeConfig,
    cache: &mut SeparatorCache,
) -> Result<ExtensionResult> {
    let xs = f.domain();
    let wo = check_region(f, o, y)?;
    target.check_domain(xs)?;
    xs.check_set(zero_set)?;
    if !xs.is_closed_in(wo, zero_set) {
        return Err(Error::NotClosed(zero_set));
    }
    if cfg.depth == 0 {
        return Err(Error::DepthRange(0));
    }
    if !cfg.tolerance.is_positive() {
        return Err(Error::Validation { object: "tolerance".into(), reason: "must be positive".into() });
    }
    if !is_f_continuous_at_in(f, zero_set, target, y) {
        return Err(Error::PreconditionNotFContinuous(y));
    }
    let uy = f.codomain().minimal_open_neighborhood(y);
    let w = f.preimage(uy);
    let fw = zero_set.inter(w);
    let mu0 = target.norm_on(fw);
    let planned = iterations_for(&mu0, &cfg.tolerance);
    let limit = cfg.max_iter.unwrap_or(planned);

    let third = q(1, 3);
    let two_thirds = q(2, 3);
    let n_pts = xs.n();
    let mut residual = target.clone();
    let mut partial = RationalFunction::zero(n_pts);
    let mut corrections = Vec::new();
    let mut residuals = vec![mu0.clone()];
    for _ in 0..limit {
        let mu = residuals.last().expect("nonempty").clone();
        if mu.is_zero() {
            break;
        }
        let cut = &mu * &third;
        let neg_cut = -cut.clone();
        let lower = residual.level_set(|v| *v <= neg_cut).inter(fw);
        let upper = residual.level_set(|v| *v >= cut).inter(fw);
        let lower = xs.closure_in(w, lower);
        let upper = xs.closure_in(w, upper);
        let sep = cache.get(f, uy, lower, upper, y, cfg.depth)?;
        let s = &sep.phi.phi;
        let psi = restrict_to(&s.map(|v| (qi(2) * v - qi(1)) * &cut), wo);
        if psi.norm_on(wo) > cut {
            return Err(Error::CheckFailed("correction exceeds a third of the residual".into()));
        }
        let scaled = osc_on_set(xs, s, w) * qi(2) * &cut;
        if osc_on_set(xs, &psi, w) != scaled {
            return Err(Error::CheckFailed("rescaling changed the oscillation ratio".into()));
        }
        partial = partial.add(&psi);
        residual = residual.sub(&psi);
        let next = residual.norm_on(fw);
        if next > &mu * &two_thirds {
            return Err(Error::CheckFailed("residual did not shrink by 2/3".into()));
        }
        corrections.push(psi);
        residuals.push(next);
    }
    let iterations = corrections.len();
    let mu_n = residuals.last().expect("nonempty").clone();
    let exact = mu_n.is_zero();
    if cfg.max_iter.is_some() && !exact && mu_n >= cfg.tolerance {
        return Err(Error::MaxIterReached(mu_n.to_string()));
    }
    let residual_bound = (0..iterations).fold(mu0.clone(), |b, _| b * &two_thirds);
    let sup_difference = target.distance_on(&partial, fw);
    if sup_difference > residual_bound || sup_difference != mu_n {
        return Err(Error::CheckFailed("reported residual disagrees with the partial sum".into()));
    }

    let mut phi = partial.clone();
    for comp in xs.components_in(w) {
        let hit = comp.inter(fw);
        let Some(first) = hit.iter().next() else { continue };
        let v = target.get(first).clone();
        if hit.iter().any(|x| *target.get(x) != v) {
            return Err(Error::CheckFailed(format!("target is not constant on the component {comp}")));
        }
        for x in comp.iter() {
            phi.set(x, v.clone());
        }
    }
    let agreement = zero_set.inter(wo).iter().filter(|&x| phi.get(x) == target.get(x)).collect::<Vec<_>>();
    let agreement = PointSet::from_points(agreement);
    let norm_ok = phi.norm_on(wo) <= target.norm_on(zero_set) && partial.norm_on(wo) <= target.norm_on(zero_set);
    Ok(ExtensionResult {
        y,
        oy: uy,
        phi,
        partial_sum: partial,
        corrections,
        agreement,
        residuals,
        iterations,
        exact,
        residual_bound,
        sup_difference,
        norm_ok,
    })
}

fn restrict_to(phi: &RationalFunction, s: PointSet) -> RationalFunction {
    let mut out = RationalFunction::zero(phi.n());
    for x in s.iter() {
        out.set(x, phi.get(x).clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EpsilonWitness {
    pub k: usize,
    /// A neighborhood on whose preimage the error on `F` is below `1/2^k`.
    pub nbhd: Option<PointSet>,
}

/// Independent evaluation of the extension conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionDReport {
    pub y: usize,
    /// Neighborhood over which `phi` agrees with the target on `F`.
    #[serde(rename = "G")]
    pub g: Option<PointSet>,
    pub agreement_ok: bool,
    #[serde(with = "q_string")]
    pub norm_phi: Q,
    #[serde(with = "q_string")]
    pub norm_target: Q,
    pub norm_ok: bool,
    pub epsilons: Vec<EpsilonWitness>,
    pub epsilon_ok: bool,
    /// Agreement already over the minimal neighborhood of `y`.
    pub minimal_neighborhood_ok: bool,
    pub f_continuous: bool,
    pub holds: bool,
}

pub fn verify_condition_d(
    f: &FiberedMap,
    o: PointSet,
    zero_set: PointSet,
    target: &RationalFunction,
    phi: &RationalFunction,
    y: usize,
) -> ConditionDReport {
    let ys = f.codomain();
    let region_ok = y < ys.n() && ys.is_open(o) && o.contains(y);
    let wo = f.preimage(o);
    let cands = if region_ok { neighborhood_candidates(ys, o, y, SearchMode::Minimal) } else { Vec::new() };
    let error_on = |g: PointSet| target.distance_on(phi, zero_set.inter(f.preimage(g)));
    let g = cands.iter().copied().find(|&g| error_on(g).is_zero());
    let uy = ys.minimal_open_neighborhood(y.min(ys.n().saturating_sub(1)));
    let minimal_neighborhood_ok = region_ok && error_on(uy).is_zero();
    let epsilons: Vec<EpsilonWitness> = (0..=EPSILON_SWEEP)
        .map(|k| {
            let eps = dyadic(k);
            EpsilonWitness { k, nbhd: cands.iter().copied().find(|&g| error_on(g) < eps) }
        })
        .collect();
    let epsilon_ok = region_ok && epsilons.iter().all(|e| e.nbhd.is_some());
    let norm_phi = phi.norm_on(wo);
    let norm_target = target.norm_on(zero_set.inter(wo));
    let norm_ok = norm_phi <= norm_target;
    let f_continuous = region_ok && is_f_continuous_at(f, phi, y).holds;
    let agreement_ok = g.is_some();
    ConditionDReport {
        y,
        g,
        agreement_ok,
        norm_ok,
        norm_phi,
        norm_target,
        epsilons,
        epsilon_ok,
        minimal_neighborhood_ok,
        f_continuous,
        holds: region_ok && agreement_ok && norm_ok && epsilon_ok && f_continuous,
    }
}

/// Disjoint neighborhoods of `F` and `T` read off an extension of the
/// function that is 0 on `F` and 1 on `T`.
pub fn separation_from_extension(
    f: &FiberedMap,
    o: PointSet,
    zero_set: PointSet,
    target: PointSet,
    y: usize,
    cfg: &TietzeConfig,
    cache: &mut SeparatorCache,
) -> Result<(SeparationCertificate, ExtensionResult)> {
    let xs = f.domain();
    let wo = check_region(f, o, y)?;
    for s in [zero_set, target] {
        xs.check_set(s)?;
        if !xs.is_closed_in(wo, s) {
            return Err(Error::NotClosed(s));
        }
    }
    if !zero_set.is_disjoint(target) {
        return Err(Error::Overlap(zero_set, target));
    }
    let both = zero_set.union(target);
    let phit = RationalFunction::indicator(xs.n(), target);
    let ext = tietze_extend_cached(f, o, both, &phit, y, cfg, cache)?;
    let phi = &ext.phi;
    let quarter = q(1, 4);
    let three_quarters = q(3, 4);
    let oy = neighborhood_candidates(f.codomain(), o, y, SearchMode::Minimal)
        .into_iter()
        .find(|&g| osc_on_set(xs, phi, f.preimage(g)) < quarter)
        .ok_or_else(|| Error::CheckFailed("extension is not f-continuous".into()))?;
    let w = f.preimage(oy);
    let low = phi.level_set(|v| *v <= quarter).inter(w);
    let high = phi.level_set(|v| *v >= three_quarters).inter(w);
    let cert = SeparationCertificate {
        y,
        oy,
        u: xs.interior_in(w, low),
        v: xs.interior_in(w, high),
        a_trace: zero_set.inter(w),
        b_trace: target.inter(w),
    };
    if !validate_separation_certificate(f, zero_set, target, &cert) {
        return Err(Error::CheckFailed(format!("extension gives an invalid separation {cert:?}")));
    }
    Ok((cert, ext))
}

/// Evaluation of the family version of the separating-function condition,
/// with the open half-interval `(1/2, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SigmaConditionReport {
    pub y: usize,
    #[serde(rename = "Oy")]
    pub oy: PointSet,
    pub pieces_closed: bool,
    pub osc_below_half: bool,
    pub zero_on_f: bool,
    pub one_on_pieces: bool,
    pub pieces_in_interior: bool,
    pub f_misses_closure: bool,
    pub equicontinuous: bool,
    pub in_unit_interval: bool,
    pub holds: bool,
}

pub fn verify_sigma_condition_c(
    f: &FiberedMap,
    zero_set: PointSet,
    pieces: &[PointSet],
    y: usize,
    phis: &[RationalFunction],
    oy: PointSet,
) -> SigmaConditionReport {
    let xs = f.domain();
    let ys = f.codomain();
    let nbhd_ok = y < ys.n() && ys.is_open(oy) && oy.contains(y) && phis.len() == pieces.len();
    let w = f.preimage(oy);
    let half = q(1, 2);
    let fw = zero_set.inter(w);
    let mut r = SigmaConditionReport {
        y,
        oy,
        pieces_closed: pieces.iter().all(|&t| xs.is_closed_in(w, t.inter(w))),
        osc_below_half: phis.iter().all(|p| osc_on_set(xs, p, w) < half),
        zero_on_f: phis.iter().all(|p| fw.is_subset(p.level_set(|v| v.is_zero()))),
        one_on_pieces: phis
            .iter()
            .zip(pieces)
            .all(|(p, &t)| t.inter(w).is_subset(p.level_set(|v| *v == qi(1)))),
        pieces_in_interior: true,
        f_misses_closure: true,
        equicontinuous: nbhd_ok && is_f_equicontinuous_at(f, phis, y).0,
        in_unit_interval: phis.iter().all(|p| p.values().iter().all(|v| *v >= qi(0) && *v <= qi(1))),
        holds: false,
    };
    for (p, &t) in phis.iter().zip(pieces) {
        let upper = p.level_set(|v| *v > half).inter(w);
        r.pieces_in_interior &= t.inter(w).is_subset(xs.interior_in(w, upper));
        r.f_misses_closure &= xs.closure_in(w, upper).is_disjoint(fw);
    }
    r.holds = nbhd_ok
        && r.pieces_closed
        && r.osc_below_half
        && r.zero_on_f
        && r.one_on_pieces
        && r.pieces_in_interior
        && r.f_misses_closure
        && r.equicontinuous
        && r.in_unit_interval;
    r
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SigmaSeparatorResult {
    #[serde(rename = "Oy")]
    pub oy: PointSet,
    pub functions: Vec<RationalFunction>,
    pub equicontinuity: EquicontinuityCertificate,
    pub checks: SigmaConditionReport,
}

/// One separator per piece `T_l`, all over a shared neighborhood chain.
pub fn sigma_separator_family(
    f: &FiberedMap,
    o: PointSet,
    zero_set: PointSet,
    pieces: &[PointSet],
    y: usize,
    depth: usize,
) -> Result<SigmaSeparatorResult> {
    let problem = PartitionProblem::new(o, zero_set, pieces.to_vec(), y);
    let built = build_binary_partitions_sigma(f, &problem, depth, SearchMode::Minimal)?;
    let limits = built
        .families
        .iter()
        .map(|fam| assemble_limit(f, fam))
        .collect::<Result<Vec<_>>>()?;
    let functions: Vec<RationalFunction> = limits.into_iter().map(|l| l.phi).collect();
    let chain: Vec<PointSet> = built
        .families
        .first()
        .map(|fam| fam.neighborhoods().into_iter().skip(2.min(fam.depth())).collect())
        .unwrap_or_default();
    let refs: Vec<&RationalFunction> = functions.iter().collect();
    let oy = small_oscillation_nbhd(f, &chain, y, &refs, &q(1, 2));
    let checks = verify_sigma_condition_c(f, zero_set, pieces, y, &functions, oy);
    if !checks.holds {
        return Err(Error::CheckFailed(format!("separator family fails its inclusions: {checks:?}")));
    }
    let (_, equicontinuity) = is_f_equicontinuous_at(f, &functions, y);
    Ok(SigmaSeparatorResult { oy, functions, equicontinuity, checks })
}
