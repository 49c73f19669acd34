//! Space-level separation facts used as oracles for the map-level
//! constructions over a one-point codomain.

use num::Zero;

use crate::normality::deciders::{closed_subsets, disjoint_open_pair};
use crate::oscillation::{osc_on_set, osc_on_set_in, qi, RationalFunction};
use crate::set::PointSet;
use crate::space_core::FiniteSpace;

/// Disjoint closed sets have disjoint open neighborhoods.
pub fn is_normal_space(space: &FiniteSpace) -> bool {
    let closeds = closed_subsets(space, space.points());
    closeds.iter().enumerate().all(|(i, &a)| {
        closeds[i + 1..]
            .iter()
            .filter(|b| a.is_disjoint(**b))
            .all(|&b| disjoint_open_pair(space, space.points(), a, b).is_some())
    })
}

/// Normal with every open set F_sigma, which in a finite space means every
/// open set is closed.
pub fn is_vedenisov(space: &FiniteSpace) -> bool {
    is_normal_space(space) && space.opens().iter().all(|&o| space.is_closed(o))
}

pub fn is_continuous(space: &FiniteSpace, phi: &RationalFunction) -> bool {
    osc_on_set(space, phi, space.points()).is_zero()
}

/// A continuous function `0` on `F` and `1` on `T`: the indicator of the
/// components meeting `T`. `None` when a component meets both.
pub fn classical_urysohn(space: &FiniteSpace, zero_set: PointSet, target: PointSet) -> Option<RationalFunction> {
    let mut phi = RationalFunction::zero(space.n());
    for comp in space.components_in(space.points()) {
        match (comp.is_disjoint(zero_set), comp.is_disjoint(target)) {
            (false, false) => return None,
            (true, false) => comp.iter().for_each(|x| phi.set(x, qi(1))),
            _ => {}
        }
    }
    Some(phi)
}

/// A continuous extension of `target` from the closed set `F`, constant on
/// each component. `None` when `target` is not continuous on `F` or takes
/// two values on one component.
pub fn classical_tietze(space: &FiniteSpace, zero_set: PointSet, target: &RationalFunction) -> Option<RationalFunction> {
    if !osc_on_set_in(space, zero_set, target, zero_set).is_zero() {
        return None;
    }
    let mut phi = RationalFunction::zero(space.n());
    for comp in space.components_in(space.points()) {
        let hit = comp.inter(zero_set);
        let Some(first) = hit.iter().next() else { continue };
        let v = target.get(first).clone();
        if hit.iter().any(|x| *target.get(x) != v) {
            return None;
        }
        comp.iter().for_each(|x| phi.set(x, v.clone()));
    }
    Some(phi)
}

/// The boolean contract of an extension: continuous, equal to `target` on
/// `F`, and no larger in norm.
pub fn extension_contract(space: &FiniteSpace, zero_set: PointSet, target: &RationalFunction, phi: &RationalFunction) -> bool {
    is_continuous(space, phi)
        && phi.agrees_on(target, zero_set)
        && phi.norm_on(space.points()) <= target.norm_on(zero_set)
}
