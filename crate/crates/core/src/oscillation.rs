//! Norms, oscillation and f-continuity of rational-valued functions on
//! finite spaces.

use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::set::PointSet;
use crate::space_core::{FiberedMap, FiniteSpace};

/// Exact rationals used for every function value.
pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// `1 / (2^n - 1)`, the step size of the level-`n` stepwise function.
pub fn step(n: usize) -> Q {
    Q::new(BigInt::one(), (BigInt::one() << n) - 1)
}

/// `1 / 2^n`.
pub fn dyadic(n: usize) -> Q {
    Q::new(BigInt::one(), BigInt::one() << n)
}

/// Parse `p/q` or an integer.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim().parse::<BigInt>().ok()?, d.trim().parse::<BigInt>().ok()?),
        None => (s.parse::<BigInt>().ok()?, BigInt::one()),
    };
    if d.is_zero() {
        return None;
    }
    Some(Q::new(n, d))
}

/// A total table of rational values on the points of a space.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    values: Vec<Q>,
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

impl RationalFunction {
    pub fn new(values: Vec<Q>) -> RationalFunction {
        RationalFunction { values }
    }

    pub fn constant(n: usize, c: Q) -> RationalFunction {
        RationalFunction { values: vec![c; n] }
    }

    pub fn zero(n: usize) -> RationalFunction {
        RationalFunction::constant(n, Q::zero())
    }

    /// 1 on `a`, 0 elsewhere.
    pub fn indicator(n: usize, a: PointSet) -> RationalFunction {
        RationalFunction {
            values: (0..n).map(|x| if a.contains(x) { Q::one() } else { Q::zero() }).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize) -> &Q {
        &self.values[x]
    }

    pub fn set(&mut self, x: usize, v: Q) {
        self.values[x] = v;
    }

    pub fn check_domain(&self, space: &FiniteSpace) -> Result<()> {
        if self.n() == space.n() {
            Ok(())
        } else {
            Err(Error::TableSize { expected: space.n(), got: self.n() })
        }
    }

    pub fn map(&self, g: impl Fn(&Q) -> Q) -> RationalFunction {
        RationalFunction { values: self.values.iter().map(g).collect() }
    }

    pub fn add(&self, other: &RationalFunction) -> RationalFunction {
        RationalFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &RationalFunction) -> RationalFunction {
        RationalFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: &Q) -> RationalFunction {
        self.map(|v| v * c)
    }

    /// Points where the value satisfies `pred`.
    pub fn level_set(&self, pred: impl Fn(&Q) -> bool) -> PointSet {
        PointSet::from_points((0..self.n()).filter(|&x| pred(&self.values[x])))
    }

    /// Largest absolute value on `a`, 0 on the empty set.
    pub fn norm_on(&self, a: PointSet) -> Q {
        a.iter().map(|x| self.values[x].abs()).max().unwrap_or_else(Q::zero)
    }

    /// Largest `|self - other|` on `a`.
    pub fn distance_on(&self, other: &RationalFunction, a: PointSet) -> Q {
        a.iter()
            .map(|x| (&self.values[x] - &other.values[x]).abs())
            .max()
            .unwrap_or_else(Q::zero)
    }

    pub fn agrees_on(&self, other: &RationalFunction, a: PointSet) -> bool {
        a.iter().all(|x| self.values[x] == other.values[x])
    }
}

impl Serialize for RationalFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.values.iter().map(|v| v.to_string()))
    }
}

impl<'de> Deserialize<'de> for RationalFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        let values = raw
            .iter()
            .map(|s| parse_q(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))))
            .collect::<std::result::Result<_, _>>()?;
        Ok(RationalFunction { values })
    }
}

/// Serde helper for a single rational as a `p/q` string.
pub mod q_string {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
    }
}

/// Serde helper for a list of rationals as `p/q` strings.
pub mod q_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_q(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))))
            .collect()
    }
}

pub fn norm(phi: &RationalFunction) -> Q {
    phi.norm_on(PointSet::full(phi.n()))
}

/// Oscillation at `x`, read off the minimal open neighborhood.
pub fn osc_at_point(space: &FiniteSpace, phi: &RationalFunction, x: usize) -> Q {
    osc_at_point_in(space, space.points(), phi, x)
}

/// Oscillation at `x` of `phi` restricted to the subspace `s`.
pub fn osc_at_point_in(space: &FiniteSpace, s: PointSet, phi: &RationalFunction, x: usize) -> Q {
    let v = phi.get(x);
    space
        .minimal_open_neighborhood(x)
        .inter(s)
        .iter()
        .map(|z| (v - phi.get(z)).abs())
        .max()
        .unwrap_or_else(Q::zero)
}

pub fn osc_on_set(space: &FiniteSpace, phi: &RationalFunction, a: PointSet) -> Q {
    osc_on_set_in(space, space.points(), phi, a)
}

/// Oscillation on `a` of `phi` restricted to the subspace `s ⊇ a`.
pub fn osc_on_set_in(space: &FiniteSpace, s: PointSet, phi: &RationalFunction, a: PointSet) -> Q {
    a.inter(s)
        .iter()
        .map(|x| osc_at_point_in(space, s, phi, x))
        .max()
        .unwrap_or_else(Q::zero)
}

/// Whether `osc` on `a` is zero, without building the rational maximum.
pub fn osc_vanishes(space: &FiniteSpace, phi: &RationalFunction, a: PointSet) -> bool {
    a.iter().all(|x| {
        let v = phi.get(x);
        space.minimal_open_neighborhood(x).iter().all(|z| phi.get(z) == v)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinearBound {
    #[serde(with = "q_string")]
    pub lhs: Q,
    #[serde(with = "q_string")]
    pub rhs: Q,
    pub ok: bool,
}

/// Compare `osc(αφ + βψ)` with `|α| osc φ + |β| osc ψ` on `a`.
pub fn osc_linear_bound_check(
    space: &FiniteSpace,
    alpha: &Q,
    phi: &RationalFunction,
    beta: &Q,
    psi: &RationalFunction,
    a: PointSet,
) -> LinearBound {
    let combo = phi.scale(alpha).add(&psi.scale(beta));
    let lhs = osc_on_set(space, &combo, a);
    let rhs = alpha.abs() * osc_on_set(space, phi, a) + beta.abs() * osc_on_set(space, psi, a);
    let ok = lhs <= rhs;
    LinearBound { lhs, rhs, ok }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SublevelReport {
    /// `{φ <= a}`.
    pub lower: PointSet,
    /// `{φ >= b}`.
    pub upper: PointSet,
    /// `lower ∩ cl upper = ∅`.
    pub lower_misses_closure: bool,
    /// `cl lower ∩ upper = ∅`.
    pub closure_misses_upper: bool,
}

/// Sublevel and superlevel sets whose gap exceeds the oscillation have
/// disjoint closures from each other.
pub fn sublevel_disjointness(space: &FiniteSpace, phi: &RationalFunction, a: &Q, b: &Q) -> Result<SublevelReport> {
    let osc = osc_on_set(space, phi, space.points());
    let gap = b - a;
    if gap <= osc {
        return Err(Error::PreconditionGap { gap: gap.to_string(), osc: osc.to_string() });
    }
    let lower = phi.level_set(|v| v <= a);
    let upper = phi.level_set(|v| v >= b);
    Ok(SublevelReport {
        lower,
        upper,
        lower_misses_closure: lower.is_disjoint(space.closure(upper)),
        closure_misses_upper: space.closure(lower).is_disjoint(upper),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FContinuity {
    pub holds: bool,
    pub y: usize,
    #[serde(rename = "Oy")]
    pub oy: PointSet,
    #[serde(with = "q_string")]
    pub osc: Q,
}

/// `φ` is f-continuous at `y` exactly when it has zero oscillation on the
/// preimage of the minimal neighborhood of `y`.
pub fn is_f_continuous_at(f: &FiberedMap, phi: &RationalFunction, y: usize) -> FContinuity {
    let oy = f.codomain().minimal_open_neighborhood(y);
    let osc = osc_on_set(f.domain(), phi, f.preimage(oy));
    FContinuity { holds: osc.is_zero(), y, oy, osc }
}

/// f-continuity at `y` of `phi` regarded as a function on the subspace `s`
/// of the domain.
pub fn is_f_continuous_at_in(f: &FiberedMap, s: PointSet, phi: &RationalFunction, y: usize) -> bool {
    let w = f.tube(y).inter(s);
    osc_on_set_in(f.domain(), s, phi, w).is_zero()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquicontinuityCertificate {
    pub y: usize,
    #[serde(rename = "Oy")]
    pub oy: PointSet,
    /// Largest oscillation of a member on the preimage of `oy`.
    #[serde(with = "q_string")]
    pub bound: Q,
    pub members: usize,
}

pub fn is_f_equicontinuous_at(
    f: &FiberedMap,
    family: &[RationalFunction],
    y: usize,
) -> (bool, EquicontinuityCertificate) {
    let oy = f.codomain().minimal_open_neighborhood(y);
    let w = f.preimage(oy);
    let bound = family
        .iter()
        .map(|phi| osc_on_set(f.domain(), phi, w))
        .max()
        .unwrap_or_else(Q::zero);
    let holds = bound.is_zero();
    (holds, EquicontinuityCertificate { y, oy, bound, members: family.len() })
}

/// Pointwise `Σ weight_i · member_i`, checked to be f-continuous at `y`.
pub fn weighted_sum(
    f: &FiberedMap,
    family: &[RationalFunction],
    weights: &[Q],
    y: usize,
) -> Result<RationalFunction> {
    if family.len() != weights.len() {
        return Err(Error::WeightCount);
    }
    let n = f.domain().n();
    let mut sum = RationalFunction::zero(n);
    for (i, (phi, w)) in family.iter().zip(weights).enumerate() {
        phi.check_domain(f.domain())?;
        if !is_f_continuous_at(f, phi, y).holds {
            return Err(Error::MemberNotFContinuous { index: i, y });
        }
        sum = sum.add(&phi.scale(w));
    }
    if !is_f_continuous_at(f, &sum, y).holds {
        return Err(Error::CheckFailed("weighted sum is not f-continuous".into()));
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(v: &[usize]) -> PointSet {
        PointSet::from_points(v.iter().copied())
    }

    #[test]
    fn norms() {
        assert_eq!(norm(&RationalFunction::zero(2)), qi(0));
        assert_eq!(norm(&RationalFunction::new(vec![q(-1, 2), q(1, 3)])), q(1, 2));
        assert_eq!(norm(&RationalFunction::indicator(2, ps(&[1]))), qi(1));
        assert_eq!(norm(&RationalFunction::zero(0)), qi(0));
    }

    #[test]
    fn oscillation_on_sierpinski() {
        let s = FiniteSpace::sierpinski();
        let ind = RationalFunction::indicator(2, ps(&[1]));
        assert_eq!(osc_at_point(&s, &ind, 0), qi(0));
        assert_eq!(osc_at_point(&s, &ind, 1), qi(1));
        assert_eq!(osc_on_set(&s, &ind, s.points()), qi(1));
        assert_eq!(osc_on_set(&s, &ind, PointSet::EMPTY), qi(0));
        let d3 = FiniteSpace::discrete(3);
        let phi = RationalFunction::new(vec![qi(3), q(-7, 2), qi(0)]);
        assert_eq!(osc_on_set(&d3, &phi, d3.points()), qi(0));
    }

    #[test]
    fn linear_bound() {
        let s = FiniteSpace::sierpinski();
        let ind = RationalFunction::indicator(2, ps(&[1]));
        let neg = ind.scale(&qi(-1));
        let r = osc_linear_bound_check(&s, &qi(1), &ind, &qi(1), &neg, s.points());
        assert_eq!((r.lhs, r.rhs, r.ok), (qi(0), qi(2), true));
        let r = osc_linear_bound_check(&s, &qi(2), &ind, &qi(0), &neg, s.points());
        assert_eq!(r.lhs, r.rhs);
        let r = osc_linear_bound_check(&s, &qi(0), &ind, &qi(0), &neg, s.points());
        assert_eq!((r.lhs, r.rhs), (qi(0), qi(0)));
    }

    #[test]
    fn sublevels() {
        let d2 = FiniteSpace::discrete(2);
        let phi = RationalFunction::new(vec![qi(0), qi(1)]);
        let r = sublevel_disjointness(&d2, &phi, &qi(0), &qi(1)).unwrap();
        assert_eq!((r.lower, r.upper), (ps(&[0]), ps(&[1])));
        assert!(r.lower_misses_closure && r.closure_misses_upper);

        let s = FiniteSpace::sierpinski();
        let ind = RationalFunction::indicator(2, ps(&[1]));
        assert!(matches!(
            sublevel_disjointness(&s, &ind, &qi(0), &qi(1)),
            Err(Error::PreconditionGap { .. })
        ));

        let c = RationalFunction::constant(2, q(1, 2));
        let r = sublevel_disjointness(&s, &c, &q(-1, 2), &q(3, 2)).unwrap();
        assert!(r.lower.is_empty() && r.upper.is_empty());
    }

    #[test]
    fn f_continuity() {
        let s = FiniteSpace::sierpinski();
        let id = FiberedMap::identity(&s);
        let ind = RationalFunction::indicator(2, ps(&[1]));
        assert!(is_f_continuous_at(&id, &ind, 0).holds);
        assert!(!is_f_continuous_at(&id, &ind, 1).holds);

        let g = FiberedMap::new(FiniteSpace::discrete(1), FiniteSpace::discrete(2), vec![0]).unwrap();
        assert!(is_f_continuous_at(&g, &RationalFunction::new(vec![qi(5)]), 1).holds);
    }

    #[test]
    fn equicontinuity() {
        let s = FiniteSpace::sierpinski();
        let id = FiberedMap::identity(&s);
        let ind = RationalFunction::indicator(2, ps(&[1]));
        assert!(!is_f_equicontinuous_at(&id, &[ind], 1).0);
        let consts = vec![RationalFunction::constant(2, qi(1)), RationalFunction::constant(2, q(2, 3))];
        assert!(is_f_equicontinuous_at(&id, &consts, 1).0);
        assert!(is_f_equicontinuous_at(&id, &[], 1).0);
    }

    #[test]
    fn weighted_sums() {
        let s = FiniteSpace::sierpinski();
        let id = FiberedMap::identity(&s);
        let one = RationalFunction::constant(2, qi(1));
        let sum = weighted_sum(&id, &[one.clone(), one], &[q(1, 2), q(1, 4)], 1).unwrap();
        assert_eq!(sum, RationalFunction::constant(2, q(3, 4)));

        let ind0 = RationalFunction::indicator(2, ps(&[0]));
        assert_eq!(weighted_sum(&id, std::slice::from_ref(&ind0), &[qi(1)], 0).unwrap(), ind0);
        assert_eq!(
            weighted_sum(&id, &[ind0], &[qi(1)], 1).unwrap_err(),
            Error::MemberNotFContinuous { index: 0, y: 1 }
        );
        assert_eq!(weighted_sum(&id, &[], &[qi(1)], 1).unwrap_err(), Error::WeightCount);
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_q("3/6"), Some(q(1, 2)));
        assert_eq!(parse_q("-4"), Some(qi(-4)));
        assert_eq!(parse_q("1/0"), None);
        assert_eq!(step(3), q(1, 7));
        assert_eq!(dyadic(3), q(1, 8));
        let j = serde_json::to_string(&RationalFunction::new(vec![q(1, 2), qi(1)])).unwrap();
        assert_eq!(j, r#"["1/2","1"]"#);
    }
}
