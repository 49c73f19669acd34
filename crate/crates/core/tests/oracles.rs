//! Property tests against brute-force oracles written in this file.

use fibertop::census::random_instance;
use fibertop::certificate::{certify, Class};
use fibertop::classical::is_normal_space;
use fibertop::format::{parse_instance, serialize_instance, InstanceFile, NamedFunction, NamedMap, NamedSet};
use fibertop::normality::deciders::closed_subsets;
use fibertop::normality::is_normal;
use fibertop::oscillation::{osc_at_point, osc_linear_bound_check, osc_on_set, sublevel_disjointness, Q};
use fibertop::partitions::{interiors_cover_check, validate_regular_partition};
use fibertop::{FiberedMap, FiniteSpace, PointSet, RationalFunction};
use num::{BigInt, Signed};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A space from a random relation: the preorder it generates, with
/// `U_x` the points below `x`.
fn space_from_relation(n: usize, bits: u64) -> FiniteSpace {
    let mut le = vec![vec![false; n]; n];
    for (i, row) in le.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = i == j || bits >> (i * n + j) & 1 == 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if le[i][k] && le[k][j] {
                    le[i][j] = true;
                }
            }
        }
    }
    let nbhd = (0..n).map(|x| PointSet::from_points((0..n).filter(|&z| le[z][x]))).collect();
    FiniteSpace::from_neighborhoods(nbhd).unwrap()
}

fn arb_space(max: usize) -> impl Strategy<Value = FiniteSpace> {
    (1..=max, any::<u64>()).prop_map(|(n, bits)| space_from_relation(n, bits & (bits >> 7)))
}

fn rational() -> impl Strategy<Value = Q> {
    (-8i64..=8, 1i64..=5).prop_map(|(p, q)| Q::new(BigInt::from(p), BigInt::from(q)))
}

fn arb_space_and_function(max: usize) -> impl Strategy<Value = (FiniteSpace, RationalFunction)> {
    arb_space(max).prop_flat_map(|s| {
        let n = s.n();
        (Just(s), prop::collection::vec(rational(), n).prop_map(RationalFunction::new))
    })
}

fn arb_instance(max_x: usize) -> impl Strategy<Value = FiberedMap> {
    (1..=max_x, 1..=3usize, any::<u64>())
        .prop_map(|(nx, ny, seed)| random_instance(&mut ChaCha8Rng::seed_from_u64(seed), nx, ny))
}

/// Open sets by definition: every point brings its whole minimal
/// neighborhood, checked against the list of opens.
fn is_open_by_list(space: &FiniteSpace, s: PointSet) -> bool {
    space.opens().contains(&s)
}

fn exhaustive_osc(space: &FiniteSpace, phi: &RationalFunction, x: usize) -> Q {
    space
        .points()
        .subsets()
        .filter(|&u| u.contains(x) && is_open_by_list(space, u))
        .map(|u| u.iter().map(|z| (phi.get(x) - phi.get(z)).abs()).max().unwrap())
        .min()
        .unwrap()
}

/// Some pair of disjoint open sets of the subspace `w` covers the traces.
fn separable_in(space: &FiniteSpace, w: PointSet, a: PointSet, b: PointSet) -> bool {
    let opens: Vec<PointSet> = w.subsets().filter(|&u| space.is_open_in(w, u)).collect();
    let (a, b) = (a.inter(w), b.inter(w));
    opens.iter().any(|&u| a.is_subset(u) && opens.iter().any(|&v| b.is_subset(v) && u.is_disjoint(v)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn osc_minimal_neighborhood_is_exhaustive((space, phi) in arb_space_and_function(5)) {
        for x in 0..space.n() {
            prop_assert_eq!(osc_at_point(&space, &phi, x), exhaustive_osc(&space, &phi, x));
        }
    }

    #[test]
    fn osc_is_at_most_twice_the_norm((space, phi) in arb_space_and_function(5)) {
        let bound = phi.norm_on(space.points()) * Q::from_integer(BigInt::from(2));
        prop_assert!(osc_on_set(&space, &phi, space.points()) <= bound);
    }

    #[test]
    fn osc_zero_iff_locally_constant((space, phi) in arb_space_and_function(5)) {
        for x in 0..space.n() {
            let constant = space.minimal_open_neighborhood(x).iter().all(|z| phi.get(z) == phi.get(x));
            prop_assert_eq!(osc_at_point(&space, &phi, x) == Q::from_integer(BigInt::from(0)), constant);
        }
    }

    #[test]
    fn osc_of_combination_is_subadditive(
        (space, phi, psi) in arb_space(5).prop_flat_map(|s| {
            let n = s.n();
            let f = || prop::collection::vec(rational(), n).prop_map(RationalFunction::new);
            (Just(s), f(), f())
        }),
        alpha in rational(),
        beta in rational(),
    ) {
        let r = osc_linear_bound_check(&space, &alpha, &phi, &beta, &psi, space.points());
        prop_assert!(r.ok, "{:?}", r);
    }

    #[test]
    fn wide_sublevel_gaps_separate((space, phi) in arb_space_and_function(5), a in rational(), extra in rational()) {
        let osc = osc_on_set(&space, &phi, space.points());
        let b = &a + &osc + extra.abs() + Q::new(BigInt::from(1), BigInt::from(7));
        let r = sublevel_disjointness(&space, &phi, &a, &b).unwrap();
        let closed_hull = |s: PointSet| {
            space.points().subsets().filter(|&c| space.is_closed(c) && s.is_subset(c)).fold(space.points(), |m, c| m.inter(c))
        };
        prop_assert!(r.lower.is_disjoint(closed_hull(r.upper)));
        prop_assert!(closed_hull(r.lower).is_disjoint(r.upper));
    }

    #[test]
    fn regular_partitions_interiors_cover(space in arb_space(4), k in 3usize..=7, labels in prop::collection::vec(0usize..7, 4)) {
        let mut blocks = vec![PointSet::EMPTY; k];
        for x in 0..space.n() {
            blocks[labels[x] % k] = blocks[labels[x] % k].with(x);
        }
        if let Ok(p) = validate_regular_partition(&space, space.points(), &blocks) {
            prop_assert!(interiors_cover_check(&space, &p).unwrap());
        }
    }

    #[test]
    fn separation_survives_shrinking_the_neighborhood(f in arb_instance(4)) {
        let xs = f.domain();
        let ys = f.codomain();
        for &o in ys.opens().iter().filter(|o| !o.is_empty()) {
            let wo = f.preimage(o);
            let closeds = closed_subsets(xs, wo);
            for &a in &closeds {
                for &b in closeds.iter().filter(|b| b.is_disjoint(a)) {
                    for y in o.iter() {
                        let nbhds: Vec<PointSet> = ys.opens().iter().copied().filter(|g| g.contains(y) && g.is_subset(o)).collect();
                        for &big in &nbhds {
                            if !separable_in(xs, f.preimage(big), a, b) {
                                continue;
                            }
                            for &small in nbhds.iter().filter(|s| s.is_subset(big)) {
                                prop_assert!(separable_in(xs, f.preimage(small), a, b));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn constant_maps_are_normal_exactly_over_normal_spaces(space in arb_space(5)) {
        prop_assert_eq!(is_normal(&FiberedMap::constant(&space)).holds, is_normal_space(&space));
    }

    #[test]
    fn emitted_certificates_reverify(f in arb_instance(4)) {
        for class in Class::ALL {
            let c = certify(&f, class, 6);
            prop_assert!(c.verified, "{} {:?}", class.name(), c);
        }
    }

    #[test]
    fn instance_files_round_trip(f in arb_instance(5), a in any::<u32>(), vals in prop::collection::vec(rational(), 5)) {
        let n = f.domain().n();
        let mut file = InstanceFile::default();
        file.spaces.push(("X".into(), f.domain().clone()));
        file.spaces.push(("Y".into(), f.codomain().clone()));
        file.maps.push(("f".into(), NamedMap { domain: "X".into(), codomain: "Y".into(), map: f.clone() }));
        file.sets.push(("A".into(), NamedSet { space: "X".into(), set: PointSet(a).inter(PointSet::full(n)) }));
        file.funcs.push(("phi".into(), NamedFunction { space: "X".into(), function: RationalFunction::new(vals[..n].to_vec()) }));
        let text = serialize_instance(&file);
        prop_assert_eq!(parse_instance(&text).unwrap(), file);
    }
}
