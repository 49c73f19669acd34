//! Acceptance suite. Runs every criterion twice with the same seed, prints
//! one PASS/FAIL line per criterion and exits nonzero on any failure.

use std::time::{Duration, Instant};

use fibertop::census::{census_records, instances_up_to, labeled_spaces, spaces_up_to_homeomorphism};
use fibertop::classical::{classical_tietze, classical_urysohn, extension_contract, is_normal_space, is_vedenisov};
use fibertop::normality::builder::{build_binary_partitions, PartitionProblem, SearchMode};
use fibertop::normality::deciders::closed_subsets;
use fibertop::normality::{is_normal, is_perfectly_normal};
use fibertop::oscillation::{q, Q};
use fibertop::partitions::{interiors_cover_check, validate_regular_partition, ConsistentBinaryFamily};
use fibertop::space_core::submap;
use fibertop::urysohn_tietze::{
    build_separator, equivalence_harness, tietze_extend, tietze_extend_cached, HarnessConfig, HarnessReport,
    SeparatorCache, TietzeConfig,
};
use fibertop::{FiberedMap, FiniteSpace, PointSet, RationalFunction};
use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

const SEED: u64 = 20_240_917;
const DEPTH: usize = 6;
const CENSUS_TOTAL: usize = 6;

#[derive(Debug, Clone, Serialize)]
struct Criterion {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: Value,
    #[serde(skip)]
    elapsed: Duration,
}

fn ratio(n: i64, d: i64) -> Q {
    q(n, d)
}

fn closure(space: &FiniteSpace, a: PointSet) -> PointSet {
    space
        .points()
        .subsets()
        .filter(|&c| space.is_closed(c) && a.is_subset(c))
        .fold(space.points(), |m, c| m.inter(c))
}

fn interior(space: &FiniteSpace, a: PointSet) -> PointSet {
    space.opens().iter().filter(|o| o.is_subset(a)).fold(PointSet::EMPTY, |m, o| m.union(*o))
}

/// `inf` over every open set containing `x` of `sup |φ(x) - φ(z)|`.
fn exhaustive_osc(space: &FiniteSpace, phi: &RationalFunction, x: usize) -> Q {
    space
        .opens()
        .iter()
        .filter(|o| o.contains(x))
        .map(|o| o.iter().map(|z| (phi.get(x) - phi.get(z)).abs()).max().unwrap())
        .min()
        .unwrap()
}

fn exhaustive_osc_on(space: &FiniteSpace, phi: &RationalFunction, a: PointSet) -> Q {
    a.iter().map(|x| exhaustive_osc(space, phi, x)).max().unwrap_or_else(Q::zero)
}

fn random_function(rng: &mut ChaCha8Rng, n: usize) -> RationalFunction {
    RationalFunction::new((0..n).map(|_| ratio(rng.gen_range(-12..=12), rng.gen_range(1..=7))).collect())
}

fn timed(id: u32, name: &'static str, run: impl FnOnce() -> (bool, Value)) -> Criterion {
    let t = Instant::now();
    let (pass, detail) = run();
    Criterion { id, name, pass, detail, elapsed: t.elapsed() }
}

fn criterion_1() -> Criterion {
    let mut c = timed(1, "oscillation via minimal neighborhood equals the exhaustive infimum", || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let (mut spaces, mut comparisons, mut mismatches) = (0usize, 0usize, 0usize);
        for n in 1..=4 {
            for space in labeled_spaces(n) {
                spaces += 1;
                for _ in 0..200 {
                    let phi = random_function(&mut rng, n);
                    for x in 0..n {
                        comparisons += 1;
                        if fibertop::oscillation::osc_at_point(&space, &phi, x) != exhaustive_osc(&space, &phi, x) {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
        (mismatches == 0, json!({"spaces": spaces, "comparisons": comparisons, "mismatches": mismatches}))
    });
    c.pass &= c.elapsed < Duration::from_secs(10);
    c
}

/// Both defining conditions, evaluated on the dense block list.
fn is_regular(space: &FiniteSpace, blocks: &[PointSet]) -> bool {
    let k = blocks.len();
    let prefix = |p: usize| blocks[..=p].iter().fold(PointSet::EMPTY, |m, b| m.union(*b));
    let suffix = |l: usize| blocks[l..].iter().fold(PointSet::EMPTY, |m, b| m.union(*b));
    (0..k).all(|p| space.is_closed(prefix(p))) && (0..k.saturating_sub(2)).all(|p| prefix(p).is_disjoint(closure(space, suffix(p + 2))))
}

fn criterion_2() -> Criterion {
    let mut c = timed(2, "interiors of adjacent block pairs cover every regular k-partition, k >= 3", || {
        let (mut partitions, mut violations, mut validator_disagreements) = (0usize, 0usize, 0usize);
        for n in 1..=4 {
            for space in labeled_spaces(n) {
                for k in 3..=(2 * n + 1).max(3) {
                    let mut labels = vec![0usize; n];
                    loop {
                        let mut blocks = vec![PointSet::EMPTY; k];
                        for (x, &l) in labels.iter().enumerate() {
                            blocks[l] = blocks[l].with(x);
                        }
                        let regular = is_regular(&space, &blocks);
                        let validated = validate_regular_partition(&space, space.points(), &blocks);
                        if regular != validated.is_ok() {
                            validator_disagreements += 1;
                        }
                        if regular {
                            partitions += 1;
                            let cover = (0..k - 1)
                                .fold(PointSet::EMPTY, |m, i| m.union(interior(&space, blocks[i].union(blocks[i + 1]))));
                            let lib = validated.map(|p| interiors_cover_check(&space, &p) == Ok(true)).unwrap_or(false);
                            if cover != space.points() || !lib {
                                violations += 1;
                            }
                        }
                        let mut i = 0;
                        while i < n && labels[i] + 1 == k {
                            labels[i] = 0;
                            i += 1;
                        }
                        if i == n {
                            break;
                        }
                        labels[i] += 1;
                    }
                }
            }
        }
        (
            violations == 0 && validator_disagreements == 0 && partitions > 0,
            json!({"partitions": partitions, "violations": violations, "validator_disagreements": validator_disagreements}),
        )
    });
    c.pass &= c.elapsed < Duration::from_secs(60);
    c
}

fn level_function(points: usize, family: &ConsistentBinaryFamily, n: usize) -> RationalFunction {
    let mut phi = RationalFunction::zero(points);
    if n == 0 {
        return phi;
    }
    let denom = (1i64 << n) - 1;
    for (k, b) in family.levels[n].partition.nonempty() {
        for x in b.iter() {
            phi.set(x, ratio(k as i64, denom));
        }
    }
    phi
}

fn cases(f: &FiberedMap) -> Vec<(PointSet, PointSet, PointSet, usize)> {
    let xs = f.domain();
    let mut out = Vec::new();
    for &o in f.codomain().opens().iter().filter(|o| !o.is_empty()) {
        let closeds: Vec<PointSet> = closed_subsets(xs, f.preimage(o)).into_iter().filter(|c| !c.is_empty()).collect();
        for &zero in &closeds {
            for &target in closeds.iter().filter(|t| t.is_disjoint(zero)) {
                out.extend(o.iter().map(|y| (o, zero, target, y)));
            }
        }
    }
    out
}

fn criterion_3(instances: &[FiberedMap]) -> Criterion {
    timed(3, "stepwise oscillation and increment bounds of built families", || {
        let (mut families, mut checks, mut violations) = (0usize, 0usize, 0usize);
        for f in instances.iter().filter(|f| is_normal(f).holds) {
            let xs = f.domain();
            for (o, zero, target, y) in cases(f) {
                let problem = PartitionProblem::new(o, zero, vec![target], y);
                let Ok(fam) = build_binary_partitions(f, &problem, DEPTH, SearchMode::Minimal) else {
                    violations += 1;
                    continue;
                };
                families += 1;
                let phis: Vec<RationalFunction> = (0..=DEPTH).map(|n| level_function(xs.n(), &fam, n)).collect();
                for n in 1..=DEPTH {
                    checks += 1;
                    let carrier = fam.levels[n].partition.carrier;
                    if exhaustive_osc_on(xs, &phis[n], carrier) > ratio(1, (1 << n) - 1) {
                        violations += 1;
                    }
                    if n < DEPTH {
                        checks += 1;
                        let next = fam.levels[n + 1].partition.carrier;
                        let bound = ratio(1, (1 << (n + 1)) - 1);
                        if next.iter().any(|x| (phis[n + 1].get(x) - phis[n].get(x)).abs() > bound) {
                            violations += 1;
                        }
                    }
                }
            }
        }
        (violations == 0 && families > 0, json!({"families": families, "checks": checks, "violations": violations}))
    })
}

fn criterion_4(report: &HarnessReport) -> Criterion {
    timed(4, "separation conditions (A)-(D) agree", || {
        let disagreeing = report.records.iter().filter(|r| !r.mismatches.is_empty()).count();
        let normal = report.records.iter().filter(|r| r.separation.a).count();
        let divergent_non_normal: usize = report
            .records
            .iter()
            .filter(|r| !r.separation.a)
            .map(|r| r.separation.divergent_cases)
            .sum();
        let per_case_on_normal: usize =
            report.records.iter().filter(|r| r.separation.a).map(|r| r.separation.divergent_cases).sum();
        (
            report.mismatches == 0 && per_case_on_normal == 0,
            json!({
                "instances": report.instances,
                "normal_instances": normal,
                "cases": report.cases,
                "instances_with_mismatches": disagreeing,
                "mismatches": report.mismatches,
                "divergent_cases_on_normal": per_case_on_normal,
                "divergent_cases_on_non_normal": divergent_non_normal,
            }),
        )
    })
}

fn criterion_5(instances: &[FiberedMap], report: &HarnessReport) -> Criterion {
    timed(5, "extension residuals, norm and agreement", || {
        let cfg = TietzeConfig { depth: DEPTH, ..TietzeConfig::default() };
        let two_thirds = ratio(2, 3);
        let (mut runs, mut exact, mut violations) = (0usize, 0usize, 0usize);
        for f in instances {
            let mut cache = SeparatorCache::new();
            let xs = f.domain();
            for (o, zero, target, y) in cases(f) {
                let both = zero.union(target);
                let phit = RationalFunction::indicator(xs.n(), target);
                let Ok(ext) = tietze_extend_cached(f, o, both, &phit, y, &cfg, &mut cache) else { continue };
                runs += 1;
                let fw = both.inter(f.preimage(f.codomain().minimal_open_neighborhood(y)));
                let mut bad = ext.residuals.windows(2).any(|w| w[1] > &w[0] * &two_thirds);
                bad |= ext.phi.norm_on(xs.points()) > phit.norm_on(both);
                let sup = fw.iter().map(|x| (phit.get(x) - ext.partial_sum.get(x)).abs()).max().unwrap_or_else(Q::zero);
                if ext.exact {
                    exact += 1;
                    bad |= !sup.is_zero();
                } else {
                    let mut bound = ext.residuals[0].clone();
                    for _ in 0..ext.iterations {
                        bound *= &two_thirds;
                    }
                    bad |= sup > bound;
                }
                bad |= fw.iter().any(|x| ext.phi.get(x) != phit.get(x));
                violations += bad as usize;
            }
        }
        let consistent = runs == report.records.iter().map(|r| r.extensions_checked).sum::<usize>();
        (
            violations == 0 && report.residual_violations == 0 && consistent,
            json!({"runs": runs, "exact_runs": exact, "violations": violations, "harness_residual_violations": report.residual_violations, "run_counts_match": consistent}),
        )
    })
}

fn criterion_6(report: &HarnessReport) -> Criterion {
    timed(6, "family separation: decider, builder and equicontinuous family agree", || {
        let disagreements = report
            .records
            .iter()
            .filter(|r| !(r.sigma.decider == r.sigma.builder && r.sigma.builder == r.sigma.family))
            .count();
        let holding = report.records.iter().filter(|r| r.sigma.decider).count();
        (disagreements == 0, json!({"instances": report.instances, "sigma_normal": holding, "disagreements": disagreements}))
    })
}

fn criterion_7(instances: &[FiberedMap]) -> Criterion {
    timed(7, "perfect normality hierarchy and the classical constant-map case", || {
        let records = census_records(instances);
        let library_violations: usize = records.iter().map(|r| r.violations.len()).sum();
        let mut violations = Vec::new();
        let mut perfect = 0usize;
        for (f, r) in instances.iter().zip(&records) {
            let k = &r.classes;
            let mut need = |ok: bool, what: &str| {
                if !ok {
                    violations.push(format!("instance {}: {what}", r.id));
                }
            };
            need(!k.co_sigma_perfectly_normal || k.perfectly_normal, "co-sigma-perfect without perfect");
            need(!k.perfectly_normal || k.co_perfectly_normal, "perfect without co-perfect");
            need(!k.perfectly_normal || k.hereditarily_normal, "perfect without hereditary normality");
            if f.codomain().n() == 1 {
                let classical = is_vedenisov(f.domain());
                need(
                    k.perfectly_normal == classical && k.co_perfectly_normal == classical && k.co_sigma_perfectly_normal == classical,
                    "constant map disagrees with the classical check",
                );
            }
            if k.perfectly_normal {
                perfect += 1;
                for carrier in f.domain().points().subsets() {
                    let sub = submap(f, carrier).expect("restrictions are continuous");
                    need(is_perfectly_normal(&sub.map).holds, "submapping not perfectly normal");
                }
            }
        }
        (
            violations.is_empty() && library_violations == 0,
            json!({"instances": records.len(), "perfectly_normal": perfect, "violations": violations, "library_violations": library_violations}),
        )
    })
}

fn criterion_8() -> Criterion {
    timed(8, "constant maps reduce to classical Urysohn and Tietze", || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
        let cfg = TietzeConfig { depth: DEPTH, ..TietzeConfig::default() };
        let (mut spaces, mut urysohn, mut tietze, mut disagreements) = (0usize, 0usize, 0usize, 0usize);
        for n in 1..=5 {
            for space in spaces_up_to_homeomorphism(n).into_iter().filter(is_normal_space) {
                spaces += 1;
                let f = FiberedMap::constant(&space);
                let full = PointSet::singleton(0);
                let closeds: Vec<PointSet> = closed_subsets(&space, space.points()).into_iter().filter(|c| !c.is_empty()).collect();
                for &zero in &closeds {
                    for &target in closeds.iter().filter(|t| t.is_disjoint(zero)) {
                        urysohn += 1;
                        let ours = build_separator(&f, full, zero, target, 0, DEPTH)
                            .map(|r| {
                                let phi = r.phi.phi;
                                zero.iter().all(|x| phi.get(x).is_zero())
                                    && target.iter().all(|x| phi.get(x).is_one())
                                    && exhaustive_osc_on(&space, &phi, space.points()).is_zero()
                            })
                            .unwrap_or(false);
                        let classical = classical_urysohn(&space, zero, target).is_some();
                        disagreements += (ours != classical) as usize;
                    }
                    for trial in 0..3 {
                        tietze += 1;
                        let mut phit = random_function(&mut rng, n);
                        if trial == 0 {
                            for comp in space.components_in(space.points()) {
                                let v = phit.get(comp.iter().next().unwrap()).clone();
                                comp.iter().for_each(|x| phit.set(x, v.clone()));
                            }
                        }
                        let ours = tietze_extend(&f, full, zero, &phit, 0, &cfg)
                            .map(|e| extension_contract(&space, zero, &phit, &e.phi))
                            .unwrap_or(false);
                        let classical = classical_tietze(&space, zero, &phit)
                            .map(|e| extension_contract(&space, zero, &phit, &e))
                            .unwrap_or(false);
                        disagreements += (ours != classical) as usize;
                    }
                }
            }
        }
        (
            disagreements == 0,
            json!({"normal_spaces": spaces, "urysohn_cases": urysohn, "tietze_cases": tietze, "disagreements": disagreements}),
        )
    })
}

fn run_all() -> Vec<Criterion> {
    let instances = instances_up_to(CENSUS_TOTAL);
    let cfg = HarnessConfig { depth: DEPTH, tietze: TietzeConfig { depth: DEPTH, ..TietzeConfig::default() } };
    let mut out = vec![criterion_1(), criterion_2(), criterion_3(&instances)];
    let t = Instant::now();
    let report = equivalence_harness(&instances, &cfg);
    let harness_time = t.elapsed();
    let mut c4 = criterion_4(&report);
    c4.elapsed += harness_time;
    out.push(c4);
    out.push(criterion_5(&instances, &report));
    out.push(criterion_6(&report));
    out.push(criterion_7(&instances));
    out.push(criterion_8());
    out
}

fn main() {
    let first = run_all();
    let second = run_all();
    let a = serde_json::to_string_pretty(&first).expect("report serializes");
    let b = serde_json::to_string_pretty(&second).expect("report serializes");
    let deterministic = a == b;
    let mut all = first;
    all.push(Criterion {
        id: 9,
        name: "repeated runs give byte-identical JSON reports",
        pass: deterministic,
        detail: json!({"bytes": a.len(), "identical": deterministic}),
        elapsed: Duration::ZERO,
    });
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance.json");
    let _ = std::fs::write(&path, serde_json::to_string_pretty(&all).expect("report serializes"));
    for c in &all {
        println!(
            "criterion {}: {} - {} ({:.2?}) {}",
            c.id,
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.elapsed,
            c.detail
        );
    }
    println!("report written to {}", path.display());
    if all.iter().any(|c| !c.pass) {
        std::process::exit(1);
    }
}
