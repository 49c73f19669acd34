//! Command-line surface: `check`, `build`, `census` and `harness`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::{Signed, Zero};
use serde::Serialize;

use crate::census::{census_records, instances_up_to, instances_with_sides, sample_instances, tally};
use crate::certificate::{certify, Class};
use crate::error::{Error, Result};
use crate::format::{parse_instance, write_family, write_func, InstanceFile, NamedFamily, NamedFunction};
use crate::normality::builder::{build_binary_partitions, verify_partition_conditions, PartitionProblem, SearchMode};
use crate::normality::deciders::canonical_decomposition;
use crate::normality::perfect::is_f_functionally_open;
use crate::oscillation::{is_f_continuous_at, osc_on_set, parse_q, qi, RationalFunction, Q};
use crate::partitions::validate_consistent_family;
use crate::set::PointSet;
use crate::space_core::{FiberedMap, FiniteSpace};
use crate::urysohn_tietze::harness::{residual_violations, stepwise_bound_violations};
use crate::urysohn_tietze::{
    build_separator, equivalence_harness, sigma_separator_family, tietze_extend, verify_condition_c,
    verify_condition_d, verify_sigma_condition_c, HarnessConfig, TietzeConfig,
};

pub const DEFAULT_MAX_POINTS: usize = 12;

#[derive(Debug, Parser)]
#[command(name = "fibertop", version, about = "Fiberwise normality of maps between finite spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Partition depth for builders.
    #[arg(long, global = true, default_value_t = 6)]
    pub depth: usize,
    /// Truncation tolerance for extensions, as p/q.
    #[arg(long = "tol", global = true, default_value = "1/1024", value_parser = parse_tolerance)]
    pub tolerance: Q,
    /// Cap on |X| + |Y| for exhaustive deciders.
    #[arg(long, global = true, env = "FIBERTOP_MAX_POINTS", default_value_t = DEFAULT_MAX_POINTS)]
    pub max_points: usize,
    /// Seed for randomized sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide a class and print a certificate or counterexample.
    Check {
        /// prenormal, normal, sigma-prenormal, sigma-normal, perfectly-normal,
        /// co-perfect, co-sigma-perfect or hereditarily-normal.
        #[arg(value_parser = parse_class)]
        class: Class,
        file: PathBuf,
        /// Map to check; defaults to the constant map of a file's only space.
        #[arg(long)]
        map: Option<String>,
    },
    /// Run a builder and print its verified output.
    Build {
        kind: BuildKind,
        file: PathBuf,
        map: String,
        /// Named sets and functions the builder needs.
        names: Vec<String>,
        #[arg(long)]
        y: usize,
        /// Open set of the codomain to work over; defaults to all of it.
        #[arg(long)]
        over: Option<String>,
        /// Skip the point cap.
        #[arg(long)]
        assume: bool,
    },
    /// Classify instances and check every implication between classes.
    Census(Selection),
    /// Cross-check the separation and extension equivalences.
    Harness(Selection),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuildKind {
    Partitions,
    Separator,
    Extend,
    SigmaFamily,
    FunctionalWitness,
}

#[derive(Debug, Clone, Args)]
pub struct Selection {
    /// Exhaustive over |X|, |Y| <= N; with --sample, the domain size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Exhaustive over |X| + |Y| <= T.
    #[arg(long, conflicts_with = "n")]
    pub total: Option<usize>,
    /// Number of random instances.
    #[arg(long, requires = "n")]
    pub sample: Option<usize>,
}

fn parse_tolerance(s: &str) -> std::result::Result<Q, String> {
    match parse_q(s) {
        Some(t) if t.is_positive() => Ok(t),
        Some(_) => Err("tolerance must be positive".into()),
        None => Err(format!("not a rational: {s:?}")),
    }
}

fn parse_class(s: &str) -> std::result::Result<Class, String> {
    Class::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Class::ALL.iter().map(|c| c.name()).collect();
        format!("unknown class {s:?}; expected one of {}", names.join(", "))
    })
}

/// Run settings shared by every command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub depth: usize,
    #[serde(with = "crate::oscillation::q_string")]
    pub tolerance: Q,
    pub max_points: usize,
    pub seed: u64,
    pub json: bool,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<RunConfig> {
        if cli.depth == 0 || cli.depth > 62 {
            return Err(Error::DepthRange(cli.depth));
        }
        Ok(RunConfig {
            depth: cli.depth,
            tolerance: cli.tolerance.clone(),
            max_points: cli.max_points,
            seed: cli.seed,
            json: cli.json,
        })
    }

    fn tietze(&self) -> TietzeConfig {
        TietzeConfig { depth: self.depth, tolerance: self.tolerance.clone(), max_iter: None }
    }

    fn cap(&self, points: usize) -> Result<()> {
        if points > self.max_points {
            return Err(Error::CapExceeded { points, cap: self.max_points });
        }
        Ok(())
    }
}

/// Parse arguments and run; returns the process exit code. Errors are
/// reported on `err` with code 2.
pub fn run_from_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::from_cli(cli)?;
    let text = match &cli.command {
        Command::Check { class, file, map } => return cmd_check(*class, &load(file)?, map.as_deref(), &cfg, out),
        Command::Build { kind, file, map, names, y, over, assume } => {
            let req = BuildRequest { kind: *kind, map, names, y: *y, over: over.as_deref(), assume: *assume };
            cmd_build(&load(file)?, &req, &cfg)?
        }
        Command::Census(sel) => return cmd_census(sel, &cfg, out),
        Command::Harness(sel) => return cmd_harness(sel, &cfg, out),
    };
    emit(out, &text)?;
    Ok(0)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::Validation { object: "output".into(), reason: e.to_string() })
}

fn load(path: &PathBuf) -> Result<InstanceFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Validation {
        object: format!("file {}", path.display()),
        reason: e.to_string(),
    })?;
    parse_instance(&text)
}

/// The named map, or the constant map of the only space in the file.
pub fn select_map(file: &InstanceFile, name: Option<&str>) -> Result<(String, FiberedMap)> {
    if let Some(n) = name {
        return Ok((n.to_string(), file.map(n)?.map.clone()));
    }
    match (file.maps.as_slice(), file.spaces.as_slice()) {
        ([(n, m)], _) => Ok((n.clone(), m.map.clone())),
        ([], [(n, s)]) => Ok((format!("{n} -> point"), FiberedMap::constant(s))),
        _ => Err(Error::Validation {
            object: "file".into(),
            reason: "several candidates; choose one with --map".into(),
        }),
    }
}

pub fn cmd_check(class: Class, file: &InstanceFile, map: Option<&str>, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let (name, f) = select_map(file, map)?;
    cfg.cap(f.size())?;
    let cert = certify(&f, class, cfg.depth);
    if !cert.verified {
        return Err(Error::CheckFailed(format!("{} certificate for {name} failed re-verification", class.name())));
    }
    let text = if cfg.json {
        format!("{}\n", to_json(&cert)?)
    } else {
        let mut s = format!("{name}: {} {}\n", class.name(), if cert.holds { "holds" } else { "fails" });
        let _ = writeln!(s, "witnesses: {}", cert.witnesses.len());
        if let Some(c) = &cert.counterexample {
            let _ = writeln!(s, "counterexample: {}", to_json(c)?);
        }
        s
    };
    emit(out, &text)?;
    Ok(if cert.holds { 0 } else { 1 })
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Validation { object: "json".into(), reason: e.to_string() })
}

pub struct BuildRequest<'a> {
    pub kind: BuildKind,
    pub map: &'a str,
    pub names: &'a [String],
    pub y: usize,
    pub over: Option<&'a str>,
    pub assume: bool,
}

fn arity(req: &BuildRequest, min: usize, max: usize, usage: &str) -> Result<()> {
    let n = req.names.len();
    if n < min || n > max {
        return Err(Error::Validation { object: "build arguments".into(), reason: format!("expected {usage}") });
    }
    Ok(())
}

fn failed(what: &str) -> Error {
    Error::CheckFailed(format!("{what} failed re-verification"))
}

#[derive(Serialize)]
struct SeparatorOutput<'a> {
    phi: &'a RationalFunction,
    #[serde(rename = "Oy")]
    oy: PointSet,
    #[serde(with = "crate::oscillation::q_string")]
    osc_bound: Q,
    checks: &'a crate::urysohn_tietze::ConditionCReport,
}

/// Run one builder and re-check its output before returning it.
pub fn cmd_build(file: &InstanceFile, req: &BuildRequest, cfg: &RunConfig) -> Result<String> {
    let named = file.map(req.map)?;
    let f = &named.map;
    if !req.assume {
        cfg.cap(f.size())?;
    }
    let xs = f.domain();
    let ys = f.codomain();
    ys.check_point(req.y)?;
    let o = match req.over {
        Some(n) => file.set_in(n, &named.codomain)?,
        None => ys.points(),
    };
    if !ys.is_open(o) {
        return Err(Error::NotOpen(o));
    }
    let wo = f.preimage(o);
    let dom = named.domain.as_str();
    let set = |i: usize| file.set_in(&req.names[i], dom);
    let mut s = String::new();
    match req.kind {
        BuildKind::Partitions => {
            arity(req, 2, 2, "F T")?;
            let problem = PartitionProblem::new(o, set(0)?, vec![set(1)?], req.y);
            let fam = build_binary_partitions(f, &problem, cfg.depth, SearchMode::Minimal)?;
            validate_consistent_family(f, req.y, fam.levels.clone(), fam.stationary_from)?;
            verify_partition_conditions(f, set(0)?, set(1)?, &fam)?;
            if stepwise_bound_violations(f, &fam) != 0 {
                return Err(failed("partition family"));
            }
            if cfg.json {
                s = to_json(&fam)?;
                s.push('\n');
            } else {
                write_family(&mut s, "built", &NamedFamily { map: req.map.into(), family: fam });
            }
        }
        BuildKind::Separator => {
            arity(req, 2, 2, "F T")?;
            let (zero, target) = (set(0)?, set(1)?);
            let r = build_separator(f, o, zero, target, req.y, cfg.depth)?;
            let checks = verify_condition_c(f, zero, target, req.y, &r.phi.phi, r.oy);
            if !checks.holds || checks != r.checks {
                return Err(failed("separator"));
            }
            let osc = osc_on_set(xs, &r.phi.phi, r.family.carrier(r.family.depth()));
            if osc > r.phi.error_bound {
                return Err(failed("separator oscillation bound"));
            }
            let out = SeparatorOutput { phi: &r.phi.phi, oy: r.oy, osc_bound: r.phi.error_bound.clone(), checks: &checks };
            if cfg.json {
                s = to_json(&out)?;
                s.push('\n');
            } else {
                write_func(&mut s, "separator", &NamedFunction { space: dom.into(), function: r.phi.phi.clone() });
                let _ = writeln!(s, "# Oy = {}", r.oy);
                let _ = writeln!(s, "# osc bound {}", r.phi.error_bound);
                let _ = writeln!(s, "# osc over Oy {} (below 1/2: {})", checks.osc, checks.osc_below_half);
            }
        }
        BuildKind::Extend => {
            arity(req, 2, 2, "F phi")?;
            let zero = set(0)?;
            let target = &file.func(&req.names[1])?.function;
            target.check_domain(xs)?;
            let ext = tietze_extend(f, o, zero, target, req.y, &cfg.tietze())?;
            let d = verify_condition_d(f, o, zero, target, &ext.phi, req.y);
            if !d.holds || residual_violations(f, zero, target, &ext) != 0 {
                return Err(failed("extension"));
            }
            if cfg.json {
                s = to_json(&ext)?;
                s.push('\n');
            } else {
                write_func(&mut s, "extension", &NamedFunction { space: dom.into(), function: ext.phi.clone() });
                let _ = writeln!(s, "# Oy = {}", ext.oy);
                let res: Vec<String> = ext.residuals.iter().map(|r| r.to_string()).collect();
                let _ = writeln!(s, "# residuals {}", res.join(" "));
                let _ = writeln!(s, "# iterations {} exact {}", ext.iterations, ext.exact);
            }
        }
        BuildKind::SigmaFamily => {
            arity(req, 2, usize::MAX, "F T [T ...]")?;
            let zero = set(0)?;
            let given = (1..req.names.len()).map(set).collect::<Result<Vec<_>>>()?;
            let pieces = match given.as_slice() {
                [t] => canonical_decomposition(xs, wo, *t),
                _ => given,
            };
            let r = sigma_separator_family(f, o, zero, &pieces, req.y, cfg.depth)?;
            let checks = verify_sigma_condition_c(f, zero, &pieces, req.y, &r.functions, r.oy);
            if !checks.holds {
                return Err(failed("separating family"));
            }
            if cfg.json {
                s = to_json(&r)?;
                s.push('\n');
            } else {
                for (l, phi) in r.functions.iter().enumerate() {
                    let _ = writeln!(s, "# piece {l}: {}", pieces[l]);
                    write_func(&mut s, &format!("phi{l}"), &NamedFunction { space: dom.into(), function: phi.clone() });
                }
                let _ = writeln!(s, "# Oy = {}", r.oy);
            }
        }
        BuildKind::FunctionalWitness => {
            arity(req, 1, 1, "U")?;
            let u = set(0)?;
            if !xs.is_open(u) {
                return Err(Error::NotOpen(u));
            }
            let r = is_f_functionally_open(f, u);
            if !r.holds {
                return Err(Error::NotFound(format!("{u} is not f-functionally open at {:?}", r.failed_at)));
            }
            for w in &r.witnesses {
                let p = f.preimage(w.oy);
                let ok = is_f_continuous_at(f, &w.phi, w.y).holds
                    && w.phi.values().iter().all(|v| *v >= qi(0) && *v <= qi(1))
                    && w.phi.level_set(|v| !v.is_zero()).inter(p) == u.inter(p);
                if !ok {
                    return Err(failed("functional witness"));
                }
            }
            if cfg.json {
                s = to_json(&r)?;
                s.push('\n');
            } else {
                for w in &r.witnesses {
                    let _ = writeln!(s, "# y = {}, Oy = {}", w.y, w.oy);
                    write_func(&mut s, &format!("phi{}", w.y), &NamedFunction { space: dom.into(), function: w.phi.clone() });
                }
            }
        }
    }
    Ok(s)
}

/// The instances a census or harness run covers.
pub fn select_instances(sel: &Selection, cfg: &RunConfig) -> Result<Vec<FiberedMap>> {
    match (sel.n, sel.total, sel.sample) {
        (Some(n), None, Some(count)) => {
            cfg.cap(n + 3)?;
            Ok(sample_instances(cfg.seed, n, count))
        }
        (Some(n), None, None) => {
            cfg.cap(2 * n)?;
            Ok(instances_with_sides(n))
        }
        (None, Some(t), None) => {
            cfg.cap(t)?;
            Ok(instances_up_to(t))
        }
        _ => Err(Error::Validation {
            object: "selection".into(),
            reason: "give --n N, --total T, or --n N --sample COUNT".into(),
        }),
    }
}

fn describe(f: &FiberedMap) -> String {
    fn opens(s: &FiniteSpace) -> String {
        s.opens().iter().map(|o| o.to_string()).collect::<Vec<_>>().join(" ")
    }
    format!("X[{}] -> Y[{}] {:?}", opens(f.domain()), opens(f.codomain()), f.table())
}

pub fn cmd_census(sel: &Selection, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let instances = select_instances(sel, cfg)?;
    let records = census_records(&instances);
    let counts = tally(&records);
    let mut s = String::new();
    if cfg.json {
        for r in &records {
            s.push_str(&to_json(r)?);
            s.push('\n');
        }
        let _ = writeln!(s, "{{\"counts\":{}}}", to_json(&counts)?);
    } else {
        for r in records.iter().filter(|r| !r.violations.is_empty()) {
            let _ = writeln!(s, "instance {}: {}", r.id, describe(&instances[r.id]));
            for v in &r.violations {
                let _ = writeln!(s, "  violation: {v}");
            }
        }
        let _ = writeln!(s, "{}", serde_json::to_string_pretty(&counts).unwrap_or_default());
    }
    emit(out, &s)?;
    Ok(if counts.violations == 0 { 0 } else { 1 })
}

#[derive(Serialize)]
struct HarnessSummary {
    instances: usize,
    cases: usize,
    mismatches: usize,
    stepwise_violations: usize,
    residual_violations: usize,
}

pub fn cmd_harness(sel: &Selection, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let instances = select_instances(sel, cfg)?;
    let hc = HarnessConfig { depth: cfg.depth, tietze: cfg.tietze() };
    let report = equivalence_harness(&instances, &hc);
    let summary = HarnessSummary {
        instances: report.instances,
        cases: report.cases,
        mismatches: report.mismatches,
        stepwise_violations: report.stepwise_violations,
        residual_violations: report.residual_violations,
    };
    let mut s = String::new();
    if cfg.json {
        for r in &report.records {
            s.push_str(&to_json(r)?);
            s.push('\n');
        }
        let _ = writeln!(s, "{{\"summary\":{}}}", to_json(&summary)?);
    } else {
        for r in report.records.iter().filter(|r| !r.mismatches.is_empty()) {
            let _ = writeln!(s, "instance {}: {}", r.id, describe(&instances[r.id]));
            for m in &r.mismatches {
                let _ = writeln!(s, "  mismatch: {m}");
            }
        }
        let _ = writeln!(s, "{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
    }
    emit(out, &s)?;
    let clean = summary.mismatches == 0 && summary.stepwise_violations == 0 && summary.residual_violations == 0;
    Ok(if clean { 0 } else { 1 })
}
