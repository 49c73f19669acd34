//! Line-oriented text format for spaces, maps, sets, functions and
//! partition families.
//!
//! ```text
//! # comment
//! space S
//! points 2
//! opens
//! -
//! 0
//! 0 1
//!
//! map f S -> S
//! 0 -> 0
//! 1 -> 1
//!
//! set F in S
//! 1
//!
//! func phi on S
//! 0: 1/2
//!
//! family G of f at 0
//! stationary 1
//! level 0
//! O: 0 1
//! blocks: 0=0,1
//! ```
//!
//! Sets are space-separated indices, `-` for the empty set. Unlisted
//! function values are 0. A stanza runs until the next keyword line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::oscillation::{parse_q, RationalFunction};
use crate::partitions::{validate_consistent_family, ConsistentBinaryFamily, Level, RegularKPartition};
use crate::set::{PointSet, MASK_BITS};
use crate::space_core::{validate_topology_with_cap, FiberedMap, FiniteSpace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedMap {
    pub domain: String,
    pub codomain: String,
    pub map: FiberedMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedSet {
    pub space: String,
    pub set: PointSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedFunction {
    pub space: String,
    pub function: RationalFunction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedFamily {
    pub map: String,
    pub family: ConsistentBinaryFamily,
}

/// Parsed objects in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstanceFile {
    pub spaces: Vec<(String, FiniteSpace)>,
    pub maps: Vec<(String, NamedMap)>,
    pub sets: Vec<(String, NamedSet)>,
    pub funcs: Vec<(String, NamedFunction)>,
    pub families: Vec<(String, NamedFamily)>,
}

fn find<'a, T>(items: &'a [(String, T)], name: &str, kind: &str) -> Result<&'a T> {
    items
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, v)| v)
        .ok_or_else(|| Error::Validation { object: format!("{kind} {name}"), reason: "not defined".into() })
}

impl InstanceFile {
    pub fn space(&self, name: &str) -> Result<&FiniteSpace> {
        find(&self.spaces, name, "space")
    }

    pub fn map(&self, name: &str) -> Result<&NamedMap> {
        find(&self.maps, name, "map")
    }

    pub fn set(&self, name: &str) -> Result<&NamedSet> {
        find(&self.sets, name, "set")
    }

    pub fn func(&self, name: &str) -> Result<&NamedFunction> {
        find(&self.funcs, name, "func")
    }

    pub fn family(&self, name: &str) -> Result<&NamedFamily> {
        find(&self.families, name, "family")
    }

    /// A set that must live in `space`.
    pub fn set_in(&self, name: &str, space: &str) -> Result<PointSet> {
        let s = self.set(name)?;
        if s.space != space {
            return Err(Error::Validation {
                object: format!("set {name}"),
                reason: format!("lives in {} but {space} is required", s.space),
            });
        }
        Ok(s.set)
    }
}

const KEYWORDS: [&str; 5] = ["space", "map", "set", "func", "family"];

struct Line<'a> {
    no: usize,
    text: &'a str,
}

fn syntax(line: &Line, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { line: line.no, col, msg: msg.into() }
}

fn column(line: &Line, token: &str) -> usize {
    let base = line.text.as_ptr() as usize;
    let at = token.as_ptr() as usize;
    at.saturating_sub(base) + 1
}

fn parse_index(line: &Line, tok: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| syntax(line, column(line, tok), format!("expected a point index, found {tok:?}")))
}

fn parse_set(line: &Line, body: &str) -> Result<PointSet> {
    let toks: Vec<&str> = body.split_whitespace().collect();
    if toks == ["-"] {
        return Ok(PointSet::EMPTY);
    }
    let mut s = PointSet::EMPTY;
    for t in toks {
        let i = parse_index(line, t)?;
        if i >= MASK_BITS {
            return Err(syntax(line, column(line, t), format!("point {i} exceeds {}", MASK_BITS - 1)));
        }
        s = s.with(i);
    }
    Ok(s)
}

fn header<'a>(line: &Line<'a>, n: usize) -> Result<Vec<&'a str>> {
    let toks: Vec<&str> = line.text.split_whitespace().collect();
    if toks.len() != n {
        return Err(syntax(line, 1, format!("{} header expects {} fields", toks[0], n)));
    }
    Ok(toks)
}

fn invalid(object: String, e: Error) -> Error {
    Error::Validation { object, reason: e.to_string() }
}

/// Parse and validate a whole file.
pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    let lines: Vec<Line> = text
        .lines()
        .enumerate()
        .map(|(i, raw)| Line { no: i + 1, text: raw.split('#').next().unwrap_or("") })
        .filter(|l| !l.text.trim().is_empty())
        .collect();
    let mut out = InstanceFile::default();
    let mut i = 0;
    while i < lines.len() {
        let head = &lines[i];
        let kw = head.text.split_whitespace().next().unwrap_or("");
        let mut end = i + 1;
        while end < lines.len() && !KEYWORDS.contains(&lines[end].text.split_whitespace().next().unwrap_or("")) {
            end += 1;
        }
        let body = &lines[i + 1..end];
        match kw {
            "space" => parse_space(&mut out, head, body)?,
            "map" => parse_map(&mut out, head, body)?,
            "set" => parse_named_set(&mut out, head, body)?,
            "func" => parse_func(&mut out, head, body)?,
            "family" => parse_family(&mut out, head, body)?,
            other => {
                let col = column(head, other);
                return Err(syntax(head, col, format!("unknown keyword {other:?}")));
            }
        }
        i = end;
    }
    Ok(out)
}

fn check_fresh<T>(items: &[(String, T)], name: &str, line: &Line) -> Result<()> {
    if items.iter().any(|(n, _)| n == name) {
        return Err(syntax(line, 1, format!("{name} is defined twice")));
    }
    Ok(())
}

fn parse_space(out: &mut InstanceFile, head: &Line, body: &[Line]) -> Result<()> {
    let name = header(head, 2)?[1].to_string();
    check_fresh(&out.spaces, &name, head)?;
    let mut rest = body.iter();
    let pts = rest.next().ok_or_else(|| syntax(head, 1, "missing points line"))?;
    let toks: Vec<&str> = pts.text.split_whitespace().collect();
    if toks.len() != 2 || toks[0] != "points" {
        return Err(syntax(pts, 1, "expected `points <n>`"));
    }
    let n = parse_index(pts, toks[1])?;
    let op = rest.next().ok_or_else(|| syntax(pts, 1, "missing opens line"))?;
    if op.text.trim() != "opens" {
        return Err(syntax(op, 1, "expected `opens`"));
    }
    let opens = rest.map(|l| parse_set(l, l.text)).collect::<Result<Vec<_>>>()?;
    let space = validate_topology_with_cap(n, &opens, MASK_BITS).map_err(|e| invalid(format!("space {name}"), e))?;
    out.spaces.push((name, space));
    Ok(())
}

fn parse_map(out: &mut InstanceFile, head: &Line, body: &[Line]) -> Result<()> {
    let toks = header(head, 5)?;
    if toks[3] != "->" {
        return Err(syntax(head, column(head, toks[3]), "expected `->`"));
    }
    let name = toks[1].to_string();
    check_fresh(&out.maps, &name, head)?;
    let x = out.space(toks[2])?.clone();
    let y = out.space(toks[4])?.clone();
    let mut table: Vec<Option<usize>> = vec![None; x.n()];
    for l in body {
        let parts: Vec<&str> = l.text.split_whitespace().collect();
        if parts.len() != 3 || parts[1] != "->" {
            return Err(syntax(l, 1, "expected `i -> j`"));
        }
        let a = parse_index(l, parts[0])?;
        let b = parse_index(l, parts[2])?;
        if a >= x.n() {
            return Err(syntax(l, column(l, parts[0]), format!("point {a} is not in {}", toks[2])));
        }
        if table[a].replace(b).is_some() {
            return Err(syntax(l, column(l, parts[0]), format!("point {a} is mapped twice")));
        }
    }
    let object = format!("map {name}");
    let table = table
        .into_iter()
        .enumerate()
        .map(|(a, v)| v.ok_or_else(|| Error::Validation { object: object.clone(), reason: format!("point {a} has no image") }))
        .collect::<Result<Vec<_>>>()?;
    let map = FiberedMap::new(x, y, table).map_err(|e| invalid(object, e))?;
    out.maps.push((name, NamedMap { domain: toks[2].into(), codomain: toks[4].into(), map }));
    Ok(())
}

fn parse_named_set(out: &mut InstanceFile, head: &Line, body: &[Line]) -> Result<()> {
    let toks = header(head, 4)?;
    if toks[2] != "in" {
        return Err(syntax(head, column(head, toks[2]), "expected `in`"));
    }
    let name = toks[1].to_string();
    check_fresh(&out.sets, &name, head)?;
    let space = out.space(toks[3])?;
    let mut set = PointSet::EMPTY;
    for l in body {
        set = set.union(parse_set(l, l.text)?);
    }
    space.check_set(set).map_err(|e| invalid(format!("set {name}"), e))?;
    out.sets.push((name, NamedSet { space: toks[3].into(), set }));
    Ok(())
}

fn parse_func(out: &mut InstanceFile, head: &Line, body: &[Line]) -> Result<()> {
    let toks = header(head, 4)?;
    if toks[2] != "on" {
        return Err(syntax(head, column(head, toks[2]), "expected `on`"));
    }
    let name = toks[1].to_string();
    check_fresh(&out.funcs, &name, head)?;
    let n = out.space(toks[3])?.n();
    let mut phi = RationalFunction::zero(n);
    let mut seen = PointSet::EMPTY;
    for l in body {
        let (pt, val) = l.text.split_once(':').ok_or_else(|| syntax(l, 1, "expected `i: p/q`"))?;
        let i = parse_index(l, pt.trim())?;
        if i >= n {
            return Err(syntax(l, 1, format!("point {i} is not in {}", toks[3])));
        }
        if seen.contains(i) {
            return Err(syntax(l, 1, format!("point {i} is given twice")));
        }
        seen = seen.with(i);
        let v = parse_q(val).ok_or_else(|| syntax(l, column(l, val.trim()), format!("bad rational {:?}", val.trim())))?;
        phi.set(i, v);
    }
    out.funcs.push((name, NamedFunction { space: toks[3].into(), function: phi }));
    Ok(())
}

fn parse_family(out: &mut InstanceFile, head: &Line, body: &[Line]) -> Result<()> {
    let toks = header(head, 6)?;
    if toks[2] != "of" || toks[4] != "at" {
        return Err(syntax(head, 1, "expected `family <name> of <map> at <y>`"));
    }
    let name = toks[1].to_string();
    check_fresh(&out.families, &name, head)?;
    let f = out.map(toks[3])?.map.clone();
    let y = parse_index(head, toks[5])?;
    let mut stationary = None;
    let mut levels: Vec<(Option<PointSet>, BTreeMap<u64, PointSet>)> = Vec::new();
    for l in body {
        let t = l.text.trim();
        if let Some(s) = t.strip_prefix("stationary") {
            stationary = Some(parse_index(l, s.trim())?);
        } else if let Some(s) = t.strip_prefix("level") {
            let n = parse_index(l, s.trim())?;
            if n != levels.len() {
                return Err(syntax(l, 1, format!("expected level {}", levels.len())));
            }
            levels.push((None, BTreeMap::new()));
        } else if let Some(s) = t.strip_prefix("O:") {
            let cur = levels.last_mut().ok_or_else(|| syntax(l, 1, "`O:` before any level"))?;
            cur.0 = Some(parse_set(l, s)?);
        } else if let Some(s) = t.strip_prefix("blocks:") {
            let cur = levels.last_mut().ok_or_else(|| syntax(l, 1, "`blocks:` before any level"))?;
            for item in s.split_whitespace() {
                let (k, pts) = item.split_once('=').ok_or_else(|| syntax(l, column(l, item), "expected `k=i,j`"))?;
                let k = k.parse::<u64>().map_err(|_| syntax(l, column(l, item), "bad block index"))?;
                let set = parse_set(l, &pts.replace(',', " "))?;
                if cur.1.insert(k, set).is_some() {
                    return Err(syntax(l, column(l, item), format!("block {k} given twice")));
                }
            }
        } else {
            return Err(syntax(l, 1, format!("unexpected line {t:?}")));
        }
    }
    let object = format!("family {name}");
    let levels = levels
        .into_iter()
        .enumerate()
        .map(|(n, (o, blocks))| {
            let o = o.ok_or_else(|| Error::Validation { object: object.clone(), reason: format!("level {n} has no O") })?;
            let partition = RegularKPartition { carrier: f.preimage(o), k: 1u64 << n.min(63), blocks };
            Ok(Level { o, partition })
        })
        .collect::<Result<Vec<_>>>()?;
    let family = validate_consistent_family(&f, y, levels, stationary).map_err(|e| invalid(object, e))?;
    out.families.push((name, NamedFamily { map: toks[3].into(), family }));
    Ok(())
}

fn write_set(s: PointSet) -> String {
    if s.is_empty() {
        "-".into()
    } else {
        s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
    }
}

pub fn write_space(out: &mut String, name: &str, s: &FiniteSpace) {
    let _ = writeln!(out, "space {name}\npoints {}\nopens", s.n());
    for &o in s.opens() {
        let _ = writeln!(out, "{}", write_set(o));
    }
}

pub fn write_map(out: &mut String, name: &str, m: &NamedMap) {
    let _ = writeln!(out, "map {name} {} -> {}", m.domain, m.codomain);
    for (a, b) in m.map.table().iter().enumerate() {
        let _ = writeln!(out, "{a} -> {b}");
    }
}

pub fn write_named_set(out: &mut String, name: &str, s: &NamedSet) {
    let _ = writeln!(out, "set {name} in {}\n{}", s.space, write_set(s.set));
}

pub fn write_func(out: &mut String, name: &str, f: &NamedFunction) {
    let _ = writeln!(out, "func {name} on {}", f.space);
    for (i, v) in f.function.values().iter().enumerate() {
        let _ = writeln!(out, "{i}: {v}");
    }
}

pub fn write_family(out: &mut String, name: &str, fam: &NamedFamily) {
    let f = &fam.family;
    let _ = writeln!(out, "family {name} of {} at {}", fam.map, f.y);
    if let Some(s) = f.stationary_from {
        let _ = writeln!(out, "stationary {s}");
    }
    for (n, level) in f.levels.iter().enumerate() {
        let blocks: Vec<String> = level
            .partition
            .nonempty()
            .map(|(k, b)| format!("{k}={}", b.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        let _ = writeln!(out, "level {n}\nO: {}\nblocks: {}", write_set(level.o), blocks.join(" "));
    }
}

/// Text form of a whole file; `parse_instance` reads it back unchanged.
pub fn serialize_instance(file: &InstanceFile) -> String {
    let mut out = String::new();
    for (n, s) in &file.spaces {
        write_space(&mut out, n, s);
        out.push('\n');
    }
    for (n, m) in &file.maps {
        write_map(&mut out, n, m);
        out.push('\n');
    }
    for (n, s) in &file.sets {
        write_named_set(&mut out, n, s);
        out.push('\n');
    }
    for (n, f) in &file.funcs {
        write_func(&mut out, n, f);
        out.push('\n');
    }
    for (n, f) in &file.families {
        write_family(&mut out, n, f);
        out.push('\n');
    }
    out
}
