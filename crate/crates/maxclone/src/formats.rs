//! Text formats for relations, functions, instances and max-implementations.
//!
//! All formats are line based; blank lines and lines starting with `#`
//! are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::catalog;
use crate::closure::Closure;
use crate::counting::CspInstance;
use crate::error::{Error, Result};
use crate::fnspace::PartialFunction;
use crate::gadget::MaxImplementation;
use crate::relation::{self, Relation};

struct Lines<'a> {
    source: &'a str,
    items: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(source: &'a str, text: &'a str) -> Lines<'a> {
        let items = text
            .lines()
            .enumerate()
            .filter(|(_, l)| {
                let t = l.trim();
                !t.is_empty() && !t.starts_with('#')
            })
            .map(|(i, l)| (i + 1, l.split_whitespace().collect()))
            .collect();
        Lines { source, items, pos: 0 }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse { source_name: self.source.to_string(), line, message: message.into() }
    }

    fn last_line(&self) -> usize {
        self.items.last().map_or(1, |l| l.0)
    }

    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        let item = self.items.get(self.pos).cloned();
        self.pos += 1;
        item
    }

    fn peek(&self) -> Option<&(usize, Vec<&'a str>)> {
        self.items.get(self.pos)
    }

    fn number(&self, line: usize, s: Option<&&str>, what: &str) -> Result<usize> {
        s.and_then(|s| s.parse().ok()).ok_or_else(|| self.err(line, format!("expected {what}")))
    }

    fn domain(&mut self) -> Result<usize> {
        match self.next() {
            Some((line, w)) if w.first() == Some(&"domain") => {
                if w.len() != 2 {
                    return Err(self.err(line, "expected `domain <d>`"));
                }
                let d = self.number(line, w.get(1), "a domain size")?;
                relation::check_domain(d).map_err(|e| self.err(line, e.to_string()))?;
                Ok(d)
            }
            Some((line, _)) => Err(self.err(line, "expected `domain <d>` header")),
            None => Err(self.err(1, "empty input")),
        }
    }
}

fn digit_value(c: char, d: usize) -> Option<u8> {
    c.to_digit(10).filter(|&v| (v as usize) < d).map(|v| v as u8)
}

/// Relations in file order with their domain size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationFile {
    pub d: usize,
    pub relations: Vec<(String, Relation)>,
}

impl RelationFile {
    pub fn get(&self, name: &str) -> Option<&Relation> {
        self.relations.iter().find(|(n, _)| n == name).map(|(_, r)| r)
    }

    pub fn to_map(&self) -> BTreeMap<String, Relation> {
        self.relations.iter().cloned().collect()
    }
}

/// Parses `domain d` followed by `relation NAME ARITY` blocks of tuple
/// lines closed by `end`. The empty tuple is written `()`.
pub fn parse_relations(source: &str, text: &str) -> Result<RelationFile> {
    let mut lines = Lines::new(source, text);
    let d = lines.domain()?;
    let mut relations: Vec<(String, Relation)> = Vec::new();
    while let Some((line, w)) = lines.next() {
        if w[0] != "relation" || w.len() != 3 {
            return Err(lines.err(line, "expected `relation <name> <arity>`"));
        }
        let name = w[1].to_string();
        if relations.iter().any(|(n, _)| *n == name) {
            return Err(lines.err(line, format!("relation {name} defined twice")));
        }
        let arity = lines.number(line, w.get(2), "an arity")?;
        relation::cell_count(d, arity).map_err(|e| lines.err(line, e.to_string()))?;
        let mut tuples: Vec<Vec<u8>> = Vec::new();
        loop {
            let Some((tl, tw)) = lines.next() else {
                return Err(lines.err(lines.last_line(), format!("relation {name} is missing `end`")));
            };
            if tw == ["end"] {
                break;
            }
            if tw.len() != 1 {
                return Err(lines.err(tl, "expected one tuple per line"));
            }
            let t = if tw[0] == "()" {
                Vec::new()
            } else {
                tw[0]
                    .chars()
                    .map(|c| digit_value(c, d))
                    .collect::<Option<Vec<u8>>>()
                    .ok_or_else(|| lines.err(tl, format!("bad tuple {:?} for domain {d}", tw[0])))?
            };
            if t.len() != arity {
                return Err(lines.err(tl, format!("tuple {:?} does not have arity {arity}", tw[0])));
            }
            tuples.push(t);
        }
        let r = Relation::from_tuples(d, arity, &tuples).map_err(|e| lines.err(line, e.to_string()))?;
        relations.push((name, r));
    }
    Ok(RelationFile { d, relations })
}

fn write_relation_block(out: &mut String, name: &str, r: &Relation) {
    let _ = writeln!(out, "relation {name} {}", r.arity());
    for t in r.tuples() {
        if t.is_empty() {
            out.push_str("()\n");
        } else {
            let s: String = t.iter().map(|v| char::from(b'0' + v)).collect();
            let _ = writeln!(out, "{s}");
        }
    }
    out.push_str("end\n");
}

/// Inverse of [`parse_relations`].
pub fn write_relations(d: usize, relations: &[(String, Relation)]) -> String {
    let mut out = format!("domain {d}\n");
    for (name, r) in relations {
        write_relation_block(&mut out, name, r);
    }
    out
}

/// Closure members as relation blocks named `C0`, `C1`, .., each followed
/// by its derivation.
pub fn write_closure(closure: &Closure) -> String {
    let mut out = format!("domain {}\n", closure.domain_size());
    for (i, r) in closure.relations().into_iter().enumerate() {
        write_relation_block(&mut out, &format!("C{i}"), r);
        if let Some(der) = closure.derivation(r) {
            out.push_str(&der.render());
        }
    }
    out
}

/// Parses `domain d` followed by `function NAME ARITY` blocks with one
/// entry (a digit or `-`) per input tuple in index order, closed by `end`.
pub fn parse_functions(source: &str, text: &str) -> Result<(usize, Vec<(String, PartialFunction)>)> {
    let mut lines = Lines::new(source, text);
    let d = lines.domain()?;
    let mut out = Vec::new();
    while let Some((line, w)) = lines.next() {
        if w[0] != "function" || w.len() != 3 {
            return Err(lines.err(line, "expected `function <name> <arity>`"));
        }
        let arity = lines.number(line, w.get(2), "an arity")?;
        let cells = relation::cell_count(d, arity).map_err(|e| lines.err(line, e.to_string()))?;
        let mut table = Vec::with_capacity(cells);
        loop {
            let Some((tl, tw)) = lines.next() else {
                return Err(lines.err(lines.last_line(), format!("function {} is missing `end`", w[1])));
            };
            if tw == ["end"] {
                break;
            }
            let entry = match tw.as_slice() {
                ["-"] => None,
                [s] if s.len() == 1 => {
                    Some(digit_value(s.chars().next().unwrap(), d).ok_or_else(|| lines.err(tl, format!("bad entry {s:?}")))?)
                }
                _ => return Err(lines.err(tl, "expected a digit or `-`")),
            };
            table.push(entry);
        }
        if table.len() != cells {
            return Err(lines.err(line, format!("function {} needs {cells} entries, found {}", w[1], table.len())));
        }
        let f = PartialFunction::new(d, arity, &table).map_err(|e| lines.err(line, e.to_string()))?;
        out.push((w[1].to_string(), f));
    }
    Ok((d, out))
}

/// Inverse of [`parse_functions`] for one function.
pub fn write_function(name: &str, f: &PartialFunction) -> String {
    let mut out = format!("function {name} {}\n", f.arity());
    for e in f.table() {
        match e {
            Some(v) => {
                let _ = writeln!(out, "{v}");
            }
            None => out.push_str("-\n"),
        }
    }
    out.push_str("end\n");
    out
}

fn parse_instance_lines(lines: &mut Lines<'_>, named: &BTreeMap<String, Relation>, allow_free: bool) -> Result<(CspInstance, Option<Vec<usize>>)> {
    let d = lines.domain()?;
    let mut vars: Vec<String> = Vec::new();
    while let Some((line, w)) = lines.peek().cloned() {
        if w[0] != "var" {
            break;
        }
        lines.pos += 1;
        for v in &w[1..] {
            if vars.iter().any(|x| x == v) {
                return Err(lines.err(line, format!("variable {v} declared twice")));
            }
            vars.push(v.to_string());
        }
    }
    let mut p = CspInstance::new(d, vars).map_err(|e| lines.err(1, e.to_string()))?;
    let mut free = None;
    loop {
        let Some((line, w)) = lines.next() else {
            return Err(lines.err(lines.last_line(), "missing `end`"));
        };
        match w[0] {
            "end" if w.len() == 1 => break,
            "con" if w.len() >= 2 => {
                let name = w[1];
                let r = match named.get(name) {
                    Some(r) => r.clone(),
                    None => catalog::lookup(name, d).map_err(|e| lines.err(line, e.to_string()))?,
                };
                let scope: Vec<&str> = w[2..].to_vec();
                p.add(name, r, &scope).map_err(|e| lines.err(line, e.to_string()))?;
            }
            "free" if allow_free && free.is_none() => {
                let idx = w[1..]
                    .iter()
                    .map(|v| p.var_index(v).ok_or_else(|| lines.err(line, format!("unknown variable {v}"))))
                    .collect::<Result<Vec<_>>>()?;
                free = Some(idx);
            }
            _ => return Err(lines.err(line, format!("unexpected line starting with {:?}", w[0]))),
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(lines.err(line, "trailing input after `end`"));
    }
    Ok((p, free))
}

/// Parses `domain d`, `var ..` lines, `con NAME v ..` lines and `end`.
/// Names are looked up in `named` first, then in the catalog.
pub fn parse_instance(source: &str, text: &str, named: &BTreeMap<String, Relation>) -> Result<CspInstance> {
    let mut lines = Lines::new(source, text);
    Ok(parse_instance_lines(&mut lines, named, false)?.0)
}

/// An instance file with one `free v ..` line naming the `x` variables.
/// The implemented relation is computed by exact counting.
pub fn parse_maximpl(source: &str, text: &str, named: &BTreeMap<String, Relation>) -> Result<MaxImplementation> {
    let mut lines = Lines::new(source, text);
    let (p, free) = parse_instance_lines(&mut lines, named, true)?;
    let free = free.ok_or_else(|| lines.err(lines.last_line(), "missing `free` line"))?;
    MaxImplementation::new(p, free)
}

/// Inverse of [`parse_instance`].
pub fn write_instance(p: &CspInstance) -> String {
    let mut out = format!("domain {}\n", p.d);
    if !p.vars.is_empty() {
        let _ = writeln!(out, "var {}", p.vars.join(" "));
    }
    for c in &p.constraints {
        let scope: Vec<&str> = c.scope.iter().map(|&i| p.vars[i].as_str()).collect();
        let _ = writeln!(out, "con {} {}", c.name, scope.join(" "));
    }
    out.push_str("end\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting;
    use num_bigint::BigUint;

    #[test]
    fn relation_round_trip() {
        let text = "# two relations\ndomain 2\nrelation N 2\n01\n10\nend\n\nrelation T 0\n()\nend\n";
        let file = parse_relations("r.txt", text).unwrap();
        assert_eq!(file.get("N").unwrap(), &catalog::neq());
        assert!(file.get("T").unwrap().is_full());
        let again = write_relations(file.d, &file.relations);
        assert_eq!(parse_relations("again", &again).unwrap(), file);
    }

    #[test]
    fn relation_errors_have_lines() {
        let bad = "domain 2\nrelation N 2\n01\n12\nend\n";
        assert!(matches!(parse_relations("b", bad), Err(Error::Parse { line: 4, .. })));
        assert!(matches!(parse_relations("b", "domain 2\nrelation N 2\n01\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_relations("b", "relation N 2\nend\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_relations("b", "domain 9\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn function_round_trip() {
        let text = "domain 2\nfunction f 1\n1\n-\nend\n";
        let (d, fs) = parse_functions("f", text).unwrap();
        assert_eq!(d, 2);
        assert_eq!(fs[0].1.table(), vec![Some(1), None]);
        assert_eq!(format!("domain 2\n{}", write_function("f", &fs[0].1)), text);
        assert!(parse_functions("f", "domain 2\nfunction f 1\n1\nend\n").is_err());
    }

    #[test]
    fn instance_and_maximpl() {
        let text = "domain 2\nvar x y\ncon OR x y\ncon NAND x y\nend\n";
        let p = parse_instance("i", text, &BTreeMap::new()).unwrap();
        assert_eq!(counting::count(&p), BigUint::from(2u8));
        assert_eq!(write_instance(&p), text);
        let err = parse_instance("i", "domain 2\nvar x\ncon IMP x\nend\n", &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));

        let g = parse_maximpl("g", "domain 2\nvar x y\ncon IMP x y\nfree x\nend\n", &BTreeMap::new()).unwrap();
        assert_eq!(g.target, catalog::delta0());
        assert!(parse_maximpl("g", "domain 2\nvar x y\ncon IMP x y\nend\n", &BTreeMap::new()).is_err());
    }

    #[test]
    fn named_relations_take_precedence() {
        let mut named = BTreeMap::new();
        named.insert("IMP".to_string(), catalog::neq());
        let p = parse_instance("i", "domain 2\nvar x y\ncon IMP x y\nend\n", &named).unwrap();
        assert_eq!(counting::count(&p), BigUint::from(2u8));
    }
}
