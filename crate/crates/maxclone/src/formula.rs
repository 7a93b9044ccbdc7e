//! Conjunctive formulas with `∃`, `∃_k` and block max quantifiers.
//!
//! Text form is an s-expression: `(atom NAME v1 v2 ..)`, `(and f g ..)`,
//! `(exists (v ..) f)`, `(exists_k K (v ..) f)` and `(mex (v ..) f)`.
//! Several variables under `exists_k` mean nested quantifiers, the first
//! one outermost.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;

use crate::catalog;
use crate::error::{Error, Result};
use crate::relation::Relation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Exists,
    ExistsK(usize),
    Max,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Atom { rel: String, vars: Vec<String> },
    And(Vec<Formula>),
    Quant { kind: Quantifier, vars: Vec<String>, body: Box<Formula> },
}

impl Formula {
    pub fn atom(rel: &str, vars: &[&str]) -> Formula {
        Formula::Atom { rel: rel.to_string(), vars: vars.iter().map(|v| v.to_string()).collect() }
    }

    pub fn quant(kind: Quantifier, vars: &[&str], body: Formula) -> Formula {
        Formula::Quant { kind, vars: vars.iter().map(|v| v.to_string()).collect(), body: Box::new(body) }
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Formula::Atom { vars, .. } => {
                for v in vars {
                    if !bound.contains(v) && !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
            Formula::And(children) => children.iter().for_each(|c| c.collect_free(bound, out)),
            Formula::Quant { vars, body, .. } => {
                let before = bound.len();
                bound.extend(vars.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(before);
            }
        }
    }

    /// Every variable name used anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Atom { vars, .. } | Formula::Quant { vars, .. } => out.extend(vars.iter().cloned()),
            Formula::And(_) => {}
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Atom { .. } => {}
            Formula::And(children) => children.iter().for_each(|c| c.visit(f)),
            Formula::Quant { body, .. } => body.visit(f),
        }
    }

    fn has_quantifier(&self, pred: impl Fn(Quantifier) -> bool + Copy) -> bool {
        match self {
            Formula::Atom { .. } => false,
            Formula::And(children) => children.iter().any(|c| c.has_quantifier(pred)),
            Formula::Quant { kind, body, .. } => pred(*kind) || body.has_quantifier(pred),
        }
    }

    /// Renames free occurrences of `from`.
    pub fn rename_free(&self, from: &str, to: &str) -> Formula {
        match self {
            Formula::Atom { rel, vars } => Formula::Atom {
                rel: rel.clone(),
                vars: vars.iter().map(|v| if v == from { to.to_string() } else { v.clone() }).collect(),
            },
            Formula::And(children) => Formula::And(children.iter().map(|c| c.rename_free(from, to)).collect()),
            Formula::Quant { kind, vars, body } => {
                if vars.iter().any(|v| v == from) {
                    self.clone()
                } else {
                    Formula::Quant { kind: *kind, vars: vars.clone(), body: Box::new(body.rename_free(from, to)) }
                }
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom { rel, vars } => {
                write!(f, "(atom {rel}")?;
                for v in vars {
                    write!(f, " {v}")?;
                }
                write!(f, ")")
            }
            Formula::And(children) => {
                write!(f, "(and")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
            Formula::Quant { kind, vars, body } => {
                let vars = vars.join(" ");
                match kind {
                    Quantifier::Exists => write!(f, "(exists ({vars}) {body})"),
                    Quantifier::ExistsK(k) => write!(f, "(exists_k {k} ({vars}) {body})"),
                    Quantifier::Max => write!(f, "(mex ({vars}) {body})"),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Sym(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn line(&self) -> usize {
        match self {
            Sexp::Sym(_, l) | Sexp::List(_, l) => *l,
        }
    }
}

fn tokenize(text: &str) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let code = line.split(';').next().unwrap_or("");
        let code = if code.trim_start().starts_with('#') { "" } else { code };
        let mut word = String::new();
        for ch in code.chars() {
            if ch == '(' || ch == ')' || ch.is_whitespace() {
                if !word.is_empty() {
                    out.push((std::mem::take(&mut word), line_no));
                }
                if !ch.is_whitespace() {
                    out.push((ch.to_string(), line_no));
                }
            } else {
                word.push(ch);
            }
        }
        if !word.is_empty() {
            out.push((word, line_no));
        }
    }
    out
}

struct Parser<'a> {
    source: &'a str,
    tokens: Vec<(String, usize)>,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse { source_name: self.source.to_string(), line, message: message.into() }
    }

    fn sexp(&mut self) -> Result<Sexp> {
        let last_line = self.tokens.last().map_or(1, |t| t.1);
        let (tok, line) = self.tokens.get(self.pos).cloned().ok_or_else(|| self.err(last_line, "unexpected end of input"))?;
        self.pos += 1;
        match tok.as_str() {
            "(" => {
                let mut items = Vec::new();
                loop {
                    match self.tokens.get(self.pos) {
                        Some((t, _)) if t == ")" => {
                            self.pos += 1;
                            return Ok(Sexp::List(items, line));
                        }
                        Some(_) => items.push(self.sexp()?),
                        None => return Err(self.err(line, "unclosed parenthesis")),
                    }
                }
            }
            ")" => Err(self.err(line, "unexpected `)`")),
            _ => Ok(Sexp::Sym(tok, line)),
        }
    }

    fn variable(&self, s: &Sexp) -> Result<String> {
        match s {
            Sexp::Sym(v, line) => {
                let mut chars = v.chars();
                let ok = chars.next().is_some_and(|c| c.is_ascii_lowercase())
                    && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
                if ok {
                    Ok(v.clone())
                } else {
                    Err(self.err(*line, format!("bad variable name {v:?}")))
                }
            }
            Sexp::List(_, line) => Err(self.err(*line, "expected a variable")),
        }
    }

    fn var_list(&self, s: &Sexp) -> Result<Vec<String>> {
        match s {
            Sexp::List(items, line) => {
                if items.is_empty() {
                    return Err(self.err(*line, "empty variable list"));
                }
                let vars: Vec<String> = items.iter().map(|v| self.variable(v)).collect::<Result<_>>()?;
                let distinct: BTreeSet<&String> = vars.iter().collect();
                if distinct.len() != vars.len() {
                    return Err(self.err(*line, "repeated variable in quantifier block"));
                }
                Ok(vars)
            }
            Sexp::Sym(_, line) => Err(self.err(*line, "expected a parenthesized variable list")),
        }
    }

    fn formula(&self, s: &Sexp) -> Result<Formula> {
        let Sexp::List(items, line) = s else {
            return Err(self.err(s.line(), "expected a formula"));
        };
        let line = *line;
        let head = match items.first() {
            Some(Sexp::Sym(h, _)) => h.as_str(),
            _ => return Err(self.err(line, "formula must start with a keyword")),
        };
        let arity_err = |what: &str| self.err(line, format!("malformed ({what} ..)"));
        match head {
            "atom" => {
                let rel = match items.get(1) {
                    Some(Sexp::Sym(r, _)) => r.clone(),
                    _ => return Err(arity_err("atom")),
                };
                let vars = items[2..].iter().map(|v| self.variable(v)).collect::<Result<_>>()?;
                Ok(Formula::Atom { rel, vars })
            }
            "and" => Ok(Formula::And(items[1..].iter().map(|c| self.formula(c)).collect::<Result<_>>()?)),
            "exists" | "mex" => {
                if items.len() != 3 {
                    return Err(arity_err(head));
                }
                let kind = if head == "exists" { Quantifier::Exists } else { Quantifier::Max };
                Ok(Formula::Quant { kind, vars: self.var_list(&items[1])?, body: Box::new(self.formula(&items[2])?) })
            }
            "exists_k" => {
                if items.len() != 4 {
                    return Err(arity_err(head));
                }
                let k = match &items[1] {
                    Sexp::Sym(k, _) => k.parse::<usize>().ok().filter(|&k| k >= 1),
                    _ => None,
                }
                .ok_or_else(|| self.err(line, "exists_k needs a positive integer"))?;
                Ok(Formula::Quant {
                    kind: Quantifier::ExistsK(k),
                    vars: self.var_list(&items[2])?,
                    body: Box::new(self.formula(&items[3])?),
                })
            }
            other => Err(self.err(line, format!("unknown keyword {other:?}"))),
        }
    }
}

/// Parses one formula; `source_name` appears in error messages.
pub fn parse(source_name: &str, text: &str) -> Result<Formula> {
    let mut p = Parser { source: source_name, tokens: tokenize(text), pos: 0 };
    let s = p.sexp()?;
    if let Some((_, line)) = p.tokens.get(p.pos) {
        return Err(p.err(*line, "trailing input after formula"));
    }
    p.formula(&s)
}

/// Resolves relation names: explicit bindings first, then the catalog.
#[derive(Debug, Clone)]
pub struct Env {
    pub d: usize,
    pub named: BTreeMap<String, Relation>,
}

impl Env {
    pub fn new(d: usize) -> Env {
        Env { d, named: BTreeMap::new() }
    }

    pub fn with(mut self, name: &str, r: Relation) -> Env {
        self.named.insert(name.to_string(), r);
        self
    }

    pub fn resolve(&self, name: &str) -> Result<Relation> {
        match self.named.get(name) {
            Some(r) => Ok(r.clone()),
            None => catalog::lookup(name, self.d),
        }
    }
}

/// A relation together with the variables labelling its positions.
struct Bound {
    vars: Vec<String>,
    rel: Relation,
}

impl Bound {
    fn pos(&self, v: &str) -> Option<usize> {
        self.vars.iter().position(|w| w == v)
    }

    /// Adds unconstrained positions for any of `vars` not present.
    fn cylindrify(self, vars: &[String]) -> Result<Bound> {
        let missing: Vec<String> = vars.iter().filter(|v| self.pos(v).is_none()).cloned().collect();
        if missing.is_empty() {
            return Ok(self);
        }
        let n = self.vars.len();
        let sigma: Vec<usize> = (0..n).collect();
        let rel = self.rel.substitute(&sigma, n + missing.len())?;
        let mut vars_out = self.vars;
        vars_out.extend(missing);
        Ok(Bound { vars: vars_out, rel })
    }

    fn drop_positions(&self, positions: &[usize]) -> Vec<String> {
        self.vars.iter().enumerate().filter(|(i, _)| !positions.contains(i)).map(|(_, v)| v.clone()).collect()
    }
}

fn eval(f: &Formula, env: &Env) -> Result<Bound> {
    match f {
        Formula::Atom { rel, vars } => {
            let r = env.resolve(rel)?;
            if r.domain_size() != env.d {
                return Err(Error::DomainMismatch { expected: env.d, found: r.domain_size() });
            }
            if r.arity() != vars.len() {
                return Err(Error::ArityMismatch { expected: r.arity(), found: vars.len() });
            }
            let mut distinct: Vec<String> = Vec::new();
            for v in vars {
                if !distinct.contains(v) {
                    distinct.push(v.clone());
                }
            }
            let sigma: Vec<usize> = vars.iter().map(|v| distinct.iter().position(|w| w == v).unwrap()).collect();
            Ok(Bound { rel: r.substitute(&sigma, distinct.len())?, vars: distinct })
        }
        Formula::And(children) => {
            let mut acc = Bound { vars: Vec::new(), rel: Relation::full(env.d, 0)? };
            for c in children {
                let b = eval(c, env)?;
                let mut vars = acc.vars.clone();
                for v in &b.vars {
                    if !vars.contains(v) {
                        vars.push(v.clone());
                    }
                }
                let scope1: Vec<usize> = (0..acc.vars.len()).collect();
                let scope2: Vec<usize> = b.vars.iter().map(|v| vars.iter().position(|w| w == v).unwrap()).collect();
                let rel = Relation::conjoin(&acc.rel, &scope1, &b.rel, &scope2, vars.len())?;
                acc = Bound { vars, rel };
            }
            Ok(acc)
        }
        Formula::Quant { kind, vars, body } => {
            let b = eval(body, env)?.cylindrify(vars)?;
            match kind {
                Quantifier::Exists | Quantifier::Max => {
                    let positions: Vec<usize> = vars.iter().map(|v| b.pos(v).unwrap()).collect();
                    let rel = if *kind == Quantifier::Exists {
                        b.rel.exists(&positions)?
                    } else {
                        b.rel.max_quantify(&positions)?
                    };
                    Ok(Bound { vars: b.drop_positions(&positions), rel })
                }
                Quantifier::ExistsK(k) => {
                    let mut cur = b;
                    for v in vars.iter().rev() {
                        let p = cur.pos(v).unwrap();
                        let rel = cur.rel.exists_k(p, *k)?;
                        cur = Bound { vars: cur.drop_positions(&[p]), rel };
                    }
                    Ok(cur)
                }
            }
        }
    }
}

/// Evaluates `f` to a relation over `order`. Every free variable must be
/// listed; listed variables that do not occur are unconstrained.
pub fn evaluate(f: &Formula, order: &[String], env: &Env) -> Result<Relation> {
    let b = eval(f, env)?;
    if let Some(v) = b.vars.iter().find(|v| !order.contains(v)) {
        return Err(Error::invalid(format!("free variable {v} missing from the output order")));
    }
    let sigma: Vec<usize> = b.vars.iter().map(|v| order.iter().position(|w| w == v).unwrap()).collect();
    let distinct: BTreeSet<&String> = order.iter().collect();
    if distinct.len() != order.len() {
        return Err(Error::invalid("output order repeats a variable"));
    }
    b.rel.substitute(&sigma, order.len())
}

/// Evaluates over the free variables in first-occurrence order.
pub fn evaluate_free(f: &Formula, env: &Env) -> Result<Relation> {
    evaluate(f, &f.free_vars(), env)
}

fn fresh(base: &str, taken: &BTreeSet<String>) -> String {
    (1..).map(|i| format!("{base}_{i}")).find(|c| !taken.contains(c)).unwrap()
}

fn check_equivalent(original: &Formula, result: &Formula, env: &Env) -> Result<()> {
    let order = original.free_vars();
    let a = evaluate(original, &order, env)?;
    let b = evaluate(result, &order, env)?;
    if a != b {
        return Err(Error::Verification(format!(
            "flattening changed the relation: {original} gives {a}, {result} gives {b}"
        )));
    }
    Ok(())
}

fn conjunction(mut atoms: Vec<Formula>) -> Formula {
    if atoms.len() == 1 {
        atoms.pop().unwrap()
    } else {
        Formula::And(atoms)
    }
}

/// Moves `∃` / `∃_k` quantifiers to a single prefix over a quantifier-free
/// conjunction. Bound variables that clash with other names are renamed;
/// the renames are returned as `(old, new)` pairs. The result is checked
/// against the input with the evaluator.
pub fn flatten_counting(f: &Formula, env: &Env) -> Result<(Formula, Vec<(String, String)>)> {
    if f.has_quantifier(|q| q == Quantifier::Max) {
        return Err(Error::invalid("flatten_counting does not handle max quantifiers"));
    }
    let mut taken: BTreeSet<String> = f.free_vars().into_iter().collect();
    let mut avoid = f.all_vars();
    let mut renames = Vec::new();
    let mut prefix = Vec::new();
    let mut matrix = Vec::new();
    pull(f, &mut taken, &mut avoid, &mut renames, &mut prefix, &mut matrix);
    let result = prefix
        .into_iter()
        .rev()
        .fold(conjunction(matrix), |body, (kind, vars)| Formula::Quant { kind, vars, body: Box::new(body) });
    check_equivalent(f, &result, env)?;
    Ok((result, renames))
}

fn pull(
    f: &Formula,
    taken: &mut BTreeSet<String>,
    avoid: &mut BTreeSet<String>,
    renames: &mut Vec<(String, String)>,
    prefix: &mut Vec<(Quantifier, Vec<String>)>,
    matrix: &mut Vec<Formula>,
) {
    match f {
        Formula::Atom { .. } => matrix.push(f.clone()),
        Formula::And(children) => {
            for c in children {
                pull(c, taken, avoid, renames, prefix, matrix);
            }
        }
        Formula::Quant { kind, vars, body } => {
            let mut body = (**body).clone();
            let mut new_vars = Vec::new();
            for v in vars {
                let name = if taken.contains(v) {
                    let n = fresh(v, avoid);
                    body = body.rename_free(v, &n);
                    renames.push((v.clone(), n.clone()));
                    n
                } else {
                    v.clone()
                };
                taken.insert(name.clone());
                avoid.insert(name.clone());
                new_vars.push(name);
            }
            prefix.push((*kind, new_vars));
            pull(&body, taken, avoid, renames, prefix, matrix);
        }
    }
}

/// Parameters computed for one collapse of nested max blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlattenStats {
    /// Largest number of outer-block extensions any free tuple has into `∃ inner Φ`.
    pub m: u64,
    /// Largest number of inner-block extensions of any tuple.
    pub n: u64,
    /// Largest number of outer-block extensions into `∃ inner Φ` among
    /// tuples of the relation being defined.
    pub l: u64,
    /// Number of copies of the inner block.
    pub c: u32,
}

/// A max block over a quantifier-free conjunction (`block` may be empty).
struct MaxForm {
    block: Vec<String>,
    atoms: Vec<Formula>,
}

impl MaxForm {
    fn formula(&self) -> Formula {
        let body = conjunction(self.atoms.clone());
        if self.block.is_empty() {
            body
        } else {
            Formula::Quant { kind: Quantifier::Max, vars: self.block.clone(), body: Box::new(body) }
        }
    }
}

struct Flattener<'a> {
    env: &'a Env,
    avoid: BTreeSet<String>,
    stats: Vec<FlattenStats>,
}

impl Flattener<'_> {
    fn rename_block(&mut self, form: MaxForm, clash: &BTreeSet<String>) -> MaxForm {
        let mut atoms = form.atoms;
        let mut block = Vec::new();
        for v in form.block {
            if clash.contains(&v) {
                let n = fresh(&v, &self.avoid);
                self.avoid.insert(n.clone());
                atoms = atoms.iter().map(|a| a.rename_free(&v, &n)).collect();
                block.push(n);
            } else {
                block.push(v);
            }
        }
        MaxForm { block, atoms }
    }

    fn flatten(&mut self, f: &Formula) -> Result<MaxForm> {
        match f {
            Formula::Atom { .. } => Ok(MaxForm { block: Vec::new(), atoms: vec![f.clone()] }),
            Formula::And(children) => {
                let forms: Vec<MaxForm> = children.iter().map(|c| self.flatten(c)).collect::<Result<_>>()?;
                if forms.iter().filter(|m| !m.block.is_empty()).count() > 0 && forms.len() > 1 {
                    self.check_rule_two(&forms)?;
                }
                // Keep auxiliary blocks disjoint from each other and from free variables.
                let mut used: BTreeSet<String> = f.free_vars().into_iter().collect();
                let mut block = Vec::new();
                let mut atoms = Vec::new();
                for form in forms {
                    let form = self.rename_block(form, &used);
                    used.extend(form.block.iter().cloned());
                    block.extend(form.block);
                    atoms.extend(form.atoms);
                }
                Ok(MaxForm { block, atoms })
            }
            Formula::Quant { kind: Quantifier::Max, vars, body } => {
                let inner = self.flatten(body)?;
                let outer_free: BTreeSet<String> = f.free_vars().into_iter().collect();
                let clash: BTreeSet<String> = outer_free.iter().chain(vars.iter()).cloned().collect();
                let inner = self.rename_block(inner, &clash);
                if inner.block.is_empty() {
                    return Ok(MaxForm { block: vars.clone(), atoms: inner.atoms });
                }
                self.collapse(f, vars, inner)
            }
            Formula::Quant { .. } => Err(Error::invalid("flatten_max handles only max quantifiers")),
        }
    }

    /// Conjoining max-defined relations multiplies extension counts, which
    /// only preserves the maxima when some tuple attains all of them.
    fn check_rule_two(&self, forms: &[MaxForm]) -> Result<()> {
        let all: Vec<String> = {
            let mut v = Vec::new();
            for form in forms {
                for x in form.formula().free_vars() {
                    if !v.contains(&x) {
                        v.push(x);
                    }
                }
            }
            v
        };
        let mut acc = Relation::full(self.env.d, all.len())?;
        let mut parts = Vec::new();
        for form in forms {
            let body = conjunction(form.atoms.clone());
            if !form.block.is_empty() && evaluate(&body, &body.free_vars(), self.env)?.is_empty() {
                return Err(Error::invalid(format!("max block over an unsatisfiable conjunction: {}", form.formula())));
            }
            let r = evaluate(&form.formula(), &all, self.env)?;
            parts.push(format!("{} = {r}", form.formula()));
            acc = acc.intersection(&r)?;
        }
        if acc.is_empty() {
            return Err(Error::invalid(format!(
                "conjunction of max-defined relations is empty, so no tuple attains every maximum: {}",
                parts.join("; ")
            )));
        }
        Ok(())
    }

    fn collapse(&mut self, original: &Formula, outer: &[String], inner: MaxForm) -> Result<MaxForm> {
        let env = self.env;
        let x: Vec<String> = original.free_vars();
        let phi = conjunction(inner.atoms.clone());
        let order: Vec<String> = x.iter().chain(outer).chain(&inner.block).cloned().collect();
        let phi_rel = evaluate(&phi, &order, env)?;
        let nx = x.len();
        let ny = outer.len();
        let z_block: Vec<usize> = (nx + ny..order.len()).collect();
        let y_block: Vec<usize> = (nx..nx + ny).collect();
        let n = phi_rel.extension_counts(&z_block)?.into_iter().max().unwrap_or(0);
        let q = phi_rel.exists(&z_block)?;
        let q_counts = q.extension_counts(&y_block)?;
        let m = q_counts.iter().copied().max().unwrap_or(0);
        let target = evaluate(original, &x, env)?;
        let l = target.indices().map(|i| q_counts[i]).max().unwrap_or(0);
        let c = copies(m, n, l)?;
        self.stats.push(FlattenStats { m, n, l, c });

        let mut block: Vec<String> = outer.to_vec();
        let mut atoms = Vec::new();
        for s in 0..c {
            let mut copy = inner.atoms.clone();
            let mut names = inner.block.clone();
            if s > 0 {
                for (slot, v) in names.iter_mut().zip(&inner.block) {
                    let fresh_name = fresh(v, &self.avoid);
                    self.avoid.insert(fresh_name.clone());
                    copy = copy.iter().map(|a| a.rename_free(v, &fresh_name)).collect();
                    *slot = fresh_name;
                }
            }
            block.extend(names);
            atoms.extend(copy);
        }
        Ok(MaxForm { block, atoms })
    }
}

/// Smallest `c >= 1` from the closed form, bumped until
/// `M (N-1)^c < L N^c` holds exactly.
pub fn copies(m: u64, n: u64, l: u64) -> Result<u32> {
    if n <= 1 || m == 0 || l == 0 {
        return Ok(1);
    }
    let holds = |c: u32| {
        BigUint::from(m) * BigUint::from(n - 1).pow(c) < BigUint::from(l) * BigUint::from(n).pow(c)
    };
    let ratio = (l as f64 / m as f64).ln() / ((n - 1) as f64 / n as f64).ln();
    let mut c = (ratio.ceil().max(1.0)) as u32;
    let start = c;
    while !holds(c) {
        c += 1;
    }
    let minimal = (1..).find(|&k| holds(k)).unwrap();
    if c > start + 1 || !(c == minimal || c == minimal + 1) {
        return Err(Error::Verification(format!("copy count {c} is not within one of the minimum {minimal}")));
    }
    Ok(c)
}

/// Rewrites a formula built from atoms, conjunction and max blocks into one
/// max block over a quantifier-free conjunction. Nested blocks are collapsed
/// by repeating the inner formula `c` times. The result is always compared
/// with the input by the evaluator; a mismatch is reported as a
/// verification error rather than returned.
pub fn flatten_max(f: &Formula, env: &Env) -> Result<(Formula, Vec<FlattenStats>)> {
    if f.has_quantifier(|q| q != Quantifier::Max) {
        return Err(Error::invalid("flatten_max handles only max quantifiers"));
    }
    let mut fl = Flattener { env, avoid: f.all_vars(), stats: Vec::new() };
    let form = fl.flatten(f)?;
    let result = form.formula();
    check_equivalent(f, &result, env)?;
    Ok((result, fl.stats))
}
