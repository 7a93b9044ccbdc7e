//! Bounded-arity closure of relation sets under a chosen operator signature.
//!
//! Closures are computed generation by generation: every step combines at
//! least one relation discovered in the previous generation. Each new batch
//! is sorted canonically before it is appended, so results do not depend on
//! how work is split across threads. A run that stops on its budget or
//! iteration limit is reported as such; nothing outside the caps is claimed.

use std::collections::{HashMap, HashSet};
use std::fmt;

use itertools::Itertools;
use rayon::prelude::*;

use crate::catalog;
use crate::derivation::{Derivation, Node, Op};
use crate::error::{Error, Result};
use crate::fnspace::{self, PartialFunction};
use crate::relation::{check_domain, Relation};

/// Which operators a closure run may apply, and its caps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureSignature {
    pub substitution: bool,
    pub conjunction: bool,
    pub exists: bool,
    /// Counting quantifiers `∃_k` applied per position.
    pub exists_k: Vec<usize>,
    pub max_single: bool,
    pub max_block: bool,
    /// Largest arity reported (A).
    pub result_arity: usize,
    /// Largest arity retained while closing (B).
    pub intermediate_arity: usize,
    /// Largest number of relations retained.
    pub budget: usize,
    pub iteration_limit: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Preset {
    PartialCoclone,
    Coclone,
    KExists(Vec<usize>),
    Counting,
    MaxSingle,
    MaxBlock,
}

pub const DEFAULT_BUDGET: usize = 200_000;

impl ClosureSignature {
    /// A preset with the default caps for domain size `d`.
    pub fn preset(preset: Preset, d: usize) -> ClosureSignature {
        let (a, b) = if d == 2 { (4, 8) } else { (3, 5) };
        let mut sig = ClosureSignature {
            substitution: true,
            conjunction: true,
            exists: false,
            exists_k: Vec::new(),
            max_single: false,
            max_block: false,
            result_arity: a,
            intermediate_arity: b,
            budget: DEFAULT_BUDGET,
            iteration_limit: 64,
        };
        match preset {
            Preset::PartialCoclone => {}
            Preset::Coclone => sig.exists = true,
            Preset::KExists(ks) => sig.exists_k = ks,
            Preset::Counting => sig.exists_k = (1..=d).collect(),
            Preset::MaxSingle => sig.max_single = true,
            Preset::MaxBlock => sig.max_block = true,
        }
        sig
    }

    /// Parses `partial`, `coclone`, `kexists=1,2`, `counting`, `maxsingle`
    /// or `maxblock`.
    pub fn parse(text: &str, d: usize) -> Result<ClosureSignature> {
        let preset = match text {
            "partial" => Preset::PartialCoclone,
            "coclone" => Preset::Coclone,
            "counting" => Preset::Counting,
            "maxsingle" => Preset::MaxSingle,
            "maxblock" => Preset::MaxBlock,
            other => {
                let ks = other
                    .strip_prefix("kexists=")
                    .ok_or_else(|| Error::invalid(format!("unknown signature {other:?}")))?;
                Preset::KExists(parse_k_list(ks)?)
            }
        };
        Ok(ClosureSignature::preset(preset, d))
    }

    pub fn with_caps(mut self, result_arity: usize, intermediate_arity: usize) -> ClosureSignature {
        self.result_arity = result_arity;
        self.intermediate_arity = intermediate_arity;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> ClosureSignature {
        self.budget = budget;
        self
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.intermediate_arity < self.result_arity {
            return Err(Error::invalid(format!(
                "intermediate arity {} is below result arity {}",
                self.intermediate_arity, self.result_arity
            )));
        }
        if let Some(&k) = self.exists_k.iter().find(|&&k| k == 0 || k > d) {
            return Err(Error::invalid(format!("counting quantifier k = {k} outside 1..={d}")));
        }
        Ok(())
    }
}

/// Parses a comma separated list of positive integers.
pub fn parse_k_list(text: &str) -> Result<Vec<usize>> {
    let mut ks: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| Error::invalid(format!("bad k value {s:?}"))))
        .collect::<Result<_>>()?;
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureStatus {
    Fixpoint,
    BudgetExhausted,
    IterationLimit,
    TargetFound,
}

impl fmt::Display for ClosureStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClosureStatus::Fixpoint => "fixpoint",
            ClosureStatus::BudgetExhausted => "budget exhausted",
            ClosureStatus::IterationLimit => "iteration limit",
            ClosureStatus::TargetFound => "target found",
        })
    }
}

#[derive(Debug, Clone)]
struct Entry {
    rel: Relation,
    op: Op,
}

/// Result of a bounded closure run.
#[derive(Debug, Clone)]
pub struct Closure {
    d: usize,
    sig: ClosureSignature,
    entries: Vec<Entry>,
    index: HashMap<Relation, usize>,
    status: ClosureStatus,
    iterations: usize,
}

impl Closure {
    pub fn status(&self) -> ClosureStatus {
        self.status
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn domain_size(&self) -> usize {
        self.d
    }

    pub fn signature(&self) -> &ClosureSignature {
        &self.sig
    }

    /// Number of relations retained, at any arity up to the intermediate cap.
    pub fn retained(&self) -> usize {
        self.entries.len()
    }

    /// Retained relations of arity at most the result cap, canonically sorted.
    pub fn relations(&self) -> Vec<&Relation> {
        let mut out: Vec<&Relation> = self
            .entries
            .iter()
            .map(|e| &e.rel)
            .filter(|r| r.arity() <= self.sig.result_arity)
            .collect();
        out.sort();
        out
    }

    pub fn contains(&self, r: &Relation) -> bool {
        self.index.contains_key(r)
    }

    /// Derivation of a retained relation, restricted to the steps it uses.
    pub fn derivation(&self, r: &Relation) -> Option<Derivation> {
        let &root = self.index.get(r)?;
        Some(self.derivation_of(root))
    }

    fn derivation_of(&self, root: usize) -> Derivation {
        let mut needed = HashSet::new();
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            if needed.insert(i) {
                stack.extend(self.entries[i].op.children());
            }
        }
        // Arena order is topological.
        let order: Vec<usize> = needed.into_iter().sorted().collect();
        let renumber: HashMap<usize, usize> = order.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let nodes = order
            .iter()
            .map(|&i| Node { op: self.entries[i].op.remap(|c| renumber[&c]), relation: self.entries[i].rel.clone() })
            .collect();
        Derivation { nodes }
    }
}

fn unary_candidates(
    rel: &Relation,
    child: usize,
    sig: &ClosureSignature,
    known: &HashMap<Relation, usize>,
) -> Vec<(Relation, Op)> {
    let n = rel.arity();
    let mut out = Vec::new();
    let mut push = |r: Result<Relation>, op: Op| {
        if let Ok(r) = r {
            if !known.contains_key(&r) {
                out.push((r, op));
            }
        }
    };
    if sig.substitution {
        for i in 0..n {
            for j in i + 1..n {
                let mut sigma: Vec<usize> = (0..n).collect();
                sigma.swap(i, j);
                push(rel.substitute(&sigma, n), Op::Subst { sigma, m: n, child });
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let sigma: Vec<usize> = (0..n)
                    .map(|p| match p.cmp(&j) {
                        std::cmp::Ordering::Less => p,
                        std::cmp::Ordering::Equal => i,
                        std::cmp::Ordering::Greater => p - 1,
                    })
                    .collect();
                push(rel.substitute(&sigma, n - 1), Op::Subst { sigma, m: n - 1, child });
            }
        }
    }
    for p in 0..n {
        if sig.exists {
            push(rel.exists(&[p]), Op::Exists { positions: vec![p], child });
        }
        for &k in &sig.exists_k {
            push(rel.exists_k(p, k), Op::ExistsK { k, position: p, child });
        }
        if sig.max_single && !sig.max_block {
            push(rel.max_quantify(&[p]), Op::Max { block: vec![p], child });
        }
    }
    if sig.max_block {
        for mask in 1usize..1 << n {
            let block: Vec<usize> = (0..n).filter(|&p| mask >> p & 1 == 1).collect();
            push(rel.max_quantify(&block), Op::Max { block, child });
        }
    }
    out
}

/// Conjunctions of `left` (on positions `0..n1`) with `right`, whose first
/// `j` positions are matched to a `j`-subset of the left positions and whose
/// remaining positions are fresh.
fn conj_candidates(
    left: (&Relation, usize),
    right: (&Relation, usize),
    cap: usize,
    known: &HashMap<Relation, usize>,
    out: &mut Vec<(Relation, Op)>,
) {
    let (r1, a) = left;
    let (r2, b) = right;
    let n1 = r1.arity();
    let n2 = r2.arity();
    let scope1: Vec<usize> = (0..n1).collect();
    for j in (n1 + n2).saturating_sub(cap)..=n1.min(n2) {
        let m = n1 + n2 - j;
        for shared in (0..n1).combinations(j) {
            let scope2: Vec<usize> = shared.iter().copied().chain(n1..m).collect();
            if let Ok(r) = Relation::conjoin(r1, &scope1, r2, &scope2, m) {
                if !known.contains_key(&r) {
                    out.push((r, Op::Conj { scope1: scope1.clone(), scope2, m, left: a, right: b }));
                }
            }
        }
    }
}

const UNARY_CHUNK: usize = 256;
const CONJ_CHUNK: usize = 16;

struct Batch {
    items: Vec<(Relation, Op)>,
    seen: HashSet<Relation>,
}

impl Batch {
    /// Adds candidates in order; returns the position of the target if seen.
    fn absorb(&mut self, found: Vec<Vec<(Relation, Op)>>, target: Option<&Relation>) -> Option<usize> {
        for (r, op) in found.into_iter().flatten() {
            if self.seen.insert(r.clone()) {
                self.items.push((r, op));
                if target == Some(&self.items.last().unwrap().0) {
                    return Some(self.items.len() - 1);
                }
            }
        }
        None
    }
}

fn run(
    gamma: &[(String, Relation)],
    d: usize,
    sig: &ClosureSignature,
    target: Option<&Relation>,
) -> Result<(Closure, Option<usize>)> {
    check_domain(d)?;
    sig.validate(d)?;
    if let Some((name, r)) = gamma.iter().find(|(_, r)| r.domain_size() != d) {
        return Err(Error::invalid(format!("relation {name} has domain {} but the run uses {d}", r.domain_size())));
    }
    let mut closure = Closure {
        d,
        sig: sig.clone(),
        entries: Vec::new(),
        index: HashMap::new(),
        status: ClosureStatus::Fixpoint,
        iterations: 0,
    };
    let seeds = std::iter::once(("EQ".to_string(), catalog::eq(d))).chain(gamma.iter().cloned());
    for (name, rel) in seeds {
        if !closure.index.contains_key(&rel) {
            closure.index.insert(rel.clone(), closure.entries.len());
            closure.entries.push(Entry { rel, op: Op::Seed(name) });
        }
    }
    if let Some(&i) = target.and_then(|t| closure.index.get(t)) {
        closure.status = ClosureStatus::TargetFound;
        return Ok((closure, Some(i)));
    }

    let cap = sig.intermediate_arity;
    let mut frontier = 0..closure.entries.len();
    loop {
        if frontier.is_empty() {
            closure.status = ClosureStatus::Fixpoint;
            return Ok((closure, None));
        }
        if closure.iterations >= sig.iteration_limit {
            closure.status = ClosureStatus::IterationLimit;
            return Ok((closure, None));
        }
        closure.iterations += 1;

        let known_len = closure.entries.len();
        let room = sig.budget.saturating_sub(known_len);
        let mut batch = Batch { items: Vec::new(), seen: HashSet::new() };
        let mut hit = None;
        let frontier_ids: Vec<usize> = frontier.clone().collect();

        for chunk in frontier_ids.chunks(UNARY_CHUNK) {
            let found: Vec<Vec<(Relation, Op)>> = chunk
                .par_iter()
                .map(|&i| unary_candidates(&closure.entries[i].rel, i, sig, &closure.index))
                .collect();
            hit = batch.absorb(found, target);
            if hit.is_some() || batch.items.len() > room {
                break;
            }
        }
        if hit.is_none() && batch.items.len() <= room && sig.conjunction {
            for chunk in frontier_ids.chunks(CONJ_CHUNK) {
                let entries = &closure.entries;
                let index = &closure.index;
                let found: Vec<Vec<(Relation, Op)>> = chunk
                    .par_iter()
                    .map(|&f| {
                        let mut out = Vec::new();
                        for e in 0..known_len {
                            conj_candidates((&entries[f].rel, f), (&entries[e].rel, e), cap, index, &mut out);
                        }
                        out
                    })
                    .collect();
                hit = batch.absorb(found, target);
                if hit.is_some() || batch.items.len() > room {
                    break;
                }
            }
        }

        if let Some(pos) = hit {
            let (rel, op) = batch.items.swap_remove(pos);
            let id = closure.entries.len();
            closure.index.insert(rel.clone(), id);
            closure.entries.push(Entry { rel, op });
            closure.status = ClosureStatus::TargetFound;
            return Ok((closure, Some(id)));
        }

        let over = batch.items.len() > room;
        let mut items = batch.items;
        items.sort_by(|x, y| x.0.cmp(&y.0));
        items.truncate(room);
        for (rel, op) in items {
            closure.index.insert(rel.clone(), closure.entries.len());
            closure.entries.push(Entry { rel, op });
        }
        if over {
            closure.status = ClosureStatus::BudgetExhausted;
            return Ok((closure, None));
        }
        frontier = known_len..closure.entries.len();
    }
}

/// Bounded closure of `gamma` (plus equality) under `sig`.
pub fn close(gamma: &[(String, Relation)], d: usize, sig: &ClosureSignature) -> Result<Closure> {
    run(gamma, d, sig, None).map(|(c, _)| c)
}

/// Searches for `target` in the bounded closure. `None` means "not found
/// within caps", never a proof of non-membership.
pub fn member(target: &Relation, gamma: &[(String, Relation)], sig: &ClosureSignature) -> Result<Option<Derivation>> {
    let d = target.domain_size();
    let (closure, hit) = run(gamma, d, sig, Some(target))?;
    Ok(hit.map(|i| closure.derivation_of(i)))
}

/// Which characterization of the `rel_m` closures to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelmVariant {
    /// The co-clone generated by `rel_m`.
    Coclone,
    /// `⟨rel_m⟩_k`: blocks optionally restricted to classes `k..=m`.
    KExists(usize),
    /// The counting co-clone: any class threshold per block.
    Counting,
    /// The max-co-clone: blocks optionally restricted to the top class.
    Max,
}

/// `rel_m` blocks, each with the lowest class index allowed, refined by
/// the positions forced equal (equality belongs to every co-clone).
struct BlockForm {
    blocks: Vec<Vec<usize>>,
    thresholds: Vec<usize>,
    equal: Vec<Vec<usize>>,
}

fn block_relation(m: usize, n: usize, form: &BlockForm) -> Result<Relation> {
    let class = catalog::rel_m_classes(m);
    Relation::from_predicate(catalog::rel_m_domain(m), n, |a| {
        form.blocks.iter().zip(&form.thresholds).all(|(b, &t)| {
            let c0 = class[a[b[0]] as usize];
            c0 >= t && b.iter().all(|&i| class[a[i] as usize] == c0)
        }) && form.equal.iter().all(|e| e.iter().all(|&i| a[i] == a[e[0]]))
    })
}

fn allowed(variant: RelmVariant, m: usize, threshold: usize) -> bool {
    match variant {
        RelmVariant::Coclone => threshold == 1,
        RelmVariant::KExists(k) => threshold == 1 || threshold == k,
        RelmVariant::Counting => true,
        RelmVariant::Max => threshold == 1 || threshold == m,
    }
}

/// Coarsest partition of `0..n` whose blocks satisfy `same` on every member.
fn coarsest(n: usize, same: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match blocks.iter_mut().find(|b| same(b[0], i)) {
            Some(b) => b.push(i),
            None => blocks.push(vec![i]),
        }
    }
    blocks
}

/// Structural membership test for the `rel_m` closures: a partition into
/// `rel_m`-related blocks with a class threshold each, refined by equalities.
pub fn relm_oracle(m: usize, r: &Relation, variant: RelmVariant) -> Result<bool> {
    let d = catalog::rel_m_domain(m);
    if m < 2 || r.domain_size() != d {
        return Err(Error::DomainMismatch { expected: d, found: r.domain_size() });
    }
    if r.is_empty() {
        return Ok(false);
    }
    let n = r.arity();
    let class = catalog::rel_m_classes(m);
    let members = r.tuples();
    let blocks = coarsest(n, |i, j| members.iter().all(|a| class[a[i] as usize] == class[a[j] as usize]));
    let equal = coarsest(n, |i, j| members.iter().all(|a| a[i] == a[j]));
    let thresholds: Vec<usize> = blocks
        .iter()
        .map(|b| members.iter().map(|a| class[a[b[0]] as usize]).min().unwrap())
        .collect();
    if !thresholds.iter().all(|&t| allowed(variant, m, t)) {
        return Ok(false);
    }
    let form = BlockForm { blocks, thresholds, equal };
    Ok(block_relation(m, n, &form)? == *r)
}

/// Every relation of arity `0..=max_arity` described by the given variant.
pub fn relm_family(m: usize, max_arity: usize, variant: RelmVariant) -> Result<Vec<Relation>> {
    let mut out = Vec::new();
    for n in 0..=max_arity {
        for equal in set_partitions(n) {
            // group the equality classes into rel_m blocks
            for grouping in set_partitions(equal.len()) {
                let blocks: Vec<Vec<usize>> = grouping
                    .iter()
                    .map(|g| {
                        let mut b: Vec<usize> = g.iter().flat_map(|&e| equal[e].iter().copied()).collect();
                        b.sort_unstable();
                        b
                    })
                    .collect();
                let choices: Vec<Vec<usize>> = blocks
                    .iter()
                    .map(|_| (1..=m).filter(|&t| allowed(variant, m, t)).collect())
                    .collect();
                for thresholds in choices.into_iter().multi_cartesian_product_or_unit() {
                    let form = BlockForm { blocks: blocks.clone(), thresholds, equal: equal.clone() };
                    out.push(block_relation(m, n, &form)?);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

trait CartesianOrUnit: Iterator<Item = Vec<usize>> + Sized {
    /// Like `multi_cartesian_product`, but yields one empty vector when
    /// there are no factors.
    fn multi_cartesian_product_or_unit(self) -> Vec<Vec<usize>> {
        let factors: Vec<Vec<usize>> = self.collect();
        if factors.is_empty() {
            return vec![Vec::new()];
        }
        factors.into_iter().multi_cartesian_product().collect()
    }
}

impl<I: Iterator<Item = Vec<usize>>> CartesianOrUnit for I {}

/// All set partitions of `0..n`, blocks ordered by smallest element.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![Vec::new()];
    for i in 0..n {
        let mut next = Vec::new();
        for p in out {
            for b in 0..p.len() {
                let mut q: Vec<Vec<usize>> = p.clone();
                q[b].push(i);
                next.push(q);
            }
            let mut q = p;
            q.push(vec![i]);
            next.push(q);
        }
        out = next;
    }
    out
}

/// A relation derived with block max-quantifiers that some surjective
/// polymorphism of the generators does not preserve.
#[derive(Debug, Clone)]
pub struct SeparationWitness {
    pub relation: Relation,
    pub derivation: Derivation,
    pub function: PartialFunction,
}

/// On `d = 2`, single-variable max-quantification is always `∃` or `∀`,
/// so every relation reachable with it is preserved by every surjective
/// polymorphism of the generators. A block-max-derived relation violated by
/// such a function therefore lies outside the single-variable max-co-clone.
///
/// Searches surjective total polymorphisms of arity at most `fn_arity`
/// against the bounded closure, in canonical order.
pub fn separation_witness(
    gamma: &[(String, Relation)],
    sig: &ClosureSignature,
    fn_arity: usize,
) -> Result<Option<SeparationWitness>> {
    let relations: Vec<Relation> = gamma.iter().map(|(_, r)| r.clone()).collect();
    let closure = close(gamma, 2, sig)?;
    let polys = fnspace::pol(2, &relations, fn_arity)?;
    let surjective: Vec<&PartialFunction> = polys
        .iter()
        .filter(|f| f.table().into_iter().flatten().collect::<HashSet<_>>().len() == 2)
        .collect();
    for r in closure.relations() {
        for f in &surjective {
            if !fnspace::preserves(f, r)? {
                return Ok(Some(SeparationWitness {
                    relation: r.clone(),
                    derivation: closure.derivation(r).expect("retained relations have derivations"),
                    function: (*f).clone(),
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(rels: &[(&str, Relation)]) -> Vec<(String, Relation)> {
        rels.iter().map(|(n, r)| (n.to_string(), r.clone())).collect()
    }

    fn maxblock(a: usize, b: usize) -> ClosureSignature {
        ClosureSignature::preset(Preset::MaxBlock, 2).with_caps(a, b).with_budget(20_000)
    }

    #[test]
    fn imp_max_closure_has_constants() {
        let c = close(&named(&[("IMP", catalog::imp(1).unwrap())]), 2, &maxblock(1, 2)).unwrap();
        assert!(c.contains(&catalog::delta0()));
        assert!(c.contains(&catalog::delta1()));
        let d = c.derivation(&catalog::delta0()).unwrap();
        assert_eq!(d.replay().unwrap(), catalog::delta0());
    }

    #[test]
    fn or_nand_gives_neq() {
        let gamma = named(&[("OR", catalog::or(2).unwrap()), ("NAND", catalog::nand(2).unwrap())]);
        let c = close(&gamma, 2, &maxblock(2, 2)).unwrap();
        assert!(c.relations().contains(&&catalog::neq()));
    }

    #[test]
    fn empty_gamma_partial_coclone() {
        let sig = ClosureSignature::preset(Preset::PartialCoclone, 2).with_caps(2, 2);
        let c = close(&[], 2, &sig).unwrap();
        assert_eq!(c.status(), ClosureStatus::Fixpoint);
        let got: Vec<String> = c.relations().iter().map(|r| format!("{}:{r}", r.arity())).collect();
        // Identifying EQ gives the full unary relation; products give the rest.
        let expected = vec![
            "1:{0,1}".to_string(),
            "2:{00,11}".to_string(),
            "2:{00,01,10,11}".to_string(),
        ];
        assert_eq!(got, expected);
    }

    #[test]
    fn member_returns_replayable_witness() {
        let gamma = named(&[("IMP", catalog::imp(1).unwrap()), ("OR", catalog::or(2).unwrap())]);
        let w = member(&catalog::neq(), &gamma, &maxblock(2, 4)).unwrap().unwrap();
        assert_eq!(w.replay().unwrap(), catalog::neq());
        let seed = member(&catalog::or(2).unwrap(), &gamma, &maxblock(2, 4)).unwrap().unwrap();
        assert_eq!(seed.len(), 1);
    }

    #[test]
    fn odd_parity_from_neq() {
        let sig = ClosureSignature::preset(Preset::Coclone, 2).with_caps(3, 4);
        let target = catalog::affine(3, 1).unwrap();
        let w = member(&target, &named(&[("NEQ", catalog::neq())]), &sig).unwrap();
        // x⊕y⊕z = 1 is not in the co-clone of NEQ (it is not bijunctive).
        assert!(w.is_none());
        let w = member(&target, &named(&[("AFF3_0", catalog::affine(3, 0).unwrap()), ("NEQ", catalog::neq())]), &sig)
            .unwrap()
            .unwrap();
        assert_eq!(w.replay().unwrap(), target);
    }

    #[test]
    fn budget_is_reported() {
        let gamma = named(&[("OR", catalog::or(2).unwrap())]);
        let sig = maxblock(3, 4).with_budget(30);
        let c = close(&gamma, 2, &sig).unwrap();
        assert_eq!(c.status(), ClosureStatus::BudgetExhausted);
        assert_eq!(c.retained(), 30);
    }

    #[test]
    fn runs_are_deterministic() {
        let gamma = named(&[("IMP", catalog::imp(1).unwrap())]);
        let sig = maxblock(3, 4).with_budget(500);
        let a: Vec<Relation> = close(&gamma, 2, &sig).unwrap().relations().into_iter().cloned().collect();
        let b: Vec<Relation> = close(&gamma, 2, &sig).unwrap().relations().into_iter().cloned().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn signature_parsing() {
        assert!(ClosureSignature::parse("maxblock", 2).unwrap().max_block);
        assert_eq!(ClosureSignature::parse("kexists=2,1", 3).unwrap().exists_k, vec![1, 2]);
        assert_eq!(ClosureSignature::parse("counting", 3).unwrap().exists_k, vec![1, 2, 3]);
        assert!(ClosureSignature::parse("bogus", 2).is_err());
        let bad = ClosureSignature::preset(Preset::Coclone, 2).with_caps(4, 3);
        assert!(close(&[], 2, &bad).is_err());
    }

    #[test]
    fn set_partition_counts() {
        let bell: Vec<usize> = (0..6).map(|n| set_partitions(n).len()).collect();
        assert_eq!(bell, vec![1, 1, 2, 5, 15, 52]);
    }

    #[test]
    fn relm_oracle_examples() {
        let rel2 = catalog::rel_m(2).unwrap();
        for v in [RelmVariant::Coclone, RelmVariant::KExists(2), RelmVariant::Counting, RelmVariant::Max] {
            assert!(relm_oracle(2, &rel2, v).unwrap());
        }
        // m = 3: D_2 ∪ D_3 and D_3 alone.
        let upper = Relation::from_tuples(6, 1, [[1u8], [2], [3], [4], [5]]).unwrap();
        assert!(relm_oracle(3, &upper, RelmVariant::KExists(2)).unwrap());
        let top = Relation::from_tuples(6, 1, [[3u8], [4], [5]]).unwrap();
        assert!(relm_oracle(3, &top, RelmVariant::Max).unwrap());
        assert!(!relm_oracle(3, &top, RelmVariant::KExists(2)).unwrap());
        assert!(relm_oracle(3, &top, RelmVariant::KExists(3)).unwrap());
        assert!(relm_oracle(2, &rel2, RelmVariant::Max).is_ok());
        assert!(relm_oracle(2, &catalog::eq(2), RelmVariant::Max).is_err());
    }

    #[test]
    fn relm_family_matches_oracle() {
        let fam = relm_family(2, 2, RelmVariant::KExists(2)).unwrap();
        for r in &fam {
            assert!(relm_oracle(2, r, RelmVariant::KExists(2)).unwrap());
        }
        // arity 0: {()}; arity 1: full, D_2; arity 2: 2 partitions with 2 or 4 choices minus collisions
        assert_eq!(fam.iter().filter(|r| r.arity() == 0).count(), 1);
        assert_eq!(fam.iter().filter(|r| r.arity() == 1).count(), 2);
    }

    #[test]
    fn separation_for_imp_or() {
        let gamma = named(&[("IMP", catalog::imp(1).unwrap()), ("OR", catalog::or(2).unwrap())]);
        let w = separation_witness(&gamma, &maxblock(2, 4).with_budget(3000), 2).unwrap().unwrap();
        assert_eq!(w.relation, catalog::neq());
        assert_eq!(w.function, PartialFunction::total(2, 2, |a| a[0] | a[1]).unwrap());
        assert_eq!(w.derivation.replay().unwrap(), catalog::neq());
    }

    #[test]
    fn no_separation_for_neq() {
        let gamma = named(&[("NEQ", catalog::neq())]);
        assert!(separation_witness(&gamma, &maxblock(2, 4).with_budget(3000), 2).unwrap().is_none());
        assert!(separation_witness(&[], &maxblock(2, 3).with_budget(3000), 2).unwrap().is_none());
    }
}
