//! Boolean max-co-clones: labels, bases, classification, the counting
//! trichotomy and a bounded check of the lattice.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;

use crate::catalog;
use crate::closure::{self, ClosureSignature, ClosureStatus, Preset};
use crate::error::{Error, Result};
use crate::formula::{self, Env, Formula, Quantifier};
use crate::predicates::{self, Structure};
use crate::relation::Relation;

/// Number of relations used to stand in for the infinite limit bases.
pub const LIMIT_INSTANCE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    IBF,
    IR0,
    IR1,
    IR2,
    IM2,
    IS0k(usize),
    IS0,
    IS1k(usize),
    IS1,
    IS02k(usize),
    IS02,
    IS12k(usize),
    IS12,
    ID,
    ID1,
    IL,
    IL0,
    IL1,
    IL2,
    IL3,
    IN2,
    II2,
}

impl Label {
    pub fn dual(self) -> Label {
        use Label::*;
        match self {
            IR0 => IR1,
            IR1 => IR0,
            IL0 => IL1,
            IL1 => IL0,
            IS0k(k) => IS1k(k),
            IS1k(k) => IS0k(k),
            IS02k(k) => IS12k(k),
            IS12k(k) => IS02k(k),
            IS0 => IS1,
            IS1 => IS0,
            IS02 => IS12,
            IS12 => IS02,
            other => other,
        }
    }

    pub fn is_limit(self) -> bool {
        matches!(self, Label::IS0 | Label::IS1 | Label::IS02 | Label::IS12)
    }

    /// Identifier usable as a DOT node name.
    pub fn node_id(self) -> String {
        self.to_string().replace('^', "_")
    }

    /// Every label with a finite basis, chains instantiated at `2..=kmax`.
    pub fn finite(kmax: usize) -> Vec<Label> {
        use Label::*;
        let mut out = vec![IBF, IR0, IR1, IR2, IM2];
        for k in 2..=kmax {
            out.extend([IS0k(k), IS1k(k), IS02k(k), IS12k(k)]);
        }
        out.extend([ID, ID1, IL, IL0, IL1, IL2, IL3, IN2, II2]);
        out
    }

    pub fn parse(text: &str) -> Result<Label> {
        use Label::*;
        let fixed = [IBF, IR0, IR1, IR2, IM2, IS0, IS1, IS02, IS12, ID, ID1, IL, IL0, IL1, IL2, IL3, IN2, II2];
        if let Some(l) = fixed.into_iter().find(|l| l.to_string() == text) {
            return Ok(l);
        }
        let bad = || Error::invalid(format!("unknown label {text:?}"));
        let (side, k) = text.split_once('^').ok_or_else(bad)?;
        let k: usize = k.parse().ok().filter(|&k| k >= 2).ok_or_else(bad)?;
        match side {
            "IS0" => Ok(IS0k(k)),
            "IS1" => Ok(IS1k(k)),
            "IS02" => Ok(IS02k(k)),
            "IS12" => Ok(IS12k(k)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Label::*;
        match self {
            IS0k(k) => write!(f, "IS0^{k}"),
            IS1k(k) => write!(f, "IS1^{k}"),
            IS02k(k) => write!(f, "IS02^{k}"),
            IS12k(k) => write!(f, "IS12^{k}"),
            other => write!(f, "{other:?}"),
        }
    }
}

fn named(name: &str) -> Result<(String, Relation)> {
    Ok((name.to_string(), catalog::lookup(name, 2)?))
}

fn basis(names: &[String]) -> Result<Vec<(String, Relation)>> {
    names.iter().map(|n| named(n)).collect()
}

fn parity_family(ks: &[usize], cs: impl Fn(usize) -> Vec<u8>) -> Vec<String> {
    ks.iter().flat_map(|&k| cs(k).into_iter().map(move |c| format!("AFF{k}_{c}"))).collect()
}

/// The max-basis of a label with catalog names. Parity families are cut at
/// arity 4 (even arities) or 3; limit labels use `1..=LIMIT_INSTANCE`.
pub fn max_basis(label: Label) -> Result<Vec<(String, Relation)>> {
    use Label::*;
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let up_to = |head: &str, k: usize| (1..=k).map(|l| format!("{head}{l}")).collect::<Vec<_>>();
    let names: Vec<String> = match label {
        IBF => s(&["EQ"]),
        IR0 => s(&["EQ", "DELTA0"]),
        IR1 => s(&["EQ", "DELTA1"]),
        IR2 => s(&["EQ", "DELTA0", "DELTA1"]),
        IM2 => s(&["IMP"]),
        IS0k(k) => vec!["EQ".into(), format!("OR{k}")],
        IS1k(k) => vec!["EQ".into(), format!("NAND{k}")],
        IS02k(k) => vec!["EQ".into(), "DELTA0".into(), format!("OR{k}")],
        IS12k(k) => [s(&["EQ", "DELTA1"]), up_to("NAND", k)].concat(),
        IS0 => [s(&["EQ"]), up_to("OR", LIMIT_INSTANCE)].concat(),
        IS1 => [s(&["EQ"]), up_to("NAND", LIMIT_INSTANCE)].concat(),
        IS02 => [s(&["EQ", "DELTA0"]), up_to("OR", LIMIT_INSTANCE)].concat(),
        IS12 => [s(&["EQ", "DELTA1"]), up_to("NAND", LIMIT_INSTANCE)].concat(),
        ID => s(&["EQ", "NEQ"]),
        ID1 => s(&["EQ", "NEQ", "DELTA0", "DELTA1"]),
        IL => parity_family(&[2, 4], |_| vec![0]),
        IL0 => parity_family(&[1, 2, 3], |_| vec![0]),
        IL1 => parity_family(&[1, 2, 3], |k| vec![(k % 2) as u8]),
        IL2 => parity_family(&[1, 2, 3], |_| vec![0, 1]),
        IL3 => parity_family(&[2, 4], |_| vec![0, 1]),
        IN2 => s(&["COMPL3_0"]),
        II2 => s(&["IMP", "OR"]),
    };
    if matches!(label, IS0k(k) | IS1k(k) | IS02k(k) | IS12k(k) if k < 2) {
        return Err(Error::invalid(format!("chain parameter of {label} must be at least 2")));
    }
    basis(&names)
}

/// Structural membership test for one label.
pub fn label_membership(r: &Relation, label: Label) -> Result<bool> {
    use Label::*;
    let s = predicates::structural_predicates(r)?;
    let trivial = |f: &dyn Fn(&predicates::TrivialWitness) -> bool| s.trivial.as_ref().is_some_and(f);
    let bij = || predicates::is_bijunctive(r);
    let zero = predicates::is_zero_valid(r);
    let one = predicates::is_one_valid(r);
    Ok(match label {
        IBF => !r.is_empty() && trivial(&|w| w.zeros.is_empty() && w.ones.is_empty()),
        IR0 => !r.is_empty() && trivial(&|w| w.ones.is_empty()),
        IR1 => !r.is_empty() && trivial(&|w| w.zeros.is_empty()),
        IR2 => s.is_trivial(),
        IM2 => s.is_and_closed && s.is_or_closed,
        ID => s.is_affine && s.is_self_complement && bij()?,
        ID1 => s.is_affine && bij()?,
        IL => s.is_affine && zero && one,
        IL0 => s.is_affine && zero,
        IL1 => s.is_affine && one,
        IL2 => s.is_affine,
        IL3 => s.is_affine && s.is_self_complement,
        IN2 => s.is_self_complement,
        II2 => true,
        IS0k(_) | IS0 | IS02k(_) | IS02 => {
            let f = predicates::filter_property(r)?;
            let bound = match label {
                IS0k(k) | IS02k(k) => k,
                _ => usize::MAX,
            };
            let needs_one = matches!(label, IS0k(_) | IS0);
            f.is_filter && f.r <= bound && (one || !needs_one)
        }
        IS1k(_) | IS1 | IS12k(_) | IS12 => label_membership(&r.dual()?, label.dual())?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApClass {
    Fp,
    BisEquivalent,
    SatEquivalent,
}

impl fmt::Display for ApClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApClass::Fp => "FP",
            ApClass::BisEquivalent => "BIS_EQUIVALENT",
            ApClass::SatEquivalent => "SAT_EQUIVALENT",
        })
    }
}

fn check_boolean(gamma: &[Relation]) -> Result<()> {
    if gamma.is_empty() {
        return Err(Error::invalid("empty relation set"));
    }
    match gamma.iter().find(|r| r.domain_size() != 2) {
        Some(r) => Err(Error::DomainMismatch { expected: 2, found: r.domain_size() }),
        None => Ok(()),
    }
}

/// Affine sets are polynomial; sets closed under `∧` and `∨` are as hard as
/// counting independent sets in bipartite graphs; everything else is as
/// hard as #SAT.
pub fn trichotomy(gamma: &[Relation]) -> Result<ApClass> {
    check_boolean(gamma)?;
    let s: Vec<Structure> = gamma.iter().map(predicates::structural_predicates).collect::<Result<_>>()?;
    Ok(if s.iter().all(|s| s.is_affine) {
        ApClass::Fp
    } else if s.iter().all(|s| s.is_and_closed && s.is_or_closed) {
        ApClass::BisEquivalent
    } else {
        ApClass::SatEquivalent
    })
}

/// Predicate values behind a classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationEvidence {
    pub relation: Relation,
    pub structure: Structure,
    pub zero_valid: bool,
    pub one_valid: bool,
    pub bijunctive: bool,
    /// Zero-class span on the `∨` side, when the relation is a filter.
    pub or_span: Option<usize>,
    /// The same on the `∧` side.
    pub and_span: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub label: Label,
    /// Decision step that produced the label.
    pub branch: &'static str,
    pub evidence: Vec<RelationEvidence>,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "classify: {} ({})", self.label, self.branch)?;
        for e in &self.evidence {
            let s = &e.structure;
            let span = |v: Option<usize>| v.map_or("-".to_string(), |r| r.to_string());
            writeln!(
                f,
                "evidence: {} trivial={} affine={} bijunctive={} selfcompl={} or={} and={} 0valid={} 1valid={} or_span={} and_span={}",
                e.relation,
                s.is_trivial(),
                s.is_affine,
                e.bijunctive,
                s.is_self_complement,
                s.is_or_closed,
                s.is_and_closed,
                e.zero_valid,
                e.one_valid,
                span(e.or_span),
                span(e.and_span)
            )?;
        }
        Ok(())
    }
}

fn evidence(r: &Relation) -> Result<RelationEvidence> {
    let structure = predicates::structural_predicates(r)?;
    let span = |r: &Relation| -> Result<Option<usize>> {
        let f = predicates::filter_property(r)?;
        Ok(f.is_filter.then_some(f.r))
    };
    Ok(RelationEvidence {
        relation: r.clone(),
        zero_valid: predicates::is_zero_valid(r),
        one_valid: predicates::is_one_valid(r),
        bijunctive: predicates::is_bijunctive(r)?,
        or_span: if structure.is_or_closed { span(r)? } else { None },
        and_span: if structure.is_and_closed { span(&r.dual()?)? } else { None },
        structure,
    })
}

/// The chain label on the `∨` side, or `None` when some relation is not a
/// filter. `ev` must come from relations that are all `∨`-closed.
fn or_chain(ev: &[RelationEvidence], span: impl Fn(&RelationEvidence) -> Option<usize>, one_valid: impl Fn(&RelationEvidence) -> bool) -> Result<Option<Label>> {
    let spans: Option<Vec<usize>> = ev.iter().map(&span).collect();
    let Some(spans) = spans else { return Ok(None) };
    let r = spans.into_iter().max().unwrap_or(0);
    if r < 2 {
        return Err(Error::Verification(format!("chain branch reached with zero-class span {r}")));
    }
    Ok(Some(if ev.iter().all(one_valid) { Label::IS0k(r) } else { Label::IS02k(r) }))
}

/// Smallest Boolean max-co-clone containing `gamma`.
pub fn classify_max_coclone(gamma: &[Relation]) -> Result<Classification> {
    check_boolean(gamma)?;
    let ev: Vec<RelationEvidence> = gamma.iter().map(evidence).collect::<Result<_>>()?;
    let all = |f: &dyn Fn(&RelationEvidence) -> bool| ev.iter().all(f);
    let done = |label, branch| Ok(Classification { label, branch, evidence: ev.clone() });

    if all(&|e| e.structure.is_trivial()) {
        let wits: Vec<&predicates::TrivialWitness> = ev.iter().filter_map(|e| e.structure.trivial.as_ref()).collect();
        let any_empty = ev.iter().any(|e| e.relation.is_empty());
        let zeros = any_empty || wits.iter().any(|w| !w.zeros.is_empty());
        let ones = any_empty || wits.iter().any(|w| !w.ones.is_empty());
        let label = match (zeros, ones) {
            (false, false) => Label::IBF,
            (true, false) => Label::IR0,
            (false, true) => Label::IR1,
            (true, true) => Label::IR2,
        };
        return done(label, "trivial");
    }
    if all(&|e| e.structure.is_affine) {
        let label = if all(&|e| e.bijunctive) {
            if all(&|e| e.structure.is_self_complement) { Label::ID } else { Label::ID1 }
        } else if all(&|e| e.zero_valid) && all(&|e| e.one_valid) {
            Label::IL
        } else if all(&|e| e.zero_valid) {
            Label::IL0
        } else if all(&|e| e.one_valid) {
            Label::IL1
        } else if all(&|e| e.structure.is_self_complement) {
            Label::IL3
        } else {
            Label::IL2
        };
        return done(label, "affine");
    }
    if all(&|e| e.structure.is_self_complement) {
        return done(Label::IN2, "self-complement");
    }
    if all(&|e| e.structure.is_and_closed && e.structure.is_or_closed) {
        return done(Label::IM2, "and-or-closed");
    }
    if all(&|e| e.structure.is_or_closed) {
        let label = or_chain(&ev, |e| e.or_span, |e| e.one_valid)?.unwrap_or(Label::II2);
        return done(label, "or-closed");
    }
    if all(&|e| e.structure.is_and_closed) {
        // dual side: spans of the complemented relations, 1-valid becomes 0-valid
        let label = or_chain(&ev, |e| e.and_span, |e| e.zero_valid)?.map_or(Label::II2, Label::dual);
        return done(label, "and-closed");
    }
    done(Label::II2, "none")
}

/// Covering pairs `(lower, upper)` of the lattice with chains cut at `kmax`.
/// The limit labels are left out; the top of each chain sits below `II2`.
pub fn hasse_edges(kmax: usize) -> Vec<(Label, Label)> {
    use Label::*;
    let mut e = vec![
        (IBF, IR0),
        (IBF, IR1),
        (IR0, IR2),
        (IR1, IR2),
        (IBF, ID),
        (IBF, IL),
        (ID, ID1),
        (IR2, ID1),
        (IR2, IM2),
        (IL, IL0),
        (IL, IL1),
        (IL, IL3),
        (IR0, IL0),
        (IR1, IL1),
        (ID, IL3),
        (IL0, IL2),
        (IL1, IL2),
        (IL3, IL2),
        (ID1, IL2),
        (IL3, IN2),
        (IL2, II2),
        (IN2, II2),
        (IM2, II2),
        (IR1, IS0k(2)),
        (IR0, IS1k(2)),
        (IR2, IS02k(2)),
        (IR2, IS12k(2)),
    ];
    for k in 2..=kmax {
        e.push((IS0k(k), IS02k(k)));
        e.push((IS1k(k), IS12k(k)));
        if k < kmax {
            e.push((IS0k(k), IS0k(k + 1)));
            e.push((IS1k(k), IS1k(k + 1)));
            e.push((IS02k(k), IS02k(k + 1)));
            e.push((IS12k(k), IS12k(k + 1)));
        }
    }
    e.push((IS02k(kmax), II2));
    e.push((IS12k(kmax), II2));
    e
}

/// Caps for [`verify_lattice`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeCaps {
    /// Result arity of the closures compared along edges.
    pub edge_arity: usize,
    pub edge_intermediate: usize,
    /// Caps of the closure spot checks.
    pub spot_arity: usize,
    pub spot_intermediate: usize,
    pub budget: usize,
}

impl Default for LatticeCaps {
    fn default() -> LatticeCaps {
        LatticeCaps { edge_arity: 2, edge_intermediate: 4, spot_arity: 3, spot_intermediate: 7, budget: closure::DEFAULT_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeCheck {
    pub lower: Label,
    pub upper: Label,
    /// Every generator of `lower` passes the structural test of `upper`.
    pub basis_included: bool,
    /// Closure members of `lower` missing from the closure of `upper`, or
    /// failing the structural test of `upper`.
    pub closure_missing: Vec<Relation>,
    /// A generator of `upper` failing the test of `lower`.
    pub strict_witness: Option<String>,
}

impl EdgeCheck {
    pub fn passed(&self) -> bool {
        self.basis_included && self.closure_missing.is_empty() && self.strict_witness.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpotCheck {
    pub label: Label,
    pub status: ClosureStatus,
    pub relations: usize,
    pub failures: Vec<Relation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeReport {
    pub kmax: usize,
    pub edges: Vec<EdgeCheck>,
    pub spots: Vec<SpotCheck>,
}

impl LatticeReport {
    pub fn passed(&self) -> bool {
        self.edges.iter().all(EdgeCheck::passed) && self.spots.iter().all(|s| s.failures.is_empty())
    }

    /// The lattice as a DOT digraph; each edge carries its check result.
    pub fn to_dot(&self) -> String {
        let mut nodes: BTreeSet<Label> = BTreeSet::new();
        for e in &self.edges {
            nodes.insert(e.lower);
            nodes.insert(e.upper);
        }
        let mut out = String::from("digraph maxcoclones {\n  rankdir=BT;\n");
        for n in &nodes {
            out.push_str(&format!("  {} [label=\"{n}\"];\n", n.node_id()));
        }
        for e in &self.edges {
            let (status, color) = if e.passed() { ("verified", "black") } else { ("failed", "red") };
            out.push_str(&format!(
                "  {} -> {} [status=\"{status}\", color={color}];\n",
                e.lower.node_id(),
                e.upper.node_id()
            ));
        }
        out.push_str("}\n");
        out
    }
}

impl fmt::Display for LatticeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.edges {
            writeln!(
                f,
                "lattice: {} < {}: basis {} closure {} strict {}",
                e.lower,
                e.upper,
                if e.basis_included { "ok" } else { "FAILED" },
                if e.closure_missing.is_empty() { "ok".to_string() } else { format!("{} missing", e.closure_missing.len()) },
                e.strict_witness.as_deref().unwrap_or("FAILED")
            )?;
        }
        for s in &self.spots {
            writeln!(
                f,
                "lattice: closure of {} ({} relations, {}): {}",
                s.label,
                s.relations,
                s.status,
                if s.failures.is_empty() { "ok".to_string() } else { format!("{} outside", s.failures.len()) }
            )?;
        }
        Ok(())
    }
}

fn max_closure(label: Label, arity: usize, intermediate: usize, budget: usize) -> Result<closure::Closure> {
    let sig = ClosureSignature::preset(Preset::MaxBlock, 2).with_caps(arity, intermediate).with_budget(budget);
    closure::close(&max_basis(label)?, 2, &sig)
}

/// Checks every Hasse edge: generators and bounded closure of the lower
/// label lie in the upper one, and some generator of the upper label is
/// outside the lower one. Also checks that bounded closures of `IM2`,
/// `IN2`, `IS0^2` and `IS02^2` stay inside their labels.
pub fn verify_lattice(kmax: usize, caps: LatticeCaps) -> Result<LatticeReport> {
    if kmax < 2 {
        return Err(Error::invalid("kmax must be at least 2"));
    }
    let edges = hasse_edges(kmax);
    let labels: BTreeSet<Label> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let closures: BTreeMap<Label, closure::Closure> = labels
        .into_par_iter()
        .map(|l| Ok((l, max_closure(l, caps.edge_arity, caps.edge_intermediate, caps.budget)?)))
        .collect::<Result<_>>()?;

    let checks: Vec<EdgeCheck> = edges
        .par_iter()
        .map(|&(lower, upper)| -> Result<EdgeCheck> {
            let mut basis_included = true;
            for (_, r) in max_basis(lower)? {
                basis_included &= label_membership(&r, upper)?;
            }
            let up = &closures[&upper];
            let mut closure_missing = Vec::new();
            for r in closures[&lower].relations() {
                if !up.contains(r) || !label_membership(r, upper)? {
                    closure_missing.push(r.clone());
                }
            }
            let mut strict_witness = None;
            for (name, r) in max_basis(upper)? {
                if !label_membership(&r, lower)? {
                    strict_witness = Some(name);
                    break;
                }
            }
            Ok(EdgeCheck { lower, upper, basis_included, closure_missing, strict_witness })
        })
        .collect::<Result<_>>()?;

    let spot_labels = [Label::IM2, Label::IN2, Label::IS0k(2), Label::IS02k(2)];
    let spots: Vec<SpotCheck> = spot_labels
        .par_iter()
        .map(|&label| -> Result<SpotCheck> {
            let c = max_closure(label, caps.spot_arity, caps.spot_intermediate, caps.budget)?;
            let rels = c.relations();
            let mut failures = Vec::new();
            for r in &rels {
                if !label_membership(r, label)? {
                    failures.push((*r).clone());
                }
            }
            Ok(SpotCheck { label, status: c.status(), relations: rels.len(), failures })
        })
        .collect::<Result<_>>()?;
    Ok(LatticeReport { kmax, edges: checks, spots })
}

fn var(prefix: &str, i: usize) -> String {
    format!("{prefix}{i}")
}

fn atom(rel: &str, vars: Vec<String>) -> Formula {
    Formula::Atom { rel: rel.to_string(), vars }
}

/// For nonempty Boolean `r`: one auxiliary `z` per member `a`, tied to the
/// `x` variables by `IMP(z, x_i)` where `a_i = 1` and `NAND(z, x_i)` where
/// `a_i = 0`, all under one max block. Variables are `x1..xn`, `z1..`.
pub fn member_gadget_formula(r: &Relation) -> Result<Formula> {
    if r.domain_size() != 2 {
        return Err(Error::DomainMismatch { expected: 2, found: r.domain_size() });
    }
    if r.is_empty() {
        return Err(Error::invalid("the construction needs a nonempty relation"));
    }
    let mut atoms = Vec::new();
    let mut zs = Vec::new();
    for (j, a) in r.tuples().into_iter().enumerate() {
        let z = var("z", j + 1);
        for (i, &bit) in a.iter().enumerate() {
            let rel = if bit == 1 { "IMP" } else { "NAND" };
            atoms.push(atom(rel, vec![z.clone(), var("x", i + 1)]));
        }
        zs.push(z);
    }
    Ok(Formula::Quant { kind: Quantifier::Max, vars: zs, body: Box::new(Formula::And(atoms)) })
}

/// One of the identities moving variables between the two groups of a
/// `Compl` relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwitchingIdentity {
    pub name: String,
    pub formula: Formula,
    pub expected: Relation,
}

impl SwitchingIdentity {
    pub fn holds(&self) -> Result<bool> {
        let n = self.expected.arity();
        let order: Vec<String> = (1..=n).map(|i| var("x", i)).collect();
        Ok(formula::evaluate(&self.formula, &order, &Env::new(2))? == self.expected)
    }
}

/// The identities that define `Compl_{k,l}` from a `Compl` relation with one
/// more variable, applicable at `(k, l)`.
pub fn switching_identities(k: usize, l: usize) -> Result<Vec<SwitchingIdentity>> {
    if k == 0 {
        return Err(Error::invalid("Compl needs k >= 1"));
    }
    let expected = catalog::compl(k, l)?;
    let xs: Vec<String> = (1..=k + l).map(|i| var("x", i)).collect();
    let y = "y".to_string();
    let mex = |vars: Vec<String>, body: Formula| Formula::Quant { kind: Quantifier::Max, vars, body: Box::new(body) };
    let mut out = Vec::new();

    let mut v = xs.clone();
    v.push(y.clone());
    out.push(SwitchingIdentity {
        name: format!("Compl{k}_{l} = mex y Compl{k}_{}(x, y)", l + 1),
        formula: mex(vec![y.clone()], atom(&format!("COMPL{k}_{}", l + 1), v)),
        expected: expected.clone(),
    });
    if l >= 1 {
        let mut v: Vec<String> = xs[..k].to_vec();
        v.push(y.clone());
        v.extend(xs[k + 1..].iter().cloned());
        let body = Formula::And(vec![
            atom(&format!("COMPL{}_{}", k + 1, l - 1), v),
            atom("NEQ", vec![y.clone(), xs[k].clone()]),
        ]);
        out.push(SwitchingIdentity {
            name: format!("Compl{k}_{l} = mex y (Compl{}_{}(.., y, ..) and NEQ(y, x{}))", k + 1, l - 1, k + 1),
            formula: mex(vec![y.clone()], body),
            expected: expected.clone(),
        });
    }
    if l == 0 {
        let mut v = xs.clone();
        v.push(y.clone());
        out.push(SwitchingIdentity {
            name: format!("Compl{k}_0 = mex y Compl{}_0(x, y)", k + 1),
            formula: mex(vec![y.clone()], atom(&format!("COMPL{}_0", k + 1), v)),
            expected: expected.clone(),
        });
    }
    if l >= 1 {
        let ys: Vec<String> = (1..=k).map(|i| var("y", i)).collect();
        let mut v = ys.clone();
        v.extend(xs[k..].iter().cloned());
        let mut atoms = vec![atom(&format!("COMPL{}_0", k + l), v)];
        for i in 0..k {
            atoms.push(atom("NEQ", vec![ys[i].clone(), xs[i].clone()]));
        }
        out.push(SwitchingIdentity {
            name: format!("Compl{k}_{l} = mex y1..y{k} (Compl{}_0(y, x{}..) and NEQ(yi, xi))", k + l, k + 1),
            formula: mex(ys, Formula::And(atoms)),
            expected,
        });
    }
    Ok(out)
}

/// Result of the `IN2` generation construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct In2Report {
    pub k: usize,
    pub formula: Formula,
    pub auxiliaries: usize,
    /// Distinct extension counts of the `x` assignments, by number of zeros.
    pub profile: Vec<BTreeSet<u64>>,
    pub result: Relation,
    pub target: Relation,
}

impl In2Report {
    pub fn equals_target(&self) -> bool {
        self.result == self.target
    }

    /// One count shared by every `m` in `1..2k` and zero at `m ∈ {0, 2k}`.
    pub fn profile_as_claimed(&self) -> bool {
        let n = 2 * self.k;
        let inner: BTreeSet<u64> = self.profile[1..n].iter().flatten().copied().collect();
        inner.len() == 1
            && !inner.contains(&0)
            && self.profile[0] == BTreeSet::from([0])
            && self.profile[n] == BTreeSet::from([0])
    }
}

impl fmt::Display for In2Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "in2: k={} auxiliaries={}", self.k, self.auxiliaries)?;
        for (m, counts) in self.profile.iter().enumerate() {
            let c: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
            writeln!(f, "in2: zeros={m} extensions={}", c.join(","))?;
        }
        writeln!(f, "in2: result {}", self.result)?;
        writeln!(f, "in2: equals Compl{}_0: {}", 2 * self.k, self.equals_target())
    }
}

/// `Q(x1..xk, y)`: `y` is free when all `x` agree, otherwise `y = x1`.
pub fn switch_relation(k: usize) -> Result<Relation> {
    Relation::from_predicate(2, k + 1, |a| a[..k].iter().all(|&x| x == a[0]) || a[k] == a[0])
}

/// Largest `k` the construction is evaluated for.
pub const IN2_MAX_K: usize = 2;

/// Builds `Φ ∧ Φ'` over `x1..x2k` with one auxiliary per `k`-subset in each
/// part, evaluates the max block over all auxiliaries and measures how many
/// extensions each `x` assignment has.
pub fn in2_witness(k: usize) -> Result<In2Report> {
    if k < 2 {
        return Err(Error::invalid("k must be at least 2"));
    }
    if k > IN2_MAX_K {
        return Err(Error::resource(format!("k = {k} needs more than 2^24 cells")));
    }
    let n = 2 * k;
    let subsets: Vec<Vec<usize>> = itertools::Itertools::combinations(0..n, k).collect();
    let index: BTreeMap<Vec<usize>, usize> = subsets.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let xs: Vec<String> = (1..=n).map(|i| var("x", i)).collect();
    let y = |i: usize| var("y", i + 1);
    let w = |i: usize| var("w", i + 1);
    let compl = format!("COMPL{}_0", k + 1);
    let mut atoms = Vec::new();
    for (j, s) in subsets.iter().enumerate() {
        let mut v: Vec<String> = s.iter().map(|&i| xs[i].clone()).collect();
        v.push(y(j));
        atoms.push(atom(&compl, v));
        let complement: Vec<usize> = (0..n).filter(|i| !s.contains(i)).collect();
        let jc = index[&complement];
        if j < jc {
            atoms.push(atom("NEQ", vec![y(j), y(jc)]));
        }
    }
    for (j, s) in subsets.iter().enumerate() {
        let mut v: Vec<String> = s.iter().map(|&i| xs[i].clone()).collect();
        v.push(w(j));
        atoms.push(atom("Q", v));
    }
    let aux: Vec<String> = (0..subsets.len()).map(y).chain((0..subsets.len()).map(w)).collect();
    let body = Formula::And(atoms);
    let env = Env::new(2).with("Q", switch_relation(k)?);
    let order: Vec<String> = xs.iter().chain(&aux).cloned().collect();
    let psi = formula::evaluate(&body, &order, &env)?;
    let block: Vec<usize> = (n..order.len()).collect();
    let counts = psi.extension_counts(&block)?;
    let mut profile = vec![BTreeSet::new(); n + 1];
    for (idx, &c) in counts.iter().enumerate() {
        let zeros = n - (idx as u32).count_ones() as usize;
        profile[zeros].insert(c);
    }
    let formula = Formula::Quant { kind: Quantifier::Max, vars: aux.clone(), body: Box::new(body) };
    let result = formula::evaluate(&formula, &xs, &env)?;
    Ok(In2Report { k, formula, auxiliaries: aux.len(), profile, result, target: catalog::compl(n, 0)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rels(names: &[&str]) -> Vec<Relation> {
        names.iter().map(|n| catalog::lookup(n, 2).unwrap()).collect()
    }

    #[test]
    fn label_text_round_trips() {
        for l in Label::finite(4).into_iter().chain([Label::IS0, Label::IS12]) {
            assert_eq!(Label::parse(&l.to_string()).unwrap(), l);
            assert_eq!(l.dual().dual(), l);
        }
        assert!(Label::parse("IS0^1").is_err());
        assert_eq!(Label::IS02k(3).node_id(), "IS02_3");
    }

    #[test]
    fn classify_examples() {
        let c = |names: &[&str]| classify_max_coclone(&rels(names)).unwrap().label;
        assert_eq!(c(&["IMP"]), Label::IM2);
        assert_eq!(c(&["COMPL3_0"]), Label::IN2);
        assert_eq!(c(&["IMP", "OR"]), Label::II2);
        assert_eq!(c(&["EQ", "DELTA0", "OR2"]), Label::IS02k(2));
        assert_eq!(c(&["EQ", "OR3"]), Label::IS0k(3));
        assert_eq!(c(&["NAND3"]), Label::IS1k(3));
        assert_eq!(c(&["DELTA0", "DELTA1"]), Label::IR2);
        assert!(classify_max_coclone(&[]).is_err());
        assert!(classify_max_coclone(&[catalog::eq(3)]).is_err());
    }

    #[test]
    fn trichotomy_examples() {
        assert_eq!(trichotomy(&rels(&["IMP"])).unwrap(), ApClass::BisEquivalent);
        assert_eq!(trichotomy(&rels(&["AFF3_1"])).unwrap(), ApClass::Fp);
        assert_eq!(trichotomy(&rels(&["OR"])).unwrap(), ApClass::SatEquivalent);
    }

    #[test]
    fn membership_examples() {
        let or3 = catalog::or(3).unwrap();
        assert!(!label_membership(&or3, Label::IS02k(2)).unwrap());
        assert!(label_membership(&or3, Label::IS02k(3)).unwrap());
        assert!(label_membership(&catalog::imp(1).unwrap(), Label::IM2).unwrap());
        assert!(label_membership(&catalog::neq(), Label::IN2).unwrap());
        assert!(!label_membership(&catalog::neq(), Label::IM2).unwrap());
        assert!(label_membership(&catalog::nand(2).unwrap(), Label::IS1k(2)).unwrap());
    }

    #[test]
    fn bases_classify_to_their_labels() {
        for l in Label::finite(3) {
            let gamma: Vec<Relation> = max_basis(l).unwrap().into_iter().map(|(_, r)| r).collect();
            assert_eq!(classify_max_coclone(&gamma).unwrap().label, l);
        }
    }

    #[test]
    fn switching_at_two_zero() {
        let ids = switching_identities(2, 0).unwrap();
        assert_eq!(ids.len(), 2);
        for id in ids {
            assert!(id.holds().unwrap(), "{}", id.name);
        }
    }

    #[test]
    fn member_gadget_on_imp() {
        let imp = catalog::imp(1).unwrap();
        let f = member_gadget_formula(&imp).unwrap();
        let order = vec!["x1".to_string(), "x2".to_string()];
        assert_eq!(formula::evaluate(&f, &order, &Env::new(2)).unwrap(), imp);
    }

    #[test]
    fn switch_relation_shape() {
        let q = switch_relation(2).unwrap();
        assert_eq!(q.tuple_strings(), vec!["000", "001", "010", "101", "110", "111"]);
    }

    #[test]
    fn lattice_edges_reference_finite_labels() {
        let finite: BTreeSet<Label> = Label::finite(4).into_iter().collect();
        for (a, b) in hasse_edges(4) {
            assert!(finite.contains(&a) && finite.contains(&b));
        }
    }
}
