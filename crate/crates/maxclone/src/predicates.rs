//! Structural tests on Boolean relations and the filter analysis.
//!
//! On `d = 2` a tuple's index is its bit pattern, so componentwise `∨`, `∧`
//! and `⊕` act directly on indices.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::relation::Relation;

fn boolean(r: &Relation) -> Result<()> {
    if r.domain_size() == 2 {
        Ok(())
    } else {
        Err(Error::DomainMismatch { expected: 2, found: r.domain_size() })
    }
}

/// Describes a trivial relation: positions forced to 0, positions forced to
/// 1, and a partition of the remaining positions into equal-valued classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrivialWitness {
    pub zeros: Vec<usize>,
    pub ones: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    pub is_affine: bool,
    pub is_self_complement: bool,
    pub is_or_closed: bool,
    pub is_and_closed: bool,
    pub is_log_supermodular: bool,
    pub trivial: Option<TrivialWitness>,
}

impl Structure {
    pub fn is_trivial(&self) -> bool {
        self.trivial.is_some()
    }
}

pub fn structural_predicates(r: &Relation) -> Result<Structure> {
    boolean(r)?;
    let is_or_closed = closed_under(r, |a, b| a | b);
    let is_and_closed = closed_under(r, |a, b| a & b);
    Ok(Structure {
        is_affine: is_affine(r)?,
        is_self_complement: is_self_complement(r)?,
        is_or_closed,
        is_and_closed,
        is_log_supermodular: is_or_closed && is_and_closed,
        trivial: trivial_witness(r)?,
    })
}

fn closed_under(r: &Relation, op: impl Fn(usize, usize) -> usize) -> bool {
    let members: Vec<usize> = r.indices().collect();
    members
        .iter()
        .enumerate()
        .all(|(i, &a)| members[i + 1..].iter().all(|&b| r.contains_index(op(a, b))))
}

/// Closed under `a ⊕ b ⊕ c`; the empty relation passes.
pub fn is_affine(r: &Relation) -> Result<bool> {
    boolean(r)?;
    let members: Vec<usize> = r.indices().collect();
    let Some(&a0) = members.first() else {
        return Ok(true);
    };
    // R is a coset of a subspace iff R ⊕ a0 is closed under ⊕.
    Ok(members
        .iter()
        .enumerate()
        .all(|(i, &a)| members[i + 1..].iter().all(|&b| r.contains_index(a ^ b ^ a0))))
}

pub fn is_self_complement(r: &Relation) -> Result<bool> {
    boolean(r)?;
    let top = r.cells() - 1;
    Ok(r.indices().all(|a| r.contains_index(top - a)))
}

pub fn is_or_closed(r: &Relation) -> Result<bool> {
    boolean(r)?;
    Ok(closed_under(r, |a, b| a | b))
}

pub fn is_and_closed(r: &Relation) -> Result<bool> {
    boolean(r)?;
    Ok(closed_under(r, |a, b| a & b))
}

pub fn is_zero_valid(r: &Relation) -> bool {
    r.contains_index(0)
}

pub fn is_one_valid(r: &Relation) -> bool {
    r.contains_index(r.cells() - 1)
}

/// Closed under ternary majority, tested as: R equals the conjunction of
/// its projections onto all pairs of positions.
pub fn is_bijunctive(r: &Relation) -> Result<bool> {
    boolean(r)?;
    let n = r.arity();
    let members = r.tuples();
    let mut pairs = vec![[false; 4]; n * n];
    for a in &members {
        for i in 0..n {
            for j in i..n {
                pairs[i * n + j][(a[i] * 2 + a[j]) as usize] = true;
            }
        }
    }
    let closure = Relation::from_predicate(2, n, |a| {
        (0..n).all(|i| (i..n).all(|j| pairs[i * n + j][(a[i] * 2 + a[j]) as usize]))
    })?;
    Ok(closure == *r)
}

/// Positions grouped by identical columns over the members; groups are
/// ordered by their smallest position.
fn column_classes(r: &Relation) -> Vec<Vec<usize>> {
    let members = r.tuples();
    let mut groups: BTreeMap<Vec<u8>, Vec<usize>> = BTreeMap::new();
    for i in 0..r.arity() {
        let column: Vec<u8> = members.iter().map(|a| a[i]).collect();
        groups.entry(column).or_default().push(i);
    }
    let mut classes: Vec<Vec<usize>> = groups.into_values().collect();
    classes.sort();
    classes
}

/// `Some` iff R is fixed by forced zeros, forced ones and equalities. The
/// empty relation is reported with every position both forced 0 and 1.
pub fn trivial_witness(r: &Relation) -> Result<Option<TrivialWitness>> {
    boolean(r)?;
    let n = r.arity();
    if r.is_empty() {
        let all: Vec<usize> = (0..n).collect();
        return Ok(Some(TrivialWitness { zeros: all.clone(), ones: all, classes: Vec::new() }));
    }
    let members = r.tuples();
    let mut zeros = Vec::new();
    let mut ones = Vec::new();
    for i in 0..n {
        if members.iter().all(|a| a[i] == 0) {
            zeros.push(i);
        } else if members.iter().all(|a| a[i] == 1) {
            ones.push(i);
        }
    }
    let classes: Vec<Vec<usize>> = column_classes(r)
        .into_iter()
        .filter(|c| !zeros.contains(&c[0]) && !ones.contains(&c[0]))
        .collect();
    // R sits inside the relation the witness describes; equal sizes make them equal.
    let described = 1usize << classes.len();
    Ok((described == r.len()).then_some(TrivialWitness { zeros, ones, classes }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterAnalysis {
    /// Positions that agree on every member, ordered by smallest position.
    pub eq_classes: Vec<Vec<usize>>,
    /// Positions carrying a 1 in some member.
    pub support: Vec<usize>,
    pub conforming_count: u64,
    pub is_filter: bool,
    /// Maximal conforming tuples outside R.
    pub max_excluded: Vec<Vec<u8>>,
    /// Largest number of classes inside the support on which a maximal
    /// excluded tuple is zero; 0 when there are none.
    pub r: usize,
}

/// Largest class mask this analysis enumerates.
const MAX_FILTER_CLASSES: usize = 24;

pub fn filter_property(r: &Relation) -> Result<FilterAnalysis> {
    boolean(r)?;
    let n = r.arity();
    let eq_classes = if r.is_empty() {
        if n == 0 { Vec::new() } else { vec![(0..n).collect()] }
    } else {
        column_classes(r)
    };
    let members = r.tuples();
    let support: Vec<usize> = (0..n).filter(|&i| members.iter().any(|a| a[i] == 1)).collect();
    let inner: Vec<Vec<usize>> = eq_classes.iter().filter(|c| support.contains(&c[0])).cloned().collect();
    let k = inner.len();
    if k > MAX_FILTER_CLASSES {
        return Err(Error::resource(format!("filter analysis over {k} classes")));
    }

    let expand = |mask: usize| -> Vec<u8> {
        let mut t = vec![0u8; n];
        for (c, class) in inner.iter().enumerate() {
            if mask >> c & 1 == 1 {
                for &i in class.iter() {
                    t[i] = 1;
                }
            }
        }
        t
    };
    let total = 1usize << k;
    let member: Vec<bool> = (0..total).map(|m| r.contains(&expand(m))).collect();

    let is_filter = (0..total)
        .filter(|&m| member[m])
        .all(|m| (0..k).all(|c| member[m | 1 << c]));

    // above[m]: some strict superset of m is a non-member.
    let mut above = vec![false; total];
    for m in (0..total).rev() {
        above[m] = (0..k)
            .filter(|&c| m >> c & 1 == 0)
            .any(|c| !member[m | 1 << c] || above[m | 1 << c]);
    }
    let maximal: Vec<usize> = (0..total).filter(|&m| !member[m] && !above[m]).collect();
    let r_value = maximal.iter().map(|&m| k - m.count_ones() as usize).max().unwrap_or(0);

    let max_excluded = maximal.into_iter().map(expand).collect();
    Ok(FilterAnalysis {
        eq_classes,
        support,
        conforming_count: total as u64,
        is_filter,
        max_excluded,
        r: r_value,
    })
}
