//! Named relations.
//!
//! Names accepted by [`lookup`]: `EQ`, `NEQ`, `DELTA0`, `DELTA1`, `IMP`,
//! `NIMP`, `OR`, `NAND` (an optional numeric suffix gives the arity
//! parameter, e.g. `OR3`, `IMP2`), `COMPL<k>_<l>`, `AFF<k>_<c>` and `REL<m>`.

use crate::error::{Error, Result};
use crate::relation::Relation;

/// Equality on a domain of size `d`.
pub fn eq(d: usize) -> Relation {
    Relation::from_predicate(d, 2, |a| a[0] == a[1]).expect("binary relation fits")
}

pub fn neq() -> Relation {
    Relation::from_predicate(2, 2, |a| a[0] != a[1]).unwrap()
}

pub fn delta0() -> Relation {
    Relation::from_tuples(2, 1, [[0u8]]).unwrap()
}

pub fn delta1() -> Relation {
    Relation::from_tuples(2, 1, [[1u8]]).unwrap()
}

fn boolean(n: usize, keep: impl FnMut(&[u8]) -> bool) -> Result<Relation> {
    Relation::from_predicate(2, n, keep)
}

/// `¬x1 ∨ .. ∨ ¬xk ∨ y`, arity `k+1`.
pub fn imp(k: usize) -> Result<Relation> {
    boolean(k + 1, |a| a[..k].contains(&0) || a[k] == 1)
}

/// `x1 ∨ .. ∨ xk ∨ ¬y`, arity `k+1`.
pub fn nimp(k: usize) -> Result<Relation> {
    boolean(k + 1, |a| a[..k].contains(&1) || a[k] == 0)
}

/// `{0,1}^k` minus the all-zero tuple.
pub fn or(k: usize) -> Result<Relation> {
    boolean(k, |a| a.contains(&1))
}

/// `{0,1}^k` minus the all-one tuple.
pub fn nand(k: usize) -> Result<Relation> {
    boolean(k, |a| a.contains(&0))
}

/// `{0,1}^(k+l)` minus `0^k 1^l` and `1^k 0^l`.
pub fn compl(k: usize, l: usize) -> Result<Relation> {
    boolean(k + l, |a| {
        let (head, tail) = a.split_at(k);
        let low = head.iter().all(|&x| x == 0) && tail.iter().all(|&x| x == 1);
        let high = head.iter().all(|&x| x == 1) && tail.iter().all(|&x| x == 0);
        !(low || high)
    })
}

/// `x1 ⊕ .. ⊕ xk = c`.
pub fn affine(k: usize, c: u8) -> Result<Relation> {
    if c > 1 {
        return Err(Error::invalid(format!("affine constant {c} is not a bit")));
    }
    boolean(k, |a| a.iter().fold(0, |s, &x| s ^ x) == c)
}

/// Size of the domain carrying `rel_m`: classes of sizes 1, .., m.
pub fn rel_m_domain(m: usize) -> usize {
    m * (m + 1) / 2
}

/// Class index (1-based) of each element of the `rel_m` domain. Class `i`
/// holds `i` consecutive elements, starting with `D_1 = {0}`.
pub fn rel_m_classes(m: usize) -> Vec<usize> {
    (1..=m).flat_map(|i| std::iter::repeat_n(i, i)).collect()
}

/// The equivalence relation whose classes have sizes 1, .., m.
pub fn rel_m(m: usize) -> Result<Relation> {
    if m < 2 {
        return Err(Error::invalid("rel_m needs m >= 2"));
    }
    let d = rel_m_domain(m);
    let class = rel_m_classes(m);
    Relation::from_predicate(d, 2, |a| class[a[0] as usize] == class[a[1] as usize])
}

fn split_suffix(name: &str) -> (&str, &str) {
    let cut = name.find(|c: char| c.is_ascii_digit()).unwrap_or(name.len());
    name.split_at(cut)
}

fn number(name: &str, s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::UnknownRelation(name.to_string()))
}

fn pair(name: &str, s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once('_').ok_or_else(|| Error::UnknownRelation(name.to_string()))?;
    Ok((number(name, a)?, number(name, b)?))
}

/// Resolves a catalog name. `d` only matters for `EQ`; every other name
/// except `REL<m>` is Boolean.
pub fn lookup(name: &str, d: usize) -> Result<Relation> {
    let upper = name.to_ascii_uppercase();
    let (head, tail) = split_suffix(&upper);
    let k = |default: usize| if tail.is_empty() { Ok(default) } else { number(name, tail) };
    let boolean_only = |r: Result<Relation>| {
        if d != 2 {
            Err(Error::DomainMismatch { expected: d, found: 2 })
        } else {
            r
        }
    };
    match head {
        "EQ" if tail.is_empty() => Ok(eq(d)),
        "NEQ" if tail.is_empty() => boolean_only(Ok(neq())),
        "DELTA" => match tail {
            "0" => boolean_only(Ok(delta0())),
            "1" => boolean_only(Ok(delta1())),
            _ => Err(Error::UnknownRelation(name.to_string())),
        },
        "IMP" => boolean_only(imp(k(1)?)),
        "NIMP" => boolean_only(nimp(k(1)?)),
        "OR" => boolean_only(or(k(2)?)),
        "NAND" => boolean_only(nand(k(2)?)),
        "COMPL" => {
            let (a, b) = pair(name, tail)?;
            boolean_only(compl(a, b))
        }
        "AFF" => {
            let (a, c) = pair(name, tail)?;
            boolean_only(affine(a, c.min(2) as u8))
        }
        "REL" => {
            let m = number(name, tail)?;
            let r = rel_m(m)?;
            if r.domain_size() != d {
                return Err(Error::DomainMismatch { expected: d, found: r.domain_size() });
            }
            Ok(r)
        }
        _ => Err(Error::UnknownRelation(name.to_string())),
    }
}
