//! Finite relations stored as membership bit-vectors.
//!
//! A tuple `a` of arity `n` over `{0, .., d-1}` is stored at index
//! `a[0]*d^(n-1) + .. + a[n-1]`: position 1 is the most significant digit.
//! Positions in this API are 0-based; the text formats print them 1-based.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported domain.
pub const MAX_DOMAIN: usize = 6;
/// Hard cap on `d^n` for any single relation.
pub const MAX_CELLS: usize = 1 << 24;

/// Number of cells `d^n`, or a resource error past [`MAX_CELLS`].
pub fn cell_count(d: usize, n: usize) -> Result<usize> {
    let mut cells: usize = 1;
    for _ in 0..n {
        cells = cells
            .checked_mul(d)
            .filter(|&c| c <= MAX_CELLS)
            .ok_or_else(|| Error::resource(format!("{d}^{n} cells exceeds the 2^24 cap")))?;
    }
    Ok(cells)
}

pub(crate) fn check_domain(d: usize) -> Result<()> {
    if (2..=MAX_DOMAIN).contains(&d) {
        Ok(())
    } else {
        Err(Error::invalid(format!("domain size {d} outside 2..={MAX_DOMAIN}")))
    }
}

/// `pv[i] = d^(n-1-i)`.
pub(crate) fn place_values(d: usize, n: usize) -> Vec<usize> {
    let mut pv = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        pv[i] = pv[i + 1] * d;
    }
    pv
}

/// Index of a tuple.
pub fn encode(d: usize, digits: &[u8]) -> usize {
    digits.iter().fold(0usize, |acc, &x| acc * d + x as usize)
}

/// Tuple at an index.
pub fn decode(d: usize, n: usize, mut idx: usize) -> Vec<u8> {
    let mut out = vec![0u8; n];
    for slot in out.iter_mut().rev() {
        *slot = (idx % d) as u8;
        idx /= d;
    }
    out
}

/// Visits every tuple of `D^m` in index order. For each weight table `w`
/// the callback also receives `sum_j digit_j * w[j]`, kept incrementally.
pub(crate) fn walk<const K: usize>(
    d: usize,
    m: usize,
    weights: [&[usize]; K],
    mut f: impl FnMut(usize, [usize; K]),
) {
    let total = d.pow(m as u32);
    let mut digits = vec![0usize; m];
    let mut acc = [0usize; K];
    for idx in 0..total {
        f(idx, acc);
        let mut j = m;
        while j > 0 {
            j -= 1;
            if digits[j] + 1 < d {
                digits[j] += 1;
                for t in 0..K {
                    acc[t] += weights[t][j];
                }
                break;
            }
            for t in 0..K {
                acc[t] -= (d - 1) * weights[t][j];
            }
            digits[j] = 0;
        }
    }
}

fn check_positions(n: usize, positions: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &p in positions {
        if p >= n {
            return Err(Error::invalid(format!("position {} out of range for arity {n}", p + 1)));
        }
        if seen[p] {
            return Err(Error::invalid(format!("position {} repeated", p + 1)));
        }
        seen[p] = true;
    }
    Ok(())
}

/// An immutable finite relation. Equality is equality of `(d, n, bits)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    arity: usize,
    d: usize,
    bits: Vec<u64>,
}

impl Relation {
    fn blank(d: usize, n: usize) -> Result<Relation> {
        check_domain(d)?;
        let cells = cell_count(d, n)?;
        Ok(Relation { arity: n, d, bits: vec![0; cells.div_ceil(64)] })
    }

    pub fn empty(d: usize, n: usize) -> Result<Relation> {
        Relation::blank(d, n)
    }

    pub fn full(d: usize, n: usize) -> Result<Relation> {
        let mut r = Relation::blank(d, n)?;
        for i in 0..r.cells() {
            r.set(i);
        }
        Ok(r)
    }

    /// Builds a relation from explicit tuples; duplicates collapse.
    pub fn from_tuples<T: AsRef<[u8]>>(
        d: usize,
        n: usize,
        tuples: impl IntoIterator<Item = T>,
    ) -> Result<Relation> {
        let mut r = Relation::blank(d, n)?;
        for t in tuples {
            let t = t.as_ref();
            if t.len() != n {
                return Err(Error::ArityMismatch { expected: n, found: t.len() });
            }
            if let Some(&bad) = t.iter().find(|&&x| x as usize >= d) {
                return Err(Error::invalid(format!("entry {bad} outside domain of size {d}")));
            }
            r.set(encode(d, t));
        }
        Ok(r)
    }

    /// Builds the relation `{a : keep(a)}`.
    pub fn from_predicate(d: usize, n: usize, mut keep: impl FnMut(&[u8]) -> bool) -> Result<Relation> {
        let mut r = Relation::blank(d, n)?;
        let mut digits = vec![0u8; n];
        for idx in 0..r.cells() {
            if keep(&digits) {
                r.set(idx);
            }
            for slot in digits.iter_mut().rev() {
                *slot += 1;
                if (*slot as usize) < d {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(r)
    }

    /// Builds a relation directly from a membership mask over cell indices.
    pub fn from_indices(d: usize, n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Relation> {
        let mut r = Relation::blank(d, n)?;
        let cells = r.cells();
        for i in indices {
            if i >= cells {
                return Err(Error::invalid(format!("cell index {i} out of range")));
            }
            r.set(i);
        }
        Ok(r)
    }

    pub fn domain_size(&self) -> usize {
        self.d
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn cells(&self) -> usize {
        self.d.pow(self.arity as u32)
    }

    #[inline]
    pub fn contains_index(&self, idx: usize) -> bool {
        self.bits[idx >> 6] >> (idx & 63) & 1 == 1
    }

    #[inline]
    fn set(&mut self, idx: usize) {
        self.bits[idx >> 6] |= 1 << (idx & 63);
    }

    pub fn contains(&self, tuple: &[u8]) -> bool {
        tuple.len() == self.arity
            && tuple.iter().all(|&x| (x as usize) < self.d)
            && self.contains_index(encode(self.d, tuple))
    }

    /// Number of member tuples.
    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.cells()
    }

    /// Member indices in increasing order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + b)
            })
        })
    }

    /// Member tuples in index order.
    pub fn tuples(&self) -> Vec<Vec<u8>> {
        self.indices().map(|i| decode(self.d, self.arity, i)).collect()
    }

    fn same_shape(&self, other: &Relation) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DomainMismatch { expected: self.d, found: other.d });
        }
        if self.arity != other.arity {
            return Err(Error::ArityMismatch { expected: self.arity, found: other.arity });
        }
        Ok(())
    }

    pub fn intersection(&self, other: &Relation) -> Result<Relation> {
        self.same_shape(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect();
        Ok(Relation { bits, ..self.clone() })
    }

    pub fn union(&self, other: &Relation) -> Result<Relation> {
        self.same_shape(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect();
        Ok(Relation { bits, ..self.clone() })
    }

    pub fn is_subset(&self, other: &Relation) -> Result<bool> {
        self.same_shape(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0))
    }

    /// Relation `b ↦ (b[σ(1)], .., b[σ(n)]) ∈ R` of arity `m`. Output
    /// positions missing from `sigma` are unconstrained.
    pub fn substitute(&self, sigma: &[usize], m: usize) -> Result<Relation> {
        if sigma.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, found: sigma.len() });
        }
        if let Some(&bad) = sigma.iter().find(|&&j| j >= m) {
            return Err(Error::invalid(format!("substitution image {} exceeds arity {m}", bad + 1)));
        }
        let mut out = Relation::blank(self.d, m)?;
        let pv = place_values(self.d, self.arity);
        let mut w = vec![0usize; m];
        for (i, &j) in sigma.iter().enumerate() {
            w[j] += pv[i];
        }
        walk(self.d, m, [&w], |idx, [src]| {
            if self.contains_index(src) {
                out.set(idx);
            }
        });
        Ok(out)
    }

    /// Reorders positions: output position `j` holds input position `perm[j]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Relation> {
        let n = self.arity;
        if perm.len() != n {
            return Err(Error::ArityMismatch { expected: n, found: perm.len() });
        }
        check_positions(n, perm)?;
        let mut sigma = vec![0usize; n];
        for (j, &i) in perm.iter().enumerate() {
            sigma[i] = j;
        }
        self.substitute(&sigma, n)
    }

    /// Conjunction of `r1` on `scope1` and `r2` on `scope2` over `m` positions.
    pub fn conjoin(r1: &Relation, scope1: &[usize], r2: &Relation, scope2: &[usize], m: usize) -> Result<Relation> {
        if r1.d != r2.d {
            return Err(Error::DomainMismatch { expected: r1.d, found: r2.d });
        }
        for (r, s) in [(r1, scope1), (r2, scope2)] {
            if s.len() != r.arity {
                return Err(Error::ArityMismatch { expected: r.arity, found: s.len() });
            }
            if let Some(&bad) = s.iter().find(|&&j| j >= m) {
                return Err(Error::invalid(format!("scope index {} exceeds arity {m}", bad + 1)));
            }
        }
        let d = r1.d;
        let mut out = Relation::blank(d, m)?;
        let weights = |r: &Relation, s: &[usize]| {
            let pv = place_values(d, r.arity);
            let mut w = vec![0usize; m];
            for (i, &j) in s.iter().enumerate() {
                w[j] += pv[i];
            }
            w
        };
        let w1 = weights(r1, scope1);
        let w2 = weights(r2, scope2);
        walk(d, m, [&w1, &w2], |idx, [a, b]| {
            if r1.contains_index(a) && r2.contains_index(b) {
                out.set(idx);
            }
        });
        Ok(out)
    }

    /// Cartesian product: `self` on the first positions, `other` after.
    pub fn product(&self, other: &Relation) -> Result<Relation> {
        let n1 = self.arity;
        let n2 = other.arity;
        let s1: Vec<usize> = (0..n1).collect();
        let s2: Vec<usize> = (n1..n1 + n2).collect();
        Relation::conjoin(self, &s1, other, &s2, n1 + n2)
    }

    /// Extension counts into `block`, indexed by the outer tuple (the
    /// remaining positions in their original order).
    pub fn extension_counts(&self, block: &[usize]) -> Result<Vec<u64>> {
        check_positions(self.arity, block)?;
        let (w, outer) = self.outer_weights(block);
        let mut counts = vec![0u64; self.d.pow(outer as u32)];
        walk(self.d, self.arity, [&w], |idx, [o]| {
            if self.contains_index(idx) {
                counts[o] += 1;
            }
        });
        Ok(counts)
    }

    fn outer_weights(&self, block: &[usize]) -> (Vec<usize>, usize) {
        let inner: Vec<bool> = (0..self.arity).map(|i| block.contains(&i)).collect();
        let outer = self.arity - block.len();
        let pv = place_values(self.d, outer);
        let mut w = vec![0usize; self.arity];
        let mut k = 0;
        for i in 0..self.arity {
            if !inner[i] {
                w[i] = pv[k];
                k += 1;
            }
        }
        (w, outer)
    }

    fn select_counts(&self, block: &[usize], keep: impl Fn(u64) -> bool) -> Result<Relation> {
        let counts = self.extension_counts(block)?;
        let mut out = Relation::blank(self.d, self.arity - block.len())?;
        for (i, &c) in counts.iter().enumerate() {
            if keep(c) {
                out.set(i);
            }
        }
        Ok(out)
    }

    /// Existential quantification (projection away from `positions`).
    pub fn exists(&self, positions: &[usize]) -> Result<Relation> {
        self.select_counts(positions, |c| c > 0)
    }

    /// Universal quantification of one position.
    pub fn forall(&self, position: usize) -> Result<Relation> {
        let d = self.d as u64;
        self.select_counts(&[position], |c| c == d)
    }

    /// Keeps outer tuples with at least `k` extensions at `position`.
    pub fn exists_k(&self, position: usize, k: usize) -> Result<Relation> {
        if k == 0 {
            return Err(Error::invalid("counting quantifier needs k >= 1"));
        }
        self.select_counts(&[position], |c| c >= k as u64)
    }

    /// Keeps the outer tuples whose extension count into `block` equals the
    /// maximum over all outer tuples. For the empty relation that maximum is
    /// 0, so every outer tuple qualifies and the result is full.
    pub fn max_quantify(&self, block: &[usize]) -> Result<Relation> {
        if block.is_empty() {
            return Err(Error::invalid("max quantifier needs a nonempty block"));
        }
        let counts = self.extension_counts(block)?;
        let top = counts.iter().copied().max().unwrap_or(0);
        let mut out = Relation::blank(self.d, self.arity - block.len())?;
        for (i, &c) in counts.iter().enumerate() {
            if c == top {
                out.set(i);
            }
        }
        Ok(out)
    }

    /// Boolean only: the relation of complemented tuples `{¬a : a ∈ R}`.
    pub fn dual(&self) -> Result<Relation> {
        if self.d != 2 {
            return Err(Error::invalid("tuple complement is defined for d = 2 only"));
        }
        let top = self.cells() - 1;
        Relation::from_indices(2, self.arity, self.indices().map(|i| top - i).collect::<Vec<_>>())
    }

    /// Member tuples as digit strings, e.g. `["01", "10"]`.
    pub fn tuple_strings(&self) -> Vec<String> {
        self.tuples()
            .iter()
            .map(|t| t.iter().map(|&x| char::from(b'0' + x)).collect())
            .collect()
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation(d={}, n={}, {self})", self.d, self.arity)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tuples = self.tuple_strings();
        if self.arity == 0 && !tuples.is_empty() {
            return write!(f, "{{()}}");
        }
        write!(f, "{{{}}}", tuples.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(d: usize, n: usize, ts: &[&str]) -> Relation {
        let tuples: Vec<Vec<u8>> = ts.iter().map(|s| s.bytes().map(|b| b - b'0').collect()).collect();
        Relation::from_tuples(d, n, tuples).unwrap()
    }

    fn imp() -> Relation {
        rel(2, 2, &["00", "01", "11"])
    }

    fn all_tuples(d: usize, n: usize) -> Vec<Vec<u8>> {
        (0..d.pow(n as u32)).map(|i| decode(d, n, i)).collect()
    }

    #[test]
    fn make_relation_examples() {
        let eq = rel(2, 2, &["00", "11"]);
        assert_eq!(eq.tuple_strings(), vec!["00", "11"]);
        let e = Relation::from_tuples(2, 2, Vec::<Vec<u8>>::new()).unwrap();
        assert!(e.is_empty());
        assert!(rel(3, 1, &["0", "1", "2"]).is_full());
        assert_eq!(rel(2, 2, &["01", "01"]).len(), 1);
    }

    #[test]
    fn make_relation_errors() {
        assert!(matches!(Relation::from_tuples(2, 2, [[0u8, 2]]), Err(Error::Invalid(_))));
        assert!(matches!(Relation::from_tuples(2, 2, [[0u8]]), Err(Error::ArityMismatch { .. })));
        assert!(matches!(Relation::empty(2, 25), Err(Error::Resource(_))));
        assert!(Relation::empty(2, 24).is_ok());
        assert!(matches!(Relation::empty(7, 1), Err(Error::Invalid(_))));
    }

    #[test]
    fn arity_zero_is_unit_or_empty() {
        let unit = Relation::full(2, 0).unwrap();
        assert_eq!(unit.len(), 1);
        assert!(unit.contains(&[]));
        assert!(Relation::empty(2, 0).unwrap().is_empty());
    }

    #[test]
    fn encoding_is_big_endian() {
        assert_eq!(encode(3, &[1, 0, 2]), 11);
        assert_eq!(decode(3, 3, 11), vec![1, 0, 2]);
        let r = rel(2, 2, &["10"]);
        assert!(r.contains_index(2));
    }

    #[test]
    fn substitute_examples() {
        assert_eq!(imp().substitute(&[0, 0], 1).unwrap(), rel(2, 1, &["0", "1"]));
        let neq = rel(2, 2, &["01", "10"]);
        assert!(neq.substitute(&[0, 0], 1).unwrap().is_empty());
        let compl30 = Relation::from_predicate(2, 3, |a| !(a.iter().all(|&x| x == 0) || a.iter().all(|&x| x == 1))).unwrap();
        assert_eq!(compl30.substitute(&[0, 1, 1], 2).unwrap(), neq);
    }

    #[test]
    fn substitute_matches_direct_definition() {
        let r = rel(3, 2, &["01", "12", "20", "22"]);
        let sigma = [2, 0];
        let got = r.substitute(&sigma, 3).unwrap();
        for b in all_tuples(3, 3) {
            let image = [b[2], b[0]];
            assert_eq!(got.contains(&b), r.contains(&image), "{b:?}");
        }
    }

    #[test]
    fn substitute_rejects_bad_maps() {
        assert!(imp().substitute(&[0], 1).is_err());
        assert!(imp().substitute(&[0, 2], 2).is_err());
    }

    #[test]
    fn conjoin_examples() {
        let or = rel(2, 2, &["01", "10", "11"]);
        let nand = rel(2, 2, &["00", "01", "10"]);
        let neq = rel(2, 2, &["01", "10"]);
        assert_eq!(Relation::conjoin(&or, &[0, 1], &nand, &[0, 1], 2).unwrap(), neq);
        let full = Relation::full(2, 2).unwrap();
        assert_eq!(Relation::conjoin(&or, &[0, 1], &full, &[0, 1], 2).unwrap(), or);
        let chain = Relation::conjoin(&imp(), &[0, 1], &imp(), &[1, 2], 3).unwrap();
        assert_eq!(chain.tuple_strings(), vec!["000", "001", "011", "111"]);
        assert!(Relation::conjoin(&or, &[0, 3], &nand, &[0, 1], 2).is_err());
    }

    #[test]
    fn quantifier_examples() {
        assert!(imp().exists(&[1]).unwrap().is_full());
        assert_eq!(imp().forall(1).unwrap(), rel(2, 1, &["0"]));
        let chain = Relation::conjoin(&imp(), &[0, 1], &imp(), &[1, 2], 3).unwrap();
        assert_eq!(chain.exists(&[1]).unwrap(), imp());
        assert_eq!(imp().exists_k(1, 1).unwrap(), imp().exists(&[1]).unwrap());
        assert_eq!(imp().exists_k(1, 2).unwrap(), rel(2, 1, &["0"]));
        assert!(imp().exists_k(1, 3).unwrap().is_empty());
        assert!(imp().exists_k(1, 0).is_err());
    }

    #[test]
    fn max_quantify_examples() {
        assert_eq!(imp().max_quantify(&[1]).unwrap(), rel(2, 1, &["0"]));
        assert_eq!(imp().max_quantify(&[0]).unwrap(), rel(2, 1, &["1"]));
        assert!(Relation::full(2, 2).unwrap().max_quantify(&[1]).unwrap().is_full());
        assert!(Relation::empty(2, 3).unwrap().max_quantify(&[0, 2]).unwrap().is_full());
        assert!(imp().max_quantify(&[]).is_err());
    }

    #[test]
    fn neq_from_or_and_two_implications() {
        // OR(x,y) ∧ IMP(x,z) ∧ IMP(y,t) over (x,y,z,t)
        let or = rel(2, 2, &["01", "10", "11"]);
        let a = Relation::conjoin(&or, &[0, 1], &imp(), &[0, 2], 4).unwrap();
        let b = Relation::conjoin(&a, &[0, 1, 2, 3], &imp(), &[1, 3], 4).unwrap();
        assert_eq!(b.max_quantify(&[2, 3]).unwrap(), rel(2, 2, &["01", "10"]));
    }

    #[test]
    fn extension_count_examples() {
        assert_eq!(imp().extension_counts(&[1]).unwrap(), vec![2, 1]);
        assert_eq!(Relation::empty(2, 2).unwrap().extension_counts(&[0]).unwrap(), vec![0, 0]);
        let compl30 = Relation::from_predicate(2, 3, |a| !(a.iter().all(|&x| x == 0) || a.iter().all(|&x| x == 1))).unwrap();
        assert_eq!(compl30.extension_counts(&[2]).unwrap(), vec![1, 2, 2, 1]);
    }

    #[test]
    fn extension_counts_match_brute_force() {
        let r = rel(3, 3, &["012", "010", "210", "222", "111", "011"]);
        let counts = r.extension_counts(&[1]).unwrap();
        for outer in all_tuples(3, 2) {
            let c = (0..3u8).filter(|&y| r.contains(&[outer[0], y, outer[1]])).count() as u64;
            assert_eq!(counts[encode(3, &outer)], c);
        }
    }

    #[test]
    fn permute_and_dual() {
        let r = rel(2, 3, &["001", "110"]);
        assert_eq!(r.permute(&[2, 0, 1]).unwrap().tuple_strings(), vec!["011", "100"]);
        assert_eq!(r.dual().unwrap().tuple_strings(), vec!["001", "110"]);
        assert_eq!(imp().dual().unwrap().tuple_strings(), vec!["00", "10", "11"]);
    }

    #[test]
    fn set_operations() {
        let or = rel(2, 2, &["01", "10", "11"]);
        assert_eq!(or.intersection(&imp()).unwrap(), rel(2, 2, &["01", "11"]));
        assert!(or.union(&imp()).unwrap().is_full());
        assert!(rel(2, 2, &["01"]).is_subset(&or).unwrap());
        assert!(or.intersection(&Relation::full(3, 2).unwrap()).is_err());
    }
}
