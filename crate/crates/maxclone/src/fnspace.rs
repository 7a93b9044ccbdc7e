//! Total and partial operations on a finite domain.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::relation::{cell_count, check_domain, decode, Relation, MAX_CELLS};

const UNDEF: u8 = u8::MAX;

/// An `n`-ary partial operation. The table uses the same index encoding as
/// [`Relation`]. Ordering is lexicographic on the table, undefined last.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialFunction {
    d: usize,
    arity: usize,
    table: Vec<u8>,
}

impl PartialFunction {
    pub fn new(d: usize, arity: usize, table: &[Option<u8>]) -> Result<PartialFunction> {
        check_domain(d)?;
        let cells = cell_count(d, arity)?;
        if table.len() != cells {
            return Err(Error::invalid(format!("function table has {} entries, expected {cells}", table.len())));
        }
        let mut raw = Vec::with_capacity(cells);
        for &v in table {
            match v {
                Some(x) if (x as usize) < d => raw.push(x),
                Some(x) => return Err(Error::invalid(format!("function value {x} outside domain of size {d}"))),
                None => raw.push(UNDEF),
            }
        }
        Ok(PartialFunction { d, arity, table: raw })
    }

    /// Total function from a closure over argument tuples.
    pub fn total(d: usize, arity: usize, f: impl Fn(&[u8]) -> u8) -> Result<PartialFunction> {
        check_domain(d)?;
        let cells = cell_count(d, arity)?;
        let mut table = Vec::with_capacity(cells);
        for idx in 0..cells {
            let v = f(&decode(d, arity, idx));
            if v as usize >= d {
                return Err(Error::invalid(format!("function value {v} outside domain of size {d}")));
            }
            table.push(v);
        }
        Ok(PartialFunction { d, arity, table })
    }

    /// The `i`-th projection of arity `n`.
    pub fn projection(d: usize, arity: usize, i: usize) -> Result<PartialFunction> {
        if i >= arity {
            return Err(Error::invalid("projection index out of range"));
        }
        PartialFunction::total(d, arity, |a| a[i])
    }

    pub fn domain_size(&self) -> usize {
        self.d
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    #[inline]
    pub fn get(&self, idx: usize) -> Option<u8> {
        let v = self.table[idx];
        (v != UNDEF).then_some(v)
    }

    pub fn apply(&self, args: &[u8]) -> Option<u8> {
        self.get(crate::relation::encode(self.d, args))
    }

    pub fn table(&self) -> Vec<Option<u8>> {
        (0..self.table.len()).map(|i| self.get(i)).collect()
    }

    pub fn is_total(&self) -> bool {
        self.table.iter().all(|&v| v != UNDEF)
    }

    fn undefine(&mut self, idx: usize) {
        self.table[idx] = UNDEF;
    }
}

impl fmt::Debug for PartialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: String = self
            .table
            .iter()
            .map(|&v| if v == UNDEF { '-' } else { char::from(b'0' + v) })
            .collect();
        write!(f, "PartialFunction(d={}, n={}, {body})", self.d, self.arity)
    }
}

fn same_domain(f: &PartialFunction, r: &Relation) -> Result<()> {
    if f.d != r.domain_size() {
        return Err(Error::DomainMismatch { expected: f.d, found: r.domain_size() });
    }
    Ok(())
}

/// A choice of `n` member tuples whose componentwise image is defined and
/// falls outside R, returned as member indices.
fn find_violation(f: &PartialFunction, r: &Relation) -> Option<Vec<usize>> {
    let n = f.arity;
    let width = r.arity();
    let d = f.d;
    let members: Vec<usize> = r.indices().collect();
    let tuples: Vec<Vec<u8>> = members.iter().map(|&i| decode(d, width, i)).collect();
    if n == 0 {
        let v = f.get(0)?;
        let image = vec![v; width];
        return (!r.contains(&image)).then(Vec::new);
    }
    if members.is_empty() {
        return None;
    }
    // acc[depth][c]: partial index into f's table for column c.
    let mut acc = vec![vec![0usize; width]; n + 1];
    let mut choice = vec![0usize; n];
    let mut depth = 0;
    loop {
        if depth == n {
            let mut image = Vec::with_capacity(width);
            let mut defined = true;
            for c in 0..width {
                match f.get(acc[n][c]) {
                    Some(v) => image.push(v),
                    None => {
                        defined = false;
                        break;
                    }
                }
            }
            if defined && !r.contains(&image) {
                return Some(choice.iter().map(|&j| members[j]).collect());
            }
            // advance
            loop {
                if depth == 0 {
                    return None;
                }
                depth -= 1;
                choice[depth] += 1;
                if choice[depth] < members.len() {
                    break;
                }
            }
        } else {
            let row = &tuples[choice[depth]];
            let (lo, hi) = acc.split_at_mut(depth + 1);
            for c in 0..width {
                hi[0][c] = lo[depth][c] * d + row[c] as usize;
            }
            depth += 1;
            if depth < n {
                choice[depth] = 0;
            }
        }
    }
}

/// True iff every componentwise image of member tuples is undefined
/// somewhere or lies in R.
pub fn preserves(f: &PartialFunction, r: &Relation) -> Result<bool> {
    same_domain(f, r)?;
    Ok(find_violation(f, r).is_none())
}

/// Defined image of `f` on the box `A_1 × .. × A_n`, sets given as masks.
pub fn image_on_box(f: &PartialFunction, sets: &[u8]) -> u8 {
    let d = f.d;
    let n = f.arity;
    let members: Vec<Vec<u8>> = sets
        .iter()
        .map(|&m| (0..d as u8).filter(|&x| m >> x & 1 == 1).collect())
        .collect();
    if members.iter().any(|m| m.is_empty()) {
        return 0;
    }
    let mut image = 0u8;
    let mut pos = vec![0usize; n];
    loop {
        let idx = (0..n).fold(0usize, |acc, i| acc * d + members[i][pos[i]] as usize);
        if let Some(v) = f.get(idx) {
            image |= 1 << v;
        }
        let mut i = n;
        loop {
            if i == 0 {
                return image;
            }
            i -= 1;
            pos[i] += 1;
            if pos[i] < members[i].len() {
                break;
            }
            pos[i] = 0;
        }
    }
}

/// Subsets of `{0..d}` of size `k`, as masks in increasing order.
pub fn subsets_of_size(d: usize, k: usize) -> Vec<u8> {
    (0u16..1 << d).filter(|m| m.count_ones() as usize == k).map(|m| m as u8).collect()
}

/// Every box of `k`-element sets has at least `k` defined output values.
pub fn k_subset_surjective(f: &PartialFunction, k: usize) -> Result<bool> {
    if k == 0 || k > f.d {
        return Err(Error::invalid(format!("k = {k} outside 1..={}", f.d)));
    }
    let subsets = subsets_of_size(f.d, k);
    let n = f.arity;
    let mut pos = vec![0usize; n];
    loop {
        let sets: Vec<u8> = pos.iter().map(|&p| subsets[p]).collect();
        if (image_on_box(f, &sets).count_ones() as usize) < k {
            return Ok(false);
        }
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(true);
            }
            i -= 1;
            pos[i] += 1;
            if pos[i] < subsets.len() {
                break;
            }
            pos[i] = 0;
        }
    }
}

pub fn subset_surjective(f: &PartialFunction) -> bool {
    (1..=f.d).all(|k| k_subset_surjective(f, k).unwrap_or(false))
}

/// The binary operation on `{0..k}` used to show that surjectivity
/// conditions for different `k` are incomparable. Rows are the first argument.
pub fn example4_function(k: usize, m: usize) -> Result<PartialFunction> {
    if !(1 < m && m <= k) {
        return Err(Error::invalid(format!("need 1 < m <= k, got k = {k}, m = {m}")));
    }
    check_domain(k)?;
    PartialFunction::total(k, 2, |args| {
        let (a, b) = (args[0] as usize, args[1] as usize);
        let v = if a + 2 <= m {
            if b + 2 <= m {
                a
            } else if b == m - 1 {
                (a + 1) % (m - 1)
            } else {
                b
            }
        } else if a == m - 1 {
            if b == m - 1 { 0 } else { b }
        } else {
            b
        };
        v as u8
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionMode {
    Total,
    Partial,
}

/// Number of functions `enumerate_functions` would produce.
pub fn function_count(d: usize, n: usize, mode: FunctionMode) -> Result<usize> {
    let cells = cell_count(d, n)?;
    let base = match mode {
        FunctionMode::Total => d,
        FunctionMode::Partial => d + 1,
    };
    let mut count: usize = 1;
    for _ in 0..cells {
        count = count
            .checked_mul(base)
            .filter(|&c| c <= MAX_CELLS)
            .ok_or_else(|| Error::resource(format!("enumerating functions of arity {n} over d = {d} exceeds 2^24")))?;
    }
    Ok(count)
}

/// The `rank`-th function in enumeration order.
fn function_at(d: usize, n: usize, mode: FunctionMode, mut rank: usize) -> PartialFunction {
    let cells = d.pow(n as u32);
    let base = match mode {
        FunctionMode::Total => d,
        FunctionMode::Partial => d + 1,
    };
    let mut table = vec![0u8; cells];
    for slot in table.iter_mut().rev() {
        let digit = rank % base;
        rank /= base;
        *slot = if digit == d { UNDEF } else { digit as u8 };
    }
    PartialFunction { d, arity: n, table }
}

/// All functions of arity `n` in lexicographic table order.
pub fn enumerate_functions(
    d: usize,
    n: usize,
    mode: FunctionMode,
) -> Result<impl Iterator<Item = PartialFunction>> {
    check_domain(d)?;
    let count = function_count(d, n, mode)?;
    Ok((0..count).map(move |rank| function_at(d, n, mode, rank)))
}

/// Functions grouped by arity; `by_arity[n]` holds the arity-`n` ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSet {
    pub d: usize,
    pub max_arity: usize,
    pub by_arity: Vec<Vec<PartialFunction>>,
}

impl FunctionSet {
    pub fn len(&self) -> usize {
        self.by_arity.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &PartialFunction> {
        self.by_arity.iter().flatten()
    }
}

fn filtered(
    d: usize,
    arity_cap: usize,
    mode: FunctionMode,
    keep: impl Fn(&PartialFunction) -> bool + Sync,
) -> Result<FunctionSet> {
    check_domain(d)?;
    let mut by_arity = vec![Vec::new()];
    for n in 1..=arity_cap {
        let count = function_count(d, n, mode)?;
        // Indexed parallel iterators keep their order on collect.
        let kept: Vec<PartialFunction> = (0..count)
            .into_par_iter()
            .map(|rank| function_at(d, n, mode, rank))
            .filter(|f| keep(f))
            .collect();
        by_arity.push(kept);
    }
    Ok(FunctionSet { d, max_arity: arity_cap, by_arity })
}

fn check_gamma(d: usize, gamma: &[Relation]) -> Result<()> {
    if let Some(r) = gamma.iter().find(|r| r.domain_size() != d) {
        return Err(Error::DomainMismatch { expected: d, found: r.domain_size() });
    }
    Ok(())
}

/// Total polymorphisms of arity `1..=arity_cap`.
pub fn pol(d: usize, gamma: &[Relation], arity_cap: usize) -> Result<FunctionSet> {
    check_gamma(d, gamma)?;
    filtered(d, arity_cap, FunctionMode::Total, |f| gamma.iter().all(|r| find_violation(f, r).is_none()))
}

/// Partial polymorphisms of arity `1..=arity_cap`.
pub fn ppol(d: usize, gamma: &[Relation], arity_cap: usize) -> Result<FunctionSet> {
    check_gamma(d, gamma)?;
    filtered(d, arity_cap, FunctionMode::Partial, |f| gamma.iter().all(|r| find_violation(f, r).is_none()))
}

/// Partial polymorphisms that are `k`-subset surjective for every `k ∈ K`.
pub fn mk_ppol(d: usize, gamma: &[Relation], ks: &[usize], arity_cap: usize) -> Result<FunctionSet> {
    check_gamma(d, gamma)?;
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > d) {
        return Err(Error::invalid(format!("k = {k} outside 1..={d}")));
    }
    filtered(d, arity_cap, FunctionMode::Partial, |f| {
        ks.iter().all(|&k| k_subset_surjective(f, k).unwrap_or(false))
            && gamma.iter().all(|r| find_violation(f, r).is_none())
    })
}

/// Relations of arity `0..=arity_cap` preserved by every function in `fs`.
pub fn inv(fs: &FunctionSet, arity_cap: usize) -> Result<Vec<Relation>> {
    let d = fs.d;
    let mut out = Vec::new();
    for n in 0..=arity_cap {
        let cells = cell_count(d, n)?;
        if cells > 16 {
            return Err(Error::resource(format!("enumerating relations with {cells} cells")));
        }
        let found: Vec<Relation> = (0u64..1 << cells)
            .into_par_iter()
            .map(|mask| Relation::from_indices(d, n, (0..cells).filter(|&i| mask >> i & 1 == 1)).unwrap())
            .filter(|r| fs.iter().all(|f| find_violation(f, r).is_none()))
            .collect();
        out.extend(found);
    }
    Ok(out)
}

/// Draws a random member of `mk_ppol(gamma, {k}, n)`.
///
/// Random tables are repaired by undefining cells that take part in a
/// violation, then kept if they are still `k`-subset surjective. After
/// `attempts` failures a random projection is returned, which always
/// qualifies. The flag reports whether the fallback was used.
pub fn sample_mk_ppol(
    d: usize,
    gamma: &[Relation],
    k: usize,
    n: usize,
    attempts: usize,
    rng: &mut impl Rng,
) -> Result<(PartialFunction, bool)> {
    check_gamma(d, gamma)?;
    if k == 0 || k > d {
        return Err(Error::invalid(format!("k = {k} outside 1..={d}")));
    }
    let cells = cell_count(d, n)?;
    for attempt in 0..attempts {
        let undefined_rate = if attempt % 2 == 0 { 0.0 } else { rng.gen_range(0.0..0.5) };
        let table: Vec<Option<u8>> = (0..cells)
            .map(|_| (!rng.gen_bool(undefined_rate)).then(|| rng.gen_range(0..d as u8)))
            .collect();
        let mut f = PartialFunction::new(d, n, &table)?;
        let repair = attempt % 2 == 1;
        let mut ok = true;
        for r in gamma {
            while let Some(choice) = find_violation(&f, r) {
                if !repair {
                    ok = false;
                    break;
                }
                let tuples: Vec<Vec<u8>> = choice.iter().map(|&i| decode(d, r.arity(), i)).collect();
                let column = rng.gen_range(0..r.arity());
                let args: Vec<u8> = tuples.iter().map(|t| t[column]).collect();
                f.undefine(crate::relation::encode(d, &args));
            }
            if !ok {
                break;
            }
        }
        if ok && gamma.iter().all(|r| find_violation(&f, r).is_none()) && k_subset_surjective(&f, k)? {
            return Ok((f, false));
        }
    }
    Ok((PartialFunction::projection(d, n, rng.gen_range(0..n.max(1)))?, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn join() -> PartialFunction {
        PartialFunction::total(2, 2, |a| a[0] | a[1]).unwrap()
    }

    #[test]
    fn preservation_examples() {
        assert!(preserves(&join(), &catalog::or(2).unwrap()).unwrap());
        assert!(!preserves(&join(), &catalog::neq()).unwrap());
        assert!(preserves(&join(), &Relation::full(2, 3).unwrap()).unwrap());
        let undefined = PartialFunction::new(2, 2, &[None; 4]).unwrap();
        assert!(preserves(&undefined, &catalog::neq()).unwrap());
    }

    #[test]
    fn preservation_matches_brute_force() {
        // Every binary partial function against IMP, by direct pair enumeration.
        let imp = catalog::imp(1).unwrap();
        let tuples = imp.tuples();
        for f in enumerate_functions(2, 2, FunctionMode::Partial).unwrap() {
            let mut expected = true;
            for a in &tuples {
                for b in &tuples {
                    let x = f.apply(&[a[0], b[0]]);
                    let y = f.apply(&[a[1], b[1]]);
                    if let (Some(x), Some(y)) = (x, y) {
                        expected &= imp.contains(&[x, y]);
                    }
                }
            }
            assert_eq!(preserves(&f, &imp).unwrap(), expected, "{f:?}");
        }
    }

    #[test]
    fn surjectivity_examples() {
        assert!(k_subset_surjective(&join(), 2).unwrap());
        let zero = PartialFunction::total(2, 1, |_| 0).unwrap();
        assert!(!k_subset_surjective(&zero, 2).unwrap());
        assert!(k_subset_surjective(&zero, 1).unwrap());
        assert!(k_subset_surjective(&zero, 3).is_err());
        let hole = PartialFunction::new(2, 1, &[Some(0), None]).unwrap();
        assert!(!k_subset_surjective(&hole, 1).unwrap());
    }

    #[test]
    fn example4_profiles() {
        let profile = |k, m| -> Vec<bool> {
            let f = example4_function(k, m).unwrap();
            assert!(f.is_total());
            (1..=k).map(|l| k_subset_surjective(&f, l).unwrap()).collect()
        };
        assert_eq!(profile(4, 2), vec![true, false, true, true]);
        assert_eq!(profile(4, 3), vec![true, true, false, true]);
        let f = example4_function(3, 2).unwrap();
        assert_eq!(image_on_box(&f, &[0b011, 0b011]), 0b001);
        assert!(example4_function(3, 1).is_err());
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(enumerate_functions(2, 2, FunctionMode::Total).unwrap().count(), 16);
        assert_eq!(enumerate_functions(2, 2, FunctionMode::Partial).unwrap().count(), 81);
        assert_eq!(enumerate_functions(2, 3, FunctionMode::Partial).unwrap().count(), 6561);
        let fs: Vec<_> = enumerate_functions(2, 1, FunctionMode::Partial).unwrap().collect();
        assert!(fs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(fs.last().unwrap().table(), vec![None, None]);
        assert!(matches!(function_count(3, 3, FunctionMode::Total), Err(Error::Resource(_))));
    }

    #[test]
    fn pol_examples() {
        let p = pol(2, &[catalog::neq()], 1).unwrap();
        let tables: Vec<_> = p.by_arity[1].iter().map(|f| f.table()).collect();
        assert_eq!(tables, vec![vec![Some(0), Some(1)], vec![Some(1), Some(0)]]);
        assert_eq!(pol(2, &[], 2).unwrap().len(), 4 + 16);
    }

    #[test]
    fn mk_ppol_with_k_equal_d_is_surjective_partials() {
        let gamma = [catalog::imp(1).unwrap()];
        let got = mk_ppol(2, &gamma, &[2], 2).unwrap();
        let all = ppol(2, &gamma, 2).unwrap();
        for n in 1..=2 {
            let expected: Vec<_> = all.by_arity[n]
                .iter()
                .filter(|f| {
                    let image: std::collections::BTreeSet<_> = f.table().into_iter().flatten().collect();
                    image.len() == 2
                })
                .cloned()
                .collect();
            assert_eq!(got.by_arity[n], expected);
        }
    }

    #[test]
    fn inv_examples() {
        let lattice_ops = FunctionSet {
            d: 2,
            max_arity: 2,
            by_arity: vec![
                vec![],
                vec![],
                vec![join(), PartialFunction::total(2, 2, |a| a[0] & a[1]).unwrap()],
            ],
        };
        let binary: Vec<Relation> = inv(&lattice_ops, 2).unwrap().into_iter().filter(|r| r.arity() == 2).collect();
        for r in [catalog::imp(1).unwrap(), catalog::eq(2), Relation::full(2, 2).unwrap(), Relation::empty(2, 2).unwrap()] {
            assert!(binary.contains(&r));
        }
        for r in [catalog::neq(), catalog::or(2).unwrap(), catalog::nand(2).unwrap()] {
            assert!(!binary.contains(&r));
        }
        let negation = FunctionSet {
            d: 2,
            max_arity: 1,
            by_arity: vec![vec![], vec![PartialFunction::total(2, 1, |a| 1 - a[0]).unwrap()]],
        };
        let unary: Vec<Relation> = inv(&negation, 1).unwrap().into_iter().filter(|r| r.arity() == 1).collect();
        assert_eq!(unary, vec![Relation::empty(2, 1).unwrap(), Relation::full(2, 1).unwrap()]);
        let everything = FunctionSet { d: 2, max_arity: 0, by_arity: vec![vec![]] };
        assert_eq!(inv(&everything, 2).unwrap().len(), 2 + 4 + 16);
    }

    #[test]
    fn sampler_returns_members() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let gamma = [catalog::rel_m(2).unwrap()];
        for k in 1..=3 {
            let (f, _) = sample_mk_ppol(3, &gamma, k, 2, 40, &mut rng).unwrap();
            assert!(preserves(&f, &gamma[0]).unwrap());
            assert!(k_subset_surjective(&f, k).unwrap());
        }
    }
}
