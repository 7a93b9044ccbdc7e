//! Max-implementations and the replication gadget that removes a target
//! relation from a #CSP instance.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::counting::{self, CspInstance};
use crate::error::{Error, Result};
use crate::relation::{self, Relation};

/// Largest number of `x`-assignments a max-implementation is checked on.
pub const ASSIGNMENT_GUARD: usize = 1 << 16;

/// An instance whose `x`-assignments with the most extensions to the `y`
/// variables are exactly the tuples of `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxImplementation {
    pub instance: CspInstance,
    pub x_vars: Vec<usize>,
    pub y_vars: Vec<usize>,
    pub target: Relation,
    /// Extension count of every target tuple.
    pub big_m: u64,
}

impl MaxImplementation {
    /// Counts the extensions of every `x`-assignment and takes the maximizers
    /// as the target.
    pub fn new(instance: CspInstance, x_vars: Vec<usize>) -> Result<MaxImplementation> {
        let n = instance.vars.len();
        let distinct: BTreeSet<usize> = x_vars.iter().copied().collect();
        if distinct.len() != x_vars.len() || x_vars.iter().any(|&v| v >= n) {
            return Err(Error::invalid("x variables must be distinct variables of the instance"));
        }
        let y_vars: Vec<usize> = (0..n).filter(|v| !distinct.contains(v)).collect();
        let d = instance.d;
        let cells = relation::cell_count(d, x_vars.len())?;
        if cells > ASSIGNMENT_GUARD {
            return Err(Error::resource(format!("{cells} assignments to the x variables")));
        }
        let counts: Vec<BigUint> = (0..cells)
            .map(|i| {
                let phi = relation::decode(d, x_vars.len(), i);
                counting::count_extensions(&instance, &x_vars, &phi, counting::DEFAULT_NODE_LIMIT)
            })
            .collect::<Result<_>>()?;
        let max = counts.iter().max().cloned().unwrap_or_default();
        if max.is_zero() {
            return Err(Error::invalid("the gadget instance has no solutions"));
        }
        let big_m = max.to_u64().ok_or_else(|| Error::resource("extension maximum exceeds 64 bits"))?;
        let target = Relation::from_indices(d, x_vars.len(), (0..cells).filter(|&i| counts[i] == max))?;
        Ok(MaxImplementation { instance, x_vars, y_vars, target, big_m })
    }

    /// As [`MaxImplementation::new`], failing unless the maximizers are `target`.
    pub fn with_target(instance: CspInstance, x_vars: Vec<usize>, target: &Relation) -> Result<MaxImplementation> {
        let g = MaxImplementation::new(instance, x_vars)?;
        if &g.target != target {
            return Err(Error::Verification(format!(
                "the instance max-implements {} rather than {target}",
                g.target
            )));
        }
        Ok(g)
    }
}

/// Smallest `m` with `(M/(M-1))^m · ε > d^|V1|`, so that non-solutions of
/// `P1` contribute less than `ε` relative to one solution. `M = 1` gives 1.
pub fn choose_m(d: usize, v1: usize, big_m: u64, eps: &BigRational) -> Result<u32> {
    if eps <= &BigRational::zero() || eps >= &BigRational::one() {
        return Err(Error::invalid(format!("epsilon {eps} is not in (0, 1)")));
    }
    if big_m <= 1 {
        return Ok(1);
    }
    let ratio = BigRational::new(big_m.into(), (big_m - 1).into());
    let goal = BigRational::from_integer(BigUint::from(d).pow(v1 as u32).into());
    let mut lhs = eps.clone();
    for m in 1..=u32::MAX {
        lhs *= &ratio;
        if lhs > goal {
            return Ok(m);
        }
    }
    unreachable!("the ratio exceeds one")
}

#[derive(Debug, Clone)]
pub struct GadgetOutput {
    pub p2: CspInstance,
    pub m: u32,
    pub big_m: u64,
    /// Number of constraints of `P1` that used the target relation.
    pub ell: usize,
}

/// Replaces every `target_name` constraint of `p1` by `m` copies of the
/// gadget, each with its own fresh `y` variables.
pub fn ap_gadget(p1: &CspInstance, target_name: &str, gadget: &MaxImplementation, eps: &BigRational) -> Result<GadgetOutput> {
    if gadget.instance.d != p1.d {
        return Err(Error::DomainMismatch { expected: p1.d, found: gadget.instance.d });
    }
    let m = choose_m(p1.d, p1.vars.len(), gadget.big_m, eps)?;
    let mut names: Vec<String> = p1.vars.clone();
    let mut taken: BTreeSet<String> = names.iter().cloned().collect();
    let mut kept = Vec::new();
    let mut replaced = Vec::new();
    for c in &p1.constraints {
        if c.name == target_name {
            if c.scope.len() != gadget.x_vars.len() {
                return Err(Error::ArityMismatch { expected: gadget.x_vars.len(), found: c.scope.len() });
            }
            if c.relation != gadget.target {
                return Err(Error::Verification(format!("constraint {target_name} is not the implemented relation")));
            }
            replaced.push(c);
        } else {
            kept.push(c);
        }
    }
    let ell = replaced.len();
    // fresh names for the copies, allocated before building constraints
    let mut copy_vars: Vec<Vec<Vec<usize>>> = Vec::with_capacity(ell);
    for i in 0..ell {
        let mut per_copy = Vec::with_capacity(m as usize);
        for j in 0..m {
            let mut ids = Vec::with_capacity(gadget.y_vars.len());
            for &y in &gadget.y_vars {
                let base = format!("{}_{}_{}", gadget.instance.vars[y], i + 1, j + 1);
                let mut name = base.clone();
                let mut k = 1;
                while taken.contains(&name) {
                    name = format!("{base}_{k}");
                    k += 1;
                }
                taken.insert(name.clone());
                ids.push(names.len());
                names.push(name);
            }
            per_copy.push(ids);
        }
        copy_vars.push(per_copy);
    }
    let mut p2 = CspInstance::new(p1.d, names)?;
    for c in kept {
        p2.add_constraint(&c.name, c.relation.clone(), c.scope.clone())?;
    }
    let n_gadget = gadget.instance.vars.len();
    for (c, copies) in replaced.iter().zip(&copy_vars) {
        for ids in copies {
            let mut map = vec![0; n_gadget];
            for (t, &x) in gadget.x_vars.iter().enumerate() {
                map[x] = c.scope[t];
            }
            for (t, &y) in gadget.y_vars.iter().enumerate() {
                map[y] = ids[t];
            }
            for gc in &gadget.instance.constraints {
                p2.add_constraint(&gc.name, gc.relation.clone(), gc.scope.iter().map(|&v| map[v]).collect())?;
            }
        }
    }
    Ok(GadgetOutput { p2, m, big_m: gadget.big_m, ell })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    pub(crate) fn imp_gadget() -> MaxImplementation {
        let mut g = CspInstance::new(2, vec!["x".into(), "y".into()]).unwrap();
        g.add("IMP", catalog::imp(1).unwrap(), &["x", "y"]).unwrap();
        MaxImplementation::new(g, vec![0]).unwrap()
    }

    #[test]
    fn imp_max_implements_delta0() {
        let g = imp_gadget();
        assert_eq!(g.target, catalog::delta0());
        assert_eq!(g.big_m, 2);
        assert_eq!(g.y_vars, vec![1]);
        let inst = g.instance.clone();
        assert!(MaxImplementation::with_target(inst, vec![0], &catalog::delta1()).is_err());
    }

    #[test]
    fn m_bound() {
        // 2^m · 0.1 > 2  first at m = 5
        assert_eq!(choose_m(2, 1, 2, &rat(1, 10)).unwrap(), 5);
        assert_eq!(choose_m(2, 1, 2, &rat(1, 2)).unwrap(), 3);
        assert_eq!(choose_m(2, 3, 1, &rat(1, 2)).unwrap(), 1);
        // (3/2)^m / 2 > 4 first at m = 6
        assert_eq!(choose_m(2, 2, 3, &rat(1, 2)).unwrap(), 6);
        assert!(choose_m(2, 1, 2, &rat(1, 1)).is_err());
        assert!(choose_m(2, 1, 2, &rat(0, 1)).is_err());
    }

    #[test]
    fn delta0_instance_is_replicated() {
        let g = imp_gadget();
        let mut p1 = CspInstance::new(2, vec!["v".into()]).unwrap();
        p1.add("DELTA0", catalog::delta0(), &["v"]).unwrap();
        let out = ap_gadget(&p1, "DELTA0", &g, &rat(1, 10)).unwrap();
        assert_eq!((out.m, out.big_m, out.ell), (5, 2, 1));
        assert_eq!(out.p2.vars.len(), 6);
        assert_eq!(out.p2.constraints.len(), 5);
        assert!(out.p2.constraints.iter().all(|c| c.name == "IMP" && c.scope[0] == 0));
        assert_eq!(counting::count(&out.p2), BigUint::from(33u8));
    }

    #[test]
    fn scope_mismatch_rejected() {
        let g = imp_gadget();
        let mut p1 = CspInstance::new(2, vec!["a".into(), "b".into()]).unwrap();
        p1.add_constraint("DELTA0", catalog::eq(2), vec![0, 1]).unwrap();
        assert!(matches!(ap_gadget(&p1, "DELTA0", &g, &rat(1, 2)), Err(Error::ArityMismatch { .. })));
    }
}
