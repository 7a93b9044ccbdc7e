//! #CSP instances and an exact backtracking counter.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gadget::{self, MaxImplementation};
use crate::relation::{self, Relation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub scope: Vec<usize>,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CspInstance {
    pub d: usize,
    pub vars: Vec<String>,
    pub constraints: Vec<Constraint>,
}

impl CspInstance {
    pub fn new(d: usize, vars: Vec<String>) -> Result<CspInstance> {
        relation::check_domain(d)?;
        let distinct: BTreeSet<&String> = vars.iter().collect();
        if distinct.len() != vars.len() {
            return Err(Error::invalid("repeated variable name"));
        }
        Ok(CspInstance { d, vars, constraints: Vec::new() })
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn add_constraint(&mut self, name: &str, relation: Relation, scope: Vec<usize>) -> Result<()> {
        if relation.domain_size() != self.d {
            return Err(Error::DomainMismatch { expected: self.d, found: relation.domain_size() });
        }
        if relation.arity() != scope.len() {
            return Err(Error::ArityMismatch { expected: relation.arity(), found: scope.len() });
        }
        if let Some(&bad) = scope.iter().find(|&&i| i >= self.vars.len()) {
            return Err(Error::invalid(format!("scope index {bad} out of range")));
        }
        self.constraints.push(Constraint { name: name.to_string(), scope, relation });
        Ok(())
    }

    /// Adds a constraint with a scope given by variable names.
    pub fn add(&mut self, name: &str, relation: Relation, scope: &[&str]) -> Result<()> {
        let idx = scope
            .iter()
            .map(|v| self.var_index(v).ok_or_else(|| Error::invalid(format!("unknown variable {v}"))))
            .collect::<Result<Vec<_>>>()?;
        self.add_constraint(name, relation, idx)
    }

    /// True when `assignment` (one value per variable) satisfies every constraint.
    pub fn satisfies(&self, assignment: &[u8]) -> bool {
        self.constraints.iter().all(|c| {
            let t: Vec<u8> = c.scope.iter().map(|&i| assignment[i]).collect();
            c.relation.contains(&t)
        })
    }
}

/// Constraints compiled for the search: each one is checked at the depth
/// where its last variable (in search order) is assigned.
struct Plan<'a> {
    d: usize,
    order: Vec<usize>,
    /// `at_depth[t]`: constraints whose scope is complete once `order[t]` is set.
    at_depth: Vec<Vec<(&'a Relation, Vec<(usize, usize)>)>>,
    /// Depth after which no variable is constrained.
    last: usize,
    ground_ok: bool,
}

impl<'a> Plan<'a> {
    fn new(p: &'a CspInstance, order: &[usize]) -> Plan<'a> {
        let n = p.vars.len();
        let mut depth_of = vec![0; n];
        for (t, &v) in order.iter().enumerate() {
            depth_of[v] = t;
        }
        let mut at_depth = vec![Vec::new(); n];
        let mut last = 0;
        let mut ground_ok = true;
        for c in &p.constraints {
            if c.scope.is_empty() {
                ground_ok &= !c.relation.is_empty();
                continue;
            }
            let pv = relation::place_values(p.d, c.scope.len());
            let depth = c.scope.iter().map(|&v| depth_of[v]).max().unwrap();
            last = last.max(depth + 1);
            at_depth[depth].push((&c.relation, c.scope.iter().copied().zip(pv).collect()));
        }
        Plan { d: p.d, order: order.to_vec(), at_depth, last, ground_ok }
    }

    fn ok_at(&self, depth: usize, values: &[u8]) -> bool {
        self.at_depth[depth].iter().all(|(rel, scope)| {
            let idx: usize = scope.iter().map(|&(v, pv)| values[v] as usize * pv).sum();
            rel.contains_index(idx)
        })
    }

    /// Counts completions of depths `start..last` given `values` for earlier depths.
    fn search(&self, values: &mut [u8], start: usize, budget: &mut u64) -> Option<u128> {
        let mut count: u128 = 0;
        let mut depth = start;
        if depth >= self.last {
            return Some(1);
        }
        let mut next = vec![0u8; self.last];
        loop {
            // try the next value at `depth`, backtracking when exhausted
            if next[depth] as usize == self.d {
                next[depth] = 0;
                if depth == start {
                    return Some(count);
                }
                depth -= 1;
                continue;
            }
            let v = self.order[depth];
            values[v] = next[depth];
            next[depth] += 1;
            if *budget == 0 {
                return None;
            }
            *budget -= 1;
            if self.ok_at(depth, values) {
                if depth + 1 == self.last {
                    count += 1;
                } else {
                    depth += 1;
                }
            }
        }
    }
}

fn big_pow(base: usize, exp: usize) -> BigUint {
    BigUint::from(base).pow(exp as u32)
}

/// Number of search nodes `count` will visit before giving up.
pub const DEFAULT_NODE_LIMIT: u64 = 1 << 34;

fn count_inner(p: &CspInstance, order: &[usize], prefix: &[u8], limit: u64) -> Result<BigUint> {
    let plan = Plan::new(p, order);
    if !plan.ground_ok {
        return Ok(BigUint::zero());
    }
    let n = p.vars.len();
    let free = n - plan.last.max(prefix.len());
    let mut values = vec![0u8; n];
    for (t, &x) in prefix.iter().enumerate() {
        values[order[t]] = x;
        if !plan.ok_at(t, &values) {
            return Ok(BigUint::zero());
        }
    }
    let start = prefix.len();
    // Split the first few free depths across workers.
    let split = (start..plan.last).take_while(|&t| t < start + 3).count();
    let mut seeds: Vec<Vec<u8>> = vec![values.clone()];
    for t in start..start + split {
        let v = order[t];
        seeds = seeds
            .into_iter()
            .flat_map(|s| {
                (0..p.d as u8).map(move |x| {
                    let mut s = s.clone();
                    s[v] = x;
                    s
                })
            })
            .filter(|s| plan.ok_at(t, s))
            .collect();
    }
    let per_worker = limit / seeds.len().max(1) as u64;
    let counts: Vec<Option<u128>> = seeds
        .into_par_iter()
        .map(|mut s| {
            let mut budget = per_worker;
            plan.search(&mut s, start + split, &mut budget)
        })
        .collect();
    let mut total = BigUint::zero();
    for c in counts {
        total += c.ok_or_else(|| Error::resource("counting search exceeded its node limit"))?;
    }
    Ok(total * big_pow(p.d, free))
}

/// Exact number of solutions. Variables are assigned in declaration order
/// and a branch is cut as soon as a fully assigned constraint fails;
/// trailing variables that no constraint mentions contribute a factor `d`.
pub fn count(p: &CspInstance) -> BigUint {
    count_limited(p, u64::MAX).expect("no limit")
}

/// Like [`count`] but gives up after `limit` search nodes.
pub fn count_limited(p: &CspInstance, limit: u64) -> Result<BigUint> {
    let order: Vec<usize> = (0..p.vars.len()).collect();
    count_inner(p, &order, &[], limit)
}

/// Number of solutions extending the given values for `vars`, which are
/// assigned first; the rest follow in declaration order.
pub fn count_extensions(p: &CspInstance, vars: &[usize], values: &[u8], limit: u64) -> Result<BigUint> {
    if vars.len() != values.len() {
        return Err(Error::ArityMismatch { expected: vars.len(), found: values.len() });
    }
    let mut order = vars.to_vec();
    order.extend((0..p.vars.len()).filter(|v| !vars.contains(v)));
    count_inner(p, &order, values, limit)
}

/// Everything measured when the gadget reduction is run end to end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionReport {
    pub count_p1: BigUint,
    pub count_p2: BigUint,
    pub m: u32,
    pub big_m: u64,
    pub ell: usize,
    pub v1: usize,
    pub v2: usize,
    pub lower_bound: BigUint,
    pub upper_bound: BigUint,
    /// `#P2 / M^(ℓm)`.
    pub estimate: BigRational,
    /// `|estimate - #P1| / #P1`, absent when `#P1 = 0`.
    pub relative_error: Option<BigRational>,
    pub eps: BigRational,
    /// The estimate with values below 1 replaced by 0.
    pub thresholded: BigRational,
}

impl ReductionReport {
    pub fn sandwich_holds(&self) -> bool {
        self.lower_bound <= self.count_p2 && self.count_p2 <= self.upper_bound
    }

    pub fn within_eps(&self) -> bool {
        match &self.relative_error {
            Some(e) => e < &self.eps,
            None => self.thresholded.is_zero(),
        }
    }

    /// `#P1 = 0` while the raw estimate is positive.
    pub fn unsat_gap(&self) -> bool {
        self.count_p1.is_zero() && self.estimate.is_positive()
    }

    pub fn passed(&self) -> bool {
        self.sandwich_holds() && self.within_eps()
    }
}

impl fmt::Display for ReductionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "reduce: |V1|={} |V2|={} l={} M={} m={}", self.v1, self.v2, self.ell, self.big_m, self.m)?;
        writeln!(f, "reduce: #P1={} #P2={}", self.count_p1, self.count_p2)?;
        writeln!(
            f,
            "reduce: sandwich {} <= {} <= {}: {}",
            self.lower_bound,
            self.count_p2,
            self.upper_bound,
            if self.sandwich_holds() { "PASS" } else { "FAIL" }
        )?;
        writeln!(f, "reduce: estimate {} thresholded {}", self.estimate, self.thresholded)?;
        match &self.relative_error {
            Some(e) => writeln!(
                f,
                "reduce: relative error {e} < eps {}: {}",
                self.eps,
                if self.within_eps() { "PASS" } else { "FAIL" }
            )?,
            None => writeln!(f, "reduce: unsatisfiable, raw estimate positive: {}", self.unsat_gap())?,
        }
        Ok(())
    }
}

/// Largest `#P2` bound `verify_reduction` will try to enumerate.
pub const REDUCTION_GUARD: u64 = 1 << 32;

/// Builds `P2` with the gadget, counts both instances exactly and checks
/// the sandwich bound and the relative error of `#P2 / M^(ℓm)`.
pub fn verify_reduction(
    p1: &CspInstance,
    target_name: &str,
    gadget: &MaxImplementation,
    eps: &BigRational,
) -> Result<ReductionReport> {
    let out = gadget::ap_gadget(p1, target_name, gadget, eps)?;
    let d = p1.d;
    let v1 = p1.vars.len();
    let big_m = BigUint::from(out.big_m);
    let scale = big_m.pow(out.ell as u32 * out.m);
    let slack = if out.ell == 0 || out.big_m == 0 {
        BigUint::zero()
    } else {
        big_pow(d, v1) * BigUint::from(out.big_m - 1).pow(out.m) * big_m.pow((out.ell as u32 - 1) * out.m)
    };
    let work_bound = &scale * big_pow(d, v1) + &slack;
    if work_bound > BigUint::from(REDUCTION_GUARD) {
        return Err(Error::resource(format!("P2 may have up to {work_bound} solutions")));
    }
    let count_p1 = count_limited(p1, DEFAULT_NODE_LIMIT)?;
    let count_p2 = count_limited(&out.p2, DEFAULT_NODE_LIMIT)?;
    let lower_bound = &scale * &count_p1;
    let upper_bound = &lower_bound + &slack;
    let to_rat = |x: &BigUint| BigRational::from_integer(x.clone().into());
    let estimate = if scale.is_zero() { to_rat(&count_p2) } else { to_rat(&count_p2) / to_rat(&scale) };
    let relative_error = (!count_p1.is_zero()).then(|| (&estimate - to_rat(&count_p1)).abs() / to_rat(&count_p1));
    let thresholded = if estimate < BigRational::one() { BigRational::zero() } else { estimate.clone() };
    Ok(ReductionReport {
        count_p1,
        count_p2,
        m: out.m,
        big_m: out.big_m,
        ell: out.ell,
        v1,
        v2: out.p2.vars.len(),
        lower_bound,
        upper_bound,
        estimate,
        relative_error,
        eps: eps.clone(),
        thresholded,
    })
}
