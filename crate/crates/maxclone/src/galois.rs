//! Bounded check of the correspondence between `∃_k` closures and
//! `k`-subset surjective partial polymorphisms.

use std::fmt;

use rayon::prelude::*;

use crate::closure::{self, ClosureSignature, ClosureStatus, Preset};
use crate::error::Result;
use crate::fnspace::{self, PartialFunction};
use crate::relation::Relation;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateCheck {
    pub relation: Relation,
    /// Preserved by every enumerated function.
    pub in_inv: bool,
    /// Present in the bounded closure.
    pub in_closure: bool,
}

#[derive(Debug, Clone)]
pub struct GaloisReport {
    pub ks: Vec<usize>,
    pub closure_status: ClosureStatus,
    /// Closure members up to the relation cap, canonical order.
    pub closure: Vec<Relation>,
    pub functions: usize,
    /// Closure members not preserved by some function. Always a bug.
    pub violations: Vec<(Relation, PartialFunction)>,
    pub candidates: Vec<CandidateCheck>,
}

impl GaloisReport {
    pub fn sound(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn candidates_agree(&self) -> bool {
        self.candidates.iter().all(|c| c.in_inv == c.in_closure)
    }
}

impl fmt::Display for GaloisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ks: Vec<String> = self.ks.iter().map(|k| k.to_string()).collect();
        writeln!(f, "galois: K={{{}}} closure {} ({})", ks.join(","), self.closure.len(), self.closure_status)?;
        writeln!(f, "galois: functions {}", self.functions)?;
        writeln!(f, "galois: sound direction {}", if self.sound() { "ok" } else { "FAILED" })?;
        for (r, func) in &self.violations {
            writeln!(f, "galois: violation {r} by {:?}", func.table())?;
        }
        for c in &self.candidates {
            writeln!(f, "galois: candidate {} inv={} closure={}", c.relation, c.in_inv, c.in_closure)?;
        }
        Ok(())
    }
}

/// Closes `gamma` under substitution, conjunction and `∃_k` for `k ∈ ks`
/// up to `relation_cap`, with one extra position while closing. Then
/// enumerates the partial functions of arity up to `function_cap` that
/// preserve `gamma` and are `k`-subset surjective for every `k ∈ ks`, and checks that each closure member is preserved by all
/// of them. Candidates are additionally tested for membership on both sides.
pub fn galois_check(
    gamma: &[(String, Relation)],
    d: usize,
    ks: &[usize],
    relation_cap: usize,
    function_cap: usize,
    candidates: &[Relation],
) -> Result<GaloisReport> {
    let sig = ClosureSignature::preset(Preset::KExists(ks.to_vec()), d).with_caps(relation_cap, relation_cap + 1);
    let closure = closure::close(gamma, d, &sig)?;
    let members: Vec<Relation> = closure.relations().into_iter().cloned().collect();
    let relations: Vec<Relation> = gamma.iter().map(|(_, r)| r.clone()).collect();
    let functions = fnspace::mk_ppol(d, &relations, ks, function_cap)?;
    let funcs: Vec<&PartialFunction> = functions.iter().collect();

    let violations: Vec<(Relation, PartialFunction)> = members
        .par_iter()
        .map(|r| -> Result<Option<(Relation, PartialFunction)>> {
            for f in &funcs {
                if !fnspace::preserves(f, r)? {
                    return Ok(Some((r.clone(), (*f).clone())));
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut checks = Vec::new();
    for r in candidates {
        let mut in_inv = true;
        for f in &funcs {
            if !fnspace::preserves(f, r)? {
                in_inv = false;
                break;
            }
        }
        checks.push(CandidateCheck { relation: r.clone(), in_inv, in_closure: closure.contains(r) });
    }
    Ok(GaloisReport {
        ks: ks.to_vec(),
        closure_status: closure.status(),
        closure: members,
        functions: functions.len(),
        violations,
        candidates: checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn neq_closure_is_preserved() {
        let gamma = vec![("NEQ".to_string(), catalog::neq())];
        let report = galois_check(&gamma, 2, &[1], 2, 2, &[catalog::neq(), catalog::imp(1).unwrap()]).unwrap();
        assert!(report.sound());
        assert!(report.closure.contains(&catalog::eq(2)));
        assert!(report.candidates[0].in_closure);
        assert!(!report.candidates[1].in_closure);
        // the binary functions already break IMP
        assert!(!report.candidates[1].in_inv);
        assert!(report.candidates_agree());
    }

    #[test]
    fn empty_gamma() {
        let report = galois_check(&[], 2, &[1], 2, 1, &[]).unwrap();
        assert!(report.sound());
        assert!(report.closure.iter().all(|r| r.is_empty() || r.is_full() || r == &catalog::eq(2)));
    }
}
