//! Replayable derivations of relations from seeds.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::relation::Relation;

/// One derivation step. Child references index earlier nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Seed(String),
    Subst { sigma: Vec<usize>, m: usize, child: usize },
    Conj { scope1: Vec<usize>, scope2: Vec<usize>, m: usize, left: usize, right: usize },
    Exists { positions: Vec<usize>, child: usize },
    ExistsK { k: usize, position: usize, child: usize },
    Max { block: Vec<usize>, child: usize },
}

impl Op {
    pub fn children(&self) -> Vec<usize> {
        match self {
            Op::Seed(_) => Vec::new(),
            Op::Subst { child, .. } | Op::Exists { child, .. } | Op::ExistsK { child, .. } | Op::Max { child, .. } => {
                vec![*child]
            }
            Op::Conj { left, right, .. } => vec![*left, *right],
        }
    }

    /// Same step with child references rewritten.
    pub fn remap(&self, map: impl Fn(usize) -> usize) -> Op {
        let mut op = self.clone();
        match &mut op {
            Op::Seed(_) => {}
            Op::Subst { child, .. } | Op::Exists { child, .. } | Op::ExistsK { child, .. } | Op::Max { child, .. } => {
                *child = map(*child)
            }
            Op::Conj { left, right, .. } => {
                *left = map(*left);
                *right = map(*right);
            }
        }
        op
    }

    /// Applies a non-seed step to already computed children.
    pub fn apply(&self, done: &[Relation]) -> Result<Relation> {
        let get = |i: usize| {
            done.get(i).ok_or_else(|| Error::invalid(format!("derivation refers to missing node n{i}")))
        };
        match self {
            Op::Seed(name) => Err(Error::invalid(format!("seed {name} has no rule to apply"))),
            Op::Subst { sigma, m, child } => get(*child)?.substitute(sigma, *m),
            Op::Conj { scope1, scope2, m, left, right } => {
                Relation::conjoin(get(*left)?, scope1, get(*right)?, scope2, *m)
            }
            Op::Exists { positions, child } => get(*child)?.exists(positions),
            Op::ExistsK { k, position, child } => get(*child)?.exists_k(*position, *k),
            Op::Max { block, child } => get(*child)?.max_quantify(block),
        }
    }
}

fn one_based(v: &[usize]) -> String {
    v.iter().map(|x| (x + 1).to_string()).collect::<Vec<_>>().join(" ")
}

impl std::fmt::Display for Op {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Op::Seed(name) => write!(f, "(seed {name})"),
            Op::Subst { sigma, m, child } => write!(f, "(subst ({}) {m} n{child})", one_based(sigma)),
            Op::Conj { scope1, scope2, m, left, right } => {
                write!(f, "(conj ({}) ({}) {m} n{left} n{right})", one_based(scope1), one_based(scope2))
            }
            Op::Exists { positions, child } => write!(f, "(exists ({}) n{child})", one_based(positions)),
            Op::ExistsK { k, position, child } => write!(f, "(exists_k {k} {} n{child})", position + 1),
            Op::Max { block, child } => write!(f, "(mex ({}) n{child})", one_based(block)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub op: Op,
    /// The relation this step is claimed to produce.
    pub relation: Relation,
}

/// Nodes in topological order; the last node is the derived relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub nodes: Vec<Node>,
}

impl Derivation {
    pub fn result(&self) -> &Relation {
        &self.nodes.last().expect("derivations are never empty").relation
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Recomputes every step from the seeds and checks each claimed
    /// relation bit for bit.
    pub fn replay(&self) -> Result<Relation> {
        let mut done: Vec<Relation> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            if node.op.children().iter().any(|&c| c >= i) {
                return Err(Error::invalid(format!("node n{i} refers forward")));
            }
            let got = match &node.op {
                Op::Seed(_) => node.relation.clone(),
                op => op.apply(&done)?,
            };
            if got != node.relation {
                return Err(Error::Verification(format!("node n{i} {} does not reproduce its relation", node.op)));
            }
            done.push(got);
        }
        done.pop().ok_or_else(|| Error::invalid("empty derivation"))
    }

    /// Stable text form, one `derivation:` line per node.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "derivation: n{i} = {}", node.op);
        }
        let _ = writeln!(out, "derivation: result n{}", self.nodes.len().saturating_sub(1));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn delta0_from_imp() -> Derivation {
        let imp = catalog::imp(1).unwrap();
        Derivation {
            nodes: vec![
                Node { op: Op::Seed("IMP".into()), relation: imp },
                Node { op: Op::Max { block: vec![1], child: 0 }, relation: catalog::delta0() },
            ],
        }
    }

    #[test]
    fn replay_and_render() {
        let d = delta0_from_imp();
        assert_eq!(d.replay().unwrap(), catalog::delta0());
        assert_eq!(
            d.render(),
            "derivation: n0 = (seed IMP)\nderivation: n1 = (mex (2) n0)\nderivation: result n1\n"
        );
    }

    #[test]
    fn replay_detects_wrong_claims() {
        let mut d = delta0_from_imp();
        d.nodes[1].relation = catalog::delta1();
        assert!(matches!(d.replay(), Err(Error::Verification(_))));
        d.nodes[1].op = Op::Max { block: vec![1], child: 1 };
        assert!(d.replay().is_err());
    }

    #[test]
    fn conj_step_prints_one_based() {
        let op = Op::Conj { scope1: vec![0, 1], scope2: vec![1, 2], m: 3, left: 0, right: 4 };
        assert_eq!(op.to_string(), "(conj (1 2) (2 3) 3 n0 n4)");
        assert_eq!(op.remap(|i| i + 1).children(), vec![1, 5]);
    }
}
