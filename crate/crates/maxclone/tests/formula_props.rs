use num_bigint::BigUint;
use proptest::prelude::*;

use maxclone::formula::{self, Env, Formula, Quantifier};
use maxclone::Error;

const RELS: [(&str, usize); 7] = [("IMP", 2), ("OR", 2), ("NAND", 2), ("NEQ", 2), ("EQ", 2), ("DELTA0", 1), ("DELTA1", 1)];
const VARS: [&str; 5] = ["x", "y", "z", "t", "u"];

fn atom() -> impl Strategy<Value = Formula> {
    (0..RELS.len(), proptest::collection::vec(0..VARS.len(), 2)).prop_map(|(r, vs)| {
        let (name, arity) = RELS[r];
        let vars: Vec<&str> = vs[..arity].iter().map(|&v| VARS[v]).collect();
        Formula::atom(name, &vars)
    })
}

fn formula(quantifier: impl Strategy<Value = Quantifier> + Clone + 'static) -> impl Strategy<Value = Formula> {
    atom().prop_recursive(3, 12, 3, move |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..=3).prop_map(Formula::And),
            (quantifier.clone(), proptest::collection::vec(0..VARS.len(), 1..=2), inner).prop_map(|(q, vs, body)| {
                let mut vars: Vec<&str> = vs.iter().map(|&v| VARS[v]).collect();
                vars.dedup();
                Formula::quant(q, &vars, body)
            }),
        ]
    })
}

fn counting_quantifier() -> impl Strategy<Value = Quantifier> + Clone {
    prop_oneof![Just(Quantifier::Exists), (1usize..=2).prop_map(Quantifier::ExistsK)]
}

fn same_relation(a: &Formula, b: &Formula, env: &Env) -> bool {
    let order = a.free_vars();
    formula::evaluate(a, &order, env).unwrap() == formula::evaluate(b, &order, env).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn counting_flattening_is_sound(f in formula(counting_quantifier())) {
        let env = Env::new(2);
        let (g, _) = formula::flatten_counting(&f, &env).unwrap();
        prop_assert!(same_relation(&f, &g, &env), "{} vs {}", f, g);
    }

    #[test]
    fn max_flattening_never_returns_a_wrong_formula(f in formula(Just(Quantifier::Max))) {
        let env = Env::new(2);
        match formula::flatten_max(&f, &env) {
            Ok((g, _)) => prop_assert!(same_relation(&f, &g, &env), "{} vs {}", f, g),
            // mismatches are reported, never returned
            Err(Error::Verification(_) | Error::Invalid(_)) => {}
            Err(e) => prop_assert!(false, "{}: {}", f, e),
        }
    }

    #[test]
    fn copy_count_is_strict_and_near_minimal(m in 1u64..200, n in 1u64..200, l in 1u64..200) {
        let c = formula::copies(m, n, l).unwrap();
        if n > 1 {
            let exact = |c: u32| BigUint::from(m) * BigUint::from(n - 1).pow(c) < BigUint::from(l) * BigUint::from(n).pow(c);
            prop_assert!(exact(c));
            let minimal = (1..).find(|&k| exact(k)).unwrap();
            prop_assert!(c == minimal || c == minimal + 1);
        } else {
            prop_assert_eq!(c, 1);
        }
    }
}

/// Nested max blocks collapsed by copying the inner block can change the
/// relation; the flattener must refuse this case.
#[test]
fn nested_max_counterexample_is_rejected() {
    let env = Env::new(2);
    let f = formula::parse("t", "(mex (y) (mex (z) (and (atom IMP x y) (atom OR y z))))").unwrap();
    assert!(formula::evaluate_free(&f, &env).unwrap().is_full());
    assert!(matches!(formula::flatten_max(&f, &env), Err(Error::Verification(_))));
}
