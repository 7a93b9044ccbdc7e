use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use maxclone::fnspace::{self, FunctionMode, PartialFunction};
use maxclone::Relation;

fn relation(d: usize, n: usize, bits: &[bool]) -> Relation {
    Relation::from_indices(d, n, (0..d.pow(n as u32)).filter(|&i| bits[i % bits.len()])).unwrap()
}

/// All boxes `A_1 × .. × A_n` of nonempty subsets, as bit masks.
fn boxes(d: usize, n: usize) -> Vec<Vec<u8>> {
    let subsets: Vec<u8> = (1..(1u16 << d)).map(|s| s as u8).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|b: Vec<u8>| {
                subsets.iter().map(move |&s| {
                    let mut c = b.clone();
                    c.push(s);
                    c
                })
            })
            .collect();
    }
    out
}

/// A `k`-subset surjective function keeps at least `k` values on every box
/// whose sides all have at least `k` elements.
#[test]
fn larger_boxes_keep_surjectivity() {
    for d in 2..=4usize {
        // the full function space is only enumerable for small d
        let n_max = if d <= 3 { 2 } else { 1 };
        for n in 1..=n_max {
            let fs = fnspace::enumerate_functions(d, n, FunctionMode::Partial).unwrap().collect::<Vec<_>>();
            let all_boxes = boxes(d, n);
            for f in &fs {
                for k in 1..=d {
                    if !fnspace::k_subset_surjective(f, k).unwrap() {
                        continue;
                    }
                    for b in all_boxes.iter().filter(|b| b.iter().all(|s| s.count_ones() as usize >= k)) {
                        let img = fnspace::image_on_box(f, b);
                        assert!(img.count_ones() as usize >= k, "d={d} f={:?} k={k} box={b:?}", f.table());
                    }
                }
            }
        }
    }
}

#[test]
fn total_functions_are_one_subset_surjective() {
    for d in 2..=3 {
        for f in fnspace::enumerate_functions(d, 2, FunctionMode::Total).unwrap() {
            assert!(fnspace::k_subset_surjective(&f, 1).unwrap());
        }
    }
}

#[test]
fn surjectivity_conditions_are_incomparable() {
    // one function per m violating exactly the m condition, so no condition implies another
    for (k, m) in [(3, 2), (3, 3), (4, 2), (4, 3), (4, 4)] {
        let f = fnspace::example4_function(k, m).unwrap();
        for l in 1..=k {
            assert_eq!(fnspace::k_subset_surjective(&f, l).unwrap(), l != m, "k={k} m={m} l={l}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn counting_quantifier_is_preserved(
        d in 2usize..=3,
        n in 1usize..=3,
        bits in proptest::collection::vec(any::<bool>(), 27),
        pos in 0usize..3,
        k_seed in 1usize..=3,
        fn_arity in 1usize..=2,
        seed in any::<u64>(),
    ) {
        let r = relation(d, n, &bits);
        let k = (k_seed - 1) % d + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, _) = fnspace::sample_mk_ppol(d, std::slice::from_ref(&r), k, fn_arity, 30, &mut rng).unwrap();
        prop_assert!(fnspace::preserves(&f, &r).unwrap());
        prop_assert!(fnspace::k_subset_surjective(&f, k).unwrap());
        prop_assert!(fnspace::preserves(&f, &r.exists_k(pos % n, k).unwrap()).unwrap());
    }

    #[test]
    fn conjunction_is_preserved(
        d in 2usize..=3,
        b1 in proptest::collection::vec(any::<bool>(), 9),
        b2 in proptest::collection::vec(any::<bool>(), 9),
        table in proptest::collection::vec(proptest::option::of(0u8..3), 9),
        scope in proptest::collection::vec(0usize..3, 2),
    ) {
        let r1 = relation(d, 2, &b1);
        let r2 = relation(d, 2, &b2);
        let table: Vec<Option<u8>> = table[..d * d].iter().map(|v| v.map(|x| x % d as u8)).collect();
        let f = PartialFunction::new(d, 2, &table).unwrap();
        prop_assume!(fnspace::preserves(&f, &r1).unwrap() && fnspace::preserves(&f, &r2).unwrap());
        let both = Relation::conjoin(&r1, &[0, 1], &r2, &scope, 3).unwrap();
        prop_assert!(fnspace::preserves(&f, &both).unwrap());
    }
}
