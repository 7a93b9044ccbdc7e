use proptest::prelude::*;

use maxclone::{predicates, Relation};

fn relation(ds: std::ops::RangeInclusive<usize>, ns: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Relation> {
    (ds, ns).prop_flat_map(|(d, n)| {
        let cells = d.pow(n as u32);
        proptest::collection::vec(any::<bool>(), cells)
            .prop_map(move |bits| Relation::from_indices(d, n, (0..cells).filter(|&i| bits[i])).unwrap())
    })
}

fn affine(n: usize, rows: &[(u32, u8)]) -> Relation {
    Relation::from_predicate(2, n, |a| {
        rows.iter().all(|&(mask, c)| (0..n).filter(|&i| mask >> i & 1 == 1).fold(0u8, |s, i| s ^ a[i]) == c)
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tuples_round_trip(r in relation(2..=3, 0..=4)) {
        let back = Relation::from_tuples(r.domain_size(), r.arity(), r.tuples()).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn counting_quantifier_extremes(r in relation(2..=3, 1..=4), pos in 0usize..4) {
        let pos = pos % r.arity();
        prop_assert_eq!(r.exists_k(pos, 1).unwrap(), r.exists(&[pos]).unwrap());
        prop_assert_eq!(r.exists_k(pos, r.domain_size()).unwrap(), r.forall(pos).unwrap());
    }

    #[test]
    fn projections_compose(r in relation(2..=3, 1..=4), mask in 0u32..16, split in 0u32..16) {
        let n = r.arity();
        let j: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let j1: Vec<usize> = j.iter().copied().filter(|&i| split >> i & 1 == 1).collect();
        // positions of the rest of J once J1 is gone
        let j2: Vec<usize> = j
            .iter()
            .filter(|i| !j1.contains(i))
            .map(|&i| i - j1.iter().filter(|&&k| k < i).count())
            .collect();
        let twice = r.exists(&j1).unwrap().exists(&j2).unwrap();
        prop_assert_eq!(twice, r.exists(&j).unwrap());
    }

    #[test]
    fn max_quantify_is_nonempty(r in relation(2..=3, 1..=4), mask in 1u32..16) {
        let block: Vec<usize> = (0..r.arity()).filter(|&i| mask >> i & 1 == 1).collect();
        prop_assume!(!block.is_empty());
        let q = r.max_quantify(&block).unwrap();
        prop_assert!(!q.is_empty());
        if r.is_empty() {
            prop_assert!(q.is_full());
        }
    }

    #[test]
    fn substitution_identity_and_composition(
        r in relation(2..=3, 0..=3),
        m in 1usize..=3,
        p in 1usize..=3,
        sigma_seed in proptest::collection::vec(0usize..3, 3),
        tau_seed in proptest::collection::vec(0usize..3, 3),
    ) {
        let n = r.arity();
        let id: Vec<usize> = (0..n).collect();
        prop_assert_eq!(r.substitute(&id, n).unwrap(), r.clone());
        let sigma: Vec<usize> = sigma_seed[..n].iter().map(|&j| j % m).collect();
        let tau: Vec<usize> = tau_seed[..m].iter().map(|&j| j % p).collect();
        let stepwise = r.substitute(&sigma, m).unwrap().substitute(&tau, p).unwrap();
        let composed: Vec<usize> = sigma.iter().map(|&j| tau[j]).collect();
        prop_assert_eq!(stepwise, r.substitute(&composed, p).unwrap());
    }

    #[test]
    fn affine_fibers_are_rectangular(
        n in 1usize..=6,
        rows in proptest::collection::vec((0u32..64, 0u8..=1), 0..=6),
        mask in 1u32..64,
    ) {
        let r = affine(n, &rows);
        prop_assert!(r.is_empty() || predicates::is_affine(&r).unwrap());
        let block: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        prop_assume!(!block.is_empty());
        let mut sizes: Vec<u64> = r.extension_counts(&block).unwrap().into_iter().filter(|&c| c > 0).collect();
        sizes.dedup();
        prop_assert!(sizes.len() <= 1, "fibers {:?}", sizes);
        if !r.is_empty() {
            prop_assert_eq!(r.max_quantify(&block).unwrap(), r.exists(&block).unwrap());
        }
    }
}

/// Log-supermodularity checked straight from `f(a)f(b) <= f(a|b)f(a&b)`.
#[test]
fn log_supermodular_matches_inequality() {
    for n in 0..=3usize {
        let cells = 1usize << n;
        for mask in 0u32..(1 << cells) {
            let r = Relation::from_indices(2, n, (0..cells).filter(|&i| mask >> i & 1 == 1)).unwrap();
            let f = |i: usize| mask >> i & 1;
            // for d = 2 the or/and of two indices encodes the or/and of the tuples
            let direct = (0..cells).all(|a| (0..cells).all(|b| f(a) * f(b) <= f(a | b) * f(a & b)));
            let s = predicates::structural_predicates(&r).unwrap();
            assert_eq!(s.is_log_supermodular, direct, "{r}");
        }
    }
}
