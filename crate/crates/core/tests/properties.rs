use std::collections::{HashSet, VecDeque};


use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coalesce_core::coalescence::{exact_coalescence, pairwise_coalescence_possible};
use coalesce_core::constructions::{
    nonblock_measure, pn_block_classes, pn_block_measure, product_measure_bvn, verify_product_block, PermutationMixture,
};
use coalesce_core::inverse::{explore_k, membership, ExploreBudget, FunctionSet, Strategy as Search, SupportMode};
use coalesce_core::io::{parse_partition, partition_to_json};
use coalesce_core::lumpability::{
    block_measure_check, block_permutation, enumerate_lumpable_partitions, lumpability_test, necessary_conditions_check,
};
use coalesce_core::matrix::sample_random_matrix;
use coalesce_core::measures::{
    independence_coupling, is_consistent, uniqueness_of_coupling, CouplingUniqueness,
};
use coalesce_core::{ratio, FunctionMeasure, Partition, Rational, StateFunction, TransitionMatrix};

fn normalize(weights: Vec<Vec<u32>>) -> TransitionMatrix<Rational> {
    let rows = weights
        .into_iter()
        .map(|r| {
            let total: u32 = r.iter().sum();
            r.into_iter().map(|w| ratio(w as i64, total as i64)).collect()
        })
        .collect();
    TransitionMatrix::new(rows).unwrap()
}

/// Small-denominator rational matrices; the cycle `i -> i+1` is forced
/// positive so every sample is irreducible.
fn irreducible_matrix() -> impl Strategy<Value = TransitionMatrix<Rational>> {
    (2usize..=4).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(0u32..4, n), n).prop_map(move |mut w| {
            for (i, row) in w.iter_mut().enumerate() {
                row[(i + 1) % n] += 1;
            }
            normalize(w)
        })
    })
}

/// Entries supported on edges from class `c` to class `c + 1 mod d`.
fn periodic_matrix() -> impl Strategy<Value = TransitionMatrix<Rational>> {
    (2usize..=3, 0usize..=2).prop_flat_map(|(d, extra)| {
        let n = d + extra;
        prop::collection::vec(prop::collection::vec(1u32..4, n), n).prop_map(move |w| {
            let rows = (0..n)
                .map(|i| (0..n).map(|j| if j % d == (i + 1) % d { w[i][j] } else { 0 }).collect())
                .collect();
            normalize(rows)
        })
    })
}

/// A lumpable chain with doubly stochastic block matrix: blocks move by a
/// random mixture of block permutations, states pick a target in the block
/// with their own positive weights.
fn product_chain() -> impl Strategy<Value = (TransitionMatrix<Rational>, Partition)> {
    (3usize..=5, any::<u64>())
        .prop_map(|(n, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ell = rng.random_range(2..n);
            let mut labels: Vec<usize> = (0..n).map(|i| i % ell).collect();
            labels.shuffle(&mut rng);
            let blocks = Partition::from_labels(&labels);
            let idx = blocks.block_index();
            let mut lambda = vec![vec![Rational::zero(); ell]; ell];
            let terms: Vec<i64> = (0..rng.random_range(1..=ell)).map(|_| rng.random_range(1..4)).collect();
            let total: i64 = terms.iter().sum();
            for w in terms {
                let mut perm: Vec<usize> = (0..ell).collect();
                perm.shuffle(&mut rng);
                for (r, &s) in perm.iter().enumerate() {
                    lambda[r][s] += ratio(w, total);
                }
            }
            let rows = (0..n)
                .map(|i| {
                    let q: Vec<i64> = (0..n).map(|_| rng.random_range(1..4)).collect();
                    (0..n)
                        .map(|j| {
                            let s = idx[j];
                            let within: i64 = blocks.blocks()[s].iter().map(|&x| q[x]).sum();
                            lambda[idx[i]][s].clone() * ratio(q[j], within)
                        })
                        .collect()
                })
                .collect();
            (TransitionMatrix::new(rows).unwrap(), blocks)
        })
        .prop_filter("irreducible", |(p, _)| p.is_irreducible())
}

fn function(n: usize) -> impl Strategy<Value = StateFunction> {
    prop::collection::vec(0..n, n).prop_map(|v| StateFunction::new(v).unwrap())
}

fn measure() -> impl Strategy<Value = FunctionMeasure<Rational>> {
    (2usize..=4).prop_flat_map(|n| {
        prop::collection::vec((function(n), 1i64..5), 1..6).prop_map(move |atoms| {
            let total: i64 = atoms.iter().map(|(_, w)| w).sum();
            FunctionMeasure::from_weights(n, atoms.into_iter().map(|(f, w)| (f, ratio(w, total)))).unwrap()
        })
    })
}

fn irreducible_measure() -> impl Strategy<Value = FunctionMeasure<Rational>> {
    measure().prop_filter("push-forward must be irreducible", |mu| mu.push_forward().is_irreducible())
}

/// Every multichain state reachable from the identity, by plain search.
fn reachable_states(mu: &FunctionMeasure<Rational>) -> Vec<Vec<usize>> {
    let start: Vec<usize> = (0..mu.n()).collect();
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut out = Vec::new();
    while let Some(z) = queue.pop_front() {
        for f in mu.support() {
            let next: Vec<usize> = z.iter().map(|&x| f.apply(x)).collect();
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
        out.push(z);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn push_forward_is_stochastic_and_consistent(mu in measure()) {
        let p = mu.push_forward();
        for row in p.rows() {
            prop_assert_eq!(row.iter().fold(Rational::zero(), |a, x| a + x), Rational::one());
        }
        prop_assert!(is_consistent(&mu, &p).unwrap().consistent);
    }

    #[test]
    fn independence_coupling_reproduces_matrix(p in irreducible_matrix()) {
        let mu = independence_coupling(&p).unwrap();
        prop_assert!(is_consistent(&mu, &p).unwrap().consistent);
        let expected: usize = p.successors().iter().map(Vec::len).product();
        prop_assert_eq!(mu.len(), expected);
    }

    #[test]
    fn uniqueness_matches_fractional_row_count(p in irreducible_matrix()) {
        let fractional = p.fractional_rows().len();
        match uniqueness_of_coupling(&p).unwrap() {
            CouplingUniqueness::Unique => prop_assert!(fractional < 2),
            CouplingUniqueness::Multiple { witness, .. } => {
                prop_assert!(fractional >= 2);
                prop_assert!(is_consistent(&witness, &p).unwrap().consistent);
                prop_assert_ne!(witness, independence_coupling(&p).unwrap());
            }
        }
    }

    #[test]
    fn function_text_round_trips(f in (1usize..=12).prop_flat_map(function)) {
        prop_assert_eq!(StateFunction::parse(&f.to_string(), f.n()).unwrap(), f);
    }

    #[test]
    fn partition_json_round_trips(labels in prop::collection::vec(0usize..4, 1..9)) {
        let p = Partition::from_labels(&labels);
        let text = partition_to_json(&p).to_string();
        prop_assert_eq!(parse_partition(&text, Some(labels.len())).unwrap(), p);
    }

    #[test]
    fn cyclic_classes_advance_along_every_edge(p in irreducible_matrix()) {
        let cs = p.period_and_cyclic_classes().unwrap();
        for i in 0..p.n() {
            for j in p.successors()[i].iter() {
                prop_assert_eq!(cs.class_of(*j), (cs.class_of(i) + 1) % cs.period);
            }
        }
    }

    #[test]
    fn independence_coupling_classes_are_cyclic_classes(
        p in prop_oneof![periodic_matrix(), irreducible_matrix()]
            .prop_filter("irreducible", |p| p.is_irreducible())
    ) {
        let cs = p.period_and_cyclic_classes().unwrap();
        let rep = exact_coalescence(&independence_coupling(&p).unwrap()).unwrap();
        prop_assert_eq!(rep.k, cs.period);
        prop_assert_eq!(rep.limit_partitions, vec![Partition::new(p.n(), cs.classes.clone()).unwrap()]);
    }

    #[test]
    fn invariant_distribution_is_stationary(p in irreducible_matrix()) {
        let pi = p.invariant_distribution().unwrap();
        prop_assert_eq!(p.left_multiply(&pi.weights), pi.weights.clone());
        prop_assert_eq!(pi.weights.iter().fold(Rational::zero(), |a, x| a + x), Rational::one());
    }

    #[test]
    fn bvn_reconstructs_permutation_mixtures(
        perms in (2usize..=5).prop_flat_map(|n| prop::collection::vec(
            (Just(()).prop_perturb(move |_, mut rng| {
                let mut p: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    p.swap(i, rng.random_range(0..=i));
                }
                p
            }), 1i64..5),
            1..=n,
        ))
    ) {
        let n = perms[0].0.len();
        let total: i64 = perms.iter().map(|(_, w)| w).sum();
        let mut rows = vec![vec![Rational::zero(); n]; n];
        for (perm, w) in &perms {
            for (i, &j) in perm.iter().enumerate() {
                rows[i][j] += ratio(*w, total);
            }
        }
        let d = TransitionMatrix::new(rows.clone()).unwrap();
        let dec = d.bvn_decompose().unwrap();
        prop_assert_eq!(dec.reconstruct(n), rows);
        prop_assert!(dec.terms.len() <= (n - 1) * (n - 1) + 1);
    }

    #[test]
    fn trivial_lumpings(p in irreducible_matrix()) {
        let n = p.n();
        prop_assert_eq!(lumpability_test(&p, &Partition::singletons(n)).unwrap().lambda.unwrap(), p.clone());
        let one = lumpability_test(&p, &Partition::whole(n)).unwrap().lambda.unwrap();
        prop_assert_eq!(one.to_rows(), vec![vec![Rational::one()]]);
    }

    #[test]
    fn random_matrix_sampler_is_reproducible(n in 2usize..=6, seed in any::<u64>()) {
        let a = sample_random_matrix(n, seed);
        prop_assert_eq!(&a, &sample_random_matrix(n, seed));
        prop_assert!(a.rows().flatten().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn doubly_stochastic_lumpings_decompose(p in prop_oneof![
        irreducible_matrix(),
        product_chain().prop_map(|(p, _)| p),
    ]) {
        for (_, lambda) in enumerate_lumpable_partitions(&p).unwrap() {
            if lambda.is_doubly_stochastic() {
                let dec = lambda.bvn_decompose().unwrap();
                prop_assert_eq!(dec.reconstruct(lambda.n()), lambda.to_rows());
            }
        }
    }

    #[test]
    fn product_measures_are_consistent_block_maps((p, blocks) in product_chain()) {
        let mu = product_measure_bvn(&p, &blocks).unwrap();
        prop_assert!(is_consistent(&mu, &p).unwrap().consistent);
        for f in mu.support() {
            prop_assert!(block_permutation(f, &blocks).is_ok());
        }
        let lambda = lumpability_test(&p, &blocks).unwrap().lambda.unwrap();
        let rho = PermutationMixture::from_bvn(blocks.len(), &lambda.bvn_decompose().unwrap()).unwrap();
        let verdict = verify_product_block(&p, &blocks, &rho).unwrap();
        prop_assert_eq!(verdict.is_block, verdict.k == blocks.len());
        prop_assert!(verdict.k >= blocks.len());
    }

    #[test]
    fn coalescence_report_shape(mu in irreducible_measure()) {
        let rep = exact_coalescence(&mu).unwrap();
        prop_assert!(rep.limit_partitions.iter().all(|c| c.len() == rep.k));
        prop_assert_eq!(rep.deterministic, rep.limit_partitions.len() == 1);
        let d = mu.push_forward().period_and_cyclic_classes().unwrap().period;
        prop_assert!(rep.k >= d);
    }

    #[test]
    fn limit_partitions_match_plain_search(mu in irreducible_measure()) {
        let states = reachable_states(&mu);
        let distinct = |z: &Vec<usize>| z.iter().collect::<HashSet<_>>().len();
        let k = states.iter().map(distinct).min().unwrap();
        let mut parts: Vec<Partition> = states
            .iter()
            .filter(|z| distinct(z) == k)
            .map(|z| Partition::from_labels(z))
            .collect();
        parts.sort();
        parts.dedup();
        let rep = exact_coalescence(&mu).unwrap();
        prop_assert_eq!(rep.k, k);
        prop_assert_eq!(rep.limit_partitions, parts);
        prop_assert_eq!(rep.reachable_census, states.len());
    }

    #[test]
    fn pairwise_meeting_matches_reachable_states(mu in irreducible_measure()) {
        let states = reachable_states(&mu);
        let rep = exact_coalescence(&mu).unwrap();
        for i in 0..mu.n() {
            for j in 0..mu.n() {
                let meets = pairwise_coalescence_possible(&mu, i, j);
                prop_assert_eq!(meets, states.iter().any(|z| z[i] == z[j]));
                if rep.limit_partitions.iter().any(|c| c.same_block(i, j)) {
                    prop_assert!(meets);
                }
            }
        }
    }

    #[test]
    fn deterministic_classes_give_block_measures(mu in irreducible_measure()) {
        let rep = exact_coalescence(&mu).unwrap();
        if rep.deterministic {
            let classes = &rep.limit_partitions[0];
            let check = block_measure_check(&mu, classes).unwrap();
            prop_assert!(check.is_block);
            let p = mu.push_forward();
            prop_assert!(lumpability_test(&p, classes).unwrap().lumpable);
            prop_assert!(necessary_conditions_check(&p, classes).unwrap().all_hold());
        }
        for c in &rep.limit_partitions {
            if block_measure_check(&mu, c).unwrap().is_block {
                prop_assert!(rep.deterministic);
            }
        }
    }

    #[test]
    fn explored_k_contains_period(
        p in prop_oneof![periodic_matrix(), irreducible_matrix()]
            .prop_filter("irreducible on at most 3 states", |p| p.n() <= 3 && p.is_irreducible()),
        seed in 0u64..100,
    ) {
        let d = p.period_and_cyclic_classes().unwrap().period;
        let rep = explore_k(&p, &ExploreBudget::default(), &Search::RandomSupports { trials: 16, seed }).unwrap();
        prop_assert!(rep.k_values.contains(&d));
        prop_assert_eq!(rep.k_values.contains(&1), d == 1);
        for (k, w) in &rep.witnesses {
            prop_assert_eq!(w.push_forward(), p.clone());
            prop_assert_eq!(exact_coalescence(w).unwrap().k, *k);
        }
    }

    #[test]
    fn lp_witness_reproduces_matrix(mu in irreducible_measure(), extra in prop::collection::vec(0usize..256, 0..4)) {
        let n = mu.n();
        let p = mu.push_forward();
        let mut members: Vec<StateFunction> = mu.support().cloned().collect();
        for code in extra {
            let image = (0..n).map(|i| code / n.pow(i as u32) % n).collect();
            members.push(StateFunction::new(image).unwrap());
        }
        let g = FunctionSet::new(n, members).unwrap();
        let cert = membership(&p, &g, SupportMode::Subset).unwrap();
        prop_assert!(cert.feasible);
        prop_assert_eq!(cert.weights.unwrap().push_forward(), p.clone());

        let own = FunctionSet::new(n, mu.support().cloned().collect()).unwrap();
        let exact = membership(&p, &own, SupportMode::Exact).unwrap();
        prop_assert!(exact.feasible);
        let w = exact.weights.unwrap();
        prop_assert_eq!(w.len(), own.len());
        prop_assert_eq!(w.push_forward(), p);
    }

    #[test]
    fn realizable_supports_are_closed_under_union(a in irreducible_measure(), seed in 0u64..1000) {
        let n = a.n();
        let b = coalesce_core::measures::independence_coupling(
            &coalesce_core::matrix::sample_random_matrix_exact(n, seed),
        ).unwrap();
        let mix = a.mix(&b, ratio(1, 2)).unwrap();
        let p = mix.push_forward();
        let sa = FunctionSet::new(n, a.support().cloned().collect()).unwrap();
        let sb = FunctionSet::new(n, b.support().cloned().collect()).unwrap();
        let cert = membership(&p, &sa.union(&sb), SupportMode::Exact).unwrap();
        prop_assert!(cert.feasible);
    }

    #[test]
    fn linked_transitions_have_equal_probability(
        weights in prop::collection::vec(1i64..5, 15),
    ) {
        // functions on 3 states with f(1) = 2 exactly when f(2) = 3
        let g: Vec<StateFunction> = (0..27usize)
            .map(|c| StateFunction::new(vec![c / 9, c / 3 % 3, c % 3]).unwrap())
            .filter(|f| (f.apply(0) == 1) == (f.apply(1) == 2))
            .collect();
        prop_assert_eq!(g.len(), 15);
        let total: i64 = weights.iter().sum();
        let mu = FunctionMeasure::from_weights(3, g.iter().cloned().zip(weights.iter().map(|&w| ratio(w, total)))).unwrap();
        let p = mu.push_forward();
        let cert = membership(&p, &FunctionSet::new(3, g).unwrap(), SupportMode::Subset).unwrap();
        prop_assert!(cert.feasible);
        let w = cert.weights.unwrap().push_forward();
        prop_assert_eq!(w.get(0, 1), w.get(1, 2));
    }

    #[test]
    fn two_state_closed_form(a in 1i64..20, b in 1i64..20, removed in 0usize..4) {
        // rows (a/20, 1 - a/20) and (b/20, 1 - b/20)
        let p = TransitionMatrix::new(vec![
            vec![ratio(a, 20), ratio(20 - a, 20)],
            vec![ratio(b, 20), ratio(20 - b, 20)],
        ]).unwrap();
        let f = StateFunction::new(vec![removed / 2, removed % 2]).unwrap();
        let (u, v) = (f.apply(0), f.apply(1));
        let g = FunctionSet::all(2).unwrap().without(&f);
        let feasible = membership(&p, &g, SupportMode::Subset).unwrap().feasible;
        prop_assert_eq!(feasible, p.get(1, v) <= p.get(0, 1 - u));
    }
}

#[test]
fn uniform_matrix_families() {
    for (n, ell) in [(4, 2), (6, 2), (6, 3), (8, 2), (8, 4), (9, 3)] {
        let p = TransitionMatrix::<Rational>::uniform(n).unwrap();
        let mu = nonblock_measure::<Rational>(n, ell).unwrap();
        assert_eq!(mu.push_forward(), p);
        // every (u, v) is covered by exactly one atom
        for u in 0..n {
            for v in 0..n {
                assert_eq!(mu.support().filter(|f| f.apply(u) == v).count(), 1);
            }
        }
        let rep = exact_coalescence(&mu).unwrap();
        assert_eq!(rep.k, ell);
        assert!(!rep.deterministic);
        let blocks = Partition::from_labels(&(0..n).map(|u| u / ell).collect::<Vec<_>>());
        for c in &rep.limit_partitions {
            assert!(c.is_transversal_of(&blocks));
            assert!(c.block_sizes().iter().all(|&s| s == n / ell));
        }

        let block = pn_block_measure::<Rational>(n, ell).unwrap();
        assert_eq!(block.push_forward(), p);
        let rep = exact_coalescence(&block).unwrap();
        assert!(rep.deterministic);
        assert_eq!(rep.limit_partitions, vec![pn_block_classes(n, ell).unwrap()]);
    }
}
