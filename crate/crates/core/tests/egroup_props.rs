use std::sync::Arc;

use fapprox_core::egroup::{EGroup, Perm};
use fapprox_core::sgraph::{Alphabet, Letter, LetterSet, SignedLetter, Word};
use proptest::prelude::*;

fn perm_strategy(n: usize) -> impl Strategy<Value = Perm> {
    Just((0..n as u32).collect::<Vec<_>>()).prop_shuffle().prop_map(|v| Perm::from_images(v).unwrap())
}

fn word_strategy(letters: u32, max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((0..letters, any::<bool>()), 0..max)
        .prop_map(|v| Word(v.into_iter().map(|(a, inverse)| SignedLetter { letter: Letter(a), inverse }).collect()))
}

fn group_strategy() -> impl Strategy<Value = EGroup> {
    (1usize..4, 1usize..6).prop_flat_map(|(m, n)| {
        prop::collection::vec(perm_strategy(n), m).prop_map(move |gens| {
            EGroup::new(Arc::new(Alphabet::standard(m).unwrap()), n, gens).unwrap()
        })
    })
}

/// Exponent sums modulo `p`.
fn exponents(w: &Word, n: usize, p: i64) -> Vec<i64> {
    let mut e = vec![0i64; n];
    for s in &w.0 {
        e[s.letter.index()] += if s.inverse { -1 } else { 1 };
    }
    e.iter().map(|x| x.rem_euclid(p)).collect()
}

proptest! {
    #[test]
    fn permutation_laws(p in perm_strategy(6), q in perm_strategy(6), r in perm_strategy(6)) {
        prop_assert_eq!(p.then(&q).then(&r), p.then(&q.then(&r)));
        prop_assert!(p.then(&p.inverse()).is_identity());
        prop_assert_eq!(p.then(&Perm::identity(6)), p.clone());
        for x in 0..6 {
            prop_assert_eq!(p.then(&q).apply(x), q.apply(p.apply(x)));
        }
    }

    #[test]
    fn evaluation_is_a_homomorphism(g in group_strategy(), u in word_strategy(3, 10), v in word_strategy(3, 10)) {
        let m = g.alphabet().len() as u32;
        let keep = |w: &Word| Word(w.0.iter().copied().filter(|s| s.letter.0 < m).collect());
        let (u, v) = (keep(&u), keep(&v));
        let eu = g.eval_word(&u).unwrap();
        prop_assert_eq!(g.eval_word(&u.concat(&v)).unwrap(), eu.then(&g.eval_word(&v).unwrap()));
        prop_assert_eq!(g.eval_word(&u.inverse()).unwrap(), eu.inverse());
        prop_assert_eq!(g.act(0, &u), eu.apply(0));
    }

    #[test]
    fn subgroup_enumeration(g in group_strategy(), u in word_strategy(3, 10)) {
        let sub = g.subgroup(g.alphabet().all(), 10_000).unwrap();
        prop_assert_eq!(sub.cayley_graph(g.alphabet()).vertex_count(), sub.len());
        for i in 0..sub.len() {
            prop_assert_eq!(g.eval_word(&sub.word(i)).unwrap(), sub.element(i).clone());
        }
        let m = g.alphabet().len() as u32;
        let u = Word(u.0.into_iter().filter(|s| s.letter.0 < m).collect());
        let j = sub.mul_word(0, &u).unwrap();
        prop_assert_eq!(sub.element(j), &g.eval_word(&u).unwrap());
        prop_assert!(sub.cayley_graph(g.alphabet()).is_complete());
    }

    #[test]
    fn covering_criteria_agree(g in group_strategy()) {
        for a in g.alphabet().all().subsets() {
            prop_assert_eq!(g.is_a_retractable(a, 10_000).unwrap(), g.is_a_retractable_by_graphs(a, 10_000).unwrap());
        }
    }

    #[test]
    fn abelian_content_is_nonzero_exponents(w in word_strategy(3, 14), p in prop::sample::select(vec![2u64, 3, 5])) {
        let g = EGroup::abelian_p_group(Arc::new(Alphabet::standard(3).unwrap()), p).unwrap();
        let e = exponents(&w, 3, p as i64);
        let expected = LetterSet::from_letters((0..3).filter(|&i| e[i] != 0).map(|i| Letter(i as u32)));
        prop_assert_eq!(g.content(&w), expected);
        prop_assert_eq!(g.content_checked(&w, 1000).unwrap(), Some(expected));
    }

    #[test]
    fn automorphisms_of_abelian_groups(w in word_strategy(3, 12), perm in Just(vec![0u32, 1, 2]).prop_shuffle()) {
        let g = EGroup::abelian_p_group(Arc::new(Alphabet::standard(3).unwrap()), 3).unwrap();
        let map: Vec<Letter> = perm.into_iter().map(Letter).collect();
        let phi = fapprox_core::egroup::extend_automorphism(&g, &map).unwrap();
        prop_assert_eq!(phi.apply(&g.eval_word(&w).unwrap()), g.eval_word(&phi.map_word(&w)).unwrap());
    }
}

#[test]
fn abelian_groups_are_retractable_and_acyclic() {
    for (n, p, order) in [(2, 2, 4), (3, 2, 8), (2, 3, 9), (2, 5, 25)] {
        let g = EGroup::abelian_p_group(Arc::new(Alphabet::standard(n).unwrap()), p).unwrap();
        assert_eq!(g.order(1000).unwrap(), order);
        assert!(g.is_retractable(1000).unwrap());
        assert!(fapprox_core::egroup::check_two_acyclic(&g, 1000).unwrap().is_none());
        assert!(fapprox_core::egroup::check_three_acyclic(&g, 1000).unwrap().is_none());
    }
    assert!(EGroup::abelian_p_group(Arc::new(Alphabet::standard(2).unwrap()), 4).is_err());
}

#[test]
fn shared_involution_is_not_retractable() {
    let t = Perm::from_images(vec![1, 0]).unwrap();
    let g = EGroup::new(Arc::new(Alphabet::standard(2).unwrap()), 2, vec![t.clone(), t]).unwrap();
    assert!(!g.is_retractable(100).unwrap());
    assert!(g.is_k_retractable(1, 100).unwrap());
    let w = Word(vec![SignedLetter::pos(Letter(0)), SignedLetter::pos(Letter(1))]);
    assert_eq!(g.content_checked(&w, 100).unwrap(), None);
}

#[test]
fn group_file_round_trip() {
    let g = EGroup::abelian_p_group(Arc::new(Alphabet::standard(2).unwrap()), 3).unwrap();
    let back = EGroup::from_file(&g.to_file()).unwrap();
    assert_eq!(back.order(100).unwrap(), 9);
    for a in g.alphabet().letters() {
        assert_eq!(back.generator(a), g.generator(a));
    }
}
