use std::sync::Arc;

use fapprox_core::sgraph::{Alphabet, GraphCongruence, LabelledGraph, Letter, LetterSet, SignedLetter, VertexId, Word};
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = LabelledGraph> {
    (1usize..7).prop_flat_map(|n| {
        prop::collection::vec((0..n as u32, 0..n as u32, 0u32..3), 0..8).prop_map(move |edges| {
            let alphabet = Arc::new(Alphabet::standard(3).unwrap());
            let triples: Vec<(u32, u32, Letter)> = edges.into_iter().map(|(s, d, a)| (s, d, Letter(a))).collect();
            LabelledGraph::new(alphabet, n, &triples).unwrap()
        })
    })
}

fn word_strategy(letters: u32) -> impl Strategy<Value = Word> {
    prop::collection::vec((0..letters, any::<bool>()), 0..16)
        .prop_map(|v| Word(v.into_iter().map(|(a, inverse)| SignedLetter { letter: Letter(a), inverse }).collect()))
}

/// Connected components along `letters` by repeated relaxation.
fn components_oracle(g: &LabelledGraph, letters: LetterSet) -> usize {
    let n = g.vertex_count();
    let mut label: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for (s, d, a) in g.edge_triples() {
            if letters.contains(a) {
                let m = label[s as usize].min(label[d as usize]);
                for x in [s, d] {
                    if label[x as usize] != m {
                        label[x as usize] = m;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut roots: Vec<usize> = label.clone();
    roots.sort();
    roots.dedup();
    roots.len()
}

proptest! {
    #[test]
    fn relabelled_graphs_are_isomorphic(g in graph_strategy(), seed in any::<u64>()) {
        let n = g.vertex_count();
        let mut perm: Vec<u32> = (0..n as u32).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let triples: Vec<(u32, u32, Letter)> =
            g.edge_triples().into_iter().map(|(a, b, l)| (perm[a as usize], perm[b as usize], l)).collect();
        let h = LabelledGraph::new(g.alphabet().clone(), n, &triples).unwrap();
        let iso = g.isomorphism_to(&h).expect("relabelling is an isomorphism");
        for (i, (s, d, a)) in g.edge_triples().into_iter().enumerate() {
            let j = iso.edge_map[i].pair();
            let (s2, d2, a2) = h.edge_triples()[j];
            prop_assert_eq!((iso.vertex_map[s as usize].0, iso.vertex_map[d as usize].0, a), (s2, d2, a2));
        }
    }

    #[test]
    fn extra_edge_breaks_isomorphism(g in graph_strategy()) {
        let mut triples = g.edge_triples();
        triples.push((0, 0, Letter(0)));
        let h = LabelledGraph::new(g.alphabet().clone(), g.vertex_count(), &triples).unwrap();
        prop_assert!(g.isomorphism_to(&h).is_none());
    }

    #[test]
    fn identity_quotient_is_isomorphic(g in graph_strategy()) {
        let q = g.quotient(&GraphCongruence::identity(&g));
        prop_assert!(q.graph.isomorphism_to(&g).is_some());
    }

    #[test]
    fn component_count_matches_oracle(g in graph_strategy(), mask in 0u64..8) {
        let letters = LetterSet(mask);
        let (labels, count) = g.component_labels(letters);
        prop_assert_eq!(count, components_oracle(&g, letters));
        for (s, d, a) in g.edge_triples() {
            if letters.contains(a) {
                prop_assert_eq!(labels[s as usize], labels[d as usize]);
            }
        }
    }

    #[test]
    fn trivial_completion_is_complete(g in graph_strategy()) {
        if let Ok(c) = g.trivial_completion() {
            prop_assert!(c.is_complete());
            prop_assert_eq!(c.vertex_count(), g.vertex_count());
            let original = g.edge_triples();
            prop_assert_eq!(&c.edge_triples()[..original.len()], &original[..]);
        } else {
            prop_assert!(!g.is_weakly_complete());
        }
    }

    #[test]
    fn word_algebra(u in word_strategy(3), v in word_strategy(3), mask in 0u64..8) {
        let d = LetterSet(mask);
        prop_assert_eq!(u.inverse().inverse(), u.clone());
        prop_assert_eq!(u.concat(&v).content(), u.content().union(v.content()));
        prop_assert_eq!(u.concat(&v).inverse(), v.inverse().concat(&u.inverse()));
        prop_assert!(u.delete_letters(d).content().intersection(d).is_empty());
        prop_assert!(u.concat(&u.inverse()).free_reduce().is_empty());
        let r = u.free_reduce();
        prop_assert_eq!(r.free_reduce(), r);
    }

    #[test]
    fn word_text_round_trip(u in word_strategy(3)) {
        let alphabet = Alphabet::standard(3).unwrap();
        prop_assert_eq!(Word::parse(&alphabet, &u.display(&alphabet)), Some(u));
    }

    #[test]
    fn subset_counts(n in 0usize..7) {
        let all = LetterSet::full(n);
        prop_assert_eq!(all.subsets().len(), 1 << n);
        let mut total = 0;
        for k in 0..=n {
            let s = all.subsets_of_size(k);
            prop_assert!(s.iter().all(|x| x.len() == k && x.is_subset(all)));
            total += s.len();
        }
        prop_assert_eq!(total, 1 << n);
    }

    #[test]
    fn paths_follow_edges(g in graph_strategy(), u in word_strategy(3)) {
        if let Some(p) = g.path_from(VertexId(0), &u) {
            prop_assert!(p.is_valid(&g));
            prop_assert_eq!(p.label(&g), u);
        }
    }
}

#[test]
fn build_graph_rejects_bad_input() {
    assert!(LabelledGraph::build_graph(&["u", "u"], &[]).is_err());
    assert!(LabelledGraph::build_graph(&["u"], &[("a", "u", "v")]).is_err());
    assert!(LabelledGraph::build_graph(&["u"], &[("a", "u", "u"), ("a", "u", "u")]).is_err());
}
