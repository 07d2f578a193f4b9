use std::collections::HashSet;
use std::sync::{Arc, OnceLock};

use fapprox_core::cosetext::{
    augment, check_component_intersections, check_constituent_freeness, check_intersection_law, cluster,
    cluster_direct, coset_extension_full, has_cluster_property, is_admissible, is_bridge_free, normalize_family,
    CosetContext, EmbeddedGraph,
};
use fapprox_core::egroup::{EGroup, Perm};
use fapprox_core::sgraph::{Alphabet, LabelledGraph, Letter, LetterSet, SignedLetter, VertexId};
use fapprox_core::tower::{build_chain, TowerConfig};
use proptest::prelude::*;

fn abelian() -> &'static EGroup {
    static G: OnceLock<EGroup> = OnceLock::new();
    G.get_or_init(|| EGroup::abelian_p_group(Arc::new(Alphabet::standard(3).unwrap()), 2).unwrap())
}

fn p2_top() -> &'static EGroup {
    static G: OnceLock<EGroup> = OnceLock::new();
    G.get_or_init(|| {
        let input = LabelledGraph::build_graph(&["u", "v", "w"], &[("a", "u", "v"), ("b", "v", "w")]).unwrap();
        build_chain(&input, &TowerConfig::default()).unwrap().group().clone()
    })
}

/// The subgraph traced by a walk from the identity.
fn walk_skeleton(g: &EGroup, steps: &[(u32, bool)], letters: LetterSet) -> EmbeddedGraph {
    let avail: Vec<Letter> = letters.iter().collect();
    let mut elements = vec![g.identity()];
    let mut edges = Vec::new();
    let mut at = 0usize;
    for &(i, inverse) in steps {
        let a = avail[i as usize % avail.len()];
        let next = elements[at].then(g.letter(SignedLetter { letter: a, inverse }));
        let j = match elements.iter().position(|x| *x == next) {
            Some(j) => j,
            None => {
                elements.push(next);
                elements.len() - 1
            }
        };
        edges.push(if inverse { (j as u32, a) } else { (at as u32, a) });
        at = j;
    }
    EmbeddedGraph::new(g, elements, &edges).unwrap()
}

fn structural_checks(g: &EGroup, letters: LetterSet, steps: &[(u32, bool)]) -> Result<(), TestCaseError> {
    let ctx = CosetContext::new(g, 100_000);
    let skeleton = walk_skeleton(g, steps, letters);
    if !is_admissible(&ctx, letters, &skeleton).unwrap().admissible {
        return Ok(());
    }
    let ce = coset_extension_full(&ctx, letters, &skeleton).unwrap();
    prop_assert!(check_intersection_law(&ce).is_none());
    prop_assert!(check_constituent_freeness(&ce).is_none());
    if has_cluster_property(&ctx, &ce).unwrap().holds {
        prop_assert!(check_component_intersections(&ce.graph, letters).is_none());
    }
    prop_assert!(ce.graph.is_e_graph());
    // the skeleton sits inside the extension
    prop_assert!(ce.skeleton_vertices.len() == skeleton.graph.vertex_count());
    for v in &ce.skeleton_vertices {
        prop_assert!(ce.is_on_skeleton(*v));
    }
    let m = ce.morphism();
    for (s, d, a) in ce.graph.edge_triples() {
        let (x, y) = (&ce.ambient[s as usize], &ce.ambient[d as usize]);
        prop_assert_eq!(&x.then(g.generator(a)), y);
        prop_assert_eq!(&m.vertex_images[s as usize], x);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn abelian_extensions(steps in prop::collection::vec((0u32..3, any::<bool>()), 0..6), mask in 3u64..8) {
        let letters = LetterSet(mask);
        prop_assume!(letters.len() >= 2);
        structural_checks(abelian(), letters, &steps)?;
        let ctx = CosetContext::new(abelian(), 1000);
        let skeleton = walk_skeleton(abelian(), &steps, letters);
        if is_admissible(&ctx, letters, &skeleton).unwrap().admissible {
            let ce = coset_extension_full(&ctx, letters, &skeleton).unwrap();
            // a single vertex extends to a full coset
            if steps.is_empty() {
                prop_assert!(has_cluster_property(&ctx, &ce).unwrap().holds);
                prop_assert!(is_bridge_free(&ctx, &ce).unwrap().bridge_free);
            }
        }
    }

    #[test]
    fn tower_group_extensions(steps in prop::collection::vec((0u32..2, any::<bool>()), 0..6)) {
        structural_checks(p2_top(), LetterSet(0b11), &steps)?;
    }

    #[test]
    fn clusters_agree_with_direct_unions(family in prop::collection::vec(1u64..7, 1..4)) {
        let g = abelian();
        let ctx = CosetContext::new(g, 1000);
        let fam = normalize_family(&family.into_iter().map(LetterSet).collect::<Vec<_>>());
        let cl = cluster(&ctx, LetterSet(0b111), &fam).unwrap();
        let direct = cluster_direct(&ctx, &fam).unwrap();
        prop_assert!(cl.graph().isomorphism_to(&direct.graph).is_some());
        let core: HashSet<Perm> = cl.core.iter().map(|v| cl.extension.ambient[v.index()].clone()).collect();
        let core_sub = g.subgroup(cl.core_letters, 1000).unwrap();
        prop_assert_eq!(core.len(), core_sub.len());
    }

    #[test]
    fn augmentation_embeds(steps in prop::collection::vec((0u32..3, any::<bool>()), 0..6), b in 1u64..7, at in 0usize..8) {
        let g = abelian();
        let ctx = CosetContext::new(g, 1000);
        let skeleton = walk_skeleton(g, &steps, LetterSet(0b111));
        let v = VertexId((at % skeleton.graph.vertex_count()) as u32);
        let aug = augment(&ctx, &skeleton.graph, v, LetterSet(b)).unwrap();
        let images: HashSet<VertexId> = aug.vertex_map.iter().copied().collect();
        prop_assert_eq!(images.len(), skeleton.graph.vertex_count());
        for (s, d, a) in skeleton.graph.edge_triples() {
            let from = aug.vertex_map[s as usize];
            prop_assert_eq!(aug.graph.step(from, SignedLetter::pos(a)), Some(aug.vertex_map[d as usize]));
        }
        // the coset component is complete for B
        let comp = aug.graph.component_vertices(aug.vertex_map[v.index()], LetterSet(b));
        prop_assert_eq!(comp.len(), g.subgroup(LetterSet(b), 1000).unwrap().len());
    }
}
