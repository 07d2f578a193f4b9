use std::collections::{HashSet, VecDeque};

use fapprox_core::egroup::EGroup;
use fapprox_core::sgraph::LabelledGraph;
use fapprox_core::tower::{build_chain, Tower, TowerConfig};

fn graph(vertices: &[&str], edges: &[(&str, &str, &str)]) -> LabelledGraph {
    LabelledGraph::build_graph(vertices, edges).unwrap()
}

fn p2() -> LabelledGraph {
    graph(&["u", "v", "w"], &[("a", "u", "v"), ("b", "v", "w")])
}

fn chain(input: &LabelledGraph, config: &TowerConfig) -> Tower {
    build_chain(input, config).unwrap()
}

/// Order of the group generated by the letters, by breadth-first closure
/// over image vectors.
fn transition_order(g: &EGroup) -> usize {
    let n = g.degree();
    let gens: Vec<Vec<u32>> = g.alphabet().letters().map(|a| (0..n as u32).map(|v| g.generator(a).apply(v)).collect()).collect();
    let one: Vec<u32> = (0..n as u32).collect();
    let mut seen = HashSet::from([one.clone()]);
    let mut queue = VecDeque::from([one]);
    while let Some(x) = queue.pop_front() {
        for p in &gens {
            let y: Vec<u32> = x.iter().map(|&i| p[i as usize]).collect();
            if seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    seen.len()
}

type LevelValues = (usize, Option<usize>, Option<usize>, Option<usize>, usize);

/// Vertex count, group order, and where present the completed cover size,
/// its group order and the number of `Z` components, per level.
fn values(t: &Tower) -> Vec<LevelValues> {
    t.levels
        .iter()
        .map(|l| (l.x.vertex_count(), l.g_order, l.y.as_ref().map(|y| y.vertex_count()), l.h_order, l.z_components))
        .collect()
}

fn check_orders(t: &Tower) {
    for l in &t.levels {
        if let Some(o) = l.g_order {
            assert_eq!(o, transition_order(&l.g));
        }
        if let (Some(o), Some(h)) = (l.h_order, &l.h) {
            assert_eq!(o, transition_order(h));
        }
    }
}

#[test]
fn path_of_two_edges() {
    let t = chain(&p2(), &TowerConfig::default());
    check_orders(&t);
    let v = values(&t);
    assert_eq!(v[0].0, 3);
    assert_eq!(v[0].1, Some(6));
    assert_eq!((v[0].2, v[0].3, v[0].4), (Some(7), Some(12), 9));
    assert_eq!((v[1].0, v[1].1), (40, Some(120)));
}

#[test]
fn lean_path_of_two_edges() {
    let t = chain(&p2(), &TowerConfig { lean: true, ..TowerConfig::default() });
    check_orders(&t);
    assert_eq!(t.levels.last().unwrap().g_order, Some(24));
}

#[test]
fn small_inputs() {
    let two_cycle = graph(&["u", "v"], &[("a", "u", "v"), ("b", "v", "u")]);
    let se = graph(&["u", "v"], &[("a", "u", "v")]);
    let sl = graph(&["u"], &[("a", "u", "u")]);
    for (input, order) in [(two_cycle, 24), (se, 2), (sl, 1)] {
        let t = chain(&input, &TowerConfig::default());
        check_orders(&t);
        assert_eq!(t.group().order(1_000_000).unwrap(), order);
        assert_eq!(t.certified_grade(), input.alphabet().len());
        assert!(t.group().is_retractable(1_000_000).unwrap());
    }
}

#[test]
fn path_of_three_edges() {
    let t = chain(&graph(&["u", "v", "w", "x"], &[("a", "u", "v"), ("b", "v", "w"), ("c", "w", "x")]), &TowerConfig::default());
    check_orders(&t);
    let v = values(&t);
    assert_eq!(v[0].1, Some(24));
    assert_eq!((v[0].2, v[0].3, v[0].4), (Some(10), Some(96), 20));
    assert_eq!(v[1].0, 89);
    assert!(t.certified_grade() >= 2);
}
