use std::collections::{BTreeSet, HashSet};
use std::sync::{Arc, OnceLock};

use fapprox_core::egroup::{EGroup, Perm};
use fapprox_core::invmon::{
    content_equivariant, cyclic_q, f_inverse_cover, generate, margolis_meakin, verify_premorphism, FCover,
    InverseMonoid, MargolisMeakin,
};
use fapprox_core::sgraph::{Alphabet, Letter, SignedLetter, Word};
use fapprox_core::tower::TowerConfig;
use proptest::prelude::*;

const N: usize = 4;

/// A partial injection of `{0, …, N-1}`.
type Pinj = Vec<Option<u8>>;

fn then(x: &Pinj, y: &Pinj) -> Pinj {
    x.iter().map(|i| i.and_then(|i| y[i as usize])).collect()
}

fn invert(x: &Pinj) -> Pinj {
    let mut out = vec![None; x.len()];
    for (i, j) in x.iter().enumerate() {
        if let Some(j) = j {
            out[*j as usize] = Some(i as u8);
        }
    }
    out
}

fn restricts(x: &Pinj, y: &Pinj) -> bool {
    x.iter().zip(y).all(|(a, b)| a.is_none() || a == b)
}

fn pinj_strategy() -> impl Strategy<Value = Pinj> {
    (Just((0..N as u8).collect::<Vec<_>>()).prop_shuffle(), prop::collection::vec(any::<bool>(), N))
        .prop_map(|(p, keep)| p.into_iter().zip(keep).map(|(j, k)| k.then_some(j)).collect())
}

/// The inverse submonoid of `I_N` generated by `gens`, with its elements.
fn submonoid(gens: &[Pinj]) -> (Vec<Pinj>, InverseMonoid) {
    let mut all: Vec<Pinj> = gens.to_vec();
    all.extend(gens.iter().map(invert));
    let one: Pinj = (0..N as u8).map(Some).collect();
    let elements: Vec<Pinj> = generate(&one, &all, then, 100_000).unwrap().into_iter().map(|(x, _)| x).collect();
    let m = InverseMonoid::from_elements(&elements, &one, then, invert).unwrap();
    (elements, m)
}

fn same_partition(a: &[u32], b: &[u32]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

fn c2_cover() -> &'static FCover {
    static F: OnceLock<FCover> = OnceLock::new();
    F.get_or_init(|| f_inverse_cover(&cyclic_q(2).unwrap(), &TowerConfig::default()).unwrap())
}

fn klein_mm() -> &'static MargolisMeakin {
    static M: OnceLock<MargolisMeakin> = OnceLock::new();
    M.get_or_init(|| {
        let q = EGroup::abelian_p_group(Arc::new(Alphabet::standard(2).unwrap()), 2).unwrap();
        margolis_meakin(&q, 10_000).unwrap()
    })
}

fn word_strategy(letters: u32, max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((0..letters, any::<bool>()), 0..max)
        .prop_map(|v| Word(v.into_iter().map(|(a, inverse)| SignedLetter { letter: Letter(a), inverse }).collect()))
}

/// `M(Q)` by closure over explicit edge sets `(source, letter)`.
fn mm_by_closure(q: &EGroup) -> usize {
    type El = (BTreeSet<(Vec<u32>, u32)>, Perm);
    let key = |p: &Perm| (0..q.degree() as u32).map(|x| p.apply(x)).collect::<Vec<u32>>();
    let mul = |x: &El, y: &El| -> El {
        let mut k = x.0.clone();
        for (s, a) in &y.0 {
            let src = Perm::from_images(s.clone()).unwrap();
            k.insert((key(&x.1.then(&src)), *a));
        }
        (k, x.1.then(&y.1))
    };
    let gens: Vec<El> = q
        .alphabet()
        .letters()
        .flat_map(|a| {
            let g = q.generator(a).clone();
            let pos: El = (BTreeSet::from([(key(&q.identity()), a.0)]), g.clone());
            let neg: El = (BTreeSet::from([(key(&g.inverse()), a.0)]), g.inverse());
            [pos, neg]
        })
        .collect();
    let one: El = (BTreeSet::new(), q.identity());
    generate(&one, &gens, mul, 1_000_000).unwrap().len()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn partial_injections_form_inverse_monoids(gens in prop::collection::vec(pinj_strategy(), 1..3)) {
        let (el, m) = submonoid(&gens);
        for x in m.elements() {
            prop_assert_eq!(m.is_idempotent(x), el[x as usize] == then(&el[x as usize], &el[x as usize]));
            for y in m.elements() {
                prop_assert_eq!(m.natural_leq(x, y), restricts(&el[x as usize], &el[y as usize]));
            }
        }
    }

    #[test]
    fn sigma_is_the_least_group_congruence(gens in prop::collection::vec(pinj_strategy(), 1..3), pair in (0usize..64, 0usize..64)) {
        let (_, m) = submonoid(&gens);
        let sigma = m.sigma();
        let es = m.idempotents();
        let oracle: Vec<u32> = m
            .elements()
            .map(|x| m.elements().find(|&y| es.iter().any(|&e| m.mul(e, x) == m.mul(e, y))).unwrap())
            .collect();
        prop_assert!(same_partition(&sigma, &oracle));
        prop_assert!(m.is_congruence(&sigma));
        let (g, proj) = m.quotient(&sigma).unwrap();
        prop_assert!(g.is_group());
        prop_assert!(m.is_homomorphism(&g, &proj));
        let (x, y) = ((pair.0 % m.len()) as u32, (pair.1 % m.len()) as u32);
        let rho = m.congruence_generated(&[(x, y)]);
        prop_assert!(m.is_congruence(&rho));
        prop_assert_eq!(rho[x as usize], rho[y as usize]);
        if m.quotient(&rho).unwrap().0.is_group() {
            for i in m.elements() {
                for j in m.elements() {
                    prop_assert!(sigma[i as usize] != sigma[j as usize] || rho[i as usize] == rho[j as usize]);
                }
            }
        }
    }

    #[test]
    fn f_inverse_matches_restriction_maxima(gens in prop::collection::vec(pinj_strategy(), 1..3)) {
        let (el, m) = submonoid(&gens);
        let sigma = m.sigma();
        let report = m.f_inverse();
        let mut holds = true;
        for x in m.elements() {
            let class: Vec<u32> = m.elements().filter(|&y| sigma[y as usize] == sigma[x as usize]).collect();
            let maxima = class
                .iter()
                .filter(|&&y| !class.iter().any(|&z| z != y && restricts(&el[y as usize], &el[z as usize])))
                .count();
            holds &= maxima == 1;
        }
        prop_assert_eq!(report.holds, holds);
    }

    #[test]
    fn text_round_trip(gens in prop::collection::vec(pinj_strategy(), 1..3)) {
        let (_, m) = submonoid(&gens);
        prop_assert_eq!(InverseMonoid::parse(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn value_formula_agrees_with_products(w in word_strategy(2, 16)) {
        let mm = klein_mm();
        prop_assert_eq!(&mm.elements[mm.value(&w) as usize], &mm.value_formula(&w));
    }

    #[test]
    fn premorphism_survives_quotients(pair in (0usize..64, 0usize..64)) {
        let f = c2_cover();
        let m = &f.mm.monoid;
        let (x, y) = ((pair.0 % m.len()) as u32, (pair.1 % m.len()) as u32);
        let rho = m.congruence_generated(&[(x, y)]);
        let (quot, proj) = m.quotient(&rho).unwrap();
        let map: Vec<u32> = f.psi.iter().map(|&i| proj[i as usize]).collect();
        for (flag, witness) in verify_premorphism(&f.h.monoid, &quot, &map) {
            prop_assert!(flag.holds, "{} {:?}", flag.name, witness);
        }
    }

    #[test]
    fn content_is_equivariant(w in word_strategy(2, 12), q in 0u32..2) {
        let f = c2_cover();
        prop_assert!(content_equivariant(f.tower.group(), &f.mm.cayley, &f.actions, q, &w));
    }
}

#[test]
fn margolis_meakin_orders_match_closure() {
    let groups = [
        cyclic_q(2).unwrap(),
        cyclic_q(3).unwrap(),
        EGroup::abelian_p_group(Arc::new(Alphabet::standard(2).unwrap()), 2).unwrap(),
    ];
    for q in &groups {
        let mm = margolis_meakin(q, 100_000).unwrap();
        assert_eq!(mm.monoid.len(), mm_by_closure(q));
        let distinct: HashSet<_> = mm.elements.iter().collect();
        assert_eq!(distinct.len(), mm.elements.len());
    }
}
