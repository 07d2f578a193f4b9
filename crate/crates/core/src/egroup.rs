//! Finite E-generated permutation groups: transition groups of complete
//! E-graphs, subgroup enumeration, Cayley graphs, canonical morphisms,
//! retractability, content and stability.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use petgraph::unionfind::UnionFind;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sgraph::{Alphabet, LabelledGraph, Letter, LetterSet, SignedLetter, VertexId, Word};

/// Default cap on the number of enumerated group elements.
pub const DEFAULT_ELEMENT_BUDGET: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("graph is not complete")]
    NotComplete,
    #[error("element budget exceeded after {count} elements")]
    BudgetExceeded { count: usize },
    #[error("letter {0} is not in the alphabet")]
    ForeignLetter(u32),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("carrier of size {0} is too large")]
    CarrierTooLarge(u128),
    #[error("alphabets differ")]
    AlphabetMismatch,
    #[error("malformed group description: {0}")]
    Format(String),
}

/// A permutation of `0..n`, stored as its image list.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm(Arc<[u32]>);

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm((0..n as u32).collect())
    }

    pub fn from_images(images: Vec<u32>) -> Result<Self, GroupError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x as usize >= n || seen[x as usize] {
                return Err(GroupError::InvalidPermutation(format!("{images:?} is not a bijection")));
            }
            seen[x as usize] = true;
        }
        Ok(Perm(images.into()))
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn images(&self) -> &[u32] {
        &self.0
    }

    pub fn apply(&self, x: u32) -> u32 {
        self.0[x as usize]
    }

    /// `self` followed by `other`: `x ↦ other(self(x))`.
    pub fn then(&self, other: &Perm) -> Perm {
        Perm(self.0.iter().map(|&x| other.0[x as usize]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut out = vec![0u32; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            out[x as usize] = i as u32;
        }
        Perm(out.into())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i as u32 == x)
    }

    /// Restriction to an invariant prefix `0..n`.
    pub fn restrict(&self, n: usize) -> Perm {
        Perm(self.0[..n].into())
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.0.len();
        let mut seen = vec![false; n];
        let mut any = false;
        for s in 0..n {
            if seen[s] || self.0[s] as usize == s {
                continue;
            }
            any = true;
            write!(f, "(")?;
            let mut x = s;
            let mut first = true;
            while !seen[x] {
                seen[x] = true;
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{x}")?;
                first = false;
                x = self.0[x] as usize;
            }
            write!(f, ")")?;
        }
        if !any {
            write!(f, "()")?;
        }
        Ok(())
    }
}

/// A finite group generated by one permutation per letter.
#[derive(Clone, Debug)]
pub struct EGroup {
    alphabet: Arc<Alphabet>,
    degree: usize,
    gens: Vec<Perm>,
    gens_inv: Vec<Perm>,
}

impl EGroup {
    pub fn new(alphabet: Arc<Alphabet>, degree: usize, gens: Vec<Perm>) -> Result<Self, GroupError> {
        if gens.len() != alphabet.len() {
            return Err(GroupError::InvalidPermutation(format!(
                "{} generators for {} letters",
                gens.len(),
                alphabet.len()
            )));
        }
        if let Some(p) = gens.iter().find(|p| p.degree() != degree) {
            return Err(GroupError::InvalidPermutation(format!("degree {} instead of {degree}", p.degree())));
        }
        let gens_inv = gens.iter().map(Perm::inverse).collect();
        Ok(EGroup { alphabet, degree, gens, gens_inv })
    }

    /// The group generated by the letter actions of a complete E-graph.
    pub fn transition_group(g: &LabelledGraph) -> Result<Self, GroupError> {
        if !g.is_complete() {
            return Err(GroupError::NotComplete);
        }
        let n = g.vertex_count();
        let gens = g
            .alphabet()
            .letters()
            .map(|a| {
                let images: Vec<u32> = g.vertices().map(|v| g.step(v, SignedLetter::pos(a)).unwrap().0).collect();
                Perm(images.into())
            })
            .collect();
        EGroup::new(g.alphabet().clone(), n, gens)
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn identity(&self) -> Perm {
        Perm::identity(self.degree)
    }

    pub fn generator(&self, a: Letter) -> &Perm {
        &self.gens[a.index()]
    }

    pub fn letter(&self, s: SignedLetter) -> &Perm {
        if s.inverse {
            &self.gens_inv[s.letter.index()]
        } else {
            &self.gens[s.letter.index()]
        }
    }

    /// Value of a word in action order: `eval(pq) = eval(p) then eval(q)`.
    pub fn eval_word(&self, p: &Word) -> Result<Perm, GroupError> {
        let mut cur: Vec<u32> = (0..self.degree as u32).collect();
        for &s in p.letters() {
            if s.letter.index() >= self.gens.len() {
                return Err(GroupError::ForeignLetter(s.letter.0));
            }
            let g = self.letter(s);
            for x in cur.iter_mut() {
                *x = g.apply(*x);
            }
        }
        Ok(Perm(cur.into()))
    }

    /// Image of a single point under a word.
    pub fn act(&self, x: u32, p: &Word) -> u32 {
        p.letters().iter().fold(x, |y, &s| self.letter(s).apply(y))
    }

    /// Breadth-first closure of the identity under the letters in `letters`.
    pub fn subgroup(&self, letters: LetterSet, budget: usize) -> Result<Subgroup, GroupError> {
        if let Some(a) = letters.iter().find(|a| a.index() >= self.gens.len()) {
            return Err(GroupError::ForeignLetter(a.0));
        }
        Subgroup::enumerate(self, letters, budget)
    }

    pub fn order(&self, budget: usize) -> Result<usize, GroupError> {
        Ok(self.subgroup(self.alphabet.all(), budget)?.len())
    }

    pub fn cayley_graph(&self, letters: LetterSet, budget: usize) -> Result<LabelledGraph, GroupError> {
        Ok(self.subgroup(letters, budget)?.cayley_graph(&self.alphabet))
    }

    /// The complete graph on the carrier with edges `x → x·a`.
    pub fn action_graph(&self) -> LabelledGraph {
        let mut edges = Vec::with_capacity(self.degree * self.gens.len());
        for x in 0..self.degree as u32 {
            for a in self.alphabet.letters() {
                edges.push((x, self.gens[a.index()].apply(x), a));
            }
        }
        LabelledGraph::new(self.alphabet.clone(), self.degree, &edges).expect("valid action graph")
    }

    /// The group induced on an invariant prefix `0..n` of the carrier.
    pub fn restrict_prefix(&self, n: usize) -> Option<EGroup> {
        if self.gens.iter().any(|g| g.images()[..n].iter().any(|&x| x as usize >= n)) {
            return None;
        }
        let gens = self.gens.iter().map(|g| g.restrict(n)).collect();
        EGroup::new(self.alphabet.clone(), n, gens).ok()
    }

    /// A-retractability decided by the covering criterion: the Cayley graph of
    /// `G[A]` covers the completion of every `𝒢[B]`, `B ⊆ A`.
    pub fn is_a_retractable(&self, letters: LetterSet, budget: usize) -> Result<bool, GroupError> {
        let sub = self.subgroup(letters, budget)?;
        Ok(sub.is_retractable())
    }

    /// Retractability as an E-group.
    pub fn is_retractable(&self, budget: usize) -> Result<bool, GroupError> {
        self.is_a_retractable(self.alphabet.all(), budget)
    }

    /// A-retractable for every `A` with `|A| = k`.
    pub fn is_k_retractable(&self, k: usize, budget: usize) -> Result<bool, GroupError> {
        for a in self.alphabet.all().subsets_of_size(k) {
            if !self.is_a_retractable(a, budget)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The same decision, built from explicit completed Cayley graphs and
    /// canonical morphism searches.
    pub fn is_a_retractable_by_graphs(&self, letters: LetterSet, budget: usize) -> Result<bool, GroupError> {
        let sub = self.subgroup(letters, budget)?;
        for b in letters.proper_subsets() {
            let target = self
                .cayley_graph(b, budget)?
                .trivial_completion()
                .expect("Cayley graphs are weakly complete");
            if find_canonical_morphism(&sub, &target, VertexId(0)).is_none() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Content by single-letter deletion; equals the intersection of the
    /// contents of all representatives when the group is `co(p)`-retractable.
    pub fn content(&self, p: &Word) -> LetterSet {
        let value = self.eval_word(p).expect("word over the group alphabet");
        let mut out = LetterSet::EMPTY;
        for a in p.content().iter() {
            let deleted = p.delete_letters(LetterSet::singleton(a));
            if self.eval_word(&deleted).expect("word over the group alphabet") != value {
                out = out.with(a);
            }
        }
        out
    }

    /// As [`EGroup::content`], after confirming `co(p)`-retractability.
    pub fn content_checked(&self, p: &Word, budget: usize) -> Result<Option<LetterSet>, GroupError> {
        if self.is_a_retractable(p.content(), budget)? {
            Ok(Some(self.content(p)))
        } else {
            Ok(None)
        }
    }

    /// The free E-generated Abelian group of exponent `p`, acting on
    /// `(Z_p)^E` by coordinate translation.
    pub fn abelian_p_group(alphabet: Arc<Alphabet>, p: u64) -> Result<EGroup, GroupError> {
        if p < 2 || (2..p).take_while(|d| d * d <= p).any(|d| p.is_multiple_of(d)) {
            return Err(GroupError::NotPrime(p));
        }
        let e = alphabet.len() as u32;
        let size = (p as u128).checked_pow(e).unwrap_or(u128::MAX);
        if size > 1 << 22 {
            return Err(GroupError::CarrierTooLarge(size));
        }
        let n = size as usize;
        let p = p as usize;
        let gens = (0..e as usize)
            .map(|a| {
                let stride = p.pow(a as u32);
                let images: Vec<u32> = (0..n)
                    .map(|x| {
                        let digit = (x / stride) % p;
                        let nd = (digit + 1) % p;
                        (x - digit * stride + nd * stride) as u32
                    })
                    .collect();
                Perm(images.into())
            })
            .collect();
        EGroup::new(alphabet, n, gens)
    }

    pub fn to_file(&self) -> EGroupFile {
        EGroupFile {
            format: "egroup".into(),
            version: 1,
            alphabet: self.alphabet.names().to_vec(),
            degree: self.degree,
            generators: self.gens.iter().map(|g| g.images().to_vec()).collect(),
        }
    }

    pub fn from_file(file: &EGroupFile) -> Result<EGroup, GroupError> {
        if file.format != "egroup" || file.version != 1 {
            return Err(GroupError::Format(format!("unsupported format {} v{}", file.format, file.version)));
        }
        let alphabet = Arc::new(Alphabet::new(file.alphabet.clone()).map_err(|e| GroupError::Format(e.to_string()))?);
        let gens = file
            .generators
            .iter()
            .map(|g| Perm::from_images(g.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        EGroup::new(alphabet, file.degree, gens)
    }
}

/// Serialized form of an [`EGroup`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EGroupFile {
    pub format: String,
    pub version: u32,
    pub alphabet: Vec<String>,
    pub degree: usize,
    pub generators: Vec<Vec<u32>>,
}

/// The elements of `G[A]` in breadth-first order, with right multiplication
/// by signed letters of `A` tabulated.
#[derive(Clone, Debug)]
pub struct Subgroup {
    letters: LetterSet,
    signed: Vec<SignedLetter>,
    elements: Vec<Perm>,
    index: HashMap<Perm, u32>,
    right: Vec<u32>,
    parent: Vec<(u32, u8)>,
}

impl Subgroup {
    fn enumerate(g: &EGroup, letters: LetterSet, budget: usize) -> Result<Subgroup, GroupError> {
        let signed: Vec<SignedLetter> =
            letters.iter().flat_map(|a| [SignedLetter::pos(a), SignedLetter::neg(a)]).collect();
        let m = signed.len();
        let id = g.identity();
        let mut elements = vec![id.clone()];
        let mut index = HashMap::from([(id, 0u32)]);
        let mut parent = vec![(u32::MAX, 0u8)];
        let mut right: Vec<u32> = Vec::new();
        let mut i = 0;
        while i < elements.len() {
            for (j, &s) in signed.iter().enumerate() {
                let y = elements[i].then(g.letter(s));
                let k = match index.get(&y) {
                    Some(&k) => k,
                    None => {
                        if elements.len() >= budget {
                            return Err(GroupError::BudgetExceeded { count: elements.len() });
                        }
                        let k = elements.len() as u32;
                        index.insert(y.clone(), k);
                        elements.push(y);
                        parent.push((i as u32, j as u8));
                        k
                    }
                };
                right.push(k);
            }
            i += 1;
        }
        debug_assert_eq!(right.len(), elements.len() * m);
        Ok(Subgroup { letters, signed, elements, index, right, parent })
    }

    pub fn letters(&self) -> LetterSet {
        self.letters
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &Perm {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn index_of(&self, p: &Perm) -> Option<usize> {
        self.index.get(p).map(|&i| i as usize)
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.index.contains_key(p)
    }

    fn signed_index(&self, s: SignedLetter) -> Option<usize> {
        self.letters.rank(s.letter).map(|r| 2 * r + s.inverse as usize)
    }

    /// Index of `element(i) · s`.
    pub fn mul_letter(&self, i: usize, s: SignedLetter) -> Option<usize> {
        let j = self.signed_index(s)?;
        Some(self.right[i * self.signed.len() + j] as usize)
    }

    /// Index of `element(i) · p` for a word over the subgroup's letters.
    pub fn mul_word(&self, i: usize, p: &Word) -> Option<usize> {
        p.letters().iter().try_fold(i, |x, &s| self.mul_letter(x, s))
    }

    /// A shortest word for element `i`.
    pub fn word(&self, i: usize) -> Word {
        let mut out = Vec::new();
        let mut x = i;
        while x != 0 {
            let (p, j) = self.parent[x];
            out.push(self.signed[j as usize]);
            x = p as usize;
        }
        out.reverse();
        Word(out)
    }

    /// Parent index and letter in the breadth-first tree (`None` for the identity).
    pub fn parent(&self, i: usize) -> Option<(usize, SignedLetter)> {
        if i == 0 {
            None
        } else {
            let (p, j) = self.parent[i];
            Some((p as usize, self.signed[j as usize]))
        }
    }

    /// The Cayley graph: vertex `i` per element, positive edge `i → i·a`.
    /// Positive edge `i * |A| + rank(a)` belongs to `(i, a)`.
    pub fn cayley_graph(&self, alphabet: &Arc<Alphabet>) -> LabelledGraph {
        let mut edges = Vec::with_capacity(self.len() * self.letters.len());
        for i in 0..self.len() {
            for a in self.letters.iter() {
                edges.push((i as u32, self.mul_letter(i, SignedLetter::pos(a)).unwrap() as u32, a));
            }
        }
        LabelledGraph::new(alphabet.clone(), self.len(), &edges).expect("valid Cayley graph")
    }

    /// Indices in `self` of `element(offset) · inner.element(g)` for every `g`;
    /// `inner` must be generated by a subset of the letters.
    pub fn translate(&self, offset: usize, inner: &Subgroup) -> Vec<u32> {
        debug_assert!(inner.letters.is_subset(self.letters));
        let mut map = vec![0u32; inner.len()];
        map[0] = offset as u32;
        for g in 1..inner.len() {
            let (p, s) = inner.parent(g).unwrap();
            map[g] = self.mul_letter(map[p] as usize, s).unwrap() as u32;
        }
        map
    }

    /// Whether deleting the letters outside `b` is well defined on `G[A]`,
    /// i.e. the Cayley graph covers the completion of `𝒢[B]` at the identity.
    pub fn retracts_onto(&self, b: LetterSet) -> bool {
        let n = self.len();
        let mut phi = vec![0u32; n];
        let apply = |x: u32, s: SignedLetter| -> u32 {
            if b.contains(s.letter) {
                self.mul_letter(x as usize, s).unwrap() as u32
            } else {
                x
            }
        };
        for i in 1..n {
            let (p, s) = self.parent(i).unwrap();
            phi[i] = apply(phi[p], s);
        }
        for i in 0..n {
            for a in self.letters.iter() {
                let s = SignedLetter::pos(a);
                let j = self.mul_letter(i, s).unwrap();
                if phi[j] != apply(phi[i], s) {
                    return false;
                }
            }
        }
        true
    }

    /// Retractable as an A-group.
    pub fn is_retractable(&self) -> bool {
        self.letters.proper_subsets().into_iter().all(|b| self.retracts_onto(b))
    }
}

/// A label-respecting morphism from a Cayley graph onto a complete graph,
/// fixed by the image of the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalMorphism {
    pub base: VertexId,
    pub vertex_map: Vec<VertexId>,
}

/// Extends `1 ↦ base` along the Cayley graph of `sub`; absent on any clash.
pub fn find_canonical_morphism(sub: &Subgroup, target: &LabelledGraph, base: VertexId) -> Option<CanonicalMorphism> {
    let n = sub.len();
    let mut phi = vec![VertexId(0); n];
    phi[0] = base;
    for i in 1..n {
        let (p, s) = sub.parent(i).unwrap();
        phi[i] = target.step(phi[p], s)?;
    }
    for i in 0..n {
        for a in sub.letters().iter() {
            let s = SignedLetter::pos(a);
            let j = sub.mul_letter(i, s).unwrap();
            if Some(phi[j]) != target.step(phi[i], s) {
                return None;
            }
        }
    }
    Some(CanonicalMorphism { base, vertex_map: phi })
}

/// A pair of groups over one alphabet where the source is expected to map
/// onto the target letter by letter.
#[derive(Clone, Copy, Debug)]
pub struct Expansion<'a> {
    pub source: &'a EGroup,
    pub target: &'a EGroup,
}

impl<'a> Expansion<'a> {
    pub fn new(source: &'a EGroup, target: &'a EGroup) -> Result<Self, GroupError> {
        if **source.alphabet() != **target.alphabet() {
            return Err(GroupError::AlphabetMismatch);
        }
        Ok(Expansion { source, target })
    }

    /// True when the target is the group induced on an invariant carrier
    /// prefix of the source (this certifies the canonical morphism).
    pub fn is_prefix_restriction(&self) -> bool {
        let n = self.target.degree();
        n <= self.source.degree()
            && self.source.restrict_prefix(n).is_some_and(|r| {
                self.source.alphabet().letters().all(|a| r.generator(a) == self.target.generator(a))
            })
    }

    /// Checks that the letter-wise assignment extends to a homomorphism.
    pub fn verify(&self, budget: usize) -> Result<bool, GroupError> {
        let sub = self.source.subgroup(self.source.alphabet().all(), budget)?;
        let mut image = vec![self.target.identity(); sub.len()];
        for i in 1..sub.len() {
            let (p, s) = sub.parent(i).unwrap();
            image[i] = image[p].then(self.target.letter(s));
        }
        for i in 0..sub.len() {
            for a in sub.letters().iter() {
                let s = SignedLetter::pos(a);
                if image[sub.mul_letter(i, s).unwrap()] != image[i].then(self.target.letter(s)) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `|H[A]| = |G[A]|`.
    pub fn is_stable(&self, letters: LetterSet, budget: usize) -> Result<bool, GroupError> {
        Ok(self.source.subgroup(letters, budget)?.len() == self.target.subgroup(letters, budget)?.len())
    }

    pub fn is_k_stable(&self, k: usize, budget: usize) -> Result<bool, GroupError> {
        for a in self.source.alphabet().all().subsets_of_size(k) {
            if !self.is_stable(a, budget)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// An automorphism of an E-group induced by a permutation of its letters,
/// realized as conjugation by a carrier bijection.
#[derive(Clone, Debug)]
pub struct GroupAutomorphism {
    pub letter_map: Vec<Letter>,
    beta: Perm,
    beta_inv: Perm,
}

impl GroupAutomorphism {
    /// Image of a group element.
    pub fn apply(&self, g: &Perm) -> Perm {
        self.beta_inv.then(g).then(&self.beta)
    }

    pub fn map_word(&self, p: &Word) -> Word {
        Word(
            p.letters()
                .iter()
                .map(|s| SignedLetter { letter: self.letter_map[s.letter.index()], inverse: s.inverse })
                .collect(),
        )
    }

    pub fn carrier_map(&self) -> &Perm {
        &self.beta
    }
}

/// Extends a letter permutation to an automorphism `[p] ↦ [γp]` by finding a
/// carrier bijection `β` with `β(x·a) = β(x)·γ(a)`.
pub fn extend_automorphism(g: &EGroup, letter_map: &[Letter]) -> Option<GroupAutomorphism> {
    let m = g.alphabet().len();
    if letter_map.len() != m {
        return None;
    }
    let mut seen = vec![false; m];
    for &b in letter_map {
        if b.index() >= m || std::mem::replace(&mut seen[b.index()], true) {
            return None;
        }
    }
    let n = g.degree();
    let mut uf = UnionFind::<usize>::new(n);
    for gen in &g.gens {
        for x in 0..n {
            uf.union(x, gen.apply(x as u32) as usize);
        }
    }
    let mut orbits: Vec<Vec<u32>> = Vec::new();
    let mut orbit_of: HashMap<usize, usize> = HashMap::new();
    for x in 0..n {
        let r = uf.find(x);
        let k = *orbit_of.entry(r).or_insert_with(|| {
            orbits.push(Vec::new());
            orbits.len() - 1
        });
        orbits[k].push(x as u32);
    }
    let fixed = |orbit: &[u32], a: usize| orbit.iter().filter(|&&x| g.gens[a].apply(x) == x).count();
    let sig: Vec<Vec<usize>> = orbits.iter().map(|o| (0..m).map(|a| fixed(o, a)).collect()).collect();

    let mut beta = vec![u32::MAX; n];
    let mut hit = vec![false; n];
    let mut orbit_used = vec![false; orbits.len()];
    for (i, orbit) in orbits.iter().enumerate() {
        let mut done = false;
        for (j, cand) in orbits.iter().enumerate() {
            if orbit_used[j]
                || cand.len() != orbit.len()
                || (0..m).any(|a| sig[i][a] != sig[j][letter_map[a].index()])
            {
                continue;
            }
            for &target in cand {
                if let Some(assign) = propagate(g, letter_map, orbit[0], target, orbit.len(), &hit) {
                    for (x, y) in assign {
                        beta[x as usize] = y;
                        hit[y as usize] = true;
                    }
                    orbit_used[j] = true;
                    done = true;
                    break;
                }
            }
            if done {
                break;
            }
        }
        if !done {
            return None;
        }
    }
    let beta = Perm::from_images(beta).ok()?;
    let aut = GroupAutomorphism { letter_map: letter_map.to_vec(), beta_inv: beta.inverse(), beta };
    for a in g.alphabet().letters() {
        if aut.apply(g.generator(a)) != *g.generator(letter_map[a.index()]) {
            return None;
        }
    }
    Some(aut)
}

fn propagate(g: &EGroup, letter_map: &[Letter], from: u32, to: u32, size: usize, hit: &[bool]) -> Option<Vec<(u32, u32)>> {
    let mut map: HashMap<u32, u32> = HashMap::with_capacity(size);
    let mut used: HashMap<u32, u32> = HashMap::with_capacity(size);
    if hit[to as usize] {
        return None;
    }
    map.insert(from, to);
    used.insert(to, from);
    let mut queue = VecDeque::from([from]);
    while let Some(x) = queue.pop_front() {
        let bx = map[&x];
        for a in g.alphabet().letters() {
            let y = g.generator(a).apply(x);
            let by = g.generator(letter_map[a.index()]).apply(bx);
            match map.get(&y) {
                Some(&z) if z != by => return None,
                Some(_) => {}
                None => {
                    if hit[by as usize] || used.contains_key(&by) {
                        return None;
                    }
                    map.insert(y, by);
                    used.insert(by, y);
                    queue.push_back(y);
                }
            }
        }
    }
    let mut out: Vec<(u32, u32)> = map.into_iter().collect();
    out.sort();
    Some(out)
}

/// A uniformly random word of length `0..=max_len` over the given letters.
pub fn random_word<R: Rng>(rng: &mut R, letters: &[Letter], max_len: usize) -> Word {
    if letters.is_empty() {
        return Word::empty();
    }
    let len = rng.gen_range(0..=max_len);
    Word(
        (0..len)
            .map(|_| SignedLetter { letter: letters[rng.gen_range(0..letters.len())], inverse: rng.gen_bool(0.5) })
            .collect(),
    )
}

/// `G[A] ∩ G[B] = G[A ∩ B]` for all `A, B ⊆ E`.
pub fn check_two_acyclic(g: &EGroup, budget: usize) -> Result<Option<(LetterSet, LetterSet)>, GroupError> {
    let all = g.alphabet().all().subsets();
    let subs: HashMap<LetterSet, Subgroup> =
        all.iter().map(|&a| Ok((a, g.subgroup(a, budget)?))).collect::<Result<_, GroupError>>()?;
    for &a in &all {
        for &b in &all {
            let common = subs[&a].elements().iter().filter(|x| subs[&b].contains(x)).count();
            if common != subs[&a.intersection(b)].len() {
                return Ok(Some((a, b)));
            }
        }
    }
    Ok(None)
}

/// Letter sets `A`, `B`, `C` and elements `h`, `k` violating 3-acyclicity.
pub type ThreeCycleWitness = (LetterSet, LetterSet, LetterSet, Perm, Perm);

/// For all `A, B, C ⊆ E` and group elements with `gG[A] = hG[A]`,
/// `hG[B] = kG[B]`, `kG[C] = gG[C]`, the cosets `hG[A∩B]`, `kG[B∩C]`,
/// `gG[C∩A]` share an element. Checked with `g = 1` (left translation
/// invariance) and `h ∈ G[A]`, `k ∈ G[C]`.
pub fn check_three_acyclic(g: &EGroup, budget: usize) -> Result<Option<ThreeCycleWitness>, GroupError> {
    let all = g.alphabet().all().subsets();
    let subs: HashMap<LetterSet, Subgroup> =
        all.iter().map(|&a| Ok((a, g.subgroup(a, budget)?))).collect::<Result<_, GroupError>>()?;
    for &a in &all {
        for &b in &all {
            for &c in &all {
                let ab = &subs[&a.intersection(b)];
                let bc = &subs[&b.intersection(c)];
                let ca = &subs[&c.intersection(a)];
                for h in subs[&a].elements() {
                    for k in subs[&c].elements() {
                        // h G[B] = k G[B]
                        if !subs[&b].contains(&h.inverse().then(k)) {
                            continue;
                        }
                        let hab: std::collections::HashSet<Perm> = ab.elements().iter().map(|x| h.then(x)).collect();
                        let meets = bc.elements().iter().map(|x| k.then(x)).any(|y| hab.contains(&y) && ca.contains(&y));
                        if !meets {
                            return Ok(Some((a, b, c, h.clone(), k.clone())));
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x1(vertices: &[&str], edges: &[(&str, &str, &str)]) -> LabelledGraph {
        let g = LabelledGraph::build_graph(vertices, edges).unwrap();
        let mut t = g.edge_triples();
        for &(s, d, a) in &g.edge_triples() {
            if s != d {
                t.push((d, s, a));
            }
        }
        LabelledGraph::new(g.alphabet().clone(), g.vertex_count(), &t).unwrap().trivial_completion().unwrap()
    }

    fn w(g: &EGroup, s: &str) -> Word {
        Word::parse(g.alphabet(), s).unwrap()
    }

    #[test]
    fn single_edge_and_loop_groups() {
        let se = EGroup::transition_group(&x1(&["u", "v"], &[("e", "u", "v")])).unwrap();
        assert_eq!(se.order(100).unwrap(), 2);
        assert_eq!(se.generator(Letter(0)).images(), &[1, 0]);
        assert!(se.eval_word(&w(&se, "e e")).unwrap().is_identity());
        let sl = EGroup::transition_group(&x1(&["u"], &[("e", "u", "u")])).unwrap();
        assert_eq!(sl.order(100).unwrap(), 1);
    }

    #[test]
    fn path_group_is_symmetric_group() {
        let g = EGroup::transition_group(&x1(&["u", "v", "w"], &[("a", "u", "v"), ("b", "v", "w")])).unwrap();
        assert_eq!(g.order(100).unwrap(), 6);
        let ab = g.eval_word(&w(&g, "a b")).unwrap();
        // u ↦ w, w ↦ v, v ↦ u
        assert_eq!(ab.images(), &[2, 0, 1]);
        assert!(g.is_k_retractable(1, 100).unwrap());
        assert!(!g.is_retractable(100).unwrap());
        assert!(!g.is_a_retractable_by_graphs(LetterSet::full(2), 100).unwrap());
        let cay = g.cayley_graph(LetterSet::full(2), 100).unwrap();
        assert_eq!(cay.vertex_count(), 6);
        assert!(cay.is_weakly_complete());
    }

    #[test]
    fn canonical_morphism_examples() {
        let se = EGroup::transition_group(&x1(&["u", "v"], &[("e", "u", "v")])).unwrap();
        let sub = se.subgroup(LetterSet::full(1), 10).unwrap();
        let cay = sub.cayley_graph(se.alphabet());
        assert!(find_canonical_morphism(&sub, &cay, VertexId(0)).is_some());
        let point = LabelledGraph::new(se.alphabet().clone(), 1, &[(0, 0, Letter(0))]).unwrap();
        let m = find_canonical_morphism(&sub, &point, VertexId(0)).unwrap();
        assert_eq!(m.vertex_map, vec![VertexId(0), VertexId(0)]);
        let trivial = EGroup::new(se.alphabet().clone(), 1, vec![Perm::identity(1)]).unwrap();
        let tsub = trivial.subgroup(LetterSet::full(1), 10).unwrap();
        assert!(find_canonical_morphism(&tsub, &cay, VertexId(0)).is_none());
    }

    #[test]
    fn abelian_groups() {
        let alpha = Arc::new(Alphabet::standard(2).unwrap());
        let g = EGroup::abelian_p_group(alpha.clone(), 3).unwrap();
        assert_eq!(g.order(100).unwrap(), 9);
        assert_eq!(g.eval_word(&w(&g, "a b")).unwrap(), g.eval_word(&w(&g, "b a")).unwrap());
        assert!(g.is_retractable(100).unwrap());
        assert_eq!(g.content(&w(&g, "a b")), LetterSet::full(2));
        assert_eq!(g.content(&w(&g, "a a a b")), LetterSet::singleton(Letter(1)));
        assert!(matches!(EGroup::abelian_p_group(alpha, 4), Err(GroupError::NotPrime(4))));
        let one = EGroup::abelian_p_group(Arc::new(Alphabet::standard(1).unwrap()), 2).unwrap();
        assert_eq!(one.order(10).unwrap(), 2);
    }

    #[test]
    fn stability_examples() {
        let se = EGroup::transition_group(&x1(&["u", "v"], &[("e", "u", "v")])).unwrap();
        let id = Expansion::new(&se, &se).unwrap();
        assert!(id.is_stable(LetterSet::full(1), 10).unwrap());
        let trivial = EGroup::new(se.alphabet().clone(), 1, vec![Perm::identity(1)]).unwrap();
        let exp = Expansion::new(&se, &trivial).unwrap();
        assert!(exp.verify(10).unwrap());
        assert!(!exp.is_stable(LetterSet::full(1), 10).unwrap());
        assert!(Expansion::new(&trivial, &se).unwrap().verify(10).map(|b| !b).unwrap());
    }

    #[test]
    fn budget_is_reported() {
        let alpha = Arc::new(Alphabet::standard(2).unwrap());
        let g = EGroup::abelian_p_group(alpha, 5).unwrap();
        assert_eq!(g.order(10), Err(GroupError::BudgetExceeded { count: 10 }));
    }

    #[test]
    fn automorphism_of_symmetric_path() {
        // u -a-> v <-b- w
        let g = EGroup::transition_group(&x1(&["u", "v", "w"], &[("a", "u", "v"), ("b", "w", "v")])).unwrap();
        let swap = [Letter(1), Letter(0)];
        let aut = extend_automorphism(&g, &swap).unwrap();
        assert_eq!(aut.apply(g.generator(Letter(0))), *g.generator(Letter(1)));
        let id = extend_automorphism(&g, &[Letter(0), Letter(1)]).unwrap();
        assert_eq!(id.apply(&g.eval_word(&w(&g, "a b")).unwrap()), g.eval_word(&w(&g, "a b")).unwrap());
    }

    #[test]
    fn serialization_round_trip() {
        let alpha = Arc::new(Alphabet::standard(2).unwrap());
        let g = EGroup::abelian_p_group(alpha, 2).unwrap();
        let text = serde_json::to_string(&g.to_file()).unwrap();
        let back = EGroup::from_file(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.to_file(), g.to_file());
    }

    #[test]
    fn acyclicity_of_abelian_group() {
        let alpha = Arc::new(Alphabet::standard(3).unwrap());
        let g = EGroup::abelian_p_group(alpha, 2).unwrap();
        assert_eq!(check_two_acyclic(&g, 100).unwrap(), None);
        assert!(check_three_acyclic(&g, 100).unwrap().is_none());
    }
}
