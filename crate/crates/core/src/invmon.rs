//! Finite inverse monoids as multiplication tables, the Margolis–Meakin
//! expansion of a finite group, and the F-inverse cover obtained from a
//! tower group over the group's Cayley graph.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::hash::Hash;
use std::sync::Arc;

use petgraph::unionfind::UnionFind;
use serde::Serialize;
use thiserror::Error;

use crate::egroup::{extend_automorphism, EGroup, GroupAutomorphism, GroupError, Perm, Subgroup};
use crate::sgraph::{Alphabet, LabelledGraph, Letter, LetterSet, SignedLetter, Word};
use crate::tower::{build_chain, Flag, Tower, TowerConfig, TowerError, TowerStatus};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MonoidError {
    #[error("law `{law}` fails at {elements:?}")]
    LawViolation { law: &'static str, elements: Vec<u32> },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("table is malformed: {0}")]
    Malformed(String),
    #[error("element budget exceeded after {count} elements")]
    Budget { count: usize },
    #[error("set is not closed under the operations")]
    NotClosed,
}

/// A finite inverse monoid given by its tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InverseMonoid {
    n: usize,
    mul: Vec<u32>,
    inv: Vec<u32>,
    one: u32,
}

/// A `σ`-class with its maximal elements in the natural order.
#[derive(Clone, Debug, Serialize)]
pub struct SigmaClass {
    pub members: Vec<u32>,
    pub maxima: Vec<u32>,
    pub greatest: Option<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FInverseReport {
    pub holds: bool,
    pub classes: Vec<SigmaClass>,
}

impl InverseMonoid {
    /// Validates the tables against the inverse monoid laws.
    pub fn new(n: usize, mul: Vec<u32>, inv: Vec<u32>, one: u32) -> Result<Self, MonoidError> {
        if n == 0 || mul.len() != n * n || inv.len() != n || one as usize >= n {
            return Err(MonoidError::Malformed(format!("size {n} does not match the tables")));
        }
        if mul.iter().chain(&inv).any(|&x| x as usize >= n) {
            return Err(MonoidError::Malformed("entry out of range".into()));
        }
        let m = InverseMonoid { n, mul, inv, one };
        m.check_laws()?;
        Ok(m)
    }

    fn check_laws(&self) -> Result<(), MonoidError> {
        let fail = |law, elements: &[u32]| Err(MonoidError::LawViolation { law, elements: elements.to_vec() });
        for x in self.elements() {
            if self.mul(self.one, x) != x || self.mul(x, self.one) != x {
                return fail("1x = x1 = x", &[x]);
            }
            if self.inv(self.inv(x)) != x {
                return fail("(x⁻¹)⁻¹ = x", &[x]);
            }
            if self.mul(self.mul(x, self.inv(x)), x) != x {
                return fail("xx⁻¹x = x", &[x]);
            }
        }
        for x in self.elements() {
            for y in self.elements() {
                let xy = self.mul(x, y);
                if self.inv(xy) != self.mul(self.inv(y), self.inv(x)) {
                    return fail("(xy)⁻¹ = y⁻¹x⁻¹", &[x, y]);
                }
                let e = self.mul(x, self.inv(x));
                let f = self.mul(y, self.inv(y));
                if self.mul(e, f) != self.mul(f, e) {
                    return fail("xx⁻¹yy⁻¹ = yy⁻¹xx⁻¹", &[x, y]);
                }
                for z in self.elements() {
                    if self.mul(xy, z) != self.mul(x, self.mul(y, z)) {
                        return fail("(xy)z = x(yz)", &[x, y, z]);
                    }
                }
            }
        }
        Ok(())
    }

    /// Builds the table of a finite set closed under the operations.
    pub fn from_elements<T, M, I>(elements: &[T], one: &T, mul: M, inv: I) -> Result<Self, MonoidError>
    where
        T: Hash + Eq + Clone,
        M: Fn(&T, &T) -> T,
        I: Fn(&T) -> T,
    {
        let index: HashMap<&T, u32> = elements.iter().enumerate().map(|(i, x)| (x, i as u32)).collect();
        let look = |x: &T| index.get(x).copied().ok_or(MonoidError::NotClosed);
        let n = elements.len();
        let mut table = Vec::with_capacity(n * n);
        for x in elements {
            for y in elements {
                table.push(look(&mul(x, y))?);
            }
        }
        let inverse = elements.iter().map(|x| look(&inv(x))).collect::<Result<Vec<_>, _>>()?;
        InverseMonoid::new(n, table, inverse, look(one)?)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn elements(&self) -> impl Iterator<Item = u32> {
        0..self.n as u32
    }

    pub fn one(&self) -> u32 {
        self.one
    }

    pub fn mul(&self, x: u32, y: u32) -> u32 {
        self.mul[x as usize * self.n + y as usize]
    }

    pub fn inv(&self, x: u32) -> u32 {
        self.inv[x as usize]
    }

    pub fn is_idempotent(&self, x: u32) -> bool {
        self.mul(x, x) == x
    }

    pub fn idempotents(&self) -> Vec<u32> {
        self.elements().filter(|&x| self.is_idempotent(x)).collect()
    }

    /// `x ≤ y` iff `x = ye` for some idempotent `e`; equivalently `x = y·x⁻¹x`.
    pub fn natural_leq(&self, x: u32, y: u32) -> bool {
        self.mul(y, self.mul(self.inv(x), x)) == x
    }

    pub fn is_group(&self) -> bool {
        self.idempotents().len() == 1
    }

    /// Labels of the least group congruence: `x σ y` iff `xe = ye` for some
    /// idempotent `e`.
    pub fn sigma(&self) -> Vec<u32> {
        let idem = self.idempotents();
        let mut uf = UnionFind::<u32>::new(self.n);
        for x in self.elements() {
            for y in x + 1..self.n as u32 {
                if idem.iter().any(|&e| self.mul(x, e) == self.mul(y, e)) {
                    uf.union(x, y);
                }
            }
        }
        canonical_labels(&uf.into_labeling())
    }

    pub fn is_congruence(&self, labels: &[u32]) -> bool {
        for x in self.elements() {
            for y in self.elements() {
                if labels[x as usize] != labels[y as usize] {
                    continue;
                }
                if labels[self.inv(x) as usize] != labels[self.inv(y) as usize] {
                    return false;
                }
                for z in self.elements() {
                    if labels[self.mul(x, z) as usize] != labels[self.mul(y, z) as usize]
                        || labels[self.mul(z, x) as usize] != labels[self.mul(z, y) as usize]
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Least congruence containing the given pairs.
    pub fn congruence_generated(&self, pairs: &[(u32, u32)]) -> Vec<u32> {
        let mut uf = UnionFind::<u32>::new(self.n);
        let mut queue: VecDeque<(u32, u32)> = pairs.iter().copied().collect();
        while let Some((x, y)) = queue.pop_front() {
            if !uf.union(x, y) {
                continue;
            }
            queue.push_back((self.inv(x), self.inv(y)));
            for z in self.elements() {
                queue.push_back((self.mul(x, z), self.mul(y, z)));
                queue.push_back((self.mul(z, x), self.mul(z, y)));
            }
        }
        canonical_labels(&uf.into_labeling())
    }

    /// Quotient by a congruence, with the projection.
    pub fn quotient(&self, labels: &[u32]) -> Result<(InverseMonoid, Vec<u32>), MonoidError> {
        if !self.is_congruence(labels) {
            return Err(MonoidError::Malformed("labels do not form a congruence".into()));
        }
        let labels = canonical_labels(labels);
        let k = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut rep = vec![u32::MAX; k];
        for x in self.elements() {
            if rep[labels[x as usize] as usize] == u32::MAX {
                rep[labels[x as usize] as usize] = x;
            }
        }
        let mut mul = Vec::with_capacity(k * k);
        for &a in &rep {
            for &b in &rep {
                mul.push(labels[self.mul(a, b) as usize]);
            }
        }
        let inv = rep.iter().map(|&a| labels[self.inv(a) as usize]).collect();
        let q = InverseMonoid::new(k, mul, inv, labels[self.one as usize])?;
        Ok((q, labels))
    }

    /// Every `σ`-class has a greatest element.
    pub fn f_inverse(&self) -> FInverseReport {
        let sigma = self.sigma();
        let k = sigma.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut classes: Vec<SigmaClass> =
            (0..k).map(|_| SigmaClass { members: Vec::new(), maxima: Vec::new(), greatest: None }).collect();
        for x in self.elements() {
            classes[sigma[x as usize] as usize].members.push(x);
        }
        for c in &mut classes {
            c.maxima = c
                .members
                .iter()
                .copied()
                .filter(|&x| !c.members.iter().any(|&y| y != x && self.natural_leq(x, y)))
                .collect();
            c.greatest = c.members.iter().copied().find(|&x| c.members.iter().all(|&y| self.natural_leq(y, x)));
        }
        FInverseReport { holds: classes.iter().all(|c| c.greatest.is_some()), classes }
    }

    /// Whether `map` is a homomorphism into `other`.
    pub fn is_homomorphism(&self, other: &InverseMonoid, map: &[u32]) -> bool {
        map[self.one as usize] == other.one
            && self.elements().all(|x| {
                map[self.inv(x) as usize] == other.inv(map[x as usize])
                    && self.elements().all(|y| map[self.mul(x, y) as usize] == other.mul(map[x as usize], map[y as usize]))
            })
    }

    /// The text format: `size n`, `mul` followed by `n` rows, `inv` and `one`.
    pub fn to_text(&self) -> String {
        let mut s = format!("size {}\nmul\n", self.n);
        for x in self.elements() {
            let row: Vec<String> = self.elements().map(|y| self.mul(x, y).to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        let inv: Vec<String> = self.inv.iter().map(u32::to_string).collect();
        let _ = write!(s, "inv {}\none {}\n", inv.join(" "), self.one);
        s
    }

    pub fn parse(text: &str) -> Result<Self, MonoidError> {
        Ok(Self::parse_with_generators(text)?.0)
    }

    /// As [`InverseMonoid::parse`], also reading an optional trailing
    /// `gens <i> …` line.
    pub fn parse_with_generators(text: &str) -> Result<(Self, Option<Vec<u32>>), MonoidError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
            .filter(|(_, l)| !l.trim().is_empty());
        let err = |line: usize, column: usize, message: &str| MonoidError::Parse { line, column, message: message.into() };
        let numbers = |line: usize, raw: &str, skip: usize| -> Result<Vec<u32>, MonoidError> {
            let mut out = Vec::new();
            let mut col = 0;
            for (i, tok) in raw.split_whitespace().enumerate() {
                col = raw[col..].find(tok).map_or(col, |c| c + col);
                if i >= skip {
                    out.push(tok.parse::<u32>().map_err(|_| err(line, col + 1, &format!("expected a number, found `{tok}`")))?);
                }
                col += tok.len();
            }
            Ok(out)
        };
        let mut next = |what: &str| lines.next().ok_or_else(|| err(0, 0, &format!("missing `{what}`")));
        let (ln, l) = next("size")?;
        let head: Vec<&str> = l.split_whitespace().collect();
        if head.len() != 2 || head[0] != "size" {
            return Err(err(ln, 1, "expected `size <n>`"));
        }
        let n = numbers(ln, l, 1)?[0] as usize;
        if n == 0 {
            return Err(err(ln, 6, "size must be positive"));
        }
        let (ln, l) = next("mul")?;
        if l.trim() != "mul" {
            return Err(err(ln, 1, "expected `mul`"));
        }
        let mut mul = Vec::with_capacity(n * n);
        for r in 0..n {
            let (ln, l) = next(&format!("row {r}"))?;
            let row = numbers(ln, l, 0)?;
            if row.len() != n {
                return Err(err(ln, 1, &format!("row has {} entries, expected {n}", row.len())));
            }
            mul.extend(row);
        }
        let (ln, l) = next("inv")?;
        if !l.trim_start().starts_with("inv") {
            return Err(err(ln, 1, "expected `inv`"));
        }
        let inv = numbers(ln, l, 1)?;
        if inv.len() != n {
            return Err(err(ln, 1, &format!("inverse vector has {} entries, expected {n}", inv.len())));
        }
        let (ln, l) = next("one")?;
        if !l.trim_start().starts_with("one") {
            return Err(err(ln, 1, "expected `one`"));
        }
        let one = *numbers(ln, l, 1)?.first().ok_or_else(|| err(ln, 4, "missing identity"))?;
        let gens = match lines.next() {
            None => None,
            Some((ln, l)) => {
                if !l.trim_start().starts_with("gens") {
                    return Err(err(ln, 1, "expected `gens` or end of input"));
                }
                let g = numbers(ln, l, 1)?;
                if let Some(i) = g.iter().position(|&x| x as usize >= n) {
                    return Err(err(ln, 1, &format!("generator {} is out of range", g[i])));
                }
                if let Some((ln, _)) = lines.next() {
                    return Err(err(ln, 1, "unexpected trailing input"));
                }
                Some(g)
            }
        };
        Ok((InverseMonoid::new(n, mul, inv, one)?, gens))
    }

    /// The cyclic group of order `n`.
    pub fn cyclic_group(n: usize) -> Self {
        let mul = (0..n * n).map(|i| ((i / n + i % n) % n) as u32).collect();
        let inv = (0..n).map(|x| ((n - x) % n) as u32).collect();
        InverseMonoid::new(n, mul, inv, 0).expect("cyclic group")
    }

    /// The chain `0 < 1 < … < n-1` under meet, with identity `n-1`.
    pub fn chain(n: usize) -> Self {
        let mul = (0..n * n).map(|i| (i / n).min(i % n) as u32).collect();
        InverseMonoid::new(n, mul, (0..n as u32).collect(), n as u32 - 1).expect("chain")
    }

    /// The five-element Brandt semigroup with an identity adjoined: elements
    /// `1, e₁₁, e₁₂, e₂₁, e₂₂, 0` in this order.
    pub fn brandt_with_one() -> Self {
        // e_ij e_kl = e_il if j = k, else 0
        let pair = |x: u32| match x {
            1 => Some((1, 1)),
            2 => Some((1, 2)),
            3 => Some((2, 1)),
            4 => Some((2, 2)),
            _ => None,
        };
        let code = |i: u32, l: u32| match (i, l) {
            (1, 1) => 1,
            (1, 2) => 2,
            (2, 1) => 3,
            _ => 4,
        };
        let mut mul = Vec::with_capacity(36);
        for x in 0..6u32 {
            for y in 0..6u32 {
                mul.push(match (x, y) {
                    (0, y) => y,
                    (x, 0) => x,
                    _ => match (pair(x), pair(y)) {
                        (Some((i, j)), Some((k, l))) if j == k => code(i, l),
                        _ => 5,
                    },
                });
            }
        }
        InverseMonoid::new(6, mul, vec![0, 1, 3, 2, 4, 5], 0).expect("Brandt monoid")
    }
}

fn canonical_labels(raw: &[u32]) -> Vec<u32> {
    let mut map = HashMap::new();
    raw.iter()
        .map(|r| {
            let k = map.len() as u32;
            *map.entry(*r).or_insert(k)
        })
        .collect()
}

/// Elements with the parent index and generator that first reached them.
pub type Generated<T> = Vec<(T, Option<(usize, usize)>)>;

/// Closure of `generators` under right multiplication, from `one`.
pub fn generate<T, M>(one: &T, generators: &[T], mul: M, budget: usize) -> Result<Generated<T>, MonoidError>
where
    T: Hash + Eq + Clone,
    M: Fn(&T, &T) -> T,
{
    let mut out = vec![(one.clone(), None)];
    let mut index: HashMap<T, usize> = HashMap::from([(one.clone(), 0)]);
    let mut i = 0;
    while i < out.len() {
        for (gi, g) in generators.iter().enumerate() {
            let y = mul(&out[i].0, g);
            if !index.contains_key(&y) {
                if out.len() >= budget {
                    return Err(MonoidError::Budget { count: out.len() });
                }
                index.insert(y.clone(), out.len());
                out.push((y, Some((i, gi))));
            }
        }
        i += 1;
    }
    Ok(out)
}

/// A set of positive edges of a Cayley graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeSet(Vec<u64>);

impl EdgeSet {
    pub fn empty(size: usize) -> Self {
        EdgeSet(vec![0; size.div_ceil(64)])
    }

    pub fn contains(&self, e: usize) -> bool {
        self.0[e / 64] >> (e % 64) & 1 == 1
    }

    pub fn insert(&mut self, e: usize) {
        self.0[e / 64] |= 1 << (e % 64);
    }

    pub fn union(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet(self.0.iter().zip(&other.0).map(|(a, b)| a | b).collect())
    }

    pub fn is_superset(&self, other: &EdgeSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| b & !a == 0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(i, &w)| (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| i * 64 + b))
    }
}

/// The Cayley graph of a finite group with left translations; positive edge
/// `g·|A| + a` runs from `g` to `g·a`.
#[derive(Debug)]
pub struct CayleyData {
    pub group: EGroup,
    pub elements: Subgroup,
    pub letters: usize,
    left: Vec<u32>,
    inverse: Vec<u32>,
}

impl CayleyData {
    pub fn new(group: &EGroup, budget: usize) -> Result<Self, GroupError> {
        let elements = group.subgroup(group.alphabet().all(), budget)?;
        let n = elements.len();
        let mut left = Vec::with_capacity(n * n);
        for g in elements.elements() {
            for h in elements.elements() {
                left.push(elements.index_of(&g.then(h)).unwrap() as u32);
            }
        }
        let inverse = elements.elements().iter().map(|g| elements.index_of(&g.inverse()).unwrap() as u32).collect();
        Ok(CayleyData { group: group.clone(), letters: group.alphabet().len(), elements, left, inverse })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn edge_count(&self) -> usize {
        self.order() * self.letters
    }

    pub fn mul(&self, g: u32, h: u32) -> u32 {
        self.left[g as usize * self.order() + h as usize]
    }

    pub fn inv(&self, g: u32) -> u32 {
        self.inverse[g as usize]
    }

    pub fn step(&self, g: u32, a: Letter) -> u32 {
        self.elements.mul_letter(g as usize, SignedLetter::pos(a)).unwrap() as u32
    }

    pub fn source(&self, e: usize) -> u32 {
        (e / self.letters) as u32
    }

    pub fn target(&self, e: usize) -> u32 {
        self.step(self.source(e), Letter((e % self.letters) as u32))
    }

    /// `{}^g K`.
    pub fn translate(&self, g: u32, k: &EdgeSet) -> EdgeSet {
        let mut out = EdgeSet::empty(self.edge_count());
        for e in k.iter() {
            let h = self.source(e);
            out.insert(self.mul(g, h) as usize * self.letters + e % self.letters);
        }
        out
    }

    /// The edges of the path from `1` labelled `p`, as a word over the edges,
    /// with its end.
    pub fn path(&self, p: &Word) -> (Word, u32) {
        let mut at = 0u32;
        let mut w = Word::empty();
        for s in &p.0 {
            let a = s.letter.index();
            if s.inverse {
                let from = self.elements.mul_letter(at as usize, *s).unwrap() as u32;
                w.push(SignedLetter::neg(Letter((from as usize * self.letters + a) as u32)));
                at = from;
            } else {
                w.push(SignedLetter::pos(Letter((at as usize * self.letters + a) as u32)));
                at = self.step(at, s.letter);
            }
        }
        (w, at)
    }

    /// The Cayley graph as an oriented graph with one letter per edge.
    pub fn edge_graph(&self) -> Result<LabelledGraph, TowerError> {
        let alphabet = self.group.alphabet();
        let names = (0..self.edge_count())
            .map(|e| format!("({},{})", self.source(e), alphabet.name(Letter((e % self.letters) as u32))))
            .collect();
        let alphabet = Arc::new(Alphabet::new(names)?);
        let triples: Vec<(u32, u32, Letter)> =
            (0..self.edge_count()).map(|e| (self.source(e), self.target(e), Letter(e as u32))).collect();
        Ok(LabelledGraph::new(alphabet, self.order(), &triples)?)
    }

    /// Whether the edges together with `1` span a connected subgraph
    /// containing `g`.
    pub fn is_connected_through(&self, k: &EdgeSet, g: u32) -> bool {
        let n = self.order();
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0u32];
        let edges: Vec<usize> = k.iter().collect();
        while let Some(x) = stack.pop() {
            for &e in &edges {
                let (s, t) = (self.source(e), self.target(e));
                for (a, b) in [(s, t), (t, s)] {
                    if a == x && !seen[b as usize] {
                        seen[b as usize] = true;
                        stack.push(b);
                    }
                }
            }
        }
        seen[g as usize] && edges.iter().all(|&e| seen[self.source(e) as usize])
    }
}

/// An element `(K, g)` of the Margolis–Meakin expansion.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MmElement {
    pub edges: EdgeSet,
    pub g: u32,
}

/// `M(Q)` with its table.
#[derive(Debug)]
pub struct MargolisMeakin {
    pub cayley: CayleyData,
    pub elements: Vec<MmElement>,
    pub index: HashMap<MmElement, u32>,
    pub monoid: InverseMonoid,
    /// Element index of each generator.
    pub generators: Vec<u32>,
}

impl MargolisMeakin {
    pub fn mul(&self, x: &MmElement, y: &MmElement) -> MmElement {
        mm_mul(&self.cayley, x, y)
    }

    pub fn inv(&self, x: &MmElement) -> MmElement {
        mm_inv(&self.cayley, x)
    }

    /// `(⟨π₁(p)⟩, [p]_Q)`.
    pub fn value_formula(&self, p: &Word) -> MmElement {
        let (path, end) = self.cayley.path(p);
        let mut edges = EdgeSet::empty(self.cayley.edge_count());
        for s in &path.0 {
            edges.insert(s.letter.index());
        }
        MmElement { edges, g: end }
    }

    /// Value of a word by multiplying generator images.
    pub fn value(&self, p: &Word) -> u32 {
        p.0.iter().fold(self.monoid.one(), |acc, s| {
            let g = self.generators[s.letter.index()];
            self.monoid.mul(acc, if s.inverse { self.monoid.inv(g) } else { g })
        })
    }
}

fn mm_mul(c: &CayleyData, x: &MmElement, y: &MmElement) -> MmElement {
    MmElement { edges: x.edges.union(&c.translate(x.g, &y.edges)), g: c.mul(x.g, y.g) }
}

fn mm_inv(c: &CayleyData, x: &MmElement) -> MmElement {
    let gi = c.inv(x.g);
    MmElement { edges: c.translate(gi, &x.edges), g: gi }
}

/// Generates `M(Q)` from the images `(⟨(1,a)⟩, [a]_Q)`.
pub fn margolis_meakin(q: &EGroup, budget: usize) -> Result<MargolisMeakin, InvmonError> {
    let cayley = CayleyData::new(q, budget)?;
    let one = MmElement { edges: EdgeSet::empty(cayley.edge_count()), g: 0 };
    let gens: Vec<MmElement> = q
        .alphabet()
        .letters()
        .map(|a| {
            let mut edges = EdgeSet::empty(cayley.edge_count());
            edges.insert(a.index());
            MmElement { edges, g: cayley.step(0, a) }
        })
        .collect();
    let all_gens: Vec<MmElement> = gens.iter().cloned().chain(gens.iter().map(|x| mm_inv(&cayley, x))).collect();
    let elements: Vec<MmElement> =
        generate(&one, &all_gens, |x, y| mm_mul(&cayley, x, y), budget)?.into_iter().map(|(x, _)| x).collect();
    let monoid = InverseMonoid::from_elements(&elements, &one, |x, y| mm_mul(&cayley, x, y), |x| mm_inv(&cayley, x))?;
    let index: HashMap<MmElement, u32> = elements.iter().enumerate().map(|(i, x)| (x.clone(), i as u32)).collect();
    let generators = gens.iter().map(|g| index[g]).collect();
    Ok(MargolisMeakin { cayley, elements, index, monoid, generators })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvmonError {
    #[error(transparent)]
    Monoid(#[from] MonoidError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error("tower over the Cayley graph is {0:?}")]
    TowerIncomplete(TowerStatus),
    #[error("left multiplication by element {0} does not extend to an automorphism")]
    NoAction(u32),
    #[error("premorphism is ill-defined: {0}")]
    IllDefined(String),
}

/// The action of `Q` on the tower group by automorphisms extending left
/// multiplication on the edges of the Cayley graph.
pub fn q_actions(g: &EGroup, cayley: &CayleyData) -> Result<Vec<GroupAutomorphism>, InvmonError> {
    (0..cayley.order() as u32)
        .map(|q| {
            let map: Vec<Letter> = (0..cayley.edge_count())
                .map(|e| {
                    let h = cayley.source(e);
                    Letter((cayley.mul(q, h) as usize * cayley.letters + e % cayley.letters) as u32)
                })
                .collect();
            extend_automorphism(g, &map).ok_or(InvmonError::NoAction(q))
        })
        .collect()
}

/// An element `(γ, g)` of `G ⋊ Q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SemidirectElement {
    pub gamma: Perm,
    pub q: u32,
}

/// The subgroup `H` of `G ⋊ Q` generated by `([(1,a)]_G, [a]_Q)`.
#[derive(Debug)]
pub struct SemidirectGroup {
    pub elements: Vec<SemidirectElement>,
    pub index: HashMap<SemidirectElement, u32>,
    /// A word over `A` for each element.
    pub words: Vec<Word>,
    pub monoid: InverseMonoid,
    pub generators: Vec<u32>,
}

/// Multiplication in `G ⋊ Q`.
pub fn semidirect_mul(
    actions: &[GroupAutomorphism],
    cayley: &CayleyData,
    x: &SemidirectElement,
    y: &SemidirectElement,
) -> SemidirectElement {
    SemidirectElement { gamma: x.gamma.then(&actions[x.q as usize].apply(&y.gamma)), q: cayley.mul(x.q, y.q) }
}

pub fn semidirect_inv(actions: &[GroupAutomorphism], cayley: &CayleyData, x: &SemidirectElement) -> SemidirectElement {
    let qi = cayley.inv(x.q);
    SemidirectElement { gamma: actions[qi as usize].apply(&x.gamma.inverse()), q: qi }
}

pub fn build_h(
    g: &EGroup,
    cayley: &CayleyData,
    actions: &[GroupAutomorphism],
    budget: usize,
) -> Result<SemidirectGroup, InvmonError> {
    let one = SemidirectElement { gamma: g.identity(), q: 0 };
    let alphabet = cayley.group.alphabet();
    let gens: Vec<SemidirectElement> = alphabet
        .letters()
        .map(|a| SemidirectElement { gamma: g.generator(a).clone(), q: cayley.step(0, a) })
        .collect();
    let signed: Vec<(SemidirectElement, SignedLetter)> = alphabet
        .letters()
        .map(|a| (gens[a.index()].clone(), SignedLetter::pos(a)))
        .chain(alphabet.letters().map(|a| (semidirect_inv(actions, cayley, &gens[a.index()]), SignedLetter::neg(a))))
        .collect();
    let plain: Vec<SemidirectElement> = signed.iter().map(|(x, _)| x.clone()).collect();
    let found = generate(&one, &plain, |x, y| semidirect_mul(actions, cayley, x, y), budget)?;
    let mut words: Vec<Word> = Vec::with_capacity(found.len());
    for (_, parent) in &found {
        words.push(match parent {
            None => Word::empty(),
            Some((p, gi)) => {
                let mut w = words[*p].clone();
                w.push(signed[*gi].1);
                w
            }
        });
    }
    let elements: Vec<SemidirectElement> = found.into_iter().map(|(x, _)| x).collect();
    let monoid = InverseMonoid::from_elements(
        &elements,
        &one,
        |x, y| semidirect_mul(actions, cayley, x, y),
        |x| semidirect_inv(actions, cayley, x),
    )?;
    let index: HashMap<SemidirectElement, u32> = elements.iter().enumerate().map(|(i, x)| (x.clone(), i as u32)).collect();
    let generators = gens.iter().map(|x| index[x]).collect();
    Ok(SemidirectGroup { elements, index, words, monoid, generators })
}

/// `ψ(γ, g) = (⟨C(γ)⟩, g)`, and `ψ(1) = 1`, as element indices of `M(Q)`.
pub fn psi(g: &EGroup, h: &SemidirectGroup, mm: &MargolisMeakin) -> Result<Vec<u32>, InvmonError> {
    let mut out = Vec::with_capacity(h.elements.len());
    for (i, x) in h.elements.iter().enumerate() {
        if i as u32 == h.monoid.one() {
            out.push(mm.monoid.one());
            continue;
        }
        if x.gamma.is_identity() {
            return Err(InvmonError::IllDefined(format!("(1, {}) lies in H", x.q)));
        }
        let (path, _) = mm.cayley.path(&h.words[i]);
        let content = g.content(&path);
        let mut edges = EdgeSet::empty(mm.cayley.edge_count());
        for e in content.iter() {
            edges.insert(e.index());
        }
        let m = MmElement { edges, g: x.q };
        let Some(&j) = mm.index.get(&m) else {
            return Err(InvmonError::IllDefined(format!(
                "content of element {i} does not span a connected subgraph through 1 and {}",
                x.q
            )));
        };
        out.push(j);
    }
    Ok(out)
}

/// The premorphism laws and the covering condition, each with a witness.
pub fn verify_premorphism(h: &InverseMonoid, m: &InverseMonoid, map: &[u32]) -> Vec<(Flag, Option<String>)> {
    let mut out = Vec::new();
    out.push((
        Flag { name: "ψ(1) = 1".into(), holds: map[h.one() as usize] == m.one() },
        None,
    ));
    let inv_fail = h.elements().find(|&x| map[h.inv(x) as usize] != m.inv(map[x as usize]));
    out.push((
        Flag { name: "ψ(h⁻¹) = ψ(h)⁻¹".into(), holds: inv_fail.is_none() },
        inv_fail.map(|x| format!("h = {x}")),
    ));
    let mut mul_fail = None;
    'outer: for x in h.elements() {
        for y in h.elements() {
            let lhs = m.mul(map[x as usize], map[y as usize]);
            if !m.natural_leq(lhs, map[h.mul(x, y) as usize]) {
                mul_fail = Some(format!("h = {x}, h' = {y}"));
                break 'outer;
            }
        }
    }
    out.push((Flag { name: "ψ(h)ψ(h') ≤ ψ(hh')".into(), holds: mul_fail.is_none() }, mul_fail));
    let uncovered = m.elements().find(|&y| !h.elements().any(|x| m.natural_leq(y, map[x as usize])));
    out.push((
        Flag { name: "every m lies below some ψ(h)".into(), holds: uncovered.is_none() },
        uncovered.map(|y| format!("m = {y}")),
    ));
    out
}

/// Result of the F-inverse cover pipeline.
#[derive(Clone, Debug, Serialize)]
pub struct FCoverReport {
    pub q_order: usize,
    pub letters: usize,
    pub tower_status: TowerStatus,
    pub certified_grade: usize,
    pub g_order: usize,
    pub h_order: usize,
    pub mq_order: usize,
    pub t_order: usize,
    pub s_order: usize,
    pub checks: Vec<Flag>,
    pub witnesses: Vec<String>,
    pub sigma_maxima: Vec<u32>,
}

impl FCoverReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// All objects of the pipeline, kept for further inspection.
#[derive(Debug)]
pub struct FCover {
    pub tower: Tower,
    pub mm: MargolisMeakin,
    pub actions: Vec<GroupAutomorphism>,
    pub h: SemidirectGroup,
    pub psi: Vec<u32>,
    /// Pairs `(h, m)` of `T`, and its table.
    pub t: Vec<(u32, u32)>,
    pub t_monoid: InverseMonoid,
    pub report: FCoverReport,
}

/// Builds the tower over the Cayley graph of `q`, then `M(Q)`, `H`, `ψ` and
/// `T`, and verifies the cover.
pub fn f_inverse_cover(q: &EGroup, config: &TowerConfig) -> Result<FCover, InvmonError> {
    let budget = config.element_budget;
    let mm = margolis_meakin(q, budget)?;
    let input = mm.cayley.edge_graph()?;
    let tower = build_chain(&input, config)?;
    let status = tower.status();
    if status != TowerStatus::Verified {
        return Err(InvmonError::TowerIncomplete(status));
    }
    let g = tower.group().clone();
    let actions = q_actions(&g, &mm.cayley)?;
    let h = build_h(&g, &mm.cayley, &actions, budget)?;
    let psi_map = psi(&g, &h, &mm)?;
    let mut checks = Vec::new();
    let mut witnesses = Vec::new();
    let mut check = |name: &str, holds: bool, witness: Option<String>| {
        checks.push(Flag { name: name.into(), holds });
        if let (false, Some(w)) = (holds, witness) {
            witnesses.push(format!("{name}: {w}"));
        }
    };
    for (f, w) in verify_premorphism(&h.monoid, &mm.monoid, &psi_map) {
        check(&f.name, f.holds, w);
    }
    let proj_ok = h.elements.iter().zip(&h.words).all(|(x, w)| mm.cayley.path(w).1 == x.q);
    check("H projects onto Q", proj_ok, None);

    // T: generated by the pairs of generator values
    let hm = &h.monoid;
    let mq = &mm.monoid;
    let pair_mul = |x: &(u32, u32), y: &(u32, u32)| (hm.mul(x.0, y.0), mq.mul(x.1, y.1));
    let pair_inv = |x: &(u32, u32)| (hm.inv(x.0), mq.inv(x.1));
    let gens: Vec<(u32, u32)> = h.generators.iter().zip(&mm.generators).map(|(&a, &b)| (a, b)).collect();
    let signed: Vec<(u32, u32)> = gens.iter().copied().chain(gens.iter().map(pair_inv)).collect();
    let one = (hm.one(), mq.one());
    let t: Vec<(u32, u32)> = generate(&one, &signed, pair_mul, budget)?.into_iter().map(|(x, _)| x).collect();
    let t_monoid = InverseMonoid::from_elements(&t, &one, pair_mul, pair_inv)?;
    let s: Vec<(u32, u32)> = hm
        .elements()
        .flat_map(|x| {
            let top = psi_map[x as usize];
            mq.elements().filter(move |&y| mq.natural_leq(y, top)).map(move |y| (x, y))
        })
        .collect();
    let t_set: std::collections::HashSet<(u32, u32)> = t.iter().copied().collect();
    let s_set: std::collections::HashSet<(u32, u32)> = s.iter().copied().collect();
    let t_in_s = t.iter().find(|x| !s_set.contains(x));
    check("T ⊆ S", t_in_s.is_none(), t_in_s.map(|x| format!("{x:?}")));
    let s_in_t = s.iter().find(|x| !t_set.contains(x));
    check("S ⊆ T", s_in_t.is_none(), s_in_t.map(|x| format!("{x:?}")));
    let f = t_monoid.f_inverse();
    check("T is F-inverse", f.holds, None);
    let projection: Vec<u32> = t.iter().map(|x| x.1).collect();
    check("T → M(Q) is a homomorphism", t_monoid.is_homomorphism(mq, &projection), None);
    let mut hit = vec![false; mq.len()];
    for &y in &projection {
        hit[y as usize] = true;
    }
    check("T → M(Q) is surjective", hit.iter().all(|&x| x), None);
    let idem = t_monoid.idempotents();
    let mut images = std::collections::HashMap::new();
    let mut collision = None;
    for &e in &idem {
        if let Some(&o) = images.get(&projection[e as usize]) {
            collision = Some(format!("idempotents {o} and {e}"));
        }
        images.insert(projection[e as usize], e);
    }
    check("T → M(Q) is idempotent-separating", collision.is_none(), collision);
    let mut h_hit = vec![false; hm.len()];
    for x in &t {
        h_hit[x.0 as usize] = true;
    }
    check("T → H is surjective", h_hit.iter().all(|&x| x), None);

    let report = FCoverReport {
        q_order: mm.cayley.order(),
        letters: q.alphabet().len(),
        tower_status: status,
        certified_grade: tower.certified_grade(),
        g_order: g.order(budget).unwrap_or(0),
        h_order: hm.len(),
        mq_order: mq.len(),
        t_order: t.len(),
        s_order: s.len(),
        checks,
        witnesses,
        sigma_maxima: f.classes.iter().filter_map(|c| c.greatest).collect(),
    };
    Ok(FCover { tower, mm, actions, h, psi: psi_map, t, t_monoid, report })
}

/// The cyclic group of order `n` generated by one letter `a`.
pub fn cyclic_q(n: usize) -> Result<EGroup, GroupError> {
    let alphabet = Arc::new(Alphabet::new(vec!["a".into()]).map_err(|e| GroupError::Format(e.to_string()))?);
    let images: Vec<u32> = (0..n as u32).map(|x| (x + 1) % n as u32).collect();
    EGroup::new(alphabet, n, vec![Perm::from_images(images)?])
}

/// The group of a table acting on itself by right multiplication, with one
/// letter per generator.
pub fn regular_group(m: &InverseMonoid, gens: &[u32]) -> Result<EGroup, InvmonError> {
    if !m.is_group() {
        return Err(MonoidError::Malformed("table is not a group".into()).into());
    }
    let alphabet = Arc::new(Alphabet::standard(gens.len()).map_err(|e| GroupError::Format(e.to_string()))?);
    let perms = gens
        .iter()
        .map(|&a| Perm::from_images(m.elements().map(|x| m.mul(x, a)).collect()))
        .collect::<Result<Vec<_>, _>>()?;
    let g = EGroup::new(alphabet, m.len(), perms)?;
    if g.order(m.len() + 1)? != m.len() {
        return Err(MonoidError::Malformed("generators do not generate the group".into()).into());
    }
    Ok(g)
}

/// `C(ᵍγ) = ᵍC(γ)` for the value of an edge word.
pub fn content_equivariant(g: &EGroup, cayley: &CayleyData, actions: &[GroupAutomorphism], q: u32, w: &Word) -> bool {
    let phi = &actions[q as usize];
    let mapped = g.content(&phi.map_word(w));
    let image = LetterSet::from_letters(g.content(w).iter().map(|e| {
        let h = cayley.source(e.index());
        Letter((cayley.mul(q, h) as usize * cayley.letters + e.index() % cayley.letters) as u32)
    }));
    mapped == image
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_tables() {
        let c3 = InverseMonoid::cyclic_group(3);
        assert!(c3.is_group());
        assert_eq!(c3.sigma(), vec![0, 1, 2]);
        assert!(c3.f_inverse().holds);
        let ch = InverseMonoid::chain(2);
        assert!(ch.natural_leq(0, 1) && !ch.natural_leq(1, 0));
        assert_eq!(ch.sigma(), vec![0, 0]);
        assert!(ch.f_inverse().holds);
        let b = InverseMonoid::brandt_with_one();
        assert_eq!(b.sigma(), vec![0; 6]);
        let f = b.f_inverse();
        assert!(!f.holds);
        assert_eq!(f.classes[0].maxima, vec![0, 2, 3]);
    }

    #[test]
    fn law_violation_has_witness() {
        // {0, 1} under multiplication mod 2 with a bad inverse table
        let r = InverseMonoid::new(2, vec![0, 0, 0, 1], vec![1, 1], 1);
        assert!(matches!(r, Err(MonoidError::LawViolation { .. })));
    }

    #[test]
    fn text_round_trip_and_errors() {
        let b = InverseMonoid::brandt_with_one();
        assert_eq!(InverseMonoid::parse(&b.to_text()).unwrap(), b);
        let bad = "size 2\nmul\n0 1\n1 x\ninv 0 1\none 0\n";
        match InverseMonoid::parse(bad) {
            Err(MonoidError::Parse { line, column, .. }) => assert_eq!((line, column), (4, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn margolis_meakin_sizes() {
        let mm = margolis_meakin(&cyclic_q(1).unwrap(), 1000).unwrap();
        assert_eq!(mm.monoid.len(), 2);
        let mm = margolis_meakin(&cyclic_q(2).unwrap(), 1000).unwrap();
        assert_eq!(mm.monoid.len(), 7);
        for x in mm.monoid.elements() {
            for y in mm.monoid.elements() {
                let (a, b) = (&mm.elements[x as usize], &mm.elements[y as usize]);
                assert_eq!(mm.monoid.natural_leq(x, y), a.edges.is_superset(&b.edges) && a.g == b.g);
            }
        }
    }

    #[test]
    fn congruences() {
        let b = InverseMonoid::brandt_with_one();
        let sigma = b.sigma();
        assert!(b.is_congruence(&sigma));
        let (q, _) = b.quotient(&sigma).unwrap();
        assert!(q.is_group());
        let idem = b.idempotents();
        let pairs: Vec<(u32, u32)> = idem.iter().map(|&e| (idem[0], e)).collect();
        assert_eq!(b.congruence_generated(&pairs), sigma);
    }
}
