//! Labelled graphs in the Serre sense: every positive edge carries a formal
//! inverse, labels come from a finite alphabet, and inverse edges carry the
//! inverse label.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported alphabet (letter sets are 64-bit masks).
pub const MAX_LETTERS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge `{edge}` references undeclared vertex `{vertex}`")]
    DanglingEndpoint { edge: String, vertex: String },
    #[error("duplicate edge id `{0}`")]
    DuplicateEdge(String),
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),
    #[error("alphabet has {0} letters, at most 64 are supported")]
    AlphabetTooLarge(usize),
    #[error("vertex {0} out of range")]
    NoSuchVertex(u32),
    #[error("letter {0} out of range")]
    NoSuchLetter(u32),
    #[error("graph is not weakly complete (letter `{0}`)")]
    NotWeaklyComplete(String),
    #[error("congruence is not compatible: {0}")]
    IncompatibleCongruence(String),
    #[error("graphs have different alphabets")]
    AlphabetMismatch,
}

/// A positive letter, an index into the alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter(pub u32);

impl Letter {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A letter or its formal inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignedLetter {
    pub letter: Letter,
    pub inverse: bool,
}

impl SignedLetter {
    pub fn pos(letter: Letter) -> Self {
        SignedLetter { letter, inverse: false }
    }

    pub fn neg(letter: Letter) -> Self {
        SignedLetter { letter, inverse: true }
    }

    pub fn inv(self) -> Self {
        SignedLetter { letter: self.letter, inverse: !self.inverse }
    }
}

/// A set of letters as a bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LetterSet(pub u64);

impl LetterSet {
    pub const EMPTY: LetterSet = LetterSet(0);

    pub fn full(n: usize) -> Self {
        if n >= 64 {
            LetterSet(u64::MAX)
        } else {
            LetterSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(a: Letter) -> Self {
        LetterSet(1u64 << a.0)
    }

    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        letters.into_iter().fold(LetterSet::EMPTY, |s, a| s.with(a))
    }

    pub fn contains(self, a: Letter) -> bool {
        a.0 < 64 && self.0 & (1u64 << a.0) != 0
    }

    pub fn with(self, a: Letter) -> Self {
        LetterSet(self.0 | (1u64 << a.0))
    }

    pub fn without(self, a: Letter) -> Self {
        LetterSet(self.0 & !(1u64 << a.0))
    }

    pub fn union(self, other: Self) -> Self {
        LetterSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        LetterSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        LetterSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_proper_subset(self, other: Self) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Letters in increasing order.
    pub fn iter(self) -> impl Iterator<Item = Letter> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros();
                bits &= bits - 1;
                Some(Letter(i))
            }
        })
    }

    /// Position of `a` among the letters of this set.
    pub fn rank(self, a: Letter) -> Option<usize> {
        if !self.contains(a) {
            return None;
        }
        let below = if a.0 == 0 { 0 } else { self.0 & ((1u64 << a.0) - 1) };
        Some(below.count_ones() as usize)
    }

    /// All subsets, ordered by size and then lexicographically by sorted letters.
    pub fn subsets(self) -> Vec<LetterSet> {
        let letters: Vec<Letter> = self.iter().collect();
        let mut out = Vec::with_capacity(1 << letters.len());
        for k in 0..=letters.len() {
            out.extend(subsets_of_size(&letters, k));
        }
        out
    }

    /// All proper subsets in the same order as [`LetterSet::subsets`].
    pub fn proper_subsets(self) -> Vec<LetterSet> {
        self.subsets().into_iter().filter(|&s| s != self).collect()
    }

    /// Subsets of exactly `k` letters, lexicographic over sorted letters.
    pub fn subsets_of_size(self, k: usize) -> Vec<LetterSet> {
        let letters: Vec<Letter> = self.iter().collect();
        subsets_of_size(&letters, k)
    }
}

fn subsets_of_size(letters: &[Letter], k: usize) -> Vec<LetterSet> {
    fn rec(letters: &[Letter], k: usize, start: usize, cur: LetterSet, out: &mut Vec<LetterSet>) {
        if k == 0 {
            out.push(cur);
            return;
        }
        for i in start..letters.len() {
            if letters.len() - i < k {
                break;
            }
            rec(letters, k - 1, i + 1, cur.with(letters[i]), out);
        }
    }
    let mut out = Vec::new();
    if k <= letters.len() {
        rec(letters, k, 0, LetterSet::EMPTY, &mut out);
    }
    out
}

impl fmt::Debug for LetterSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|a| a.0)).finish()
    }
}

/// Letter names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new(names: Vec<String>) -> Result<Self, GraphError> {
        if names.len() > MAX_LETTERS {
            return Err(GraphError::AlphabetTooLarge(names.len()));
        }
        Ok(Alphabet { names })
    }

    /// Letters named `a`, `b`, ... (or `l0`, `l1`, ... past 26).
    pub fn standard(n: usize) -> Result<Self, GraphError> {
        let names = (0..n)
            .map(|i| if n <= 26 { ((b'a' + i as u8) as char).to_string() } else { format!("l{i}") })
            .collect();
        Alphabet::new(names)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, a: Letter) -> &str {
        &self.names[a.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Option<Letter> {
        self.names.iter().position(|n| n == name).map(|i| Letter(i as u32))
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.names.len() as u32).map(Letter)
    }

    pub fn all(&self) -> LetterSet {
        LetterSet::full(self.names.len())
    }

    pub fn format_set(&self, s: LetterSet) -> String {
        let parts: Vec<&str> = s.iter().map(|a| self.name(a)).collect();
        format!("{{{}}}", parts.join(","))
    }

    pub fn format_letter(&self, s: SignedLetter) -> String {
        if s.inverse {
            format!("{}^-1", self.name(s.letter))
        } else {
            self.name(s.letter).to_string()
        }
    }
}

/// A word over signed letters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(pub Vec<SignedLetter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[SignedLetter] {
        &self.0
    }

    pub fn push(&mut self, s: SignedLetter) {
        self.0.push(s);
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|s| s.inv()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Cancels adjacent pairs `x x^-1`.
    pub fn free_reduce(&self) -> Word {
        let mut out: Vec<SignedLetter> = Vec::with_capacity(self.0.len());
        for &s in &self.0 {
            if out.last() == Some(&s.inv()) {
                out.pop();
            } else {
                out.push(s);
            }
        }
        Word(out)
    }

    /// Removes every occurrence of the letters in `d` and their inverses.
    pub fn delete_letters(&self, d: LetterSet) -> Word {
        Word(self.0.iter().copied().filter(|s| !d.contains(s.letter)).collect())
    }

    /// The set of letters occurring in the word.
    pub fn content(&self) -> LetterSet {
        LetterSet::from_letters(self.0.iter().map(|s| s.letter))
    }

    /// Parses whitespace-separated letter names with `x^-1` or `x'` for
    /// inverses; `1` is the empty word unless it names a letter.
    pub fn parse(alphabet: &Alphabet, text: &str) -> Option<Word> {
        if text.trim() == "1" && alphabet.lookup("1").is_none() {
            return Some(Word::empty());
        }
        let mut out = Vec::new();
        for tok in text.split_whitespace() {
            let (name, inverse) = if let Some(n) = tok.strip_suffix("^-1") {
                (n, true)
            } else if let Some(n) = tok.strip_suffix('\'') {
                (n, true)
            } else {
                (tok, false)
            };
            let letter = alphabet.lookup(name)?;
            out.push(SignedLetter { letter, inverse });
        }
        Some(Word(out))
    }

    pub fn display(&self, alphabet: &Alphabet) -> String {
        if self.0.is_empty() {
            return "1".to_string();
        }
        let parts: Vec<String> = self.0.iter().map(|&s| alphabet.format_letter(s)).collect();
        parts.join(" ")
    }
}

/// Dense vertex index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Edge index: `2i` is the positive edge `i`, `2i + 1` its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl EdgeId {
    pub fn positive(i: usize) -> Self {
        EdgeId(2 * i as u32)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    /// Index of the positive edge of the pair `{e, inv(e)}`.
    pub fn pair(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn inv(self) -> Self {
        EdgeId(self.0 ^ 1)
    }
}

/// A finite labelled Serre graph.
#[derive(Clone)]
pub struct LabelledGraph {
    alphabet: Arc<Alphabet>,
    vertex_names: Option<Arc<Vec<String>>>,
    n: usize,
    src: Vec<u32>,
    dst: Vec<u32>,
    letter: Vec<Letter>,
    adj_start: Vec<u32>,
    adj: Vec<EdgeId>,
}

impl fmt::Debug for LabelledGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LabelledGraph({} vertices, {} edges:", self.n, self.src.len())?;
        for i in 0..self.src.len() {
            write!(f, " {}-{}->{}", self.src[i], self.alphabet.name(self.letter[i]), self.dst[i])?;
        }
        write!(f, ")")
    }
}

impl LabelledGraph {
    /// Builds a graph from positive edges `(source, target, letter)`.
    pub fn new(
        alphabet: Arc<Alphabet>,
        n_vertices: usize,
        edges: &[(u32, u32, Letter)],
    ) -> Result<Self, GraphError> {
        let mut src = Vec::with_capacity(edges.len());
        let mut dst = Vec::with_capacity(edges.len());
        let mut letter = Vec::with_capacity(edges.len());
        for &(s, d, a) in edges {
            if s as usize >= n_vertices {
                return Err(GraphError::NoSuchVertex(s));
            }
            if d as usize >= n_vertices {
                return Err(GraphError::NoSuchVertex(d));
            }
            if a.index() >= alphabet.len() {
                return Err(GraphError::NoSuchLetter(a.0));
            }
            src.push(s);
            dst.push(d);
            letter.push(a);
        }
        Ok(Self::from_parts(alphabet, None, n_vertices, src, dst, letter))
    }

    fn from_parts(
        alphabet: Arc<Alphabet>,
        vertex_names: Option<Arc<Vec<String>>>,
        n: usize,
        src: Vec<u32>,
        dst: Vec<u32>,
        letter: Vec<Letter>,
    ) -> Self {
        let mut deg = vec![0u32; n + 1];
        for i in 0..src.len() {
            deg[src[i] as usize] += 1;
            deg[dst[i] as usize] += 1;
        }
        let mut adj_start = vec![0u32; n + 1];
        for v in 0..n {
            adj_start[v + 1] = adj_start[v] + deg[v];
        }
        let mut fill = adj_start.clone();
        let mut adj = vec![EdgeId(0); 2 * src.len()];
        for i in 0..src.len() {
            let s = src[i] as usize;
            adj[fill[s] as usize] = EdgeId::positive(i);
            fill[s] += 1;
            let d = dst[i] as usize;
            adj[fill[d] as usize] = EdgeId::positive(i).inv();
            fill[d] += 1;
        }
        let mut g = LabelledGraph { alphabet, vertex_names, n, src, dst, letter, adj_start, adj };
        for v in 0..n {
            let (a, b) = (g.adj_start[v] as usize, g.adj_start[v + 1] as usize);
            let mut slice = g.adj[a..b].to_vec();
            slice.sort_by_key(|&e| (g.label(e), e));
            g.adj[a..b].copy_from_slice(&slice);
        }
        g
    }

    /// Builds a graph from named vertices and named positive edges; every
    /// edge is labelled by a fresh letter named after the edge itself.
    pub fn build_graph(vertices: &[&str], edges: &[(&str, &str, &str)]) -> Result<Self, GraphError> {
        let mut vindex = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if vindex.insert(v.to_string(), i as u32).is_some() {
                return Err(GraphError::DuplicateVertex(v.to_string()));
            }
        }
        let mut names = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut triples = Vec::new();
        for (i, &(e, s, d)) in edges.iter().enumerate() {
            if !seen.insert(e) {
                return Err(GraphError::DuplicateEdge(e.to_string()));
            }
            let lookup = |x: &str| {
                vindex.get(x).copied().ok_or_else(|| GraphError::DanglingEndpoint {
                    edge: e.to_string(),
                    vertex: x.to_string(),
                })
            };
            triples.push((lookup(s)?, lookup(d)?, Letter(i as u32)));
            names.push(e.to_string());
        }
        let alphabet = Arc::new(Alphabet::new(names)?);
        let mut g = LabelledGraph::new(alphabet, vertices.len(), &triples)?;
        g.vertex_names = Some(Arc::new(vertices.iter().map(|s| s.to_string()).collect()));
        Ok(g)
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn positive_edge_count(&self) -> usize {
        self.src.len()
    }

    pub fn edge_count(&self) -> usize {
        2 * self.src.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.n as u32).map(VertexId)
    }

    pub fn positive_edges(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.src.len()).map(EdgeId::positive)
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> {
        (0..2 * self.src.len() as u32).map(EdgeId)
    }

    pub fn vertex_name(&self, v: VertexId) -> String {
        match &self.vertex_names {
            Some(names) => names[v.index()].clone(),
            None => v.0.to_string(),
        }
    }

    pub fn vertex_names(&self) -> Option<&[String]> {
        self.vertex_names.as_deref().map(|v| v.as_slice())
    }

    pub fn find_vertex(&self, name: &str) -> Option<VertexId> {
        match &self.vertex_names {
            Some(names) => names.iter().position(|n| n == name).map(|i| VertexId(i as u32)),
            None => name.parse::<u32>().ok().filter(|&i| (i as usize) < self.n).map(VertexId),
        }
    }

    pub fn alpha(&self, e: EdgeId) -> VertexId {
        let i = e.pair();
        VertexId(if e.is_positive() { self.src[i] } else { self.dst[i] })
    }

    pub fn omega(&self, e: EdgeId) -> VertexId {
        self.alpha(e.inv())
    }

    pub fn inv(&self, e: EdgeId) -> EdgeId {
        e.inv()
    }

    pub fn label(&self, e: EdgeId) -> SignedLetter {
        SignedLetter { letter: self.letter[e.pair()], inverse: !e.is_positive() }
    }

    pub fn letter_of(&self, e: EdgeId) -> Letter {
        self.letter[e.pair()]
    }

    /// Outgoing edges of `v` (both orientations), sorted by label.
    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        let (a, b) = (self.adj_start[v.index()] as usize, self.adj_start[v.index() + 1] as usize);
        &self.adj[a..b]
    }

    /// The first outgoing edge of `v` labelled `s`.
    pub fn edge_with_label(&self, v: VertexId, s: SignedLetter) -> Option<EdgeId> {
        let out = self.out_edges(v);
        let i = out.partition_point(|&e| self.label(e) < s);
        out.get(i).copied().filter(|&e| self.label(e) == s)
    }

    pub fn step(&self, v: VertexId, s: SignedLetter) -> Option<VertexId> {
        self.edge_with_label(v, s).map(|e| self.omega(e))
    }

    /// Letters labelling at least one edge.
    pub fn used_letters(&self) -> LetterSet {
        LetterSet::from_letters(self.letter.iter().copied())
    }

    /// No vertex has two outgoing edges with equal label.
    pub fn is_e_graph(&self) -> bool {
        self.vertices().all(|v| {
            let out = self.out_edges(v);
            out.windows(2).all(|w| self.label(w[0]) != self.label(w[1]))
        })
    }

    /// Every vertex has exactly one outgoing edge per signed letter of the alphabet.
    pub fn is_complete(&self) -> bool {
        let m = self.alphabet.len();
        self.is_e_graph() && self.vertices().all(|v| self.out_edges(v).len() == 2 * m)
    }

    /// An E-graph where each letter acts as a permutation of its domain.
    pub fn is_weakly_complete(&self) -> bool {
        self.is_e_graph()
            && self.vertices().all(|v| {
                self.alphabet.letters().all(|a| {
                    self.edge_with_label(v, SignedLetter::pos(a)).is_some()
                        == self.edge_with_label(v, SignedLetter::neg(a)).is_some()
                })
            })
    }

    /// Adds an `a`-loop at every vertex without an outgoing `a`-edge.
    pub fn trivial_completion(&self) -> Result<LabelledGraph, GraphError> {
        if !self.is_e_graph() {
            return Err(GraphError::NotWeaklyComplete("not an E-graph".into()));
        }
        let mut src = self.src.clone();
        let mut dst = self.dst.clone();
        let mut letter = self.letter.clone();
        for v in self.vertices() {
            for a in self.alphabet.letters() {
                let out = self.edge_with_label(v, SignedLetter::pos(a)).is_some();
                let inn = self.edge_with_label(v, SignedLetter::neg(a)).is_some();
                if out != inn {
                    return Err(GraphError::NotWeaklyComplete(self.alphabet.name(a).to_string()));
                }
                if !out {
                    src.push(v.0);
                    dst.push(v.0);
                    letter.push(a);
                }
            }
        }
        Ok(Self::from_parts(self.alphabet.clone(), self.vertex_names.clone(), self.n, src, dst, letter))
    }

    /// The unique path from `v` labelled `p`, if every step exists.
    pub fn path_from(&self, v: VertexId, p: &Word) -> Option<Path> {
        let mut cur = v;
        let mut edges = Vec::with_capacity(p.len());
        for &s in p.letters() {
            let e = self.edge_with_label(cur, s)?;
            edges.push(e);
            cur = self.omega(e);
        }
        Some(Path { start: v, edges })
    }

    /// Component labels of the subgraph using only letters in `letters`.
    pub fn component_labels(&self, letters: LetterSet) -> (Vec<u32>, usize) {
        let mut label = vec![u32::MAX; self.n];
        let mut count = 0u32;
        let mut queue = VecDeque::new();
        for s in 0..self.n {
            if label[s] != u32::MAX {
                continue;
            }
            label[s] = count;
            queue.push_back(VertexId(s as u32));
            while let Some(x) = queue.pop_front() {
                for &e in self.out_edges(x) {
                    if letters.contains(self.letter_of(e)) {
                        let y = self.omega(e);
                        if label[y.index()] == u32::MAX {
                            label[y.index()] = count;
                            queue.push_back(y);
                        }
                    }
                }
            }
            count += 1;
        }
        (label, count as usize)
    }

    /// Vertices reachable from `v` along edges labelled in `letters`, sorted.
    pub fn component_vertices(&self, v: VertexId, letters: LetterSet) -> Vec<VertexId> {
        let mut seen = vec![false; self.n];
        seen[v.index()] = true;
        let mut queue = VecDeque::from([v]);
        let mut out = vec![v];
        while let Some(x) = queue.pop_front() {
            for &e in self.out_edges(x) {
                if letters.contains(self.letter_of(e)) {
                    let y = self.omega(e);
                    if !seen[y.index()] {
                        seen[y.index()] = true;
                        out.push(y);
                        queue.push_back(y);
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// The `letters`-component of `v`.
    pub fn component(&self, v: VertexId, letters: LetterSet) -> Result<Subgraph, GraphError> {
        if v.index() >= self.n {
            return Err(GraphError::NoSuchVertex(v.0));
        }
        let vs = self.component_vertices(v, letters);
        let mut member = vec![false; self.n];
        for &x in &vs {
            member[x.index()] = true;
        }
        let es: Vec<EdgeId> = self
            .positive_edges()
            .filter(|&e| member[self.alpha(e).index()] && letters.contains(self.letter_of(e)))
            .collect();
        Ok(self.spanned_subgraph(&vs, &es))
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.component_labels(self.alphabet.all()).1 == 1
    }

    /// The least subgraph containing the given vertices and edges; vertices and
    /// edges keep their relative order.
    pub fn spanned_subgraph(&self, vertices: &[VertexId], edges: &[EdgeId]) -> Subgraph {
        let mut vmark = vec![false; self.n];
        let mut emark = vec![false; self.src.len()];
        for &v in vertices {
            vmark[v.index()] = true;
        }
        for &e in edges {
            emark[e.pair()] = true;
            vmark[self.alpha(e).index()] = true;
            vmark[self.omega(e).index()] = true;
        }
        let mut newv = vec![u32::MAX; self.n];
        let mut vmap = Vec::new();
        for v in 0..self.n {
            if vmark[v] {
                newv[v] = vmap.len() as u32;
                vmap.push(VertexId(v as u32));
            }
        }
        let (mut src, mut dst, mut letter, mut emap) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..self.src.len() {
            if emark[i] {
                src.push(newv[self.src[i] as usize]);
                dst.push(newv[self.dst[i] as usize]);
                letter.push(self.letter[i]);
                emap.push(EdgeId::positive(i));
            }
        }
        let names = self
            .vertex_names
            .as_ref()
            .map(|n| Arc::new(vmap.iter().map(|v| n[v.index()].clone()).collect::<Vec<_>>()));
        let graph = Self::from_parts(self.alphabet.clone(), names, vmap.len(), src, dst, letter);
        Subgraph { graph, vertices: vmap, edges: emap }
    }

    /// Quotient by a congruence; classes are numbered by their least member.
    pub fn quotient(&self, theta: &GraphCongruence) -> Quotient {
        let mut vclass = vec![u32::MAX; theta.vertex_class.len()];
        let mut vmap = Vec::with_capacity(self.n);
        let mut nv = 0u32;
        for v in 0..self.n {
            let c = theta.vertex_class[v] as usize;
            if vclass[c] == u32::MAX {
                vclass[c] = nv;
                nv += 1;
            }
            vmap.push(VertexId(vclass[c]));
        }
        let mut eclass = vec![u32::MAX; theta.edge_class.len()];
        let mut emap = Vec::with_capacity(self.src.len());
        let (mut src, mut dst, mut letter) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..self.src.len() {
            let c = theta.edge_class[i] as usize;
            if eclass[c] == u32::MAX {
                eclass[c] = src.len() as u32;
                src.push(vmap[self.src[i] as usize].0);
                dst.push(vmap[self.dst[i] as usize].0);
                letter.push(self.letter[i]);
            }
            emap.push(EdgeId::positive(eclass[c] as usize));
        }
        let graph = Self::from_parts(self.alphabet.clone(), None, nv as usize, src, dst, letter);
        Quotient { graph, vertex_map: vmap, edge_map: emap }
    }

    /// Disjoint union; the vertices and edges of the `i`-th graph follow those
    /// of the graphs before it.
    pub fn disjoint_union(graphs: &[&LabelledGraph]) -> Result<LabelledGraph, GraphError> {
        let Some(first) = graphs.first() else {
            return Err(GraphError::AlphabetMismatch);
        };
        let alphabet = first.alphabet.clone();
        let (mut src, mut dst, mut letter) = (Vec::new(), Vec::new(), Vec::new());
        let mut offset = 0u32;
        let named = graphs.iter().any(|g| g.vertex_names.is_some());
        let mut names = Vec::new();
        for (k, g) in graphs.iter().enumerate() {
            if !Arc::ptr_eq(&g.alphabet, &alphabet) && *g.alphabet != *alphabet {
                return Err(GraphError::AlphabetMismatch);
            }
            for i in 0..g.src.len() {
                src.push(g.src[i] + offset);
                dst.push(g.dst[i] + offset);
                letter.push(g.letter[i]);
            }
            if named {
                for v in g.vertices() {
                    names.push(format!("{k}:{}", g.vertex_name(v)));
                }
            }
            offset += g.n as u32;
        }
        let names = if named { Some(Arc::new(names)) } else { None };
        Ok(Self::from_parts(alphabet, names, offset as usize, src, dst, letter))
    }

    /// Same graph over a different alphabet of at least the same size.
    pub fn with_alphabet(&self, alphabet: Arc<Alphabet>) -> Result<LabelledGraph, GraphError> {
        if let Some(&a) = self.letter.iter().find(|a| a.index() >= alphabet.len()) {
            return Err(GraphError::NoSuchLetter(a.0));
        }
        Ok(Self::from_parts(
            alphabet,
            self.vertex_names.clone(),
            self.n,
            self.src.clone(),
            self.dst.clone(),
            self.letter.clone(),
        ))
    }

    /// Positive edges as `(source, target, letter)` triples.
    pub fn edge_triples(&self) -> Vec<(u32, u32, Letter)> {
        (0..self.src.len()).map(|i| (self.src[i], self.dst[i], self.letter[i])).collect()
    }

    /// Cheap isomorphism invariant.
    pub fn invariant(&self) -> u64 {
        let mut sigs: Vec<Vec<SignedLetter>> = self
            .vertices()
            .map(|v| {
                let mut s: Vec<SignedLetter> = self
                    .out_edges(v)
                    .iter()
                    .filter(|&&e| self.omega(e) != v)
                    .map(|&e| self.label(e))
                    .collect();
                let loops = self.out_edges(v).iter().filter(|&&e| self.omega(e) == v).count();
                s.push(SignedLetter::pos(Letter(u32::MAX - loops as u32)));
                s
            })
            .collect();
        sigs.sort();
        let mut letters = self.letter.clone();
        letters.sort();
        let mut h = std::collections::hash_map::DefaultHasher::new();
        (self.n, letters, sigs).hash(&mut h);
        h.finish()
    }

    fn signature(&self, v: VertexId) -> Vec<(SignedLetter, bool)> {
        self.out_edges(v).iter().map(|&e| (self.label(e), self.omega(e) == v)).collect()
    }

    /// Finds a label- and orientation-preserving isomorphism onto `other`.
    pub fn isomorphism_to(&self, other: &LabelledGraph) -> Option<Isomorphism> {
        labelled_isomorphism(self, other, None)
    }

    /// Finds an isomorphism sending `v` to `w`.
    pub fn isomorphism_mapping(&self, v: VertexId, other: &LabelledGraph, w: VertexId) -> Option<Isomorphism> {
        labelled_isomorphism(self, other, Some((v, w)))
    }
}

/// A subgraph together with its embedding into the parent.
#[derive(Clone, Debug)]
pub struct Subgraph {
    pub graph: LabelledGraph,
    /// Parent vertex of each subgraph vertex.
    pub vertices: Vec<VertexId>,
    /// Parent positive edge of each subgraph positive edge.
    pub edges: Vec<EdgeId>,
}

/// A quotient graph and its projection.
#[derive(Clone, Debug)]
pub struct Quotient {
    pub graph: LabelledGraph,
    pub vertex_map: Vec<VertexId>,
    /// Image of each positive edge (always a positive edge).
    pub edge_map: Vec<EdgeId>,
}

/// A path given by its start vertex and consecutive edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub start: VertexId,
    pub edges: Vec<EdgeId>,
}

impl Path {
    pub fn end(&self, g: &LabelledGraph) -> VertexId {
        self.edges.last().map_or(self.start, |&e| g.omega(e))
    }

    pub fn label(&self, g: &LabelledGraph) -> Word {
        Word(self.edges.iter().map(|&e| g.label(e)).collect())
    }

    /// Consecutive edges in `g`.
    pub fn is_valid(&self, g: &LabelledGraph) -> bool {
        let mut cur = self.start;
        for &e in &self.edges {
            if e.pair() >= g.positive_edge_count() || g.alpha(e) != cur {
                return false;
            }
            cur = g.omega(e);
        }
        true
    }
}

/// A congruence on a labelled graph: a partition of the vertices and a
/// partition of the positive edges (the inverse edges follow).
#[derive(Clone, Debug)]
pub struct GraphCongruence {
    vertex_class: Vec<u32>,
    edge_class: Vec<u32>,
}

impl GraphCongruence {
    pub fn identity(g: &LabelledGraph) -> Self {
        GraphCongruence {
            vertex_class: (0..g.n as u32).collect(),
            edge_class: (0..g.src.len() as u32).collect(),
        }
    }

    /// Validates explicit class labels.
    pub fn from_labels(g: &LabelledGraph, vertex_class: Vec<u32>, edge_class: Vec<u32>) -> Result<Self, GraphError> {
        if vertex_class.len() != g.n || edge_class.len() != g.src.len() {
            return Err(GraphError::IncompatibleCongruence("label vectors have the wrong length".into()));
        }
        if vertex_class.iter().any(|&c| c as usize >= g.n) || edge_class.iter().any(|&c| c as usize >= g.src.len()) {
            return Err(GraphError::IncompatibleCongruence("class label out of range".into()));
        }
        let mut rep: HashMap<u32, usize> = HashMap::new();
        for i in 0..g.src.len() {
            let j = *rep.entry(edge_class[i]).or_insert(i);
            if g.letter[i] != g.letter[j] {
                return Err(GraphError::IncompatibleCongruence(format!("edges {i} and {j} have different labels")));
            }
            if vertex_class[g.src[i] as usize] != vertex_class[g.src[j] as usize]
                || vertex_class[g.dst[i] as usize] != vertex_class[g.dst[j] as usize]
            {
                return Err(GraphError::IncompatibleCongruence(format!(
                    "edges {i} and {j} are identified but their endpoints are not"
                )));
            }
        }
        Ok(GraphCongruence { vertex_class, edge_class })
    }

    /// The least congruence identifying the given vertex pairs and positive
    /// edge pairs; fails if it would identify edges with different labels.
    pub fn generated(
        g: &LabelledGraph,
        vertex_pairs: &[(VertexId, VertexId)],
        edge_pairs: &[(EdgeId, EdgeId)],
    ) -> Result<Self, GraphError> {
        let mut vuf = UnionFind::<usize>::new(g.n);
        let mut euf = UnionFind::<usize>::new(g.src.len());
        for &(x, y) in vertex_pairs {
            vuf.union(x.index(), y.index());
        }
        for &(e, f) in edge_pairs {
            let (e, f) = if e.is_positive() == f.is_positive() {
                (e.pair(), f.pair())
            } else {
                return Err(GraphError::IncompatibleCongruence("edges of opposite orientation".into()));
            };
            if g.letter[e] != g.letter[f] {
                return Err(GraphError::IncompatibleCongruence(format!("edges {e} and {f} have different labels")));
            }
            euf.union(e, f);
        }
        for i in 0..g.src.len() {
            let r = euf.find(i);
            vuf.union(g.src[i] as usize, g.src[r] as usize);
            vuf.union(g.dst[i] as usize, g.dst[r] as usize);
        }
        let vertex_class = (0..g.n).map(|v| vuf.find(v) as u32).collect();
        let edge_class = (0..g.src.len()).map(|e| euf.find(e) as u32).collect();
        Ok(GraphCongruence { vertex_class, edge_class })
    }

    pub fn vertex_class(&self, v: VertexId) -> u32 {
        self.vertex_class[v.index()]
    }

    pub fn edge_class(&self, e: EdgeId) -> u32 {
        self.edge_class[e.pair()]
    }
}

/// A labelled isomorphism between two graphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Isomorphism {
    pub vertex_map: Vec<VertexId>,
    /// Image of each positive edge.
    pub edge_map: Vec<EdgeId>,
}

fn labelled_isomorphism(
    g: &LabelledGraph,
    h: &LabelledGraph,
    anchor: Option<(VertexId, VertexId)>,
) -> Option<Isomorphism> {
    if g.n != h.n || g.src.len() != h.src.len() || *g.alphabet != *h.alphabet {
        return None;
    }
    if g.n == 0 {
        return Some(Isomorphism { vertex_map: vec![], edge_map: vec![] });
    }
    let gsig: Vec<_> = g.vertices().map(|v| g.signature(v)).collect();
    let hsig: Vec<_> = h.vertices().map(|v| h.signature(v)).collect();
    let mut a: Vec<_> = gsig.clone();
    let mut b: Vec<_> = hsig.clone();
    a.sort();
    b.sort();
    if a != b {
        return None;
    }
    if let Some((v, w)) = anchor {
        if gsig[v.index()] != hsig[w.index()] {
            return None;
        }
    }

    // BFS order over g; each non-root vertex records the edge it was reached by.
    let mut order: Vec<(VertexId, Option<EdgeId>)> = Vec::with_capacity(g.n);
    let mut seen = vec![false; g.n];
    let roots: Vec<VertexId> = match anchor {
        Some((v, _)) => std::iter::once(v).chain(g.vertices()).collect(),
        None => g.vertices().collect(),
    };
    for r in roots {
        if seen[r.index()] {
            continue;
        }
        seen[r.index()] = true;
        let start = order.len();
        order.push((r, None));
        let mut i = start;
        while i < order.len() {
            let x = order[i].0;
            for &e in g.out_edges(x) {
                let y = g.omega(e);
                if !seen[y.index()] {
                    seen[y.index()] = true;
                    order.push((y, Some(e)));
                }
            }
            i += 1;
        }
    }

    let mut fwd = vec![u32::MAX; g.n];
    let mut used = vec![false; h.n];
    let ok = iso_search(g, h, &gsig, &hsig, &order, anchor, &mut fwd, &mut used);
    if !ok {
        return None;
    }
    // Pair up edges with equal (source, target, letter).
    let mut buckets: HashMap<(u32, u32, Letter), Vec<usize>> = HashMap::new();
    for i in 0..h.src.len() {
        buckets.entry((h.src[i], h.dst[i], h.letter[i])).or_default().push(i);
    }
    for v in buckets.values_mut() {
        v.reverse();
    }
    let mut edge_map = Vec::with_capacity(g.src.len());
    for i in 0..g.src.len() {
        let key = (fwd[g.src[i] as usize], fwd[g.dst[i] as usize], g.letter[i]);
        let j = buckets.get_mut(&key)?.pop()?;
        edge_map.push(EdgeId::positive(j));
    }
    Some(Isomorphism { vertex_map: fwd.into_iter().map(VertexId).collect(), edge_map })
}

/// Backtracking over `order` with an explicit stack of candidate lists.
#[allow(clippy::too_many_arguments)]
fn iso_search(
    g: &LabelledGraph,
    h: &LabelledGraph,
    gsig: &[Vec<(SignedLetter, bool)>],
    hsig: &[Vec<(SignedLetter, bool)>],
    order: &[(VertexId, Option<EdgeId>)],
    anchor: Option<(VertexId, VertexId)>,
    fwd: &mut [u32],
    used: &mut [bool],
) -> bool {
    let candidates = |i: usize, fwd: &[u32], used: &[bool]| -> Vec<VertexId> {
        let (x, via) = order[i];
        let raw: Vec<VertexId> = match via {
            Some(e) => {
                let px = VertexId(fwd[g.alpha(e).index()]);
                let s = g.label(e);
                h.out_edges(px).iter().filter(|&&f| h.label(f) == s).map(|&f| h.omega(f)).collect()
            }
            None => match anchor {
                Some((v, w)) if v == x => vec![w],
                _ => h.vertices().filter(|w| !used[w.index()]).collect(),
            },
        };
        let mut out: Vec<VertexId> = Vec::new();
        for y in raw {
            if !used[y.index()] && !out.contains(&y) && gsig[x.index()] == hsig[y.index()] {
                out.push(y);
            }
        }
        out.reverse();
        out
    };
    if order.is_empty() {
        return true;
    }
    let mut stack: Vec<Vec<VertexId>> = vec![candidates(0, fwd, used)];
    loop {
        let i = stack.len() - 1;
        let x = order[i].0;
        if fwd[x.index()] != u32::MAX {
            used[fwd[x.index()] as usize] = false;
            fwd[x.index()] = u32::MAX;
        }
        let mut placed = false;
        while let Some(y) = stack[i].pop() {
            if consistent(g, h, x, y, fwd, used) {
                fwd[x.index()] = y.0;
                used[y.index()] = true;
                placed = true;
                break;
            }
        }
        if !placed {
            stack.pop();
            if stack.is_empty() {
                return false;
            }
            continue;
        }
        if i + 1 == order.len() {
            return true;
        }
        stack.push(candidates(i + 1, fwd, used));
    }
}

/// Edges between `x` and already mapped vertices match those between `y` and
/// their images.
fn consistent(g: &LabelledGraph, h: &LabelledGraph, x: VertexId, y: VertexId, fwd: &[u32], used: &[bool]) -> bool {
    let mut lhs: BTreeMap<(u32, SignedLetter), usize> = BTreeMap::new();
    for &e in g.out_edges(x) {
        let z = g.omega(e);
        let img = if z == x { y.0 } else { fwd[z.index()] };
        if img != u32::MAX {
            *lhs.entry((img, g.label(e))).or_default() += 1;
        }
    }
    let mut rhs: BTreeMap<(u32, SignedLetter), usize> = BTreeMap::new();
    for &f in h.out_edges(y) {
        let z = h.omega(f);
        if z == y || used[z.index()] {
            *rhs.entry((z.0, h.label(f))).or_default() += 1;
        }
    }
    lhs == rhs
}

/// Groups graphs into isomorphism classes, keeping the first of each class.
#[derive(Default)]
pub struct IsoClasses {
    buckets: HashMap<u64, Vec<usize>>,
    reps: Vec<LabelledGraph>,
    counts: Vec<usize>,
}

impl IsoClasses {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `g`; returns its class index and whether it was new.
    pub fn insert(&mut self, g: LabelledGraph) -> (usize, bool) {
        let key = g.invariant();
        let bucket = self.buckets.entry(key).or_default();
        for &i in bucket.iter() {
            if self.reps[i].isomorphism_to(&g).is_some() {
                self.counts[i] += 1;
                return (i, false);
            }
        }
        bucket.push(self.reps.len());
        self.reps.push(g);
        self.counts.push(1);
        (self.reps.len() - 1, true)
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn representatives(&self) -> &[LabelledGraph] {
        &self.reps
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.counts
    }

    pub fn into_representatives(self) -> Vec<LabelledGraph> {
        self.reps
    }
}

/// An automorphism of the underlying oriented graph, recorded by its action
/// on vertices and on positive edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrientedAutomorphism {
    pub vertex_map: Vec<VertexId>,
    pub edge_map: Vec<usize>,
}

/// All automorphisms of the oriented graph ignoring labels, up to `limit`.
pub fn oriented_automorphisms(g: &LabelledGraph, limit: usize) -> Vec<OrientedAutomorphism> {
    let n = g.n;
    let mut mult: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for i in 0..g.src.len() {
        mult.entry((g.src[i], g.dst[i])).or_default().push(i);
    }
    let degree = |v: usize| -> (usize, usize) {
        let outd = g.src.iter().filter(|&&s| s as usize == v).count();
        let ind = g.dst.iter().filter(|&&d| d as usize == v).count();
        (outd, ind)
    };
    let degs: Vec<_> = (0..n).map(degree).collect();
    let mut out = Vec::new();
    let mut fwd = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn count(m: &HashMap<(u32, u32), Vec<usize>>, a: usize, b: usize) -> usize {
        m.get(&(a as u32, b as u32)).map_or(0, |v| v.len())
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        n: usize,
        degs: &[(usize, usize)],
        mult: &HashMap<(u32, u32), Vec<usize>>,
        fwd: &mut Vec<usize>,
        used: &mut Vec<bool>,
        found: &mut Vec<Vec<usize>>,
        limit: usize,
    ) {
        if found.len() >= limit {
            return;
        }
        if i == n {
            found.push(fwd.clone());
            return;
        }
        for y in 0..n {
            if used[y] || degs[y] != degs[i] {
                continue;
            }
            let ok = (0..i).chain(std::iter::once(i)).all(|z| {
                let fz = if z == i { y } else { fwd[z] };
                count(mult, i, z) == count(mult, y, fz) && count(mult, z, i) == count(mult, fz, y)
            });
            if !ok {
                continue;
            }
            fwd[i] = y;
            used[y] = true;
            rec(i + 1, n, degs, mult, fwd, used, found, limit);
            used[y] = false;
            fwd[i] = usize::MAX;
        }
    }
    let mut vmaps = Vec::new();
    rec(0, n, &degs, &mult, &mut fwd, &mut used, &mut vmaps, limit);
    for vmap in vmaps {
        // Parallel edges may be permuted among themselves in every way.
        let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        let mut keys: Vec<_> = mult.keys().copied().collect();
        keys.sort();
        for (s, d) in keys {
            let from = mult[&(s, d)].clone();
            let to = mult[&(vmap[s as usize] as u32, vmap[d as usize] as u32)].clone();
            groups.push((from, to));
        }
        let mut partial = vec![vec![usize::MAX; g.src.len()]];
        for (from, to) in &groups {
            let perms = permutations(to.len());
            let mut next = Vec::new();
            for base in &partial {
                for p in &perms {
                    let mut m = base.clone();
                    for (k, &e) in from.iter().enumerate() {
                        m[e] = to[p[k]];
                    }
                    next.push(m);
                }
            }
            partial = next;
            if partial.len() > limit {
                partial.truncate(limit);
            }
        }
        for edge_map in partial {
            out.push(OrientedAutomorphism {
                vertex_map: vmap.iter().map(|&v| VertexId(v as u32)).collect(),
                edge_map,
            });
            if out.len() >= limit {
                return out;
            }
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2_x1() -> LabelledGraph {
        let g = LabelledGraph::build_graph(&["u", "v", "w"], &[("a", "u", "v"), ("b", "v", "w")]).unwrap();
        let mut t = g.edge_triples();
        t.push((1, 0, Letter(0)));
        t.push((2, 1, Letter(1)));
        LabelledGraph::new(g.alphabet().clone(), 3, &t).unwrap().trivial_completion().unwrap()
    }

    #[test]
    fn build_graph_rejects_bad_input() {
        assert!(matches!(
            LabelledGraph::build_graph(&["u"], &[("e", "u", "v")]),
            Err(GraphError::DanglingEndpoint { .. })
        ));
        assert!(matches!(
            LabelledGraph::build_graph(&["u"], &[("e", "u", "u"), ("e", "u", "u")]),
            Err(GraphError::DuplicateEdge(_))
        ));
    }

    #[test]
    fn single_edge_and_loop() {
        let se = LabelledGraph::build_graph(&["u", "v"], &[("e", "u", "v")]).unwrap();
        assert_eq!(se.vertex_count(), 2);
        assert_eq!(se.edge_count(), 2);
        let e = EdgeId::positive(0);
        assert_eq!(se.alpha(e.inv()), se.omega(e));
        assert_eq!(se.label(e.inv()), se.label(e).inv());
        let sl = LabelledGraph::build_graph(&["u"], &[("e", "u", "u")]).unwrap();
        assert_eq!(sl.edge_count(), 2);
        assert!(sl.is_complete());
    }

    #[test]
    fn p2_completion_and_paths() {
        let p2 = LabelledGraph::build_graph(&["u", "v", "w"], &[("a", "u", "v"), ("b", "v", "w")]).unwrap();
        assert!(p2.is_e_graph());
        assert!(!p2.is_weakly_complete());
        assert!(p2.path_from(VertexId(1), &Word(vec![SignedLetter::pos(Letter(0))])).is_none());
        let x1 = p2_x1();
        assert!(x1.is_complete());
        // a-loop at w, b-loop at u
        assert_eq!(x1.step(VertexId(2), SignedLetter::pos(Letter(0))), Some(VertexId(2)));
        assert_eq!(x1.step(VertexId(0), SignedLetter::pos(Letter(1))), Some(VertexId(0)));
        let ab = Word(vec![SignedLetter::pos(Letter(0)), SignedLetter::pos(Letter(1))]);
        let path = x1.path_from(VertexId(0), &ab).unwrap();
        assert_eq!(path.end(&x1), VertexId(2));
        assert_eq!(path.label(&x1), ab);
        let c = x1.component(VertexId(0), LetterSet::singleton(Letter(0))).unwrap();
        assert_eq!(c.vertices, vec![VertexId(0), VertexId(1)]);
        assert_eq!(c.graph.positive_edge_count(), 2);
    }

    #[test]
    fn completion_is_idempotent() {
        let x1 = p2_x1();
        let again = x1.trivial_completion().unwrap();
        assert_eq!(again.edge_triples(), x1.edge_triples());
    }

    #[test]
    fn non_deterministic_graph_is_not_e_graph() {
        let alpha = Arc::new(Alphabet::standard(1).unwrap());
        let g = LabelledGraph::new(alpha, 3, &[(0, 1, Letter(0)), (0, 2, Letter(0))]).unwrap();
        assert!(!g.is_e_graph());
    }

    #[test]
    fn quotient_and_union() {
        let se = LabelledGraph::build_graph(&["u", "v"], &[("e", "u", "v")]).unwrap();
        let id = GraphCongruence::identity(&se);
        let q = se.quotient(&id);
        assert!(q.graph.isomorphism_to(&se).is_some());
        let both = LabelledGraph::disjoint_union(&[&se, &se]).unwrap();
        assert_eq!(both.vertex_count(), 4);
        assert_eq!(both.component_labels(both.alphabet().all()).1, 2);
        // identifying the two edges forces their endpoints together
        let theta = GraphCongruence::generated(&both, &[], &[(EdgeId(0), EdgeId(2))]).unwrap();
        let q = both.quotient(&theta);
        assert_eq!(q.graph.vertex_count(), 2);
        assert_eq!(q.graph.positive_edge_count(), 1);
        assert!(GraphCongruence::from_labels(&both, vec![0, 1, 2, 3], vec![0, 0]).is_err());
    }

    #[test]
    fn isomorphism_of_renamed_cycle() {
        let a = LabelledGraph::build_graph(&["u", "v"], &[("e", "u", "v"), ("f", "v", "u")]).unwrap();
        let b = LabelledGraph::build_graph(&["x", "y"], &[("e", "y", "x"), ("f", "x", "y")]).unwrap();
        let iso = a.isomorphism_to(&b).unwrap();
        assert_eq!(iso.vertex_map, vec![VertexId(1), VertexId(0)]);
        let c = LabelledGraph::build_graph(&["x", "y"], &[("e", "y", "x"), ("f", "y", "x")]).unwrap();
        assert!(a.isomorphism_to(&c).is_none());
    }

    #[test]
    fn letter_set_order() {
        let s = LetterSet::full(3);
        let subs: Vec<u64> = s.subsets().iter().map(|x| x.0).collect();
        assert_eq!(subs, vec![0, 1, 2, 4, 3, 5, 6, 7]);
        assert_eq!(s.proper_subsets().len(), 7);
        assert_eq!(LetterSet(0b1010).rank(Letter(3)), Some(1));
    }

    #[test]
    fn oriented_automorphisms_of_symmetric_path() {
        let g = LabelledGraph::build_graph(&["u", "v", "w"], &[("a", "u", "v"), ("b", "w", "v")]).unwrap();
        let auts = oriented_automorphisms(&g, 100);
        assert_eq!(auts.len(), 2);
        assert!(auts.iter().any(|a| a.edge_map == vec![1, 0]));
        let loops = LabelledGraph::build_graph(&["u"], &[("a", "u", "u"), ("b", "u", "u")]).unwrap();
        assert_eq!(oriented_automorphisms(&loops, 100).len(), 2);
    }
}
