//! The ascending chain of complete E-graphs `X₁ ⊆ Y₁ ⊆ X₂ ⊆ …` over an
//! oriented input graph, its transition groups `G₁ ↞ H₁ ↞ G₂ ↞ …`, the
//! per-level condition checks, and the rewriting of path words into words
//! over their content.

use std::collections::{HashMap, HashSet, VecDeque};
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::cosetext::{
    self, augment, cluster, coset_extension, coset_extension_full, has_cluster_property, is_admissible,
    is_bridge_free, CosetContext, CosetError, EmbeddedGraph, DEFAULT_VERTEX_BUDGET,
};
use crate::egroup::{
    extend_automorphism, random_word, EGroup, Expansion, GroupError, Perm, DEFAULT_ELEMENT_BUDGET,
};
use crate::sgraph::{
    oriented_automorphisms, EdgeId, GraphError, IsoClasses, LabelledGraph, Letter, LetterSet, SignedLetter,
    VertexId, Word,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TowerError {
    #[error("invalid input graph: {0}")]
    Input(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Coset(#[from] CosetError),
    #[error("word does not form a path in the input graph from vertex {0}")]
    NotAPath(u32),
    #[error("tower stops at level {built}; level {needed} is required")]
    Truncated { built: usize, needed: usize },
    #[error("construction check failed: {0}")]
    CheckFailed(String),
}

impl TowerError {
    /// Whether the error is a resource limit rather than a defect.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            TowerError::Group(GroupError::BudgetExceeded { .. })
                | TowerError::Coset(CosetError::Group(GroupError::BudgetExceeded { .. }))
                | TowerError::Coset(CosetError::VertexBudget { .. })
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerConfig {
    pub max_level: usize,
    pub element_budget: usize,
    pub vertex_budget: usize,
    /// Length of the cycle each non-loop edge is completed to in `X₁`.
    pub cycle_len: usize,
    /// Build `Z_k` from the single-subset extensions only (experimental).
    pub lean: bool,
}

impl Default for TowerConfig {
    fn default() -> Self {
        TowerConfig {
            max_level: usize::MAX,
            element_budget: DEFAULT_ELEMENT_BUDGET,
            vertex_budget: DEFAULT_VERTEX_BUDGET,
            cycle_len: 2,
            lean: false,
        }
    }
}

/// A named boolean check.
#[derive(Clone, Debug, Serialize)]
pub struct Flag {
    pub name: String,
    pub holds: bool,
}

/// Checks on the full coset extension over one cover.
#[derive(Clone, Debug, Serialize)]
pub struct CoverCheck {
    pub letters: String,
    pub component: usize,
    pub cover_vertices: usize,
    /// How many base choices produced this cover up to isomorphism.
    pub multiplicity: usize,
    pub admissible: bool,
    pub embedding: Option<bool>,
    pub bridge_free: Option<bool>,
    pub cluster_property: Option<bool>,
    pub witness: Option<String>,
}

impl CoverCheck {
    pub fn passes(&self) -> bool {
        self.admissible
            && self.embedding != Some(false)
            && self.bridge_free != Some(false)
            && self.cluster_property != Some(false)
    }
}

/// The conditions verified at one level.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CondReport {
    pub k: usize,
    /// Retractability and stability flags.
    pub flags: Vec<Flag>,
    /// `G_k`-covers of components of `⟨B⟩`, `|B| ≤ k`.
    pub covers: Vec<CoverCheck>,
    /// `H_k`-covers of components of `⟨A⟩`, `|A| = k + 1`, used for `Z_k`.
    pub upward: Vec<CoverCheck>,
}

impl CondReport {
    pub fn all_pass(&self) -> bool {
        self.flags.iter().all(|f| f.holds)
            && self.covers.iter().all(CoverCheck::passes)
            && self.upward.iter().all(CoverCheck::passes)
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self.flags.iter().filter(|f| !f.holds).map(|f| f.name.clone()).collect();
        for c in self.covers.iter().chain(&self.upward).filter(|c| !c.passes()) {
            out.push(format!(
                "cover of component {} of <{}>: {}",
                c.component,
                c.letters,
                c.witness.clone().unwrap_or_else(|| "check failed".into())
            ));
        }
        out
    }
}

/// One level of the chain.
#[derive(Debug)]
pub struct TowerLevel {
    pub k: usize,
    pub x: LabelledGraph,
    pub g: EGroup,
    pub y: Option<LabelledGraph>,
    pub h: Option<EGroup>,
    pub g_order: Option<usize>,
    pub h_order: Option<usize>,
    /// Number of pairwise non-isomorphic components of `Z_k`.
    pub z_components: usize,
    pub cond: CondReport,
    pub millis: u128,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TowerStatus {
    Verified,
    Truncated,
    Failed,
}

impl TowerStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            TowerStatus::Verified => 0,
            TowerStatus::Failed => 1,
            TowerStatus::Truncated => 2,
        }
    }
}

/// The chain built from one input graph.
#[derive(Debug)]
pub struct Tower {
    pub input: LabelledGraph,
    pub config: TowerConfig,
    pub levels: Vec<TowerLevel>,
    pub truncated: Option<String>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSummary {
    pub k: usize,
    pub x_vertices: usize,
    pub g_order: Option<usize>,
    pub y_vertices: Option<usize>,
    pub h_order: Option<usize>,
    pub z_components: usize,
    pub cond: CondReport,
    pub millis: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerReport {
    pub status: TowerStatus,
    pub edges: usize,
    pub vertices: usize,
    pub certified_grade: usize,
    pub lean: bool,
    pub truncated: Option<String>,
    pub failure: Option<String>,
    pub levels: Vec<LevelSummary>,
}

impl Tower {
    /// The group of the top level.
    pub fn group(&self) -> &EGroup {
        &self.levels.last().expect("at least one level").g
    }

    pub fn edge_count(&self) -> usize {
        self.input.positive_edge_count()
    }

    /// Largest `m` such that the top group is certified for words with at
    /// most `m` content letters.
    pub fn certified_grade(&self) -> usize {
        self.levels.last().map_or(0, |l| l.k)
    }

    pub fn status(&self) -> TowerStatus {
        if self.failure.is_some() || self.levels.iter().any(|l| !l.cond.all_pass()) {
            TowerStatus::Failed
        } else if self.truncated.is_some() || self.certified_grade() < self.edge_count() {
            TowerStatus::Truncated
        } else {
            TowerStatus::Verified
        }
    }

    pub fn report(&self) -> TowerReport {
        TowerReport {
            status: self.status(),
            edges: self.edge_count(),
            vertices: self.input.vertex_count(),
            certified_grade: self.certified_grade(),
            lean: self.config.lean,
            truncated: self.truncated.clone(),
            failure: self.failure.clone(),
            levels: self
                .levels
                .iter()
                .map(|l| LevelSummary {
                    k: l.k,
                    x_vertices: l.x.vertex_count(),
                    g_order: l.g_order,
                    y_vertices: l.y.as_ref().map(LabelledGraph::vertex_count),
                    h_order: l.h_order,
                    z_components: l.z_components,
                    cond: l.cond.clone(),
                    millis: l.millis,
                })
                .collect(),
        }
    }

    /// `H_k`, if built.
    pub fn h(&self, k: usize) -> Option<&EGroup> {
        self.levels.get(k.checked_sub(1)?)?.h.as_ref()
    }
}

/// Checks that each letter names exactly one edge and the graph is connected.
pub fn validate_input(input: &LabelledGraph) -> Result<(), TowerError> {
    if input.vertex_count() == 0 {
        return Err(TowerError::Input("graph has no vertices".into()));
    }
    if input.positive_edge_count() != input.alphabet().len() {
        return Err(TowerError::Input("every edge must carry its own letter".into()));
    }
    for e in input.positive_edges() {
        if input.letter_of(e).index() != e.pair() {
            return Err(TowerError::Input("edge i must carry letter i".into()));
        }
    }
    if !input.is_connected() {
        return Err(TowerError::Input("graph is not connected".into()));
    }
    Ok(())
}

/// Completes every non-loop edge to an `n`-cycle and then trivially.
pub fn build_x1(input: &LabelledGraph, cycle_len: usize) -> Result<LabelledGraph, TowerError> {
    validate_input(input)?;
    if cycle_len < 2 {
        return Err(TowerError::Input(format!("cycle length {cycle_len} is below 2")));
    }
    let mut triples = input.edge_triples();
    let mut n = input.vertex_count() as u32;
    for &(s, d, a) in &input.edge_triples() {
        if s == d {
            continue;
        }
        // d -> m₁ -> … -> s through cycle_len - 2 new vertices
        let mut prev = d;
        for _ in 0..cycle_len - 2 {
            triples.push((prev, n, a));
            prev = n;
            n += 1;
        }
        triples.push((prev, s, a));
    }
    let f = LabelledGraph::new(input.alphabet().clone(), n as usize, &triples)?;
    Ok(f.trivial_completion()?)
}

fn union(parts: &[&LabelledGraph]) -> Result<LabelledGraph, TowerError> {
    let alphabet = parts[0].alphabet().clone();
    let mut triples = Vec::new();
    let mut offset = 0u32;
    for g in parts {
        triples.extend(g.edge_triples().into_iter().map(|(s, d, a)| (s + offset, d + offset, a)));
        offset += g.vertex_count() as u32;
    }
    Ok(LabelledGraph::new(alphabet, offset as usize, &triples)?)
}

/// `Y_k = X_k ⊔ ⨆ completion(𝒢_k[A])`, `|A| = k`.
pub fn build_y(x: &LabelledGraph, g: &EGroup, k: usize, config: &TowerConfig) -> Result<LabelledGraph, TowerError> {
    let mut parts = vec![x.clone()];
    let mut total = x.vertex_count();
    for a in g.alphabet().all().subsets_of_size(k) {
        let c = g.cayley_graph(a, config.element_budget)?.trivial_completion()?;
        total += c.vertex_count();
        if total > config.vertex_budget {
            return Err(CosetError::VertexBudget { count: total }.into());
        }
        parts.push(c);
    }
    union(&parts.iter().collect::<Vec<_>>())
}

/// Vertex sets of the components of the subgraph spanned by the edges in `letters`.
pub fn span_components(input: &LabelledGraph, letters: LetterSet) -> Vec<Vec<VertexId>> {
    let (labels, count) = input.component_labels(letters);
    let mut comps = vec![Vec::new(); count];
    let mut touched = vec![false; input.vertex_count()];
    for a in letters.iter() {
        let e = EdgeId::positive(a.index());
        touched[input.alpha(e).index()] = true;
        touched[input.omega(e).index()] = true;
    }
    for v in input.vertices().filter(|v| touched[v.index()]) {
        comps[labels[v.index()] as usize].push(v);
    }
    comps.into_iter().filter(|c| !c.is_empty()).collect()
}

/// The cover of `⟨letters⟩` through the identity of `group`, for the
/// canonical morphism sending the identity to input vertex `base`.
pub fn cover(
    group: &EGroup,
    input: &LabelledGraph,
    letters: LetterSet,
    base: VertexId,
    budget: usize,
) -> Result<EmbeddedGraph, TowerError> {
    let ends: Vec<(Letter, u32, u32)> = letters
        .iter()
        .map(|a| {
            let e = EdgeId::positive(a.index());
            (a, input.alpha(e).0, input.omega(e).0)
        })
        .collect();
    let mut elements = vec![group.identity()];
    let mut index: HashMap<Perm, u32> = HashMap::from([(group.identity(), 0)]);
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([0u32]);
    while let Some(i) = queue.pop_front() {
        let h = elements[i as usize].clone();
        let at = h.apply(base.0);
        for &(a, s, d) in &ends {
            for (inverse, from) in [(false, s), (true, d)] {
                if at != from {
                    continue;
                }
                let t = h.then(group.letter(SignedLetter { letter: a, inverse }));
                let j = match index.get(&t) {
                    Some(&j) => j,
                    None => {
                        let j = elements.len() as u32;
                        if elements.len() >= budget {
                            return Err(GroupError::BudgetExceeded { count: elements.len() }.into());
                        }
                        index.insert(t.clone(), j);
                        elements.push(t);
                        queue.push_back(j);
                        j
                    }
                };
                edges.push(if inverse { (j, a) } else { (i, a) });
            }
        }
    }
    Ok(EmbeddedGraph::new(group, elements, &edges)?)
}

/// All covers of one component over every base choice, up to isomorphism,
/// with the number of base choices producing each.
pub fn enumerate_covers(
    group: &EGroup,
    input: &LabelledGraph,
    letters: LetterSet,
    component: &[VertexId],
    budget: usize,
) -> Result<Vec<(EmbeddedGraph, usize)>, TowerError> {
    let mut classes = IsoClasses::new();
    let mut reps = Vec::new();
    for &u in component {
        let c = cover(group, input, letters, u, budget)?;
        let (_, new) = classes.insert(c.graph.clone());
        if new {
            reps.push(c);
        }
    }
    Ok(reps.into_iter().zip(classes.multiplicities().iter().copied()).collect())
}

fn budget_or<T>(r: Result<T, CosetError>) -> Result<Result<T, CosetError>, TowerError> {
    match r {
        Err(e @ CosetError::VertexBudget { .. }) | Err(e @ CosetError::Group(GroupError::BudgetExceeded { .. })) => {
            Err(e.into())
        }
        other => Ok(other),
    }
}

/// Admissibility of one cover and, for the full extension over it, either
/// embedding and bridge-freeness (`upward == false`) or the cluster property.
fn check_cover(
    ctx: &CosetContext,
    letters: LetterSet,
    component: usize,
    cov: &EmbeddedGraph,
    multiplicity: usize,
    upward: bool,
) -> Result<(CoverCheck, Option<cosetext::CosetExtension>), TowerError> {
    let alphabet = ctx.group().alphabet();
    let mut check = CoverCheck {
        letters: alphabet.format_set(letters),
        component,
        cover_vertices: cov.graph.vertex_count(),
        multiplicity,
        admissible: false,
        embedding: None,
        bridge_free: None,
        cluster_property: None,
        witness: None,
    };
    let adm = budget_or(is_admissible(ctx, letters, cov))??;
    check.admissible = adm.admissible;
    if !adm.admissible {
        check.witness = adm.witness;
        return Ok((check, None));
    }
    let ce = match budget_or(coset_extension_full(ctx, letters, cov))? {
        Ok(ce) => ce,
        Err(e) => {
            check.witness = Some(e.to_string());
            return Ok((check, None));
        }
    };
    if !upward {
        check.embedding = Some(ce.morphism().injective);
        let bridge = budget_or(is_bridge_free(ctx, &ce))??;
        check.bridge_free = Some(bridge.bridge_free);
        if !bridge.bridge_free {
            check.witness = bridge.witness;
        }
    } else {
        let cp = budget_or(has_cluster_property(ctx, &ce))??;
        check.cluster_property = Some(cp.holds);
        if let Some(w) = cp.witness {
            check.witness = Some(format!("{:?}-component {:?}: {}", w.subset, w.vertices, w.reason));
        }
    }
    Ok((check, Some(ce)))
}

/// Augments `graph` at one vertex of every `B`-component for every `B ⊊ letters`.
fn augment_everywhere(
    ctx: &CosetContext,
    graph: &LabelledGraph,
    letters: LetterSet,
    out: &mut IsoClasses,
) -> Result<(), TowerError> {
    out.insert(graph.clone());
    for b in letters.proper_subsets().into_iter().filter(|b| !b.is_empty()) {
        let (labels, count) = graph.component_labels(b);
        let mut done = vec![false; count];
        for v in graph.vertices() {
            if std::mem::replace(&mut done[labels[v.index()] as usize], true) {
                continue;
            }
            let aug = augment(ctx, graph, v, b)?;
            if aug.graph.vertex_count() > ctx.vertex_budget() {
                return Err(CosetError::VertexBudget { count: aug.graph.vertex_count() }.into());
            }
            out.insert(aug.graph);
        }
    }
    Ok(())
}

/// Antichains of proper subsets of `letters`.
pub fn cluster_families(letters: LetterSet) -> Vec<Vec<LetterSet>> {
    let subs = letters.proper_subsets();
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << subs.len()) {
        let fam: Vec<LetterSet> = (0..subs.len()).filter(|i| mask >> i & 1 == 1).map(|i| subs[i]).collect();
        if fam.iter().all(|&x| fam.iter().all(|&y| x == y || !x.is_subset(y))) {
            out.push(fam);
        }
    }
    out
}

/// All augmented clusters of `G[letters]`, up to isomorphism.
pub fn augmented_clusters(ctx: &CosetContext, letters: LetterSet) -> Result<IsoClasses, TowerError> {
    let mut out = IsoClasses::new();
    for fam in cluster_families(letters) {
        let cl = cluster(ctx, letters, &fam)?;
        augment_everywhere(ctx, cl.graph(), letters, &mut out)?;
    }
    Ok(out)
}

/// Closes every maximal path of each letter into a cycle.
pub fn close_chains(g: &LabelledGraph) -> Result<LabelledGraph, TowerError> {
    let mut triples = g.edge_triples();
    for a in g.used_letters().iter() {
        let s = SignedLetter::pos(a);
        for v in g.vertices() {
            if g.step(v, s).is_none() || g.step(v, s.inv()).is_some() {
                continue;
            }
            let mut end = v;
            while let Some(w) = g.step(end, s) {
                end = w;
            }
            triples.push((end.0, v.0, a));
        }
    }
    Ok(LabelledGraph::new(g.alphabet().clone(), g.vertex_count(), &triples)?)
}

/// The components of `Z_k` built over `H_k`, with the upward checks.
pub fn build_z(
    h: &EGroup,
    input: &LabelledGraph,
    k: usize,
    config: &TowerConfig,
) -> Result<(Vec<LabelledGraph>, Vec<CoverCheck>), TowerError> {
    let ctx = CosetContext::new(h, config.element_budget).with_vertex_budget(config.vertex_budget);
    let mut items = IsoClasses::new();
    let mut checks = Vec::new();
    for a in input.alphabet().all().subsets_of_size(k + 1) {
        if !ctx.is_a_retractable(a)? {
            return Err(TowerError::CheckFailed(format!(
                "H_{k} is not {}-retractable",
                h.alphabet().format_set(a)
            )));
        }
        if !config.lean {
            for fam in cluster_families(a) {
                let cl = cluster(&ctx, a, &fam)?;
                augment_everywhere(&ctx, cl.graph(), a, &mut items)?;
            }
        }
        for (ci, comp) in span_components(input, a).iter().enumerate() {
            for (cov, mult) in enumerate_covers(h, input, a, comp, config.element_budget)? {
                if config.lean {
                    for b in a.subsets_of_size(a.len() - 1) {
                        let ce = coset_extension(&ctx, a, &cov, &[b])?;
                        items.insert(close_chains(&ce.graph)?);
                    }
                    continue;
                }
                let (check, ce) = check_cover(&ctx, a, ci, &cov, mult, true)?;
                let ok = check.passes();
                let witness = check.witness.clone();
                checks.push(check);
                let Some(ce) = ce.filter(|_| ok) else {
                    return Err(TowerError::CheckFailed(format!(
                        "full extension over a cover of <{}>: {}",
                        h.alphabet().format_set(a),
                        witness.unwrap_or_default()
                    )));
                };
                augment_everywhere(&ctx, &ce.graph, a, &mut items)?;
            }
        }
    }
    Ok((items.into_representatives(), checks))
}

/// `G_k`-cover checks for every `B` with `1 ≤ |B| ≤ k`.
pub fn check_covers(g: &EGroup, input: &LabelledGraph, k: usize, config: &TowerConfig) -> Result<Vec<CoverCheck>, TowerError> {
    let ctx = CosetContext::new(g, config.element_budget).with_vertex_budget(config.vertex_budget);
    let mut out = Vec::new();
    for size in 1..=k {
        for b in input.alphabet().all().subsets_of_size(size) {
            for (ci, comp) in span_components(input, b).iter().enumerate() {
                for (cov, mult) in enumerate_covers(g, input, b, comp, config.element_budget)? {
                    out.push(check_cover(&ctx, b, ci, &cov, mult, false)?.0);
                }
            }
        }
    }
    Ok(out)
}

fn flag(name: impl Into<String>, holds: bool) -> Flag {
    Flag { name: name.into(), holds }
}

/// Both groups yield the same augmented clusters over every `|A| = k`.
fn clusters_agree(h: &EGroup, g: &EGroup, k: usize, config: &TowerConfig) -> Result<bool, TowerError> {
    let hc = CosetContext::new(h, config.element_budget).with_vertex_budget(config.vertex_budget);
    let gc = CosetContext::new(g, config.element_budget).with_vertex_budget(config.vertex_budget);
    for a in h.alphabet().all().subsets_of_size(k) {
        let x = augmented_clusters(&hc, a)?;
        let y = augmented_clusters(&gc, a)?;
        if x.len() != y.len() {
            return Ok(false);
        }
        let mut z = IsoClasses::new();
        for r in x.representatives() {
            z.insert(r.clone());
        }
        for r in y.representatives() {
            if z.insert(r.clone()).1 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

struct Pending {
    k: usize,
    x: LabelledGraph,
    g: EGroup,
    flags: Vec<Flag>,
}

/// Builds the chain up to `min(max_level, |E|)`, stopping early on budget.
pub fn build_chain(input: &LabelledGraph, config: &TowerConfig) -> Result<Tower, TowerError> {
    let x1 = build_x1(input, config.cycle_len)?;
    let g1 = EGroup::transition_group(&x1)?;
    let top = input.positive_edge_count().min(config.max_level).max(1);
    let mut tower =
        Tower { input: input.clone(), config: config.clone(), levels: Vec::new(), truncated: None, failure: None };
    let mut pending = Some(Pending { k: 1, x: x1, g: g1, flags: Vec::new() });
    while let Some(p) = pending.take() {
        let start = Instant::now();
        let budget = config.element_budget;
        let mut level = TowerLevel {
            k: p.k,
            x: p.x,
            g: p.g,
            y: None,
            h: None,
            g_order: None,
            h_order: None,
            z_components: 0,
            cond: CondReport { k: p.k, flags: p.flags, ..CondReport::default() },
            millis: 0,
        };
        let k = level.k;
        let mut checked = false;
        let step = (|| -> Result<Option<Pending>, TowerError> {
            level.g_order = level.g.order(budget).ok();
            level.cond.flags.push(flag(format!("G_{k} is {k}-retractable"), level.g.is_k_retractable(k, budget)?));
            level.cond.covers = check_covers(&level.g, input, k, config)?;
            checked = true;
            if k >= top {
                return Ok(None);
            }
            let y = build_y(&level.x, &level.g, k, config)?;
            let h = EGroup::transition_group(&y)?;
            level.h_order = h.order(budget).ok();
            let ex = Expansion::new(&h, &level.g)?;
            level.cond.flags.push(flag(format!("G_{k} is the restriction of H_{k}"), ex.is_prefix_restriction()));
            level.cond.flags.push(flag(format!("H_{k} -> G_{k} is {k}-stable"), ex.is_k_stable(k, budget)?));
            level.cond.flags.push(flag(format!("H_{k} is {}-retractable", k + 1), h.is_k_retractable(k + 1, budget)?));
            level.y = Some(y);
            level.h = Some(h);
            let h = level.h.as_ref().unwrap();
            let (z, upward) = build_z(h, input, k, config)?;
            level.cond.upward = upward;
            level.z_components = z.len();
            let mut parts = vec![level.y.clone().unwrap()];
            let mut total = parts[0].vertex_count();
            for c in &z {
                let c = c.trivial_completion()?;
                total += c.vertex_count();
                if total > config.vertex_budget {
                    return Err(CosetError::VertexBudget { count: total }.into());
                }
                parts.push(c);
            }
            let x_next = union(&parts.iter().collect::<Vec<_>>())?;
            let g_next = EGroup::transition_group(&x_next)?;
            let ex = Expansion::new(&g_next, h)?;
            let mut flags = vec![
                flag(format!("H_{k} is the restriction of G_{}", k + 1), ex.is_prefix_restriction()),
                flag(format!("G_{} -> H_{k} is {k}-stable", k + 1), (1..=k).try_fold(true, |acc, j| {
                    Ok::<bool, TowerError>(acc && ex.is_k_stable(j, budget)?)
                })?),
            ];
            if !config.lean {
                flags.push(flag(
                    format!("clusters of H_{k} and G_{} agree over {}-sets", k + 1, k),
                    clusters_agree(h, &g_next, k, config)?,
                ));
            }
            Ok(Some(Pending { k: k + 1, x: x_next, g: g_next, flags }))
        })();
        level.millis = start.elapsed().as_millis();
        tower.levels.push(level);
        match step {
            Ok(next) => pending = next,
            Err(e) if e.is_budget() => {
                tower.truncated = Some(format!("level {k}: {e}"));
                if !checked && k > 1 {
                    tower.levels.pop();
                }
            }
            Err(e) => tower.failure = Some(format!("level {k}: {e}")),
        }
    }
    Ok(tower)
}

/// Whether `p` forms a path from `u` in the input graph; returns its end.
pub fn walk(input: &LabelledGraph, u: VertexId, p: &Word) -> Option<VertexId> {
    let mut at = u;
    for s in &p.0 {
        let e = EdgeId::positive(s.letter.index());
        let (from, to) = if s.inverse { (input.omega(e), input.alpha(e)) } else { (input.alpha(e), input.omega(e)) };
        if from != at {
            return None;
        }
        at = to;
    }
    Some(at)
}

/// A path word of length `0..=max_len` from `u` using only `letters`.
pub fn random_path<R: Rng>(rng: &mut R, input: &LabelledGraph, u: VertexId, letters: LetterSet, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    let mut at = u;
    let mut w = Word::empty();
    for _ in 0..len {
        let moves: Vec<(SignedLetter, VertexId)> = letters
            .iter()
            .flat_map(|a| {
                let e = EdgeId::positive(a.index());
                let mut m = Vec::new();
                if input.alpha(e) == at {
                    m.push((SignedLetter::pos(a), input.omega(e)));
                }
                if input.omega(e) == at {
                    m.push((SignedLetter::neg(a), input.alpha(e)));
                }
                m
            })
            .collect();
        if moves.is_empty() {
            break;
        }
        let (s, to) = moves[rng.gen_range(0..moves.len())];
        w.push(s);
        at = to;
    }
    w
}

/// Rewrites a path word `u → v` into one over the content of its value in
/// `group`, still forming a path `u → v`, using the covers of the chain.
pub fn rewrite_to_content_path(tower: &Tower, group: &EGroup, u: VertexId, p: &Word) -> Result<Word, TowerError> {
    let input = &tower.input;
    let v = walk(input, u, p).ok_or(TowerError::NotAPath(u.0))?;
    let value = group.eval_word(p)?;
    let content = group.content(p);
    let mut q = p.clone();
    while !q.content().is_subset(content) {
        let a_set = q.content();
        if a_set.len() == 1 {
            // a single letter with empty content: the path is closed
            if u != v {
                return Err(TowerError::CheckFailed("closed path expected for empty content".into()));
            }
            q = Word::empty();
            break;
        }
        let k = a_set.len() - 1;
        let h = tower.h(k).ok_or(TowerError::Truncated { built: tower.certified_grade(), needed: k + 1 })?;
        let a = a_set.difference(content).iter().next().unwrap();
        let b = a_set.without(a);
        let budget = tower.config.element_budget;
        let cov = cover(h, input, a_set, u, budget)?;
        let target = h.eval_word(&q)?;
        let index: HashMap<&Perm, usize> = cov.elements.iter().enumerate().map(|(i, x)| (x, i)).collect();
        let Some(&goal) = index.get(&target) else {
            return Err(TowerError::CheckFailed("lifted path leaves the cover".into()));
        };
        // breadth-first search for a B-path 1 -> goal inside the cover
        let g = &cov.graph;
        let mut prev: Vec<Option<(VertexId, SignedLetter)>> = vec![None; g.vertex_count()];
        let mut seen = vec![false; g.vertex_count()];
        seen[0] = true;
        let mut queue = VecDeque::from([VertexId(0)]);
        while let Some(x) = queue.pop_front() {
            for &e in g.out_edges(x) {
                let y = g.omega(e);
                if b.contains(g.letter_of(e)) && !seen[y.index()] {
                    seen[y.index()] = true;
                    prev[y.index()] = Some((x, g.label(e)));
                    queue.push_back(y);
                }
            }
        }
        if !seen[goal] {
            return Err(TowerError::CheckFailed(format!(
                "end of the lifted path is not in the {}-component of the identity",
                input.alphabet().format_set(b)
            )));
        }
        let mut letters = Vec::new();
        let mut at = VertexId(goal as u32);
        while let Some((x, s)) = prev[at.index()] {
            letters.push(s);
            at = x;
        }
        letters.reverse();
        q = Word(letters);
    }
    if group.eval_word(&q)? != value || walk(input, u, &q) != Some(v) {
        return Err(TowerError::CheckFailed("rewritten word does not match".into()));
    }
    Ok(q)
}

/// Counters of one sampling run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SuiteReport {
    pub samples: usize,
    /// Samples where the property had something to check.
    pub effective: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn random_letters<R: Rng>(rng: &mut R, all: LetterSet, max_content: usize) -> LetterSet {
    let letters: Vec<Letter> = all.iter().collect();
    let size = rng.gen_range(1..=max_content.min(letters.len()).max(1));
    let mut chosen = LetterSet::EMPTY;
    while chosen.len() < size.min(letters.len()) {
        chosen = chosen.with(letters[rng.gen_range(0..letters.len())]);
    }
    chosen
}

/// The order of a permutation.
fn perm_order(p: &Perm) -> usize {
    let mut seen = vec![false; p.degree()];
    let mut order = 1usize;
    for x in 0..p.degree() {
        if seen[x] {
            continue;
        }
        let mut len = 0;
        let mut y = x;
        while !seen[y] {
            seen[y] = true;
            y = p.apply(y as u32) as usize;
            len += 1;
        }
        order = num_lcm(order, len);
    }
    order
}

fn num_lcm(a: usize, b: usize) -> usize {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

/// A relator `x r^m x⁻¹` with `m` the order of `r`, over at most
/// `max_content` letters.
pub fn random_relator<R: Rng>(rng: &mut R, g: &EGroup, max_len: usize, max_content: usize) -> Word {
    let letters: Vec<Letter> = random_letters(rng, g.alphabet().all(), max_content).iter().collect();
    let x = random_word(rng, &letters, max_len / 3);
    let r = random_word(rng, &letters, max_len / 3 + 1);
    let m = perm_order(&g.eval_word(&r).expect("word over the alphabet"));
    let mut w = x.clone();
    for _ in 0..m {
        w = w.concat(&r);
    }
    w.concat(&x.inverse())
}

/// Relations are closed under deleting letters: random words and relators.
pub fn deletion_suite<R: Rng>(rng: &mut R, g: &EGroup, samples: usize, max_len: usize, max_content: usize) -> SuiteReport {
    let mut rep = SuiteReport { samples, ..SuiteReport::default() };
    for i in 0..samples {
        let p = if i % 2 == 0 {
            let letters: Vec<Letter> = random_letters(rng, g.alphabet().all(), max_content).iter().collect();
            random_word(rng, &letters, max_len)
        } else {
            random_relator(rng, g, max_len, max_content)
        };
        if !g.eval_word(&p).expect("word over the alphabet").is_identity() {
            continue;
        }
        rep.effective += 1;
        for a in p.content().iter() {
            let d = p.delete_letters(LetterSet::singleton(a));
            if !g.eval_word(&d).expect("word over the alphabet").is_identity() {
                rep.failures.push(format!(
                    "{} = 1 but deleting {} gives a non-identity",
                    p.display(g.alphabet()),
                    g.alphabet().name(a)
                ));
            }
        }
    }
    rep
}

/// Empty content forces closed paths, and every sampled path word rewrites
/// to an equivalent path over its content.
pub fn content_path_suite<R: Rng>(
    rng: &mut R,
    tower: &Tower,
    g: &EGroup,
    samples: usize,
    max_len: usize,
    max_content: usize,
) -> SuiteReport {
    let input = &tower.input;
    let mut rep = SuiteReport { samples, ..SuiteReport::default() };
    for _ in 0..samples {
        let letters = random_letters(rng, input.alphabet().all(), max_content);
        let starts: Vec<VertexId> = span_components(input, letters).into_iter().flatten().collect();
        let u = starts[rng.gen_range(0..starts.len())];
        let p = random_path(rng, input, u, letters, max_len);
        let v = walk(input, u, &p).expect("sampled paths are paths");
        let value = g.eval_word(&p).expect("word over the alphabet");
        let content = g.content(&p);
        if content.is_empty() && u != v {
            rep.failures.push(format!("{} has empty content but is not closed", p.display(input.alphabet())));
            continue;
        }
        match rewrite_to_content_path(tower, g, u, &p) {
            Ok(q) => {
                // independent re-verification
                let ok = walk(input, u, &q) == Some(v)
                    && g.eval_word(&q).expect("word over the alphabet") == value
                    && q.content().is_subset(content)
                    && (!content.is_empty() || q.is_empty());
                if !ok {
                    rep.failures.push(format!("rewrite of {} failed re-verification", p.display(input.alphabet())));
                }
                if q != p {
                    rep.effective += 1;
                }
            }
            Err(e) => rep.failures.push(format!("rewrite of {}: {e}", p.display(input.alphabet()))),
        }
    }
    rep
}

/// Every automorphism of the oriented input extends to the group and
/// commutes with evaluation on sampled words.
pub fn symmetry_suite<R: Rng>(rng: &mut R, input: &LabelledGraph, g: &EGroup, samples: usize) -> SuiteReport {
    let autos = oriented_automorphisms(input, 1000);
    let mut rep = SuiteReport { samples: samples * autos.len(), ..SuiteReport::default() };
    let letters: Vec<Letter> = g.alphabet().letters().collect();
    for auto in &autos {
        let map: Vec<Letter> = auto.edge_map.iter().map(|&j| Letter(j as u32)).collect();
        let Some(phi) = extend_automorphism(g, &map) else {
            rep.failures.push(format!("letter map {map:?} does not extend"));
            continue;
        };
        for _ in 0..samples {
            let w = random_word(rng, &letters, 12);
            let lhs = phi.apply(&g.eval_word(&w).expect("word over the alphabet"));
            let rhs = g.eval_word(&phi.map_word(&w)).expect("word over the alphabet");
            rep.effective += 1;
            if lhs != rhs {
                rep.failures.push(format!("automorphism disagrees on {}", w.display(g.alphabet())));
            }
        }
    }
    rep
}

/// Distinct loop-free check: loop letters evaluate to the identity.
pub fn loops_trivial(input: &LabelledGraph, g: &EGroup) -> bool {
    input
        .positive_edges()
        .filter(|&e| input.alpha(e) == input.omega(e))
        .all(|e| g.generator(input.letter_of(e)).is_identity())
}

/// Vertices of an input graph touched by a set of letters.
pub fn touched(input: &LabelledGraph, letters: LetterSet) -> HashSet<VertexId> {
    span_components(input, letters).into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn se() -> LabelledGraph {
        LabelledGraph::build_graph(&["u", "v"], &[("e", "u", "v")]).unwrap()
    }

    fn sl() -> LabelledGraph {
        LabelledGraph::build_graph(&["u"], &[("e", "u", "u")]).unwrap()
    }

    fn p2() -> LabelledGraph {
        LabelledGraph::build_graph(&["u", "v", "w"], &[("a", "u", "v"), ("b", "v", "w")]).unwrap()
    }

    #[test]
    fn x1_examples() {
        let x = build_x1(&se(), 2).unwrap();
        assert_eq!(x.vertex_count(), 2);
        let g = EGroup::transition_group(&x).unwrap();
        assert_eq!(g.generator(Letter(0)).images(), &[1, 0]);
        let x = build_x1(&sl(), 2).unwrap();
        assert_eq!(x.vertex_count(), 1);
        let x = build_x1(&p2(), 2).unwrap();
        assert!(x.is_complete());
        // b-loop at u, a-loop at w
        assert_eq!(x.step(VertexId(0), SignedLetter::pos(Letter(1))), Some(VertexId(0)));
        assert_eq!(x.step(VertexId(2), SignedLetter::pos(Letter(0))), Some(VertexId(2)));
        let x3 = build_x1(&se(), 3).unwrap();
        assert_eq!(x3.vertex_count(), 3);
        assert!(build_x1(&se(), 1).is_err());
        let disconnected = LabelledGraph::build_graph(&["u", "v", "w"], &[("e", "u", "v")]).unwrap();
        assert!(matches!(build_x1(&disconnected, 2), Err(TowerError::Input(_))));
    }

    #[test]
    fn y1_of_p2() {
        let x = build_x1(&p2(), 2).unwrap();
        let g = EGroup::transition_group(&x).unwrap();
        let y = build_y(&x, &g, 1, &TowerConfig::default()).unwrap();
        assert_eq!(y.vertex_count(), 3 + 2 + 2);
        assert!(y.is_complete());
    }

    #[test]
    fn single_edge_and_loop_towers() {
        let t = build_chain(&se(), &TowerConfig::default()).unwrap();
        assert_eq!(t.levels.len(), 1);
        assert_eq!(t.group().order(10).unwrap(), 2);
        assert_eq!(t.status(), TowerStatus::Verified);
        let t = build_chain(&sl(), &TowerConfig::default()).unwrap();
        assert_eq!(t.group().order(10).unwrap(), 1);
        assert!(loops_trivial(&t.input, t.group()));
    }

    #[test]
    fn cover_of_single_edge() {
        let x = build_x1(&se(), 2).unwrap();
        let g = EGroup::transition_group(&x).unwrap();
        let c = cover(&g, &se(), LetterSet(1), VertexId(0), 100).unwrap();
        assert_eq!(c.graph.vertex_count(), 2);
        assert_eq!(c.graph.positive_edge_count(), 1);
    }

    #[test]
    fn chain_closing() {
        let g = LabelledGraph::build_graph(&["u", "v", "w"], &[("a", "u", "v"), ("b", "v", "w")]).unwrap();
        let c = close_chains(&g).unwrap();
        assert!(c.is_weakly_complete());
        assert_eq!(c.positive_edge_count(), 4);
    }

    #[test]
    fn trivial_rewrites() {
        let t = build_chain(&se(), &TowerConfig::default()).unwrap();
        let g = t.group();
        let p = Word::parse(g.alphabet(), "e e^-1").unwrap();
        assert_eq!(rewrite_to_content_path(&t, g, VertexId(0), &p).unwrap(), Word::empty());
        let t = build_chain(&sl(), &TowerConfig::default()).unwrap();
        let p = Word::parse(t.group().alphabet(), "e e e^-1 e").unwrap();
        assert_eq!(rewrite_to_content_path(&t, t.group(), VertexId(0), &p).unwrap(), Word::empty());
        let bad = Word::parse(t.group().alphabet(), "e").unwrap();
        assert!(rewrite_to_content_path(&t, t.group(), VertexId(0), &bad).is_ok());
    }

    #[test]
    fn random_paths_are_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = p2();
        for _ in 0..50 {
            let p = random_path(&mut rng, &g, VertexId(1), LetterSet(3), 12);
            assert!(walk(&g, VertexId(1), &p).is_some());
        }
    }
}
