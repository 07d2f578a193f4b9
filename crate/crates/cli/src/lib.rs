//! Input parsing, command drivers and reports for the `fapprox` binary.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use fapprox_core::cosetext::{coset_extension_full, diagnose, CeDiagnostics, CosetContext, CosetError};
use fapprox_core::egroup::{EGroup, GroupError, DEFAULT_ELEMENT_BUDGET};
use fapprox_core::invmon::{cyclic_q, f_inverse_cover, regular_group, FCoverReport, InverseMonoid, InvmonError, MonoidError};
use fapprox_core::sgraph::{Alphabet, GraphError, LabelledGraph, Letter};
use fapprox_core::tower::{
    build_chain, content_path_suite, deletion_suite, enumerate_covers, span_components, symmetry_suite, SuiteReport,
    TowerConfig, TowerError, TowerReport, TowerStatus,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub const SCHEMA: &str = "fapprox-report/1";
pub const GRAPH_HEADER: &str = "fapprox-graph 1";
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_SAMPLES: usize = 500;
/// Maximal word length of sampled words.
pub const SAMPLE_LENGTH: usize = 12;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_TRUNCATED: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Monoid(#[from] MonoidError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Coset(#[from] CosetError),
    #[error(transparent)]
    Invmon(#[from] InvmonError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Text,
}

/// Where the group `Q` of the cover pipeline comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupSource {
    /// A group table with a `gens` line.
    Table(PathBuf),
    /// A labelled action graph; `Q` is its transition group.
    Graph(PathBuf),
    /// The cyclic group of the given order on one generator.
    Cyclic(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    Tower { input: PathBuf },
    Fcover { source: GroupSource },
    CheckMonoid { input: PathBuf },
    DiagnoseCe { input: PathBuf, level: usize },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Tower { .. } => "tower",
            Command::Fcover { .. } => "fcover",
            Command::CheckMonoid { .. } => "check-monoid",
            Command::DiagnoseCe { .. } => "diagnose-ce",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub max_level: usize,
    pub element_budget: usize,
    pub vertex_budget: usize,
    pub cycle_len: usize,
    pub samples: usize,
    pub seed: u64,
    pub lean: bool,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            max_level: usize::MAX,
            element_budget: DEFAULT_ELEMENT_BUDGET,
            vertex_budget: fapprox_core::cosetext::DEFAULT_VERTEX_BUDGET,
            cycle_len: 2,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            lean: false,
            out: None,
            format: Format::Text,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.element_budget == 0 || self.vertex_budget == 0 {
            return Err(CliError::Config("budgets must be positive".into()));
        }
        if self.cycle_len < 2 {
            return Err(CliError::Config("cycle length must be at least 2".into()));
        }
        if self.max_level == 0 {
            return Err(CliError::Config("max level must be positive".into()));
        }
        Ok(())
    }

    pub fn tower_config(&self) -> TowerConfig {
        TowerConfig {
            max_level: self.max_level,
            element_budget: self.element_budget,
            vertex_budget: self.vertex_budget,
            cycle_len: self.cycle_len,
            lean: self.lean,
        }
    }
}

/// One randomized suite.
#[derive(Clone, Debug, Serialize)]
pub struct NamedSuite {
    pub name: String,
    pub max_content: usize,
    #[serde(flatten)]
    pub report: SuiteReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerBody {
    pub tower: TowerReport,
    pub group_order: Option<usize>,
    pub suites: Vec<NamedSuite>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaSummary {
    pub members: Vec<u32>,
    pub maxima: Vec<u32>,
    pub greatest: Option<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonoidBody {
    pub size: usize,
    pub inverse_monoid: bool,
    pub idempotents: Vec<u32>,
    pub f_inverse: Option<bool>,
    pub sigma_classes: Vec<SigmaSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CeEntry {
    pub letters: String,
    pub component: usize,
    pub multiplicity: usize,
    pub passes: bool,
    pub diagnostics: CeDiagnostics,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnoseBody {
    pub level: usize,
    pub group_order: Option<usize>,
    pub extensions: Vec<CeEntry>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Body {
    Tower(Box<TowerBody>),
    Fcover(Box<FCoverReport>),
    Monoid(MonoidBody),
    Diagnose(DiagnoseBody),
    None {},
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: &'static str,
    pub status: &'static str,
    pub exit_code: i32,
    pub config: RunConfig,
    pub witnesses: Vec<String>,
    pub millis: u128,
    pub result: Body,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}: {}\n", self.command, self.status);
        match &self.result {
            Body::Tower(b) => {
                let t = &b.tower;
                let _ = writeln!(s, "certified grade {} of {}", t.certified_grade, t.edges);
                for l in &t.levels {
                    let _ = writeln!(
                        s,
                        "level {}: |X|={} |G|={} |Y|={} |H|={} Z={} cond {}",
                        l.k,
                        l.x_vertices,
                        opt(l.g_order),
                        opt(l.y_vertices),
                        opt(l.h_order),
                        l.z_components,
                        if l.cond.all_pass() { "pass" } else { "FAIL" }
                    );
                }
                for suite in &b.suites {
                    let _ = writeln!(
                        s,
                        "suite {} (content <= {}): {} samples, {} effective, {} failures",
                        suite.name,
                        suite.max_content,
                        suite.report.samples,
                        suite.report.effective,
                        suite.report.failures.len()
                    );
                }
            }
            Body::Fcover(r) => {
                let _ = writeln!(
                    s,
                    "|Q|={} |G|={} |H|={} |M(Q)|={} |T|={} |S|={}",
                    r.q_order, r.g_order, r.h_order, r.mq_order, r.t_order, r.s_order
                );
                for c in &r.checks {
                    let _ = writeln!(s, "{}: {}", c.name, yes(c.holds));
                }
            }
            Body::Monoid(m) => {
                let _ = writeln!(s, "inverse monoid: {}", yes(m.inverse_monoid));
                if let Some(f) = m.f_inverse {
                    let _ = writeln!(s, "F-inverse: {}", yes(f));
                }
                for (i, c) in m.sigma_classes.iter().enumerate().filter(|(_, c)| c.greatest.is_none()) {
                    let _ = writeln!(s, "sigma class {i}: maximal elements {:?}", c.maxima);
                }
            }
            Body::Diagnose(d) => {
                for e in &d.extensions {
                    let _ = writeln!(
                        s,
                        "CE over component {} of <{}>: {} vertices, cluster property {}, bridge-free {}",
                        e.component,
                        e.letters,
                        e.diagnostics.vertices,
                        yes(e.diagnostics.cluster_property.holds),
                        yes(e.diagnostics.bridge.bridge_free)
                    );
                }
            }
            Body::None {} => {}
        }
        for w in &self.witnesses {
            let _ = writeln!(s, "witness: {w}");
        }
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json() + "\n",
            Format::Text => self.to_text(),
        }
    }
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn opt(x: Option<usize>) -> String {
    x.map_or_else(|| "-".into(), |v| v.to_string())
}

fn read(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// A parsed graph file: edges are labelled by their own id unless a fourth
/// field names a label.
pub fn parse_graph(text: &str) -> Result<LabelledGraph, (usize, usize, String)> {
    let mut vertices: Vec<String> = Vec::new();
    let mut vindex: HashMap<String, u32> = HashMap::new();
    let mut edges: Vec<(String, String, String, Option<String>, usize)> = Vec::new();
    let mut header = false;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let col = line.len() - line.trim_start().len() + 1;
        if !header {
            if line.trim() != GRAPH_HEADER {
                return Err((ln, col, format!("expected header `{GRAPH_HEADER}`")));
            }
            header = true;
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "v" if toks.len() == 2 => {
                if vindex.insert(toks[1].to_string(), vertices.len() as u32).is_some() {
                    return Err((ln, col + 2, format!("duplicate vertex `{}`", toks[1])));
                }
                vertices.push(toks[1].to_string());
            }
            "e" if toks.len() == 4 || toks.len() == 5 => {
                if edges.iter().any(|e| e.0 == toks[1]) {
                    return Err((ln, col + 2, format!("duplicate edge `{}`", toks[1])));
                }
                edges.push((toks[1].into(), toks[2].into(), toks[3].into(), toks.get(4).map(|s| s.to_string()), ln));
            }
            "v" | "e" => return Err((ln, col, format!("wrong number of fields for `{}`", toks[0]))),
            other => return Err((ln, col, format!("unknown record `{other}`"))),
        }
    }
    if !header {
        return Err((1, 1, format!("expected header `{GRAPH_HEADER}`")));
    }
    let labelled = edges.iter().any(|e| e.3.is_some());
    if labelled && edges.iter().any(|e| e.3.is_none()) {
        let ln = edges.iter().find(|e| e.3.is_none()).unwrap().4;
        return Err((ln, 1, "either every edge or no edge carries a label".into()));
    }
    let endpoint = |name: &str, ln: usize| vindex.get(name).copied().ok_or((ln, 1, format!("undeclared vertex `{name}`")));
    if !labelled {
        for e in &edges {
            endpoint(&e.1, e.4)?;
            endpoint(&e.2, e.4)?;
        }
        let v: Vec<&str> = vertices.iter().map(String::as_str).collect();
        let e: Vec<(&str, &str, &str)> = edges.iter().map(|e| (e.0.as_str(), e.1.as_str(), e.2.as_str())).collect();
        return LabelledGraph::build_graph(&v, &e).map_err(|err| (1, 1, err.to_string()));
    }
    let mut names: Vec<String> = Vec::new();
    let mut triples = Vec::new();
    for e in &edges {
        let label = e.3.clone().unwrap();
        let a = match names.iter().position(|n| *n == label) {
            Some(a) => a,
            None => {
                names.push(label);
                names.len() - 1
            }
        };
        triples.push((endpoint(&e.1, e.4)?, endpoint(&e.2, e.4)?, Letter(a as u32)));
    }
    let alphabet = Arc::new(Alphabet::new(names).map_err(|err| (1, 1, err.to_string()))?);
    LabelledGraph::new(alphabet, vertices.len(), &triples).map_err(|err| (1, 1, err.to_string()))
}

pub fn load_graph(path: &std::path::Path) -> Result<LabelledGraph, CliError> {
    parse_graph(&read(path)?).map_err(|(line, column, message)| CliError::Parse {
        path: path.display().to_string(),
        line,
        column,
        message,
    })
}

pub fn load_table(path: &std::path::Path) -> Result<(InverseMonoid, Option<Vec<u32>>), CliError> {
    InverseMonoid::parse_with_generators(&read(path)?).map_err(|e| match e {
        MonoidError::Parse { line, column, message } => {
            CliError::Parse { path: path.display().to_string(), line, column, message }
        }
        other => other.into(),
    })
}

fn order(g: &EGroup, budget: usize) -> Option<usize> {
    g.order(budget).ok()
}

fn run_tower(config: &RunConfig, input: &std::path::Path) -> Result<(Body, Vec<String>, i32), CliError> {
    let graph = load_graph(input)?;
    let tower = build_chain(&graph, &config.tower_config())?;
    let report = tower.report();
    let mut witnesses: Vec<String> = tower.levels.iter().flat_map(|l| l.cond.failures()).collect();
    witnesses.extend(tower.truncated.iter().map(|t| format!("truncated: {t}")));
    witnesses.extend(tower.failure.iter().cloned());
    let mut code = tower.status().exit_code();
    let mut suites = Vec::new();
    if !tower.levels.is_empty() {
        let g = tower.group();
        let m = tower.certified_grade();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = deletion_suite(&mut rng, g, config.samples, SAMPLE_LENGTH, m);
        let c = content_path_suite(&mut rng, &tower, g, config.samples, SAMPLE_LENGTH, m);
        let s = symmetry_suite(&mut rng, &graph, g, config.samples.min(200));
        for (name, r) in [("deletion", d), ("content-path", c), ("symmetry", s)] {
            witnesses.extend(r.failures.iter().map(|f| format!("{name}: {f}")));
            if !r.passed() {
                code = EXIT_FAILED;
            }
            suites.push(NamedSuite { name: name.into(), max_content: m, report: r });
        }
    }
    let group_order = tower.levels.last().and_then(|l| l.g_order);
    Ok((Body::Tower(Box::new(TowerBody { tower: report, group_order, suites })), witnesses, code))
}

fn run_fcover(config: &RunConfig, source: &GroupSource) -> Result<(Body, Vec<String>, i32), CliError> {
    let q = match source {
        GroupSource::Cyclic(n) => cyclic_q(*n)?,
        GroupSource::Graph(path) => EGroup::transition_group(&load_graph(path)?)?,
        GroupSource::Table(path) => {
            let (m, gens) = load_table(path)?;
            let gens = gens.ok_or_else(|| CliError::Parse {
                path: path.display().to_string(),
                line: 0,
                column: 0,
                message: "group tables need a `gens` line".into(),
            })?;
            regular_group(&m, &gens)?
        }
    };
    match f_inverse_cover(&q, &config.tower_config()) {
        Ok(cover) => {
            let r = cover.report;
            let code = if r.passed() { EXIT_OK } else { EXIT_FAILED };
            let mut witnesses = r.witnesses.clone();
            witnesses.extend(r.checks.iter().filter(|c| !c.holds).map(|c| format!("failed: {}", c.name)));
            Ok((Body::Fcover(Box::new(r)), witnesses, code))
        }
        Err(InvmonError::TowerIncomplete(TowerStatus::Truncated)) => Ok((
            Body::None {},
            vec!["tower over the Cayley graph of Q exceeded the budgets".into()],
            EXIT_TRUNCATED,
        )),
        Err(InvmonError::Tower(e)) if e.is_budget() => Ok((Body::None {}, vec![e.to_string()], EXIT_TRUNCATED)),
        Err(InvmonError::Monoid(MonoidError::Budget { count })) => {
            Ok((Body::None {}, vec![format!("element budget exceeded after {count} elements")], EXIT_TRUNCATED))
        }
        Err(e) => Ok((Body::None {}, vec![e.to_string()], EXIT_FAILED)),
    }
}

fn run_check_monoid(input: &std::path::Path) -> Result<(Body, Vec<String>, i32), CliError> {
    let text = read(input)?;
    match InverseMonoid::parse(&text) {
        Ok(m) => {
            let f = m.f_inverse();
            let witnesses = f
                .classes
                .iter()
                .enumerate()
                .filter(|(_, c)| c.greatest.is_none())
                .map(|(i, c)| format!("sigma class {i} has maximal elements {:?}", c.maxima))
                .collect();
            let body = MonoidBody {
                size: m.len(),
                inverse_monoid: true,
                idempotents: m.idempotents(),
                f_inverse: Some(f.holds),
                sigma_classes: f
                    .classes
                    .into_iter()
                    .map(|c| SigmaSummary { members: c.members, maxima: c.maxima, greatest: c.greatest })
                    .collect(),
            };
            Ok((Body::Monoid(body), witnesses, EXIT_OK))
        }
        Err(MonoidError::LawViolation { law, elements }) => {
            let body =
                MonoidBody { size: 0, inverse_monoid: false, idempotents: vec![], f_inverse: None, sigma_classes: vec![] };
            Ok((Body::Monoid(body), vec![format!("law `{law}` fails at {elements:?}")], EXIT_FAILED))
        }
        Err(MonoidError::Parse { line, column, message }) => {
            Err(CliError::Parse { path: input.display().to_string(), line, column, message })
        }
        Err(e) => Err(e.into()),
    }
}

fn run_diagnose(config: &RunConfig, input: &std::path::Path, level: usize) -> Result<(Body, Vec<String>, i32), CliError> {
    let graph = load_graph(input)?;
    let level = level.min(graph.positive_edge_count()).max(1);
    let tower = build_chain(&graph, &TowerConfig { max_level: level, ..config.tower_config() })?;
    if tower.certified_grade() < level {
        let w = format!("tower reached grade {} of the requested {level}", tower.certified_grade());
        return Ok((Body::None {}, vec![w], EXIT_TRUNCATED));
    }
    let g = tower.group();
    let ctx = CosetContext::new(g, config.element_budget).with_vertex_budget(config.vertex_budget);
    let mut extensions = Vec::new();
    let mut witnesses = Vec::new();
    for size in 1..=level {
        for b in graph.alphabet().all().subsets_of_size(size) {
            for (ci, comp) in span_components(&graph, b).iter().enumerate() {
                for (cov, mult) in enumerate_covers(g, &graph, b, comp, config.element_budget)? {
                    let ce = coset_extension_full(&ctx, b, &cov)?;
                    let d = diagnose(&ctx, &ce)?;
                    let passes = d.admissible.admissible
                        && d.cluster_property.holds
                        && d.bridge.bridge_free
                        && d.intersection_law
                        && d.constituent_freeness
                        && d.component_intersections;
                    let letters = graph.alphabet().format_set(b);
                    if !passes {
                        witnesses.push(format!("CE over component {ci} of <{letters}>: {}", describe(&d)));
                    }
                    extensions.push(CeEntry { letters, component: ci, multiplicity: mult, passes, diagnostics: d });
                }
            }
        }
    }
    let code = if extensions.iter().all(|e| e.passes) { EXIT_OK } else { EXIT_FAILED };
    let body = DiagnoseBody { level, group_order: order(g, config.element_budget), extensions };
    Ok((Body::Diagnose(body), witnesses, code))
}

fn describe(d: &CeDiagnostics) -> String {
    if let Some(w) = &d.cluster_property.witness {
        return format!("cluster property fails: {}", w.reason);
    }
    if let Some(w) = &d.bridge.witness {
        return format!("not bridge-free: {w}");
    }
    if let Some(w) = &d.admissible.witness {
        return format!("inadmissible: {w}");
    }
    "structural law fails".into()
}

/// Runs a command; input errors are reported with exit code 3.
pub fn run(config: &RunConfig) -> Report {
    let start = Instant::now();
    let outcome = config.validate().and_then(|()| match &config.command {
        Command::Tower { input } => run_tower(config, input),
        Command::Fcover { source } => run_fcover(config, source),
        Command::CheckMonoid { input } => run_check_monoid(input),
        Command::DiagnoseCe { input, level } => run_diagnose(config, input, *level),
    });
    let (result, witnesses, exit_code) = match outcome {
        Ok(x) => x,
        Err(CliError::Tower(e)) if e.is_budget() => (Body::None {}, vec![e.to_string()], EXIT_TRUNCATED),
        Err(e @ (CliError::Parse { .. } | CliError::Io { .. } | CliError::Config(_) | CliError::Graph(_))) => {
            (Body::None {}, vec![e.to_string()], EXIT_INPUT)
        }
        Err(CliError::Tower(e @ (TowerError::Input(_) | TowerError::NotAPath(_)))) => {
            (Body::None {}, vec![e.to_string()], EXIT_INPUT)
        }
        Err(e) => (Body::None {}, vec![e.to_string()], EXIT_FAILED),
    };
    let status = match exit_code {
        EXIT_OK if matches!(config.command, Command::CheckMonoid { .. }) => "checked",
        EXIT_OK => "verified",
        EXIT_TRUNCATED => "truncated",
        EXIT_INPUT => "input-error",
        _ => "failed",
    };
    Report {
        schema: SCHEMA,
        command: config.command.name(),
        status,
        exit_code,
        config: config.clone(),
        witnesses,
        millis: start.elapsed().as_millis(),
        result,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_format() {
        let g = parse_graph("fapprox-graph 1\nv u\nv w # end\ne a u w\ne b w w\n").unwrap();
        assert_eq!((g.vertex_count(), g.positive_edge_count()), (2, 2));
        assert_eq!(g.alphabet().names(), ["a", "b"]);
        let (line, column, _) = parse_graph("fapprox-graph 1\nv u\n  e a u x\n").unwrap_err();
        assert_eq!((line, column), (3, 1));
        assert_eq!(parse_graph("v u\n").unwrap_err().0, 1);
        let (line, column, _) = parse_graph("fapprox-graph 1\nv u\nv u\n").unwrap_err();
        assert_eq!((line, column), (3, 3));
    }

    #[test]
    fn labelled_graph_format() {
        let g = parse_graph("fapprox-graph 1\nv 0\nv 1\ne x 0 1 a\ne y 1 0 a\n").unwrap();
        assert_eq!(g.alphabet().len(), 1);
        assert!(g.is_complete());
    }
}
