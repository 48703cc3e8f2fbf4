//! The very conservative structure search: exhaustive-subset adjacency
//! removal, all-subsets triple classification with collider, noncollider and
//! ambiguous marks, orientation propagation, and an ambiguous-triple Markov
//! recheck. On top of it: histogram edge estimation with a total-variation
//! rejection scan, the conditional-probability distance, and the output
//! error taxonomy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{d_separated, is_acyclic, DirectedGraph};
use crate::numeric::{all_subsets, sub_seed};
use crate::sem::{Dataset, LinearSem};
use crate::stats::{fisher_z_from_cov, histogram_estimate, l1_ci_test, HistogramDensity};

// ---------------------------------------------------------------------------
// CI backends
// ---------------------------------------------------------------------------

/// A conditional-independence decision procedure over dataset columns.
pub trait CiTest {
    fn independent(&self, x: usize, y: usize, s: &[usize]) -> Result<bool>;
    fn column_count(&self) -> usize;
    fn labels(&self) -> Vec<String>;
}

/// Gaussian backend: Fisher-z on a cached sample covariance.
pub struct FisherZBackend {
    cov: nalgebra::DMatrix<f64>,
    n: usize,
    labels: Vec<String>,
    alpha: f64,
}

impl FisherZBackend {
    pub fn new(data: &Dataset, alpha: f64) -> Self {
        FisherZBackend {
            cov: data.sample_covariance(),
            n: data.n(),
            labels: data.labels().to_vec(),
            alpha,
        }
    }
}

impl CiTest for FisherZBackend {
    fn independent(&self, x: usize, y: usize, s: &[usize]) -> Result<bool> {
        let res = fisher_z_from_cov(&self.cov, self.n, x, y, s, self.alpha)
            .map_err(|e| Error::invalid(format!("CI test failed for ({x},{y}|{s:?}): {e}")))?;
        Ok(res.independent)
    }
    fn column_count(&self) -> usize {
        self.labels.len()
    }
    fn labels(&self) -> Vec<String> {
        self.labels.clone()
    }
}

/// Nonparametric backend: histogram L1 dependence with a permutation-null
/// threshold. The per-query permutation stream is derived from the query, so
/// results do not depend on evaluation order.
pub struct L1Backend<'a> {
    data: &'a Dataset,
    alpha: f64,
    n_perm: usize,
    seed: u64,
}

impl<'a> L1Backend<'a> {
    pub fn new(data: &'a Dataset, alpha: f64, n_perm: usize, seed: u64) -> Self {
        L1Backend {
            data,
            alpha,
            n_perm,
            seed,
        }
    }
}

impl CiTest for L1Backend<'_> {
    fn independent(&self, x: usize, y: usize, s: &[usize]) -> Result<bool> {
        let mut key = ((x as u64) << 32) | y as u64;
        for &v in s {
            key = key.wrapping_mul(1_000_003).wrapping_add(v as u64 + 1);
        }
        let res = l1_ci_test(
            self.data,
            x,
            y,
            s,
            self.alpha,
            self.n_perm,
            sub_seed(self.seed, key),
        )
        .map_err(|e| Error::invalid(format!("CI test failed for ({x},{y}|{s:?}): {e}")))?;
        Ok(res.independent)
    }
    fn column_count(&self) -> usize {
        self.data.p()
    }
    fn labels(&self) -> Vec<String> {
        self.data.labels().to_vec()
    }
}

/// Separation oracle: replaces the statistical test with d-separation on the
/// true graph. The graph must be fully observed with vertex ids equal to
/// column indices.
pub struct OracleCi<'a> {
    graph: &'a DirectedGraph,
}

impl<'a> OracleCi<'a> {
    pub fn new(graph: &'a DirectedGraph) -> Self {
        OracleCi { graph }
    }
}

impl CiTest for OracleCi<'_> {
    fn independent(&self, x: usize, y: usize, s: &[usize]) -> Result<bool> {
        d_separated(self.graph, &[x], &[y], s)
    }
    fn column_count(&self) -> usize {
        self.graph.vertex_count()
    }
    fn labels(&self) -> Vec<String> {
        self.graph
            .vertices()
            .iter()
            .map(|v| v.label.clone())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// pattern graph
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeState {
    Undirected,
    /// Directed from the pair's lower id to the higher id.
    LowToHigh,
    HighToLow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripleMark {
    Collider,
    Noncollider,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjacencyMark {
    ApparentlyNonadjacent,
    DefinitelyNonadjacent,
}

/// Mixed-graph output of the structure search. Triple marks are keyed by
/// `(x, y, z)` with `y` the middle vertex and `x < z`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "PatternJson", try_from = "PatternJson")]
pub struct PatternGraph {
    pub labels: Vec<String>,
    pub edges: BTreeMap<(usize, usize), EdgeState>,
    pub triples: BTreeMap<(usize, usize, usize), TripleMark>,
    pub nonadjacent: BTreeMap<(usize, usize), AdjacencyMark>,
}

#[derive(Serialize, Deserialize)]
struct PatternEdgeJson {
    a: usize,
    b: usize,
    state: EdgeState,
}

#[derive(Serialize, Deserialize)]
struct PatternTripleJson {
    x: usize,
    y: usize,
    z: usize,
    mark: TripleMark,
}

#[derive(Serialize, Deserialize)]
struct PatternNonAdjJson {
    a: usize,
    b: usize,
    mark: AdjacencyMark,
}

#[derive(Serialize, Deserialize)]
struct PatternJson {
    labels: Vec<String>,
    edges: Vec<PatternEdgeJson>,
    triples: Vec<PatternTripleJson>,
    nonadjacent: Vec<PatternNonAdjJson>,
}

impl From<PatternGraph> for PatternJson {
    fn from(h: PatternGraph) -> Self {
        PatternJson {
            labels: h.labels,
            edges: h
                .edges
                .into_iter()
                .map(|((a, b), state)| PatternEdgeJson { a, b, state })
                .collect(),
            triples: h
                .triples
                .into_iter()
                .map(|((x, y, z), mark)| PatternTripleJson { x, y, z, mark })
                .collect(),
            nonadjacent: h
                .nonadjacent
                .into_iter()
                .map(|((a, b), mark)| PatternNonAdjJson { a, b, mark })
                .collect(),
        }
    }
}

impl TryFrom<PatternJson> for PatternGraph {
    type Error = Error;
    fn try_from(j: PatternJson) -> Result<Self> {
        let p = j.labels.len();
        let mut h = PatternGraph {
            labels: j.labels,
            edges: BTreeMap::new(),
            triples: BTreeMap::new(),
            nonadjacent: BTreeMap::new(),
        };
        for e in j.edges {
            if e.a >= e.b || e.b >= p {
                return Err(Error::invalid("pattern edge keys must satisfy a < b < p"));
            }
            h.edges.insert((e.a, e.b), e.state);
        }
        for t in j.triples {
            if t.x >= t.z || t.z >= p || t.y >= p {
                return Err(Error::invalid("pattern triple keys must satisfy x < z"));
            }
            h.triples.insert((t.x, t.y, t.z), t.mark);
        }
        for m in j.nonadjacent {
            h.nonadjacent.insert((m.a.min(m.b), m.a.max(m.b)), m.mark);
        }
        Ok(h)
    }
}

impl PatternGraph {
    pub fn complete_undirected(labels: Vec<String>) -> Self {
        let p = labels.len();
        let mut edges = BTreeMap::new();
        for a in 0..p {
            for b in (a + 1)..p {
                edges.insert((a, b), EdgeState::Undirected);
            }
        }
        PatternGraph {
            labels,
            edges,
            triples: BTreeMap::new(),
            nonadjacent: BTreeMap::new(),
        }
    }

    pub fn p(&self) -> usize {
        self.labels.len()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.edges.contains_key(&key(a, b))
    }

    /// Directed edge from `a` to `b`?
    pub fn directed(&self, a: usize, b: usize) -> bool {
        match self.edges.get(&key(a, b)) {
            Some(EdgeState::LowToHigh) => a < b,
            Some(EdgeState::HighToLow) => a > b,
            _ => false,
        }
    }

    pub fn undirected(&self, a: usize, b: usize) -> bool {
        matches!(self.edges.get(&key(a, b)), Some(EdgeState::Undirected))
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.edges.remove(&key(a, b));
        self.nonadjacent
            .insert(key(a, b), AdjacencyMark::ApparentlyNonadjacent);
    }

    /// Orient `a -> b`; returns true when the state changed. Never flips an
    /// existing orientation.
    pub fn orient(&mut self, a: usize, b: usize) -> bool {
        let k = key(a, b);
        let want = if a < b {
            EdgeState::LowToHigh
        } else {
            EdgeState::HighToLow
        };
        match self.edges.get(&k) {
            Some(EdgeState::Undirected) => {
                self.edges.insert(k, want);
                true
            }
            _ => false,
        }
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.p())
            .filter(|&o| o != v && self.adjacent(o, v))
            .collect()
    }

    /// Sources of directed edges into `v`.
    pub fn directed_parents(&self, v: usize) -> Vec<usize> {
        (0..self.p()).filter(|&o| self.directed(o, v)).collect()
    }

    /// True when every edge incident to `v` is oriented (either way).
    pub fn fully_oriented_at(&self, v: usize) -> bool {
        self.neighbors(v)
            .iter()
            .all(|&o| self.directed(o, v) || self.directed(v, o))
    }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

// ---------------------------------------------------------------------------
// the structure search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct VcsgsOptions {
    /// The all-subsets loops are exponential; refuse larger inputs.
    pub vertex_cap: usize,
    /// Cap on enumerated DAG extensions in the ambiguous-triple recheck.
    pub extension_cap: usize,
}

impl Default for VcsgsOptions {
    fn default() -> Self {
        VcsgsOptions {
            vertex_cap: 12,
            extension_cap: 100_000,
        }
    }
}

/// Runs the conservative structure search against a CI backend.
pub fn run_vcsgs(ci: &dyn CiTest, opts: &VcsgsOptions) -> Result<PatternGraph> {
    let p = ci.column_count();
    if p < 2 {
        return Err(Error::invalid("structure search needs at least 2 columns"));
    }
    if p > opts.vertex_cap {
        return Err(Error::guard(
            format!("all-subsets structure search on {p} columns"),
            opts.vertex_cap,
            "VcsgsOptions::vertex_cap",
        ));
    }
    let mut h = PatternGraph::complete_undirected(ci.labels());
    let mut cache: BTreeMap<(usize, usize, Vec<usize>), bool> = BTreeMap::new();
    let query = |x: usize,
                     y: usize,
                     s: &[usize],
                     cache: &mut BTreeMap<(usize, usize, Vec<usize>), bool>|
     -> Result<bool> {
        let (a, b) = (x.min(y), x.max(y));
        let mut set = s.to_vec();
        set.sort_unstable();
        if let Some(&v) = cache.get(&(a, b, set.clone())) {
            return Ok(v);
        }
        let v = ci.independent(a, b, &set)?;
        cache.insert((a, b, set), v);
        Ok(v)
    };

    // Adjacency phase: remove X - Y whenever some subset separates them.
    for x in 0..p {
        for y in (x + 1)..p {
            let rest: Vec<usize> = (0..p).filter(|&v| v != x && v != y).collect();
            for s in all_subsets(&rest) {
                if query(x, y, &s, &mut cache)? {
                    h.remove_edge(x, y);
                    break;
                }
            }
        }
    }

    // Triple classification on unshielded triples.
    for y in 0..p {
        let nbs = h.neighbors(y);
        for i in 0..nbs.len() {
            for j in (i + 1)..nbs.len() {
                let (x, z) = (nbs[i].min(nbs[j]), nbs[i].max(nbs[j]));
                if h.adjacent(x, z) {
                    continue;
                }
                let others: Vec<usize> =
                    (0..p).filter(|&v| v != x && v != z && v != y).collect();
                // collider: dependent given every S containing Y
                let mut collider = true;
                for s in all_subsets(&others) {
                    let mut s_full = s.clone();
                    s_full.push(y);
                    if query(x, z, &s_full, &mut cache)? {
                        collider = false;
                        break;
                    }
                }
                if collider {
                    h.triples.insert((x, y, z), TripleMark::Collider);
                    h.orient(x, y);
                    h.orient(z, y);
                    continue;
                }
                // noncollider: dependent given every S excluding Y
                let mut noncollider = true;
                for s in all_subsets(&others) {
                    if query(x, z, &s, &mut cache)? {
                        noncollider = false;
                        break;
                    }
                }
                h.triples.insert(
                    (x, y, z),
                    if noncollider {
                        TripleMark::Noncollider
                    } else {
                        TripleMark::Ambiguous
                    },
                );
            }
        }
    }

    apply_orientation_rules(&mut h);
    ambiguous_triple_markov_check(&mut h, &cache, opts);
    debug_assert_orientation_consistency(&h);
    Ok(h)
}

/// The three orientation rules, iterated to a fixpoint in canonical order:
/// noncollider propagation, chain closure, and the collider/noncollider
/// wedge rule.
fn apply_orientation_rules(h: &mut PatternGraph) {
    let p = h.p();
    loop {
        let mut changed = false;
        // X -> Y - Z with <X, Y, Z> marked noncollider: orient Y -> Z.
        for (&(x, y, z), &mark) in h.triples.clone().iter() {
            if mark != TripleMark::Noncollider {
                continue;
            }
            if h.directed(x, y) && h.undirected(y, z) {
                changed |= h.orient(y, z);
            }
            if h.directed(z, y) && h.undirected(y, x) {
                changed |= h.orient(y, x);
            }
        }
        // X -> Y -> Z with X - Z present: orient X -> Z.
        for x in 0..p {
            for y in 0..p {
                if y == x || !h.directed(x, y) {
                    continue;
                }
                for z in 0..p {
                    if z != x && z != y && h.directed(y, z) && h.undirected(x, z) {
                        changed |= h.orient(x, z);
                    }
                }
            }
        }
        // X -> Y <- Z with <X, W, Z> marked noncollider and W - Y present:
        // orient W -> Y.
        for (&(x, w, z), &mark) in h.triples.clone().iter() {
            if mark != TripleMark::Noncollider {
                continue;
            }
            for y in 0..p {
                if y != w && h.directed(x, y) && h.directed(z, y) && h.undirected(w, y) {
                    changed |= h.orient(w, y);
                }
            }
        }
        if !changed {
            return;
        }
    }
}

/// Final loop of the search: if for every ambiguous triple, every DAG
/// extension of H satisfies the Markov condition against the recorded CI
/// outcomes (no extension d-separates a pair that tested dependent), upgrade
/// all apparently-non-adjacent pairs to definitely-non-adjacent. Extension
/// enumeration is capped; past the cap the marks stay as they are.
fn ambiguous_triple_markov_check(
    h: &mut PatternGraph,
    cache: &BTreeMap<(usize, usize, Vec<usize>), bool>,
    opts: &VcsgsOptions,
) {
    let has_ambiguous = h
        .triples
        .values()
        .any(|&m| m == TripleMark::Ambiguous);
    if !has_ambiguous {
        return;
    }
    let extensions = match enumerate_dag_extensions(h, opts.extension_cap) {
        Some(e) if !e.is_empty() => e,
        _ => return,
    };
    for ext in &extensions {
        for ((a, b, s), &was_independent) in cache.iter() {
            if !was_independent {
                if let Ok(true) = d_separated(ext, &[*a], &[*b], s) {
                    return; // Markov contradiction in some extension: no upgrade
                }
            }
        }
    }
    for mark in h.nonadjacent.values_mut() {
        *mark = AdjacencyMark::DefinitelyNonadjacent;
    }
}

/// All DAG orientations of H's undirected edges that preserve its directed
/// edges, adjacencies, and collider/noncollider marks. `None` when the
/// enumeration would exceed `cap`.
fn enumerate_dag_extensions(h: &PatternGraph, cap: usize) -> Option<Vec<DirectedGraph>> {
    let undirected: Vec<(usize, usize)> = h
        .edges
        .iter()
        .filter(|(_, &s)| s == EdgeState::Undirected)
        .map(|(&k, _)| k)
        .collect();
    if undirected.len() >= usize::BITS as usize - 1 || (1usize << undirected.len()) > cap {
        return None;
    }
    let base: Vec<(usize, usize)> = h
        .edges
        .iter()
        .filter_map(|(&(a, b), &s)| match s {
            EdgeState::LowToHigh => Some((a, b)),
            EdgeState::HighToLow => Some((b, a)),
            EdgeState::Undirected => None,
        })
        .collect();
    let mut out = Vec::new();
    for mask in 0usize..(1usize << undirected.len()) {
        let mut edges = base.clone();
        for (i, &(a, b)) in undirected.iter().enumerate() {
            if mask >> i & 1 == 0 {
                edges.push((a, b));
            } else {
                edges.push((b, a));
            }
        }
        let g = DirectedGraph::new(
            h.labels
                .iter()
                .map(|l| (l.clone(), crate::graph::VertexKind::Observed))
                .collect(),
            &edges,
        )
        .ok()?;
        if !is_acyclic(&g) {
            continue;
        }
        // respect triple marks
        let mut ok = true;
        for (&(x, y, z), &mark) in &h.triples {
            let as_collider = g.has_edge(x, y) && g.has_edge(z, y);
            match mark {
                TripleMark::Collider if !as_collider => ok = false,
                TripleMark::Noncollider if as_collider => ok = false,
                _ => {}
            }
            if !ok {
                break;
            }
        }
        if ok {
            out.push(g);
        }
    }
    Some(out)
}

fn debug_assert_orientation_consistency(h: &PatternGraph) {
    for &(a, b) in h.edges.keys() {
        debug_assert!(
            !(h.directed(a, b) && h.directed(b, a)),
            "edge ({a},{b}) oriented both ways"
        );
    }
}

// ---------------------------------------------------------------------------
// edge estimation
// ---------------------------------------------------------------------------

/// Conditional histogram table for one vertex: cell masses of the vertex
/// given each parent cell configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub vertex: usize,
    pub parents: Vec<usize>,
    /// The underlying joint histogram over `(y, parents...)`.
    pub histogram: HistogramDensity,
    /// `conditionals[config]` holds normalized y-bin masses, or `None` for a
    /// parent configuration with no mass (division guard).
    pub conditionals: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum VertexEstimate {
    Unknown,
    Table(ConditionalTable),
}

/// Output of the edge estimation pass: one entry per column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatedModel {
    pub labels: Vec<String>,
    pub vertices: Vec<VertexEstimate>,
}

impl EstimatedModel {
    pub fn is_unknown(&self, v: usize) -> bool {
        matches!(self.vertices[v], VertexEstimate::Unknown)
    }
}

/// Histogram conditional-density estimation for every vertex whose incident
/// edges are all oriented in `h`; everything else is Unknown. A post-hoc
/// scan marks Unknown any table whose conditional slices at adjacent parent
/// cells differ in L1 by more than `l` times the cell-center distance.
pub fn edge_estimation(data: &Dataset, h: &PatternGraph, l: f64) -> Result<EstimatedModel> {
    if data.p() != h.p() {
        return Err(Error::invalid("pattern and data column counts differ"));
    }
    let mut vertices = Vec::with_capacity(data.p());
    for v in 0..data.p() {
        if !h.fully_oriented_at(v) {
            vertices.push(VertexEstimate::Unknown);
            continue;
        }
        let parents = h.directed_parents(v);
        let mut dims = vec![v];
        dims.extend_from_slice(&parents);
        let hist = histogram_estimate(data, &dims)?;
        let m = hist.bins_per_axis;
        let n_configs = m.pow(parents.len() as u32);
        let mut conditionals = Vec::with_capacity(n_configs);
        for cfg in 0..n_configs {
            let pa_cells = unpack_config(cfg, parents.len(), m);
            let mut joint = Vec::with_capacity(m);
            let mut total = 0.0;
            for yb in 0..m {
                let mut cell = vec![yb];
                cell.extend_from_slice(&pa_cells);
                let mass = hist.mass(&cell);
                joint.push(mass);
                total += mass;
            }
            if total > 0.0 {
                conditionals.push(Some(joint.into_iter().map(|v| v / total).collect()));
            } else {
                conditionals.push(None);
            }
        }
        let table = ConditionalTable {
            vertex: v,
            parents,
            histogram: hist,
            conditionals,
        };
        if violates_tv_smoothness(&table, l) {
            vertices.push(VertexEstimate::Unknown);
        } else {
            vertices.push(VertexEstimate::Table(table));
        }
    }
    Ok(EstimatedModel {
        labels: data.labels().to_vec(),
        vertices,
    })
}

fn unpack_config(mut cfg: usize, axes: usize, m: usize) -> Vec<usize> {
    let mut cells = vec![0usize; axes];
    for i in (0..axes).rev() {
        cells[i] = cfg % m;
        cfg /= m;
    }
    cells
}

fn pack_config(cells: &[usize], m: usize) -> usize {
    let mut cfg = 0;
    for &c in cells {
        cfg = cfg * m + c;
    }
    cfg
}

fn violates_tv_smoothness(table: &ConditionalTable, l: f64) -> bool {
    let m = table.histogram.bins_per_axis;
    let axes = table.parents.len();
    if axes == 0 {
        return false;
    }
    let limit = l / m as f64;
    for cfg in 0..table.conditionals.len() {
        let cells = unpack_config(cfg, axes, m);
        let Some(slice_a) = &table.conditionals[cfg] else {
            continue;
        };
        for ax in 0..axes {
            if cells[ax] + 1 >= m {
                continue;
            }
            let mut next = cells.clone();
            next[ax] += 1;
            let Some(slice_b) = &table.conditionals[pack_config(&next, m)] else {
                continue;
            };
            let l1: f64 = slice_a
                .iter()
                .zip(slice_b)
                .map(|(a, b)| (a - b).abs())
                .sum();
            if l1 > limit {
                return true;
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// conditional probability distance
// ---------------------------------------------------------------------------

/// The reference side of the conditional-probability distance.
pub enum ReferenceModel<'a> {
    Estimated(&'a EstimatedModel),
    /// Ground truth approximated on the estimate's own grids from a large
    /// seeded reference sample of the SEM.
    Sem {
        sem: &'a LinearSem,
        reference_n: usize,
        seed: u64,
    },
}

/// Max over vertices, cells, and nested parent configurations of the
/// absolute difference between estimated and reference conditional cell
/// masses. Unknown entries contribute zero.
pub fn conditional_probability_distance(m1: &EstimatedModel, m2: &ReferenceModel) -> Result<f64> {
    let mut worst = 0.0f64;
    for est in &m1.vertices {
        let VertexEstimate::Table(table) = est else {
            continue;
        };
        match m2 {
            ReferenceModel::Estimated(other) => {
                if other.labels != m1.labels {
                    return Err(Error::invalid("models cover different variable sets"));
                }
                let VertexEstimate::Table(ref_table) = &other.vertices[table.vertex] else {
                    continue; // reference unknown: contributes zero
                };
                if !table.parents.iter().all(|p| ref_table.parents.contains(p)) {
                    return Err(Error::invalid(format!(
                        "estimated parents of column {} are not nested in the reference",
                        table.vertex
                    )));
                }
                worst = worst.max(table_distance_nested(table, ref_table));
            }
            ReferenceModel::Sem {
                sem,
                reference_n,
                seed,
            } => {
                let truth_parents: Vec<usize> = sem.graph().parents(table.vertex).to_vec();
                if !table.parents.iter().all(|p| truth_parents.contains(p)) {
                    return Err(Error::invalid(format!(
                        "estimated parents of column {} are not nested in the true graph",
                        table.vertex
                    )));
                }
                let reference = sem.sample(*reference_n, *seed)?;
                worst =
                    worst.max(table_distance_to_reference(table, &truth_parents, &reference));
            }
        }
    }
    Ok(worst)
}

/// Distance when both sides are tables over the same histogram resolution
/// and the reference's parent set contains the estimate's.
fn table_distance_nested(est: &ConditionalTable, reference: &ConditionalTable) -> f64 {
    let m = est.histogram.bins_per_axis;
    if reference.histogram.bins_per_axis != m {
        return 0.0; // incomparable resolutions contribute nothing
    }
    let mut worst = 0.0f64;
    let ref_axes = reference.parents.len();
    let positions: Vec<usize> = est
        .parents
        .iter()
        .map(|p| reference.parents.iter().position(|q| q == p).unwrap())
        .collect();
    for (ref_cfg, ref_slice) in reference.conditionals.iter().enumerate() {
        let Some(ref_slice) = ref_slice else { continue };
        let ref_cells = unpack_config(ref_cfg, ref_axes, m);
        let est_cells: Vec<usize> = positions.iter().map(|&i| ref_cells[i]).collect();
        let Some(est_slice) = &est.conditionals[pack_config(&est_cells, m)] else {
            continue;
        };
        for yb in 0..m {
            worst = worst.max((est_slice[yb] - ref_slice[yb]).abs());
        }
    }
    worst
}

/// Distance against conditional cell masses of the truth, estimated from a
/// reference sample on the estimate's own grid. Extra true parents get their
/// own equal-width grid over the reference sample's range.
fn table_distance_to_reference(
    est: &ConditionalTable,
    truth_parents: &[usize],
    reference: &Dataset,
) -> f64 {
    let m = est.histogram.bins_per_axis;
    let extra: Vec<usize> = truth_parents
        .iter()
        .copied()
        .filter(|p| !est.parents.contains(p))
        .collect();
    let extra_grid: Vec<(f64, f64)> = extra
        .iter()
        .map(|&c| {
            let col = reference.data().column(c);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        })
        .collect();
    let bin_extra = |value: f64, (lo, hi): (f64, f64)| -> usize {
        if hi <= lo {
            return 0;
        }
        let scaled = ((value - lo) / (hi - lo)).clamp(0.0, 1.0);
        ((scaled * m as f64) as usize).min(m - 1)
    };
    let est_axes = est.parents.len();
    let mut counts: BTreeMap<Vec<usize>, (Vec<f64>, f64)> = BTreeMap::new();
    for r in 0..reference.n() {
        let yb = est.histogram.bin_of(0, reference.data()[(r, est.vertex)]);
        let mut pa_cells = Vec::with_capacity(est_axes + extra.len());
        for (ax, &p) in est.parents.iter().enumerate() {
            pa_cells.push(est.histogram.bin_of(ax + 1, reference.data()[(r, p)]));
        }
        for (i, &p) in extra.iter().enumerate() {
            pa_cells.push(bin_extra(reference.data()[(r, p)], extra_grid[i]));
        }
        let entry = counts
            .entry(pa_cells)
            .or_insert_with(|| (vec![0.0; m], 0.0));
        entry.0[yb] += 1.0;
        entry.1 += 1.0;
    }
    let mut worst = 0.0f64;
    for (pa_cells, (ybins, total)) in counts {
        if total <= 0.0 {
            continue;
        }
        let est_cfg = pack_config(&pa_cells[..est_axes], m);
        let Some(est_slice) = &est.conditionals[est_cfg] else {
            continue;
        };
        for yb in 0..m {
            worst = worst.max((est_slice[yb] - ybins[yb] / total).abs());
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// error taxonomy
// ---------------------------------------------------------------------------

/// Output-error classification of a pattern against the true graph.
/// The three kinds are mutually exclusive by construction; missing edges are
/// counted separately and are not errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// An adjacency not present in the truth.
    pub kind1: bool,
    /// Adjacencies fine, but a marked noncollider is a collider in truth.
    pub kind2: bool,
    /// Adjacencies and noncolliders fine, but some orientation is wrong.
    pub kind3: bool,
    pub missing_edges: usize,
}

impl ErrorReport {
    pub fn clean(&self) -> bool {
        !(self.kind1 || self.kind2 || self.kind3)
    }
}

pub fn classify_errors(h: &PatternGraph, truth: &DirectedGraph) -> Result<ErrorReport> {
    if h.p() != truth.vertex_count() {
        return Err(Error::invalid("pattern and truth must share the vertex set"));
    }
    let kind1 = h.edges.keys().any(|&(a, b)| !truth.adjacent(a, b));
    let kind2 = !kind1
        && h.triples.iter().any(|(&(x, y, z), &mark)| {
            mark == TripleMark::Noncollider && truth.has_edge(x, y) && truth.has_edge(z, y)
        });
    let kind3 = !kind1
        && !kind2
        && h.edges.iter().any(|(&(a, b), &state)| match state {
            EdgeState::LowToHigh => !truth.has_edge(a, b),
            EdgeState::HighToLow => !truth.has_edge(b, a),
            EdgeState::Undirected => false,
        });
    let missing_edges = truth.edges().filter(|&(a, b)| !h.adjacent(a, b)).count();
    Ok(ErrorReport {
        kind1,
        kind2,
        kind3,
        missing_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::random_dag;
    use crate::sem::{CoefficientRegime, NoiseSpec};
    use nalgebra::DMatrix;

    fn oracle_pattern(g: &DirectedGraph) -> PatternGraph {
        run_vcsgs(&OracleCi::new(g), &VcsgsOptions::default()).unwrap()
    }

    #[test]
    fn two_independent_columns_yield_empty_pattern() {
        let g = DirectedGraph::observed(2, &[]).unwrap();
        let sem = LinearSem::new(g, DMatrix::zeros(2, 2), vec![NoiseSpec::unit_gaussian(); 2])
            .unwrap();
        let data = sem.sample(5_000, 1).unwrap();
        let h = run_vcsgs(&FisherZBackend::new(&data, 0.01), &VcsgsOptions::default()).unwrap();
        assert!(h.edges.is_empty());
        assert!(h.triples.is_empty());
    }

    #[test]
    fn chain_data_yields_marked_noncollider() {
        let g = DirectedGraph::observed(3, &[(0, 1), (1, 2)]).unwrap();
        let sem = LinearSem::random(
            g,
            CoefficientRegime::SplitUnit,
            NoiseSpec::unit_gaussian(),
            3,
        )
        .unwrap();
        let data = sem.sample(10_000, 5).unwrap();
        let h = run_vcsgs(&FisherZBackend::new(&data, 0.01), &VcsgsOptions::default()).unwrap();
        assert!(h.adjacent(0, 1) && h.adjacent(1, 2) && !h.adjacent(0, 2));
        assert_eq!(h.triples.get(&(0, 1, 2)), Some(&TripleMark::Noncollider));
    }

    #[test]
    fn collider_recovered_in_most_seeds() {
        let g = DirectedGraph::observed(3, &[(0, 2), (1, 2)]).unwrap();
        let mut recovered = 0;
        let seeds = 50;
        for seed in 0..seeds {
            let sem = LinearSem::random(
                g.clone(),
                CoefficientRegime::SplitUnit,
                NoiseSpec::unit_gaussian(),
                seed + 1000,
            )
            .unwrap();
            let data = sem.sample(10_000, seed).unwrap();
            let h =
                run_vcsgs(&FisherZBackend::new(&data, 0.01), &VcsgsOptions::default()).unwrap();
            if h.directed(0, 2) && h.directed(1, 2) && !h.adjacent(0, 1) {
                recovered += 1;
            }
        }
        assert!(
            recovered * 10 >= seeds * 9,
            "collider recovered in {recovered}/{seeds} seeds"
        );
    }

    /// Reference CPDAG by brute force: enumerate all DAGs with the same
    /// skeleton and unshielded colliders, intersect edge directions.
    fn brute_cpdag(truth: &DirectedGraph) -> BTreeMap<(usize, usize), EdgeState> {
        let p = truth.vertex_count();
        let skeleton: Vec<(usize, usize)> = (0..p)
            .flat_map(|a| ((a + 1)..p).map(move |b| (a, b)))
            .filter(|&(a, b)| truth.adjacent(a, b))
            .collect();
        let colliders_of = |g: &DirectedGraph| {
            let mut out = Vec::new();
            for y in 0..p {
                for x in 0..p {
                    for z in (x + 1)..p {
                        if x != y
                            && z != y
                            && g.has_edge(x, y)
                            && g.has_edge(z, y)
                            && !g.adjacent(x, z)
                        {
                            out.push((x, y, z));
                        }
                    }
                }
            }
            out.sort();
            out
        };
        let want = colliders_of(truth);
        let mut states: BTreeMap<(usize, usize), (bool, bool)> = BTreeMap::new();
        for mask in 0u32..(1 << skeleton.len()) {
            let edges: Vec<(usize, usize)> = skeleton
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| if mask >> i & 1 == 0 { (a, b) } else { (b, a) })
                .collect();
            let g = DirectedGraph::observed(p, &edges).unwrap();
            if !is_acyclic(&g) || colliders_of(&g) != want {
                continue;
            }
            for &(a, b) in &skeleton {
                let e = states.entry((a, b)).or_insert((true, true));
                if g.has_edge(a, b) {
                    e.1 = false; // not always backward
                } else {
                    e.0 = false; // not always forward
                }
            }
        }
        skeleton
            .iter()
            .map(|&(a, b)| {
                let (fwd, bwd) = states[&(a, b)];
                let state = if fwd {
                    EdgeState::LowToHigh
                } else if bwd {
                    EdgeState::HighToLow
                } else {
                    EdgeState::Undirected
                };
                ((a, b), state)
            })
            .collect()
    }

    #[test]
    fn oracle_run_returns_the_cpdag_pattern() {
        for seed in 0..20u64 {
            let truth = random_dag(6, 2.2, seed).unwrap();
            let h = oracle_pattern(&truth);
            for a in 0..6 {
                for b in (a + 1)..6 {
                    assert_eq!(h.adjacent(a, b), truth.adjacent(a, b), "seed {seed}");
                }
            }
            let cpdag = brute_cpdag(&truth);
            for (&(a, b), &state) in &cpdag {
                assert_eq!(
                    h.edges.get(&(a, b)),
                    Some(&state),
                    "seed {seed}, edge ({a},{b})"
                );
            }
            let report = classify_errors(&h, &truth).unwrap();
            assert!(report.clean(), "seed {seed}: {report:?}");
            assert_eq!(report.missing_edges, 0);
        }
    }

    fn hand_oriented_chain() -> PatternGraph {
        let mut h =
            PatternGraph::complete_undirected(vec!["X1".into(), "X2".into(), "X3".into()]);
        h.remove_edge(0, 2);
        h.orient(0, 1);
        h.orient(1, 2);
        h
    }

    #[test]
    fn edge_estimation_unknown_rules() {
        // isolated vertex: unconditional table; undirected edge: Unknown
        let mut h =
            PatternGraph::complete_undirected(vec!["a".into(), "b".into(), "c".into()]);
        h.remove_edge(0, 2);
        h.remove_edge(1, 2);
        // leave 0 - 1 undirected
        let sem = {
            let g = DirectedGraph::observed(3, &[(0, 1)]).unwrap();
            let mut c = DMatrix::zeros(3, 3);
            c[(0, 1)] = 0.8;
            LinearSem::new(g, c, vec![NoiseSpec::unit_gaussian(); 3]).unwrap()
        };
        let data = sem.sample(2_000, 2).unwrap();
        let est = edge_estimation(&data, &h, 10.0).unwrap();
        assert!(est.is_unknown(0));
        assert!(est.is_unknown(1));
        match &est.vertices[2] {
            VertexEstimate::Table(t) => {
                assert!(t.parents.is_empty());
                let slice = t.conditionals[0].as_ref().unwrap();
                let total: f64 = slice.iter().sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
            _ => panic!("isolated vertex should get an unconditional table"),
        }
    }

    #[test]
    fn edge_estimation_tables_normalize_and_match_truth() {
        let g = DirectedGraph::observed(3, &[(0, 1), (1, 2)]).unwrap();
        let mut c = DMatrix::zeros(3, 3);
        c[(0, 1)] = 1.0;
        c[(1, 2)] = 1.0;
        let sem = LinearSem::new(g, c, vec![NoiseSpec::unit_gaussian(); 3]).unwrap();
        let data = sem.sample(100_000, 9).unwrap();
        let h = hand_oriented_chain();
        let est = edge_estimation(&data, &h, 1e6).unwrap();
        for v in 0..3 {
            let VertexEstimate::Table(t) = &est.vertices[v] else {
                panic!("vertex {v} should be estimable");
            };
            for cond in t.conditionals.iter().flatten() {
                let total: f64 = cond.iter().sum();
                assert!((total - 1.0).abs() < 1e-9, "table must normalize");
            }
        }
        // Interior-cell comparison of p(x2 | x1) against a large reference
        // sample of the truth: parent bins carrying real mass must agree to
        // sup-norm 0.1 (the extreme tail bins hold too few points to mean
        // anything).
        let VertexEstimate::Table(t) = &est.vertices[1] else {
            unreachable!()
        };
        let reference = sem.sample(1_000_000, 1234).unwrap();
        let m = t.histogram.bins_per_axis;
        let mut counts: Vec<(Vec<f64>, f64)> = vec![(vec![0.0; m], 0.0); m];
        for r in 0..reference.n() {
            let yb = t.histogram.bin_of(0, reference.data()[(r, 1)]);
            let xb = t.histogram.bin_of(1, reference.data()[(r, 0)]);
            counts[xb].0[yb] += 1.0;
            counts[xb].1 += 1.0;
        }
        let mut worst: f64 = 0.0;
        let mut interior = 0;
        for (xb, (ybins, total)) in counts.iter().enumerate() {
            let occupancy = t.histogram.marginal_mass(&[(1, xb)]);
            if occupancy < 0.01 {
                continue; // tail bin with fewer than ~1000 training points
            }
            interior += 1;
            let est_slice = t.conditionals[xb].as_ref().unwrap();
            for yb in 0..m {
                worst = worst.max((est_slice[yb] - ybins[yb] / total).abs());
            }
        }
        assert!(interior >= 5, "expected several interior parent bins");
        assert!(worst < 0.1, "interior sup distance {worst}");
    }

    #[test]
    fn distance_trivial_cases() {
        let g = DirectedGraph::observed(3, &[(0, 1), (1, 2)]).unwrap();
        let mut c = DMatrix::zeros(3, 3);
        c[(0, 1)] = 1.0;
        c[(1, 2)] = 1.0;
        let sem = LinearSem::new(g, c, vec![NoiseSpec::unit_gaussian(); 3]).unwrap();
        let data = sem.sample(3_000, 4).unwrap();
        let h = hand_oriented_chain();
        let est = edge_estimation(&data, &h, 1e6).unwrap();
        let d = conditional_probability_distance(&est, &ReferenceModel::Estimated(&est)).unwrap();
        assert_eq!(d, 0.0);
        let empty = EstimatedModel {
            labels: est.labels.clone(),
            vertices: vec![
                VertexEstimate::Unknown,
                VertexEstimate::Unknown,
                VertexEstimate::Unknown,
            ],
        };
        let d =
            conditional_probability_distance(&empty, &ReferenceModel::Estimated(&est)).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn tv_scan_rejects_rough_tables() {
        // A near-deterministic relationship produces conditional slices that
        // jump between adjacent parent cells faster than a tiny L allows.
        let g = DirectedGraph::observed(2, &[(0, 1)]).unwrap();
        let mut c = DMatrix::zeros(2, 2);
        c[(0, 1)] = 5.0;
        let sem = LinearSem::new(
            g,
            c,
            vec![
                NoiseSpec::unit_gaussian(),
                NoiseSpec::Gaussian {
                    mean: 0.0,
                    var: 0.01,
                },
            ],
        )
        .unwrap();
        let data = sem.sample(20_000, 3).unwrap();
        let mut h = PatternGraph::complete_undirected(vec!["X1".into(), "X2".into()]);
        h.orient(0, 1);
        let strict = edge_estimation(&data, &h, 0.05).unwrap();
        assert!(strict.is_unknown(1), "rough table must be rejected at small L");
        let loose = edge_estimation(&data, &h, 1e6).unwrap();
        assert!(!loose.is_unknown(1));
    }

    #[test]
    fn error_taxonomy() {
        let truth = DirectedGraph::observed(3, &[(0, 1), (1, 2)]).unwrap();
        let h = oracle_pattern(&truth);
        let rep = classify_errors(&h, &truth).unwrap();
        assert!(rep.clean() && rep.missing_edges == 0);

        // fabricated edge: kind I
        let mut bad = h.clone();
        bad.edges.insert((0, 2), EdgeState::Undirected);
        assert!(classify_errors(&bad, &truth).unwrap().kind1);

        // missing edge only: clean with missing count 1
        let mut missing = h.clone();
        missing.edges.remove(&(1, 2));
        missing.triples.clear();
        let rep = classify_errors(&missing, &truth).unwrap();
        assert!(rep.clean());
        assert_eq!(rep.missing_edges, 1);

        // marked noncollider that is a collider in truth: kind II
        let collider_truth = DirectedGraph::observed(3, &[(0, 1), (2, 1)]).unwrap();
        let mut wrong = PatternGraph::complete_undirected(vec![
            "X1".into(),
            "X2".into(),
            "X3".into(),
        ]);
        wrong.remove_edge(0, 2);
        wrong.triples.insert((0, 1, 2), TripleMark::Noncollider);
        assert!(classify_errors(&wrong, &collider_truth).unwrap().kind2);

        // wrong orientation with fine adjacencies and marks: kind III
        let mut flipped = PatternGraph::complete_undirected(vec![
            "X1".into(),
            "X2".into(),
            "X3".into(),
        ]);
        flipped.remove_edge(0, 2);
        flipped.orient(1, 0);
        let rep = classify_errors(&flipped, &truth).unwrap();
        assert!(rep.kind3 && !rep.kind1 && !rep.kind2);
    }

    #[test]
    fn pattern_json_round_trip() {
        let truth = DirectedGraph::observed(4, &[(0, 2), (1, 2), (2, 3)]).unwrap();
        let h = oracle_pattern(&truth);
        let s = serde_json::to_string(&h).unwrap();
        let back: PatternGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(back.edges, h.edges);
        assert_eq!(back.triples, h.triples);
    }
}
