//! Directed graphs with observed/latent vertices and the structural queries
//! everything else is built on: d-separation, treks, t-separation, k-trek
//! systems, triangles, and seeded random DAG generation.
//!
//! All queries are pure functions on immutable graphs; a constructed graph is
//! never mutated.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::subsets_of_size;

pub type VertexId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Observed,
    Latent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    pub label: String,
    pub kind: VertexKind,
}

/// A possibly-cyclic directed graph. Vertex ids are dense `0..p`, iteration
/// order is deterministic, and self-loops are rejected at construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct DirectedGraph {
    vertices: Vec<Vertex>,
    edges: BTreeSet<(VertexId, VertexId)>,
    children: Vec<Vec<VertexId>>,
    parents: Vec<Vec<VertexId>>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: Vec<Vertex>,
    edges: Vec<(VertexId, VertexId)>,
}

impl From<DirectedGraph> for GraphJson {
    fn from(g: DirectedGraph) -> Self {
        GraphJson {
            vertices: g.vertices.clone(),
            edges: g.edges.iter().copied().collect(),
        }
    }
}

impl TryFrom<GraphJson> for DirectedGraph {
    type Error = Error;
    fn try_from(j: GraphJson) -> Result<Self> {
        for (i, v) in j.vertices.iter().enumerate() {
            if v.id != i {
                return Err(Error::invalid(format!(
                    "vertex ids must be dense 0..p in order; found id {} at position {}",
                    v.id, i
                )));
            }
        }
        DirectedGraph::new(
            j.vertices.into_iter().map(|v| (v.label, v.kind)).collect(),
            &j.edges,
        )
    }
}

impl DirectedGraph {
    pub fn new(vertices: Vec<(String, VertexKind)>, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        let p = vertices.len();
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(Error::invalid(format!("self-loop on vertex {a}")));
            }
            if a >= p || b >= p {
                return Err(Error::invalid(format!(
                    "edge ({a},{b}) references an undeclared vertex (p={p})"
                )));
            }
            set.insert((a, b));
        }
        let mut children = vec![Vec::new(); p];
        let mut parents = vec![Vec::new(); p];
        for &(a, b) in &set {
            children[a].push(b);
            parents[b].push(a);
        }
        Ok(DirectedGraph {
            vertices: vertices
                .into_iter()
                .enumerate()
                .map(|(id, (label, kind))| Vertex { id, label, kind })
                .collect(),
            edges: set,
            children,
            parents,
        })
    }

    /// Convenience constructor: `p` observed vertices labeled `X1..Xp`.
    pub fn observed(p: usize, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        Self::new(
            (0..p)
                .map(|i| (format!("X{}", i + 1), VertexKind::Observed))
                .collect(),
            edges,
        )
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        self.edges.contains(&(a, b))
    }

    pub fn adjacent(&self, a: VertexId, b: VertexId) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v]
    }

    pub fn parents(&self, v: VertexId) -> &[VertexId] {
        &self.parents[v]
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.vertices[v].label
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<VertexId> {
        self.vertices.iter().find(|v| v.label == label).map(|v| v.id)
    }

    pub fn observed_ids(&self) -> Vec<VertexId> {
        self.vertices
            .iter()
            .filter(|v| v.kind == VertexKind::Observed)
            .map(|v| v.id)
            .collect()
    }

    pub fn latent_ids(&self) -> Vec<VertexId> {
        self.vertices
            .iter()
            .filter(|v| v.kind == VertexKind::Latent)
            .map(|v| v.id)
            .collect()
    }

    /// Vertices reachable from `start` by directed paths (excluding `start`
    /// itself unless it lies on a cycle back to itself).
    pub fn descendants(&self, start: VertexId) -> BTreeSet<VertexId> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<VertexId> = self.children[start].iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            if seen.insert(v) {
                queue.extend(self.children[v].iter().copied());
            }
        }
        seen
    }

    pub fn ancestors(&self, start: VertexId) -> BTreeSet<VertexId> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<VertexId> = self.parents[start].iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            if seen.insert(v) {
                queue.extend(self.parents[v].iter().copied());
            }
        }
        seen
    }

    /// True iff there is a directed path from `a` to `b`.
    pub fn reaches(&self, a: VertexId, b: VertexId) -> bool {
        a == b || self.descendants(a).contains(&b)
    }
}

// ---------------------------------------------------------------------------
// acyclicity
// ---------------------------------------------------------------------------

/// True iff the graph has no directed cycle (Kahn's algorithm).
pub fn is_acyclic(g: &DirectedGraph) -> bool {
    let p = g.vertex_count();
    let mut indeg: Vec<usize> = (0..p).map(|v| g.parents(v).len()).collect();
    let mut queue: VecDeque<VertexId> = (0..p).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop_front() {
        seen += 1;
        for &c in g.children(v) {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    seen == p
}

/// A topological order, if one exists.
pub fn topological_order(g: &DirectedGraph) -> Option<Vec<VertexId>> {
    let p = g.vertex_count();
    let mut indeg: Vec<usize> = (0..p).map(|v| g.parents(v).len()).collect();
    let mut queue: VecDeque<VertexId> = (0..p).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(p);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &c in g.children(v) {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    (order.len() == p).then_some(order)
}

// ---------------------------------------------------------------------------
// d-separation
// ---------------------------------------------------------------------------

/// True iff `a_set` and `b_set` are d-separated given `c_set`: no undirected
/// path between them is active (a collider on the path must have itself or a
/// descendant in C; a non-collider must be outside C).
///
/// The three sets must be pairwise disjoint.
pub fn d_separated(
    g: &DirectedGraph,
    a_set: &[VertexId],
    b_set: &[VertexId],
    c_set: &[VertexId],
) -> Result<bool> {
    let pairwise = |x: &[VertexId], y: &[VertexId]| x.iter().any(|v| y.contains(v));
    if pairwise(a_set, b_set) || pairwise(a_set, c_set) || pairwise(b_set, c_set) {
        return Err(Error::invalid("d-separation inputs must be pairwise disjoint"));
    }
    let p = g.vertex_count();
    let in_c = vec_flag(p, c_set);
    // Vertices that are in C or have a descendant in C.
    let mut anc_of_c = in_c.clone();
    {
        let mut queue: VecDeque<VertexId> = c_set.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for &par in g.parents(v) {
                if !anc_of_c[par] {
                    anc_of_c[par] = true;
                    queue.push_back(par);
                }
            }
        }
    }

    // Reachability over (vertex, arrival direction) states.
    // `Down` = arrived through an edge pointing into the vertex;
    // `Up` = arrived through an edge pointing out of the vertex.
    const UP: usize = 0;
    const DOWN: usize = 1;
    let mut visited = vec![[false; 2]; p];
    let mut queue: VecDeque<(VertexId, usize)> = VecDeque::new();
    for &a in a_set {
        queue.push_back((a, UP));
        visited[a][UP] = true;
    }
    let b_flag = vec_flag(p, b_set);
    while let Some((v, dir)) = queue.pop_front() {
        if b_flag[v] {
            return Ok(false);
        }
        if dir == UP {
            if !in_c[v] {
                for &par in g.parents(v) {
                    if !visited[par][UP] {
                        visited[par][UP] = true;
                        queue.push_back((par, UP));
                    }
                }
                for &ch in g.children(v) {
                    if !visited[ch][DOWN] {
                        visited[ch][DOWN] = true;
                        queue.push_back((ch, DOWN));
                    }
                }
            }
        } else {
            if !in_c[v] {
                for &ch in g.children(v) {
                    if !visited[ch][DOWN] {
                        visited[ch][DOWN] = true;
                        queue.push_back((ch, DOWN));
                    }
                }
            }
            if anc_of_c[v] {
                for &par in g.parents(v) {
                    if !visited[par][UP] {
                        visited[par][UP] = true;
                        queue.push_back((par, UP));
                    }
                }
            }
        }
    }
    Ok(true)
}

fn vec_flag(p: usize, set: &[VertexId]) -> Vec<bool> {
    let mut f = vec![false; p];
    for &v in set {
        f[v] = true;
    }
    f
}

// ---------------------------------------------------------------------------
// treks
// ---------------------------------------------------------------------------

/// A trek between two endpoints: a pair of directed paths leaving a common
/// `top`. Each side is stored top-first; a one-sided trek has a trivial side
/// consisting of just the top.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trek {
    pub top: VertexId,
    pub side_a: Vec<VertexId>,
    pub side_b: Vec<VertexId>,
    /// True when the two sides intersect only at the top and neither side
    /// repeats a vertex.
    pub simple: bool,
}

impl Trek {
    /// Validity: both sides start at the top and follow edges of `g`.
    pub fn is_valid(&self, g: &DirectedGraph) -> bool {
        let path_ok = |path: &[VertexId]| {
            path.first() == Some(&self.top)
                && path.windows(2).all(|w| g.has_edge(w[0], w[1]))
        };
        path_ok(&self.side_a) && path_ok(&self.side_b)
    }
}

/// An ordered collection of `k` directed paths leaving one top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KTrek {
    pub top: VertexId,
    pub sides: Vec<Vec<VertexId>>,
}

/// A system of `n` k-treks whose side-`i` endpoints form `end_sets[i]`.
#[derive(Debug, Clone)]
pub struct KTrekSystem {
    pub treks: Vec<KTrek>,
    pub end_sets: Vec<Vec<VertexId>>,
}

impl KTrekSystem {
    /// Two distinct treks share a vertex on the same side.
    pub fn has_sided_intersection(&self) -> bool {
        let k = match self.treks.first() {
            Some(t) => t.sides.len(),
            None => return false,
        };
        for i in 0..k {
            for a in 0..self.treks.len() {
                for b in a + 1..self.treks.len() {
                    let sa = &self.treks[a].sides[i];
                    let sb = &self.treks[b].sides[i];
                    if sa.iter().any(|v| sb.contains(v)) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// All simple directed paths from `from` to `to` with at most `max_edges`
/// edges, in lexicographic order. The trivial path `[from]` is included when
/// `from == to`.
pub fn simple_directed_paths(
    g: &DirectedGraph,
    from: VertexId,
    to: VertexId,
    max_edges: usize,
) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    let mut stack = vec![from];
    let mut on_path = vec![false; g.vertex_count()];
    on_path[from] = true;
    fn dfs(
        g: &DirectedGraph,
        to: VertexId,
        max_edges: usize,
        stack: &mut Vec<VertexId>,
        on_path: &mut Vec<bool>,
        out: &mut Vec<Vec<VertexId>>,
    ) {
        let cur = *stack.last().unwrap();
        if cur == to {
            // a longer continuation would have to revisit `to`
            out.push(stack.clone());
            return;
        }
        if stack.len() > max_edges {
            return;
        }
        for &c in g.children(cur) {
            if !on_path[c] {
                on_path[c] = true;
                stack.push(c);
                dfs(g, to, max_edges, stack, on_path, out);
                stack.pop();
                on_path[c] = false;
            }
        }
    }
    dfs(g, to, max_edges, &mut stack, &mut on_path, &mut out);
    out.sort();
    out
}

/// All treks between `x` and `y` whose two sides are simple directed paths,
/// in deterministic order. The `simple` flag marks treks whose sides meet
/// only at the top.
pub fn enumerate_simple_treks(g: &DirectedGraph, x: VertexId, y: VertexId) -> Vec<Trek> {
    let p = g.vertex_count();
    let mut out = Vec::new();
    for top in 0..p {
        let to_x = simple_directed_paths(g, top, x, p);
        if to_x.is_empty() {
            continue;
        }
        let to_y = simple_directed_paths(g, top, y, p);
        for pa in &to_x {
            for pb in &to_y {
                let shared = pa
                    .iter()
                    .filter(|v| pb.contains(v))
                    .any(|&v| v != top);
                out.push(Trek {
                    top,
                    side_a: pa.clone(),
                    side_b: pb.clone(),
                    simple: !shared,
                });
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// t-separation
// ---------------------------------------------------------------------------

/// Vertices `t` from which some vertex of `targets` is reachable by a
/// directed path whose vertices (including `t` and the endpoint) all avoid
/// `avoid`.
fn trek_sources_avoiding(g: &DirectedGraph, targets: &[VertexId], avoid: &[VertexId]) -> Vec<bool> {
    let p = g.vertex_count();
    let blocked = vec_flag(p, avoid);
    let mut ok = vec![false; p];
    let mut queue = VecDeque::new();
    for &t in targets {
        if !blocked[t] && !ok[t] {
            ok[t] = true;
            queue.push_back(t);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &par in g.parents(v) {
            if !blocked[par] && !ok[par] {
                ok[par] = true;
                queue.push_back(par);
            }
        }
    }
    ok
}

/// True iff every trek from `a_set` to `b_set` has its A-side intercepted by
/// `c_a` or its B-side intercepted by `c_b`.
///
/// Decided via reachability on simple paths, which is sufficient: a directed
/// walk avoiding a vertex set contains a simple path with the same endpoints
/// avoiding the same set.
pub fn t_separates(
    g: &DirectedGraph,
    c_a: &[VertexId],
    c_b: &[VertexId],
    a_set: &[VertexId],
    b_set: &[VertexId],
) -> bool {
    let src_a = trek_sources_avoiding(g, a_set, c_a);
    let src_b = trek_sources_avoiding(g, b_set, c_b);
    !(0..g.vertex_count()).any(|v| src_a[v] && src_b[v])
}

/// Result of a bounded minimal-choke-set search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinTsep {
    Size(usize),
    ExceedsBound,
}

impl MinTsep {
    pub fn size(self) -> Option<usize> {
        match self {
            MinTsep::Size(s) => Some(s),
            MinTsep::ExceedsBound => None,
        }
    }
}

/// Default vertex-count cap for exhaustive choke-set searches.
pub const DEFAULT_TSEP_VERTEX_CAP: usize = 14;

/// Minimum `|C_A| + |C_B|` over t-separating pairs, by exhaustive search over
/// subset pairs of ascending total size up to `bound`.
pub fn min_tsep_size(
    g: &DirectedGraph,
    a_set: &[VertexId],
    b_set: &[VertexId],
    bound: usize,
) -> Result<MinTsep> {
    min_tsep_size_with_cap(g, a_set, b_set, bound, DEFAULT_TSEP_VERTEX_CAP)
}

/// As [`min_tsep_size`], with an explicit vertex-count cap override.
pub fn min_tsep_size_with_cap(
    g: &DirectedGraph,
    a_set: &[VertexId],
    b_set: &[VertexId],
    bound: usize,
    vertex_cap: usize,
) -> Result<MinTsep> {
    if g.vertex_count() > vertex_cap {
        return Err(Error::guard(
            format!("exhaustive choke-set search on {} vertices", g.vertex_count()),
            vertex_cap,
            "the vertex-cap override",
        ));
    }
    let all: Vec<VertexId> = (0..g.vertex_count()).collect();
    for total in 0..=bound {
        for size_a in 0..=total {
            let size_b = total - size_a;
            for ca in subsets_of_size(&all, size_a) {
                for cb in subsets_of_size(&all, size_b) {
                    if t_separates(g, &ca, &cb, a_set, b_set) {
                        return Ok(MinTsep::Size(total));
                    }
                }
            }
        }
    }
    Ok(MinTsep::ExceedsBound)
}

// ---------------------------------------------------------------------------
// k-trek separation and k-trek systems
// ---------------------------------------------------------------------------

/// True iff `(choke[0], .., choke[k-1])` k-trek-separates `(sets[0], ..,
/// sets[k-1])`: every k-trek between the sets has some side `j` containing a
/// vertex of `choke[j]`.
pub fn k_trek_separates(g: &DirectedGraph, choke: &[Vec<VertexId>], sets: &[Vec<VertexId>]) -> bool {
    assert_eq!(choke.len(), sets.len());
    let mut common: Option<Vec<bool>> = None;
    for (a_j, s_j) in choke.iter().zip(sets) {
        let src = trek_sources_avoiding(g, s_j, a_j);
        common = Some(match common {
            None => src,
            Some(prev) => prev.iter().zip(&src).map(|(&a, &b)| a && b).collect(),
        });
    }
    !common.unwrap_or_default().iter().any(|&b| b)
}

/// Complexity guard for the k-trek-system search: maximum number of candidate
/// treks considered per system slot.
const KTREK_CANDIDATE_CAP: usize = 200_000;
/// Backtracking node budget for the system search.
const KTREK_NODE_CAP: usize = 5_000_000;

/// Exhaustively decides whether every system of k-treks between the equal-size
/// sets `sets` (sides simple, at most `len_cap` edges per side) has a sided
/// intersection.
pub fn every_ktrek_system_has_sided_intersection(
    g: &DirectedGraph,
    sets: &[Vec<VertexId>],
    len_cap: usize,
) -> Result<bool> {
    let k = sets.len();
    if k < 2 {
        return Err(Error::invalid("a k-trek system needs k >= 2 sets"));
    }
    let n = sets[0].len();
    if sets.iter().any(|s| s.len() != n) {
        return Err(Error::invalid("all end sets must have equal cardinality"));
    }
    if g.vertex_count() > DEFAULT_TSEP_VERTEX_CAP {
        return Err(Error::guard(
            format!("k-trek system search on {} vertices", g.vertex_count()),
            DEFAULT_TSEP_VERTEX_CAP,
            "the vertex-cap override",
        ));
    }

    // Cache simple paths per (top, endpoint).
    let p = g.vertex_count();
    let mut paths: Vec<Vec<Option<Vec<Vec<VertexId>>>>> = vec![vec![None; p]; p];
    let path_list = |from: VertexId, to: VertexId, cache: &mut Vec<Vec<Option<Vec<Vec<VertexId>>>>>| {
        if cache[from][to].is_none() {
            cache[from][to] = Some(simple_directed_paths(g, from, to, len_cap));
        }
        cache[from][to].clone().unwrap()
    };

    // Without loss of generality fix the side-0 endpoint of slot m to
    // sets[0][m] and permute the remaining sides' endpoints.
    let mut assignments: Vec<Vec<Vec<VertexId>>> = vec![Vec::new()];
    for s in sets.iter().skip(1) {
        let perms = permutations(s);
        let mut next = Vec::new();
        for a in &assignments {
            for perm in &perms {
                let mut a2 = a.clone();
                a2.push(perm.clone());
                next.push(a2);
            }
        }
        assignments = next;
    }

    let mut nodes = 0usize;
    for assign in &assignments {
        // endpoint tuple for slot m: (sets[0][m], assign[0][m], .., assign[k-2][m])
        let mut slot_candidates: Vec<Vec<KTrek>> = Vec::with_capacity(n);
        let mut feasible = true;
        for m in 0..n {
            let mut endpoints = Vec::with_capacity(k);
            endpoints.push(sets[0][m]);
            for side in assign {
                endpoints.push(side[m]);
            }
            let mut cands = Vec::new();
            for top in 0..p {
                let per_side: Vec<Vec<Vec<VertexId>>> = endpoints
                    .iter()
                    .map(|&e| path_list(top, e, &mut paths))
                    .collect();
                if per_side.iter().any(|ps| ps.is_empty()) {
                    continue;
                }
                let count: usize = per_side.iter().map(|ps| ps.len()).product();
                if cands.len() + count > KTREK_CANDIDATE_CAP {
                    return Err(Error::guard(
                        "k-trek candidate enumeration",
                        KTREK_CANDIDATE_CAP,
                        "a smaller len-cap or smaller sets",
                    ));
                }
                let mut idx = vec![0usize; k];
                loop {
                    cands.push(KTrek {
                        top,
                        sides: (0..k).map(|i| per_side[i][idx[i]].clone()).collect(),
                    });
                    // odometer
                    let mut carry = k;
                    while carry > 0 {
                        carry -= 1;
                        idx[carry] += 1;
                        if idx[carry] < per_side[carry].len() {
                            break;
                        }
                        idx[carry] = 0;
                        if carry == 0 {
                            carry = usize::MAX;
                            break;
                        }
                    }
                    if carry == usize::MAX {
                        break;
                    }
                }
            }
            if cands.is_empty() {
                feasible = false;
                break;
            }
            slot_candidates.push(cands);
        }
        if !feasible {
            continue;
        }
        // Backtracking: try to build a system with pairwise side-disjoint treks.
        let mut used: Vec<Vec<VertexId>> = vec![Vec::new(); k];
        if search_disjoint(&slot_candidates, 0, &mut used, &mut nodes)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn search_disjoint(
    slots: &[Vec<KTrek>],
    m: usize,
    used: &mut Vec<Vec<VertexId>>,
    nodes: &mut usize,
) -> Result<bool> {
    if m == slots.len() {
        return Ok(true);
    }
    for cand in &slots[m] {
        *nodes += 1;
        if *nodes > KTREK_NODE_CAP {
            return Err(Error::guard(
                "k-trek system backtracking",
                KTREK_NODE_CAP,
                "a smaller len-cap or smaller sets",
            ));
        }
        let clash = cand
            .sides
            .iter()
            .enumerate()
            .any(|(i, side)| side.iter().any(|v| used[i].contains(v)));
        if clash {
            continue;
        }
        let marks: Vec<usize> = used.iter().map(|u| u.len()).collect();
        for (i, side) in cand.sides.iter().enumerate() {
            used[i].extend(side.iter().copied());
        }
        if search_disjoint(slots, m + 1, used, nodes)? {
            return Ok(true);
        }
        for (i, u) in used.iter_mut().enumerate() {
            u.truncate(marks[i]);
        }
    }
    Ok(false)
}

fn permutations<T: Copy>(items: &[T]) -> Vec<Vec<T>> {
    fn rec<T: Copy>(pool: &mut Vec<T>, current: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if pool.is_empty() {
            out.push(current.clone());
            return;
        }
        for i in 0..pool.len() {
            let v = pool.remove(i);
            current.push(v);
            rec(pool, current, out);
            current.pop();
            pool.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut items.to_vec(), &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// triangles
// ---------------------------------------------------------------------------

/// A pairwise-adjacent vertex triple, reported once with ascending ids.
/// `collider` is the vertex with both triangle edges incoming, when one
/// exists (a cyclic triangle has none).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub vertices: [VertexId; 3],
    pub collider: Option<VertexId>,
}

pub fn find_triangles(g: &DirectedGraph) -> Vec<Triangle> {
    let p = g.vertex_count();
    let mut out = Vec::new();
    for x in 0..p {
        for y in x + 1..p {
            if !g.adjacent(x, y) {
                continue;
            }
            for z in y + 1..p {
                if g.adjacent(x, z) && g.adjacent(y, z) {
                    let collider = [x, y, z]
                        .into_iter()
                        .find(|&v| {
                            let others: Vec<_> =
                                [x, y, z].into_iter().filter(|&o| o != v).collect();
                            others.iter().all(|&o| g.has_edge(o, v) && !g.has_edge(v, o))
                        });
                    out.push(Triangle {
                        vertices: [x, y, z],
                        collider,
                    });
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// random DAGs
// ---------------------------------------------------------------------------

/// Random DAG over `p` observed vertices: a uniformly shuffled vertex order,
/// each forward edge (low order to high order) included independently with
/// probability `expected_neighborhood_size / (p - 1)`. Bit-reproducible per
/// seed.
pub fn random_dag(p: usize, expected_neighborhood_size: f64, seed: u64) -> Result<DirectedGraph> {
    if p < 1 {
        return Err(Error::invalid("random_dag needs p >= 1"));
    }
    let max_nb = (p - 1) as f64;
    if !(0.0..=max_nb).contains(&expected_neighborhood_size) {
        return Err(Error::invalid(format!(
            "expected neighborhood size {expected_neighborhood_size} outside [0, {max_nb}]"
        )));
    }
    let prob = if p == 1 {
        0.0
    } else {
        expected_neighborhood_size / max_nb
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<VertexId> = (0..p).collect();
    order.shuffle(&mut rng);
    let mut edges = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if rng.random::<f64>() < prob {
                edges.push((order[i], order[j]));
            }
        }
    }
    DirectedGraph::observed(p, &edges)
}
