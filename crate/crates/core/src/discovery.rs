//! Latent causal structure discovery: rank-based clustering of observed
//! variables, cycle detection between measured children and their latent
//! parents, causal-order learning over latent blocks, block-cycle detection
//! with pruning, and the evaluation metrics.
//!
//! Every decision routes through a [`DiscoveryBackend`]: a statistical
//! backend over data, or a separation oracle over the true graph. The oracle
//! backend validates algorithm logic independently of estimation error.
//!
//! Modeling preconditions that cannot be checked from data: latents must be
//! extroverted parents (on treks between their children and every other
//! measured variable), and the root tests presuppose each candidate block
//! has twice as many children as latents. A block with fewer children is
//! never certified as a root rather than rejected with an error, so the
//! pipeline can still order what remains.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    min_tsep_size_with_cap, t_separates, DirectedGraph, MinTsep, VertexId, VertexKind,
};
use crate::numeric::{sub_seed, subsets_of_size};
use crate::sem::Dataset;
use crate::stats::{estimated_rank, gin_test, projected_independence_test, GinConfig};

// ---------------------------------------------------------------------------
// domain types
// ---------------------------------------------------------------------------

/// Why a cluster was marked cyclic (auditable provenance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CyclicEvidence {
    /// The residual-independence check against the remaining variables
    /// failed during clustering.
    ResidualDependence,
    /// The cross rank to the remaining variables fell below the believed
    /// latent count during the causal-order recheck.
    RankDeficit { rank: usize, believed_latents: usize },
}

/// A causal cluster of observed columns sharing one latent parent set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalCluster {
    /// Observed column indices, ascending.
    pub members: Vec<usize>,
    pub latent_count: usize,
    pub cyclic: bool,
    pub evidence: Option<CyclicEvidence>,
}

/// Ordered strata of cluster indices (earliest first) plus groups of
/// clusters whose latent blocks form cycles with each other. Clusters inside
/// one stratum carry no mutual order claim.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartialCausalOrder {
    pub strata: Vec<Vec<usize>>,
    pub block_cycle_groups: Vec<Vec<usize>>,
}

impl PartialCausalOrder {
    /// Stratum index of a cluster, if placed.
    pub fn stratum_of(&self, cluster: usize) -> Option<usize> {
        self.strata.iter().position(|s| s.contains(&cluster))
    }

    fn assert_consistent(&self) {
        let mut seen = BTreeSet::new();
        for s in &self.strata {
            for &c in s {
                assert!(seen.insert(c), "cluster {c} appears in two strata");
            }
        }
        for group in &self.block_cycle_groups {
            let strata: BTreeSet<_> = group.iter().map(|&c| self.stratum_of(c)).collect();
            assert!(
                strata.len() <= 1,
                "block-cycle group split across strata: {group:?}"
            );
        }
    }
}

/// Clusters plus the learned partial order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscoveryResult {
    pub labels: Vec<String>,
    pub clusters: Vec<CausalCluster>,
    pub order: PartialCausalOrder,
}

#[derive(Debug, Clone, Copy)]
pub struct DiscoveryOptions {
    /// Largest latent count probed by the cluster loop (subset size cap
    /// `k + 1 <= max_latents + 1`).
    pub max_latents: usize,
    /// Largest observed-variable count accepted.
    pub vertex_cap: usize,
    /// Round the updated latent count of cyclic clusters up instead of down.
    pub round_latents_up: bool,
}

impl Default for DiscoveryOptions {
    fn default() -> Self {
        DiscoveryOptions {
            max_latents: 4,
            vertex_cap: 16,
            round_latents_up: false,
        }
    }
}

// ---------------------------------------------------------------------------
// backends
// ---------------------------------------------------------------------------

/// The three statistical questions the discovery algorithms ask.
pub trait DiscoveryBackend {
    fn column_count(&self) -> usize;
    fn labels(&self) -> Vec<String>;
    /// Estimated rank of the cross-covariance of the two column sets,
    /// capped: any value above `cap` may be reported as `cap + 1`.
    fn rank(&self, a: &[usize], b: &[usize], cap: usize) -> Result<usize>;
    /// Does `(Z, Y)` satisfy the generalized independence-noise condition?
    fn gin_holds(&self, z: &[usize], y: &[usize]) -> Result<bool>;
    /// Is the projection of `y` that cancels the anchor set independent of
    /// `w`? (The block-cycle probe.)
    fn projected_independent(&self, y: &[usize], anchor: &[usize], w: &[usize]) -> Result<bool>;
}

/// Graph-truth backend: rank via minimal choke sets, the independence-noise
/// condition via trek separation, and the block-cycle probe via directed
/// reachability between latent parent sets.
pub struct OracleBackend<'a> {
    graph: &'a DirectedGraph,
    observed: Vec<VertexId>,
}

impl<'a> OracleBackend<'a> {
    pub fn new(graph: &'a DirectedGraph) -> Result<Self> {
        let observed = graph.observed_ids();
        if observed.len() < 2 {
            return Err(Error::invalid("oracle backend needs at least 2 observed vertices"));
        }
        Ok(OracleBackend { graph, observed })
    }

    fn to_vertices(&self, cols: &[usize]) -> Vec<VertexId> {
        cols.iter().map(|&c| self.observed[c]).collect()
    }

    fn latent_parents(&self, cols: &[usize]) -> BTreeSet<VertexId> {
        let mut out = BTreeSet::new();
        for &c in cols {
            for &p in self.graph.parents(self.observed[c]) {
                if self.graph.vertices()[p].kind == VertexKind::Latent {
                    out.insert(p);
                }
            }
        }
        out
    }
}

impl DiscoveryBackend for OracleBackend<'_> {
    fn column_count(&self) -> usize {
        self.observed.len()
    }

    fn labels(&self) -> Vec<String> {
        self.observed
            .iter()
            .map(|&v| self.graph.label(v).to_string())
            .collect()
    }

    fn rank(&self, a: &[usize], b: &[usize], cap: usize) -> Result<usize> {
        let av = self.to_vertices(a);
        let bv = self.to_vertices(b);
        match min_tsep_size_with_cap(self.graph, &av, &bv, cap, usize::MAX)? {
            MinTsep::Size(s) => Ok(s),
            MinTsep::ExceedsBound => Ok(cap + 1),
        }
    }

    fn gin_holds(&self, z: &[usize], y: &[usize]) -> Result<bool> {
        if z.is_empty() {
            // nothing left to be dependent on
            return Ok(true);
        }
        let zv = self.to_vertices(z);
        let yv = self.to_vertices(y);
        let all: Vec<VertexId> = (0..self.graph.vertex_count()).collect();
        for size in 0..yv.len() {
            for c_y in subsets_of_size(&all, size) {
                if t_separates(self.graph, &[], &c_y, &zv, &yv) {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    fn projected_independent(&self, y: &[usize], _anchor: &[usize], w: &[usize]) -> Result<bool> {
        // After the anchor channel is cancelled, dependence survives exactly
        // when the latent blocks reach one another by a directed path.
        let ly = self.latent_parents(y);
        let lw = self.latent_parents(w);
        for &a in &ly {
            for &b in &lw {
                if self.graph.reaches(a, b) || self.graph.reaches(b, a) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Statistical backend over a dataset.
pub struct SampleBackend<'a> {
    data: &'a Dataset,
    /// Level for rank tests.
    pub rank_alpha: f64,
    /// Level for kernel independence decisions.
    pub kernel_alpha: f64,
    pub gin_config: GinConfig,
    pub seed: u64,
}

impl<'a> SampleBackend<'a> {
    pub fn new(data: &'a Dataset, seed: u64) -> Self {
        SampleBackend {
            data,
            rank_alpha: 0.01,
            kernel_alpha: 0.05,
            gin_config: GinConfig::default(),
            seed,
        }
    }
}

impl DiscoveryBackend for SampleBackend<'_> {
    fn column_count(&self) -> usize {
        self.data.p()
    }

    fn labels(&self) -> Vec<String> {
        self.data.labels().to_vec()
    }

    fn rank(&self, a: &[usize], b: &[usize], _cap: usize) -> Result<usize> {
        estimated_rank(self.data, a, b, self.rank_alpha)
    }

    fn gin_holds(&self, z: &[usize], y: &[usize]) -> Result<bool> {
        if z.is_empty() {
            return Ok(true);
        }
        let mut key = 0xA11Du64;
        for &c in z.iter().chain(y) {
            key = key.wrapping_mul(1_000_003).wrapping_add(c as u64 + 1);
        }
        let out = gin_test(
            self.data,
            z,
            y,
            self.kernel_alpha,
            sub_seed(self.seed, key),
            self.gin_config,
        )?;
        Ok(out.result.independent)
    }

    fn projected_independent(&self, y: &[usize], anchor: &[usize], w: &[usize]) -> Result<bool> {
        let mut key = 0xB10Cu64;
        for &c in y.iter().chain(anchor).chain(w) {
            key = key.wrapping_mul(1_000_003).wrapping_add(c as u64 + 1);
        }
        let res = projected_independence_test(
            self.data,
            y,
            anchor,
            w,
            self.kernel_alpha,
            sub_seed(self.seed, key),
            self.gin_config,
        )?;
        Ok(res.independent)
    }
}

// ---------------------------------------------------------------------------
// stage 1: clustering and cycle flags
// ---------------------------------------------------------------------------

/// Rank-loop clustering followed by the residual-independence cycle check.
///
/// For ascending k, every (k+1)-subset of still-unclustered columns whose
/// cross rank against all other columns is at most k becomes a cluster seed;
/// overlapping seeds merge. A cluster whose residual projection stays
/// dependent on the remaining columns is marked cyclic and its latent count
/// re-estimated from within-cluster split ranks.
pub fn find_causal_cyclic_clusters(
    backend: &dyn DiscoveryBackend,
    opts: &DiscoveryOptions,
) -> Result<Vec<CausalCluster>> {
    let m = backend.column_count();
    if m < 4 {
        return Err(Error::invalid("clustering needs at least 4 columns"));
    }
    if m > opts.vertex_cap {
        return Err(Error::guard(
            format!("cluster subset search over {m} columns"),
            opts.vertex_cap,
            "DiscoveryOptions::vertex_cap",
        ));
    }
    let columns: Vec<usize> = (0..m).collect();
    let mut active = columns.clone();
    let mut clusters: Vec<CausalCluster> = Vec::new();
    let mut k = 1usize;
    while !active.is_empty() && active.len() > k && k <= opts.max_latents {
        let mut seeds: Vec<BTreeSet<usize>> = Vec::new();
        for s in subsets_of_size(&active, k + 1) {
            let complement: Vec<usize> =
                columns.iter().copied().filter(|c| !s.contains(c)).collect();
            if complement.is_empty() {
                continue;
            }
            if backend.rank(&s, &complement, k)? <= k {
                seeds.push(s.into_iter().collect());
            }
        }
        for merged in merge_overlapping(seeds) {
            let members: Vec<usize> = merged.into_iter().collect();
            active.retain(|c| !members.contains(c));
            clusters.push(CausalCluster {
                members,
                latent_count: k,
                cyclic: false,
                evidence: None,
            });
        }
        k += 1;
    }
    clusters.sort_by_key(|c| c.members[0]);

    // Residual-independence cycle check against everything else.
    for cluster in &mut clusters {
        let complement: Vec<usize> = columns
            .iter()
            .copied()
            .filter(|c| !cluster.members.contains(c))
            .collect();
        if complement.is_empty() {
            continue;
        }
        if !backend.gin_holds(&complement, &cluster.members)? {
            cluster.cyclic = true;
            cluster.evidence = Some(CyclicEvidence::ResidualDependence);
            cluster.latent_count = updated_latent_count(backend, &cluster.members, opts)?;
        }
    }
    Ok(clusters)
}

/// Merge overlapping sets until a fixpoint; canonical order by smallest
/// element. The result does not depend on the input order.
fn merge_overlapping(mut sets: Vec<BTreeSet<usize>>) -> Vec<BTreeSet<usize>> {
    loop {
        let mut merged_any = false;
        let mut out: Vec<BTreeSet<usize>> = Vec::new();
        'next: for s in sets {
            for t in &mut out {
                if !t.is_disjoint(&s) {
                    t.extend(s);
                    merged_any = true;
                    continue 'next;
                }
            }
            out.push(s);
        }
        sets = out;
        if !merged_any {
            sets.sort_by_key(|s| *s.first().unwrap());
            return sets;
        }
    }
}

/// Latent count of a cyclic cluster: half the largest within-cluster split
/// rank, rounded per the configured direction, never below one.
fn updated_latent_count(
    backend: &dyn DiscoveryBackend,
    members: &[usize],
    opts: &DiscoveryOptions,
) -> Result<usize> {
    let mut max_rank = 0usize;
    for size in 1..members.len() {
        for part in subsets_of_size(members, size) {
            let rest: Vec<usize> = members
                .iter()
                .copied()
                .filter(|c| !part.contains(c))
                .collect();
            let cap = part.len().min(rest.len());
            let r = backend.rank(&part, &rest, cap)?.min(cap);
            max_rank = max_rank.max(r);
        }
    }
    let count = if opts.round_latents_up {
        max_rank.div_ceil(2)
    } else {
        max_rank / 2
    };
    Ok(count.max(1))
}

// ---------------------------------------------------------------------------
// stage 2: causal order over acyclic clusters
// ---------------------------------------------------------------------------

/// Children split of a block for the root tests: the first `dim` members and
/// the next `dim` members (or what is available).
fn split_halves(cluster: &CausalCluster) -> (Vec<usize>, Vec<usize>) {
    let d = cluster.latent_count;
    let first: Vec<usize> = cluster.members.iter().copied().take(d).collect();
    let second: Vec<usize> = cluster.members.iter().copied().skip(d).take(d).collect();
    (first, second)
}

/// Root test: is `r`'s latent block causally no later than every block in
/// `others`, given already-ordered blocks `earlier`? The candidate needs
/// `2 * latent_count` children to form the prescribed split.
fn is_root(
    backend: &dyn DiscoveryBackend,
    clusters: &[CausalCluster],
    r: usize,
    others: &[usize],
    earlier: &[usize],
) -> Result<bool> {
    let cand = &clusters[r];
    if cand.members.len() < 2 * cand.latent_count {
        return Ok(false); // too few children to certify a root
    }
    let (r_first, r_second) = split_halves(cand);
    for &k in others {
        let other = &clusters[k];
        if other.members.len() < other.latent_count {
            return Ok(false);
        }
        let mut z = r_second.clone();
        let mut y = r_first.clone();
        y.extend(other.members.iter().copied().take(other.latent_count));
        for &t in earlier {
            let (t_first, t_second) = split_halves(&clusters[t]);
            z.extend(t_first);
            y.extend(t_second);
        }
        if !backend.gin_holds(&z, &y)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Recursive single-root extraction over acyclic clusters. When no root
/// exists at some stage, the remaining blocks tie into one stratum (the
/// signal that block cycles or shared confounding prevent further ordering).
pub fn learn_latent_causal_order(
    backend: &dyn DiscoveryBackend,
    clusters: &[CausalCluster],
    acyclic: &[usize],
) -> Result<PartialCausalOrder> {
    let mut remaining: Vec<usize> = acyclic.to_vec();
    let mut strata: Vec<Vec<usize>> = Vec::new();
    let mut earlier: Vec<usize> = Vec::new();
    while !remaining.is_empty() {
        if remaining.len() == 1 {
            strata.push(vec![remaining[0]]);
            break;
        }
        let mut root: Option<usize> = None;
        for (pos, &r) in remaining.iter().enumerate() {
            let others: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&c| c != r)
                .collect();
            if is_root(backend, clusters, r, &others, &earlier)? {
                root = Some(pos);
                break;
            }
        }
        match root {
            Some(pos) => {
                let r = remaining.remove(pos);
                strata.push(vec![r]);
                earlier.push(r);
            }
            None => {
                strata.push(remaining.clone());
                remaining.clear();
            }
        }
    }
    let order = PartialCausalOrder {
        strata,
        block_cycle_groups: Vec::new(),
    };
    order.assert_consistent();
    Ok(order)
}

// ---------------------------------------------------------------------------
// stage 3: cyclic clusters against the acyclic ruler
// ---------------------------------------------------------------------------

/// Re-tests the causally latest stratum for hidden cycles (cross rank below
/// the believed latent count), then places every cyclic cluster relative to
/// the acyclic ruler by scanning latest to earliest with the root test.
/// Cyclic clusters that cannot be placed keep the position they held when
/// removed (newly reclassified ones) or join a trailing stratum.
pub fn learn_order_for_cyclic_clusters(
    backend: &dyn DiscoveryBackend,
    clusters: &mut [CausalCluster],
    order: &PartialCausalOrder,
    opts: &DiscoveryOptions,
) -> Result<PartialCausalOrder> {
    let m = backend.column_count();
    let columns: Vec<usize> = (0..m).collect();
    let mut strata = order.strata.clone();

    // (1) recheck the latest stratum for cycles the residual test missed
    let mut reclassified: Vec<(usize, Option<usize>)> = Vec::new(); // (cluster, origin stratum)
    if let Some(last) = strata.len().checked_sub(1) {
        let last_blocks = strata[last].clone();
        for c in last_blocks {
            if clusters[c].cyclic {
                continue;
            }
            let members = clusters[c].members.clone();
            let complement: Vec<usize> = columns
                .iter()
                .copied()
                .filter(|v| !members.contains(v))
                .collect();
            if complement.is_empty() {
                continue;
            }
            let believed = clusters[c].latent_count;
            let r = backend.rank(&members, &complement, believed)?;
            if r < believed {
                clusters[c].cyclic = true;
                clusters[c].evidence = Some(CyclicEvidence::RankDeficit {
                    rank: r,
                    believed_latents: believed,
                });
                clusters[c].latent_count = updated_latent_count(backend, &members, opts)?;
                strata[last].retain(|&b| b != c);
                reclassified.push((c, Some(last)));
            }
        }
        if strata[last].is_empty() {
            strata.remove(last);
        }
    }

    // (2) place all cyclic clusters against the acyclic ruler
    let mut placements: Vec<(usize, Option<usize>)> = Vec::new(); // (cluster, later-than stratum)
    let stage1_cyclic: Vec<usize> = (0..clusters.len())
        .filter(|&c| clusters[c].cyclic && !reclassified.iter().any(|&(rc, _)| rc == c))
        .collect();
    for &c in stage1_cyclic.iter().chain(reclassified.iter().map(|(c, _)| c)) {
        let mut placed: Option<usize> = None;
        'scan: for si in (0..strata.len()).rev() {
            for &r in &strata[si] {
                if clusters[r].cyclic {
                    continue;
                }
                let earlier: Vec<usize> = strata[..si].iter().flatten().copied().collect();
                if later_than(backend, clusters, c, r, &earlier)? {
                    placed = Some(si);
                    break 'scan;
                }
            }
        }
        placements.push((c, placed));
    }

    // apply placements: clusters later than stratum si collect into a new
    // stratum after si (or merge into an equally-placed group); the
    // unplaced reclassified ones return to their origin stratum, remaining
    // stage-1 cyclics join a trailing stratum
    let mut insertions: Vec<(usize, Vec<usize>)> = Vec::new(); // (after stratum, clusters)
    let mut trailing: Vec<usize> = Vec::new();
    for (c, placed) in placements {
        match placed {
            Some(si) => {
                if let Some(entry) = insertions.iter_mut().find(|(s, _)| *s == si) {
                    entry.1.push(c);
                } else {
                    insertions.push((si, vec![c]));
                }
            }
            None => {
                let origin = reclassified
                    .iter()
                    .find(|&&(rc, _)| rc == c)
                    .and_then(|&(_, o)| o);
                match origin {
                    Some(o) if o < strata.len() => strata[o].push(c),
                    Some(_) | None => trailing.push(c),
                }
            }
        }
    }
    insertions.sort_by_key(|(si, _)| *si);
    for (si, group) in insertions.into_iter().rev() {
        strata.insert(si + 1, group);
    }
    if !trailing.is_empty() {
        strata.push(trailing);
    }
    for stratum in &mut strata {
        stratum.sort_unstable();
    }
    let out = PartialCausalOrder {
        strata,
        block_cycle_groups: order.block_cycle_groups.clone(),
    };
    out.assert_consistent();
    Ok(out)
}

/// Is the cyclic cluster `c` causally later than ruler block `r`
/// (with blocks `earlier` already known to precede `r`)?
fn later_than(
    backend: &dyn DiscoveryBackend,
    clusters: &[CausalCluster],
    c: usize,
    r: usize,
    earlier: &[usize],
) -> Result<bool> {
    let ruler = &clusters[r];
    if ruler.members.len() < 2 * ruler.latent_count {
        return Ok(false);
    }
    let (r_first, r_second) = split_halves(ruler);
    let mut z = r_second;
    let mut y = r_first;
    y.extend(
        clusters[c]
            .members
            .iter()
            .copied()
            .take(clusters[c].latent_count),
    );
    for &t in earlier {
        if t == r || clusters[t].cyclic {
            continue;
        }
        let (t_first, t_second) = split_halves(&clusters[t]);
        z.extend(t_first);
        y.extend(t_second);
    }
    backend.gin_holds(&z, &y)
}

// ---------------------------------------------------------------------------
// block-cycle machinery (the purely acyclic latent-block regime)
// ---------------------------------------------------------------------------

/// Joint root test for a set of blocks: the union is treated as one block.
fn is_joint_root(
    backend: &dyn DiscoveryBackend,
    clusters: &[CausalCluster],
    combo: &[usize],
    others: &[usize],
    earlier: &[usize],
) -> Result<bool> {
    for &c in combo {
        if clusters[c].members.len() < 2 * clusters[c].latent_count {
            return Ok(false);
        }
    }
    for &k in others {
        let other = &clusters[k];
        let mut z = Vec::new();
        let mut y = Vec::new();
        for &c in combo {
            let (first, second) = split_halves(&clusters[c]);
            z.extend(second);
            y.extend(first);
        }
        y.extend(other.members.iter().copied().take(other.latent_count));
        for &t in earlier {
            let (t_first, t_second) = split_halves(&clusters[t]);
            z.extend(t_first);
            y.extend(t_second);
        }
        if !backend.gin_holds(&z, &y)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Causal-order learning over latent blocks with joint-root extraction:
/// ascending k, all disjoint k-combinations qualifying as joint roots are
/// extracted together into one stratum; any multi-block extraction is handed
/// to the block-cycle search.
pub fn learn_order_between_latents(
    backend: &dyn DiscoveryBackend,
    clusters: &[CausalCluster],
    opts: &DiscoveryOptions,
) -> Result<PartialCausalOrder> {
    if clusters.len() < 2 {
        return Ok(PartialCausalOrder {
            strata: vec![(0..clusters.len()).collect()],
            block_cycle_groups: Vec::new(),
        });
    }
    let mut remaining: Vec<usize> = (0..clusters.len()).collect();
    let mut strata: Vec<Vec<usize>> = Vec::new();
    let mut earlier: Vec<usize> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    while !remaining.is_empty() {
        if remaining.len() == 1 {
            strata.push(remaining.clone());
            break;
        }
        let mut extracted: Option<Vec<usize>> = None;
        for k in 1..=remaining.len() {
            let mut union: BTreeSet<usize> = BTreeSet::new();
            for combo in subsets_of_size(&remaining, k) {
                let others: Vec<usize> = remaining
                    .iter()
                    .copied()
                    .filter(|c| !combo.contains(c))
                    .collect();
                if is_joint_root(backend, clusters, &combo, &others, &earlier)? {
                    union.extend(combo);
                }
            }
            if !union.is_empty() {
                let union: Vec<usize> = union.into_iter().collect();
                if union.len() > 1 {
                    let (_, cyc) =
                        find_cycles_between_blocks(backend, clusters, &union, &earlier, opts)?;
                    groups.extend(cyc);
                }
                extracted = Some(union);
                break;
            }
        }
        match extracted {
            Some(union) => {
                remaining.retain(|c| !union.contains(c));
                earlier.extend(union.iter().copied());
                strata.push(union);
            }
            None => {
                strata.push(remaining.clone());
                remaining.clear();
            }
        }
    }
    // dedupe groups
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let groups: Vec<Vec<usize>> = groups
        .into_iter()
        .filter(|g| seen.insert(g.clone()))
        .collect();
    let order = PartialCausalOrder {
        strata,
        block_cycle_groups: groups,
    };
    order.assert_consistent();
    Ok(order)
}

/// A division of blocks into two groups.
pub type BlockPair = (Vec<usize>, Vec<usize>);

/// Bisection search for cycles between the latent blocks of `c_blocks`,
/// anchored on the causally earlier `b_blocks`. Returns the pairs found to
/// be connected only through common causes and the pruned cyclic groups.
pub fn find_cycles_between_blocks(
    backend: &dyn DiscoveryBackend,
    clusters: &[CausalCluster],
    c_blocks: &[usize],
    b_blocks: &[usize],
    opts: &DiscoveryOptions,
) -> Result<(Vec<BlockPair>, Vec<Vec<usize>>)> {
    if c_blocks.len() > 12 {
        return Err(Error::guard(
            format!("block-cycle bisection over {} blocks", c_blocks.len()),
            12,
            "fewer simultaneous root blocks",
        ));
    }
    let mut noncyclic: Vec<(BTreeSet<usize>, BTreeSet<usize>)> = Vec::new();
    let mut cyclic: Vec<(BTreeSet<usize>, BTreeSet<usize>)> = Vec::new();
    search_block_cycles(
        backend,
        clusters,
        c_blocks,
        b_blocks,
        &mut noncyclic,
        &mut cyclic,
    )?;
    let _ = opts;
    // Pruning: a division certified to carry no cycle bounds every true
    // cycle to one of its sides, so any cyclic pair whose blocks straddle
    // such a division is spurious (its within-side fragments were found by
    // the recursion on the sides).
    let crosses = |group: &BTreeSet<usize>| {
        noncyclic.iter().any(|(na, nb)| {
            group.iter().any(|b| na.contains(b)) && group.iter().any(|b| nb.contains(b))
        })
    };
    let noncyclic_pairs: Vec<(Vec<usize>, Vec<usize>)> = noncyclic
        .iter()
        .map(|(a, b)| (a.iter().copied().collect(), b.iter().copied().collect()))
        .collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    for (ca, cb) in cyclic {
        let union: BTreeSet<usize> = ca.union(&cb).copied().collect();
        if crosses(&union) {
            continue;
        }
        let group: Vec<usize> = union.into_iter().collect();
        if seen.insert(group.clone()) {
            groups.push(group);
        }
    }
    Ok((noncyclic_pairs, groups))
}

fn search_block_cycles(
    backend: &dyn DiscoveryBackend,
    clusters: &[CausalCluster],
    c_blocks: &[usize],
    b_blocks: &[usize],
    noncyclic: &mut Vec<(BTreeSet<usize>, BTreeSet<usize>)>,
    cyclic: &mut Vec<(BTreeSet<usize>, BTreeSet<usize>)>,
) -> Result<()> {
    if c_blocks.len() < 2 || b_blocks.is_empty() {
        return Ok(());
    }
    let members_of = |blocks: &[usize]| -> Vec<usize> {
        let mut out: Vec<usize> = blocks
            .iter()
            .flat_map(|&b| clusters[b].members.iter().copied())
            .collect();
        out.sort_unstable();
        out
    };
    let latents_of =
        |blocks: &[usize]| -> usize { blocks.iter().map(|&b| clusters[b].latent_count).sum() };
    let b_members = members_of(b_blocks);
    let n = c_blocks.len();
    for mask in 1..(1usize << n) / 2 + (1 << n) % 2 {
        let side_a: Vec<usize> = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| c_blocks[i])
            .collect();
        let side_b: Vec<usize> = (0..n)
            .filter(|i| mask >> i & 1 == 0)
            .map(|i| c_blocks[i])
            .collect();
        if side_a.is_empty() || side_b.is_empty() {
            continue;
        }
        let xa = members_of(&side_a);
        let xb = members_of(&side_b);
        let min_l = latents_of(&side_a).min(latents_of(&side_b));
        let gate = backend.rank(&xa, &b_members, min_l)? < min_l;
        if !gate {
            continue;
        }
        let ind_ab = backend.projected_independent(&xa, &b_members, &xb)?;
        let ind_ba = backend.projected_independent(&xb, &b_members, &xa)?;
        let set_a: BTreeSet<usize> = side_a.iter().copied().collect();
        let set_b: BTreeSet<usize> = side_b.iter().copied().collect();
        if ind_ab || ind_ba {
            noncyclic.push((set_a, set_b));
            search_block_cycles(backend, clusters, &side_a, b_blocks, noncyclic, cyclic)?;
            search_block_cycles(backend, clusters, &side_b, b_blocks, noncyclic, cyclic)?;
        } else {
            cyclic.push((set_a, set_b));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// pipelines
// ---------------------------------------------------------------------------

/// Cluster discovery with measurement-cycle detection and causal-order
/// learning (the hierarchical-cyclic regime).
pub fn discover_cyclic_clusters(
    backend: &dyn DiscoveryBackend,
    opts: &DiscoveryOptions,
) -> Result<DiscoveryResult> {
    let mut clusters = find_causal_cyclic_clusters(backend, opts)?;
    let acyclic: Vec<usize> = (0..clusters.len()).filter(|&c| !clusters[c].cyclic).collect();
    let base_order = learn_latent_causal_order(backend, &clusters, &acyclic)?;
    let order = learn_order_for_cyclic_clusters(backend, &mut clusters, &base_order, opts)?;
    Ok(DiscoveryResult {
        labels: backend.labels(),
        clusters,
        order,
    })
}

/// Cluster discovery plus causal-order learning with block-cycle detection
/// (the acyclic latent-block regime).
pub fn discover_block_cycles(
    backend: &dyn DiscoveryBackend,
    opts: &DiscoveryOptions,
) -> Result<DiscoveryResult> {
    let clusters = find_causal_cyclic_clusters(backend, opts)?;
    let order = learn_order_between_latents(backend, &clusters, opts)?;
    Ok(DiscoveryResult {
        labels: backend.labels(),
        clusters,
        order,
    })
}

// ---------------------------------------------------------------------------
// output JSON
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ClusterJson {
    members: Vec<String>,
    latents: usize,
    cyclic: bool,
}

#[derive(Serialize, Deserialize)]
struct DiscoveryJson {
    clusters: Vec<ClusterJson>,
    order: Vec<Vec<String>>,
    block_cycles: Vec<Vec<String>>,
}

impl DiscoveryResult {
    /// Canonical cluster name: `L(cN)` with clusters numbered by smallest
    /// member.
    fn block_name(&self, cluster: usize) -> String {
        format!("L(c{})", cluster + 1)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let clusters: Vec<ClusterJson> = self
            .clusters
            .iter()
            .map(|c| ClusterJson {
                members: c.members.iter().map(|&m| self.labels[m].clone()).collect(),
                latents: c.latent_count,
                cyclic: c.cyclic,
            })
            .collect();
        let order: Vec<Vec<String>> = self
            .order
            .strata
            .iter()
            .map(|s| s.iter().map(|&c| self.block_name(c)).collect())
            .collect();
        let block_cycles: Vec<Vec<String>> = self
            .order
            .block_cycle_groups
            .iter()
            .map(|g| g.iter().map(|&c| self.block_name(c)).collect())
            .collect();
        serde_json::to_value(DiscoveryJson {
            clusters,
            order,
            block_cycles,
        })
        .expect("discovery output serializes")
    }

    /// Parse a result back from its JSON form, resolving member labels
    /// against `labels` (the observed columns, in order).
    pub fn from_json_value(v: &serde_json::Value, labels: &[String]) -> Result<Self> {
        let parsed: DiscoveryJson = serde_json::from_value(v.clone())?;
        let col_of = |label: &str| -> Result<usize> {
            labels
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| Error::invalid(format!("unknown variable {label}")))
        };
        let mut clusters = Vec::new();
        for c in &parsed.clusters {
            let mut members = Vec::new();
            for m in &c.members {
                members.push(col_of(m)?);
            }
            members.sort_unstable();
            clusters.push(CausalCluster {
                members,
                latent_count: c.latents,
                cyclic: c.cyclic,
                evidence: None,
            });
        }
        let block_index = |name: &str| -> Result<usize> {
            let inner = name
                .strip_prefix("L(c")
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| Error::invalid(format!("bad block name {name}")))?;
            let idx: usize = inner
                .parse()
                .map_err(|_| Error::invalid(format!("bad block name {name}")))?;
            if idx == 0 || idx > clusters.len() {
                return Err(Error::invalid(format!("block {name} out of range")));
            }
            Ok(idx - 1)
        };
        let mut strata = Vec::new();
        for s in &parsed.order {
            let mut stratum = Vec::new();
            for name in s {
                stratum.push(block_index(name)?);
            }
            strata.push(stratum);
        }
        let mut groups = Vec::new();
        for g in &parsed.block_cycles {
            let mut group = Vec::new();
            for name in g {
                group.push(block_index(name)?);
            }
            groups.push(group);
        }
        Ok(DiscoveryResult {
            labels: labels.to_vec(),
            clusters,
            order: PartialCausalOrder {
                strata,
                block_cycle_groups: groups,
            },
        })
    }
}

// ---------------------------------------------------------------------------
// evaluation metrics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscoveryMetrics {
    pub cluster_recall: f64,
    pub cluster_precision: f64,
    pub latent_order_recall: f64,
    pub latent_order_precision: f64,
    pub cyclic_recall: f64,
    pub cyclic_precision: f64,
    /// The metrics whose denominator was empty (reported as 1).
    pub degenerate: Vec<String>,
}

fn ratio(num: usize, den: usize, name: &str, degenerate: &mut Vec<String>) -> f64 {
    if den == 0 {
        degenerate.push(name.to_string());
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// The six recovery ratios of a discovery output against the true graph.
/// Truth clusters group observed vertices by identical nonempty latent
/// parent sets; the truth order compares latent blocks by strict directed
/// reachability; a truth variable is cyclic when it points back into one of
/// its latent parents.
pub fn evaluate(found: &DiscoveryResult, truth: &DirectedGraph) -> Result<DiscoveryMetrics> {
    let observed = truth.observed_ids();
    if observed.len() != found.labels.len() {
        return Err(Error::invalid("truth and output observe different variable sets"));
    }
    let m = observed.len();
    let latent_parents: Vec<BTreeSet<VertexId>> = observed
        .iter()
        .map(|&v| {
            truth
                .parents(v)
                .iter()
                .copied()
                .filter(|&p| truth.vertices()[p].kind == VertexKind::Latent)
                .collect()
        })
        .collect();

    let truth_same_cluster = |i: usize, j: usize| -> bool {
        !latent_parents[i].is_empty() && latent_parents[i] == latent_parents[j]
    };
    let found_cluster_of: Vec<Option<usize>> = (0..m)
        .map(|col| found.clusters.iter().position(|c| c.members.contains(&col)))
        .collect();

    let mut same_truth = 0usize;
    let mut same_found = 0usize;
    let mut same_both = 0usize;
    for i in 0..m {
        for j in (i + 1)..m {
            let t = truth_same_cluster(i, j);
            let f = found_cluster_of[i].is_some() && found_cluster_of[i] == found_cluster_of[j];
            same_truth += t as usize;
            same_found += f as usize;
            same_both += (t && f) as usize;
        }
    }

    // ordered pairs of variables whose latent blocks are strictly ordered
    let strictly_earlier = |i: usize, j: usize| -> bool {
        let (a, b) = (&latent_parents[i], &latent_parents[j]);
        if a.is_empty() || b.is_empty() || a == b {
            return false;
        }
        let fwd = a.iter().any(|&x| b.iter().any(|&y| truth.reaches(x, y)));
        let bwd = b.iter().any(|&x| a.iter().any(|&y| truth.reaches(x, y)));
        fwd && !bwd
    };
    let block_cycled = |c1: usize, c2: usize| -> bool {
        found
            .order
            .block_cycle_groups
            .iter()
            .any(|g| g.contains(&c1) && g.contains(&c2))
    };
    let found_earlier = |i: usize, j: usize| -> bool {
        match (found_cluster_of[i], found_cluster_of[j]) {
            (Some(ci), Some(cj)) if ci != cj && !block_cycled(ci, cj) => {
                match (found.order.stratum_of(ci), found.order.stratum_of(cj)) {
                    (Some(si), Some(sj)) => si < sj,
                    _ => false,
                }
            }
            _ => false,
        }
    };
    let mut co_truth = 0usize;
    let mut co_found = 0usize;
    let mut co_both = 0usize;
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let t = strictly_earlier(i, j);
            let f = found_earlier(i, j);
            co_truth += t as usize;
            co_found += f as usize;
            co_both += (t && f) as usize;
        }
    }

    let truth_cyclic: Vec<bool> = observed
        .iter()
        .enumerate()
        .map(|(col, &v)| {
            truth
                .children(v)
                .iter()
                .any(|&ch| latent_parents[col].contains(&ch))
        })
        .collect();
    let found_cyclic: Vec<bool> = (0..m)
        .map(|col| {
            found_cluster_of[col]
                .map(|c| found.clusters[c].cyclic)
                .unwrap_or(false)
        })
        .collect();
    let cyc_truth = truth_cyclic.iter().filter(|&&b| b).count();
    let cyc_found = found_cyclic.iter().filter(|&&b| b).count();
    let cyc_both = truth_cyclic
        .iter()
        .zip(&found_cyclic)
        .filter(|(&t, &f)| t && f)
        .count();

    let mut degenerate = Vec::new();
    Ok(DiscoveryMetrics {
        cluster_recall: ratio(same_both, same_truth, "cluster_recall", &mut degenerate),
        cluster_precision: ratio(same_both, same_found, "cluster_precision", &mut degenerate),
        latent_order_recall: ratio(co_both, co_truth, "latent_order_recall", &mut degenerate),
        latent_order_precision: ratio(co_both, co_found, "latent_order_precision", &mut degenerate),
        cyclic_recall: ratio(cyc_both, cyc_truth, "cyclic_recall", &mut degenerate),
        cyclic_precision: ratio(cyc_both, cyc_found, "cyclic_precision", &mut degenerate),
        degenerate,
    })
}
