//! Monte-Carlo studies of faithfulness violations on random linear Gaussian
//! SEMs: strong-faithfulness and triangle-faithfulness violation checks,
//! proportion sweeps over graph size and density, the per-graph maximal
//! satisfiable triangle constant, and violation profiles binned by edge
//! strength. All violation decisions use exact population partial
//! correlations; sampling noise never enters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{d_separated, find_triangles, random_dag, DirectedGraph};
use crate::numeric::{all_subsets, sub_seed};
use crate::sem::{CoefficientRegime, ConditioningSet, LinearSem, NoiseSpec};

/// Partial correlations with magnitude at or below this floor are treated as
/// entailed zeros hit by round-off.
pub const ACTUAL_ZERO_FLOOR: f64 = 1e-5;

/// Largest graph accepted by the exhaustive conditioning-set enumeration.
pub const SUBSET_ENUMERATION_CAP: usize = 10;

/// One admissible triangle check: the edge's coefficient magnitude and the
/// smallest `|rho| / |coeff|` ratio over admissible conditioning sets.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EdgeCheck {
    pub coeff_abs: f64,
    pub min_ratio: f64,
}

/// Everything the violation checks need from one SEM, computed in one pass
/// over all conditioning subsets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaithfulnessProfile {
    pub triangles: usize,
    /// Smallest `|rho(i, j | S)|` above the actual-zero floor among
    /// d-connected triples; `None` when no such correlation exists.
    pub min_nonzero_rho: Option<f64>,
    /// Smallest `|rho| / |coeff|` over triangle edges and admissible
    /// conditioning sets; `None` for triangle-free graphs.
    pub min_k_ratio: Option<f64>,
    /// One entry per (triangle edge, third vertex) instance.
    pub edge_checks: Vec<EdgeCheck>,
}

/// Full single-SEM violation report at given thresholds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViolationReport {
    pub graph_id: u64,
    pub triangles: usize,
    pub sf_violated: bool,
    pub ktf_violated: bool,
    /// Largest k the SEM satisfies; `None` means unbounded (no triangles).
    pub max_satisfiable_k: Option<f64>,
    pub edge_checks: Vec<EdgeCheck>,
}

pub fn analyze(sem: &LinearSem, lambda: f64, k: f64, graph_id: u64) -> Result<ViolationReport> {
    let profile = profile(sem)?;
    Ok(ViolationReport {
        graph_id,
        triangles: profile.triangles,
        sf_violated: sf_violated_from(&profile, lambda),
        ktf_violated: ktf_violated_from(&profile, k),
        max_satisfiable_k: profile.min_k_ratio,
        edge_checks: profile.edge_checks,
    })
}

fn sf_violated_from(profile: &FaithfulnessProfile, lambda: f64) -> bool {
    matches!(profile.min_nonzero_rho, Some(m) if m <= lambda)
}

fn ktf_violated_from(profile: &FaithfulnessProfile, k: f64) -> bool {
    matches!(profile.min_k_ratio, Some(m) if m < k)
}

/// True iff some d-connected partial correlation sits in
/// `(ACTUAL_ZERO_FLOOR, lambda]`.
pub fn strong_faithfulness_violated(sem: &LinearSem, lambda: f64) -> Result<bool> {
    if !(0.0 < lambda && lambda < 1.0) {
        return Err(Error::invalid("lambda must sit in (0, 1)"));
    }
    Ok(sf_violated_from(&profile(sem)?, lambda))
}

/// True iff some triangle edge has an admissible conditioning set with
/// `|rho| < k * |coeff|`. Admissible means the third triangle vertex is in
/// the set exactly when it is the collider of the triangle.
pub fn ktf_violated(sem: &LinearSem, k: f64) -> Result<bool> {
    if k <= 0.0 {
        return Err(Error::invalid("k must be positive"));
    }
    Ok(ktf_violated_from(&profile(sem)?, k))
}

/// Largest k with no triangle-faithfulness violation; `None` (unbounded) for
/// triangle-free graphs.
pub fn max_satisfiable_k(sem: &LinearSem) -> Result<Option<f64>> {
    Ok(profile(sem)?.min_k_ratio)
}

/// One pass over all conditioning subsets computing the strong-faithfulness
/// minimum and every triangle ratio.
pub fn profile(sem: &LinearSem) -> Result<FaithfulnessProfile> {
    let g = sem.graph();
    let p = g.vertex_count();
    if p > SUBSET_ENUMERATION_CAP {
        return Err(Error::guard(
            format!("exhaustive conditioning-set enumeration on {p} vertices"),
            SUBSET_ENUMERATION_CAP,
            "the faithfulness vertex cap",
        ));
    }
    let cov = sem.implied_covariance()?;
    let triangles = find_triangles(g);
    // (u, v, third vertex, third-is-collider, |coeff(u, v)|)
    let mut edge_contexts: Vec<(usize, usize, usize, bool, f64)> = Vec::new();
    for t in &triangles {
        let [a, b, c] = t.vertices;
        for (u, v, h) in [(a, b, c), (a, c, b), (b, c, a)] {
            let coeff = if g.has_edge(u, v) {
                sem.coefficient(u, v)
            } else {
                sem.coefficient(v, u)
            };
            let collider = collider_on_path(g, u, h, v);
            edge_contexts.push((u, v, h, collider, coeff.abs()));
        }
    }
    let mut min_ratio_per_context = vec![f64::INFINITY; edge_contexts.len()];
    let mut min_nonzero_rho: Option<f64> = None;
    let all: Vec<usize> = (0..p).collect();
    for s in all_subsets(&all) {
        let cond = ConditioningSet::new(&cov, &s)?;
        let in_s = |v: usize| s.contains(&v);
        for i in 0..p {
            if in_s(i) {
                continue;
            }
            for j in (i + 1)..p {
                if in_s(j) {
                    continue;
                }
                let rho = cond.rho(i, j)?.abs();
                if rho > ACTUAL_ZERO_FLOOR
                    && min_nonzero_rho.is_none_or(|m| rho < m)
                    && !d_separated(g, &[i], &[j], &s)?
                {
                    min_nonzero_rho = Some(rho);
                }
                for (idx, &(u, v, h, collider, coeff)) in edge_contexts.iter().enumerate() {
                    if (u, v) != (i, j) {
                        continue;
                    }
                    if in_s(h) != collider {
                        continue;
                    }
                    let ratio = rho / coeff;
                    if ratio < min_ratio_per_context[idx] {
                        min_ratio_per_context[idx] = ratio;
                    }
                }
            }
        }
    }
    let edge_checks: Vec<EdgeCheck> = edge_contexts
        .iter()
        .zip(&min_ratio_per_context)
        .map(|(&(_, _, _, _, coeff), &min_ratio)| EdgeCheck {
            coeff_abs: coeff,
            min_ratio,
        })
        .collect();
    let min_k_ratio = edge_checks
        .iter()
        .map(|c| c.min_ratio)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.min(r))));
    Ok(FaithfulnessProfile {
        triangles: triangles.len(),
        min_nonzero_rho,
        min_k_ratio,
        edge_checks,
    })
}

fn collider_on_path(g: &DirectedGraph, u: usize, h: usize, v: usize) -> bool {
    g.has_edge(u, h) && g.has_edge(v, h) && !g.has_edge(h, u) && !g.has_edge(h, v)
}

fn clamp_nb(nb: f64, p: usize) -> f64 {
    nb.min((p - 1) as f64)
}

fn random_sem_for_cell(p: usize, nb: f64, seed: u64, index: u64) -> Result<LinearSem> {
    let graph_seed = sub_seed(seed, index * 2);
    let coeff_seed = sub_seed(seed, index * 2 + 1);
    let g = random_dag(p, clamp_nb(nb, p), graph_seed)?;
    LinearSem::random(
        g,
        CoefficientRegime::Uniform1,
        NoiseSpec::unit_gaussian(),
        coeff_seed,
    )
}

// ---------------------------------------------------------------------------
// proportion sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: usize,
    pub nb: f64,
    pub threshold: f64,
    pub assumption: String,
    pub proportion: f64,
    pub stderr: f64,
    pub n_graphs: usize,
}

/// Violation proportions for both assumptions over random SEMs with uniform
/// [-1, 1] coefficients. Expected neighborhood sizes above `p - 1` are
/// clamped. One graph ensemble is shared across all thresholds of a cell.
pub fn violation_sweep(
    nodes: &[usize],
    nb_sizes: &[f64],
    thresholds: &[f64],
    n_graphs: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if n_graphs == 0 {
        return Err(Error::invalid("need at least one graph per cell"));
    }
    let mut rows = Vec::new();
    for (ci, &p) in nodes.iter().enumerate() {
        for (ni, &nb) in nb_sizes.iter().enumerate() {
            let cell_seed = sub_seed(seed, (ci * 1000 + ni) as u64);
            let profiles: Vec<FaithfulnessProfile> = (0..n_graphs as u64)
                .into_par_iter()
                .map(|i| {
                    let sem = random_sem_for_cell(p, nb, cell_seed, i)?;
                    profile(&sem)
                })
                .collect::<Result<_>>()?;
            for &threshold in thresholds {
                let sf = profiles
                    .iter()
                    .filter(|pr| sf_violated_from(pr, threshold))
                    .count();
                let ktf = profiles
                    .iter()
                    .filter(|pr| ktf_violated_from(pr, threshold))
                    .count();
                for (assumption, count) in
                    [("strong_faithfulness", sf), ("k_triangle_faithfulness", ktf)]
                {
                    let prop = count as f64 / n_graphs as f64;
                    rows.push(SweepRow {
                        p,
                        nb: clamp_nb(nb, p),
                        threshold,
                        assumption: assumption.to_string(),
                        proportion: prop,
                        stderr: (prop * (1.0 - prop) / n_graphs as f64).sqrt(),
                        n_graphs,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn render_sweep_csv(rows: &[SweepRow], meta: &[String]) -> String {
    let mut out = String::new();
    for m in meta {
        out.push_str(&format!("# {m}\n"));
    }
    out.push_str("p,nb,threshold,assumption,proportion,stderr,n_graphs\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.p, r.nb, r.threshold, r.assumption, r.proportion, r.stderr, r.n_graphs
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// maximal satisfiable k
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxKRow {
    pub p: usize,
    pub nb: f64,
    pub n_graphs: usize,
    pub graphs_with_triangles: usize,
    /// Smallest per-graph maximal k across the ensemble (the k every graph
    /// of the ensemble satisfies); `None` if no graph had a triangle.
    pub ensemble_min: Option<f64>,
    /// Mean per-graph maximal k over graphs with triangles.
    pub mean: Option<f64>,
}

pub fn max_k_sweep(p: usize, nb_sizes: &[f64], n_graphs: usize, seed: u64) -> Result<Vec<MaxKRow>> {
    let mut rows = Vec::new();
    for (ni, &nb) in nb_sizes.iter().enumerate() {
        let cell_seed = sub_seed(seed, 7_000 + ni as u64);
        let ks: Vec<Option<f64>> = (0..n_graphs as u64)
            .into_par_iter()
            .map(|i| {
                let sem = random_sem_for_cell(p, nb, cell_seed, i)?;
                max_satisfiable_k(&sem)
            })
            .collect::<Result<_>>()?;
        let with_triangles: Vec<f64> = ks.iter().flatten().copied().collect();
        rows.push(MaxKRow {
            p,
            nb: clamp_nb(nb, p),
            n_graphs,
            graphs_with_triangles: with_triangles.len(),
            ensemble_min: with_triangles.iter().copied().reduce(f64::min),
            mean: if with_triangles.is_empty() {
                None
            } else {
                Some(with_triangles.iter().sum::<f64>() / with_triangles.len() as f64)
            },
        });
    }
    Ok(rows)
}

pub fn render_max_k_csv(rows: &[MaxKRow], meta: &[String]) -> String {
    let mut out = String::new();
    for m in meta {
        out.push_str(&format!("# {m}\n"));
    }
    out.push_str("p,nb,n_graphs,graphs_with_triangles,ensemble_min_k,mean_k\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.p,
            r.nb,
            r.n_graphs,
            r.graphs_with_triangles,
            r.ensemble_min
                .map_or(String::from("unbounded"), |v| v.to_string()),
            r.mean.map_or(String::from("unbounded"), |v| v.to_string()),
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// edge-strength violation profile
// ---------------------------------------------------------------------------

pub const EDGE_STRENGTH_BINS: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeBinRow {
    pub p: usize,
    pub nb: f64,
    pub bin: usize,
    pub bin_lo: f64,
    pub bin_hi: f64,
    /// Triangle-edge instances whose coefficient fell in the bin.
    pub instances: usize,
    /// Instances violating triangle faithfulness at the sweep's k.
    pub violations: usize,
}

impl EdgeBinRow {
    pub fn rate(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            self.violations as f64 / self.instances as f64
        }
    }
}

/// Violation counts binned by the triangle edge's coefficient magnitude
/// (ten equal bins on [0, 1]), per neighborhood size.
pub fn edge_strength_violation_profile(
    p: usize,
    nb_sizes: &[f64],
    k: f64,
    n_graphs: usize,
    seed: u64,
) -> Result<Vec<EdgeBinRow>> {
    if k <= 0.0 {
        return Err(Error::invalid("k must be positive"));
    }
    let mut rows = Vec::new();
    for (ni, &nb) in nb_sizes.iter().enumerate() {
        let cell_seed = sub_seed(seed, 11_000 + ni as u64);
        let checks: Vec<Vec<EdgeCheck>> = (0..n_graphs as u64)
            .into_par_iter()
            .map(|i| {
                let sem = random_sem_for_cell(p, nb, cell_seed, i)?;
                Ok(profile(&sem)?.edge_checks)
            })
            .collect::<Result<_>>()?;
        let mut instances = [0usize; EDGE_STRENGTH_BINS];
        let mut violations = [0usize; EDGE_STRENGTH_BINS];
        for check in checks.iter().flatten() {
            let bin = ((check.coeff_abs * EDGE_STRENGTH_BINS as f64) as usize)
                .min(EDGE_STRENGTH_BINS - 1);
            instances[bin] += 1;
            if check.min_ratio < k {
                violations[bin] += 1;
            }
        }
        for bin in 0..EDGE_STRENGTH_BINS {
            rows.push(EdgeBinRow {
                p,
                nb: clamp_nb(nb, p),
                bin,
                bin_lo: bin as f64 / EDGE_STRENGTH_BINS as f64,
                bin_hi: (bin + 1) as f64 / EDGE_STRENGTH_BINS as f64,
                instances: instances[bin],
                violations: violations[bin],
            });
        }
    }
    Ok(rows)
}

pub fn render_edge_profile_csv(rows: &[EdgeBinRow], meta: &[String]) -> String {
    let mut out = String::new();
    for m in meta {
        out.push_str(&format!("# {m}\n"));
    }
    out.push_str("p,nb,bin,bin_lo,bin_hi,instances,violations,rate\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.p,
            r.nb,
            r.bin,
            r.bin_lo,
            r.bin_hi,
            r.instances,
            r.violations,
            r.rate()
        ));
    }
    out
}
