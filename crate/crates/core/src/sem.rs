//! Linear structural equation models over a [`DirectedGraph`]: population
//! covariance and higher-order cumulant tensors, seeded sampling, partial
//! correlations, and the Gaussian total-variation smoothness bound.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{is_acyclic, DirectedGraph, VertexId};
use crate::numeric::PHI_AT_ZERO;
use crate::tensor::CumulantTensor;

/// Per-vertex noise distribution. The shifted exponential is mean-centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum NoiseSpec {
    Gaussian {
        #[serde(default)]
        mean: f64,
        var: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    ShiftedExponential {
        rate: f64,
    },
}

impl NoiseSpec {
    pub fn unit_gaussian() -> Self {
        NoiseSpec::Gaussian { mean: 0.0, var: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::Gaussian { var, .. } if *var <= 0.0 => {
                Err(Error::invalid("gaussian noise needs var > 0"))
            }
            NoiseSpec::Uniform { lo, hi } if lo >= hi => {
                Err(Error::invalid("uniform noise needs lo < hi"))
            }
            NoiseSpec::ShiftedExponential { rate } if *rate <= 0.0 => {
                Err(Error::invalid("shifted exponential noise needs rate > 0"))
            }
            _ => Ok(()),
        }
    }

    /// Closed-form cumulant of order `k` (1 through 4).
    pub fn cumulant(&self, k: usize) -> Result<f64> {
        let v = match (self, k) {
            (NoiseSpec::Gaussian { mean, .. }, 1) => *mean,
            (NoiseSpec::Gaussian { var, .. }, 2) => *var,
            (NoiseSpec::Gaussian { .. }, 3 | 4) => 0.0,
            (NoiseSpec::Uniform { lo, hi }, 1) => (lo + hi) / 2.0,
            (NoiseSpec::Uniform { lo, hi }, 2) => (hi - lo).powi(2) / 12.0,
            (NoiseSpec::Uniform { .. }, 3) => 0.0,
            (NoiseSpec::Uniform { lo, hi }, 4) => -(hi - lo).powi(4) / 120.0,
            (NoiseSpec::ShiftedExponential { .. }, 1) => 0.0,
            (NoiseSpec::ShiftedExponential { rate }, 2) => rate.powi(-2),
            (NoiseSpec::ShiftedExponential { rate }, 3) => 2.0 * rate.powi(-3),
            (NoiseSpec::ShiftedExponential { rate }, 4) => 6.0 * rate.powi(-4),
            _ => return Err(Error::invalid(format!("unsupported cumulant order {k}"))),
        };
        Ok(v)
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            NoiseSpec::Gaussian { mean, var } => {
                Normal::new(*mean, var.sqrt()).unwrap().sample(rng)
            }
            NoiseSpec::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            NoiseSpec::ShiftedExponential { rate } => {
                Exp::new(*rate).unwrap().sample(rng) - 1.0 / rate
            }
        }
    }
}

/// An i.i.d. sample: one labeled column per variable, one row per draw.
#[derive(Debug, Clone)]
pub struct Dataset {
    labels: Vec<String>,
    data: DMatrix<f64>,
}

impl Dataset {
    pub fn new(labels: Vec<String>, data: DMatrix<f64>) -> Result<Self> {
        if labels.len() != data.ncols() {
            return Err(Error::invalid(format!(
                "{} labels for {} columns",
                labels.len(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite entries"));
        }
        Ok(Dataset { labels, data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn col_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.data.column(c).iter().copied().collect()
    }

    /// New dataset keeping `cols` in the given order.
    pub fn select(&self, cols: &[usize]) -> Dataset {
        let data = DMatrix::from_fn(self.n(), cols.len(), |r, j| self.data[(r, cols[j])]);
        Dataset {
            labels: cols.iter().map(|&c| self.labels[c].clone()).collect(),
            data,
        }
    }

    /// Sample covariance matrix (denominator `n - 1`).
    pub fn sample_covariance(&self) -> DMatrix<f64> {
        let n = self.n();
        let p = self.p();
        let mut centered = self.data.clone();
        for c in 0..p {
            let mean = centered.column(c).mean();
            for r in 0..n {
                centered[(r, c)] -= mean;
            }
        }
        let denom = (n.max(2) - 1) as f64;
        (centered.transpose() * centered) / denom
    }

    /// Serialize as CSV: optional `#`-prefixed metadata lines, then a header
    /// row, then one row per observation.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W, meta: &[String]) -> Result<()> {
        for m in meta {
            writeln!(w, "# {m}")?;
        }
        writeln!(w, "{}", self.labels.join(","))?;
        for r in 0..self.n() {
            let row: Vec<String> = (0..self.p())
                .map(|c| format!("{}", self.data[(r, c)]))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Dataset> {
        let mut content = String::new();
        let mut r = std::io::BufReader::new(r);
        std::io::Read::read_to_string(&mut r, &mut content)?;
        let mut lines = content
            .lines()
            .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::invalid("empty CSV"))?;
        let labels: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut values = Vec::new();
        let mut rows = 0usize;
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != labels.len() {
                return Err(Error::invalid(format!(
                    "row with {} fields, expected {}",
                    fields.len(),
                    labels.len()
                )));
            }
            for f in fields {
                values.push(
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::invalid(format!("bad number {f:?}: {e}")))?,
                );
            }
            rows += 1;
        }
        let data = DMatrix::from_row_slice(rows, labels.len(), &values);
        Dataset::new(labels, data)
    }
}

/// How random edge coefficients are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientRegime {
    /// Uniform on [-1, 1].
    Uniform1,
    /// Uniform on [-5, -0.5] union [0.5, 5].
    SplitWide,
    /// Uniform on [-1, -0.5] union [0.5, 1].
    SplitUnit,
}

impl CoefficientRegime {
    pub fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            CoefficientRegime::Uniform1 => 2.0 * rng.random::<f64>() - 1.0,
            CoefficientRegime::SplitWide => {
                let mag = 0.5 + 4.5 * rng.random::<f64>();
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
            CoefficientRegime::SplitUnit => {
                let mag = 0.5 + 0.5 * rng.random::<f64>();
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
        }
    }
}

/// A linear SEM: graph, coefficient matrix with `A[(j, i)]` the strength of
/// the edge `X_j -> X_i`, and one noise spec per vertex.
#[derive(Debug, Clone)]
pub struct LinearSem {
    graph: DirectedGraph,
    coefficients: DMatrix<f64>,
    noise: Vec<NoiseSpec>,
}

/// Serialized form: graph JSON plus dense coefficient rows and noise specs.
#[derive(Serialize, Deserialize)]
pub struct SemJson {
    pub graph: DirectedGraph,
    pub coefficients: Vec<Vec<f64>>,
    pub noise: Vec<NoiseSpec>,
}

impl LinearSem {
    pub fn new(graph: DirectedGraph, coefficients: DMatrix<f64>, noise: Vec<NoiseSpec>) -> Result<Self> {
        let p = graph.vertex_count();
        if coefficients.nrows() != p || coefficients.ncols() != p {
            return Err(Error::invalid("coefficient matrix must be p x p"));
        }
        if noise.len() != p {
            return Err(Error::invalid("one noise spec per vertex required"));
        }
        for n in &noise {
            n.validate()?;
        }
        for j in 0..p {
            for i in 0..p {
                let has = graph.has_edge(j, i);
                let nz = coefficients[(j, i)] != 0.0;
                if has && !nz {
                    return Err(Error::invalid(format!(
                        "edge ({j},{i}) present but coefficient is zero"
                    )));
                }
                if !has && nz {
                    return Err(Error::invalid(format!(
                        "nonzero coefficient on missing edge ({j},{i})"
                    )));
                }
            }
        }
        let sem = LinearSem {
            graph,
            coefficients,
            noise,
        };
        sem.check_stable()?;
        Ok(sem)
    }

    /// Cyclic admissibility: spectral radius of the coefficient matrix
    /// strictly below one. Acyclic graphs always pass.
    fn check_stable(&self) -> Result<()> {
        if is_acyclic(&self.graph) {
            return Ok(());
        }
        let eigs = self.coefficients.complex_eigenvalues();
        let rho = eigs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        if rho >= 1.0 {
            return Err(Error::numerical(format!(
                "cyclic coefficient matrix has spectral radius {rho:.4} >= 1, (I - A) treated as non-invertible"
            )));
        }
        Ok(())
    }

    /// Random parameterization of `graph`: every edge coefficient drawn from
    /// `regime`, every vertex given a copy of `noise`.
    pub fn random(
        graph: DirectedGraph,
        regime: CoefficientRegime,
        noise: NoiseSpec,
        seed: u64,
    ) -> Result<Self> {
        Self::random_scaled(graph, regime, noise, seed, 1.0)
    }

    /// As [`LinearSem::random`], with coefficients on observed -> latent
    /// feedback edges scaled by `feedback_scale` so measurement cycles stay
    /// stable.
    pub fn random_scaled(
        graph: DirectedGraph,
        regime: CoefficientRegime,
        noise: NoiseSpec,
        seed: u64,
        feedback_scale: f64,
    ) -> Result<Self> {
        let p = graph.vertex_count();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeff = DMatrix::zeros(p, p);
        for (a, b) in graph.edges() {
            let mut c = regime.draw(&mut rng);
            let feedback = graph.vertices()[a].kind == crate::graph::VertexKind::Observed
                && graph.vertices()[b].kind == crate::graph::VertexKind::Latent;
            if feedback {
                c *= feedback_scale;
            }
            if c == 0.0 {
                c = 0.1;
            }
            coeff[(a, b)] = c;
        }
        let noise = vec![noise; p];
        Self::new(graph, coeff, noise)
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn noise(&self) -> &[NoiseSpec] {
        &self.noise
    }

    pub fn coefficient(&self, from: VertexId, to: VertexId) -> f64 {
        self.coefficients[(from, to)]
    }

    fn inverse_i_minus_a(&self) -> Result<DMatrix<f64>> {
        let p = self.graph.vertex_count();
        let m = DMatrix::identity(p, p) - &self.coefficients;
        m.try_inverse()
            .ok_or_else(|| Error::numerical("(I - A) is singular"))
    }

    /// Population covariance `(I - A)^-T Sigma_eps (I - A)^-1`.
    pub fn implied_covariance(&self) -> Result<DMatrix<f64>> {
        let b = self.inverse_i_minus_a()?;
        let p = self.graph.vertex_count();
        let mut sigma_eps = DMatrix::zeros(p, p);
        for v in 0..p {
            sigma_eps[(v, v)] = self.noise[v].cumulant(2)?;
        }
        let sigma = b.transpose() * sigma_eps * &b;
        Ok((&sigma + sigma.transpose()) * 0.5)
    }

    /// Population covariance restricted to observed vertices, together with
    /// the observed vertex ids in order.
    pub fn implied_observed_covariance(&self) -> Result<(Vec<VertexId>, DMatrix<f64>)> {
        let full = self.implied_covariance()?;
        let obs = self.graph.observed_ids();
        let sub = DMatrix::from_fn(obs.len(), obs.len(), |r, c| full[(obs[r], obs[c])]);
        Ok((obs, sub))
    }

    /// Population cumulant tensor of order `k` (2, 3, or 4): the Tucker
    /// product of the diagonal noise cumulant tensor with `(I - A)^-1` along
    /// every axis.
    pub fn implied_cumulant_tensor(&self, k: usize) -> Result<CumulantTensor> {
        if !(2..=4).contains(&k) {
            return Err(Error::invalid(format!(
                "cumulant tensors supported for orders 2..=4, got {k}"
            )));
        }
        let b = self.inverse_i_minus_a()?;
        let p = self.graph.vertex_count();
        let kappas: Vec<f64> = (0..p)
            .map(|v| self.noise[v].cumulant(k))
            .collect::<Result<_>>()?;
        let mut tensor = CumulantTensor::zeros(k, p)?;
        let mut index = vec![0usize; k];
        loop {
            let mut total = 0.0;
            for j in 0..p {
                if kappas[j] == 0.0 {
                    continue;
                }
                let mut prod = kappas[j];
                for &i in &index {
                    prod *= b[(j, i)];
                }
                total += prod;
            }
            tensor.set(&index, total);
            // odometer
            let mut axis = k;
            loop {
                if axis == 0 {
                    return Ok(tensor);
                }
                axis -= 1;
                index[axis] += 1;
                if index[axis] < p {
                    break;
                }
                index[axis] = 0;
                if axis == 0 {
                    return Ok(tensor);
                }
            }
        }
    }

    /// `n` i.i.d. draws of all variables, reproducible per seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        let p = self.graph.vertex_count();
        let bt = self.inverse_i_minus_a()?.transpose();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = DMatrix::zeros(n, p);
        let mut eps = DVector::zeros(p);
        for r in 0..n {
            for v in 0..p {
                eps[v] = self.noise[v].draw(&mut rng);
            }
            let x = &bt * &eps;
            for v in 0..p {
                data[(r, v)] = x[v];
            }
        }
        Dataset::new(
            self.graph.vertices().iter().map(|v| v.label.clone()).collect(),
            data,
        )
    }

    /// `n` i.i.d. draws of the observed variables only.
    pub fn sample_observed(&self, n: usize, seed: u64) -> Result<Dataset> {
        let full = self.sample(n, seed)?;
        Ok(full.select(&self.graph.observed_ids()))
    }

    pub fn to_json(&self) -> SemJson {
        let p = self.graph.vertex_count();
        SemJson {
            graph: self.graph.clone(),
            coefficients: (0..p)
                .map(|r| (0..p).map(|c| self.coefficients[(r, c)]).collect())
                .collect(),
            noise: self.noise.clone(),
        }
    }

    pub fn from_json(j: SemJson) -> Result<Self> {
        let p = j.graph.vertex_count();
        if j.coefficients.len() != p || j.coefficients.iter().any(|r| r.len() != p) {
            return Err(Error::invalid("coefficient rows must form a p x p matrix"));
        }
        let coeff = DMatrix::from_fn(p, p, |r, c| j.coefficients[r][c]);
        LinearSem::new(j.graph, coeff, j.noise)
    }
}

/// Partial correlation of variables `i` and `j` given the set `s`, computed
/// by Schur complement of the covariance.
pub fn partial_correlation(cov: &DMatrix<f64>, i: usize, j: usize, s: &[usize]) -> Result<f64> {
    if i == j || s.contains(&i) || s.contains(&j) {
        return Err(Error::invalid("partial correlation needs i != j, both outside S"));
    }
    let engine = ConditioningSet::new(cov, s)?;
    engine.rho(i, j)
}

/// A conditioning set with its inverse factor precomputed, so many pairs can
/// be conditioned on the same set cheaply (the sweep workloads do exactly
/// that).
pub struct ConditioningSet<'a> {
    cov: &'a DMatrix<f64>,
    s: Vec<usize>,
    inv_ss: Option<DMatrix<f64>>,
}

impl<'a> ConditioningSet<'a> {
    pub fn new(cov: &'a DMatrix<f64>, s: &[usize]) -> Result<Self> {
        let inv_ss = if s.is_empty() {
            None
        } else {
            let ss = DMatrix::from_fn(s.len(), s.len(), |r, c| cov[(s[r], s[c])]);
            Some(ss.try_inverse().ok_or_else(|| {
                Error::numerical("conditioning covariance block is singular")
            })?)
        };
        Ok(ConditioningSet {
            cov,
            s: s.to_vec(),
            inv_ss,
        })
    }

    /// Conditional covariance entries for the pair `(i, j)` given the set.
    fn conditional_block(&self, i: usize, j: usize) -> (f64, f64, f64) {
        let c = self.cov;
        match &self.inv_ss {
            None => (c[(i, i)], c[(j, j)], c[(i, j)]),
            Some(inv) => {
                let m = self.s.len();
                let row = |x: usize| DMatrix::from_fn(1, m, |_, k| c[(x, self.s[k])]);
                let ri = row(i);
                let rj = row(j);
                let vii = c[(i, i)] - (&ri * inv * ri.transpose())[(0, 0)];
                let vjj = c[(j, j)] - (&rj * inv * rj.transpose())[(0, 0)];
                let vij = c[(i, j)] - (&ri * inv * rj.transpose())[(0, 0)];
                (vii, vjj, vij)
            }
        }
    }

    pub fn rho(&self, i: usize, j: usize) -> Result<f64> {
        let (vii, vjj, vij) = self.conditional_block(i, j);
        if vii <= 0.0 || vjj <= 0.0 {
            return Err(Error::numerical(
                "non-positive conditional variance; covariance not positive definite",
            ));
        }
        Ok((vij / (vii * vjj).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Lower bound on a valid total-variation smoothness constant for the
/// conditional family `p(Y | A)` of a Gaussian SEM:
/// `2 phi(0) ||Sigma_{Y,A} Sigma_{A,A}^-1||_1 / sqrt(var(Y | A))`.
pub fn tv_smoothness_l_bound(sem: &LinearSem, y: VertexId, a_set: &[VertexId]) -> Result<f64> {
    for n in sem.noise() {
        if !matches!(n, NoiseSpec::Gaussian { .. }) {
            return Err(Error::invalid(
                "the TV smoothness bound is derived for Gaussian noise only",
            ));
        }
    }
    let cov = sem.implied_covariance()?;
    if a_set.is_empty() {
        return Ok(0.0);
    }
    let m = a_set.len();
    let saa = DMatrix::from_fn(m, m, |r, c| cov[(a_set[r], a_set[c])]);
    let sya = DMatrix::from_fn(1, m, |_, c| cov[(y, a_set[c])]);
    let inv = saa
        .try_inverse()
        .ok_or_else(|| Error::numerical("Sigma_AA is singular"))?;
    let beta = &sya * &inv;
    let var_cond = cov[(y, y)] - (&beta * sya.transpose())[(0, 0)];
    if var_cond <= 0.0 {
        return Err(Error::numerical("var(Y | A) must be positive"));
    }
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    Ok(2.0 * PHI_AT_ZERO * l1 / var_cond.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::graph::{d_separated, random_dag};
    use crate::numeric::all_subsets;

    fn chain_sem() -> LinearSem {
        let g = DirectedGraph::observed(3, &[(0, 1), (1, 2)]).unwrap();
        let mut coeff = DMatrix::zeros(3, 3);
        coeff[(0, 1)] = 1.0;
        coeff[(1, 2)] = 1.0;
        LinearSem::new(g, coeff, vec![NoiseSpec::unit_gaussian(); 3]).unwrap()
    }

    #[test]
    fn chain_covariance_closed_form() {
        let sigma = chain_sem().implied_covariance().unwrap();
        let expect = [[1.0, 1.0, 1.0], [1.0, 2.0, 2.0], [1.0, 2.0, 3.0]];
        for r in 0..3 {
            for c in 0..3 {
                assert!((sigma[(r, c)] - expect[r][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_graph_covariance_is_identity() {
        let g = DirectedGraph::observed(3, &[]).unwrap();
        let sem = LinearSem::new(g, DMatrix::zeros(3, 3), vec![NoiseSpec::unit_gaussian(); 3])
            .unwrap();
        let sigma = sem.implied_covariance().unwrap();
        assert!((sigma - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-12);
    }

    #[test]
    fn coefficient_support_must_match_edges() {
        let g = DirectedGraph::observed(2, &[(0, 1)]).unwrap();
        let bad = DMatrix::zeros(2, 2);
        assert!(LinearSem::new(g.clone(), bad, vec![NoiseSpec::unit_gaussian(); 2]).is_err());
        let mut bad2 = DMatrix::zeros(2, 2);
        bad2[(1, 0)] = 0.5; // wrong direction
        assert!(LinearSem::new(g, bad2, vec![NoiseSpec::unit_gaussian(); 2]).is_err());
    }

    #[test]
    fn cyclic_stability_check() {
        // Unit coefficients on every hub edge: the spectral radius is
        // sqrt(6) > 1, so construction must fail naming the violation.
        let g = catalog::cyclic_one_factor(6);
        let p = g.vertex_count();
        let mut coeff = DMatrix::zeros(p, p);
        for (a, b) in g.edges() {
            coeff[(a, b)] = 1.0;
        }
        let err = LinearSem::new(g.clone(), coeff, vec![NoiseSpec::unit_gaussian(); p])
            .unwrap_err();
        assert!(err.to_string().contains("spectral radius"));

        // Damped feedback passes and yields a positive definite covariance.
        let sem = LinearSem::random_scaled(
            g,
            CoefficientRegime::SplitUnit,
            NoiseSpec::unit_gaussian(),
            3,
            0.1,
        )
        .unwrap();
        let sigma = sem.implied_covariance().unwrap();
        assert!(sigma.clone().cholesky().is_some(), "covariance must be PD");
    }

    #[test]
    fn cyclic_covariance_matches_monte_carlo() {
        let g = catalog::cyclic_one_factor(6);
        let sem = LinearSem::random_scaled(
            g,
            CoefficientRegime::SplitUnit,
            NoiseSpec::unit_gaussian(),
            11,
            0.08,
        )
        .unwrap();
        let sigma = sem.implied_covariance().unwrap();
        let data = sem.sample(1_000_000, 5).unwrap();
        let hat = data.sample_covariance();
        for r in 0..sigma.nrows() {
            for c in 0..sigma.ncols() {
                let denom = sigma[(r, c)].abs().max(0.05);
                assert!(
                    (sigma[(r, c)] - hat[(r, c)]).abs() / denom < 0.02,
                    "entry ({r},{c}): implied {} vs sampled {}",
                    sigma[(r, c)],
                    hat[(r, c)]
                );
            }
        }
    }

    #[test]
    fn cumulant_tensor_order_two_equals_covariance() {
        let sem = chain_sem();
        let t = sem.implied_cumulant_tensor(2).unwrap();
        let sigma = sem.implied_covariance().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((t.get(&[i, j]) - sigma[(i, j)]).abs() < 1e-12);
            }
        }
        assert!(sem.implied_cumulant_tensor(5).is_err());
    }

    #[test]
    fn third_cumulant_of_single_exponential_vertex() {
        let g = DirectedGraph::observed(1, &[]).unwrap();
        let sem = LinearSem::new(
            g,
            DMatrix::zeros(1, 1),
            vec![NoiseSpec::ShiftedExponential { rate: 1.0 }],
        )
        .unwrap();
        let t = sem.implied_cumulant_tensor(3).unwrap();
        assert!((t.get(&[0, 0, 0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn star_third_cumulant_carries_hub_skewness() {
        // Hub with third cumulant 2 and unit edges: cum3(X1,X2,X3) = 2.
        let star = catalog::star(3);
        let l = star.vertex_by_label("L").unwrap();
        let p = star.vertex_count();
        let mut coeff = DMatrix::zeros(p, p);
        for (a, b) in star.edges() {
            coeff[(a, b)] = 1.0;
        }
        let mut noise = vec![NoiseSpec::unit_gaussian(); p];
        noise[l] = NoiseSpec::ShiftedExponential { rate: 1.0 };
        let sem = LinearSem::new(star.clone(), coeff, noise).unwrap();
        let t = sem.implied_cumulant_tensor(3).unwrap();
        let x: Vec<usize> = (1..=3)
            .map(|i| star.vertex_by_label(&format!("X{i}")).unwrap())
            .collect();
        assert!((t.get(&[x[0], x[1], x[2]]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_third_cumulants_vanish_and_tensor_is_symmetric() {
        let g = random_dag(5, 2.0, 9).unwrap();
        let sem = LinearSem::random(
            g,
            CoefficientRegime::Uniform1,
            NoiseSpec::unit_gaussian(),
            4,
        )
        .unwrap();
        let t3 = sem.implied_cumulant_tensor(3).unwrap();
        assert!(t3.values().iter().all(|v| v.abs() < 1e-12));

        let sem_exp = LinearSem::random(
            random_dag(4, 2.0, 10).unwrap(),
            CoefficientRegime::Uniform1,
            NoiseSpec::ShiftedExponential { rate: 1.0 },
            5,
        )
        .unwrap();
        let t = sem_exp.implied_cumulant_tensor(3).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    let v = t.get(&[i, j, k]);
                    assert!((v - t.get(&[j, i, k])).abs() < 1e-12);
                    assert!((v - t.get(&[k, j, i])).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sampling_contract() {
        let sem = chain_sem();
        let empty = sem.sample(0, 1).unwrap();
        assert_eq!(empty.n(), 0);
        assert_eq!(empty.p(), 3);

        let a = sem.sample(100, 42).unwrap();
        let b = sem.sample(100, 42).unwrap();
        assert_eq!(a.data(), b.data());

        let big = sem.sample(100_000, 7).unwrap();
        let hat = big.sample_covariance();
        let sigma = sem.implied_covariance().unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert!((hat[(r, c)] - sigma[(r, c)]).abs() / sigma[(r, c)].abs() < 0.05);
            }
        }
    }

    #[test]
    fn sample_covariance_error_shrinks_with_n() {
        let sem = chain_sem();
        let sigma = sem.implied_covariance().unwrap();
        let mut improving = 0;
        for seed in 5..10u64 {
            let mut errs = Vec::new();
            for &n in &[1_000usize, 10_000, 100_000] {
                let hat = sem.sample(n, seed).unwrap().sample_covariance();
                let err = (&hat - &sigma).abs().max();
                errs.push(err);
            }
            if errs[0] > errs[1] && errs[1] > errs[2] {
                improving += 1;
            }
        }
        assert!(improving >= 4, "error shrank monotonically in {improving}/5 seeds");
    }

    #[test]
    fn partial_correlation_closed_forms() {
        let sigma = chain_sem().implied_covariance().unwrap();
        assert!(partial_correlation(&sigma, 0, 2, &[1]).unwrap().abs() < 1e-12);
        let r01 = partial_correlation(&sigma, 0, 1, &[]).unwrap();
        assert!((r01 - 1.0 / 2.0f64.sqrt()).abs() < 1e-12);
        let id = DMatrix::<f64>::identity(3, 3);
        assert!(partial_correlation(&id, 0, 1, &[2]).unwrap().abs() < 1e-12);
        assert!(partial_correlation(&sigma, 0, 0, &[]).is_err());
    }

    #[test]
    fn partial_correlation_zero_iff_d_separated() {
        for seed in 0..10u64 {
            let g = random_dag(5, 2.0, seed).unwrap();
            let sem = LinearSem::random(
                g.clone(),
                CoefficientRegime::SplitUnit,
                NoiseSpec::unit_gaussian(),
                seed + 100,
            )
            .unwrap();
            let sigma = sem.implied_covariance().unwrap();
            for i in 0..5 {
                for j in (i + 1)..5 {
                    let rest: Vec<usize> = (0..5).filter(|&v| v != i && v != j).collect();
                    for s in all_subsets(&rest) {
                        let rho = partial_correlation(&sigma, i, j, &s).unwrap();
                        let dsep = d_separated(&g, &[i], &[j], &s).unwrap();
                        if dsep {
                            assert!(
                                rho.abs() < 1e-9,
                                "seed {seed}: d-separated pair ({i},{j})|{s:?} has rho {rho}"
                            );
                        } else {
                            assert!(
                                rho.abs() > 1e-9,
                                "seed {seed}: d-connected pair ({i},{j})|{s:?} has rho {rho}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tv_bound_values() {
        let sem = chain_sem();
        // Y = X2 given A = {X1}: regression coefficient 1, conditional variance 1.
        let l = tv_smoothness_l_bound(&sem, 1, &[0]).unwrap();
        assert!((l - 2.0 * PHI_AT_ZERO).abs() < 1e-12);
        // Independent of A: zero bound.
        assert!(tv_smoothness_l_bound(&sem, 0, &[]).unwrap() == 0.0);

        // Scaling all coefficients scales the numerator coefficients.
        let g = DirectedGraph::observed(3, &[(0, 1), (1, 2)]).unwrap();
        let mut coeff = DMatrix::zeros(3, 3);
        coeff[(0, 1)] = 2.0;
        coeff[(1, 2)] = 2.0;
        let sem2 = LinearSem::new(g, coeff, vec![NoiseSpec::unit_gaussian(); 3]).unwrap();
        let l1 = tv_smoothness_l_bound(&sem, 1, &[0]).unwrap();
        let l2 = tv_smoothness_l_bound(&sem2, 1, &[0]).unwrap();
        assert!(l2 > l1);

        // Non-Gaussian noise is rejected.
        let g = DirectedGraph::observed(2, &[(0, 1)]).unwrap();
        let mut c = DMatrix::zeros(2, 2);
        c[(0, 1)] = 1.0;
        let sem3 = LinearSem::new(g, c, vec![NoiseSpec::Uniform { lo: -1.0, hi: 1.0 }; 2]).unwrap();
        assert!(tv_smoothness_l_bound(&sem3, 1, &[0]).is_err());
    }

    #[test]
    fn covariance_is_positive_definite_for_random_sems() {
        for seed in 0..20u64 {
            let g = random_dag(6, 3.0, seed).unwrap();
            let sem = LinearSem::random(
                g,
                CoefficientRegime::Uniform1,
                NoiseSpec::unit_gaussian(),
                seed,
            )
            .unwrap();
            let sigma = sem.implied_covariance().unwrap();
            assert!(sigma.clone().cholesky().is_some(), "seed {seed} covariance not PD");
            assert!((sigma.clone() - sigma.transpose()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn sem_json_round_trip() {
        let sem = chain_sem();
        let s = serde_json::to_string(&sem.to_json()).unwrap();
        let back = LinearSem::from_json(serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back.coefficients(), sem.coefficients());
    }

    #[test]
    fn dataset_csv_round_trip_with_meta() {
        let sem = chain_sem();
        let data = sem.sample(17, 3).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf, &["seed=3".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=3\n"));
        let back = Dataset::read_csv(&buf[..]).unwrap();
        assert_eq!(back.labels(), data.labels());
        assert_eq!(back.n(), 17);
        let max_diff = (back.data() - data.data()).abs().max();
        assert!(max_diff == 0.0, "round trip must be exact, diff {max_diff}");
    }
}
