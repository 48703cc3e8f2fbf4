//! Statistical primitives: conditional-independence tests (Gaussian and
//! nonparametric), histogram density estimation, joint sample cumulants,
//! covariance rank tests, kernel independence, and the residual-independence
//! (GIN / IN) tests.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{chi2_sf, norm_two_sided_p, set_partitions, sub_seed};
use crate::sem::{ConditioningSet, Dataset};

/// Uniform wrapper for every hypothesis test in the crate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// `p_value > alpha`.
    pub independent: bool,
    /// Set when the inputs were degenerate (zero variance, perfect
    /// correlation); the decision is then forced to "dependent".
    pub degenerate: bool,
}

impl TestResult {
    pub fn at_level(statistic: f64, p_value: f64, alpha: f64) -> Self {
        TestResult {
            statistic,
            p_value,
            independent: p_value > alpha,
            degenerate: false,
        }
    }

    pub fn degenerate_dependent(statistic: f64) -> Self {
        TestResult {
            statistic,
            p_value: 0.0,
            independent: false,
            degenerate: true,
        }
    }
}

// ---------------------------------------------------------------------------
// Fisher z
// ---------------------------------------------------------------------------

/// Fisher-z conditional independence test of columns `i` and `j` given `s`.
/// Statistic is `sqrt(n - |S| - 3) * |atanh(r)|` with `r` the sample partial
/// correlation; two-sided normal p-value.
pub fn fisher_z_ci_test(
    data: &Dataset,
    i: usize,
    j: usize,
    s: &[usize],
    alpha: f64,
) -> Result<TestResult> {
    let cov = data.sample_covariance();
    fisher_z_from_cov(&cov, data.n(), i, j, s, alpha)
}

/// Fisher-z test from a precomputed sample covariance (lets callers batch
/// many tests on one dataset).
pub fn fisher_z_from_cov(
    cov: &DMatrix<f64>,
    n: usize,
    i: usize,
    j: usize,
    s: &[usize],
    alpha: f64,
) -> Result<TestResult> {
    if n <= s.len() + 3 {
        return Err(Error::invalid(format!(
            "fisher-z needs n > |S| + 3 (n={n}, |S|={})",
            s.len()
        )));
    }
    let r = ConditioningSet::new(cov, s)?.rho(i, j)?;
    if r.abs() >= 1.0 - 1e-12 {
        return Ok(TestResult::degenerate_dependent(f64::INFINITY));
    }
    let z = 0.5 * ((1.0 + r) / (1.0 - r)).ln();
    let stat = ((n - s.len() - 3) as f64).sqrt() * z.abs();
    let p = norm_two_sided_p(stat);
    Ok(TestResult::at_level(stat, p, alpha))
}

// ---------------------------------------------------------------------------
// histogram density estimation
// ---------------------------------------------------------------------------

/// Equal-width histogram on the affinely rescaled unit cube. The per-axis
/// bin count follows `m = max(2, floor(n^(1/(2+d))))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramDensity {
    pub dims: Vec<usize>,
    pub bins_per_axis: usize,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    /// Axes whose column was constant; all their mass sits in bin zero.
    pub degenerate_axes: Vec<bool>,
    /// Normalized cell masses, row-major over the axes in `dims` order.
    pub masses: Vec<f64>,
    pub n: usize,
}

/// Per-axis bin count rule. The epsilon keeps exact powers (4096^(1/3) = 16)
/// from flooring down through float error.
pub fn bins_for(n: usize, d: usize) -> usize {
    (((n as f64).powf(1.0 / (2.0 + d as f64)) + 1e-9).floor() as usize).max(2)
}

pub fn histogram_estimate(data: &Dataset, dims: &[usize]) -> Result<HistogramDensity> {
    let n = data.n();
    if n == 0 {
        return Err(Error::invalid("histogram needs at least one row"));
    }
    let d = dims.len();
    if d == 0 {
        return Err(Error::invalid("histogram needs at least one axis"));
    }
    let m = bins_for(n, d);
    let mut mins = Vec::with_capacity(d);
    let mut maxs = Vec::with_capacity(d);
    let mut degenerate = Vec::with_capacity(d);
    for &c in dims {
        let col = data.data().column(c);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        degenerate.push(lo == hi);
        mins.push(lo);
        maxs.push(hi);
    }
    let mut masses = vec![0.0f64; m.pow(d as u32)];
    let w = 1.0 / n as f64;
    for r in 0..n {
        let mut off = 0usize;
        for (ax, &c) in dims.iter().enumerate() {
            let bin = if degenerate[ax] {
                0
            } else {
                let scaled = (data.data()[(r, c)] - mins[ax]) / (maxs[ax] - mins[ax]);
                ((scaled * m as f64) as usize).min(m - 1)
            };
            off = off * m + bin;
        }
        masses[off] += w;
    }
    Ok(HistogramDensity {
        dims: dims.to_vec(),
        bins_per_axis: m,
        mins,
        maxs,
        degenerate_axes: degenerate,
        masses,
        n,
    })
}

impl HistogramDensity {
    pub fn axes(&self) -> usize {
        self.dims.len()
    }

    fn offset(&self, cell: &[usize]) -> usize {
        let mut off = 0;
        for &b in cell {
            off = off * self.bins_per_axis + b;
        }
        off
    }

    pub fn mass(&self, cell: &[usize]) -> f64 {
        self.masses[self.offset(cell)]
    }

    /// Bin index of a raw value on axis `ax`.
    pub fn bin_of(&self, ax: usize, value: f64) -> usize {
        if self.degenerate_axes[ax] || self.maxs[ax] == self.mins[ax] {
            return 0;
        }
        let scaled = ((value - self.mins[ax]) / (self.maxs[ax] - self.mins[ax])).clamp(0.0, 1.0);
        ((scaled * self.bins_per_axis as f64) as usize).min(self.bins_per_axis - 1)
    }

    /// Marginal mass over a subset of axes (indices into `dims`), summing
    /// the rest out. `fixed` pairs axis index with bin.
    pub fn marginal_mass(&self, fixed: &[(usize, usize)]) -> f64 {
        let d = self.axes();
        let m = self.bins_per_axis;
        let mut total = 0.0;
        let mut cell = vec![0usize; d];
        loop {
            let ok = fixed.iter().all(|&(ax, bin)| cell[ax] == bin);
            if ok {
                total += self.mass(&cell);
            }
            let mut ax = d;
            loop {
                if ax == 0 {
                    return total;
                }
                ax -= 1;
                cell[ax] += 1;
                if cell[ax] < m {
                    break;
                }
                cell[ax] = 0;
                if ax == 0 {
                    return total;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// L1 dependence
// ---------------------------------------------------------------------------

/// Plug-in estimate of the L1 dependence
/// `|| p(x, y, a) - p(x | a) p(y | a) p(a) ||_1` from a joint histogram over
/// `(x, y, a...)`.
pub fn l1_dependence(data: &Dataset, x: usize, y: usize, a: &[usize]) -> Result<f64> {
    if x == y || a.contains(&x) || a.contains(&y) {
        return Err(Error::invalid("l1 dependence needs distinct columns"));
    }
    let mut dims = vec![x, y];
    dims.extend_from_slice(a);
    let hist = histogram_estimate(data, &dims)?;
    Ok(l1_dependence_of_histogram(&hist))
}

fn l1_dependence_of_histogram(hist: &HistogramDensity) -> f64 {
    let m = hist.bins_per_axis;
    let d = hist.axes();
    let a_axes = d - 2;
    // Enumerate A-cells; within each, accumulate |m_xya - m_xa m_ya / m_a|.
    let mut a_cell = vec![0usize; a_axes];
    let mut total = 0.0;
    loop {
        // marginals within this A-cell
        let mut m_a = 0.0;
        let mut m_xa = vec![0.0; m];
        let mut m_ya = vec![0.0; m];
        let mut joint = vec![0.0; m * m];
        let mut cell = vec![0usize; d];
        for (i, &b) in a_cell.iter().enumerate() {
            cell[2 + i] = b;
        }
        for xb in 0..m {
            for yb in 0..m {
                cell[0] = xb;
                cell[1] = yb;
                let v = hist.mass(&cell);
                joint[xb * m + yb] = v;
                m_a += v;
                m_xa[xb] += v;
                m_ya[yb] += v;
            }
        }
        if m_a > 0.0 {
            for xb in 0..m {
                for yb in 0..m {
                    total += (joint[xb * m + yb] - m_xa[xb] * m_ya[yb] / m_a).abs();
                }
            }
        }
        if a_axes == 0 {
            return total;
        }
        let mut ax = a_axes;
        loop {
            if ax == 0 {
                return total;
            }
            ax -= 1;
            a_cell[ax] += 1;
            if a_cell[ax] < m {
                break;
            }
            a_cell[ax] = 0;
            if ax == 0 {
                return total;
            }
        }
    }
}

/// Permutation-calibrated conditional independence test built on
/// [`l1_dependence`]: the null is generated by permuting `y` within the
/// histogram cells of `a` (a plain permutation when `a` is empty).
pub fn l1_ci_test(
    data: &Dataset,
    x: usize,
    y: usize,
    a: &[usize],
    alpha: f64,
    n_perm: usize,
    seed: u64,
) -> Result<TestResult> {
    let observed = l1_dependence(data, x, y, a)?;
    let n = data.n();
    // strata: A-cell of each row
    let strata: Vec<usize> = if a.is_empty() {
        vec![0; n]
    } else {
        let hist = histogram_estimate(data, a)?;
        (0..n)
            .map(|r| {
                let mut off = 0;
                for (ax, &c) in a.iter().enumerate() {
                    off = off * hist.bins_per_axis + hist.bin_of(ax, data.data()[(r, c)]);
                }
                off
            })
            .collect()
    };
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (r, &s) in strata.iter().enumerate() {
        groups.entry(s).or_default().push(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exceed = 0usize;
    for _ in 0..n_perm {
        let mut perm_data = data.data().clone();
        for rows in groups.values() {
            let mut order = rows.clone();
            order.shuffle(&mut rng);
            for (src, dst) in rows.iter().zip(order.iter()) {
                perm_data[(*dst, y)] = data.data()[(*src, y)];
            }
        }
        let shuffled = Dataset::new(data.labels().to_vec(), perm_data)?;
        let stat = l1_dependence(&shuffled, x, y, a)?;
        if stat >= observed {
            exceed += 1;
        }
    }
    let p = (1 + exceed) as f64 / (n_perm + 1) as f64;
    Ok(TestResult::at_level(observed, p, alpha))
}

// ---------------------------------------------------------------------------
// HSIC
// ---------------------------------------------------------------------------

/// Kernel independence test: HSIC with Gaussian kernels and median-heuristic
/// bandwidths; the p-value is the permutation rank over `n_perm` seeded
/// shuffles of `v`.
pub fn hsic_independence_test(
    data: &Dataset,
    u: &[usize],
    v: &[usize],
    alpha: f64,
    n_perm: usize,
    seed: u64,
) -> Result<TestResult> {
    hsic_independence_test_subsampled(data, u, v, alpha, n_perm, seed, usize::MAX)
}

/// As [`hsic_independence_test`], subsampling to at most `max_n` evenly
/// spaced rows first (the Gram matrices are quadratic in `n`).
pub fn hsic_independence_test_subsampled(
    data: &Dataset,
    u: &[usize],
    v: &[usize],
    alpha: f64,
    n_perm: usize,
    seed: u64,
    max_n: usize,
) -> Result<TestResult> {
    if data.n() < 20 {
        return Err(Error::invalid("HSIC needs at least 20 rows"));
    }
    if u.is_empty() || v.is_empty() {
        return Err(Error::invalid("HSIC needs nonempty column sets"));
    }
    let n_full = data.n();
    let rows: Vec<usize> = if n_full > max_n {
        (0..max_n).map(|i| i * n_full / max_n).collect()
    } else {
        (0..n_full).collect()
    };
    let take = |cols: &[usize]| -> Vec<Vec<f64>> {
        rows.iter()
            .map(|&r| cols.iter().map(|&c| data.data()[(r, c)]).collect())
            .collect()
    };
    let us = take(u);
    let vs = take(v);
    hsic_on_points(&us, &vs, alpha, n_perm, seed)
}

/// HSIC on explicit point sets (used by the GIN/IN tests on projected
/// residuals).
pub fn hsic_on_points(
    us: &[Vec<f64>],
    vs: &[Vec<f64>],
    alpha: f64,
    n_perm: usize,
    seed: u64,
) -> Result<TestResult> {
    let n = us.len();
    if n != vs.len() {
        return Err(Error::invalid("HSIC inputs must have equal length"));
    }
    if n < 20 {
        return Err(Error::invalid("HSIC needs at least 20 rows"));
    }
    let d2 = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };
    let median_sq = |pts: &[Vec<f64>]| -> f64 {
        let mut ds = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                ds.push(d2(&pts[i], &pts[j]));
            }
        }
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ds[ds.len() / 2]
    };
    let su = median_sq(us);
    let sv = median_sq(vs);
    if su == 0.0 || sv == 0.0 {
        // constant input: flagged degenerate
        return Ok(TestResult::degenerate_dependent(0.0));
    }
    let gram = |pts: &[Vec<f64>], s2: f64| -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| (-d2(&pts[i], &pts[j]) / (2.0 * s2)).exp())
    };
    let k = gram(us, su);
    let l = gram(vs, sv);
    // double-center K
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).mean()).collect();
    let total_mean = k.mean();
    let mut kc = k.clone();
    for i in 0..n {
        for j in 0..n {
            kc[(i, j)] = k[(i, j)] - row_means[i] - row_means[j] + total_mean;
        }
    }
    let stat_for = |perm: &[usize]| -> f64 {
        let mut acc = 0.0;
        for a in 0..n {
            let pa = perm[a];
            for b in 0..n {
                acc += kc[(pa, perm[b])] * l[(a, b)];
            }
        }
        acc / (n as f64 * n as f64)
    };
    let identity: Vec<usize> = (0..n).collect();
    let observed = stat_for(&identity);
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 0x4853_4943));
    let mut exceed = 0usize;
    let mut perm = identity.clone();
    for _ in 0..n_perm {
        perm.shuffle(&mut rng);
        if stat_for(&perm) >= observed {
            exceed += 1;
        }
    }
    let p = (1 + exceed) as f64 / (n_perm + 1) as f64;
    Ok(TestResult::at_level(observed, p, alpha))
}

// ---------------------------------------------------------------------------
// joint sample cumulants
// ---------------------------------------------------------------------------

/// Joint sample cumulant of order `k = indices.len()` (2 through 4):
/// the partition sum `sum (-1)^(L-1) (L-1)! prod_blocks E[prod Z]` over
/// internally mean-centered columns.
pub fn sample_cumulant(data: &Dataset, indices: &[usize]) -> Result<f64> {
    let k = indices.len();
    if !(2..=4).contains(&k) {
        return Err(Error::invalid(format!(
            "sample cumulants supported for orders 2..=4, got {k}"
        )));
    }
    let n = data.n();
    if n < 2 {
        return Err(Error::invalid("sample cumulant needs n >= 2"));
    }
    let cols: Vec<Vec<f64>> = indices
        .iter()
        .map(|&c| {
            let col = data.column(c);
            let mean = col.iter().sum::<f64>() / n as f64;
            col.into_iter().map(|v| v - mean).collect()
        })
        .collect();
    let mut acc = 0.0;
    for partition in set_partitions(k) {
        let blocks = partition.len();
        let mut sign_fact = if (blocks - 1) % 2 == 0 { 1.0 } else { -1.0 };
        for f in 1..blocks {
            sign_fact *= f as f64;
        }
        let mut prod = sign_fact;
        for block in &partition {
            let moment: f64 = (0..n)
                .map(|r| block.iter().map(|&axis| cols[axis][r]).product::<f64>())
                .sum();
            prod *= moment / n as f64;
        }
        acc += prod;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// rank tests
// ---------------------------------------------------------------------------

/// Relative singular-value threshold for population rank decisions.
pub const POPULATION_RANK_REL_TOL: f64 = 1e-9;

/// Input to [`rank_test`].
pub enum RankInput<'a> {
    /// Exact covariance matrix: decisions from singular-value ratios.
    Population(&'a DMatrix<f64>),
    /// Data: Bartlett canonical-correlation test.
    Sample(&'a Dataset),
}

/// Bootstrap smoothing option for the sample rank test.
#[derive(Debug, Clone, Copy)]
pub enum RankMethod {
    Bartlett,
    /// Average Bartlett p-value over `n_boot` seeded row resamples.
    Bootstrap { n_boot: usize, seed: u64 },
}

/// Tests `rank(Sigma_{A,B}) <= r`. Accepted means `independent == true`.
pub fn rank_test(
    input: &RankInput,
    a: &[usize],
    b: &[usize],
    r: usize,
    alpha: f64,
) -> Result<TestResult> {
    rank_test_with_method(input, a, b, r, alpha, RankMethod::Bartlett)
}

pub fn rank_test_with_method(
    input: &RankInput,
    a: &[usize],
    b: &[usize],
    r: usize,
    alpha: f64,
    method: RankMethod,
) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("rank test needs nonempty sets"));
    }
    if r > a.len().min(b.len()) {
        return Err(Error::invalid(format!(
            "r = {r} exceeds min(|A|, |B|) = {}",
            a.len().min(b.len())
        )));
    }
    if r == a.len().min(b.len()) {
        return Ok(TestResult::at_level(0.0, 1.0, alpha));
    }
    match input {
        RankInput::Population(cov) => {
            let sub = DMatrix::from_fn(a.len(), b.len(), |i, j| cov[(a[i], b[j])]);
            let mut sv: Vec<f64> = sub.singular_values().iter().copied().collect();
            sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
            let top = sv[0];
            if top == 0.0 {
                return Ok(TestResult::at_level(0.0, 1.0, alpha));
            }
            let ratio = sv[r] / top;
            let accepted = ratio < POPULATION_RANK_REL_TOL;
            Ok(TestResult {
                statistic: ratio,
                p_value: if accepted { 1.0 } else { 0.0 },
                independent: accepted,
                degenerate: false,
            })
        }
        RankInput::Sample(data) => match method {
            RankMethod::Bartlett => bartlett_rank(data, a, b, r, alpha),
            RankMethod::Bootstrap { n_boot, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let n = data.n();
                let mut p_sum = 0.0;
                let mut stat_sum = 0.0;
                for _ in 0..n_boot {
                    let rows: Vec<usize> =
                        (0..n).map(|_| rng.random_range(0..n)).collect();
                    let boot = resample_rows(data, &rows)?;
                    let res = bartlett_rank(&boot, a, b, r, alpha)?;
                    p_sum += res.p_value;
                    stat_sum += res.statistic;
                }
                let p = p_sum / n_boot as f64;
                Ok(TestResult::at_level(stat_sum / n_boot as f64, p, alpha))
            }
        },
    }
}

fn resample_rows(data: &Dataset, rows: &[usize]) -> Result<Dataset> {
    let m = DMatrix::from_fn(rows.len(), data.p(), |r, c| data.data()[(rows[r], c)]);
    Dataset::new(data.labels().to_vec(), m)
}

fn bartlett_rank(data: &Dataset, a: &[usize], b: &[usize], r: usize, alpha: f64) -> Result<TestResult> {
    let n = data.n();
    if n < a.len() + b.len() + 4 {
        return Err(Error::invalid("too few rows for the Bartlett rank test"));
    }
    let rhos = canonical_correlations(&data.sample_covariance(), a, b)?;
    let factor = n as f64 - (a.len() + b.len() + 3) as f64 / 2.0;
    let mut stat = 0.0;
    for rho in rhos.iter().skip(r) {
        let r2 = (rho * rho).min(1.0 - 1e-12);
        stat -= factor * (1.0 - r2).ln();
    }
    let df = (a.len() - r) * (b.len() - r);
    let p = chi2_sf(stat, df);
    Ok(TestResult::at_level(stat, p, alpha))
}

/// Canonical correlations between the `a` and `b` blocks, descending.
pub fn canonical_correlations(cov: &DMatrix<f64>, a: &[usize], b: &[usize]) -> Result<Vec<f64>> {
    let saa = DMatrix::from_fn(a.len(), a.len(), |i, j| cov[(a[i], a[j])]);
    let sbb = DMatrix::from_fn(b.len(), b.len(), |i, j| cov[(b[i], b[j])]);
    let sab = DMatrix::from_fn(a.len(), b.len(), |i, j| cov[(a[i], b[j])]);
    let la = saa
        .cholesky()
        .ok_or_else(|| Error::numerical("A-block covariance not positive definite"))?;
    let lb = sbb
        .cholesky()
        .ok_or_else(|| Error::numerical("B-block covariance not positive definite"))?;
    // whiten: La^-1 Sab Lb^-T
    let la_inv = la
        .l()
        .try_inverse()
        .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
    let lb_inv = lb
        .l()
        .try_inverse()
        .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
    let white = &la_inv * sab * lb_inv.transpose();
    let mut sv: Vec<f64> = white.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(sv.into_iter().map(|s| s.min(1.0)).collect())
}

/// Smallest `r` accepted by the sample rank test (sequential testing).
pub fn estimated_rank(data: &Dataset, a: &[usize], b: &[usize], alpha: f64) -> Result<usize> {
    let input = RankInput::Sample(data);
    let cap = a.len().min(b.len());
    for r in 0..cap {
        if rank_test(&input, a, b, r, alpha)?.independent {
            return Ok(r);
        }
    }
    Ok(cap)
}

/// Numeric rank of a population covariance block at the standard relative
/// tolerance.
pub fn population_rank(cov: &DMatrix<f64>, a: &[usize], b: &[usize]) -> usize {
    let sub = DMatrix::from_fn(a.len(), b.len(), |i, j| cov[(a[i], b[j])]);
    let mut sv: Vec<f64> = sub.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    if sv.is_empty() || sv[0] == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s >= POPULATION_RANK_REL_TOL * sv[0]).count()
}

// ---------------------------------------------------------------------------
// GIN / IN
// ---------------------------------------------------------------------------

/// Settings for the residual-independence tests.
#[derive(Debug, Clone, Copy)]
pub struct GinConfig {
    pub n_perm: usize,
    /// Gram-matrix subsample cap for the kernel stage.
    pub hsic_max_n: usize,
}

impl Default for GinConfig {
    fn default() -> Self {
        GinConfig {
            n_perm: 100,
            hsic_max_n: 512,
        }
    }
}

/// Outcome of a GIN test: the kernel test on the worst (most dependent)
/// null direction, plus that direction for audit.
#[derive(Debug, Clone)]
pub struct GinOutcome {
    pub result: TestResult,
    pub omega: DVector<f64>,
}

/// Tests the generalized independence-noise condition for `(Z, Y)`:
/// a projection `omega' Y` with `omega' E[Y Z'] = 0` must be independent of
/// `Z`. When the null space has multiplicity, every null direction is tested
/// and the most dependent one decides.
pub fn gin_test(
    data: &Dataset,
    z: &[usize],
    y: &[usize],
    alpha: f64,
    seed: u64,
    config: GinConfig,
) -> Result<GinOutcome> {
    if y.len() < 2 {
        return Err(Error::invalid("GIN needs |Y| >= 2"));
    }
    if z.is_empty() {
        return Err(Error::invalid("GIN needs nonempty Z"));
    }
    let cov = data.sample_covariance();
    // M = E[Y Z^T] (|Y| x |Z|); omega must satisfy omega' M = 0, so the
    // candidate directions are the small-eigenvalue eigenvectors of M M'.
    let m = DMatrix::from_fn(y.len(), z.len(), |i, j| cov[(y[i], z[j])]);
    let gram = &m * m.transpose();
    let eig = gram.symmetric_eigen();
    let mut dirs: Vec<(f64, DVector<f64>)> = (0..y.len())
        .map(|i| {
            (
                eig.eigenvalues[i].max(0.0).sqrt(),
                eig.eigenvectors.column(i).into_owned(),
            )
        })
        .collect();
    dirs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let sigma_max = dirs.last().map(|d| d.0).unwrap_or(0.0);
    // Every (near-)null direction is a candidate; with no true null space,
    // fall back to the single smallest singular direction.
    let mut candidates: Vec<DVector<f64>> = dirs
        .iter()
        .filter(|(s, _)| *s <= 1e-8 * sigma_max.max(1e-300))
        .map(|(_, v)| refine_null_direction(&m, v))
        .collect();
    if candidates.is_empty() {
        candidates.push(dirs[0].1.clone());
    }
    let mut worst: Option<GinOutcome> = None;
    for (ci, omega) in candidates.iter().enumerate() {
        let proj: Vec<Vec<f64>> = (0..data.n())
            .map(|r| {
                let mut s = 0.0;
                for (k, &col) in y.iter().enumerate() {
                    s += omega[k] * data.data()[(r, col)];
                }
                vec![s]
            })
            .collect();
        let zpts: Vec<Vec<f64>> = (0..data.n())
            .map(|r| z.iter().map(|&c| data.data()[(r, c)]).collect())
            .collect();
        let (proj, zpts) = subsample_pair(&proj, &zpts, config.hsic_max_n);
        let res = hsic_on_points(&proj, &zpts, alpha, config.n_perm, sub_seed(seed, ci as u64))?;
        let replace = match &worst {
            None => true,
            Some(w) => res.p_value < w.result.p_value,
        };
        if replace {
            worst = Some(GinOutcome {
                result: res,
                omega: omega.clone(),
            });
        }
    }
    let out = worst.expect("at least one candidate direction");
    Ok(out)
}

/// Project an approximate null direction onto the orthogonal complement of
/// the column space of `m`, so `omega' m` is zero to machine precision.
fn refine_null_direction(m: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let scale = m.norm().max(1e-300);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for c in 0..m.ncols() {
        let mut u = m.column(c).into_owned();
        for b in &basis {
            let d = b.dot(&u);
            u -= b * d;
        }
        let norm = u.norm();
        if norm > 1e-10 * scale {
            basis.push(u / norm);
        }
    }
    let mut out = v.clone();
    for b in &basis {
        let d = b.dot(&out);
        out -= b * d;
    }
    let norm = out.norm();
    if norm > 1e-6 {
        out / norm
    } else {
        v.clone()
    }
}

fn subsample_pair(a: &[Vec<f64>], b: &[Vec<f64>], max_n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = a.len();
    if n <= max_n {
        return (a.to_vec(), b.to_vec());
    }
    let rows: Vec<usize> = (0..max_n).map(|i| i * n / max_n).collect();
    (
        rows.iter().map(|&r| a[r].clone()).collect(),
        rows.iter().map(|&r| b[r].clone()).collect(),
    )
}

/// Projection-independence test for block-cycle detection: build the
/// projections `omega' Y` that are uncorrelated with the anchor set `B`
/// (null directions of `E[Y B']`), then test their kernel independence from
/// a third set `W`. The most dependent direction decides.
pub fn projected_independence_test(
    data: &Dataset,
    y: &[usize],
    anchor_b: &[usize],
    test_w: &[usize],
    alpha: f64,
    seed: u64,
    config: GinConfig,
) -> Result<TestResult> {
    if y.len() < 2 {
        return Err(Error::invalid("projection test needs |Y| >= 2"));
    }
    let cov = data.sample_covariance();
    let m = DMatrix::from_fn(y.len(), anchor_b.len(), |i, j| cov[(y[i], anchor_b[j])]);
    let gram = &m * m.transpose();
    let eig = gram.symmetric_eigen();
    let mut dirs: Vec<(f64, DVector<f64>)> = (0..y.len())
        .map(|i| {
            (
                eig.eigenvalues[i].max(0.0).sqrt(),
                eig.eigenvectors.column(i).into_owned(),
            )
        })
        .collect();
    dirs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let sigma_max = dirs.last().map(|d| d.0).unwrap_or(0.0);
    let mut candidates: Vec<DVector<f64>> = dirs
        .iter()
        .filter(|(s, _)| *s <= 1e-8 * sigma_max.max(1e-300))
        .map(|(_, v)| refine_null_direction(&m, v))
        .collect();
    if candidates.is_empty() {
        candidates.push(dirs[0].1.clone());
    }
    let mut worst: Option<TestResult> = None;
    for (ci, omega) in candidates.iter().enumerate() {
        let proj: Vec<Vec<f64>> = (0..data.n())
            .map(|r| {
                let mut s = 0.0;
                for (k, &col) in y.iter().enumerate() {
                    s += omega[k] * data.data()[(r, col)];
                }
                vec![s]
            })
            .collect();
        let wpts: Vec<Vec<f64>> = (0..data.n())
            .map(|r| test_w.iter().map(|&c| data.data()[(r, c)]).collect())
            .collect();
        let (proj, wpts) = subsample_pair(&proj, &wpts, config.hsic_max_n);
        let res = hsic_on_points(&proj, &wpts, alpha, config.n_perm, sub_seed(seed, ci as u64))?;
        if worst.is_none_or(|w| res.p_value < w.p_value) {
            worst = Some(res);
        }
    }
    Ok(worst.expect("at least one direction"))
}

/// Independence-noise condition for a single target: the least-squares
/// residual of `y` on `Z` must be independent of `Z`.
pub fn in_test(
    data: &Dataset,
    z: &[usize],
    y: usize,
    alpha: f64,
    seed: u64,
    config: GinConfig,
) -> Result<GinOutcome> {
    if data.n() <= z.len() + 2 {
        return Err(Error::invalid("IN test needs n > |Z| + 2"));
    }
    let cov = data.sample_covariance();
    let szz = DMatrix::from_fn(z.len(), z.len(), |i, j| cov[(z[i], z[j])]);
    let syz = DMatrix::from_fn(1, z.len(), |_, j| cov[(y, z[j])]);
    let inv = szz
        .try_inverse()
        .ok_or_else(|| Error::numerical("singular Gram matrix in IN regression"))?;
    let coeffs = &syz * &inv; // 1 x |Z|
    let omega = DVector::from_iterator(z.len(), coeffs.iter().copied());
    let resid: Vec<Vec<f64>> = (0..data.n())
        .map(|r| {
            let mut s = data.data()[(r, y)];
            for (k, &col) in z.iter().enumerate() {
                s -= omega[k] * data.data()[(r, col)];
            }
            vec![s]
        })
        .collect();
    let zpts: Vec<Vec<f64>> = (0..data.n())
        .map(|r| z.iter().map(|&c| data.data()[(r, c)]).collect())
        .collect();
    let (resid, zpts) = subsample_pair(&resid, &zpts, config.hsic_max_n);
    let result = hsic_on_points(&resid, &zpts, alpha, config.n_perm, sub_seed(seed, 0x494e))?;
    Ok(GinOutcome { result, omega })
}
