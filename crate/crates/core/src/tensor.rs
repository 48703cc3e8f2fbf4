//! Dense higher-order cumulant tensors, the combinatorial hyperdeterminant,
//! and the multi-trek tensor constraint, including the odd-order axis
//! sensitivity report.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{every_ktrek_system_has_sided_intersection, VertexId};
use crate::sem::LinearSem;

/// Order-k tensor with equal extent on every axis, stored row-major.
/// `labels[axis]` names the variables indexing that axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantTensor {
    order: usize,
    dim: usize,
    labels: Vec<Vec<String>>,
    values: Vec<f64>,
}

impl CumulantTensor {
    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::invalid("tensor order must be at least 2"));
        }
        let len = dim.checked_pow(order as u32).ok_or_else(|| {
            Error::invalid(format!("tensor of shape {dim}^{order} overflows"))
        })?;
        let axis: Vec<String> = (0..dim).map(|i| format!("v{i}")).collect();
        Ok(CumulantTensor {
            order,
            dim,
            labels: vec![axis; order],
            values: vec![0.0; len],
        })
    }

    /// Diagonal identity tensor: 1 where all indices agree, 0 elsewhere.
    pub fn diagonal_identity(order: usize, dim: usize) -> Result<Self> {
        let mut t = Self::zeros(order, dim)?;
        for i in 0..dim {
            let idx = vec![i; order];
            t.set(&idx, 1.0);
        }
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[Vec<String>] {
        &self.labels
    }

    pub fn set_axis_labels(&mut self, labels: Vec<Vec<String>>) -> Result<()> {
        if labels.len() != self.order || labels.iter().any(|a| a.len() != self.dim) {
            return Err(Error::invalid("axis labels must match tensor shape"));
        }
        self.labels = labels;
        Ok(())
    }

    fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.order);
        let mut off = 0;
        for &i in index {
            debug_assert!(i < self.dim);
            off = off * self.dim + i;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let off = self.offset(index);
        self.values[off] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Restriction: axis `i` keeps the positions `sets[i]`, in their given
    /// order. All restriction sets must have equal cardinality.
    pub fn subtensor(&self, sets: &[Vec<usize>]) -> Result<CumulantTensor> {
        if sets.len() != self.order {
            return Err(Error::invalid(format!(
                "need one index set per axis ({} axes, got {})",
                self.order,
                sets.len()
            )));
        }
        let m = sets[0].len();
        if sets.iter().any(|s| s.len() != m) {
            return Err(Error::invalid("restriction sets must have equal cardinality"));
        }
        for s in sets {
            for &i in s {
                if i >= self.dim {
                    return Err(Error::invalid(format!("index {i} out of range {}", self.dim)));
                }
            }
        }
        let mut out = CumulantTensor::zeros(self.order, m)?;
        out.labels = sets
            .iter()
            .enumerate()
            .map(|(axis, s)| s.iter().map(|&i| self.labels[axis][i].clone()).collect())
            .collect();
        let mut idx = vec![0usize; self.order];
        loop {
            let src: Vec<usize> = idx.iter().enumerate().map(|(a, &i)| sets[a][i]).collect();
            let v = self.get(&src);
            out.set(&idx, v);
            let mut axis = self.order;
            loop {
                if axis == 0 {
                    return Ok(out);
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < m {
                    break;
                }
                idx[axis] = 0;
                if axis == 0 {
                    return Ok(out);
                }
            }
        }
    }

    /// Swap two parallel slices (index values `i` and `j` along `axis`).
    pub fn swap_slices(&self, axis: usize, i: usize, j: usize) -> Result<CumulantTensor> {
        if axis >= self.order || i >= self.dim || j >= self.dim {
            return Err(Error::invalid("slice swap out of range"));
        }
        let mut out = self.clone();
        let mut idx = vec![0usize; self.order];
        loop {
            let mut src = idx.clone();
            if idx[axis] == i {
                src[axis] = j;
            } else if idx[axis] == j {
                src[axis] = i;
            }
            let v = self.get(&src);
            out.set(&idx, v);
            let mut a = self.order;
            loop {
                if a == 0 {
                    return Ok(out);
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < self.dim {
                    break;
                }
                idx[a] = 0;
                if a == 0 {
                    return Ok(out);
                }
            }
        }
    }
}

/// Guard for the permutation expansion: `(n!)^(k-1)` terms.
const HYPERDET_DIM_CAP_HIGH_ORDER: usize = 5;
const HYPERDET_DIM_CAP_ORDER_TWO: usize = 9;

fn permutations_with_sign(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(pool: &mut Vec<usize>, cur: &mut Vec<usize>, sign: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        if pool.is_empty() {
            out.push((cur.clone(), sign));
            return;
        }
        for i in 0..pool.len() {
            let v = pool.remove(i);
            cur.push(v);
            // removing from position i skips i elements: parity flips by i
            let flip = if i % 2 == 0 { 1.0 } else { -1.0 };
            rec(pool, cur, sign * flip, out);
            cur.pop();
            pool.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut (0..n).collect(), &mut Vec::new(), 1.0, &mut out);
    out
}

/// Combinatorial hyperdeterminant: the sum over permutation tuples
/// `(s_2, .., s_k)` of `sign(s_2)..sign(s_k) * prod_i T[i, s_2(i), .., s_k(i)]`.
///
/// Computed by direct expansion in a fixed summation order, so results are
/// bit-reproducible. For order 2 this is the ordinary determinant.
pub fn hyperdeterminant(t: &CumulantTensor) -> Result<f64> {
    let n = t.dim();
    let k = t.order();
    let cap = if k == 2 {
        HYPERDET_DIM_CAP_ORDER_TWO
    } else {
        HYPERDET_DIM_CAP_HIGH_ORDER
    };
    if n > cap {
        return Err(Error::guard(
            format!("hyperdeterminant expansion for order {k}, dimension {n}"),
            cap,
            "smaller index sets",
        ));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let perms = permutations_with_sign(n);
    let mut combo = vec![0usize; k - 1];
    let mut acc = 0.0f64;
    let mut index = vec![0usize; k];
    loop {
        let mut sign = 1.0;
        for &c in &combo {
            sign *= perms[c].1;
        }
        let mut prod = sign;
        for i in 0..n {
            index[0] = i;
            for (axis, &c) in combo.iter().enumerate() {
                index[axis + 1] = perms[c].0[i];
            }
            prod *= t.get(&index);
            if prod == 0.0 {
                break;
            }
        }
        acc += prod;
        // odometer over permutation choices
        let mut axis = k - 1;
        loop {
            if axis == 0 {
                return Ok(acc);
            }
            axis -= 1;
            combo[axis] += 1;
            if combo[axis] < perms.len() {
                break;
            }
            combo[axis] = 0;
            if axis == 0 {
                return Ok(acc);
            }
        }
    }
}

/// Numerical zero threshold for population determinants:
/// `1e-9 * (1 + max_abs^n)`.
pub fn population_zero_tolerance(t: &CumulantTensor) -> f64 {
    1e-9 * (1.0 + t.max_abs().powi(t.dim() as i32))
}

/// Joint report of the graphical side and the numeric side of the tensor
/// constraint on one tuple of equal-size vertex sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorConstraintReport {
    /// Every k-trek system between the sets has a sided intersection.
    pub graphical: bool,
    /// Hyperdeterminant of the order-k cumulant subtensor.
    pub numeric_det: f64,
    /// Zero threshold used for the numeric side.
    pub tolerance: f64,
    /// Whether the graphical statement and the numeric statement agree.
    /// Reported, not asserted: for odd k they can legitimately disagree.
    pub consistent: bool,
}

/// Evaluates both sides of the tensor constraint for `sets` (vertex ids of
/// `sem`'s graph; all sets must have the same size). The cumulant order is
/// the number of sets.
pub fn tensor_constraint_check(
    sem: &LinearSem,
    sets: &[Vec<VertexId>],
    len_cap: usize,
) -> Result<TensorConstraintReport> {
    let k = sets.len();
    let graphical = every_ktrek_system_has_sided_intersection(sem.graph(), sets, len_cap)?;
    let full = sem.implied_cumulant_tensor(k)?;
    let sub = full.subtensor(sets)?;
    let numeric_det = hyperdeterminant(&sub)?;
    let tolerance = population_zero_tolerance(&sub);
    let zero = numeric_det.abs() < tolerance;
    Ok(TensorConstraintReport {
        graphical,
        numeric_det,
        tolerance,
        consistent: graphical == zero,
    })
}

/// Hyperdeterminants of the order-3 cumulant subtensor for each rotation of
/// which set sits on the first axis. Reported as (axis order, determinant).
pub fn odd_dim_axis_sensitivity(
    sem: &LinearSem,
    sets: &[Vec<VertexId>; 3],
) -> Result<Vec<([usize; 3], f64)>> {
    let full = sem.implied_cumulant_tensor(3)?;
    let mut out = Vec::new();
    for rot in [[0usize, 1, 2], [1, 2, 0], [2, 0, 1]] {
        let ordered: Vec<Vec<VertexId>> = rot.iter().map(|&i| sets[i].clone()).collect();
        let sub = full.subtensor(&ordered)?;
        out.push((rot, hyperdeterminant(&sub)?));
    }
    Ok(out)
}
