//! Dense real-matrix primitives.
//!
//! Row-major storage, Gaussian elimination with partial pivoting, a
//! spectral-radius estimator and the stochasticity / Schur-stability
//! classification used for the opinion models. Matrices here are tiny
//! (tens of agents), so everything is dense.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

/// Default absolute tolerance on row sums.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Relative pivot threshold below which a system is declared singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// Default cap on estimator iterations for [`spectral_radius`].
pub const SPECTRAL_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    Empty { rows: usize, cols: usize },
    #[error("entry ({row}, {col}) is not finite: {value}")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("matrix is singular: pivot {pivot:e} in column {col} below threshold {threshold:e}")]
    SingularMatrix {
        col: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("spectral radius estimate did not stabilize within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("matrix is not substochastic")]
    NotSubstochastic,
}

/// Dense row-major real matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: (rows, cols),
                got: (data.len() / cols.max(1), cols),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols,
                col: pos % cols,
                value: data[pos],
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. All rows must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: (rows.len(), cols),
                    got: (rows.len(), r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.row_iter().map(<[f64]>::to_vec).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.row_iter().map(|r| r.iter().sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.cols, 1),
                got: (x.len(), 1),
            });
        }
        Ok(self
            .row_iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn mul_mat(&self, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.cols, other.cols),
                got: (other.rows, other.cols),
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Entrywise `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.rows, self.cols),
                got: (other.rows, other.cols),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, alpha: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    /// Left-multiplies by `diag(d)`, i.e. scales row `i` by `d[i]`.
    pub fn scale_rows(&self, d: &[f64]) -> Result<DenseMatrix, LinalgError> {
        if d.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.rows, 1),
                got: (d.len(), 1),
            });
        }
        let mut out = self.clone();
        for (i, &s) in d.iter().enumerate() {
            out.row_mut(i).iter_mut().for_each(|v| *v *= s);
        }
        Ok(out)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Returns `P M P^T` where `perm[i]` is the new index of old index `i`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> DenseMatrix {
        assert!(self.is_square() && perm.len() == self.rows);
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(perm[i], perm[j])] = self[(i, j)];
            }
        }
        out
    }

    fn require_square(&self) -> Result<usize, LinalgError> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in self.row_iter() {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:8.3}")).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Factors `a`. A pivot whose magnitude falls below `PIVOT_TOL` times the
    /// largest initial magnitude in its column is reported as singular.
    pub fn new(a: &DenseMatrix) -> Result<Self, LinalgError> {
        let n = a.require_square()?;
        let col_scale: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| a[(i, j)].abs()).fold(0.0, f64::max))
            .collect();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            let threshold = PIVOT_TOL * col_scale[k];
            if pivot <= threshold || pivot == 0.0 {
                return Err(LinalgError::SingularMatrix {
                    col: k,
                    pivot,
                    threshold,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.lu.rows;
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: (n, 1),
                got: (b.len(), 1),
            });
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * y[j]).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * y[j]).sum();
            y[i] = (y[i] - s) / self.lu[(i, i)];
        }
        Ok(y)
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    LuFactors::new(a)?.solve(b)
}

/// Spectral radius estimate via Gelfand's formula `rho = lim ||M^m||^(1/m)`.
///
/// The estimator squares a normalized copy of `M` repeatedly, so after `k`
/// iterations it has seen `m = 2^k` and accumulates `log ||M^m||` without
/// overflow. It works for any real square matrix (no positivity or
/// symmetry needed). The estimate at `m` is `(||M^m|| / ||M^(m/2)||)^(2/m)`,
/// which cancels the constant in `||M^m|| ~ C m^j rho^m`; its error is
/// `O(1/m)` at worst (defective or rotating spectra) and geometric otherwise.
/// Iteration stops once two consecutive estimates agree to a relative
/// `1e-13`, but never before `m >= 2n`: norms of early powers can plateau
/// until every row has felt the whole matrix. A power that collapses to
/// zero means `rho = 0`.
pub fn spectral_radius(m: &DenseMatrix) -> Result<f64, LinalgError> {
    spectral_radius_with_cap(m, SPECTRAL_MAX_ITER)
}

pub fn spectral_radius_with_cap(m: &DenseMatrix, max_iter: usize) -> Result<f64, LinalgError> {
    m.require_square()?;
    let norm = m.norm_inf();
    if norm == 0.0 {
        return Ok(0.0);
    }
    // x = M^p / exp(log_norm), with ||x|| = 1
    let mut x = m.scale(1.0 / norm);
    let mut log_norm = norm.ln();
    let mut half = 1.0_f64;
    let mut prev: Option<f64> = None;
    let min_iter = (usize::BITS - m.rows().leading_zeros()) as usize + 1;
    // 2^1000 is the last power representable as f64
    let cap = max_iter.min(1000);
    for iter in 1..=cap {
        let sq = x.mul_mat(&x)?;
        let n = sq.norm_inf();
        if n == 0.0 {
            return Ok(0.0);
        }
        let next = 2.0 * log_norm + n.ln();
        let est = ((next - log_norm) / half).exp();
        log_norm = next;
        half *= 2.0;
        x = sq.scale(1.0 / n);
        if est < 1e-300 {
            return Ok(0.0);
        }
        if iter >= min_iter {
            if let Some(p) = prev {
                if (est - p).abs() <= 1e-13 * est {
                    return Ok(est);
                }
            }
        }
        prev = Some(est);
    }
    Err(LinalgError::NonConvergence { iterations: cap })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StochasticityKind {
    RowStochastic,
    SubstochasticStrict,
    NotSubstochastic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StochasticityClass {
    pub kind: StochasticityKind,
    /// Rows (0-based) whose sum is below `1 - tol`.
    pub deficiency_nodes: BTreeSet<usize>,
}

impl StochasticityClass {
    pub fn is_substochastic(&self) -> bool {
        self.kind != StochasticityKind::NotSubstochastic
    }
}

/// Classifies `m` as row-stochastic, strictly substochastic or neither.
///
/// For a non-substochastic matrix the deficiency set is still reported, but
/// it carries no stability meaning.
pub fn classify_stochasticity(
    m: &DenseMatrix,
    tol: f64,
) -> Result<StochasticityClass, LinalgError> {
    m.require_square()?;
    let negative = m.as_slice().iter().any(|&v| v < -tol);
    let sums = m.row_sums();
    let deficiency_nodes: BTreeSet<usize> = sums
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < 1.0 - tol)
        .map(|(i, _)| i)
        .collect();
    let kind = if negative || sums.iter().any(|&s| s > 1.0 + tol) {
        StochasticityKind::NotSubstochastic
    } else if deficiency_nodes.is_empty() {
        StochasticityKind::RowStochastic
    } else {
        StochasticityKind::SubstochasticStrict
    };
    let deficiency_nodes = if kind == StochasticityKind::RowStochastic {
        BTreeSet::new()
    } else {
        deficiency_nodes
    };
    Ok(StochasticityClass {
        kind,
        deficiency_nodes,
    })
}

/// Sufficient Schur-stability test for substochastic matrices.
///
/// Returns true iff every node of the graph associated with `m` (edge
/// `i -> j` iff `m[i][j] > 0`) has a directed path to a deficiency node.
/// This is a reachability test; no eigenvalues are computed.
pub fn substochastic_schur_stable(m: &DenseMatrix, tol: f64) -> Result<bool, LinalgError> {
    let class = classify_stochasticity(m, tol)?;
    if !class.is_substochastic() {
        return Err(LinalgError::NotSubstochastic);
    }
    if class.deficiency_nodes.is_empty() {
        return Ok(false);
    }
    let n = m.rows();
    // reverse adjacency: j -> i whenever m[i][j] > 0
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if m[(i, j)] > 0.0 {
                incoming[j].push(i);
            }
        }
    }
    Ok(reverse_reach_all(
        &incoming,
        class.deficiency_nodes.iter().copied(),
    ))
}

/// True iff a reverse BFS from `targets` over `incoming` visits every node.
pub(crate) fn reverse_reach_all(
    incoming: &[Vec<usize>],
    targets: impl IntoIterator<Item = usize>,
) -> bool {
    let n = incoming.len();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for t in targets {
        if !seen[t] {
            seen[t] = true;
            queue.push_back(t);
        }
    }
    let mut count = queue.len();
    while let Some(v) = queue.pop_front() {
        for &p in &incoming[v] {
            if !seen[p] {
                seen[p] = true;
                count += 1;
                queue.push_back(p);
            }
        }
    }
    count == n
}

/// Per-row correction applied by [`renormalize_rows`].
#[derive(Debug, Clone, PartialEq)]
pub struct RowCorrection {
    pub row: usize,
    pub original_sum: f64,
}

/// Divides every row by its sum. Rows whose sum differs from 1 are reported;
/// rows summing to zero are left unchanged.
pub fn renormalize_rows(m: &mut DenseMatrix) -> Vec<RowCorrection> {
    let mut corrections = Vec::new();
    for i in 0..m.rows() {
        let s: f64 = m.row(i).iter().sum();
        if s != 1.0 && s != 0.0 {
            m.row_mut(i).iter_mut().for_each(|v| *v /= s);
            corrections.push(RowCorrection {
                row: i,
                original_sum: s,
            });
        }
    }
    corrections
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
