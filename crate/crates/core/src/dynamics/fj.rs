use std::collections::BTreeSet;

use crate::graph::SocialGraph;
use crate::linalg::{self, DenseMatrix, LuFactors, STOCHASTIC_TOL};

use super::{check_len, ModelError};

/// Synchronous Friedkin–Johnsen model with `Λ = I − diag(W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FjModel {
    graph: SocialGraph,
    w: DenseMatrix,
    lambda: Vec<f64>,
    u: Vec<f64>,
}

/// Limit opinions `x'` and the total-effects matrix `V = (I − ΛW)⁻¹(I − Λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FjLimit {
    pub x_prime: Vec<f64>,
    pub v: DenseMatrix,
}

impl FjModel {
    /// Validates `W` (nonnegative, row-stochastic, supported on the graph's
    /// edges) and derives the susceptibilities from its diagonal.
    pub fn new(graph: SocialGraph, w: DenseMatrix, u: Vec<f64>) -> Result<Self, ModelError> {
        let n = graph.n();
        check_len("W rows", n, w.rows())?;
        check_len("W cols", n, w.cols())?;
        check_len("u", n, u.len())?;
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::invalid(
                format!("u[{}]", i + 1),
                "must be finite",
            ));
        }
        for i in 0..n {
            for j in 0..n {
                let wij = w[(i, j)];
                if wij < 0.0 {
                    return Err(ModelError::invalid(
                        format!("W[{}][{}]", i + 1, j + 1),
                        format!("influence weights must be nonnegative, got {wij}"),
                    ));
                }
                if wij != 0.0 && !graph.has_edge(i, j) {
                    return Err(ModelError::invalid(
                        format!("W[{}][{}]", i + 1, j + 1),
                        format!("nonzero weight {wij} on a pair that is not an edge"),
                    ));
                }
            }
            let s: f64 = w.row(i).iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(ModelError::invalid(
                    format!("W row {}", i + 1),
                    format!("row {} of W sums to {s}, must be row-stochastic", i + 1),
                ));
            }
        }
        let lambda = w.diagonal().iter().map(|d| 1.0 - d).collect();
        Ok(Self {
            graph,
            w,
            lambda,
            u,
        })
    }

    pub fn graph(&self) -> &SocialGraph {
        &self.graph
    }

    pub fn w(&self) -> &DenseMatrix {
        &self.w
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// `ΛW`.
    pub fn lambda_w(&self) -> DenseMatrix {
        self.w
            .scale_rows(&self.lambda)
            .expect("lambda has length n")
    }

    /// One synchronous step `ΛW x + (I − Λ)u`.
    pub fn step(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        check_len("x", self.n(), x.len())?;
        let wx = self.w.mul_vec(x)?;
        Ok(wx
            .iter()
            .zip(&self.lambda)
            .zip(&self.u)
            .map(|((wx, l), u)| l * wx + (1.0 - l) * u)
            .collect())
    }

    /// Every node reaches, along positive-weight edges, an agent with
    /// `W_mm > 0`.
    pub fn assumption_holds(&self) -> bool {
        let n = self.n();
        let support = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.w[(i, j)] > 0.0);
        let g = SocialGraph::new(n, support).expect("n > 1 and indices in range");
        let targets: BTreeSet<usize> = (0..n).filter(|&m| self.w[(m, m)] > 0.0).collect();
        g.reaches_target_set(&targets)
    }

    /// Limit of the synchronous iteration. `V` is assembled column by
    /// column from one LU factorization of `I − ΛW`.
    pub fn limit(&self) -> Result<FjLimit, ModelError> {
        if !self.assumption_holds() {
            return Err(ModelError::AssumptionViolated(
                "some agent has no path to an agent with positive self-weight".into(),
            ));
        }
        let n = self.n();
        let system = DenseMatrix::identity(n).add_scaled(-1.0, &self.lambda_w())?;
        let lu = LuFactors::new(&system)?;
        let mut v = DenseMatrix::zeros(n, n);
        let mut rhs = vec![0.0; n];
        for j in 0..n {
            rhs.iter_mut().for_each(|r| *r = 0.0);
            rhs[j] = 1.0 - self.lambda[j];
            let col = lu.solve(&rhs)?;
            for (i, c) in col.into_iter().enumerate() {
                v[(i, j)] = c;
            }
        }
        let x_prime = v.mul_vec(&self.u)?;
        Ok(FjLimit { x_prime, v })
    }

    /// Spectral radius of `ΛW`.
    pub fn spectral_radius(&self) -> Result<f64, ModelError> {
        Ok(linalg::spectral_radius(&self.lambda_w())?)
    }
}
