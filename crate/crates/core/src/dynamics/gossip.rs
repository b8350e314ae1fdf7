use std::collections::BTreeSet;

use crate::graph::SocialGraph;
use crate::linalg::{self, DenseMatrix, LuFactors, STOCHASTIC_TOL};

use super::{check_len, ModelError, OPENNESS_TOL};

/// Sampling law over the canonical edge list.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeWeights {
    Uniform,
    /// One positive weight per edge, summing to one.
    Custom(Vec<f64>),
}

/// Gossip model with openness `h`, mixing matrix `Γ` and prejudices `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct GossipModel {
    graph: SocialGraph,
    h: Vec<f64>,
    gamma: DenseMatrix,
    u: Vec<f64>,
    weights: EdgeWeights,
}

/// The update `x ↦ A x + B u` triggered by one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePair {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub edge: (usize, usize),
}

/// Fixed point of the expected dynamics and the spectral radius of `Ā`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedLimit {
    pub x_star: Vec<f64>,
    pub rho: f64,
}

/// `E[x(k+1)] = Ā E[x(k)] + B̄u`. `limit` is `None` when some agent cannot
/// reach an agent with `h_m < 1`; such models can still be simulated.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedDynamics {
    pub abar: DenseMatrix,
    pub bbar_u: Vec<f64>,
    pub limit: Option<ExpectedLimit>,
}

impl GossipModel {
    pub fn new(
        graph: SocialGraph,
        h: Vec<f64>,
        gamma: DenseMatrix,
        u: Vec<f64>,
        weights: EdgeWeights,
    ) -> Result<Self, ModelError> {
        let n = graph.n();
        check_len("H", n, h.len())?;
        check_len("Gamma rows", n, gamma.rows())?;
        check_len("Gamma cols", n, gamma.cols())?;
        check_len("u", n, u.len())?;
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::invalid(
                format!("u[{}]", i + 1),
                "must be finite",
            ));
        }
        for (i, &hi) in h.iter().enumerate() {
            if !(0.0..=1.0).contains(&hi) {
                return Err(ModelError::invalid(
                    format!("H[{}]", i + 1),
                    format!("openness must lie in [0, 1], got {hi}"),
                ));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let g = gamma[(i, j)];
                if g < 0.0 {
                    return Err(ModelError::invalid(
                        format!("Gamma[{}][{}]", i + 1, j + 1),
                        format!("mixing weights must be nonnegative, got {g}"),
                    ));
                }
                if g != 0.0 && !graph.has_edge(i, j) {
                    return Err(ModelError::invalid(
                        format!("Gamma[{}][{}]", i + 1, j + 1),
                        format!(
                            "agent {} is not a neighbor of agent {} but has weight {g}",
                            j + 1,
                            i + 1
                        ),
                    ));
                }
            }
            let s: f64 = gamma.row(i).iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(ModelError::invalid(
                    format!("Gamma row {}", i + 1),
                    format!(
                        "row {} of Gamma sums to {s}; the mixing matrix must be row-stochastic",
                        i + 1
                    ),
                ));
            }
        }
        if let EdgeWeights::Custom(w) = &weights {
            check_len("edge_weights", graph.edge_count(), w.len())?;
            if let Some(k) = w.iter().position(|&p| !(p > 0.0 && p.is_finite())) {
                return Err(ModelError::invalid(
                    format!("edge_weights[{}]", k + 1),
                    format!("edge probabilities must be positive, got {}", w[k]),
                ));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(ModelError::invalid(
                    "edge_weights",
                    format!("weights sum to {s}, must sum to 1"),
                ));
            }
        }
        Ok(Self {
            graph,
            h,
            gamma,
            u,
            weights,
        })
    }

    pub fn graph(&self) -> &SocialGraph {
        &self.graph
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn gamma(&self) -> &DenseMatrix {
        &self.gamma
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn weights(&self) -> &EdgeWeights {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Probability of sampling the `k`-th canonical edge.
    pub fn edge_probability(&self, k: usize) -> f64 {
        match &self.weights {
            EdgeWeights::Uniform => 1.0 / self.graph.edge_count() as f64,
            EdgeWeights::Custom(w) => w[k],
        }
    }

    fn edge_index(&self, (i, j): (usize, usize)) -> Result<usize, ModelError> {
        self.graph
            .edge_index(i, j)
            .ok_or(ModelError::EdgeNotInGraph(i, j))
    }

    /// Applies the update of the `k`-th canonical edge in place.
    #[inline]
    pub fn apply_edge_index(&self, x: &mut [f64], k: usize) {
        let (i, j) = self.graph.edges()[k];
        let h = self.h[i];
        let g = self.gamma[(i, j)];
        x[i] = h * ((1.0 - g) * x[i] + g * x[j]) + (1.0 - h) * self.u[i];
    }

    /// State after edge `(i, j)` fires; only coordinate `i` changes.
    pub fn step(&self, x: &[f64], edge: (usize, usize)) -> Result<Vec<f64>, ModelError> {
        check_len("x", self.n(), x.len())?;
        let k = self.edge_index(edge)?;
        let mut next = x.to_vec();
        self.apply_edge_index(&mut next, k);
        Ok(next)
    }

    /// `A = (I − e_i e_iᵀ(I − H))(I + γ_ij(e_i e_jᵀ − e_i e_iᵀ))`,
    /// `B = e_i e_iᵀ(I − H)`.
    pub fn affine_pair(&self, edge: (usize, usize)) -> Result<AffinePair, ModelError> {
        self.edge_index(edge)?;
        let (i, j) = edge;
        let n = self.n();
        let h = self.h[i];
        let g = self.gamma[(i, j)];
        let mut a = DenseMatrix::identity(n);
        let row = a.row_mut(i);
        row[i] = h * (1.0 - g);
        row[j] += h * g;
        let mut b = DenseMatrix::zeros(n, n);
        b[(i, i)] = 1.0 - h;
        Ok(AffinePair { a, b, edge })
    }

    /// Every agent reaches an agent with `h_m < 1`.
    pub fn assumption_holds(&self) -> bool {
        let targets: BTreeSet<usize> = (0..self.n())
            .filter(|&m| self.h[m] < 1.0 - OPENNESS_TOL)
            .collect();
        self.graph.reaches_target_set(&targets)
    }

    /// `(Ā, B̄u)` as the probability-weighted sum of the affine pairs over
    /// every edge.
    pub fn enumerated_expectation(&self) -> (DenseMatrix, Vec<f64>) {
        let n = self.n();
        let mut abar = DenseMatrix::zeros(n, n);
        let mut bbar = DenseMatrix::zeros(n, n);
        for (k, &edge) in self.graph.edges().iter().enumerate() {
            let p = self.edge_probability(k);
            let pair = self.affine_pair(edge).expect("canonical edge");
            abar = abar.add_scaled(p, &pair.a).expect("same shape");
            bbar = bbar.add_scaled(p, &pair.b).expect("same shape");
        }
        let bbar_u = bbar.mul_vec(&self.u).expect("u has length n");
        (abar, bbar_u)
    }

    /// `D(I − H) + H(I − Γ)`.
    pub fn fixed_point_system(&self) -> DenseMatrix {
        let n = self.n();
        let d = self.graph.degree_matrix().as_f64();
        let one_minus_h: Vec<f64> = self.h.iter().map(|h| 1.0 - h).collect();
        let mut m = DenseMatrix::identity(n)
            .add_scaled(-1.0, &self.gamma)
            .expect("square")
            .scale_rows(&self.h)
            .expect("h has length n");
        for i in 0..n {
            m[(i, i)] += d[i] * one_minus_h[i];
        }
        m
    }

    /// `D(I − H)u`.
    pub fn fixed_point_rhs(&self) -> Vec<f64> {
        let d = self.graph.degree_matrix().as_f64();
        (0..self.n())
            .map(|i| d[i] * (1.0 - self.h[i]) * self.u[i])
            .collect()
    }

    /// `(Ā, B̄u)` from the uniform-sampling closed form
    /// `Ā = I − (D(I − H) + H(I − Γ))/|E|`, `B̄u = D(I − H)u/|E|`.
    pub fn closed_form_expectation(&self) -> (DenseMatrix, Vec<f64>) {
        let e = self.graph.edge_count() as f64;
        let abar = DenseMatrix::identity(self.n())
            .add_scaled(-1.0 / e, &self.fixed_point_system())
            .expect("square");
        let bbar_u = self.fixed_point_rhs().into_iter().map(|v| v / e).collect();
        (abar, bbar_u)
    }

    /// Limit of the expected dynamics.
    ///
    /// Under uniform sampling this solves `(D(I − H) + H(I − Γ)) x = D(I − H)u`.
    /// With custom edge weights the degree-based formula no longer applies
    /// and `(I − Ā) x = B̄u` is solved instead.
    pub fn fixed_point(&self) -> Result<Vec<f64>, ModelError> {
        if !self.assumption_holds() {
            return Err(ModelError::AssumptionViolated(
                "some agent has no path to an agent with openness below one".into(),
            ));
        }
        match self.weights {
            EdgeWeights::Uniform => Ok(linalg::solve_linear(
                &self.fixed_point_system(),
                &self.fixed_point_rhs(),
            )?),
            EdgeWeights::Custom(_) => {
                let (abar, bbar_u) = self.enumerated_expectation();
                let system = DenseMatrix::identity(self.n()).add_scaled(-1.0, &abar)?;
                Ok(LuFactors::new(&system)?.solve(&bbar_u)?)
            }
        }
    }

    pub fn expected_dynamics(&self) -> Result<ExpectedDynamics, ModelError> {
        let (abar, bbar_u) = self.enumerated_expectation();
        let limit = if self.assumption_holds() {
            Some(ExpectedLimit {
                x_star: self.fixed_point()?,
                rho: linalg::spectral_radius(&abar)?,
            })
        } else {
            None
        };
        Ok(ExpectedDynamics {
            abar,
            bbar_u,
            limit,
        })
    }
}
