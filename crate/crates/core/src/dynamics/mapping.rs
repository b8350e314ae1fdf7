use crate::linalg::DenseMatrix;

use super::{EdgeWeights, FjModel, GossipModel, ModelError};

/// Values this close outside `[0, 1]` are rounding noise and get clamped.
const CLAMP_TOL: f64 = 1e-12;

/// Tolerance on the two identities checked after mapping.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Max-abs residuals of `D(I − H) = I − Λ` and `D(I − H) + H(I − Γ) = I − ΛW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingResiduals {
    pub susceptibility: f64,
    pub system: f64,
}

fn clamp_unit(value: f64, agent: usize, what: &str) -> Result<f64, ModelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else if value > -CLAMP_TOL && value < 1.0 + CLAMP_TOL {
        Ok(value.clamp(0.0, 1.0))
    } else {
        Err(ModelError::MappingDegenerate {
            agent: agent + 1,
            reason: format!("{what} = {value} falls outside [0, 1]"),
        })
    }
}

/// Gossip model whose expected dynamics is the lazy version of `fj`:
///
/// `h_i = (d_i − (1 − λ_ii))/d_i` and
/// `γ_ii = (d_i(1 − h_i) + h_i − (1 − λ_ii w_ii))/h_i`, `γ_ij = λ_ii w_ij/h_i`
/// for `d_i ≠ 1`; agents with only a self-loop get `h_i = 0`, `γ_ii = 1`.
/// Sampling is uniform over the same graph.
pub fn fj_to_gossip(fj: &FjModel) -> Result<(GossipModel, MappingResiduals), ModelError> {
    let graph = fj.graph();
    let n = graph.n();
    let w = fj.w();
    let lambda = fj.lambda();
    let mut h = vec![0.0; n];
    let mut gamma = DenseMatrix::zeros(n, n);

    for i in 0..n {
        let d = graph.degree(i) as f64;
        if graph.degree(i) == 1 {
            h[i] = 0.0;
            gamma[(i, i)] = 1.0;
            continue;
        }
        let hi = clamp_unit((d - (1.0 - lambda[i])) / d, i, "h")?;
        if hi == 0.0 {
            return Err(ModelError::MappingDegenerate {
                agent: i + 1,
                reason: "openness is zero while the degree exceeds one".into(),
            });
        }
        h[i] = hi;
        for j in graph.neighbors(i) {
            let g = if j == i {
                (d * (1.0 - hi) + hi - (1.0 - lambda[i] * w[(i, i)])) / hi
            } else {
                lambda[i] * w[(i, j)] / hi
            };
            gamma[(i, j)] = clamp_unit(g, i, &format!("gamma[{}][{}]", i + 1, j + 1))?;
        }
    }

    let model = GossipModel::new(
        graph.clone(),
        h,
        gamma,
        fj.u().to_vec(),
        EdgeWeights::Uniform,
    )?;
    let residuals = mapping_residuals(fj, &model);
    if residuals.susceptibility > IDENTITY_TOL || residuals.system > IDENTITY_TOL {
        return Err(ModelError::MappingDegenerate {
            agent: 0,
            reason: format!(
                "mapped model misses the identities: D(I-H) residual {:e}, system residual {:e}",
                residuals.susceptibility, residuals.system
            ),
        });
    }
    Ok((model, residuals))
}

pub fn mapping_residuals(fj: &FjModel, gossip: &GossipModel) -> MappingResiduals {
    let n = fj.n();
    let d = gossip.graph().degree_matrix().as_f64();
    let susceptibility = (0..n)
        .map(|i| (d[i] * (1.0 - gossip.h()[i]) - (1.0 - fj.lambda()[i])).abs())
        .fold(0.0, f64::max);
    let target = DenseMatrix::identity(n)
        .add_scaled(-1.0, &fj.lambda_w())
        .expect("square");
    let system = gossip.fixed_point_system().max_abs_diff(&target);
    MappingResiduals {
        susceptibility,
        system,
    }
}

/// `(1 − 1/|E|) I + (1/|E|) ΛW`, the lazy FJ matrix.
pub fn lazy_fj_matrix(fj: &FjModel) -> DenseMatrix {
    let e = fj.graph().edge_count() as f64;
    DenseMatrix::identity(fj.n())
        .scale(1.0 - 1.0 / e)
        .add_scaled(1.0 / e, &fj.lambda_w())
        .expect("square")
}
