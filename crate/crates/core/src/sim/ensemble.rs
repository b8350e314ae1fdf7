use rand::Rng;
use rayon::prelude::*;

use crate::dynamics::GossipModel;
use crate::linalg::DenseMatrix;

use super::rng::{EdgeSampler, RngStream};
use super::trajectory::{run_trajectory, Storage, TrajectoryConfig};
use super::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub steps: u64,
    pub replicates: u64,
    pub base_seed: u64,
    pub checkpoints: Vec<u64>,
}

/// Least-squares fit of `mse ≈ constant / k^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub constant: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub checkpoints: Vec<u64>,
    /// Mean over replicates of `‖x̄(k) − x*‖²` at each checkpoint.
    pub mse: Vec<f64>,
    pub replicates: u64,
    /// Fit over the last decade of checkpoints; `None` with fewer than two
    /// usable (positive-MSE) points.
    pub decay_fit: Option<DecayFit>,
    pub x_star: Vec<f64>,
    pub rho: f64,
    /// Extremes over every visited state of every replicate.
    pub visited_min: f64,
    pub visited_max: f64,
}

/// Slack allowed on the `[min u, max u]` bound for rounding.
fn bound_slack(u: &[f64]) -> f64 {
    let scale = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    1e-9 * (1.0 + scale)
}

/// Runs `replicates` independent trajectories (stream id = replicate index)
/// and averages the squared distance of the time averages to `x*`.
///
/// Replicates run in parallel; results are reduced in replicate order so the
/// statistics do not depend on scheduling.
pub fn run_ensemble(model: &GossipModel, cfg: &EnsembleConfig) -> Result<EnsembleStats, SimError> {
    if cfg.replicates == 0 {
        return Err(SimError::InvalidConfig(
            "at least one replicate is required".into(),
        ));
    }
    let ed = model.expected_dynamics()?;
    let limit = ed.limit.ok_or_else(|| {
        SimError::AssumptionViolated(
            "some agent has no path to an agent with openness below one".into(),
        )
    })?;
    let x_star = limit.x_star;

    let mut checkpoints: Vec<u64> = cfg
        .checkpoints
        .iter()
        .copied()
        .filter(|&c| c <= cfg.steps)
        .collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    if checkpoints.is_empty() {
        return Err(SimError::InvalidConfig(
            "no checkpoint within the step budget".into(),
        ));
    }

    let traj_cfg = TrajectoryConfig {
        steps: cfg.steps,
        checkpoints: checkpoints.clone(),
        storage: Storage::None,
        log_edges: false,
    };
    let u = model.u();
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = bound_slack(u);

    // (squared errors per checkpoint, visited min, visited max)
    type Replicate = (Vec<f64>, f64, f64);
    let per_replicate: Vec<Result<Replicate, SimError>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let t = run_trajectory(model, &traj_cfg, RngStream::new(cfg.base_seed, r));
            let vmin = t.visited_min.iter().copied().fold(f64::INFINITY, f64::min);
            let vmax = t
                .visited_max
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            if vmin < lo - slack || vmax > hi + slack {
                return Err(SimError::BoundViolated {
                    replicate: r,
                    min: vmin,
                    max: vmax,
                });
            }
            let errs = t
                .checkpoints
                .iter()
                .map(|c| {
                    c.xbar
                        .iter()
                        .zip(&x_star)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum()
                })
                .collect();
            Ok((errs, vmin, vmax))
        })
        .collect();

    let mut sums = vec![0.0; checkpoints.len()];
    let (mut visited_min, mut visited_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for res in per_replicate {
        let (errs, vmin, vmax) = res?;
        for (s, e) in sums.iter_mut().zip(errs) {
            *s += e;
        }
        visited_min = visited_min.min(vmin);
        visited_max = visited_max.max(vmax);
    }
    let m = cfg.replicates as f64;
    let mse: Vec<f64> = sums.into_iter().map(|s| s / m).collect();
    let decay_fit = fit_decay(&checkpoints, &mse, cfg.steps / 10);

    Ok(EnsembleStats {
        checkpoints,
        mse,
        replicates: cfg.replicates,
        decay_fit,
        x_star,
        rho: limit.rho,
        visited_min,
        visited_max,
    })
}

/// Fits `ln mse = ln C − p ln k` over checkpoints `k ≥ from_step`.
pub fn fit_decay(checkpoints: &[u64], mse: &[f64], from_step: u64) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = checkpoints
        .iter()
        .zip(mse)
        .filter(|(&k, &m)| k >= from_step.max(1) && m > 0.0)
        .map(|(&k, &m)| ((k as f64).ln(), m.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(DecayFit {
        exponent: -slope,
        constant: (my - slope * mx).exp(),
        points: pts.len(),
    })
}

/// How to average the per-edge update matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectationMode {
    /// Exact probability-weighted sum over every edge.
    Enumerate,
    /// Mean over this many sampled edges.
    Sampled(u64),
}

/// Monte Carlo (or exact) estimate of `E[A(k)]`.
pub fn empirical_expected_matrix<R: Rng + ?Sized>(
    model: &GossipModel,
    mode: ExpectationMode,
    rng: &mut R,
) -> Result<DenseMatrix, SimError> {
    let edges = model.graph().edges();
    let weights: Vec<f64> = match mode {
        ExpectationMode::Enumerate => (0..edges.len())
            .map(|k| model.edge_probability(k))
            .collect(),
        ExpectationMode::Sampled(0) => {
            return Err(SimError::InvalidConfig(
                "at least one sample is required".into(),
            ));
        }
        ExpectationMode::Sampled(samples) => {
            let sampler = EdgeSampler::for_model(model);
            let mut counts = vec![0u64; edges.len()];
            for _ in 0..samples {
                counts[sampler.sample(rng)] += 1;
            }
            counts
                .into_iter()
                .map(|c| c as f64 / samples as f64)
                .collect()
        }
    };
    let n = model.n();
    let mut acc = DenseMatrix::zeros(n, n);
    for (&edge, &w) in edges.iter().zip(&weights) {
        if w > 0.0 {
            acc = acc.add_scaled(w, &model.affine_pair(edge)?.a)?;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::gossip::tests::example_gossip;
    use crate::dynamics::EdgeWeights;
    use crate::graph::SocialGraph;

    #[test]
    fn fit_recovers_power_law() {
        let ks = [1000u64, 2000, 5000, 10_000];
        let mse: Vec<f64> = ks.iter().map(|&k| 3.0 / (k as f64).powf(0.9)).collect();
        let fit = fit_decay(&ks, &mse, 1000).unwrap();
        assert!((fit.exponent - 0.9).abs() < 1e-12);
        assert!((fit.constant - 3.0).abs() < 1e-9);
        assert_eq!(fit.points, 4);
        assert!(fit_decay(&ks, &[0.0; 4], 0).is_none());
        assert!(fit_decay(&ks, &mse, 10_000).is_none());
    }

    #[test]
    fn stubborn_ensemble_has_zero_mse() {
        let base = example_gossip();
        let m = GossipModel::new(
            base.graph().clone(),
            vec![0.0; 4],
            base.gamma().clone(),
            base.u().to_vec(),
            EdgeWeights::Uniform,
        )
        .unwrap();
        let stats = run_ensemble(
            &m,
            &EnsembleConfig {
                steps: 1000,
                replicates: 8,
                base_seed: 1,
                checkpoints: vec![10, 100, 1000],
            },
        )
        .unwrap();
        assert_eq!(stats.mse, vec![0.0; 3]);
        assert!(stats.decay_fit.is_none());
    }

    #[test]
    fn ensemble_refuses_without_fixed_point() {
        let base = example_gossip();
        let m = GossipModel::new(
            base.graph().clone(),
            vec![1.0; 4],
            base.gamma().clone(),
            base.u().to_vec(),
            EdgeWeights::Uniform,
        )
        .unwrap();
        let cfg = EnsembleConfig {
            steps: 10,
            replicates: 2,
            base_seed: 0,
            checkpoints: vec![10],
        };
        assert!(matches!(
            run_ensemble(&m, &cfg),
            Err(SimError::AssumptionViolated(_))
        ));
    }

    #[test]
    fn ensemble_is_reproducible() {
        let m = example_gossip();
        let cfg = EnsembleConfig {
            steps: 2000,
            replicates: 16,
            base_seed: 9,
            checkpoints: vec![10, 100, 1000, 2000],
        };
        let a = run_ensemble(&m, &cfg).unwrap();
        let b = run_ensemble(&m, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.mse.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn enumeration_mode_is_exact() {
        let m = example_gossip();
        let mut rng = RngStream::new(0, 0).generator();
        let exact = empirical_expected_matrix(&m, ExpectationMode::Enumerate, &mut rng).unwrap();
        let ed = m.expected_dynamics().unwrap();
        assert!(exact.max_abs_diff(&ed.abar) <= 1e-12);
    }

    #[test]
    fn single_edge_support() {
        // two agents, only self-loops, but one edge weight concentrated
        let g = SocialGraph::new(2, []).unwrap();
        let m = GossipModel::new(
            g,
            vec![0.3, 0.6],
            DenseMatrix::identity(2),
            vec![0.0, 1.0],
            EdgeWeights::Custom(vec![1.0 - 1e-300, 1e-300]),
        )
        .unwrap();
        let mut rng = RngStream::new(4, 0).generator();
        let est = empirical_expected_matrix(&m, ExpectationMode::Sampled(1000), &mut rng).unwrap();
        assert_eq!(est, m.affine_pair((0, 0)).unwrap().a);
        assert!(matches!(
            empirical_expected_matrix(&m, ExpectationMode::Sampled(0), &mut rng),
            Err(SimError::InvalidConfig(_))
        ));
    }
}
