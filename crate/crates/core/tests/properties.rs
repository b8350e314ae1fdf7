//! Randomized invariants of the linear algebra, the two models and the
//! simulator.

mod common;

use std::collections::BTreeSet;

use gossip_opinions::dynamics::{fj_to_gossip, EdgeWeights, GossipModel, IDENTITY_TOL};
use gossip_opinions::graph::SocialGraph;
use gossip_opinions::linalg::{
    classify_stochasticity, max_abs_diff, solve_linear, spectral_radius,
    substochastic_schur_stable, DenseMatrix, STOCHASTIC_TOL,
};
use gossip_opinions::sim::{
    empirical_expected_matrix, run_ensemble, run_trajectory, EdgeSampler, EnsembleConfig,
    ExpectationMode, RngStream, Storage, TrajectoryConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn affine_apply(a: &DenseMatrix, b: &DenseMatrix, x: &[f64], u: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x).unwrap();
    let bu = b.mul_vec(u).unwrap();
    ax.iter().zip(&bu).map(|(p, q)| p + q).collect()
}

/// Random 5×5 nonnegative matrix with row sums in (0, 1]; roughly a quarter
/// of the rows are deficient, with sums below `max_deficient_sum`.
fn random_substochastic<R: Rng>(rng: &mut R, max_deficient_sum: f64) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(5, 5);
    for i in 0..5 {
        let target = if rng.gen_bool(0.25) {
            rng.gen_range(0.2..max_deficient_sum)
        } else {
            1.0
        };
        let forced = rng.gen_range(0..5);
        for j in 0..5 {
            if j == forced || rng.gen_bool(0.4) {
                m[(i, j)] = rng.gen_range(0.01..1.0);
            }
        }
        let s: f64 = m.row(i).iter().sum();
        for v in m.row_mut(i) {
            *v *= target / s;
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn states_stay_within_prejudice_range(seed in any::<u64>()) {
        let mut r = rng(seed);
        let model = random_gossip(&mut r, 8);
        let cfg = TrajectoryConfig { steps: 10_000, storage: Storage::None, ..Default::default() };
        let t = run_trajectory(&model, &cfg, RngStream::new(seed, 0));
        let lo = model.u().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = model.u().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        for i in 0..model.n() {
            prop_assert!(t.visited_min[i] >= lo - slack, "agent {i}: {} < {lo}", t.visited_min[i]);
            prop_assert!(t.visited_max[i] <= hi + slack, "agent {i}: {} > {hi}", t.visited_max[i]);
        }
    }

    #[test]
    fn mapping_identities_hold(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fj = random_fj(&mut r);
        let (g, res) = fj_to_gossip(&fj).unwrap();
        prop_assert!(res.susceptibility <= IDENTITY_TOL);
        prop_assert!(res.system <= IDENTITY_TOL);
        prop_assert!(g.h().iter().all(|&h| (0.0..=1.0).contains(&h)));
        prop_assert!(g.gamma().as_slice().iter().all(|&v| v >= 0.0));
        for s in g.gamma().row_sums() {
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
        prop_assert!(max_abs_diff(&g.fixed_point().unwrap(), &fj.limit().unwrap().x_prime) <= 1e-10);
    }

    #[test]
    fn total_effects_rows_are_stochastic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fj = random_fj(&mut r);
        let lim = fj.limit().unwrap();
        prop_assert!(lim.v.as_slice().iter().all(|&v| v >= -1e-12));
        for s in lim.v.row_sums() {
            prop_assert!((s - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn classification_is_permutation_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_substochastic(&mut r, 0.999);
        let mut perm: Vec<usize> = (0..5).collect();
        for i in (1..5).rev() {
            perm.swap(i, r.gen_range(0..=i));
        }
        let p = m.permute_symmetric(&perm);
        let (c, cp) = (
            classify_stochasticity(&m, STOCHASTIC_TOL).unwrap(),
            classify_stochasticity(&p, STOCHASTIC_TOL).unwrap(),
        );
        prop_assert_eq!(c.kind, cp.kind);
        // node i of m is node perm[i] of p
        let mapped: BTreeSet<usize> = c.deficiency_nodes.iter().map(|&i| perm[i]).collect();
        prop_assert_eq!(mapped, cp.deficiency_nodes);
        prop_assert_eq!(
            substochastic_schur_stable(&m, STOCHASTIC_TOL).unwrap(),
            substochastic_schur_stable(&p, STOCHASTIC_TOL).unwrap()
        );
        let (rm, rp) = (spectral_radius(&m).unwrap(), spectral_radius(&p).unwrap());
        prop_assert!((rm - rp).abs() <= 1e-10 * rm.max(1e-300), "{rm} vs {rp}");
    }
}

#[test]
fn affine_pairs_reproduce_the_update() {
    let mut r = rng(1);
    for _ in 0..1000 {
        let model = random_gossip(&mut r, 8);
        let k = r.gen_range(0..model.graph().edge_count());
        let edge = model.graph().edges()[k];
        let x = random_vec(&mut r, model.n(), -100.0, 100.0);
        let pair = model.affine_pair(edge).unwrap();
        let direct = model.step(&x, edge).unwrap();
        let mut in_place = x.clone();
        model.apply_edge_index(&mut in_place, k);
        let via_pair = affine_apply(&pair.a, &pair.b, &x, model.u());
        assert!(
            max_abs_diff(&direct, &via_pair) <= 1e-12,
            "{direct:?} vs {via_pair:?}"
        );
        assert_eq!(direct, in_place);
        for i in (0..model.n()).filter(|&i| i != edge.0) {
            assert_eq!(direct[i], x[i]);
        }
    }
}

#[test]
fn expectation_matches_closed_form_and_fixed_point() {
    let mut r = rng(2);
    for _ in 0..300 {
        let model = random_gossip(&mut r, 10);
        let (ae, be) = model.enumerated_expectation();
        let (ac, bc) = model.closed_form_expectation();
        assert!(ae.max_abs_diff(&ac) <= 1e-12);
        assert!(max_abs_diff(&be, &bc) <= 1e-12);
        let ed = model.expected_dynamics().unwrap();
        assert_eq!(ed.limit.is_some(), model.assumption_holds());
        if let Some(lim) = ed.limit {
            assert!(lim.rho < 1.0);
            // x* = Abar x* + Bbar u
            let back: Vec<f64> = ae
                .mul_vec(&lim.x_star)
                .unwrap()
                .iter()
                .zip(&be)
                .map(|(a, b)| a + b)
                .collect();
            let scale = 1.0 + model.u().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            assert!(max_abs_diff(&back, &lim.x_star) <= 1e-10 * scale);
        }
    }
}

#[test]
fn custom_weights_fixed_point_agrees_with_expectation() {
    let mut r = rng(3);
    let mut checked = 0;
    while checked < 100 {
        let base = random_gossip(&mut r, 6);
        let m = base.graph().edge_count();
        let raw = random_vec(&mut r, m, 0.1, 1.0);
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let model = GossipModel::new(
            base.graph().clone(),
            base.h().to_vec(),
            base.gamma().clone(),
            base.u().to_vec(),
            EdgeWeights::Custom(w),
        )
        .unwrap();
        if !model.assumption_holds() {
            continue;
        }
        let (a, b) = model.enumerated_expectation();
        let x = model.fixed_point().unwrap();
        let back: Vec<f64> = a
            .mul_vec(&x)
            .unwrap()
            .iter()
            .zip(&b)
            .map(|(p, q)| p + q)
            .collect();
        assert!(max_abs_diff(&back, &x) <= 1e-9);
        checked += 1;
    }
}

#[test]
fn spectral_radius_matches_eigenvalues() {
    let mut r = rng(4);
    for _ in 0..1000 {
        let m = random_substochastic(&mut r, 0.999);
        let rho = spectral_radius(&m).unwrap();
        let reference = eigen_radius(&m);
        assert!((rho - reference).abs() <= 1e-8, "{rho} vs {reference}\n{m}");
    }
    // general real matrices, including negative entries
    for _ in 0..200 {
        let n = r.gen_range(2..=7);
        let data = random_vec(&mut r, n * n, -1.0, 1.0);
        let m = DenseMatrix::from_row_major(n, n, data).unwrap();
        let rho = spectral_radius(&m).unwrap();
        let reference = eigen_radius(&m);
        assert!(
            (rho - reference).abs() <= 1e-6 * reference.max(1.0),
            "{rho} vs {reference}\n{m}"
        );
    }
}

/// Every node reaches a deficiency node in at most five steps, so
/// `q = ||M^5||_inf < 1` and `||M^k 1|| <= q^(k/5)`. Ten thousand steps are
/// not always enough (a cycle leaking through one small entry keeps `rho`
/// near one), so the 10^4 budget is checked whenever the certified bound
/// fits in it and the bound itself is checked otherwise.
#[test]
fn reachable_deficiency_means_decay() {
    let mut r = rng(5);
    let (mut stable, mut within_budget) = (0, 0);
    while stable < 1000 {
        let m = random_substochastic(&mut r, 0.9);
        let class = classify_stochasticity(&m, STOCHASTIC_TOL).unwrap();
        let reach_all = !class.deficiency_nodes.is_empty()
            && nodes_reaching(&m, &class.deficiency_nodes).len() == 5;
        assert_eq!(
            substochastic_schur_stable(&m, STOCHASTIC_TOL).unwrap(),
            reach_all
        );
        if !reach_all {
            continue;
        }
        stable += 1;
        assert!(spectral_radius(&m).unwrap() < 1.0);
        let m5 = (0..4).fold(m.clone(), |acc, _| acc.mul_mat(&m).unwrap());
        let q = m5.norm_inf();
        assert!(q < 1.0, "||M^5|| = {q}\n{m}");
        let bound = if q == 0.0 {
            5
        } else {
            5 * (1e-6_f64.ln() / q.ln()).ceil() as u64
        };
        if bound > 10_000_000 {
            continue;
        }
        let mut v = vec![1.0; 5];
        let mut k = 0;
        while v.iter().fold(0.0_f64, |a, b: &f64| a.max(b.abs())) >= 1e-6 {
            v = m.mul_vec(&v).unwrap();
            k += 1;
            assert!(
                k <= bound,
                "M^k 1 above 1e-6 after the certified {bound} steps\n{m}"
            );
        }
        if bound <= 10_000 {
            within_budget += 1;
            assert!(k <= 10_000);
        }
    }
    assert!(
        within_budget >= 900,
        "only {within_budget} of 1000 had a bound within 10^4 steps"
    );
}

#[test]
fn solve_residuals_are_small() {
    let mut r = rng(6);
    for _ in 0..1000 {
        let n = r.gen_range(1..=10);
        let mut a =
            DenseMatrix::from_row_major(n, n, random_vec(&mut r, n * n, -1.0, 1.0)).unwrap();
        for i in 0..n {
            a[(i, i)] += if r.gen_bool(0.5) { 2.0 } else { -2.0 };
        }
        let b = random_vec(&mut r, n, -10.0, 10.0);
        let x = solve_linear(&a, &b).unwrap();
        let ax = a.mul_vec(&x).unwrap();
        let xn = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let bn = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(max_abs_diff(&ax, &b) <= 1e-12 * (a.norm_inf() * xn + bn));
    }
}

#[test]
fn fixture_expected_matrix_radius() {
    let model = fixture_gossip();
    let ed = model.expected_dynamics().unwrap();
    let rho = ed.limit.unwrap().rho;
    assert!(rho < 1.0);
    assert!((rho - eigen_radius(&ed.abar)).abs() <= 1e-10);
}

#[test]
fn single_stubborn_agent_pulls_everyone() {
    let g = SocialGraph::complete(5).unwrap();
    let mut r = rng(7);
    let gamma = random_stochastic_on(&mut r, &g, 0.0);
    let h = vec![0.0, 1.0, 1.0, 1.0, 1.0];
    let u = vec![42.0, -3.0, 7.0, 19.0, 88.0];
    let model = GossipModel::new(g, h, gamma, u, EdgeWeights::Uniform).unwrap();
    assert!(max_abs_diff(&model.fixed_point().unwrap(), &[42.0; 5]) <= 1e-10);
    let cfg = TrajectoryConfig {
        steps: 100_000,
        storage: Storage::None,
        checkpoints: vec![100_000],
        ..Default::default()
    };
    let t = run_trajectory(&model, &cfg, RngStream::new(7, 0));
    assert!(max_abs_diff(&t.checkpoints[0].x, &[42.0; 5]) <= 1e-6);
    assert!(max_abs_diff(&t.checkpoints[0].xbar, &[42.0; 5]) <= 0.1);
}

#[test]
fn fully_stubborn_population_has_zero_error() {
    let g = SocialGraph::complete(3).unwrap();
    let gamma = random_stochastic_on(&mut rng(8), &g, 0.0);
    let u = vec![1.0, 2.0, 3.0];
    let model = GossipModel::new(g, vec![0.0; 3], gamma, u.clone(), EdgeWeights::Uniform).unwrap();
    assert_eq!(model.fixed_point().unwrap(), u);
    let cfg = EnsembleConfig {
        steps: 1000,
        replicates: 8,
        base_seed: 1,
        checkpoints: vec![1, 10, 100, 1000],
    };
    let stats = run_ensemble(&model, &cfg).unwrap();
    assert!(stats.mse.iter().all(|&m| m == 0.0));
}

#[test]
fn weighted_sampler_frequencies() {
    let g = SocialGraph::complete(3).unwrap();
    let gamma = random_stochastic_on(&mut rng(9), &g, 0.0);
    let w: Vec<f64> = (1..=9).map(|k| k as f64 / 45.0).collect();
    let model = GossipModel::new(
        g,
        vec![0.5; 3],
        gamma,
        vec![0.0, 1.0, 2.0],
        EdgeWeights::Custom(w.clone()),
    )
    .unwrap();
    let sampler = EdgeSampler::for_model(&model);
    let mut gen = RngStream::new(9, 0).generator();
    let draws = 900_000u64;
    let mut counts = [0u64; 9];
    for _ in 0..draws {
        counts[sampler.sample(&mut gen)] += 1;
    }
    for (c, p) in counts.iter().zip(&w) {
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (*c as f64 - draws as f64 * p).abs() <= 5.0 * sigma,
            "{counts:?}"
        );
    }
    let mut gen = RngStream::new(9, 1).generator();
    let mc =
        empirical_expected_matrix(&model, ExpectationMode::Sampled(100_000), &mut gen).unwrap();
    assert!(mc.max_abs_diff(&model.enumerated_expectation().0) <= 0.01);
}

#[test]
fn sample_path_oscillates_while_average_settles() {
    let model = fixture_gossip();
    let x_star = model.fixed_point().unwrap();
    let cfg = TrajectoryConfig {
        steps: 100_000,
        storage: Storage::None,
        checkpoints: vec![100_000],
        ..Default::default()
    };
    let t = run_trajectory(&model, &cfg, RngStream::new(1, 0));
    assert!(max_abs_diff(&t.checkpoints[0].xbar, &x_star) <= 1.0);
    for i in [0, 1, 3] {
        assert!(
            t.tail.state_range(i) >= 10.0 * t.tail.avg_range(i),
            "agent {i}"
        );
    }
    // the totally stubborn agent never moves
    assert_eq!(t.tail.state_range(2), 0.0);
}
