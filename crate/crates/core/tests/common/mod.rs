//! Shared fixtures and random model generators for the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use gossip_opinions::dynamics::{EdgeWeights, FjModel, GossipModel};
use gossip_opinions::graph::SocialGraph;
use gossip_opinions::linalg::DenseMatrix;
use rand::Rng;

pub const FIXTURE_W: [[f64; 4]; 4] = [
    [0.220, 0.120, 0.360, 0.300],
    [0.147, 0.215, 0.344, 0.294],
    [0.0, 0.0, 1.0, 0.0],
    [0.090, 0.178, 0.446, 0.286],
];
pub const FIXTURE_U: [f64; 4] = [25.0, 25.0, 75.0, 85.0];
pub const FIXTURE_X_PRIME: [f64; 4] = [60.0, 60.0, 75.0, 75.0];
pub const FIXTURE_V: [[f64; 4]; 4] = [
    [0.280, 0.045, 0.551, 0.124],
    [0.047, 0.278, 0.549, 0.126],
    [0.0, 0.0, 1.0, 0.0],
    [0.030, 0.048, 0.532, 0.390],
];
pub const FIXTURE_H: [f64; 4] = [0.945, 0.946, 0.0, 0.928];
pub const FIXTURE_GAMMA: [[f64; 4]; 4] = [
    [0.356, 0.099, 0.297, 0.248],
    [0.122, 0.349, 0.285, 0.244],
    [0.0, 0.0, 1.0, 0.0],
    [0.069, 0.137, 0.343, 0.451],
];

/// Four-agent FJ example built from the printed weights.
pub fn fixture_fj() -> FjModel {
    let w = DenseMatrix::from_rows(&FIXTURE_W).unwrap();
    let edges: Vec<(usize, usize)> = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .filter(|&(i, j)| FIXTURE_W[i][j] > 0.0)
        .collect();
    FjModel::new(SocialGraph::new(4, edges).unwrap(), w, FIXTURE_U.to_vec()).unwrap()
}

/// Gossip model loaded from the bundled fixture file.
pub fn fixture_gossip() -> GossipModel {
    let text = gossip_opinions::io::builtin_fixture("gossip_example").unwrap();
    let loaded = gossip_opinions::io::ModelFile::parse(text)
        .unwrap()
        .into_model(false)
        .unwrap();
    loaded.model.as_gossip().unwrap().clone()
}

/// Random digraph on `n` nodes where every node has a self-loop and at
/// least one other out-neighbour.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, density: f64) -> SocialGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        let forced = loop {
            let j = rng.gen_range(0..n);
            if j != i {
                break j;
            }
        };
        edges.push((i, forced));
        for j in 0..n {
            if j != i && rng.gen_bool(density) {
                edges.push((i, j));
            }
        }
    }
    SocialGraph::new(n, edges).unwrap()
}

/// Random row-stochastic weights supported on the graph. Each self weight is
/// zero with probability `p_zero_self`.
pub fn random_stochastic_on<R: Rng>(rng: &mut R, g: &SocialGraph, p_zero_self: f64) -> DenseMatrix {
    let n = g.n();
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let zero_self = rng.gen_bool(p_zero_self);
        for j in g.neighbors(i) {
            if j == i && zero_self {
                continue;
            }
            m[(i, j)] = rng.gen_range(0.05..1.0);
        }
        let s: f64 = m.row(i).iter().sum();
        for v in m.row_mut(i) {
            *v /= s;
        }
    }
    m
}

/// Random FJ model (`n ≤ 10`, every degree ≥ 2) whose limit exists.
pub fn random_fj<R: Rng>(rng: &mut R) -> FjModel {
    loop {
        let n = rng.gen_range(2..=10);
        let density = rng.gen_range(0.1..0.8);
        let g = random_graph(rng, n, density);
        let w = random_stochastic_on(rng, &g, 0.4);
        let u = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
        let fj = FjModel::new(g, w, u).unwrap();
        if fj.assumption_holds() {
            return fj;
        }
    }
}

/// Random gossip model with uniform edge weights. Openness values include
/// the extremes 0 and 1 now and then.
pub fn random_gossip<R: Rng>(rng: &mut R, max_n: usize) -> GossipModel {
    let n = rng.gen_range(2..=max_n);
    let density = rng.gen_range(0.1..0.8);
    let g = random_graph(rng, n, density);
    let gamma = random_stochastic_on(rng, &g, 0.3);
    let h = (0..n)
        .map(|_| match rng.gen_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen_range(0.0..1.0),
        })
        .collect();
    let u = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
    GossipModel::new(g, h, gamma, u, EdgeWeights::Uniform).unwrap()
}

/// Nodes that can reach `targets` along positive entries of `m`, by a
/// plain fixed-point sweep.
pub fn nodes_reaching(m: &DenseMatrix, targets: &BTreeSet<usize>) -> BTreeSet<usize> {
    let n = m.rows();
    let mut reach = targets.clone();
    loop {
        let before = reach.len();
        for i in 0..n {
            if (0..n).any(|j| m[(i, j)] > 0.0 && reach.contains(&j)) {
                reach.insert(i);
            }
        }
        if reach.len() == before {
            return reach;
        }
    }
}

/// Largest eigenvalue modulus from nalgebra's Schur decomposition.
pub fn eigen_radius(m: &DenseMatrix) -> f64 {
    let n = m.rows();
    let na = nalgebra::DMatrix::from_row_slice(n, n, m.as_slice());
    na.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn max_entry_diff<const N: usize>(m: &DenseMatrix, expected: &[[f64; N]; N]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, row) in expected.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            d = d.max((m[(i, j)] - e).abs());
        }
    }
    d
}
