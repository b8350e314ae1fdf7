use crate::dynamics::{FjModel, GossipModel};

use super::rng::{EdgeSampler, RngStream};

/// Above this many steps, `Storage::Auto` keeps about a thousand states.
pub const FULL_STORAGE_LIMIT: u64 = 10_000;

/// Which states a trajectory keeps. Checkpoints and the running average
/// are always exact regardless of this choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Storage {
    /// Every step up to [`FULL_STORAGE_LIMIT`], otherwise every `K/1000` steps.
    #[default]
    Auto,
    Every(u64),
    /// Only checkpoints.
    None,
}

impl Storage {
    fn stride(self, steps: u64) -> Option<u64> {
        match self {
            Storage::Auto if steps <= FULL_STORAGE_LIMIT => Some(1),
            Storage::Auto => Some(steps.div_ceil(1000)),
            Storage::Every(s) => Some(s.max(1)),
            Storage::None => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub step: u64,
    pub x: Vec<f64>,
    pub xbar: Vec<f64>,
}

/// Per-agent extremes of `x` and `x̄` over steps `from_step..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailRange {
    pub from_step: u64,
    pub state_min: Vec<f64>,
    pub state_max: Vec<f64>,
    pub avg_min: Vec<f64>,
    pub avg_max: Vec<f64>,
}

impl TailRange {
    fn new(from_step: u64, n: usize) -> Self {
        Self {
            from_step,
            state_min: vec![f64::INFINITY; n],
            state_max: vec![f64::NEG_INFINITY; n],
            avg_min: vec![f64::INFINITY; n],
            avg_max: vec![f64::NEG_INFINITY; n],
        }
    }

    fn observe(&mut self, x: &[f64], xbar: &[f64]) {
        for i in 0..x.len() {
            self.state_min[i] = self.state_min[i].min(x[i]);
            self.state_max[i] = self.state_max[i].max(x[i]);
            self.avg_min[i] = self.avg_min[i].min(xbar[i]);
            self.avg_max[i] = self.avg_max[i].max(xbar[i]);
        }
    }

    pub fn state_range(&self, i: usize) -> f64 {
        self.state_max[i] - self.state_min[i]
    }

    pub fn avg_range(&self, i: usize) -> f64 {
        self.avg_max[i] - self.avg_min[i]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryConfig {
    pub steps: u64,
    pub checkpoints: Vec<u64>,
    pub storage: Storage,
    pub log_edges: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `None` for deterministic (synchronous) runs.
    pub stream: Option<RngStream>,
    pub steps: u64,
    /// Stored states in step order; always includes steps 0 and K.
    pub samples: Vec<Sample>,
    pub checkpoints: Vec<Sample>,
    /// Canonical indices of the sampled edges, if requested.
    pub edge_log: Option<Vec<usize>>,
    pub tail: TailRange,
    /// Per-agent extremes over every visited state.
    pub visited_min: Vec<f64>,
    pub visited_max: Vec<f64>,
}

/// Default checkpoint schedule: powers of ten up to `steps`, plus `steps`.
pub fn decade_checkpoints(steps: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 1u64;
    while p <= steps {
        out.push(p);
        match p.checked_mul(10) {
            Some(next) => p = next,
            None => break,
        }
    }
    if out.last() != Some(&steps) {
        out.push(steps);
    }
    out
}

/// Shared bookkeeping for one run: running average, storage and ranges.
struct Recorder {
    steps: u64,
    stride: Option<u64>,
    checkpoints: Vec<u64>,
    next_checkpoint: usize,
    xbar: Vec<f64>,
    samples: Vec<Sample>,
    checkpoint_samples: Vec<Sample>,
    tail: TailRange,
    visited_min: Vec<f64>,
    visited_max: Vec<f64>,
}

impl Recorder {
    fn new(cfg: &TrajectoryConfig, x0: &[f64]) -> Self {
        let mut checkpoints: Vec<u64> = cfg
            .checkpoints
            .iter()
            .copied()
            .filter(|&c| c <= cfg.steps)
            .collect();
        checkpoints.sort_unstable();
        checkpoints.dedup();
        let mut rec = Self {
            steps: cfg.steps,
            stride: cfg.storage.stride(cfg.steps),
            checkpoints,
            next_checkpoint: 0,
            xbar: x0.to_vec(),
            samples: Vec::new(),
            checkpoint_samples: Vec::new(),
            tail: TailRange::new(cfg.steps / 10, x0.len()),
            visited_min: x0.to_vec(),
            visited_max: x0.to_vec(),
        };
        rec.record(0, x0);
        rec
    }

    #[inline]
    fn advance(&mut self, step: u64, x: &[f64], changed: &[usize]) {
        let inv = 1.0 / (step as f64 + 1.0);
        for (a, v) in self.xbar.iter_mut().zip(x) {
            *a += (v - *a) * inv;
        }
        for &i in changed {
            self.visited_min[i] = self.visited_min[i].min(x[i]);
            self.visited_max[i] = self.visited_max[i].max(x[i]);
        }
        self.record(step, x);
    }

    #[inline]
    fn record(&mut self, step: u64, x: &[f64]) {
        if step >= self.tail.from_step {
            self.tail.observe(x, &self.xbar);
        }
        if self.checkpoints.get(self.next_checkpoint) == Some(&step) {
            self.next_checkpoint += 1;
            self.checkpoint_samples.push(Sample {
                step,
                x: x.to_vec(),
                xbar: self.xbar.clone(),
            });
        }
        if let Some(stride) = self.stride {
            if step.is_multiple_of(stride) || step == self.steps {
                self.samples.push(Sample {
                    step,
                    x: x.to_vec(),
                    xbar: self.xbar.clone(),
                });
            }
        }
    }

    fn finish(self, stream: Option<RngStream>, edge_log: Option<Vec<usize>>) -> Trajectory {
        Trajectory {
            stream,
            steps: self.steps,
            samples: self.samples,
            checkpoints: self.checkpoint_samples,
            edge_log,
            tail: self.tail,
            visited_min: self.visited_min,
            visited_max: self.visited_max,
        }
    }
}

/// Runs the gossip dynamics from `x(0) = u` for `cfg.steps` sampled edges.
///
/// The time average is maintained incrementally,
/// `x̄(k) = x̄(k−1) + (x(k) − x̄(k−1))/(k+1)`. Zero steps yields the
/// single state `x = x̄ = u`.
pub fn run_trajectory(
    model: &GossipModel,
    cfg: &TrajectoryConfig,
    stream: RngStream,
) -> Trajectory {
    let sampler = EdgeSampler::for_model(model);
    let mut rng = stream.generator();
    let edges = model.graph().edges();
    let mut x = model.u().to_vec();
    let mut rec = Recorder::new(cfg, &x);
    let mut log = cfg
        .log_edges
        .then(|| Vec::with_capacity(cfg.steps.min(1 << 24) as usize));
    for step in 1..=cfg.steps {
        let k = sampler.sample(&mut rng);
        model.apply_edge_index(&mut x, k);
        if let Some(log) = log.as_mut() {
            log.push(k);
        }
        rec.advance(step, &x, &[edges[k].0]);
    }
    rec.finish(Some(stream), log)
}

/// Synchronous FJ iteration from `x(0) = u`, recorded like a gossip run.
pub fn run_fj_trajectory(model: &FjModel, cfg: &TrajectoryConfig) -> Trajectory {
    let mut x = model.u().to_vec();
    let mut rec = Recorder::new(cfg, &x);
    let all: Vec<usize> = (0..model.n()).collect();
    for step in 1..=cfg.steps {
        x = model.step(&x).expect("state has length n");
        rec.advance(step, &x, &all);
    }
    rec.finish(None, None)
}
