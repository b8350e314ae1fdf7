use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{EdgeWeights, GossipModel};

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha8: the seed is expanded into the cipher key and the
/// stream id selects the 64-bit nonce, so replicates sharing a seed draw
/// from disjoint keystreams of the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Draws canonical edge indices according to a model's sampling law.
#[derive(Debug, Clone)]
pub enum EdgeSampler {
    Uniform {
        count: u64,
    },
    /// Inverse CDF over cumulative edge probabilities.
    Cdf(Vec<f64>),
}

impl EdgeSampler {
    pub fn for_model(model: &GossipModel) -> Self {
        match model.weights() {
            EdgeWeights::Uniform => EdgeSampler::Uniform {
                count: model.graph().edge_count() as u64,
            },
            EdgeWeights::Custom(w) => {
                let mut acc = 0.0;
                let cdf = w
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                EdgeSampler::Cdf(cdf)
            }
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            // gen_range on u64 is rejection-based and unbiased
            EdgeSampler::Uniform { count } => rng.gen_range(0..*count) as usize,
            EdgeSampler::Cdf(cdf) => {
                let total = *cdf.last().expect("at least one edge");
                let u = rng.gen::<f64>() * total;
                cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
            }
        }
    }
}

/// Samples one edge of `model`, advancing `rng`.
pub fn sample_edge<R: Rng + ?Sized>(model: &GossipModel, rng: &mut R) -> (usize, usize) {
    let k = EdgeSampler::for_model(model).sample(rng);
    model.graph().edges()[k]
}
