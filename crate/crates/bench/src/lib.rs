//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netinfer::{
    delay_embed, discretize, simulate, Dag, EmbeddedView, EmbeddingSpec, GdsConfig, GdsModel,
    TimeSeriesSet,
};

/// Observations of a coupled logistic chain on `m` vertices.
pub fn logistic_chain(m: usize, n: usize, seed: u64) -> TimeSeriesSet {
    let edges: Vec<(usize, usize)> = (1..m).map(|v| (v - 1, v)).collect();
    let graph = Dag::from_edges(m, &edges).expect("chain is acyclic");
    let cfg = GdsConfig::new(graph, GdsModel::CoupledLogistic { r: 4.0, epsilon: 0.4 }, n, seed)
        .with_noise(1e-3, 1e-3);
    simulate(&cfg).expect("valid config").observations
}

pub fn discrete_view(data: &TimeSeriesSet, bins: usize, kappa: usize) -> EmbeddedView {
    let symbols = discretize(data, &[bins]).expect("non-constant series");
    let spec = EmbeddingSpec::uniform(data.subsystems(), 1, kappa).expect("valid spec");
    delay_embed(&symbols, &spec, &[]).expect("series long enough")
}

pub fn continuous_view(data: &TimeSeriesSet, kappa: usize) -> EmbeddedView {
    let spec = EmbeddingSpec::uniform(data.subsystems(), 1, kappa).expect("valid spec");
    delay_embed(data, &spec, &[]).expect("series long enough")
}

/// Independent uniform series.
pub fn noise(m: usize, n: usize, seed: u64) -> TimeSeriesSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let series = (0..m).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
    TimeSeriesSet::from_series(series).expect("finite values")
}
