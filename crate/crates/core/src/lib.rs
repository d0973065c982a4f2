//! Structure learning for networks of coupled dynamical systems.
//!
//! Each subsystem is observed through a scalar time series. Candidate coupling
//! graphs are scored with transfer-entropy based functions computed on delay
//! embeddings of the observations, and the graph space is searched for the
//! best-scoring DAG.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`timeseries`] | datasets, CSV input, discretisation, delay embedding |
//! | [`estimators`] | conditional entropy, transfer entropy, stochastic interaction, KL divergence |
//! | [`stats`] | χ² quantiles, degrees of freedom, surrogate distributions |
//! | [`graph`] | the [`Dag`] type, DOT interchange, graph comparison |
//! | [`scores`] | TE, TEA, TEE and information-criterion scores with a local-score cache |
//! | [`search`] | exhaustive enumeration and greedy hill climbing |
//! | [`simulate`] | coupled logistic maps and linear-Gaussian networks |
//!
//! All information quantities are in bits.

pub mod error;
pub mod estimators;
pub mod graph;
pub mod scores;
pub mod search;
pub mod simulate;
pub mod stats;
pub mod timeseries;

mod seed;

pub use error::{Error, Result};
pub use estimators::{
    collective_transfer_entropy, conditional_entropy, kl_divergence, kl_divergence_direct,
    stochastic_interaction, EntropyResult, EstimatorKind, Variable,
};
pub use graph::{compare_graphs, is_acyclic, parse_dot, Dag, DotGraph, GraphMetrics};
pub use scores::{
    score_ic, score_tea, score_te, score_tee, IcVariant, LocalScoreCache, LocalTerm, ScoreKind,
    ScoreReport, Scorer, VertexScore,
};
pub use search::{
    enumerate_dags, exhaustive_search, greedy_hill_climb, search, IncrementalScore, Move,
    SearchConfig, SearchMethod, SearchResult, TieBreak, TraceStep,
};
pub use simulate::{
    simulate, simulate_coupled_logistic, simulate_linear_gaussian, GdsConfig, GdsModel, SimOutput,
};
pub use stats::{
    chi2_quantile, empirical_quantile, surrogate_te_samples, te_degrees_of_freedom, Chi2Params,
    DegreesOfFreedom, SurrogateConfig, SurrogateMethod,
};
pub use timeseries::{
    delay_embed, discretize, load_csv, DiscretizedSeries, EmbeddedView, EmbeddingSpec,
    TimeSeriesSet,
};
