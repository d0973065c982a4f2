#![allow(clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netinfer::estimators::kl_divergence;
use netinfer::graph::parse_dot;
use netinfer::scores::tea_statistic;
use netinfer::stats::{empirical_quantile, surrogate_te_samples};
use netinfer::timeseries::read_csv;
use netinfer::{
    collective_transfer_entropy, delay_embed, discretize, exhaustive_search, simulate, Dag,
    EmbeddedView, EmbeddingSpec, EstimatorKind, GdsConfig, GdsModel, IcVariant, ScoreKind, Scorer,
    SearchConfig, SurrogateConfig, SurrogateMethod, TimeSeriesSet,
};

const DISCRETE: EstimatorKind = EstimatorKind::DiscretePlugin;

fn chain(m: usize) -> Dag {
    let edges: Vec<_> = (1..m).map(|v| (v - 1, v)).collect();
    Dag::from_edges(m, &edges).unwrap()
}

fn logistic(graph: Dag, epsilon: f64, n: usize, seed: u64) -> TimeSeriesSet {
    let cfg = GdsConfig::new(graph, GdsModel::CoupledLogistic { r: 4.0, epsilon }, n, seed).with_noise(1e-3, 1e-3);
    simulate(&cfg).unwrap().observations
}

fn binned(data: &TimeSeriesSet, bins: usize, kappa: usize) -> EmbeddedView {
    let spec = EmbeddingSpec::uniform(data.subsystems(), 1, kappa).unwrap();
    delay_embed(&discretize(data, &[bins]).unwrap(), &spec, &[]).unwrap()
}

#[test]
fn simulated_csv_round_trips_exactly() {
    let data = logistic(chain(3), 0.3, 500, 1);
    let mut bytes = Vec::new();
    data.write_csv(&mut bytes).unwrap();
    assert_eq!(read_csv(bytes.as_slice()).unwrap(), data);
}

#[test]
fn inferred_graph_round_trips_through_dot() {
    let data = logistic(chain(3), 0.4, 3000, 2);
    let view = binned(&data, 4, 1);
    let scorer = Scorer::new(&view, DISCRETE, ScoreKind::Tea { alpha: 0.95 }).unwrap();
    let best = exhaustive_search(&scorer, &SearchConfig::default()).unwrap().best;
    let dot = best.to_dot(data.names());
    assert_eq!(parse_dot(&dot).unwrap().to_dag(data.names()).unwrap(), best);
}

#[test]
fn coupling_direction_is_detected() {
    let mut forward = 0;
    for seed in 0..100 {
        let view = binned(&logistic(chain(2), 0.3, 2000, 100 + seed), 4, 1);
        let fwd = collective_transfer_entropy(1, &[0], &view, DISCRETE).unwrap();
        let back = collective_transfer_entropy(0, &[1], &view, DISCRETE).unwrap();
        if fwd > back {
            forward += 1;
        }
    }
    assert!(forward >= 90, "{forward}/100");
}

#[test]
fn coupled_streams_beat_the_surrogate_quantile() {
    let mut hits = 0;
    for seed in 0..100 {
        let view = binned(&logistic(chain(2), 0.4, 2000, 300 + seed), 4, 1);
        let te = collective_transfer_entropy(1, &[0], &view, DISCRETE).unwrap();
        let cfg = SurrogateConfig::new(39, 0.95, SurrogateMethod::Permutation, seed).unwrap();
        let samples = surrogate_te_samples(1, &[0], &view, DISCRETE, &cfg).unwrap();
        if te > empirical_quantile(&samples, 0.95).unwrap() {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn tee_accepts_true_edges() {
    let mut hits = 0;
    for seed in 0..100 {
        let view = binned(&logistic(chain(2), 0.4, 10_000, 500 + seed), 4, 1);
        let cfg = SurrogateConfig::new(19, 0.95, SurrogateMethod::Permutation, seed).unwrap();
        let scorer = Scorer::new(&view, DISCRETE, ScoreKind::Tee(cfg)).unwrap();
        if scorer.local_score(1, &[0]).unwrap() > 0.0 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn surrogate_mean_matches_null_measurement() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let series = (0..2).map(|_| (0..3000).map(|_| rng.random::<f64>()).collect()).collect();
    let view = binned(&TimeSeriesSet::from_series(series).unwrap(), 3, 1);
    let te = collective_transfer_entropy(0, &[1], &view, DISCRETE).unwrap();
    let cfg = SurrogateConfig::new(500, 0.95, SurrogateMethod::Permutation, 3).unwrap();
    let s = surrogate_te_samples(0, &[1], &view, DISCRETE, &cfg).unwrap();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let sd = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s.len() - 1) as f64).sqrt();
    // the measurement is one more draw from the surrogate law
    assert!((te - mean).abs() < 2.0 * sd, "te {te}, mean {mean}, sd {sd}");
}

#[test]
fn kl_of_complete_graph_is_at_most_kl_of_empty() {
    let view = binned(&logistic(chain(3), 0.4, 4000, 9), 3, 1);
    let complete = Dag::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
    let kl_full = kl_divergence(&complete, &view, DISCRETE).unwrap();
    let kl_empty = kl_divergence(&Dag::empty(3), &view, DISCRETE).unwrap();
    assert!(kl_full <= kl_empty, "{kl_full} > {kl_empty}");
}

#[test]
fn adding_edges_never_lowers_raw_te() {
    let view = binned(&logistic(chain(4), 0.3, 2000, 10), 3, 1);
    let scorer = Scorer::new(&view, DISCRETE, ScoreKind::Te).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut g = Dag::empty(4);
    for _ in 0..30 {
        let (a, b) = (rng.random_range(0..4), rng.random_range(0..4));
        let before = scorer.total(&g).unwrap();
        if a != b && !g.has_edge(a, b) && g.add_edge(a, b).is_ok() {
            assert!(scorer.total(&g).unwrap() >= before - 1e-12);
        }
    }
}

#[test]
fn bic_prefers_truth_over_complete_graph() {
    let data = logistic(chain(3), 0.4, 10_000, 11);
    let view = binned(&data, 4, 1);
    let scorer = Scorer::new(&view, DISCRETE, ScoreKind::Ic(IcVariant::Bic)).unwrap();
    let complete = Dag::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
    assert!(scorer.total(&chain(3)).unwrap() > scorer.total(&complete).unwrap());
}

/// Residual variance of least squares of `y` on the columns of `x` plus an intercept.
fn residual_variance(y: &[f64], x: &[&[f64]]) -> f64 {
    let n = y.len();
    let p = x.len() + 1;
    let col = |j: usize, t: usize| if j == 0 { 1.0 } else { x[j - 1][t] };
    let mut a = vec![vec![0.0; p + 1]; p];
    for t in 0..n {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += col(i, t) * col(j, t);
            }
            a[i][p] += col(i, t) * y[t];
        }
    }
    // Gauss-Jordan on the normal equations
    for i in 0..p {
        let piv = a[i][i];
        for v in a[i].iter_mut() {
            *v /= piv;
        }
        for r in 0..p {
            if r != i {
                let f = a[r][i];
                for c in 0..=p {
                    a[r][c] -= f * a[i][c];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..p).map(|i| a[i][p]).collect();
    let rss: f64 = (0..n)
        .map(|t| {
            let fit: f64 = (0..p).map(|j| beta[j] * col(j, t)).sum();
            (y[t] - fit).powi(2)
        })
        .sum();
    rss / n as f64
}

#[test]
fn gaussian_te_equals_granger_log_ratio() {
    let g = Dag::from_edges(2, &[(0, 1)]).unwrap();
    let model = GdsModel::LinearGaussian {
        coupling: vec![vec![0.0, 0.0], vec![0.4, 0.0]],
        self_weight: 0.7,
    };
    let obs = simulate(&GdsConfig::new(g, model, 5000, 13).with_noise(1.0, 0.2)).unwrap().observations;
    let view = delay_embed(&obs, &EmbeddingSpec::uniform(2, 1, 2).unwrap(), &[]).unwrap();
    let te = collective_transfer_entropy(1, &[0], &view, EstimatorKind::LinearGaussian).unwrap();
    let y = view.target(1);
    let own: Vec<&[f64]> = view.history(1).iter().map(|c| c.as_slice()).collect();
    let mut both = own.clone();
    both.extend(view.history(0).iter().map(|c| c.as_slice()));
    let granger = 0.5 * (residual_variance(y, &own) / residual_variance(y, &both)).log2();
    assert!((te - granger).abs() < 1e-9, "{te} vs {granger}");
}

#[test]
fn weak_gaussian_pair_sits_near_the_tea_boundary() {
    // lagged correlation 0.05 between source and destination
    let a = 0.05 / (1.0f64 - 0.05 * 0.05).sqrt();
    let g = Dag::from_edges(2, &[(0, 1)]).unwrap();
    let model = GdsModel::LinearGaussian {
        coupling: vec![vec![0.0, 0.0], vec![a, 0.0]],
        self_weight: 0.0,
    };
    let big = simulate(&GdsConfig::new(g.clone(), model.clone(), 50_000, 14).with_noise(1.0, 0.0)).unwrap();
    let (x, y) = (big.observations.series(0), big.observations.series(1));
    let n = x.len() - 1;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&x[..n]), mean(&y[1..]));
    let cov: f64 = (0..n).map(|t| (x[t] - mx) * (y[t + 1] - my)).sum::<f64>();
    let vx: f64 = (0..n).map(|t| (x[t] - mx).powi(2)).sum::<f64>();
    let vy: f64 = (0..n).map(|t| (y[t + 1] - my).powi(2)).sum::<f64>();
    let rho = cov / (vx * vy).sqrt();
    assert!((rho - 0.05).abs() < 0.015, "{rho}");

    let mut ratios = Vec::new();
    for seed in 0..200 {
        let out = simulate(&GdsConfig::new(g.clone(), model.clone(), 1000, seed).with_noise(1.0, 0.0)).unwrap();
        let view = delay_embed(&out.observations, &EmbeddingSpec::uniform(2, 1, 1).unwrap(), &[]).unwrap();
        let scorer = Scorer::new(&view, EstimatorKind::LinearGaussian, ScoreKind::Tea { alpha: 0.9 }).unwrap();
        let term = scorer.local_term(1, &[0]).unwrap();
        ratios.push(tea_statistic(term.te, view.rows()) / term.penalty);
    }
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    assert!((0.5..2.0).contains(&median), "median statistic/penalty {median}");
}
