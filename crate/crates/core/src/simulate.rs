//! Ground-truth data from synchronous graph dynamical systems.
//!
//! Two models are available: coupled logistic maps and a linear-Gaussian
//! network. Each subsystem has a scalar state, and the observation is the
//! state plus Gaussian noise.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::timeseries::TimeSeriesSet;

pub const DEFAULT_BURN_IN: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GdsModel {
    /// `x' = (1-ε) g(x) + (ε/p) Σ_parents g(x_j)` with `g(z) = r z (1-z)`.
    CoupledLogistic { r: f64, epsilon: f64 },
    /// `x'_i = self·x_i + Σ_j coupling[i][j]·x_j + noise`.
    LinearGaussian {
        coupling: Vec<Vec<f64>>,
        #[serde(rename = "self")]
        self_weight: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdsConfig {
    pub graph: Dag,
    /// Column names; `v1..vM` when empty.
    #[serde(default)]
    pub names: Vec<String>,
    pub model: GdsModel,
    #[serde(default)]
    pub process_noise_std: f64,
    #[serde(default)]
    pub obs_noise_std: f64,
    pub n: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub seed: u64,
    /// Starting states; uniform(0,1) for the logistic model and zero for the
    /// linear model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<f64>>,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

impl GdsConfig {
    pub fn new(graph: Dag, model: GdsModel, n: usize, seed: u64) -> Self {
        Self {
            graph,
            names: Vec::new(),
            model,
            process_noise_std: 0.0,
            obs_noise_std: 0.0,
            n,
            burn_in: DEFAULT_BURN_IN,
            seed,
            initial_state: None,
        }
    }

    pub fn with_noise(mut self, process: f64, obs: f64) -> Self {
        self.process_noise_std = process;
        self.obs_noise_std = obs;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn vertex_names(&self) -> Vec<String> {
        if self.names.is_empty() {
            (1..=self.graph.vertex_count()).map(|i| format!("v{i}")).collect()
        } else {
            self.names.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.graph.vertex_count();
        if m == 0 {
            return Err(Error::param("graph", "needs at least one vertex"));
        }
        if !self.names.is_empty() && self.names.len() != m {
            return Err(Error::param("names", format!("expected {m} names, got {}", self.names.len())));
        }
        if self.n < 2 {
            return Err(Error::param("n", "must be at least 2"));
        }
        for (field, v) in [
            ("process_noise_std", self.process_noise_std),
            ("obs_noise_std", self.obs_noise_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(field, "must be finite and non-negative"));
            }
        }
        if let Some(x0) = &self.initial_state {
            if x0.len() != m || x0.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("initial_state", format!("expected {m} finite values")));
            }
        }
        match &self.model {
            GdsModel::CoupledLogistic { r, epsilon } => {
                if !(*epsilon > 0.0 && *epsilon < 1.0) {
                    return Err(Error::param("epsilon", format!("must lie in (0, 1), got {epsilon}")));
                }
                if !(*r > 0.0 && *r <= 4.0) {
                    return Err(Error::param("r", format!("must lie in (0, 4], got {r}")));
                }
                if let Some(x0) = &self.initial_state {
                    if x0.iter().any(|v| !(0.0..=1.0).contains(v)) {
                        return Err(Error::param("initial_state", "logistic states must lie in [0, 1]"));
                    }
                }
            }
            GdsModel::LinearGaussian { coupling, self_weight } => {
                if !self_weight.is_finite() {
                    return Err(Error::param("self", "must be finite"));
                }
                if coupling.len() != m || coupling.iter().any(|row| row.len() != m) {
                    return Err(Error::param("coupling", format!("must be a {m}x{m} matrix")));
                }
                for (i, row) in coupling.iter().enumerate() {
                    for (j, &w) in row.iter().enumerate() {
                        if !w.is_finite() {
                            return Err(Error::param("coupling", format!("entry ({i},{j}) is not finite")));
                        }
                        if w != 0.0 && !self.graph.has_edge(j, i) {
                            return Err(Error::param(
                                "coupling",
                                format!("entry ({i},{j}) is nonzero but the graph has no edge {j}->{i}"),
                            ));
                        }
                    }
                }
                let rho = spectral_radius(coupling, *self_weight);
                if rho >= 1.0 {
                    return Err(Error::Nonstationary(rho));
                }
            }
        }
        Ok(())
    }
}

fn spectral_radius(coupling: &[Vec<f64>], self_weight: f64) -> f64 {
    let m = coupling.len();
    let a = DMatrix::from_fn(m, m, |i, j| coupling[i][j] + if i == j { self_weight } else { 0.0 });
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub observations: TimeSeriesSet,
    /// Hidden states, one sequence per subsystem.
    pub states: Vec<Vec<f64>>,
    pub truth: Dag,
    pub config_echo: GdsConfig,
}

pub fn simulate(cfg: &GdsConfig) -> Result<SimOutput> {
    match cfg.model {
        GdsModel::CoupledLogistic { .. } => simulate_coupled_logistic(cfg),
        GdsModel::LinearGaussian { .. } => simulate_linear_gaussian(cfg),
    }
}

fn noise(std: f64) -> Option<Normal<f64>> {
    (std > 0.0).then(|| Normal::new(0.0, std).expect("validated std"))
}

/// Folds `x` back into `[0, 1]` by mirroring at the boundaries.
fn reflect(mut x: f64) -> f64 {
    while !(0.0..=1.0).contains(&x) {
        x = if x < 0.0 { -x } else { 2.0 - x };
    }
    x
}

pub fn simulate_coupled_logistic(cfg: &GdsConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let GdsModel::CoupledLogistic { r, epsilon } = cfg.model else {
        return Err(Error::param("model", "expected coupled-logistic"));
    };
    let g = |z: f64| r * z * (1.0 - z);
    let parents: Vec<&[usize]> = (0..cfg.graph.vertex_count()).map(|v| cfg.graph.parents(v)).collect();
    run(cfg, |x, next| {
        for (i, ps) in parents.iter().enumerate() {
            next[i] = if ps.is_empty() {
                g(x[i])
            } else {
                let coupled: f64 = ps.iter().map(|&j| g(x[j])).sum();
                (1.0 - epsilon) * g(x[i]) + epsilon / ps.len() as f64 * coupled
            };
        }
    }, Some(reflect), |rng, m| (0..m).map(|_| rng.random::<f64>()).collect())
}

pub fn simulate_linear_gaussian(cfg: &GdsConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let GdsModel::LinearGaussian { coupling, self_weight } = &cfg.model else {
        return Err(Error::param("model", "expected linear-gaussian"));
    };
    let parents: Vec<&[usize]> = (0..cfg.graph.vertex_count()).map(|v| cfg.graph.parents(v)).collect();
    run(cfg, |x, next| {
        for (i, ps) in parents.iter().enumerate() {
            next[i] = self_weight * x[i] + ps.iter().map(|&j| coupling[i][j] * x[j]).sum::<f64>();
        }
    }, None, |_, m| vec![0.0; m])
}

fn run(
    cfg: &GdsConfig,
    step: impl Fn(&[f64], &mut [f64]),
    clamp: Option<fn(f64) -> f64>,
    init: impl Fn(&mut ChaCha8Rng, usize) -> Vec<f64>,
) -> Result<SimOutput> {
    let m = cfg.graph.vertex_count();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = match &cfg.initial_state {
        Some(x0) => x0.clone(),
        None => init(&mut rng, m),
    };
    let process = noise(cfg.process_noise_std);
    let obs = noise(cfg.obs_noise_std);
    let mut states = vec![Vec::with_capacity(cfg.n); m];
    let mut observations = vec![Vec::with_capacity(cfg.n); m];
    let mut next = vec![0.0; m];
    let total = cfg.burn_in + cfg.n;
    for t in 0..total {
        if t > 0 {
            step(&x, &mut next);
            for i in 0..m {
                let mut v = next[i];
                if let Some(d) = &process {
                    v += d.sample(&mut rng);
                }
                if !v.is_finite() {
                    return Err(Error::Diverged { step: t, subsystem: i });
                }
                x[i] = clamp.map_or(v, |f| f(v));
            }
        }
        if t >= cfg.burn_in {
            for i in 0..m {
                states[i].push(x[i]);
                let y = match &obs {
                    Some(d) => x[i] + d.sample(&mut rng),
                    None => x[i],
                };
                observations[i].push(y);
            }
        }
    }
    Ok(SimOutput {
        observations: TimeSeriesSet::new(cfg.vertex_names(), observations)?,
        states,
        truth: cfg.graph.clone(),
        config_echo: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic(graph: Dag, epsilon: f64) -> GdsConfig {
        GdsConfig::new(graph, GdsModel::CoupledLogistic { r: 4.0, epsilon }, 200, 3)
    }

    #[test]
    fn logistic_orbit_from_half() {
        let mut cfg = logistic(Dag::empty(1), 0.3).with_burn_in(0);
        cfg.initial_state = Some(vec![0.5]);
        let out = simulate(&cfg).unwrap();
        assert_eq!(&out.states[0][..3], &[0.5, 1.0, 0.0]);
    }

    #[test]
    fn epsilon_bounds() {
        let chain = Dag::from_edges(2, &[(0, 1)]).unwrap();
        for eps in [1.0, 0.0, 1.5, f64::NAN] {
            let err = simulate(&logistic(chain.clone(), eps)).unwrap_err();
            assert!(err.to_string().contains("epsilon"), "{err}");
        }
    }

    #[test]
    fn noiseless_uncoupled_matches_scalar_map() {
        let cfg = logistic(Dag::empty(3), 0.4).with_burn_in(17);
        let out = simulate(&cfg).unwrap();
        for i in 0..3 {
            // rewind: the first recorded state came after 17 map steps
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let starts: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let mut z = starts[i];
            for _ in 0..17 {
                z = 4.0 * z * (1.0 - z);
            }
            for &s in &out.states[i] {
                assert_eq!(s, z);
                z = 4.0 * z * (1.0 - z);
            }
            assert_eq!(out.observations.series(i), out.states[i].as_slice());
        }
    }

    #[test]
    fn coupled_step_by_hand() {
        let chain = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let mut cfg = logistic(chain, 0.25).with_burn_in(0);
        cfg.initial_state = Some(vec![0.2, 0.7]);
        let out = simulate(&cfg).unwrap();
        let g = |z: f64| 4.0 * z * (1.0 - z);
        assert_eq!(out.states[0][1], g(0.2));
        assert!((out.states[1][1] - (0.75 * g(0.7) + 0.25 * g(0.2))).abs() < 1e-15);
    }

    #[test]
    fn states_stay_in_unit_interval_under_noise() {
        let chain = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let cfg = logistic(chain, 0.4).with_noise(0.05, 0.0);
        let out = simulate(&cfg).unwrap();
        assert!(out.states.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(out.observations.len(), 200);
    }

    #[test]
    fn deterministic() {
        let chain = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let cfg = logistic(chain, 0.4).with_noise(1e-3, 1e-3);
        let a = simulate(&cfg).unwrap();
        assert_eq!(a, simulate(&cfg).unwrap());
        let mut other = cfg.clone();
        other.seed += 1;
        assert_ne!(a.observations, simulate(&other).unwrap().observations);
    }

    #[test]
    fn reflection() {
        assert_eq!(reflect(-0.25), 0.25);
        assert_eq!(reflect(1.25), 0.75);
        assert_eq!(reflect(0.5), 0.5);
    }

    fn gaussian(graph: Dag, coupling: Vec<Vec<f64>>, self_weight: f64) -> GdsConfig {
        GdsConfig::new(graph, GdsModel::LinearGaussian { coupling, self_weight }, 10_000, 11).with_noise(1.0, 0.0)
    }

    #[test]
    fn white_noise_when_uncoupled() {
        let out = simulate(&gaussian(Dag::empty(2), vec![vec![0.0; 2]; 2], 0.0)).unwrap();
        for i in 0..2 {
            let x = out.observations.series(i);
            let n = x.len() as f64;
            let mean = x.iter().sum::<f64>() / n;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let lag1 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / n;
            assert!((lag1 / var).abs() < 0.05);
        }
    }

    #[test]
    fn nonstationary_rejected() {
        let g = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let err = simulate(&gaussian(g.clone(), vec![vec![0.0; 2], vec![0.5, 0.0]], 1.0)).unwrap_err();
        assert!(err.to_string().contains("nonstationary"));
        // weight on a missing edge
        let err = simulate(&gaussian(g, vec![vec![0.0, 0.3], vec![0.0, 0.0]], 0.5)).unwrap_err();
        assert!(err.to_string().contains("coupling"));
    }

    #[test]
    fn gaussian_stationary_variance() {
        // scalar AR(1): var = 1 / (1 - a^2)
        let out = simulate(&gaussian(Dag::empty(1), vec![vec![0.0]], 0.6)).unwrap();
        let x = out.observations.series(0);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 1.0 / 0.64).abs() < 0.1, "{var}");
    }

    #[test]
    fn config_roundtrips_through_json() {
        let g = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let cfg = gaussian(g, vec![vec![0.0; 2], vec![0.5, 0.0]], 0.9);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"self\":0.9"));
        let back: GdsConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let bad = text.replace("\"parents\":[[],[0]]", "\"parents\":[[1],[0]]");
        assert!(serde_json::from_str::<GdsConfig>(&bad).is_err());
    }
}
