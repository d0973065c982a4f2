//! Graph scores built from per-vertex local terms.
//!
//! Every score is a sum over vertices of a term that depends only on the
//! vertex and its parent set:
//!
//! | score | local term |
//! |-------|------------|
//! | TE  | `T(parents -> i)` |
//! | TEA | `2N·T·ln2 - Σ_j χ²_α(l_j)` |
//! | TEE | `T - q_α(surrogate T)` |
//! | IC  | `-N·H(Y_i' | own past, parent pasts) - f(N)·C_i` |
//!
//! Local terms are memoised in a [`LocalScoreCache`] shared by the search.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{conditional_entropy, EstimatorKind, TeProblem, Variable};
use crate::graph::{is_acyclic, Dag};
use crate::seed;
use crate::stats::{
    self, chi2_quantile, empirical_quantile, gaussian_degrees_of_freedom, te_degrees_of_freedom,
    Chi2Params, SurrogateConfig,
};
use crate::timeseries::EmbeddedView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum IcVariant {
    Aic,
    Bic,
    Ml,
}

impl IcVariant {
    /// Complexity weight: 1 for AIC, `ln(N)/2` for BIC, 0 for maximum likelihood.
    pub fn f_of_n(&self, n: usize) -> f64 {
        match self {
            IcVariant::Aic => 1.0,
            IcVariant::Bic => (n as f64).ln() / 2.0,
            IcVariant::Ml => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreKind {
    Te,
    Tea { alpha: f64 },
    Tee(SurrogateConfig),
    Ic(IcVariant),
}

impl ScoreKind {
    pub fn alpha(&self) -> Option<f64> {
        match self {
            ScoreKind::Tea { alpha } => Some(*alpha),
            ScoreKind::Tee(cfg) => Some(cfg.alpha),
            _ => None,
        }
    }

    /// Whether the score subtracts a significance penalty, making the empty
    /// graph a natural starting point.
    pub fn is_penalised(&self) -> bool {
        !matches!(self, ScoreKind::Te | ScoreKind::Ic(IcVariant::Ml))
    }

    fn key(&self) -> ScoreKey {
        match *self {
            ScoreKind::Te => ScoreKey::Te,
            ScoreKind::Tea { alpha } => ScoreKey::Tea(alpha.to_bits()),
            ScoreKind::Tee(c) => ScoreKey::Tee {
                alpha: c.alpha.to_bits(),
                count: c.count,
                method: c.method,
                seed: c.seed,
            },
            ScoreKind::Ic(v) => ScoreKey::Ic(v),
        }
    }
}

/// Score kind as recorded in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ScoreKindReport {
    #[serde(rename = "TE")]
    Te,
    #[serde(rename = "TEA")]
    Tea,
    #[serde(rename = "TEE")]
    Tee,
    #[serde(rename = "IC")]
    Ic { variant: IcVariant, f_of_n: f64 },
}

/// The three parts of one vertex's contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTerm {
    /// Collective transfer entropy from the parents, in bits.
    pub te: f64,
    pub penalty: f64,
    pub local: f64,
}

impl LocalTerm {
    const ZERO: LocalTerm = LocalTerm {
        te: 0.0,
        penalty: 0.0,
        local: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexScore {
    pub vertex: String,
    pub parents: Vec<String>,
    pub te: f64,
    pub penalty: f64,
    pub local: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub score_kind: ScoreKindReport,
    pub estimator: EstimatorKind,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub surrogates: Option<usize>,
    pub n_effective: usize,
    pub total: f64,
    pub per_vertex: Vec<VertexScore>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum ScoreKey {
    Te,
    Tea(u64),
    Tee {
        alpha: u64,
        count: usize,
        method: stats::SurrogateMethod,
        seed: u64,
    },
    Ic(IcVariant),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    vertex: usize,
    parents: Vec<usize>,
    score: ScoreKey,
    estimator: (u8, u64),
}

/// Memo of local terms keyed by everything that affects them. Safe for
/// concurrent use; two threads may compute the same key, and both then store
/// the same value.
#[derive(Debug, Default)]
pub struct LocalScoreCache {
    map: RwLock<HashMap<CacheKey, LocalTerm>>,
    computations: AtomicUsize,
    hits: AtomicUsize,
}

impl LocalScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of local terms computed from data.
    pub fn computations(&self) -> usize {
        self.computations.load(Ordering::Relaxed)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &CacheKey) -> Option<LocalTerm> {
        let hit = self.map.read().unwrap().get(key).copied();
        if hit.is_some() {
            self.hits.fetch_add(1, Ordering::Relaxed);
        }
        hit
    }

    fn insert(&self, key: CacheKey, term: LocalTerm) {
        self.computations.fetch_add(1, Ordering::Relaxed);
        self.map.write().unwrap().insert(key, term);
    }
}

/// Evaluates one score kind on one view.
pub struct Scorer<'v> {
    view: &'v EmbeddedView,
    estimator: EstimatorKind,
    kind: ScoreKind,
    cache: Arc<LocalScoreCache>,
}

impl<'v> Scorer<'v> {
    pub fn new(view: &'v EmbeddedView, estimator: EstimatorKind, kind: ScoreKind) -> Result<Self> {
        Self::with_cache(view, estimator, kind, Arc::new(LocalScoreCache::new()))
    }

    pub fn with_cache(
        view: &'v EmbeddedView,
        estimator: EstimatorKind,
        kind: ScoreKind,
        cache: Arc<LocalScoreCache>,
    ) -> Result<Self> {
        estimator.check_view(view)?;
        if view.rows() == 0 {
            return Err(Error::EmptyView);
        }
        match &kind {
            ScoreKind::Te => {}
            ScoreKind::Tea { alpha } => {
                stats::check_alpha(*alpha)?;
                if let EstimatorKind::BoxKernel { .. } = estimator {
                    return Err(Error::EstimatorMismatch(
                        "TEA needs a χ² null; its df decomposition is undefined for box-kernel".into(),
                    ));
                }
            }
            ScoreKind::Tee(cfg) => cfg.validate()?,
            ScoreKind::Ic(_) => {
                if estimator != EstimatorKind::DiscretePlugin {
                    return Err(Error::EstimatorMismatch(
                        "information criteria need a discrete parameter count".into(),
                    ));
                }
            }
        }
        Ok(Self {
            view,
            estimator,
            kind,
            cache,
        })
    }

    pub fn view(&self) -> &'v EmbeddedView {
        self.view
    }

    pub fn kind(&self) -> &ScoreKind {
        &self.kind
    }

    pub fn estimator(&self) -> EstimatorKind {
        self.estimator
    }

    pub fn cache(&self) -> &LocalScoreCache {
        &self.cache
    }

    /// Memoised local score of `vertex` with the given parents.
    pub fn local_score(&self, vertex: usize, parents: &[usize]) -> Result<f64> {
        Ok(self.local_term(vertex, parents)?.local)
    }

    /// Memoised local term; the parent order does not matter.
    pub fn local_term(&self, vertex: usize, parents: &[usize]) -> Result<LocalTerm> {
        let mut canonical = parents.to_vec();
        canonical.sort_unstable();
        let key = CacheKey {
            vertex,
            parents: canonical,
            score: self.kind.key(),
            estimator: self.estimator.cache_key(),
        };
        if let Some(term) = self.cache.get(&key) {
            return Ok(term);
        }
        let term = self.compute(vertex, &key.parents)?;
        self.cache.insert(key, term);
        Ok(term)
    }

    fn compute(&self, vertex: usize, parents: &[usize]) -> Result<LocalTerm> {
        let n = self.view.rows();
        if let ScoreKind::Ic(variant) = self.kind {
            return self.ic_term(vertex, parents, variant);
        }
        if parents.is_empty() {
            if vertex >= self.view.subsystems() {
                return Err(Error::param("vertex", format!("index {vertex} out of range")));
            }
            return Ok(LocalTerm::ZERO);
        }
        let problem = TeProblem::new(vertex, parents, self.view, self.estimator)?;
        let te = problem.value()?;
        match self.kind {
            ScoreKind::Te => Ok(LocalTerm {
                te,
                penalty: 0.0,
                local: te,
            }),
            ScoreKind::Tea { alpha } => {
                let penalty = self.tea_penalty(vertex, parents, alpha)?;
                Ok(LocalTerm {
                    te,
                    penalty,
                    local: tea_statistic(te, n) - penalty,
                })
            }
            ScoreKind::Tee(cfg) => {
                let seed = seed::mix_all(
                    cfg.seed,
                    std::iter::once(vertex as u64).chain(parents.iter().map(|&p| p as u64)),
                );
                let samples = stats::surrogates_for(&problem, &cfg.with_seed(seed))?;
                let penalty = empirical_quantile(&samples, cfg.alpha)?;
                Ok(LocalTerm {
                    te,
                    penalty,
                    local: te - penalty,
                })
            }
            ScoreKind::Ic(_) => unreachable!(),
        }
    }

    /// Parent order with the largest total χ² penalty: descending embedded
    /// alphabet size `r^κ`, ties by index.
    pub fn max_penalty_order(&self, parents: &[usize]) -> Vec<usize> {
        let mut order = parents.to_vec();
        let kappa = self.view.kappa();
        match self.view.alphabet() {
            Some(alpha) => order.sort_by(|&a, &b| {
                let sa = (alpha[a] as f64).powi(kappa[a] as i32);
                let sb = (alpha[b] as f64).powi(kappa[b] as i32);
                sb.total_cmp(&sa).then(a.cmp(&b))
            }),
            None => order.sort_by(|&a, &b| kappa[b].cmp(&kappa[a]).then(a.cmp(&b))),
        }
        order
    }

    /// `Σ_j χ²_α(l_j)` under the given parent order.
    pub fn tea_penalty_for_order(&self, vertex: usize, order: &[usize], alpha: f64) -> Result<f64> {
        let dof = match self.view.alphabet() {
            Some(alphabet) => te_degrees_of_freedom(vertex, order, self.view.kappa(), alphabet)?,
            None => gaussian_degrees_of_freedom(order, self.view.kappa()),
        };
        dof.per_source
            .iter()
            .map(|&df| Ok(chi2_quantile(Chi2Params::new(df, alpha)?)))
            .sum()
    }

    fn tea_penalty(&self, vertex: usize, parents: &[usize], alpha: f64) -> Result<f64> {
        let order = self.max_penalty_order(parents);
        self.tea_penalty_for_order(vertex, &order, alpha)
    }

    fn ic_term(&self, vertex: usize, parents: &[usize], variant: IcVariant) -> Result<LocalTerm> {
        let view = self.view;
        let n = view.rows();
        let mut cond = vec![Variable::History(vertex)];
        cond.extend(parents.iter().map(|&p| Variable::History(p)));
        let h = conditional_entropy(&[Variable::Target(vertex)], &cond, view, self.estimator)?.value;
        let te = if parents.is_empty() {
            0.0
        } else {
            TeProblem::new(vertex, parents, view, self.estimator)?.value()?
        };
        let alphabet = view.alphabet().expect("checked discrete");
        let kappa = view.kappa();
        let states = |i: usize| (alphabet[i] as f64).powi(kappa[i] as i32);
        let complexity = (alphabet[vertex] as f64 - 1.0)
            * states(vertex)
            * parents.iter().map(|&p| states(p)).product::<f64>();
        let penalty = variant.f_of_n(n) * complexity;
        Ok(LocalTerm {
            te,
            penalty,
            local: -(n as f64) * h - penalty,
        })
    }

    /// Scores a whole graph by summing local terms in vertex order.
    pub fn score(&self, graph: &Dag) -> Result<ScoreReport> {
        let m = self.view.subsystems();
        if graph.vertex_count() != m {
            return Err(Error::InvalidGraph(format!(
                "graph has {} vertices, data has {m}",
                graph.vertex_count()
            )));
        }
        if !is_acyclic(graph) {
            return Err(Error::InvalidGraph("graph contains a cycle".into()));
        }
        let terms = (0..m)
            .into_par_iter()
            .map(|v| self.local_term(v, graph.parents(v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.report(graph, &terms))
    }

    /// Sum of local scores, without building a report.
    pub fn total(&self, graph: &Dag) -> Result<f64> {
        let mut total = 0.0;
        for v in 0..graph.vertex_count() {
            total += self.local_term(v, graph.parents(v))?.local;
        }
        Ok(total)
    }

    pub(crate) fn report(&self, graph: &Dag, terms: &[LocalTerm]) -> ScoreReport {
        let names = self.view.names();
        let per_vertex: Vec<VertexScore> = terms
            .iter()
            .enumerate()
            .map(|(v, t)| VertexScore {
                vertex: names[v].clone(),
                parents: graph.parents(v).iter().map(|&p| names[p].clone()).collect(),
                te: t.te,
                penalty: t.penalty,
                local: t.local,
            })
            .collect();
        let total = terms.iter().map(|t| t.local).sum();
        let n = self.view.rows();
        let (score_kind, seed, surrogates, notes) = match self.kind {
            ScoreKind::Te => (ScoreKindReport::Te, None, None, vec![]),
            ScoreKind::Tea { .. } => (
                ScoreKindReport::Tea,
                None,
                None,
                vec!["statistic is 2·N·ln2·TE (TE converted to nats)".to_string()],
            ),
            ScoreKind::Tee(cfg) => (
                ScoreKindReport::Tee,
                Some(cfg.seed),
                Some(cfg.count),
                cfg.warning().into_iter().collect(),
            ),
            ScoreKind::Ic(variant) => (
                ScoreKindReport::Ic {
                    variant,
                    f_of_n: variant.f_of_n(n),
                },
                None,
                None,
                vec![
                    "log-likelihood omits the graph-independent latent-state entropy term"
                        .to_string(),
                ],
            ),
        };
        ScoreReport {
            score_kind,
            estimator: self.estimator,
            alpha: self.kind.alpha(),
            seed,
            surrogates,
            n_effective: n,
            total,
            per_vertex,
            notes,
        }
    }
}

/// `2N·T` with `T` converted from bits to nats, the likelihood-ratio
/// statistic that is asymptotically χ² under independence.
pub fn tea_statistic(te_bits: f64, n: usize) -> f64 {
    2.0 * n as f64 * te_bits * std::f64::consts::LN_2
}

pub fn score_te(graph: &Dag, view: &EmbeddedView, kind: EstimatorKind) -> Result<ScoreReport> {
    Scorer::new(view, kind, ScoreKind::Te)?.score(graph)
}

/// TEA on discrete data.
pub fn score_tea(graph: &Dag, view: &EmbeddedView, alpha: f64) -> Result<ScoreReport> {
    Scorer::new(view, EstimatorKind::DiscretePlugin, ScoreKind::Tea { alpha })?.score(graph)
}

pub fn score_tee(
    graph: &Dag,
    view: &EmbeddedView,
    kind: EstimatorKind,
    cfg: &SurrogateConfig,
) -> Result<ScoreReport> {
    Scorer::new(view, kind, ScoreKind::Tee(*cfg))?.score(graph)
}

pub fn score_ic(graph: &Dag, view: &EmbeddedView, variant: IcVariant) -> Result<ScoreReport> {
    Scorer::new(view, EstimatorKind::DiscretePlugin, ScoreKind::Ic(variant))?.score(graph)
}
