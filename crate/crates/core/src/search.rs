//! Search for the best-scoring DAG.
//!
//! Exhaustive search scores every labelled DAG (up to six vertices). Greedy
//! hill climbing starts from the empty graph, plus optional random acyclic
//! starts, and applies the single edge addition, deletion or reversal with
//! the largest positive score change until none improves. Only the vertices
//! whose parent sets change are rescored.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{is_acyclic, Dag};
use crate::scores::{LocalTerm, ScoreKind, ScoreReport, Scorer};

pub const MAX_EXHAUSTIVE_VERTICES: usize = 6;

/// Default parent cap for the unpenalised TE score.
pub const DEFAULT_TE_MAX_PARENTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMethod {
    Exhaustive,
    Greedy,
}

/// How equal-scoring graphs are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Prefer the graph whose sorted `(from, to)` edge list is
    /// lexicographically smallest.
    #[default]
    LexicographicSmallestEdgeSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub method: SearchMethod,
    /// `None` uses the default for the score: unlimited for penalised scores,
    /// [`DEFAULT_TE_MAX_PARENTS`] otherwise.
    pub max_parents: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub tie_break: TieBreak,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            method: SearchMethod::Exhaustive,
            max_parents: None,
            restarts: 0,
            seed: 0,
            tie_break: TieBreak::default(),
        }
    }
}

impl SearchConfig {
    pub fn effective_max_parents(&self, kind: &ScoreKind, m: usize) -> usize {
        let cap = self.max_parents.unwrap_or(if kind.is_penalised() {
            usize::MAX
        } else {
            DEFAULT_TE_MAX_PARENTS
        });
        cap.min(m.saturating_sub(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Move {
    Add { from: usize, to: usize },
    Delete { from: usize, to: usize },
    Reverse { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    #[serde(flatten)]
    pub step: Move,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Dag,
    pub best_report: ScoreReport,
    /// Number of graphs scored.
    pub visited: usize,
    pub trace: Vec<TraceStep>,
}

type Edges = Vec<(usize, usize)>;

/// Relative tolerance under which two totals count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

fn compare_candidates(a: f64, a_edges: &[(usize, usize)], b: f64, b_edges: &[(usize, usize)]) -> Ordering {
    let tol = TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0);
    if a > b + tol {
        Ordering::Greater
    } else if b > a + tol {
        Ordering::Less
    } else {
        // smaller edge list wins the tie
        b_edges.cmp(a_edges)
    }
}

/// Every labelled DAG on `m <= 6` vertices, each exactly once.
///
/// Graphs are generated by their source layering: layer 0 holds the vertices
/// without parents, and every vertex of layer `k > 0` has at least one parent
/// in layer `k-1` and any further parents in earlier layers.
pub fn enumerate_dags(m: usize) -> Result<impl Iterator<Item = Dag>> {
    let masks = dag_masks(m)?;
    Ok((0..masks.len() / m.max(1))
        .map(move |i| Dag::from_masks(&masks[i * m..(i + 1) * m]))
        .chain((m == 0).then(|| Dag::empty(0))))
}

/// Parent bitmasks of all DAGs on `m` vertices, `m` masks per graph.
pub(crate) fn dag_masks(m: usize) -> Result<Vec<u64>> {
    if m > MAX_EXHAUSTIVE_VERTICES {
        return Err(Error::TooManyVertices(m));
    }
    let mut out = Vec::new();
    if m == 0 {
        return Ok(out);
    }
    let mut current = vec![0u64; m];
    layers(m, (1u64 << m) - 1, 0, 0, &mut current, &mut out);
    Ok(out)
}

fn layers(m: usize, remaining: u64, prev: u64, earlier: u64, current: &mut [u64], out: &mut Vec<u64>) {
    if remaining == 0 {
        out.extend_from_slice(current);
        return;
    }
    // iterate non-empty subsets of `remaining`
    let mut layer = remaining;
    while layer != 0 {
        let vertices: Vec<usize> = (0..m).filter(|&v| layer >> v & 1 == 1).collect();
        assign(&vertices, 0, prev, earlier & !prev, current, &mut |cur| {
            layers(m, remaining & !layer, layer, earlier | layer, cur, out)
        });
        layer = (layer - 1) & remaining;
    }
}

fn assign(
    vertices: &[usize],
    k: usize,
    prev: u64,
    older: u64,
    current: &mut [u64],
    next: &mut dyn FnMut(&mut [u64]),
) {
    if k == vertices.len() {
        next(current);
        return;
    }
    let v = vertices[k];
    if prev == 0 {
        current[v] = 0;
        assign(vertices, k + 1, prev, older, current, next);
        return;
    }
    let mut a = prev;
    while a != 0 {
        let mut b = older;
        loop {
            current[v] = a | b;
            assign(vertices, k + 1, prev, older, current, next);
            if b == 0 {
                break;
            }
            b = (b - 1) & older;
        }
        a = (a - 1) & prev;
    }
    current[v] = 0;
}

fn parents_of(mask: u64, m: usize) -> Vec<usize> {
    (0..m).filter(|&p| mask >> p & 1 == 1).collect()
}

/// Scores every DAG and returns the best under the tie-break rule.
pub fn exhaustive_search(scorer: &Scorer<'_>, cfg: &SearchConfig) -> Result<SearchResult> {
    let m = scorer.view().subsystems();
    if m > MAX_EXHAUSTIVE_VERTICES {
        return Err(Error::TooManyVertices(m));
    }
    let cap = cfg.effective_max_parents(scorer.kind(), m);
    // local[v][mask] over every admissible parent set
    let jobs: Vec<(usize, u64)> = (0..m)
        .flat_map(|v| {
            (0u64..1 << m).filter(move |&mask| {
                mask >> v & 1 == 0 && (mask.count_ones() as usize) <= cap
            }).map(move |mask| (v, mask))
        })
        .collect();
    let terms = jobs
        .par_iter()
        .map(|&(v, mask)| scorer.local_term(v, &parents_of(mask, m)).map(|t| (v, mask, t)))
        .collect::<Result<Vec<_>>>()?;
    let mut table = vec![vec![f64::NAN; 1 << m]; m];
    for (v, mask, t) in terms {
        table[v][mask as usize] = t.local;
    }

    let masks = dag_masks(m)?;
    // (total, parent masks, edge list)
    let mut best: Option<(f64, Vec<u64>, Edges)> = None;
    let mut visited = 0;
    for graph in masks.chunks(m) {
        if graph.iter().any(|g| g.count_ones() as usize > cap) {
            continue;
        }
        visited += 1;
        let mut total = 0.0;
        for (v, &mask) in graph.iter().enumerate() {
            total += table[v][mask as usize];
        }
        let replace = match &best {
            None => true,
            Some((bt, _, be)) => {
                let edges = mask_edges(graph);
                compare_candidates(total, &edges, *bt, be) == Ordering::Greater
            }
        };
        if replace {
            best = Some((total, graph.to_vec(), mask_edges(graph)));
        }
    }
    let (_, masks, _) = best.expect("at least the empty graph");
    let dag = Dag::from_masks(&masks);
    let best_report = scorer.score(&dag)?;
    Ok(SearchResult {
        best: dag,
        best_report,
        visited,
        trace: Vec::new(),
    })
}

fn mask_edges(masks: &[u64]) -> Vec<(usize, usize)> {
    let m = masks.len();
    let mut e: Vec<(usize, usize)> = masks
        .iter()
        .enumerate()
        .flat_map(|(to, &mask)| parents_of(mask, m).into_iter().map(move |from| (from, to)))
        .collect();
    e.sort_unstable();
    e
}

/// A graph with its cached per-vertex local scores and running total.
pub struct IncrementalScore<'s, 'v> {
    scorer: &'s Scorer<'v>,
    graph: Dag,
    terms: Vec<LocalTerm>,
    total: f64,
    max_parents: usize,
}

impl<'s, 'v> IncrementalScore<'s, 'v> {
    pub fn new(scorer: &'s Scorer<'v>, graph: Dag, max_parents: usize) -> Result<Self> {
        if graph.vertex_count() != scorer.view().subsystems() || !is_acyclic(&graph) {
            return Err(Error::InvalidGraph("start graph does not fit the data".into()));
        }
        let terms = (0..graph.vertex_count())
            .map(|v| scorer.local_term(v, graph.parents(v)))
            .collect::<Result<Vec<_>>>()?;
        let total = terms.iter().map(|t| t.local).sum();
        Ok(Self {
            scorer,
            graph,
            terms,
            total,
            max_parents,
        })
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Every legal single-edge move from the current graph, in a fixed order.
    pub fn moves(&self) -> Vec<Move> {
        let g = &self.graph;
        let m = g.vertex_count();
        let mut out = Vec::new();
        for from in 0..m {
            for to in 0..m {
                if from == to {
                    continue;
                }
                if g.has_edge(from, to) {
                    out.push(Move::Delete { from, to });
                    if g.parents(from).len() < self.max_parents {
                        let mut h = g.clone();
                        h.remove_edge(from, to);
                        if !h.creates_cycle(to, from) {
                            out.push(Move::Reverse { from, to });
                        }
                    }
                } else if !g.has_edge(to, from)
                    && g.parents(to).len() < self.max_parents
                    && !g.creates_cycle(from, to)
                {
                    out.push(Move::Add { from, to });
                }
            }
        }
        out
    }

    fn with_parent(&self, v: usize, add: Option<usize>, remove: Option<usize>) -> Vec<usize> {
        let mut ps: Vec<usize> = self
            .graph
            .parents(v)
            .iter()
            .copied()
            .filter(|&p| Some(p) != remove)
            .collect();
        if let Some(a) = add {
            ps.push(a);
        }
        ps
    }

    /// New local terms for the vertices a move touches.
    fn changed_terms(&self, mv: Move) -> Result<Vec<(usize, LocalTerm)>> {
        let s = self.scorer;
        Ok(match mv {
            Move::Add { from, to } => {
                vec![(to, s.local_term(to, &self.with_parent(to, Some(from), None))?)]
            }
            Move::Delete { from, to } => {
                vec![(to, s.local_term(to, &self.with_parent(to, None, Some(from)))?)]
            }
            Move::Reverse { from, to } => vec![
                (to, s.local_term(to, &self.with_parent(to, None, Some(from)))?),
                (from, s.local_term(from, &self.with_parent(from, Some(to), None))?),
            ],
        })
    }

    /// Score change of a move.
    pub fn delta(&self, mv: Move) -> Result<f64> {
        Ok(self
            .changed_terms(mv)?
            .iter()
            .map(|(v, t)| t.local - self.terms[*v].local)
            .sum())
    }

    pub fn resulting_graph(&self, mv: Move) -> Dag {
        let mut g = self.graph.clone();
        match mv {
            Move::Add { from, to } => {
                let _ = g.add_edge(from, to);
            }
            Move::Delete { from, to } => {
                g.remove_edge(from, to);
            }
            Move::Reverse { from, to } => {
                g.remove_edge(from, to);
                let _ = g.add_edge(to, from);
            }
        }
        g
    }

    /// Applies a legal move and returns its delta.
    pub fn apply(&mut self, mv: Move) -> Result<f64> {
        if !self.moves().contains(&mv) {
            return Err(Error::InvalidGraph(format!("illegal move {mv:?}")));
        }
        let changed = self.changed_terms(mv)?;
        let mut delta = 0.0;
        for (v, t) in changed {
            delta += t.local - self.terms[v].local;
            self.terms[v] = t;
        }
        self.graph = self.resulting_graph(mv);
        self.total += delta;
        Ok(delta)
    }

    pub fn report(&self) -> ScoreReport {
        self.scorer.report(&self.graph, &self.terms)
    }
}

/// Greedy hill climbing from the empty graph and `cfg.restarts` random DAGs.
pub fn greedy_hill_climb(scorer: &Scorer<'_>, cfg: &SearchConfig) -> Result<SearchResult> {
    let m = scorer.view().subsystems();
    let cap = cfg.effective_max_parents(scorer.kind(), m);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = vec![Dag::empty(m)];
    for _ in 0..cfg.restarts {
        starts.push(random_dag(m, cap, &mut rng));
    }

    let mut best: Option<(IncrementalScore<'_, '_>, Vec<TraceStep>)> = None;
    let mut visited = 0;
    for start in starts {
        let mut state = IncrementalScore::new(scorer, start, cap)?;
        visited += 1;
        let mut trace = Vec::new();
        loop {
            let moves = state.moves();
            visited += moves.len();
            let deltas = moves
                .par_iter()
                .map(|&mv| state.delta(mv))
                .collect::<Result<Vec<_>>>()?;
            let threshold = TIE_TOLERANCE * state.total().abs().max(1.0);
            let mut choice: Option<(Move, f64, Edges)> = None;
            for (&mv, &d) in moves.iter().zip(&deltas) {
                if d <= threshold {
                    continue;
                }
                let edges = state.resulting_graph(mv).edges();
                let better = match &choice {
                    None => true,
                    Some((_, bd, be)) => compare_candidates(d, &edges, *bd, be) == Ordering::Greater,
                };
                if better {
                    choice = Some((mv, d, edges));
                }
            }
            let Some((mv, _, _)) = choice else { break };
            let delta = state.apply(mv)?;
            trace.push(TraceStep { step: mv, delta });
        }
        let replace = match &best {
            None => true,
            Some((b, _)) => {
                compare_candidates(state.total(), &state.graph().edges(), b.total(), &b.graph().edges())
                    == Ordering::Greater
            }
        };
        if replace {
            best = Some((state, trace));
        }
    }
    let (state, trace) = best.expect("at least one start");
    Ok(SearchResult {
        best: state.graph().clone(),
        best_report: state.report(),
        visited,
        trace,
    })
}

/// Random DAG: random vertex order, each forward pair kept with probability ½.
fn random_dag(m: usize, max_parents: usize, rng: &mut ChaCha8Rng) -> Dag {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    let mut g = Dag::empty(m);
    for j in 0..m {
        for i in 0..j {
            let (from, to) = (order[i], order[j]);
            if g.parents(to).len() < max_parents && rng.random_bool(0.5) {
                g.add_edge(from, to).expect("forward edges keep the order acyclic");
            }
        }
    }
    g
}

pub fn search(scorer: &Scorer<'_>, cfg: &SearchConfig) -> Result<SearchResult> {
    match cfg.method {
        SearchMethod::Exhaustive => exhaustive_search(scorer, cfg),
        SearchMethod::Greedy => greedy_hill_climb(scorer, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;
    use crate::scores::IcVariant;
    use crate::timeseries::{delay_embed, DiscretizedSeries, EmbeddedView, EmbeddingSpec};
    use std::collections::HashSet;

    /// Labelled DAG counts via the inclusion–exclusion recurrence
    /// `a(n) = Σ_k (-1)^{k+1} C(n,k) 2^{k(n-k)} a(n-k)`.
    fn dag_count(n: usize) -> i64 {
        let mut a = vec![1i64];
        for size in 1..=n {
            let mut total = 0i64;
            let mut binom = 1i64;
            for k in 1..=size {
                binom = binom * (size - k + 1) as i64 / k as i64;
                let sign = if k % 2 == 1 { 1 } else { -1 };
                total += sign * binom * (1i64 << (k * (size - k))) * a[size - k];
            }
            a.push(total);
        }
        a[n]
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_dags(1).unwrap().count(), 1);
        assert_eq!(enumerate_dags(2).unwrap().count(), 3);
        assert_eq!(enumerate_dags(3).unwrap().count(), 25);
        for m in 1..=5 {
            assert_eq!(enumerate_dags(m).unwrap().count() as i64, dag_count(m));
        }
        assert!(enumerate_dags(7).is_err());
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for m in 1..=4 {
            let pairs: Vec<(usize, usize)> = (0..m)
                .flat_map(|a| (0..m).filter(move |&b| b != a).map(move |b| (a, b)))
                .collect();
            let mut brute = HashSet::new();
            for bits in 0u32..1 << pairs.len() {
                let edges: Vec<_> = pairs.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, &e)| e).collect();
                if let Ok(g) = Dag::from_edges(m, &edges) {
                    brute.insert(g);
                }
            }
            let listed: Vec<Dag> = enumerate_dags(m).unwrap().collect();
            let unique: HashSet<Dag> = listed.iter().cloned().collect();
            assert_eq!(unique.len(), listed.len(), "duplicates for m={m}");
            assert_eq!(unique, brute);
        }
    }

    fn chain_view(seed: u64, n: usize) -> EmbeddedView {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = vec![vec![0u32; n]; 3];
        for t in 0..n {
            s[0][t] = rng.random_range(0..2);
            if t > 0 {
                for v in 1..3 {
                    s[v][t] = s[v - 1][t - 1] ^ rng.random_bool(0.1) as u32;
                }
            }
        }
        let d = DiscretizedSeries::from_symbols(vec!["a".into(), "b".into(), "c".into()], s, vec![2; 3]).unwrap();
        delay_embed(&d, &EmbeddingSpec::uniform(3, 1, 1).unwrap(), &[]).unwrap()
    }

    fn noise_view(seed: u64, m: usize, n: usize) -> EmbeddedView {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<Vec<u32>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(0..2)).collect()).collect();
        let names = (0..m).map(|i| format!("x{i}")).collect();
        let d = DiscretizedSeries::from_symbols(names, s, vec![2; m]).unwrap();
        delay_embed(&d, &EmbeddingSpec::uniform(m, 1, 1).unwrap(), &[]).unwrap()
    }

    #[test]
    fn exhaustive_recovers_binary_chain() {
        let view = chain_view(1, 3000);
        let scorer = Scorer::new(&view, EstimatorKind::DiscretePlugin, ScoreKind::Tea { alpha: 0.95 }).unwrap();
        let r = exhaustive_search(&scorer, &SearchConfig::default()).unwrap();
        assert_eq!(r.best.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(r.visited, 25);
        let g = greedy_hill_climb(&scorer, &SearchConfig { method: SearchMethod::Greedy, ..Default::default() }).unwrap();
        assert!(g.best_report.total >= r.best_report.total - 1e-9 || g.best_report.total >= 0.95 * r.best_report.total);
    }

    #[test]
    fn greedy_on_noise_returns_empty() {
        let view = noise_view(2, 3, 2000);
        let scorer = Scorer::new(&view, EstimatorKind::DiscretePlugin, ScoreKind::Tea { alpha: 0.95 }).unwrap();
        let cfg = SearchConfig { method: SearchMethod::Greedy, ..Default::default() };
        let r = greedy_hill_climb(&scorer, &cfg).unwrap();
        assert_eq!(r.best.edge_count(), 0);
    }

    #[test]
    fn raw_te_gives_complete_graph() {
        let view = noise_view(3, 3, 500);
        let scorer = Scorer::new(&view, EstimatorKind::DiscretePlugin, ScoreKind::Te).unwrap();
        let cfg = SearchConfig { method: SearchMethod::Greedy, ..Default::default() };
        assert!(greedy_hill_climb(&scorer, &cfg).unwrap().best.is_complete());
        assert!(exhaustive_search(&scorer, &SearchConfig::default()).unwrap().best.is_complete());
    }

    #[test]
    fn greedy_result_is_local_optimum_and_deterministic() {
        let view = chain_view(4, 1500);
        let scorer = Scorer::new(&view, EstimatorKind::DiscretePlugin, ScoreKind::Ic(IcVariant::Bic)).unwrap();
        let cfg = SearchConfig { method: SearchMethod::Greedy, restarts: 3, seed: 9, ..Default::default() };
        let r = greedy_hill_climb(&scorer, &cfg).unwrap();
        let state = IncrementalScore::new(&scorer, r.best.clone(), 2).unwrap();
        for mv in state.moves() {
            assert!(state.delta(mv).unwrap() <= 1e-9);
        }
        assert_eq!(greedy_hill_climb(&scorer, &cfg).unwrap(), r);
        assert!(r.trace.iter().all(|s| s.delta > 0.0));
    }

    #[test]
    fn incremental_totals_track_recomputation() {
        let view = chain_view(5, 800);
        let scorer = Scorer::new(&view, EstimatorKind::DiscretePlugin, ScoreKind::Tea { alpha: 0.9 }).unwrap();
        let mut state = IncrementalScore::new(&scorer, Dag::empty(3), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let moves = state.moves();
            let mv = moves[rng.random_range(0..moves.len())];
            state.apply(mv).unwrap();
            assert!(is_acyclic(state.graph()));
            let full = scorer.score(state.graph()).unwrap().total;
            assert!((state.total() - full).abs() < 1e-9);
        }
    }

    #[test]
    fn max_parents_is_respected() {
        let view = noise_view(7, 4, 300);
        let scorer = Scorer::new(&view, EstimatorKind::DiscretePlugin, ScoreKind::Te).unwrap();
        let cfg = SearchConfig { max_parents: Some(1), ..Default::default() };
        let r = exhaustive_search(&scorer, &cfg).unwrap();
        assert!((0..4).all(|v| r.best.parents(v).len() <= 1));
        let cfg = SearchConfig { method: SearchMethod::Greedy, max_parents: Some(1), restarts: 2, ..Default::default() };
        let r = greedy_hill_climb(&scorer, &cfg).unwrap();
        assert!((0..4).all(|v| r.best.parents(v).len() <= 1));
    }

    #[test]
    fn tie_break_prefers_smaller_edge_list() {
        assert_eq!(compare_candidates(1.0, &[(0, 1)], 1.0, &[(1, 0)]), Ordering::Greater);
        assert_eq!(compare_candidates(1.0, &[], 1.0, &[(0, 1)]), Ordering::Greater);
        assert_eq!(compare_candidates(2.0, &[(1, 0)], 1.0, &[(0, 1)]), Ordering::Greater);
    }
}
