//! Conditional entropy, collective transfer entropy, stochastic interaction
//! and the KL divergence of a candidate graph, all in bits.
//!
//! Three density models are available through [`EstimatorKind`]:
//!
//! - `DiscretePlugin`: raw relative frequencies of symbol tuples, no bias
//!   correction;
//! - `LinearGaussian`: Gaussian conditional entropies from the sample
//!   covariance (N-1 normalisation) via its Schur complement;
//! - `BoxKernel`: hard-cutoff kernel density estimates; each row counts the
//!   rows within `width` on every axis, itself included.
//!
//! The KL divergence of a graph decomposes into stochastic interaction minus
//! the per-vertex collective transfer entropies:
//!
//! ```text
//! KL(G) = S_Y - Σ_i T(parents(i) -> i)
//! T(Y -> X) = H(X' | X_past) - H(X' | X_past, Y_past)
//! S_Y = Σ_i H(Y_i' | Y_i past) - H(Y' | all pasts)
//! ```

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::timeseries::EmbeddedView;

/// Largest tolerated condition number of a correlation matrix.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorKind {
    DiscretePlugin,
    LinearGaussian,
    BoxKernel { width: f64 },
}

impl EstimatorKind {
    pub fn validate(&self) -> Result<()> {
        if let EstimatorKind::BoxKernel { width } = *self {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::param("width", format!("kernel width must be > 0, got {width}")));
            }
        }
        Ok(())
    }

    /// Checks that the estimator suits the view's data type.
    pub fn check_view(&self, view: &EmbeddedView) -> Result<()> {
        self.validate()?;
        match (self, view.is_discrete()) {
            (EstimatorKind::DiscretePlugin, false) => Err(Error::EstimatorMismatch(
                "discrete-plugin needs discretised data".into(),
            )),
            (EstimatorKind::LinearGaussian | EstimatorKind::BoxKernel { .. }, true) => {
                Err(Error::EstimatorMismatch(format!(
                    "{self} needs real-valued data, got discretised symbols"
                )))
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn cache_key(&self) -> (u8, u64) {
        match *self {
            EstimatorKind::DiscretePlugin => (0, 0),
            EstimatorKind::LinearGaussian => (1, 0),
            EstimatorKind::BoxKernel { width } => (2, width.to_bits()),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::DiscretePlugin => write!(f, "discrete-plugin"),
            EstimatorKind::LinearGaussian => write!(f, "linear-gaussian"),
            EstimatorKind::BoxKernel { width } => write!(f, "box-kernel(width={width})"),
        }
    }
}

/// A column group of an [`EmbeddedView`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variable {
    /// Next value `y^i_{n+1}` of subsystem `i`.
    Target(usize),
    /// Full lag vector of subsystem `i`.
    History(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyResult {
    /// Bits.
    pub value: f64,
    pub n_effective: usize,
    pub kind: EstimatorKind,
}

fn columns<'v>(view: &'v EmbeddedView, vars: &[Variable]) -> Result<Vec<&'v [f64]>> {
    let m = view.subsystems();
    let mut out = Vec::new();
    for &v in vars {
        match v {
            Variable::Target(i) if i < m => out.push(view.target(i)),
            Variable::History(i) if i < m => {
                out.extend(view.history(i).iter().map(Vec::as_slice))
            }
            Variable::Target(i) | Variable::History(i) => {
                return Err(Error::param(
                    "subsystem",
                    format!("index {i} out of range for {m} subsystems"),
                ))
            }
        }
    }
    Ok(out)
}

/// `H(Z | W)` for the selected view columns.
pub fn conditional_entropy(
    target: &[Variable],
    conditioners: &[Variable],
    view: &EmbeddedView,
    kind: EstimatorKind,
) -> Result<EntropyResult> {
    kind.check_view(view)?;
    if view.rows() == 0 {
        return Err(Error::EmptyView);
    }
    if target.is_empty() {
        return Err(Error::param("target", "at least one target variable is required"));
    }
    let z = columns(view, target)?;
    let w = columns(view, conditioners)?;
    Ok(EntropyResult {
        value: cond_entropy_cols(kind, &z, &w)?,
        n_effective: view.rows(),
        kind,
    })
}

pub(crate) fn cond_entropy_cols(kind: EstimatorKind, z: &[&[f64]], w: &[&[f64]]) -> Result<f64> {
    let n = z.first().map_or(0, |c| c.len());
    if n == 0 {
        return Err(Error::EmptyView);
    }
    match kind {
        EstimatorKind::DiscretePlugin => {
            let zc = Codes::from_columns(z, n);
            let wc = Codes::from_columns(w, n);
            Ok(discrete_cond_entropy(&zc.values, &wc.values))
        }
        EstimatorKind::LinearGaussian => gaussian_cond_entropy(z, w),
        EstimatorKind::BoxKernel { width } => Ok(box_cond_entropy(z, w, width)),
    }
}

/// Collective transfer entropy from `sources` into `dest`, in bits.
///
/// Both conditional entropies use the same estimator and the same rows. An
/// empty source set gives exactly 0.
pub fn collective_transfer_entropy(
    dest: usize,
    sources: &[usize],
    view: &EmbeddedView,
    kind: EstimatorKind,
) -> Result<f64> {
    if sources.is_empty() {
        check_indices(dest, sources, view)?;
        return Ok(0.0);
    }
    TeProblem::new(dest, sources, view, kind)?.value()
}

fn check_indices(dest: usize, sources: &[usize], view: &EmbeddedView) -> Result<()> {
    let m = view.subsystems();
    if dest >= m {
        return Err(Error::param("dest", format!("index {dest} out of range")));
    }
    for (k, &s) in sources.iter().enumerate() {
        if s >= m {
            return Err(Error::param("sources", format!("index {s} out of range")));
        }
        if s == dest {
            return Err(Error::param("sources", "destination cannot be its own source"));
        }
        if sources[..k].contains(&s) {
            return Err(Error::param("sources", format!("duplicate source {s}")));
        }
    }
    Ok(())
}

/// Excess of per-subsystem self-prediction uncertainty over the joint
/// next-step uncertainty given every history.
pub fn stochastic_interaction(view: &EmbeddedView, kind: EstimatorKind) -> Result<f64> {
    kind.check_view(view)?;
    let m = view.subsystems();
    if view.rows() == 0 {
        return Err(Error::EmptyView);
    }
    if m == 1 {
        return Ok(0.0);
    }
    let all_targets: Vec<Variable> = (0..m).map(Variable::Target).collect();
    let all_histories: Vec<Variable> = (0..m).map(Variable::History).collect();
    let joint = conditional_entropy(&all_targets, &all_histories, view, kind)?.value;
    let mut own = 0.0;
    for i in 0..m {
        own += conditional_entropy(&[Variable::Target(i)], &[Variable::History(i)], view, kind)?
            .value;
    }
    Ok(own - joint)
}

/// `S_Y - Σ_i T(parents(i) -> i)`.
pub fn kl_divergence(graph: &Dag, view: &EmbeddedView, kind: EstimatorKind) -> Result<f64> {
    check_graph(graph, view)?;
    let mut kl = stochastic_interaction(view, kind)?;
    for v in 0..graph.vertex_count() {
        kl -= collective_transfer_entropy(v, graph.parents(v), view, kind)?;
    }
    Ok(kl)
}

fn check_graph(graph: &Dag, view: &EmbeddedView) -> Result<()> {
    if graph.vertex_count() != view.subsystems() {
        return Err(Error::InvalidGraph(format!(
            "graph has {} vertices, view has {} subsystems",
            graph.vertex_count(),
            view.subsystems()
        )));
    }
    Ok(())
}

/// Plug-in KL divergence between the empirical next-step distribution and
/// the graph-factorised one, summed row by row:
///
/// `(1/n) Σ_t log2 [ p(y'_t | h_t) / Π_i p(y^i'_t | own_t, parents_t) ]`.
///
/// Independent of the entropy decomposition used by [`kl_divergence`].
pub fn kl_divergence_direct(graph: &Dag, view: &EmbeddedView) -> Result<f64> {
    EstimatorKind::DiscretePlugin.check_view(view)?;
    check_graph(graph, view)?;
    let n = view.rows();
    if n == 0 {
        return Err(Error::EmptyView);
    }
    let m = view.subsystems();
    let count_ratio = |num: &[&[f64]], den: &[&[f64]]| -> Vec<f64> {
        let mut all: Vec<&[f64]> = num.to_vec();
        all.extend_from_slice(den);
        let joint = Codes::from_columns(&all, n).values;
        let cond = Codes::from_columns(den, n).values;
        let mut cj: HashMap<u64, u32> = HashMap::new();
        let mut cc: HashMap<u64, u32> = HashMap::new();
        for t in 0..n {
            *cj.entry(joint[t]).or_default() += 1;
            *cc.entry(cond[t]).or_default() += 1;
        }
        (0..n)
            .map(|t| (f64::from(cj[&joint[t]]) / f64::from(cc[&cond[t]])).log2())
            .collect()
    };
    let targets: Vec<&[f64]> = (0..m).map(|i| view.target(i)).collect();
    let histories: Vec<&[f64]> = (0..m)
        .flat_map(|i| view.history(i).iter().map(Vec::as_slice))
        .collect();
    let mut per_row = count_ratio(&targets, &histories);
    for v in 0..m {
        let mut cond: Vec<&[f64]> = view.history(v).iter().map(Vec::as_slice).collect();
        for &p in graph.parents(v) {
            cond.extend(view.history(p).iter().map(Vec::as_slice));
        }
        let local = count_ratio(&[view.target(v)], &cond);
        for (acc, l) in per_row.iter_mut().zip(local) {
            *acc -= l;
        }
    }
    Ok(per_row.iter().sum::<f64>() / n as f64)
}

/// Precomputed pieces of one `T(sources -> dest)` evaluation, reused when the
/// source rows are resampled for surrogates.
pub(crate) struct TeProblem<'v> {
    kind: EstimatorKind,
    target: &'v [f64],
    dest_hist: Vec<&'v [f64]>,
    sources: Vec<&'v [f64]>,
    /// `H(X' | X_past)`.
    base: f64,
    discrete: Option<DiscreteTe>,
}

struct DiscreteTe {
    target: Vec<u64>,
    dest: Codes,
    source: Codes,
}

impl<'v> TeProblem<'v> {
    pub(crate) fn new(
        dest: usize,
        sources: &[usize],
        view: &'v EmbeddedView,
        kind: EstimatorKind,
    ) -> Result<Self> {
        kind.check_view(view)?;
        check_indices(dest, sources, view)?;
        if view.rows() == 0 {
            return Err(Error::EmptyView);
        }
        let n = view.rows();
        let target = view.target(dest);
        let dest_hist: Vec<&[f64]> = view.history(dest).iter().map(Vec::as_slice).collect();
        let src: Vec<&[f64]> = sources
            .iter()
            .flat_map(|&s| view.history(s).iter().map(Vec::as_slice))
            .collect();
        let (base, discrete) = match kind {
            EstimatorKind::DiscretePlugin => {
                let tc = Codes::from_columns(&[target], n).values;
                let mut dc = Codes::from_columns(&dest_hist, n);
                dc.densify();
                let mut sc = Codes::from_columns(&src, n);
                sc.densify();
                let base = discrete_cond_entropy(&tc, &dc.values);
                (
                    base,
                    Some(DiscreteTe {
                        target: tc,
                        dest: dc,
                        source: sc,
                    }),
                )
            }
            _ => (cond_entropy_cols(kind, &[target], &dest_hist)?, None),
        };
        Ok(Self {
            kind,
            target,
            dest_hist,
            sources: src,
            base,
            discrete,
        })
    }

    pub(crate) fn rows(&self) -> usize {
        self.target.len()
    }

    pub(crate) fn value(&self) -> Result<f64> {
        if self.sources.is_empty() {
            return Ok(0.0);
        }
        Ok(self.base - self.full_entropy(None)?)
    }

    /// TE with source row `t` replaced by source row `rows[t]`.
    pub(crate) fn resampled_value(&self, rows: &[usize]) -> Result<f64> {
        if self.sources.is_empty() {
            return Ok(0.0);
        }
        Ok(self.base - self.full_entropy(Some(rows))?)
    }

    /// `H(X' | X_past, Y_past)`.
    fn full_entropy(&self, rows: Option<&[usize]>) -> Result<f64> {
        if let Some(d) = &self.discrete {
            let radix = d.source.bound;
            let cond: Vec<u64> = match rows {
                None => d
                    .dest
                    .values
                    .iter()
                    .zip(&d.source.values)
                    .map(|(&a, &b)| a * radix + b)
                    .collect(),
                Some(rows) => d
                    .dest
                    .values
                    .iter()
                    .zip(rows)
                    .map(|(&a, &r)| a * radix + d.source.values[r])
                    .collect(),
            };
            return Ok(discrete_cond_entropy(&d.target, &cond));
        }
        let permuted: Vec<Vec<f64>>;
        let mut cond = self.dest_hist.clone();
        match rows {
            None => cond.extend_from_slice(&self.sources),
            Some(rows) => {
                permuted = self
                    .sources
                    .iter()
                    .map(|c| rows.iter().map(|&r| c[r]).collect())
                    .collect();
                cond.extend(permuted.iter().map(Vec::as_slice));
            }
        }
        cond_entropy_cols(self.kind, &[self.target], &cond)
    }
}

/// Mixed-radix row codes over integer-valued columns, re-densified when the
/// radix product would overflow.
#[derive(Debug, Clone)]
pub(crate) struct Codes {
    pub(crate) values: Vec<u64>,
    /// Exclusive upper bound on `values`.
    pub(crate) bound: u64,
}

const CODE_LIMIT: u64 = 1 << 52;

impl Codes {
    pub(crate) fn from_columns(cols: &[&[f64]], n: usize) -> Self {
        let mut codes = Codes {
            values: vec![0; n],
            bound: 1,
        };
        for col in cols {
            codes.push(col);
        }
        codes
    }

    fn push(&mut self, col: &[f64]) {
        let radix = col.iter().fold(0u64, |acc, &v| acc.max(v as u64)) + 1;
        if self.bound.checked_mul(radix).is_none_or(|b| b > CODE_LIMIT) {
            self.densify();
        }
        for (c, &v) in self.values.iter_mut().zip(col) {
            *c = *c * radix + v as u64;
        }
        self.bound *= radix;
    }

    /// Replaces codes by their rank among the distinct codes.
    pub(crate) fn densify(&mut self) {
        let mut distinct = self.values.clone();
        distinct.sort_unstable();
        distinct.dedup();
        for c in &mut self.values {
            *c = distinct.binary_search(c).unwrap() as u64;
        }
        self.bound = distinct.len().max(1) as u64;
    }
}

/// `-Σ p(z,w) log2 p(z|w)` from row codes.
pub(crate) fn discrete_cond_entropy(z: &[u64], w: &[u64]) -> f64 {
    let n = z.len();
    let mut pairs: Vec<(u64, u64)> = w.iter().copied().zip(z.iter().copied()).collect();
    pairs.sort_unstable();
    let mut sum = 0.0;
    let mut i = 0;
    while i < n {
        let wv = pairs[i].0;
        let mut j = i;
        while j < n && pairs[j].0 == wv {
            j += 1;
        }
        let cw = (j - i) as f64;
        let mut k = i;
        while k < j {
            let zv = pairs[k].1;
            let mut l = k;
            while l < j && pairs[l].1 == zv {
                l += 1;
            }
            let czw = (l - k) as f64;
            sum += czw * (czw / cw).log2();
            k = l;
        }
        i = j;
    }
    -sum / n as f64
}

/// Gaussian `H(Z | W) = ½ log2((2πe)^dz det Σ_{Z|W})` with the Schur
/// complement obtained as `det Σ / det Σ_WW`.
fn gaussian_cond_entropy(z: &[&[f64]], w: &[&[f64]]) -> Result<f64> {
    let n = z[0].len();
    if n < 2 {
        return Err(Error::DegenerateCovariance(format!("{n} rows")));
    }
    let dz = z.len();
    let cols: Vec<&[f64]> = z.iter().chain(w).copied().collect();
    let full = covariance(&cols);
    let log_full = log_det_checked(&full)?;
    let log_w = if w.is_empty() {
        0.0
    } else {
        let dw = w.len();
        let ww = full.view((dz, dz), (dw, dw)).into_owned();
        log_det_checked(&ww)?
    };
    let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
    Ok(0.5 * (dz as f64 * two_pi_e.log2() + (log_full - log_w) / std::f64::consts::LN_2))
}

fn covariance(cols: &[&[f64]]) -> DMatrix<f64> {
    let d = cols.len();
    let n = cols[0].len();
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let centred: Vec<Vec<f64>> = cols
        .iter()
        .zip(&means)
        .map(|(c, m)| c.iter().map(|v| v - m).collect())
        .collect();
    let mut cov = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let s: f64 = centred[a].iter().zip(&centred[b]).map(|(x, y)| x * y).sum();
            let v = s / (n - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    cov
}

/// Natural log-determinant of a covariance matrix, rejecting matrices whose
/// correlation matrix has condition number above [`MAX_CONDITION`].
fn log_det_checked(cov: &DMatrix<f64>) -> Result<f64> {
    let d = cov.nrows();
    let scale: Vec<f64> = (0..d).map(|i| cov[(i, i)]).collect();
    if let Some(i) = scale.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::DegenerateCovariance(format!(
            "variable {i} has variance {}",
            scale[i]
        )));
    }
    let corr = DMatrix::from_fn(d, d, |a, b| cov[(a, b)] / (scale[a] * scale[b]).sqrt());
    let eig = corr.symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo.is_nan() || lo <= 0.0 || hi / lo > MAX_CONDITION {
        return Err(Error::DegenerateCovariance(format!(
            "condition number {:.3e} exceeds {MAX_CONDITION:e}",
            hi / lo
        )));
    }
    let chol = corr
        .cholesky()
        .ok_or_else(|| Error::DegenerateCovariance("not positive definite".into()))?;
    let log_corr: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    Ok(log_corr + scale.iter().map(|v| v.ln()).sum::<f64>())
}

/// Box-kernel `H(Z | W) = (1/n) Σ_t log2(c_W(t) / c_ZW(t)) + dz·log2(2r)`.
fn box_cond_entropy(z: &[&[f64]], w: &[&[f64]], width: f64) -> f64 {
    let n = z[0].len();
    let joint: Vec<&[f64]> = z.iter().chain(w).copied().collect();
    let c_zw = box_counts(&joint, width);
    let c_w = if w.is_empty() {
        vec![n as u32; n]
    } else {
        box_counts(w, width)
    };
    let sum: f64 = c_w
        .iter()
        .zip(&c_zw)
        .map(|(&a, &b)| (f64::from(a) / f64::from(b)).log2())
        .sum();
    sum / n as f64 + z.len() as f64 * (2.0 * width).log2()
}

/// For every row, the number of rows within `width` on every axis (itself
/// included).
pub(crate) fn box_counts(cols: &[&[f64]], width: f64) -> Vec<u32> {
    let n = cols[0].len();
    let d = cols.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| cols[0][a].total_cmp(&cols[0][b]));
    let mut data = Vec::with_capacity(n * d);
    for &t in &order {
        data.extend(cols.iter().map(|c| c[t]));
    }
    let keys: Vec<f64> = order.iter().map(|&t| cols[0][t]).collect();
    let count_at = |a: usize| -> u32 {
        let x = &data[a * d..(a + 1) * d];
        let lo = keys.partition_point(|&k| k < x[0] - width);
        let hi = keys.partition_point(|&k| k <= x[0] + width);
        let mut c = 0;
        'rows: for b in lo..hi {
            let y = &data[b * d..(b + 1) * d];
            for k in 1..d {
                if (y[k] - x[k]).abs() > width {
                    continue 'rows;
                }
            }
            c += 1;
        }
        c
    };
    let sorted_counts: Vec<u32> = if n >= 4096 {
        (0..n).into_par_iter().map(count_at).collect()
    } else {
        (0..n).map(count_at).collect()
    };
    let mut counts = vec![0; n];
    for (a, &t) in order.iter().enumerate() {
        counts[t] = sorted_counts[a];
    }
    counts
}
