//! Significance machinery for the penalised scores.
//!
//! The analytic test compares `2N·T` (with `T` in nats) against a χ²
//! quantile whose degrees of freedom follow the conditional mutual
//! information convention. The empirical test compares `T` against the
//! quantile of surrogate values obtained by resampling the joint source
//! history rows while the destination stays fixed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, TeProblem};
use crate::seed;
use crate::timeseries::EmbeddedView;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi2Params {
    df: u64,
    alpha: f64,
}

impl Chi2Params {
    pub fn new(df: u64, alpha: f64) -> Result<Self> {
        if df == 0 {
            return Err(Error::param("df", "degrees of freedom must be >= 1"));
        }
        check_alpha(alpha)?;
        Ok(Self { df, alpha })
    }

    pub fn df(&self) -> u64 {
        self.df
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param("alpha", format!("must lie in (0, 1), got {alpha}")))
    }
}

/// CDF of χ²(df) at `x`.
pub fn chi2_cdf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(df / 2.0, x / 2.0)
    }
}

fn chi2_ln_pdf(df: f64, x: f64) -> f64 {
    let k = df / 2.0;
    (k - 1.0) * x.ln() - x / 2.0 - k * std::f64::consts::LN_2 - ln_gamma(k)
}

/// `x` with `CDF_{χ²(df)}(x) = alpha`.
///
/// Safeguarded Newton iteration on the regularised lower incomplete gamma
/// function, started from the Wilson–Hilferty approximation.
pub fn chi2_quantile(p: Chi2Params) -> f64 {
    let df = p.df as f64;
    let alpha = p.alpha;

    let z = standard_normal_quantile(alpha);
    let h = 2.0 / (9.0 * df);
    let mut x = (df * (1.0 - h + z * h.sqrt()).powi(3)).max(1e-8);

    let (mut lo, mut hi) = (0.0, x.max(1.0));
    while chi2_cdf(df, hi) < alpha {
        lo = hi;
        hi *= 2.0;
    }
    if x <= lo || x >= hi {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let f = chi2_cdf(df, x) - alpha;
        if f.abs() < 1e-13 {
            break;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = f / chi2_ln_pdf(df, x).exp();
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    x
}

/// Acklam's rational approximation, accurate to about 1e-9; only used to seed
/// the Newton iteration.
fn standard_normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383_577_518_672_69e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < 0.02425 {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - 0.02425 {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Degrees of freedom of `2N·T(sources -> dest)` and its per-source split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreesOfFreedom {
    pub total: u64,
    /// `per_source[j]` belongs to the `j`-th source in the order given.
    pub per_source: Vec<u64>,
}

/// Discrete degrees of freedom with the destination's embedded past as the
/// conditioning set.
///
/// With `s_j = r_j^κ_j` and `c = (r_dest - 1)·r_dest^κ_dest`, source `j`
/// contributes `c·(s_j - 1)·Π_{k<j} s_k`, which telescopes to
/// `c·(Π_j s_j - 1)`.
pub fn te_degrees_of_freedom(
    dest: usize,
    sources: &[usize],
    kappa: &[usize],
    alphabet: &[usize],
) -> Result<DegreesOfFreedom> {
    if sources.contains(&dest) {
        return Err(Error::param("sources", "destination cannot be its own source"));
    }
    let overflow = || Error::DfOverflow(dest);
    let states = |i: usize| -> Result<u64> {
        let exp = u32::try_from(kappa[i]).map_err(|_| overflow())?;
        (alphabet[i] as u64).checked_pow(exp).ok_or_else(overflow)
    };
    let r_dest = alphabet[dest] as u64;
    let c = (r_dest - 1)
        .checked_mul(states(dest)?)
        .ok_or_else(overflow)?;
    let mut per_source = Vec::with_capacity(sources.len());
    let mut prefix: u64 = 1;
    let mut total: u64 = 0;
    for &s in sources {
        let sj = states(s)?;
        let l = c
            .checked_mul(sj - 1)
            .and_then(|v| v.checked_mul(prefix))
            .ok_or_else(overflow)?;
        per_source.push(l);
        total = total.checked_add(l).ok_or_else(overflow)?;
        prefix = prefix.checked_mul(sj).ok_or_else(overflow)?;
    }
    Ok(DegreesOfFreedom { total, per_source })
}

/// Linear-Gaussian degrees of freedom: each source adds its lag vector.
pub fn gaussian_degrees_of_freedom(sources: &[usize], kappa: &[usize]) -> DegreesOfFreedom {
    let per_source: Vec<u64> = sources.iter().map(|&s| kappa[s] as u64).collect();
    DegreesOfFreedom {
        total: per_source.iter().sum(),
        per_source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurrogateMethod {
    /// Shuffle source rows without replacement.
    Permutation,
    /// Redraw source rows with replacement.
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub count: usize,
    pub alpha: f64,
    pub method: SurrogateMethod,
    pub seed: u64,
}

impl SurrogateConfig {
    pub fn new(count: usize, alpha: f64, method: SurrogateMethod, seed: u64) -> Result<Self> {
        let cfg = Self {
            count,
            alpha,
            method,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::param("surrogates", "need at least one surrogate"));
        }
        check_alpha(self.alpha)
    }

    /// `⌈alpha / (1 - alpha)⌉`, the fewest surrogates that can resolve `alpha`.
    pub fn recommended_min(&self) -> usize {
        (self.alpha / (1.0 - self.alpha) - 1e-9).ceil() as usize
    }

    pub fn warning(&self) -> Option<String> {
        (self.count < self.recommended_min()).then(|| {
            format!(
                "{} surrogates cannot resolve alpha={}; at least {} recommended",
                self.count,
                self.alpha,
                self.recommended_min()
            )
        })
    }

    pub(crate) fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

/// Transfer entropy recomputed `cfg.count` times with the joint source
/// history rows resampled across time. Destination target and history stay
/// in place.
///
/// Surrogate `i` draws from a generator seeded by `(cfg.seed, i)`, so the
/// output does not depend on thread scheduling.
pub fn surrogate_te_samples(
    dest: usize,
    sources: &[usize],
    view: &EmbeddedView,
    kind: EstimatorKind,
    cfg: &SurrogateConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if sources.is_empty() {
        return Err(Error::param("sources", "surrogates need at least one source"));
    }
    let problem = TeProblem::new(dest, sources, view, kind)?;
    surrogates_for(&problem, cfg)
}

pub(crate) fn surrogates_for(problem: &TeProblem<'_>, cfg: &SurrogateConfig) -> Result<Vec<f64>> {
    let n = problem.rows();
    (0..cfg.count)
        .into_par_iter()
        .map(|i| {
            let rows = resample_rows(n, cfg.method, seed::mix(cfg.seed, i as u64));
            problem.resampled_value(&rows)
        })
        .collect()
}

/// Row indices for one surrogate.
pub fn resample_rows(n: usize, method: SurrogateMethod, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match method {
        SurrogateMethod::Permutation => {
            let mut rows: Vec<usize> = (0..n).collect();
            rows.shuffle(&mut rng);
            rows
        }
        SurrogateMethod::Bootstrap => (0..n).map(|_| rng.random_range(0..n)).collect(),
    }
}

/// Smallest sample `v` with `#{samples <= v} / len >= alpha`.
pub fn empirical_quantile(samples: &[f64], alpha: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::param("samples", "need at least one sample"));
    }
    check_alpha(alpha)?;
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    // tolerate representation error in alpha·n, e.g. 0.95·100
    let rank = ((alpha * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    Ok(sorted[rank - 1])
}

/// Two-sided Kolmogorov–Smirnov distance between a sample and a CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}
