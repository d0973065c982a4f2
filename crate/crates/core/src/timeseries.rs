//! Observation datasets, discretisation and delay embedding.
//!
//! A [`TimeSeriesSet`] holds `M` aligned scalar series of length `N`. Every
//! estimator works on an [`EmbeddedView`], which pairs each subsystem's next
//! value with its lag vector `⟨y_n, y_{n-τ}, …, y_{n-(κ-1)τ}⟩`. All subsystems
//! share one row range so joint distributions are taken over aligned rows.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `M` aligned, finite scalar series of common length `N ≥ 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesSet {
    names: Vec<String>,
    series: Vec<Vec<f64>>,
}

impl TimeSeriesSet {
    pub fn new(names: Vec<String>, series: Vec<Vec<f64>>) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::InvalidData("at least one series is required".into()));
        }
        if names.len() != series.len() {
            return Err(Error::InvalidData(format!(
                "{} names for {} series",
                names.len(),
                series.len()
            )));
        }
        check_unique(&names)?;
        let n = series[0].len();
        if n == 0 {
            return Err(Error::EmptyBody);
        }
        if n < 2 {
            return Err(Error::InvalidData(format!("need N >= 2 samples, got {n}")));
        }
        for (name, s) in names.iter().zip(&series) {
            if s.len() != n {
                return Err(Error::InvalidData(format!(
                    "series '{name}' has length {} but expected {n}",
                    s.len()
                )));
            }
            if let Some(pos) = s.iter().position(|v| !v.is_finite()) {
                return Err(Error::BadCell {
                    row: pos as u64 + 1,
                    column: name.clone(),
                    message: "value is not finite".into(),
                });
            }
        }
        Ok(Self { names, series })
    }

    /// Builds a set with names `v1..vM`.
    pub fn from_series(series: Vec<Vec<f64>>) -> Result<Self> {
        let names = (1..=series.len()).map(|i| format!("v{i}")).collect();
        Self::new(names, series)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn series(&self, i: usize) -> &[f64] {
        &self.series[i]
    }

    pub fn all_series(&self) -> &[Vec<f64>] {
        &self.series
    }

    /// Number of samples `N`.
    pub fn len(&self) -> usize {
        self.series[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of subsystems `M`.
    pub fn subsystems(&self) -> usize {
        self.series.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Writes the set as CSV with a header row. Values use the shortest
    /// representation that round-trips.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.names.join(","))?;
        let mut line = String::new();
        for t in 0..self.len() {
            line.clear();
            for (i, s) in self.series.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{:?}", s[t]));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

fn check_unique(names: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::DuplicateName(n.clone()));
        }
    }
    Ok(())
}

/// Reads a header-first, comma-separated file of finite reals.
pub fn load_csv(path: impl AsRef<Path>) -> Result<TimeSeriesSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file)
}

/// Parses CSV from any reader; see [`load_csv`].
pub fn read_csv<R: std::io::Read>(reader: R) -> Result<TimeSeriesSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::InvalidData("missing header row".into()));
    }
    check_unique(&header)?;

    let mut series = vec![Vec::new(); header.len()];
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        // line numbers are 1-based and include the header
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::BadCell {
                row: line,
                column: header[j].clone(),
                message: format!("cannot parse '{cell}' as a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::BadCell {
                    row: line,
                    column: header[j].clone(),
                    message: format!("non-finite value '{cell}'"),
                });
            }
            series[j].push(value);
        }
    }
    if series[0].is_empty() {
        return Err(Error::EmptyBody);
    }
    TimeSeriesSet::new(header, series)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("ragged row: expected {expected_len} fields, found {len}"),
        _ => e.to_string(),
    };
    Error::Csv { line, message }
}

/// Integer-coded series produced by equal-width binning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedSeries {
    names: Vec<String>,
    symbols: Vec<Vec<u32>>,
    alphabet_sizes: Vec<usize>,
    bin_edges: Vec<Vec<f64>>,
}

impl DiscretizedSeries {
    /// Wraps already-coded symbols. Edges are the integer cut points.
    pub fn from_symbols(
        names: Vec<String>,
        symbols: Vec<Vec<u32>>,
        alphabet_sizes: Vec<usize>,
    ) -> Result<Self> {
        if symbols.is_empty() || symbols.len() != names.len() || symbols.len() != alphabet_sizes.len()
        {
            return Err(Error::InvalidData(
                "names, symbols and alphabet sizes must have equal non-zero length".into(),
            ));
        }
        check_unique(&names)?;
        let n = symbols[0].len();
        if n < 2 {
            return Err(Error::InvalidData(format!("need N >= 2 samples, got {n}")));
        }
        for (i, (s, &r)) in symbols.iter().zip(&alphabet_sizes).enumerate() {
            if r < 2 {
                return Err(Error::param("bins", format!("alphabet size {r} < 2 for '{}'", names[i])));
            }
            if s.len() != n {
                return Err(Error::InvalidData(format!("series '{}' has ragged length", names[i])));
            }
            if let Some(t) = s.iter().position(|&v| v as usize >= r) {
                return Err(Error::BadCell {
                    row: t as u64 + 1,
                    column: names[i].clone(),
                    message: format!("symbol {} outside alphabet of size {r}", s[t]),
                });
            }
        }
        let bin_edges = alphabet_sizes
            .iter()
            .map(|&r| (0..=r).map(|k| k as f64 - 0.5).collect())
            .collect();
        Ok(Self {
            names,
            symbols,
            alphabet_sizes,
            bin_edges,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn symbols(&self, i: usize) -> &[u32] {
        &self.symbols[i]
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.alphabet_sizes
    }

    pub fn bin_edges(&self, i: usize) -> &[f64] {
        &self.bin_edges[i]
    }

    pub fn len(&self) -> usize {
        self.symbols[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn subsystems(&self) -> usize {
        self.symbols.len()
    }
}

/// Equal-width binning of each series over its own `[min, max]`.
///
/// The last bin is closed on the right so the maximum maps to `bins[i] - 1`.
pub fn discretize(ts: &TimeSeriesSet, bins: &[usize]) -> Result<DiscretizedSeries> {
    let bins = broadcast(bins, ts.subsystems(), "bins")?;
    let mut symbols = Vec::with_capacity(ts.subsystems());
    let mut edges = Vec::with_capacity(ts.subsystems());
    for (i, &b) in bins.iter().enumerate() {
        if b < 2 {
            return Err(Error::param("bins", format!("need at least 2 bins, got {b}")));
        }
        let s = ts.series(i);
        let (lo, hi) = s
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let range = hi - lo;
        if range <= 0.0 {
            return Err(Error::ZeroRange(ts.names()[i].clone()));
        }
        let top = (b - 1) as u32;
        symbols.push(
            s.iter()
                .map(|&v| (((v - lo) / range * b as f64).floor() as u32).min(top))
                .collect(),
        );
        let width = range / b as f64;
        let mut e: Vec<f64> = (0..b).map(|k| lo + k as f64 * width).collect();
        e.push(hi);
        edges.push(e);
    }
    Ok(DiscretizedSeries {
        names: ts.names().to_vec(),
        symbols,
        alphabet_sizes: bins,
        bin_edges: edges,
    })
}

/// Expands a single value to `m` copies, or checks a per-subsystem list.
pub fn broadcast(values: &[usize], m: usize, field: &str) -> Result<Vec<usize>> {
    match values.len() {
        1 => Ok(vec![values[0]; m]),
        len if len == m => Ok(values.to_vec()),
        len => Err(Error::param(
            field,
            format!("expected 1 or {m} values, got {len}"),
        )),
    }
}

/// Per-subsystem delay `τ` and embedding dimension `κ`. Lags run backwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    tau: Vec<usize>,
    kappa: Vec<usize>,
}

impl EmbeddingSpec {
    pub const DEFAULT_TAU: usize = 1;
    pub const DEFAULT_KAPPA: usize = 2;

    pub fn new(tau: Vec<usize>, kappa: Vec<usize>) -> Result<Self> {
        if tau.len() != kappa.len() || tau.is_empty() {
            return Err(Error::param(
                "kappa",
                "tau and kappa must list one value per subsystem",
            ));
        }
        if let Some(t) = tau.iter().find(|&&t| t == 0) {
            return Err(Error::param("tau", format!("lag must be >= 1, got {t}")));
        }
        if let Some(k) = kappa.iter().find(|&&k| k == 0) {
            return Err(Error::param("kappa", format!("dimension must be >= 1, got {k}")));
        }
        Ok(Self { tau, kappa })
    }

    pub fn uniform(m: usize, tau: usize, kappa: usize) -> Result<Self> {
        Self::new(vec![tau; m], vec![kappa; m])
    }

    /// `τ = 1`, `κ = 2` for every subsystem.
    pub fn default_for(m: usize) -> Self {
        Self {
            tau: vec![Self::DEFAULT_TAU; m],
            kappa: vec![Self::DEFAULT_KAPPA; m],
        }
    }

    pub fn tau(&self) -> &[usize] {
        &self.tau
    }

    pub fn kappa(&self) -> &[usize] {
        &self.kappa
    }

    pub fn subsystems(&self) -> usize {
        self.tau.len()
    }

    /// `(κ-1)·τ` for subsystem `i`.
    pub fn depth(&self, i: usize) -> usize {
        (self.kappa[i] - 1) * self.tau[i]
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for i in 0..self.subsystems() {
            let depth = self.depth(i);
            if depth >= n.saturating_sub(1) {
                return Err(Error::EmbeddingTooLong {
                    subsystem: i,
                    depth,
                    limit: n.saturating_sub(1),
                });
            }
        }
        Ok(())
    }
}

/// Aligned targets and lag vectors for a set of subsystems.
///
/// Values are stored as `f64` for both real and discrete data; discrete views
/// carry their alphabet sizes and hold exact small integers.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedView {
    names: Vec<String>,
    /// Index of each view subsystem in the source dataset.
    source_index: Vec<usize>,
    rows: usize,
    /// Time index `n` of row 0; row `t` has targets at `n + 1 + t`.
    first_index: usize,
    targets: Vec<Vec<f64>>,
    /// `histories[i][k][t]` is `y^i_{n - kτ}` for row `t`.
    histories: Vec<Vec<Vec<f64>>>,
    tau: Vec<usize>,
    kappa: Vec<usize>,
    alphabet: Option<Vec<usize>>,
}

/// Input accepted by [`delay_embed`].
pub trait EmbeddingSource {
    fn names(&self) -> &[String];
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn subsystems(&self) -> usize;
    fn column(&self, i: usize) -> Vec<f64>;
    fn alphabet(&self) -> Option<Vec<usize>>;
}

impl EmbeddingSource for TimeSeriesSet {
    fn names(&self) -> &[String] {
        TimeSeriesSet::names(self)
    }
    fn len(&self) -> usize {
        TimeSeriesSet::len(self)
    }
    fn subsystems(&self) -> usize {
        TimeSeriesSet::subsystems(self)
    }
    fn column(&self, i: usize) -> Vec<f64> {
        self.series(i).to_vec()
    }
    fn alphabet(&self) -> Option<Vec<usize>> {
        None
    }
}

impl EmbeddingSource for DiscretizedSeries {
    fn names(&self) -> &[String] {
        DiscretizedSeries::names(self)
    }
    fn len(&self) -> usize {
        DiscretizedSeries::len(self)
    }
    fn subsystems(&self) -> usize {
        DiscretizedSeries::subsystems(self)
    }
    fn column(&self, i: usize) -> Vec<f64> {
        self.symbols(i).iter().map(|&s| f64::from(s)).collect()
    }
    fn alphabet(&self) -> Option<Vec<usize>> {
        Some(self.alphabet_sizes().to_vec())
    }
}

/// Builds the aligned embedding of `subsystems` (all of them when empty).
///
/// `spec` is indexed by dataset subsystem. Rows cover the common range
/// `n = D ..= N-2` where `D = max_i (κ_i - 1)τ_i`.
pub fn delay_embed<S: EmbeddingSource + ?Sized>(
    data: &S,
    spec: &EmbeddingSpec,
    subsystems: &[usize],
) -> Result<EmbeddedView> {
    let m = data.subsystems();
    if spec.subsystems() != m {
        return Err(Error::param(
            "kappa",
            format!("embedding lists {} subsystems, data has {m}", spec.subsystems()),
        ));
    }
    let selected: Vec<usize> = if subsystems.is_empty() {
        (0..m).collect()
    } else {
        subsystems.to_vec()
    };
    let mut seen = HashSet::new();
    for &i in &selected {
        if i >= m || !seen.insert(i) {
            return Err(Error::param("subsystems", format!("bad subsystem index {i}")));
        }
    }
    let n = data.len();
    for &i in &selected {
        let depth = spec.depth(i);
        if depth >= n.saturating_sub(1) {
            return Err(Error::EmbeddingTooLong {
                subsystem: i,
                depth,
                limit: n.saturating_sub(1),
            });
        }
    }
    let max_depth = selected.iter().map(|&i| spec.depth(i)).max().unwrap_or(0);
    let rows = n - 1 - max_depth;

    let mut targets = Vec::with_capacity(selected.len());
    let mut histories = Vec::with_capacity(selected.len());
    for &i in &selected {
        let col = data.column(i);
        targets.push(col[max_depth + 1..max_depth + 1 + rows].to_vec());
        let tau = spec.tau[i];
        let lags = (0..spec.kappa[i])
            .map(|k| {
                let start = max_depth - k * tau;
                col[start..start + rows].to_vec()
            })
            .collect();
        histories.push(lags);
    }
    let names = selected.iter().map(|&i| data.names()[i].clone()).collect();
    let alphabet = data
        .alphabet()
        .map(|a| selected.iter().map(|&i| a[i]).collect());
    Ok(EmbeddedView {
        names,
        rows,
        first_index: max_depth,
        targets,
        histories,
        tau: selected.iter().map(|&i| spec.tau[i]).collect(),
        kappa: selected.iter().map(|&i| spec.kappa[i]).collect(),
        alphabet,
        source_index: selected,
    })
}

impl EmbeddedView {
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of subsystems in the view.
    pub fn subsystems(&self) -> usize {
        self.targets.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn source_index(&self) -> &[usize] {
        &self.source_index
    }

    /// Time index `n` of the history in row 0.
    pub fn first_index(&self) -> usize {
        self.first_index
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i]
    }

    /// Lag columns of subsystem `i`; column `k` holds `y_{n - kτ}`.
    pub fn history(&self, i: usize) -> &[Vec<f64>] {
        &self.histories[i]
    }

    pub fn history_row(&self, i: usize, t: usize) -> Vec<f64> {
        self.histories[i].iter().map(|c| c[t]).collect()
    }

    pub fn kappa(&self) -> &[usize] {
        &self.kappa
    }

    pub fn tau(&self) -> &[usize] {
        &self.tau
    }

    pub fn alphabet(&self) -> Option<&[usize]> {
        self.alphabet.as_deref()
    }

    pub fn is_discrete(&self) -> bool {
        self.alphabet.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one(series: Vec<f64>) -> TimeSeriesSet {
        TimeSeriesSet::from_series(vec![series]).unwrap()
    }

    #[test]
    fn parses_zeros() {
        let text = "a,b\n0,0\n0,0\n0,0\n0,0\n0,0\n";
        let ts = read_csv(text.as_bytes()).unwrap();
        assert_eq!(ts.subsystems(), 2);
        assert_eq!(ts.len(), 5);
        assert!(ts.all_series().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn header_only_is_empty_body() {
        let err = read_csv("a,b\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::EmptyBody), "{err}");
        assert!(err.to_string().contains("empty body"));
    }

    #[test]
    fn nan_cell_names_row_and_column() {
        let err = read_csv("a,b\n1,2\n3,NaN\n".as_bytes()).unwrap_err();
        match err {
            Error::BadCell { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_numeric_and_ragged_and_duplicate() {
        let err = read_csv("a,b\n1,x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::BadCell { row: 2, .. }), "{err}");
        let err = read_csv("a,b\n1,2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Csv { line: 3, .. }), "{err}");
        let err = read_csv("a,a\n1,2\n3,4\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DuplicateName(_)), "{err}");
    }

    #[test]
    fn csv_round_trip() {
        let ts = TimeSeriesSet::new(
            vec!["x".into(), "y".into()],
            vec![vec![0.1, -2.5e-7, 3.0], vec![1.0 / 3.0, 4.0, 1e300]],
        )
        .unwrap();
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), ts);
    }

    #[test]
    fn discretize_examples() {
        let d = discretize(&one(vec![0.0, 1.0, 2.0, 3.0]), &[2]).unwrap();
        assert_eq!(d.symbols(0), &[0, 0, 1, 1]);
        let d = discretize(&one(vec![0.0, 1.0]), &[2]).unwrap();
        assert_eq!(d.symbols(0), &[0, 1]);
        assert_eq!(d.bin_edges(0), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn discretize_rejects_constant_and_small_bins() {
        let err = discretize(&one(vec![2.0, 2.0, 2.0]), &[3]).unwrap_err();
        assert!(err.to_string().contains("zero-range"));
        assert!(discretize(&one(vec![0.0, 1.0]), &[1]).is_err());
    }

    #[test]
    fn discretize_uniform_frequencies() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let d = discretize(&one(xs), &[4]).unwrap();
        for s in 0..4 {
            let f = d.symbols(0).iter().filter(|&&v| v == s).count() as f64 / 1000.0;
            assert!((f - 0.25).abs() <= 0.05, "symbol {s} frequency {f}");
        }
    }

    #[test]
    fn embed_examples() {
        let ts = one(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let v = delay_embed(&ts, &EmbeddingSpec::uniform(1, 1, 2).unwrap(), &[]).unwrap();
        assert_eq!(v.rows(), 3);
        let rows: Vec<_> = (0..3).map(|t| v.history_row(0, t)).collect();
        assert_eq!(rows, vec![vec![2.0, 1.0], vec![3.0, 2.0], vec![4.0, 3.0]]);
        assert_eq!(v.target(0), &[3.0, 4.0, 5.0]);

        let ts = one(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let v = delay_embed(&ts, &EmbeddingSpec::uniform(1, 2, 2).unwrap(), &[]).unwrap();
        assert_eq!(v.history_row(0, 0), vec![3.0, 1.0]);
        assert_eq!(v.target(0)[0], 4.0);
    }

    #[test]
    fn markov_one_embedding_is_shift() {
        let xs = vec![5.0, 1.0, 4.0, 2.0, 8.0];
        let v = delay_embed(&one(xs.clone()), &EmbeddingSpec::uniform(1, 1, 1).unwrap(), &[])
            .unwrap();
        assert_eq!(v.rows(), 4);
        assert_eq!(v.history(0)[0], xs[..4].to_vec());
        assert_eq!(v.target(0), &xs[1..]);
    }

    #[test]
    fn embedding_too_long() {
        let ts = one(vec![1.0, 2.0, 3.0, 4.0]);
        let err = delay_embed(&ts, &EmbeddingSpec::uniform(1, 3, 2).unwrap(), &[]).unwrap_err();
        assert!(err.to_string().contains("embedding exceeds data length"));
        assert!(EmbeddingSpec::uniform(1, 0, 2).is_err());
        assert!(EmbeddingSpec::uniform(1, 1, 0).is_err());
    }

    #[test]
    fn mixed_depths_share_rows() {
        let a: Vec<f64> = (0..10).map(f64::from).collect();
        let b: Vec<f64> = (100..110).map(f64::from).collect();
        let ts = TimeSeriesSet::from_series(vec![a, b]).unwrap();
        let spec = EmbeddingSpec::new(vec![1, 3], vec![1, 2]).unwrap();
        let v = delay_embed(&ts, &spec, &[]).unwrap();
        assert_eq!(v.rows(), 10 - 1 - 3);
        assert_eq!(v.first_index(), 3);
        assert_eq!(v.history_row(0, 0), vec![3.0]);
        assert_eq!(v.history_row(1, 0), vec![103.0, 100.0]);
        assert_eq!(v.target(1)[0], 104.0);
        let only_b = delay_embed(&ts, &spec, &[1]).unwrap();
        assert_eq!(only_b.subsystems(), 1);
        assert_eq!(only_b.names(), &["v2".to_string()]);
    }

    proptest! {
        #[test]
        fn lag_components_match_raw_series(
            n in 3usize..50,
            tau in 1usize..5,
            kappa in 1usize..5,
        ) {
            let xs: Vec<f64> = (0..n).map(|v| v as f64 * 1.5 - 7.0).collect();
            let spec = EmbeddingSpec::uniform(1, tau, kappa).unwrap();
            let ts = one(xs.clone());
            match delay_embed(&ts, &spec, &[]) {
                Ok(v) => {
                    let depth = (kappa - 1) * tau;
                    prop_assert_eq!(v.rows(), n - 1 - depth);
                    for t in 0..v.rows() {
                        let idx = depth + t;
                        prop_assert_eq!(v.target(0)[t], xs[idx + 1]);
                        for k in 0..kappa {
                            prop_assert_eq!(v.history(0)[k][t], xs[idx - k * tau]);
                        }
                    }
                }
                Err(_) => prop_assert!((kappa - 1) * tau >= n - 1),
            }
        }

        #[test]
        fn discretize_is_monotone(xs in proptest::collection::vec(-1e6f64..1e6, 2..60), bins in 2usize..9) {
            prop_assume!(xs.iter().any(|&v| v != xs[0]));
            let d = discretize(&one(xs.clone()), &[bins]).unwrap();
            let s = d.symbols(0);
            for i in 0..xs.len() {
                prop_assert!((s[i] as usize) < bins);
                for j in 0..xs.len() {
                    if xs[i] <= xs[j] {
                        prop_assert!(s[i] <= s[j]);
                    }
                }
            }
            let e = d.bin_edges(0);
            prop_assert!(e.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
