//! The `netinfer` command line: `simulate`, `score`, `infer` and `eval`.

pub mod args;
pub mod error;
pub mod output;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use netinfer::graph::parse_dot;
use netinfer::search::{search, MAX_EXHAUSTIVE_VERTICES};
use netinfer::timeseries::{broadcast, read_csv};
use netinfer::{
    compare_graphs, delay_embed, discretize, Dag, EmbeddedView, EmbeddingSpec, EstimatorKind,
    GdsConfig, GdsModel, IcVariant, ScoreKind, ScoreReport, Scorer, SearchConfig, SearchMethod,
    SurrogateConfig, SurrogateMethod, TimeSeriesSet,
};

pub use args::Cli;
use args::*;
pub use error::{CliError, CliResult};
use output::{to_json, Run};

pub const THREADS_ENV: &str = "NETINFER_THREADS";

/// Sets up the worker pool from `NETINFER_THREADS` and runs one command.
pub fn run(cli: Cli) -> CliResult<()> {
    let threads = configure_threads()?;
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a, threads),
        Command::Score(a) => cmd_score(a, threads),
        Command::Infer(a) => cmd_infer(a, threads),
        Command::Eval(a) => cmd_eval(a, threads),
    }
}

fn configure_threads() -> CliResult<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::validation(format!("{THREADS_ENV} must be a non-negative integer, got '{raw}'")))?;
    // 0 leaves the choice to rayon
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::runtime(format!("cannot build thread pool: {e}")))?;
    Ok(Some(n))
}

/// Model config as written by users: vertices and edges by name.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationFile {
    vertices: Vec<String>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    model: GdsModel,
    #[serde(default)]
    process_noise_std: f64,
    #[serde(default)]
    obs_noise_std: f64,
    n: usize,
    burn_in: Option<usize>,
    seed: Option<u64>,
    initial_state: Option<Vec<f64>>,
}

impl SimulationFile {
    fn into_config(self) -> CliResult<GdsConfig> {
        let index = |name: &str| {
            self.vertices
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| CliError::validation(format!("edges: unknown vertex '{name}'")))
        };
        let edges = self
            .edges
            .iter()
            .map(|(a, b)| Ok((index(a)?, index(b)?)))
            .collect::<CliResult<Vec<_>>>()?;
        let graph = Dag::from_edges(self.vertices.len(), &edges)
            .map_err(|e| CliError::validation(format!("edges: {e}")))?;
        let mut cfg = GdsConfig::new(graph, self.model, self.n, self.seed.unwrap_or(0))
            .with_noise(self.process_noise_std, self.obs_noise_std);
        cfg.names = self.vertices;
        if let Some(b) = self.burn_in {
            cfg.burn_in = b;
        }
        cfg.initial_state = self.initial_state;
        Ok(cfg)
    }
}

fn cmd_simulate(a: SimulateArgs, threads: Option<usize>) -> CliResult<()> {
    let mut run = Run::start("simulate", threads);
    run.config(&a.config);
    let text = run.read_input(&a.config)?;
    let file: SimulationFile = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("config {}: {e}", a.config.display())))?;
    let mut cfg = file.into_config()?;
    // flags win over the file
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    run.seed(cfg.seed);
    let out = netinfer::simulate(&cfg)?;

    let mut csv = Vec::new();
    out.observations
        .write_csv(&mut csv)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    run.write(&a.out_dir.join("data.csv"), &csv)?;
    let names = cfg.vertex_names();
    run.write(&a.out_dir.join("truth.dot"), out.truth.to_dot(&names).as_bytes())?;
    run.write(&a.out_dir.join("config.json"), to_json(&out.config_echo).as_bytes())?;
    run.finish(&a.out_dir)?;
    println!(
        "wrote {} rows x {} columns and a graph with {} edges to {}",
        out.observations.len(),
        names.len(),
        out.truth.edge_count(),
        a.out_dir.display()
    );
    Ok(())
}

/// Dataset, embedding and score settings resolved from the flags.
struct Prepared {
    data: TimeSeriesSet,
    view: EmbeddedView,
    estimator: EstimatorKind,
    kind: ScoreKind,
}

fn prepare(s: &ScoringArgs, run: &mut Run) -> CliResult<Prepared> {
    let text = run.read_input(&s.data)?;
    let data = read_csv(text.as_bytes())?;
    let m = data.subsystems();
    let spec = EmbeddingSpec::new(broadcast(&s.tau, m, "tau")?, broadcast(&s.kappa, m, "kappa")?)?;

    if s.width.is_some() && s.estimator != EstimatorArg::BoxKernel {
        return Err(CliError::validation("--width only applies to --estimator box-kernel"));
    }
    let estimator = match s.estimator {
        EstimatorArg::Discrete => EstimatorKind::DiscretePlugin,
        EstimatorArg::LinearGaussian => EstimatorKind::LinearGaussian,
        EstimatorArg::BoxKernel => EstimatorKind::BoxKernel {
            width: s
                .width
                .ok_or_else(|| CliError::validation("--estimator box-kernel requires --width"))?,
        },
    };
    estimator.validate()?;
    let view = match estimator {
        EstimatorKind::DiscretePlugin => {
            let bins = broadcast(&s.bins, m, "bins")?;
            delay_embed(&discretize(&data, &bins)?, &spec, &[])?
        }
        _ => delay_embed(&data, &spec, &[])?,
    };
    let kind = match s.score {
        ScoreArg::Te => ScoreKind::Te,
        ScoreArg::Tea => ScoreKind::Tea { alpha: s.alpha },
        ScoreArg::Tee => {
            let method = match s.surrogate_method {
                SurrogateMethodArg::Permutation => SurrogateMethod::Permutation,
                SurrogateMethodArg::Bootstrap => SurrogateMethod::Bootstrap,
            };
            let cfg = SurrogateConfig::new(s.surrogates, s.alpha, method, s.seed)?;
            if let Some(w) = cfg.warning() {
                eprintln!("warning: {w}");
            }
            run.seed(s.seed);
            ScoreKind::Tee(cfg)
        }
        ScoreArg::Aic => ScoreKind::Ic(IcVariant::Aic),
        ScoreArg::Bic => ScoreKind::Ic(IcVariant::Bic),
        ScoreArg::Ml => ScoreKind::Ic(IcVariant::Ml),
    };
    Ok(Prepared {
        data,
        view,
        estimator,
        kind,
    })
}

fn load_graph(path: &Path, names: &[String], run: &mut Run) -> CliResult<Dag> {
    let text = run.read_input(path)?;
    let dot = parse_dot(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    dot.to_dag(names)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn table(report: &ScoreReport) -> String {
    let mut out = String::new();
    let width = report
        .per_vertex
        .iter()
        .map(|v| v.vertex.len())
        .chain([6])
        .max()
        .unwrap_or(6);
    let _ = writeln!(out, "{:<width$}  {:>12}  {:>12}  {:>12}  parents", "vertex", "te", "penalty", "local");
    for v in &report.per_vertex {
        let parents = if v.parents.is_empty() {
            "-".to_string()
        } else {
            v.parents.join(",")
        };
        let _ = writeln!(
            out,
            "{:<width$}  {:>12.6}  {:>12.6}  {:>12.6}  {parents}",
            v.vertex, v.te, v.penalty, v.local
        );
    }
    let _ = writeln!(out, "total {:.6}", report.total);
    out
}

fn cmd_score(a: ScoreArgs, threads: Option<usize>) -> CliResult<()> {
    let mut run = Run::start("score", threads);
    let p = prepare(&a.scoring, &mut run)?;
    let graph = load_graph(&a.graph, p.data.names(), &mut run)?;
    let scorer = Scorer::new(&p.view, p.estimator, p.kind)?;
    let report = scorer.score(&graph)?;
    let json = to_json(&report);
    if a.json {
        print!("{json}");
    } else {
        print!("{}", table(&report));
    }
    if let Some(dir) = &a.out_dir {
        run.write(&dir.join("report.json"), json.as_bytes())?;
        run.finish(dir)?;
    }
    Ok(())
}

fn cmd_infer(a: InferArgs, threads: Option<usize>) -> CliResult<()> {
    let mut run = Run::start("infer", threads);
    let p = prepare(&a.scoring, &mut run)?;
    let m = p.data.subsystems();
    let method = match a.search {
        SearchArg::Exhaustive => SearchMethod::Exhaustive,
        SearchArg::Greedy => SearchMethod::Greedy,
    };
    if method == SearchMethod::Exhaustive && m > MAX_EXHAUSTIVE_VERTICES {
        return Err(CliError::validation(format!(
            "exhaustive search supports at most {MAX_EXHAUSTIVE_VERTICES} subsystems, got {m}; use --search greedy"
        )));
    }
    let cfg = SearchConfig {
        method,
        max_parents: a.max_parents,
        restarts: a.restarts,
        seed: a.scoring.seed,
        ..Default::default()
    };
    if method == SearchMethod::Greedy {
        run.seed(cfg.seed);
    }
    let scorer = Scorer::new(&p.view, p.estimator, p.kind)?;
    let result = search(&scorer, &cfg)?;

    if p.kind == ScoreKind::Te && a.max_parents.is_none() && m > 1 && result.best.is_complete() {
        eprintln!(
            "warning: the raw te score never decreases when parents are added, so the result is a complete graph; \
             use --score tea or --score tee, or cap --max-parents"
        );
    }
    let names = p.data.names();
    run.detail("search", method);
    run.detail("max_parents", cfg.effective_max_parents(&p.kind, m));
    run.detail("graphs_visited", result.visited);
    run.detail("trace", &result.trace);
    run.write(&a.out_dir.join("graph.dot"), result.best.to_dot(names).as_bytes())?;
    run.write(&a.out_dir.join("report.json"), to_json(&result.best_report).as_bytes())?;
    run.finish(&a.out_dir)?;
    print!("{}", table(&result.best_report));
    let edges: Vec<String> = result
        .best
        .edges()
        .iter()
        .map(|&(f, t)| format!("{} -> {}", names[f], names[t]))
        .collect();
    println!("edges: {}", if edges.is_empty() { "none".to_string() } else { edges.join(", ") });
    Ok(())
}

fn cmd_eval(a: EvalArgs, threads: Option<usize>) -> CliResult<()> {
    let mut run = Run::start("eval", threads);
    let parse = |path: &Path, run: &mut Run| -> CliResult<_> {
        let text = run.read_input(path)?;
        parse_dot(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    };
    let inferred = parse(&a.inferred, &mut run)?;
    let truth = parse(&a.truth, &mut run)?;
    let set = |g: &netinfer::DotGraph| -> BTreeSet<String> {
        g.vertices.iter().cloned().collect()
    };
    if set(&inferred) != set(&truth) {
        let only_inferred: Vec<_> = set(&inferred).difference(&set(&truth)).cloned().collect();
        let only_truth: Vec<_> = set(&truth).difference(&set(&inferred)).cloned().collect();
        return Err(CliError::validation(format!(
            "vertex sets differ: only in inferred {only_inferred:?}, only in truth {only_truth:?}"
        )));
    }
    let names = &truth.vertices;
    let metrics = compare_graphs(&inferred.to_dag(names)?, &truth.to_dag(names)?)?;
    let json = to_json(&metrics);
    print!("{json}");
    if let Some(dir) = &a.out_dir {
        run.write(&dir.join("metrics.json"), json.as_bytes())?;
        run.finish(dir)?;
    }
    Ok(())
}
