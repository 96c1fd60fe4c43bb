//! The `coalition` command line.
//!
//! Every artifact carries the run configuration that produced it: JSON
//! outputs under a `config` key, CSV files as a leading `# config=` line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::estimator::{estimate_t, EstimatorConfig};
use crate::evaluation::{
    accuracy_table_csv, convergence_trace, error_vs_exact, eval_method_accuracy, instability_sweep, Method,
    TargetGame,
};
use crate::exact::{coalition_interaction, elementary_components, exact_t, ExactLimits, Partition, Semantics};
use crate::game::model_file::ModelSpec;
use crate::game::{ExpressionGame, Memoized};
use crate::player_set::PlayerSet;
use crate::synthetic::{generate_dataset, load_manifest, write_manifest, Family, GeneratorConfig, SyntheticModel};

#[derive(Debug, Parser)]
#[command(name = "coalition", version, about = "Interaction significance of player coalitions")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (file for `generate`); stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for per-model parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Reduce per-model results in input order. Results are always
    /// collected in input order; the flag is recorded for the record.
    #[arg(long, global = true)]
    pub ordered_reduce: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimatorArgs {
    /// Gradient steps (K1).
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// Boundary vectors per step (K2).
    #[arg(long, default_value_t = 8)]
    pub partition_samples: usize,
    /// Contexts per boundary vector (K3).
    #[arg(long, default_value_t = 256)]
    pub subset_samples: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    /// Enumerate exactly when the game is small enough.
    #[arg(long)]
    pub exact_fallback: bool,
}

impl EstimatorArgs {
    fn config(&self, seed: u64, semantics: Semantics) -> EstimatorConfig {
        EstimatorConfig {
            epochs: self.epochs,
            partition_samples: self.partition_samples,
            subset_samples: self.subset_samples,
            learning_rate: self.lr,
            seed,
            semantics,
            exact_fallback: self.exact_fallback,
            ..EstimatorConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LimitArgs {
    #[arg(long, default_value_t = ExactLimits::DEFAULT.max_players)]
    pub max_players: usize,
    #[arg(long, default_value_t = ExactLimits::DEFAULT.max_component_target)]
    pub max_component_target: usize,
    #[arg(long, default_value_t = ExactLimits::DEFAULT.max_contiguous_target)]
    pub max_contiguous_target: usize,
    #[arg(long, default_value_t = ExactLimits::DEFAULT.max_general_target)]
    pub max_general_target: usize,
}

impl LimitArgs {
    fn limits(&self) -> ExactLimits {
        ExactLimits {
            max_players: self.max_players,
            max_component_target: self.max_component_target,
            max_contiguous_target: self.max_contiguous_target,
            max_general_target: self.max_general_target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Ours,
    Baseline1,
    Baseline2,
    All,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Write a synthetic dataset manifest (one JSON model per line).
    Generate {
        #[arg(value_enum)]
        family: Family,
        count: usize,
        #[arg(long, default_value_t = GeneratorConfig::default().max_target)]
        max_target: usize,
        #[arg(long, default_value_t = 0.0)]
        arity3_prob: f64,
    },
    /// Exact B, B_max, B_min and T by enumeration.
    Exact {
        /// Model file (JSON).
        #[arg(long)]
        model: PathBuf,
        /// Target players: `all`, `a-b` (inclusive) or `i,j,k`; 0-based.
        #[arg(long)]
        target: String,
        #[arg(long, value_enum, default_value_t = Semantics::Exclusive)]
        semantics: Semantics,
        /// Only partitions into runs of consecutive target members.
        #[arg(long)]
        contiguous: bool,
        /// Also report every elementary interaction component.
        #[arg(long)]
        components: bool,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Sampled estimate of T with optimizer traces.
    Estimate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, value_enum, default_value_t = Semantics::Exclusive)]
        semantics: Semantics,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },
    /// Partition accuracy of one or all methods on synthetic datasets.
    Eval {
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        /// Manifest file; repeat for several datasets.
        #[arg(long, required = true)]
        dataset: Vec<PathBuf>,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },
    /// Error of the estimate against exact enumeration at checkpoint epochs.
    ErrorCurve {
        #[arg(long, required = true)]
        dataset: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [0, 10, 25, 50, 100])]
        checkpoints: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Semantics::Unit)]
        semantics: Semantics,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },
    /// Instability of the estimate across per-step sample budgets.
    Instability {
        #[arg(long, required = true)]
        dataset: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [100, 500, 1000, 2000, 5000])]
        budgets: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, value_enum, default_value_t = Semantics::Exclusive)]
        semantics: Semantics,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },
    /// Per-epoch merge probabilities for one dataset model.
    Trace {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, value_enum, default_value_t = Semantics::Exclusive)]
        semantics: Semantics,
        #[command(flatten)]
        estimator: EstimatorArgs,
    },
}

/// Echoed into every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub global: GlobalArgs,
    #[serde(flatten)]
    pub command: Command,
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Capacity { .. } => 3,
        Error::Degenerate(_) => 4,
        _ => 2,
    }
}

/// Parses `all`, `a-b` (inclusive) or a comma list of 0-based indices.
pub fn parse_target(spec: &str, n: usize) -> Result<PlayerSet> {
    let spec = spec.trim();
    if spec == "all" {
        return Ok(PlayerSet::full(n));
    }
    let bad = || Error::Config(format!("bad target '{spec}' (expected all, a-b or i,j,k)"));
    if let Some((a, b)) = spec.split_once('-') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return PlayerSet::from_indices(a..=b, n);
    }
    let idx = spec
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    PlayerSet::from_indices(idx, n)
}

/// Parses arguments and runs; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("coalition: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if cli.global.workers == 0 {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<()> {
    let config = RunConfig {
        global: cli.global.clone(),
        command: cli.command.clone(),
    };
    let out = Output {
        dir: cli.global.out.clone(),
        config: serde_json::to_value(&config)?,
    };
    let seed = cli.global.seed;
    match &cli.command {
        Command::Generate {
            family,
            count,
            max_target,
            arity3_prob,
        } => {
            let cfg = GeneratorConfig {
                max_target: *max_target,
                arity3_prob: *arity3_prob,
                ..GeneratorConfig::default()
            };
            let models = generate_dataset(*family, *count, seed, &cfg)?;
            match &cli.global.out {
                Some(path) => {
                    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                        fs::create_dir_all(parent)?;
                    }
                    write_manifest(&models, std::io::BufWriter::new(fs::File::create(path)?))
                }
                None => write_manifest(&models, std::io::stdout().lock()),
            }
        }
        Command::Exact {
            model,
            target,
            semantics,
            contiguous,
            components,
            limits,
        } => {
            let spec = ModelSpec::load(model)?;
            let game = spec.build()?;
            let a = parse_target(target, spec.n())?;
            let limits = limits.limits();
            let r = exact_t(&game, a, *semantics, *contiguous, &limits)?;
            let mut report = json!({
                "target": a.to_vec(),
                "semantics": semantics,
                "contiguous": contiguous,
                "b": r.b,
                "b_max": r.b_max,
                "b_min": r.b_min,
                "t": r.t,
                "singleton_value": r.singleton_value,
                "omega_max": blocks(&r.omega_max),
                "omega_min": blocks(&r.omega_min),
                "partitions_evaluated": r.partitions_evaluated,
            });
            if *components {
                let c = elementary_components(&game, a, &limits)?;
                let b = coalition_interaction(&game, a, &limits)?;
                let list: Vec<Value> = c
                    .values
                    .iter()
                    .map(|(&bits, &v)| json!({ "players": PlayerSet::from_bits(bits).to_vec(), "value": v }))
                    .collect();
                report["components"] = json!({
                    "values": list,
                    "sum": c.sum(),
                    "positive_sum": c.positive_sum(),
                    "negative_sum": c.negative_sum(),
                    "interaction": b,
                    "identity_error": (c.sum() - b).abs(),
                });
            }
            out.json("exact.json", report)
        }
        Command::Estimate {
            model,
            target,
            semantics,
            estimator,
        } => {
            let spec = ModelSpec::load(model)?;
            let game = spec.build()?;
            let a = parse_target(target, spec.n())?;
            let cfg = estimator.config(seed, *semantics);
            let r = estimate_t(&game, a, &cfg)?;
            let report = json!({
                "target": a.to_vec(),
                "semantics": semantics,
                "t": r.t,
                "l_max": r.l_max,
                "l_min": r.l_min,
                "l_singletons": r.l_singletons,
                "l_grand": r.l_grand,
                "b": r.b,
                "b_max": r.b_max,
                "b_min": r.b_min,
                "omega_max": blocks(&r.omega_max),
                "omega_min": blocks(&r.omega_min),
                "p_max": r.p_max,
                "p_min": r.p_min,
                "evaluations": r.evaluations,
                "seed_max": r.seed_max,
                "seed_min": r.seed_min,
                "exact": r.exact,
            });
            if out.dir.is_some() {
                out.csv("trace_max.csv", &r.trace_max.to_csv())?;
                out.csv("trace_min.csv", &r.trace_min.to_csv())?;
            }
            out.json("estimate.json", report)
        }
        Command::Eval {
            method,
            dataset,
            estimator,
        } => {
            let cfg = estimator.config(seed, Semantics::Exclusive);
            let methods = match method {
                MethodArg::Ours => vec![Method::Ours],
                MethodArg::Baseline1 => vec![Method::Baseline1],
                MethodArg::Baseline2 => vec![Method::Baseline2],
                MethodArg::All => Method::ALL.to_vec(),
            };
            let mut reports = Vec::new();
            for path in dataset {
                let models = load_manifest(path)?;
                let name = dataset_name(path);
                for &m in &methods {
                    reports.push(eval_method_accuracy(&models, &name, m, &cfg)?);
                }
            }
            let table = accuracy_table_csv(&reports);
            if out.dir.is_some() {
                out.json("reports.json", serde_json::to_value(&reports)?)?;
            }
            out.csv("accuracy.csv", &table)
        }
        Command::ErrorCurve {
            dataset,
            checkpoints,
            semantics,
            estimator,
        } => {
            let cfg = estimator.config(seed, *semantics);
            let models = load_all(dataset)?;
            let games = memo_games(&models)?;
            let targets = target_games(&models, &games);
            let curve = error_vs_exact(&targets, &cfg, checkpoints)?;
            if out.dir.is_some() {
                out.json(
                    "error_curve.json",
                    json!({ "curve": curve, "median_rel_error": curve.median_rel_error() }),
                )?;
            }
            out.csv("error_curve.csv", &curve.to_long_csv())
        }
        Command::Instability {
            dataset,
            budgets,
            repeats,
            semantics,
            estimator,
        } => {
            let cfg = estimator.config(seed, *semantics);
            let models = load_all(dataset)?;
            let games = memo_games(&models)?;
            let targets = target_games(&models, &games);
            let sweep = instability_sweep(&targets, budgets, *repeats, &cfg)?;
            if out.dir.is_some() {
                out.json("instability.json", serde_json::to_value(&sweep)?)?;
            }
            let mut csv = String::from("budget,median,degenerate\n");
            for row in &sweep.rows {
                let med = row.median.map_or(String::new(), |m| m.to_string());
                csv.push_str(&format!("{},{med},{}\n", row.budget, row.degenerate));
            }
            if out.dir.is_some() {
                out.csv("instability_long.csv", &sweep.to_long_csv())?;
            }
            out.csv("instability.csv", &csv)
        }
        Command::Trace {
            dataset,
            index,
            semantics,
            estimator,
        } => {
            let models = load_manifest(dataset)?;
            let model = models.get(*index).ok_or_else(|| {
                Error::Config(format!("index {index} out of range for {} models", models.len()))
            })?;
            let cfg = estimator.config(seed, *semantics);
            let trace = convergence_trace(model, &cfg)?;
            if out.dir.is_some() {
                out.json("trace.json", serde_json::to_value(&trace)?)?;
            }
            out.csv("trace.csv", &trace.to_csv())
        }
    }
}

fn blocks(p: &Partition) -> Vec<Vec<usize>> {
    p.blocks().iter().map(|b| b.to_vec()).collect()
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<(String, SyntheticModel)>> {
    let mut out = Vec::new();
    for path in paths {
        let name = dataset_name(path);
        for (i, m) in load_manifest(path)?.into_iter().enumerate() {
            out.push((format!("{name}-{i}"), m));
        }
    }
    if out.is_empty() {
        return Err(Error::Config("datasets hold no models".into()));
    }
    Ok(out)
}

fn memo_games(models: &[(String, SyntheticModel)]) -> Result<Vec<Memoized<ExpressionGame>>> {
    models.iter().map(|(_, m)| Ok(Memoized::new(m.game()?))).collect()
}

fn target_games<'a>(
    models: &'a [(String, SyntheticModel)],
    games: &'a [Memoized<ExpressionGame>],
) -> Vec<TargetGame<'a>> {
    models
        .iter()
        .zip(games)
        .map(|((id, m), g)| TargetGame {
            id: id.clone(),
            game: g,
            target: m.target,
        })
        .collect()
}

struct Output {
    dir: Option<PathBuf>,
    config: Value,
}

impl Output {
    fn write(&self, name: &str, body: &str) -> Result<()> {
        match &self.dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(name), body)?;
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(body.as_bytes())?;
                stdout.flush()?;
            }
        }
        Ok(())
    }

    fn json(&self, name: &str, mut body: Value) -> Result<()> {
        body["config"] = self.config.clone();
        self.write(name, &(serde_json::to_string_pretty(&body)? + "\n"))
    }

    fn csv(&self, name: &str, body: &str) -> Result<()> {
        self.write(name, &format!("# config={}\n{body}", self.config))
    }
}
