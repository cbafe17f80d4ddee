//! The `eigenlab` binary: generation, statistics, encoding, training,
//! evaluation, verification, and grid runs as subcommands.
//!
//! Every subcommand echoes a machine-readable run manifest (all seeds and
//! configs) to stderr before doing any work, and writes only to paths given
//! on the command line. Seeds are mandatory where randomness is involved —
//! there are no wall-clock defaults. Exit codes: 0 success, 1 domain error,
//! 2 usage error.

use crate::codec::{self, Scheme, Solution, TaskKind};
use crate::datagen::{self, DatasetSpec};
use crate::ensembles::{positive_fraction, EnsembleConfig, EnsembleKind};
use crate::evalkit::{self, EvalRecord, ToleranceConfig};
use crate::linalg::{self, Matrix, SymMatrix};
use crate::nanoformer::{
    load_checkpoint, save_checkpoint, train_step, AdamState, Model, ModelConfig, TrainConfig,
    TrainLogRow,
};
use crate::oodlab::{self, CurveSpec, EvalSet, GridSpec, TableFormat};
use clap::{ArgGroup, Parser, Subcommand};
use serde::Serialize;
use std::io::Read;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Ensemble(#[from] crate::ensembles::EnsembleError),
    #[error(transparent)]
    Codec(#[from] codec::CodecError),
    #[error(transparent)]
    Datagen(#[from] datagen::DatagenError),
    #[error(transparent)]
    Eval(#[from] evalkit::EvalError),
    #[error(transparent)]
    Train(#[from] crate::nanoformer::TrainError),
    #[error(transparent)]
    Ood(#[from] oodlab::OodError),
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Parser)]
#[command(
    name = "eigenlab",
    version,
    about = "Random-matrix datasets, float tokenizers, a desk-scale transformer, and verifier-based evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset on disk (data.txt + manifest.json).
    Gen {
        #[arg(long)]
        task: TaskKind,
        #[arg(long)]
        kind: EnsembleKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "p1000")]
        in_scheme: Scheme,
        #[arg(long, default_value = "p1000")]
        out_scheme: Scheme,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Coefficient scale (default 10/√3).
        #[arg(long)]
        sigma: Option<f64>,
        /// Replacement-spectrum standard deviation override.
        #[arg(long)]
        spectrum_scale: Option<f64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Monte-Carlo ensemble statistics.
    #[command(group(ArgGroup::new("stat").args(["cond", "positive_fraction"])))]
    Stats {
        /// One kind, or a comma-separated list (rendered as a table).
        #[arg(long, value_delimiter = ',')]
        kind: Vec<EnsembleKind>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: u64,
        #[arg(long)]
        seed: u64,
        /// Condition-number quantiles (median / Q3 / P90). The default.
        #[arg(long)]
        cond: bool,
        /// Fraction of draws with strictly positive spectrum.
        #[arg(long)]
        positive_fraction: bool,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Encode a matrix (entries from --entries or stdin) into a dataset line.
    Encode {
        #[arg(long)]
        task: TaskKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "p1000")]
        in_scheme: Scheme,
        #[arg(long, default_value = "p1000")]
        out_scheme: Scheme,
        /// Row-major entries, whitespace or comma separated.
        #[arg(long)]
        entries: Option<String>,
    },
    /// Decode a dataset line (from --line or stdin) back into numbers.
    Decode {
        #[arg(long)]
        line: Option<String>,
        #[arg(long, default_value = "eigenvalues")]
        task: TaskKind,
        /// Inferred from the token surfaces when omitted.
        #[arg(long)]
        in_scheme: Option<Scheme>,
        #[arg(long)]
        out_scheme: Option<Scheme>,
    },
    /// Train a model on a built dataset (epochs) or a dataset spec (stream).
    #[command(group(ArgGroup::new("source").required(true).args(["data", "spec"])))]
    Train {
        /// Dataset directory from `gen` (cycled in order).
        #[arg(long)]
        data: Option<PathBuf>,
        /// DatasetSpec JSON file: train on freshly streamed samples.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        max_steps: u64,
        /// Model seed (required unless --model supplies a config).
        #[arg(long)]
        seed: Option<u64>,
        /// ModelConfig JSON file; desk-scale defaults otherwise.
        #[arg(long)]
        model: Option<PathBuf>,
        /// TrainConfig JSON file; defaults otherwise.
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        warmup: Option<u64>,
        #[arg(long)]
        eval_every: Option<u64>,
        /// Held-out dataset directory for periodic accuracy.
        #[arg(long)]
        eval_data: Option<PathBuf>,
        /// Training log CSV path.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        grad_lanes: Option<usize>,
    },
    /// Evaluate a checkpoint on a dataset.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        tau: f64,
        /// Write per-example EvalRecord rows here.
        #[arg(long)]
        report_csv: Option<PathBuf>,
    },
    /// Aggregate an EvalRecord CSV into a verifier report.
    Verify {
        #[arg(long)]
        eval_csv: PathBuf,
        #[arg(long)]
        task: TaskKind,
        #[arg(long, default_value_t = 0.05)]
        tau: f64,
    },
    /// Run a train-kinds × test-kinds accuracy grid from a GridSpec JSON.
    Grid {
        #[arg(long)]
        config: PathBuf,
        /// Report directory (grid.csv, grid.md, manifest.json).
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Samples-to-target learning curve from a CurveSpec JSON.
    Curve {
        #[arg(long)]
        config: PathBuf,
        /// Target accuracy in [0,1]; overrides the spec's value.
        #[arg(long)]
        target: Option<f64>,
        /// Optional JSON result path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

/// Parses argv and dispatches. Returns the process exit status.
pub fn run<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            1
        }
    }
}

fn manifest(value: impl Serialize) {
    eprintln!(
        "# run-manifest: {}",
        serde_json::to_string(&value).unwrap_or_else(|_| "{}".into())
    );
}

fn with_workers<T>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match workers {
        None => f(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .expect("worker pool")
            .install(f),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Domain(format!("unreadable JSON in {}: {e}", path.display())))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Gen {
            task,
            kind,
            n,
            count,
            seed,
            in_scheme,
            out_scheme,
            out,
            sigma,
            spectrum_scale,
            workers,
        } => {
            let mut ensemble = EnsembleConfig::new(kind, n, seed);
            if let Some(s) = sigma {
                ensemble.sigma = s;
            }
            ensemble.spectrum_scale = spectrum_scale;
            let spec = DatasetSpec::new(task, ensemble, in_scheme, out_scheme, count, seed);
            manifest(serde_json::json!({ "command": "gen", "spec": &spec, "out": out }));
            let m = with_workers(workers, || datagen::build_dataset(&spec, &out))?;
            println!(
                "wrote {} records to {} (sha256 {}, {} retries)",
                m.count,
                out.display(),
                m.sha256,
                m.retries
            );
            Ok(())
        }
        Command::Stats {
            kind,
            n,
            count,
            seed,
            cond,
            positive_fraction: pf,
            sigma,
            workers,
        } => {
            if kind.is_empty() {
                return Err(CliError::Domain("at least one --kind is required".into()));
            }
            manifest(serde_json::json!({
                "command": "stats", "kinds": &kind, "n": n, "count": count,
                "seed": seed, "sigma": sigma,
                "stat": if pf { "positive_fraction" } else { "cond" },
            }));
            let _ = cond;
            if pf {
                for k in kind {
                    let mut cfg = EnsembleConfig::new(k, n, seed);
                    if let Some(s) = sigma {
                        cfg.sigma = s;
                    }
                    let f = with_workers(workers, || positive_fraction(&cfg, count))?;
                    println!("{k} n={n} count={count} positive_fraction={f}");
                }
            } else if kind.len() == 1 {
                let mut cfg = EnsembleConfig::new(kind[0], n, seed);
                if let Some(s) = sigma {
                    cfg.sigma = s;
                }
                let q = with_workers(workers, || crate::ensembles::condition_stats(&cfg, count))?;
                println!(
                    "{} n={n} count={count} cond quantiles: median={:.1} q3={:.1} p90={:.1}",
                    kind[0], q.median, q.q3, q.p90
                );
            } else {
                let table = with_workers(workers, || {
                    oodlab::condition_table(&kind, n, count, seed, sigma, TableFormat::Markdown)
                })?;
                print!("{table}");
            }
            Ok(())
        }
        Command::Encode {
            task,
            n,
            in_scheme,
            out_scheme,
            entries,
        } => {
            let text = match entries {
                Some(t) => t,
                None => {
                    let mut buf = String::new();
                    std::io::stdin()
                        .read_to_string(&mut buf)
                        .map_err(io_err(Path::new("<stdin>")))?;
                    buf
                }
            };
            manifest(serde_json::json!({
                "command": "encode", "task": task, "n": n,
                "in_scheme": in_scheme, "out_scheme": out_scheme,
            }));
            let values: Vec<f64> = text
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| CliError::Domain(format!("bad entry `{s}`: {e}")))
                })
                .collect::<Result<_>>()?;
            if values.len() != n * n {
                return Err(CliError::Domain(format!(
                    "expected {} entries for n={n}, got {}",
                    n * n,
                    values.len()
                )));
            }
            let matrix = Matrix::from_vec(n, values)?;
            let solution = match task {
                TaskKind::Eigenvalues => {
                    let sym = SymMatrix::try_from_matrix(matrix.clone())?;
                    Solution::from_eigen(&linalg::eig_sym(&sym)?.spectrum)
                }
                TaskKind::Diagonalization => {
                    let sym = SymMatrix::try_from_matrix(matrix.clone())?;
                    let eig = linalg::eig_sym(&sym)?;
                    Solution::Diagonalization {
                        values: eig.spectrum.values().to_vec(),
                        basis: eig.basis,
                    }
                }
                TaskKind::Inversion => Solution::Inversion(linalg::invert(&matrix)?),
            };
            let input = codec::encode_input(&matrix, in_scheme)?;
            let target = codec::encode_target(task, &solution, out_scheme)?;
            println!("{} | {}", input.to_text(), target.to_text());
            Ok(())
        }
        Command::Decode {
            line,
            task,
            in_scheme,
            out_scheme,
        } => {
            let text = match line {
                Some(t) => t,
                None => {
                    let mut buf = String::new();
                    std::io::stdin()
                        .read_to_string(&mut buf)
                        .map_err(io_err(Path::new("<stdin>")))?;
                    buf
                }
            };
            let text = text.trim();
            manifest(serde_json::json!({ "command": "decode", "task": task }));
            let (left, right) = text
                .split_once('|')
                .map(|(l, r)| (l.trim(), r.trim()))
                .unwrap_or((text, ""));
            let in_scheme = in_scheme
                .or_else(|| infer_scheme(left))
                .ok_or_else(|| CliError::Domain("cannot infer input scheme".into()))?;
            let input = codec::TokenSequence::from_text(in_scheme, left)?;
            let matrix = codec::decode_input(&input.ids, in_scheme)?;
            println!("input ({0}x{0}, {1}):", matrix.n(), in_scheme);
            print_matrix(&matrix);
            if right.is_empty() {
                return Ok(());
            }
            let out_scheme = out_scheme
                .or_else(|| infer_scheme(right))
                .ok_or_else(|| CliError::Domain("cannot infer target scheme".into()))?;
            let target = codec::TokenSequence::from_text(out_scheme, right)?;
            let solution = codec::decode_target(task, &target.ids, matrix.n(), out_scheme)?;
            match solution {
                Solution::Eigenvalues(v) => println!("eigenvalues: {}", join(&v)),
                Solution::Diagonalization { values, basis } => {
                    println!("eigenvalues: {}", join(&values));
                    println!("basis:");
                    print_matrix(&basis);
                }
                Solution::Inversion(p) => {
                    println!("inverse:");
                    print_matrix(&p);
                }
            }
            Ok(())
        }
        Command::Train {
            data,
            spec,
            checkpoint,
            max_steps,
            seed,
            model,
            train,
            lr,
            batch,
            warmup,
            eval_every,
            eval_data,
            log,
            grad_lanes,
        } => cmd_train(TrainArgs {
            data,
            spec,
            checkpoint,
            max_steps,
            seed,
            model,
            train,
            lr,
            batch,
            warmup,
            eval_every,
            eval_data,
            log,
            grad_lanes,
        }),
        Command::Eval {
            data,
            checkpoint,
            tau,
            report_csv,
        } => cmd_eval(&data, &checkpoint, tau, report_csv.as_deref()),
        Command::Verify {
            eval_csv,
            task,
            tau,
        } => cmd_verify(&eval_csv, task, tau),
        Command::Grid {
            config,
            report,
            workers,
        } => {
            let spec: GridSpec = read_json(&config)?;
            manifest(serde_json::json!({ "command": "grid", "spec": &spec }));
            let grid = with_workers(workers, || oodlab::run_grid(&spec))?;
            std::fs::create_dir_all(&report).map_err(io_err(&report))?;
            let csv = oodlab::emit_table(&grid, TableFormat::Csv);
            let md = oodlab::emit_table(&grid, TableFormat::Markdown);
            std::fs::write(report.join("grid.csv"), &csv).map_err(io_err(&report))?;
            std::fs::write(report.join("grid.md"), &md).map_err(io_err(&report))?;
            let run_manifest = serde_json::json!({ "spec": &spec, "report": &grid });
            std::fs::write(
                report.join("manifest.json"),
                serde_json::to_string_pretty(&run_manifest).expect("serializable"),
            )
            .map_err(io_err(&report))?;
            print!("{md}");
            Ok(())
        }
        Command::Curve {
            config,
            target,
            report,
        } => {
            let mut spec: CurveSpec = read_json(&config)?;
            if let Some(t) = target {
                spec.target_accuracy = t;
            }
            manifest(serde_json::json!({ "command": "curve", "spec": &spec }));
            let result = oodlab::learning_curve(&spec)?;
            let text = serde_json::to_string_pretty(&result).expect("serializable");
            match result.reached_at_samples {
                Some(s) => println!(
                    "target {} reached at {s} samples (final accuracy {:.3})",
                    spec.target_accuracy, result.final_accuracy
                ),
                None => println!(
                    "target {} not reached within {} samples (final accuracy {:.3})",
                    spec.target_accuracy, result.budget_samples, result.final_accuracy
                ),
            }
            if let Some(path) = report {
                std::fs::write(&path, &text).map_err(io_err(&path))?;
            }
            Ok(())
        }
    }
}

fn infer_scheme(text: &str) -> Option<Scheme> {
    text.split_whitespace()
        .find(|w| !w.starts_with('V'))
        .map(|w| {
            if w.starts_with('F') {
                Scheme::Fp15
            } else {
                Scheme::P1000
            }
        })
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_matrix(m: &Matrix) {
    for i in 0..m.n() {
        println!("  {}", join(m.row(i)));
    }
}

struct TrainArgs {
    data: Option<PathBuf>,
    spec: Option<PathBuf>,
    checkpoint: PathBuf,
    max_steps: u64,
    seed: Option<u64>,
    model: Option<PathBuf>,
    train: Option<PathBuf>,
    lr: Option<f64>,
    batch: Option<usize>,
    warmup: Option<u64>,
    eval_every: Option<u64>,
    eval_data: Option<PathBuf>,
    log: Option<PathBuf>,
    grad_lanes: Option<usize>,
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    // Resolve the data source and its generating spec.
    enum Source {
        Fixed(Vec<(Vec<u32>, Vec<u32>)>),
        Stream(DatasetSpec),
    }
    let (source, data_spec) = match (&args.data, &args.spec) {
        (Some(dir), None) => {
            let (m, records) = datagen::load_dataset(dir)?;
            let pairs = records
                .into_iter()
                .map(|r| (r.input.ids, r.target.ids))
                .collect();
            (Source::Fixed(pairs), m.spec())
        }
        (None, Some(path)) => {
            let spec: DatasetSpec = read_json(path)?;
            spec.validate()?;
            (Source::Stream(spec.clone()), spec)
        }
        _ => unreachable!("clap group enforces exactly one source"),
    };

    let mut train_cfg: TrainConfig = match &args.train {
        Some(path) => read_json(path)?,
        None => TrainConfig::default(),
    };
    if let Some(lr) = args.lr {
        train_cfg.lr_max = lr;
    }
    if let Some(b) = args.batch {
        train_cfg.batch = b;
    }
    if let Some(w) = args.warmup {
        train_cfg.warmup_steps = w;
    }
    if let Some(e) = args.eval_every {
        train_cfg.eval_every = e;
    }
    if let Some(l) = args.grad_lanes {
        train_cfg.grad_lanes = l;
    }
    train_cfg.max_steps = args.max_steps;
    train_cfg.validate()?;

    let model_cfg: ModelConfig = match &args.model {
        Some(path) => read_json(path)?,
        None => {
            let seed = args.seed.ok_or_else(|| {
                CliError::Domain("--seed is required when --model is not given".into())
            })?;
            ModelConfig::desk(
                data_spec.task,
                data_spec.ensemble.n,
                data_spec.input_scheme,
                data_spec.target_scheme,
                seed,
            )
        }
    };
    manifest(serde_json::json!({
        "command": "train", "model": &model_cfg, "train": &train_cfg,
        "data": &data_spec, "checkpoint": &args.checkpoint,
    }));

    let eval_set = match &args.eval_data {
        Some(dir) => {
            let (m, records) = datagen::load_dataset(dir)?;
            Some(EvalSet::from_records(
                m.task,
                &records,
                m.input_scheme,
                m.target_scheme,
                m.ensemble.n,
                ToleranceConfig::default(),
            )?)
        }
        None => None,
    };

    let mut model = Model::init(&model_cfg)?;
    let log_rows: Vec<TrainLogRow> = match source {
        Source::Stream(spec) => {
            let run = oodlab::train_streaming(
                &mut model,
                &train_cfg,
                &spec,
                eval_set.as_ref(),
                None,
            )?;
            if let Some(reason) = run.diverged {
                return Err(CliError::Domain(format!("training diverged: {reason}")));
            }
            println!(
                "trained {} steps ({} samples); final loss {:.4}{}",
                run.steps,
                run.samples_seen,
                run.log.last().map(|r| r.loss).unwrap_or(f64::NAN),
                run.final_accuracy
                    .map(|a| format!("; eval accuracy {a:.3}"))
                    .unwrap_or_default()
            );
            run.log
        }
        Source::Fixed(pairs) => {
            if pairs.is_empty() {
                return Err(CliError::Domain("dataset is empty".into()));
            }
            let mut opt = AdamState::new(&model);
            let mut rows = Vec::new();
            for step in 0..train_cfg.max_steps {
                let start = (step as usize * train_cfg.batch) % pairs.len();
                let batch: Vec<(Vec<u32>, Vec<u32>)> = (0..train_cfg.batch)
                    .map(|k| pairs[(start + k) % pairs.len()].clone())
                    .collect();
                let loss = train_step(&mut model, &mut opt, &batch, step, &train_cfg)?;
                let eval_accuracy = if train_cfg.eval_every > 0
                    && (step + 1) % train_cfg.eval_every == 0
                {
                    eval_set
                        .as_ref()
                        .map(|set| oodlab::accuracy(&oodlab::evaluate_model(&model, set)))
                } else {
                    None
                };
                rows.push(TrainLogRow {
                    step: step + 1,
                    lr: crate::nanoformer::lr_schedule(step, &train_cfg),
                    loss,
                    eval_accuracy,
                });
            }
            println!(
                "trained {} steps over the fixed set; final loss {:.4}",
                train_cfg.max_steps,
                rows.last().map(|r| r.loss).unwrap_or(f64::NAN)
            );
            rows
        }
    };

    save_checkpoint(&model, train_cfg.max_steps, &args.checkpoint)?;
    println!("checkpoint written to {}", args.checkpoint.display());
    if let Some(path) = &args.log {
        let mut text = String::from(TrainLogRow::CSV_HEADER);
        text.push('\n');
        for row in &log_rows {
            text.push_str(&row.to_csv_row());
            text.push('\n');
        }
        std::fs::write(path, text).map_err(io_err(path))?;
    }
    Ok(())
}

fn cmd_eval(data: &Path, checkpoint: &Path, tau: f64, report_csv: Option<&Path>) -> Result<()> {
    let (m, records) = datagen::load_dataset(data)?;
    let (model, step) = load_checkpoint(checkpoint)?;
    let tol = ToleranceConfig::with_tau(tau);
    manifest(serde_json::json!({
        "command": "eval", "data": &m, "checkpoint_step": step, "tau": tau,
    }));
    let set = EvalSet::from_records(
        m.task,
        &records,
        m.input_scheme,
        m.target_scheme,
        m.ensemble.n,
        tol.clone(),
    )?;
    let evals = oodlab::evaluate_model(&model, &set);
    let report = evalkit::verifier_report(&evals, &tol)?;
    print_report(&report);
    if let Some(path) = report_csv {
        let mut text = String::from(EvalRecord::CSV_HEADER);
        text.push('\n');
        for r in &evals {
            text.push_str(&r.to_csv_row());
            text.push('\n');
        }
        std::fs::write(path, text).map_err(io_err(path))?;
        println!("per-example records written to {}", path.display());
    }
    Ok(())
}

fn cmd_verify(eval_csv: &Path, task: TaskKind, tau: f64) -> Result<()> {
    let text = std::fs::read_to_string(eval_csv).map_err(io_err(eval_csv))?;
    manifest(serde_json::json!({ "command": "verify", "task": task, "tau": tau }));
    let mut records = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if k == 0 && line == EvalRecord::CSV_HEADER {
            continue;
        }
        let record = EvalRecord::from_csv_row(line).ok_or_else(|| {
            CliError::Domain(format!("unparseable record at line {}", k + 1))
        })?;
        if record.task != task {
            return Err(CliError::Domain(format!(
                "record at line {} is for task {}, expected {task}",
                k + 1,
                record.task
            )));
        }
        records.push(record);
    }
    let report = evalkit::verifier_report(&records, &ToleranceConfig::with_tau(tau))?;
    print_report(&report);
    Ok(())
}

fn print_report(report: &evalkit::VerifierReport) {
    println!("task: {}  examples: {}", report.task, report.count);
    println!(
        "accuracy: {:.1}%  malformed: {:.1}%",
        100.0 * report.accuracy,
        100.0 * report.malformed_rate
    );
    if let Some(v) = &report.verifier {
        println!(
            "verifier (cond < {}): agreement {:.1}%, precision-on-success {:.1}%, recall-on-failure {:.1}%, recall-on-success {:.1}%",
            v.threshold,
            100.0 * v.agreement,
            100.0 * v.precision_on_success,
            100.0 * v.recall_on_failure,
            100.0 * v.recall_on_success,
        );
    }
    if let (Some(m), Some(s)) = (report.cond_mean_success, report.cond_std_success) {
        println!("cond over successes: mean {m:.3} std {s:.3}");
    }
    if let (Some(m), Some(s)) = (report.cond_mean_failure, report.cond_std_failure) {
        println!("cond over failures: mean {m:.3} std {s:.3}");
    }
    if let Some(r) = report.eig_correct_rate {
        println!("eigenvalues correct (<1% rel err): {:.1}%", 100.0 * r);
    }
    if let Some(r) = report.unit_norm_rate {
        println!("all row/col norms in band: {:.1}%", 100.0 * r);
    }
    for (t, r) in &report.angle_rates {
        println!("successive dots < {t}: {:.1}%", 100.0 * r);
    }
}
