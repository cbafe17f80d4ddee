//! Experiment orchestration: train-on-A/test-on-B grids, learning curves,
//! and report emission.
//!
//! A grid trains one model per training distribution (row) on freshly
//! streamed samples, then scores it on one shared held-out test set per test
//! distribution (column), so columns are comparable across rows. Rows run
//! independently — optionally in parallel — and a grid is a deterministic
//! function of its spec: per-row model seeds and train/test data seeds are
//! all derived from `GridSpec::seed` by fixed mixing.

use crate::codec::{self, TaskKind};
use crate::datagen::{self, DatagenError, DatasetRecord, DatasetSpec};
use crate::ensembles::{condition_stats, EnsembleConfig, EnsembleKind};
use crate::evalkit::{self, EvalError, EvalRecord, ToleranceConfig, VerifierReport};
use crate::linalg::Matrix;
use crate::nanoformer::{
    lr_schedule, train_step, AdamState, Model, ModelConfig, TrainConfig, TrainError, TrainLogRow,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OodError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
    #[error(transparent)]
    Codec(#[from] crate::codec::CodecError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub type Result<T> = std::result::Result<T, OodError>;

/// SplitMix64 round; used to derive independent sub-seeds from one grid seed.
fn mix(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const TRAIN_TAG: u64 = 0x7472_6169;
const TEST_TAG: u64 = 0x7465_7374;
const MODEL_TAG: u64 = 0x6d6f_646c;

/// A held-out test set prepared for repeated evaluation: source ids plus the
/// decoded input matrix per example.
pub struct EvalSet {
    pub task: TaskKind,
    pub tol: ToleranceConfig,
    examples: Vec<(Vec<u32>, Matrix)>,
    tgt_scheme: codec::Scheme,
    n: usize,
}

impl EvalSet {
    pub fn from_records(
        task: TaskKind,
        records: &[DatasetRecord],
        input_scheme: codec::Scheme,
        tgt_scheme: codec::Scheme,
        n: usize,
        tol: ToleranceConfig,
    ) -> Result<EvalSet> {
        let examples = records
            .iter()
            .map(|r| {
                let m = codec::decode_input(&r.input.ids, input_scheme)?;
                Ok((r.input.ids.clone(), m))
            })
            .collect::<Result<_>>()?;
        Ok(EvalSet {
            task,
            tol,
            examples,
            tgt_scheme,
            n,
        })
    }

    pub fn from_spec(spec: &DatasetSpec, tol: ToleranceConfig) -> Result<EvalSet> {
        let records: Vec<DatasetRecord> =
            datagen::stream_records(spec).collect::<datagen::Result<_>>()?;
        EvalSet::from_records(
            spec.task,
            &records,
            spec.input_scheme,
            spec.target_scheme,
            spec.ensemble.n,
            tol,
        )
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Greedy-decodes and scores every example; order-preserving, parallel.
pub fn evaluate_model(model: &Model, set: &EvalSet) -> Vec<EvalRecord> {
    let max_len = codec::target_len(set.task, set.n, set.tgt_scheme) + 1;
    set.examples
        .par_iter()
        .map(|(src, input)| {
            let predicted = model.greedy_decode(src, max_len);
            let decoded = codec::decode_target(set.task, &predicted, set.n, set.tgt_scheme);
            evalkit::eval_prediction(set.task, input, decoded, &set.tol)
        })
        .collect()
}

pub fn accuracy(records: &[EvalRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.success).count() as f64 / records.len() as f64
}

/// Outcome of one streaming training run.
pub struct TrainRun {
    pub log: Vec<TrainLogRow>,
    pub steps: u64,
    pub samples_seen: u64,
    /// First sample count at which held-out accuracy reached the target.
    pub reached_target_at: Option<u64>,
    pub final_accuracy: Option<f64>,
    pub diverged: Option<String>,
}

/// Trains on fresh streamed samples for up to `train.max_steps` steps.
/// With an eval set, held-out accuracy is measured before training, every
/// `train.eval_every` steps, and at the end; with a target, training stops
/// early once the target is reached.
pub fn train_streaming(
    model: &mut Model,
    train: &TrainConfig,
    data: &DatasetSpec,
    eval_set: Option<&EvalSet>,
    target_accuracy: Option<f64>,
) -> Result<TrainRun> {
    train.validate()?;
    let budget_samples = train.max_steps * train.batch as u64;
    let stream_spec = DatasetSpec {
        count: budget_samples.max(1),
        ..data.clone()
    };
    let mut opt = AdamState::new(model);
    let mut log: Vec<TrainLogRow> = Vec::new();
    let mut reached_target_at = None;
    let mut diverged = None;
    let mut steps = 0;
    let mut samples_seen = 0;

    let measure = |model: &Model| eval_set.map(|set| accuracy(&evaluate_model(model, set)));
    let note_target = |acc: Option<f64>, samples: u64, reached: &mut Option<u64>| {
        if reached.is_none() {
            if let (Some(acc), Some(t)) = (acc, target_accuracy) {
                if acc >= t {
                    *reached = Some(samples);
                }
            }
        }
    };

    // Untrained baseline.
    let mut last_acc = measure(model);
    note_target(last_acc, 0, &mut reached_target_at);

    for step in 0..train.max_steps {
        if reached_target_at.is_some() {
            break;
        }
        let start = step * train.batch as u64;
        let mut batch = Vec::with_capacity(train.batch);
        for i in start..start + train.batch as u64 {
            let (record, _) = datagen::example_for_index(&stream_spec, i)?;
            batch.push((record.input.ids, record.target.ids));
        }
        let loss = match train_step(model, &mut opt, &batch, step, train) {
            Ok(l) => l,
            Err(TrainError::Diverged { step, loss }) => {
                diverged = Some(format!("step {step}: loss {loss}"));
                break;
            }
            Err(e) => return Err(e.into()),
        };
        steps = step + 1;
        samples_seen = steps * train.batch as u64;
        let should_eval = train.eval_every > 0 && steps % train.eval_every == 0;
        let acc = if should_eval {
            let a = measure(model);
            note_target(a, samples_seen, &mut reached_target_at);
            last_acc = a;
            a
        } else {
            None
        };
        log.push(TrainLogRow {
            step: steps,
            lr: lr_schedule(step, train),
            loss,
            eval_accuracy: acc,
        });
    }
    if diverged.is_none()
        && reached_target_at.is_none()
        && eval_set.is_some()
        && log.last().map(|r| r.eval_accuracy.is_none()).unwrap_or(false)
    {
        // Final measurement when the last step was not an eval step.
        last_acc = measure(model);
        note_target(last_acc, samples_seen, &mut reached_target_at);
        if let (Some(row), Some(acc)) = (log.last_mut(), last_acc) {
            row.eval_accuracy = Some(acc);
        }
    }
    Ok(TrainRun {
        log,
        steps,
        samples_seen,
        reached_target_at,
        final_accuracy: last_acc,
        diverged,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub task: TaskKind,
    pub train_kinds: Vec<EnsembleKind>,
    pub test_kinds: Vec<EnsembleKind>,
    pub n: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Per-cell training budget in examples (fresh samples).
    pub samples_per_cell: u64,
    pub test_count: u64,
    pub tol: ToleranceConfig,
    pub seed: u64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.train_kinds.is_empty() || self.test_kinds.is_empty() {
            return Err(OodError::InvalidSpec("kind lists must be nonempty".into()));
        }
        if self.test_count < 100 {
            return Err(OodError::InvalidSpec(format!(
                "test_count must be >= 100, got {}",
                self.test_count
            )));
        }
        self.model.validate()?;
        self.train.validate()?;
        Ok(())
    }

    fn train_spec(&self, row: usize) -> DatasetSpec {
        let seed = mix(self.seed, TRAIN_TAG ^ (row as u64 + 1));
        DatasetSpec::new(
            self.task,
            EnsembleConfig::new(self.train_kinds[row], self.n, seed),
            self.model.src_scheme,
            self.model.tgt_scheme,
            1,
            seed,
        )
    }

    fn test_spec(&self, col: usize) -> DatasetSpec {
        let seed = mix(self.seed, TEST_TAG ^ (col as u64 + 1));
        DatasetSpec::new(
            self.task,
            EnsembleConfig::new(self.test_kinds[col], self.n, seed),
            self.model.src_scheme,
            self.model.tgt_scheme,
            self.test_count,
            seed,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub accuracy_pct: f64,
    pub verifier: VerifierReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridReport {
    pub task: TaskKind,
    pub train_kinds: Vec<EnsembleKind>,
    pub test_kinds: Vec<EnsembleKind>,
    /// `cells[row][col]`; `None` marks a failed (diverged) row.
    pub cells: Vec<Vec<Option<CellReport>>>,
    pub row_failures: Vec<Option<String>>,
    /// SHA-256 of each column's rendered test set.
    pub test_set_sha256: Vec<String>,
    /// Wall-clock seconds per row; excluded from serialized reports so that
    /// identical specs produce identical report files.
    #[serde(skip)]
    pub row_seconds: Vec<f64>,
}

impl GridReport {
    pub fn accuracy_matrix(&self) -> Vec<Vec<Option<f64>>> {
        self.cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| c.as_ref().map(|c| c.accuracy_pct))
                    .collect()
            })
            .collect()
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<&CellReport> {
        self.cells[row][col].as_ref()
    }
}

/// Runs the full grid on the current rayon pool (rows in parallel). The
/// report is identical for any worker count.
pub fn run_grid(spec: &GridSpec) -> Result<GridReport> {
    spec.validate()?;

    let test_sets: Vec<(EvalSet, String)> = (0..spec.test_kinds.len())
        .map(|col| -> Result<(EvalSet, String)> {
            let ds = spec.test_spec(col);
            let (text, _) = datagen::render_records(&ds, 0..ds.count)?;
            let sha = format!("{:x}", Sha256::digest(text.as_bytes()));
            Ok((EvalSet::from_spec(&ds, spec.tol.clone())?, sha))
        })
        .collect::<Result<_>>()?;

    let rows: Vec<(Vec<Option<CellReport>>, Option<String>, f64)> = (0..spec.train_kinds.len())
        .into_par_iter()
        .map(|row| -> Result<(Vec<Option<CellReport>>, Option<String>, f64)> {
            let started = std::time::Instant::now();
            let model_cfg = ModelConfig {
                seed: mix(spec.seed, MODEL_TAG ^ (row as u64 + 1)),
                ..spec.model.clone()
            };
            let mut model = Model::init(&model_cfg)?;
            let train = TrainConfig {
                max_steps: spec.samples_per_cell.div_ceil(spec.train.batch as u64),
                eval_every: 0,
                ..spec.train.clone()
            };
            let outcome = train_streaming(&mut model, &train, &spec.train_spec(row), None, None)?;
            if let Some(reason) = outcome.diverged {
                return Ok((
                    vec![None; spec.test_kinds.len()],
                    Some(reason),
                    started.elapsed().as_secs_f64(),
                ));
            }
            let mut cells = Vec::with_capacity(spec.test_kinds.len());
            for (set, _) in &test_sets {
                let records = evaluate_model(&model, set);
                let verifier = evalkit::verifier_report(&records, &spec.tol)?;
                cells.push(Some(CellReport {
                    accuracy_pct: 100.0 * accuracy(&records),
                    verifier,
                }));
            }
            Ok((cells, None, started.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    let mut row_failures = Vec::new();
    let mut row_seconds = Vec::new();
    for (c, f, s) in rows {
        cells.push(c);
        row_failures.push(f);
        row_seconds.push(s);
    }
    Ok(GridReport {
        task: spec.task,
        train_kinds: spec.train_kinds.clone(),
        test_kinds: spec.test_kinds.clone(),
        cells,
        row_failures,
        test_set_sha256: test_sets.into_iter().map(|(_, sha)| sha).collect(),
        row_seconds,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveSpec {
    pub task: TaskKind,
    pub train_kind: EnsembleKind,
    pub eval_kind: EnsembleKind,
    pub n: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub target_accuracy: f64,
    pub test_count: u64,
    pub tol: ToleranceConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveResult {
    /// First sample count at which held-out accuracy reached the target.
    pub reached_at_samples: Option<u64>,
    pub final_accuracy: f64,
    pub budget_samples: u64,
    /// (samples seen, accuracy) at every evaluation point.
    pub history: Vec<(u64, f64)>,
}

/// Samples-to-target: train on `train_kind`, periodically evaluate on a
/// held-out `eval_kind` set, and report the first sample count reaching
/// `target_accuracy` — or "not reached" with the final accuracy.
pub fn learning_curve(spec: &CurveSpec) -> Result<CurveResult> {
    let model_cfg = ModelConfig {
        seed: mix(spec.seed, MODEL_TAG),
        ..spec.model.clone()
    };
    let mut model = Model::init(&model_cfg)?;
    let train_seed = mix(spec.seed, TRAIN_TAG);
    let data = DatasetSpec::new(
        spec.task,
        EnsembleConfig::new(spec.train_kind, spec.n, train_seed),
        spec.model.src_scheme,
        spec.model.tgt_scheme,
        1,
        train_seed,
    );
    let test_seed = mix(spec.seed, TEST_TAG);
    let eval_spec = DatasetSpec::new(
        spec.task,
        EnsembleConfig::new(spec.eval_kind, spec.n, test_seed),
        spec.model.src_scheme,
        spec.model.tgt_scheme,
        spec.test_count,
        test_seed,
    );
    let eval_set = EvalSet::from_spec(&eval_spec, spec.tol.clone())?;

    let run = train_streaming(
        &mut model,
        &spec.train,
        &data,
        Some(&eval_set),
        Some(spec.target_accuracy),
    )?;
    let mut history = Vec::new();
    if let Some(first) = run.log.first() {
        let _ = first;
    }
    // Baseline (samples = 0) is implicit in reached_target_at when the
    // untrained model already meets the target.
    if run.reached_target_at == Some(0) {
        history.push((0, run.final_accuracy.unwrap_or(0.0)));
    }
    for row in &run.log {
        if let Some(acc) = row.eval_accuracy {
            history.push((row.step * spec.train.batch as u64, acc));
        }
    }
    Ok(CurveResult {
        reached_at_samples: run.reached_target_at,
        final_accuracy: run.final_accuracy.unwrap_or(0.0),
        budget_samples: spec.train.max_steps * spec.train.batch as u64,
        history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(format!("unknown table format `{other}` (csv|markdown)")),
        }
    }
}

fn render_table(
    corner: &str,
    col_names: &[String],
    row_names: &[String],
    cells: &[Vec<Option<String>>],
    format: TableFormat,
) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(corner);
            for c in col_names {
                out.push(',');
                out.push_str(c);
            }
            out.push('\n');
            for (r, name) in row_names.iter().enumerate() {
                out.push_str(name);
                for cell in &cells[r] {
                    out.push(',');
                    out.push_str(cell.as_deref().unwrap_or("—"));
                }
                out.push('\n');
            }
        }
        TableFormat::Markdown => {
            out.push_str(&format!("| {corner} |"));
            for c in col_names {
                out.push_str(&format!(" {c} |"));
            }
            out.push('\n');
            out.push_str("|---|");
            for _ in col_names {
                out.push_str("---|");
            }
            out.push('\n');
            for (r, name) in row_names.iter().enumerate() {
                out.push_str(&format!("| {name} |"));
                for cell in &cells[r] {
                    out.push_str(&format!(" {} |", cell.as_deref().unwrap_or("—")));
                }
                out.push('\n');
            }
        }
    }
    out
}

/// Serializes the accuracy matrix: integer percentages in markdown (table
/// style of the OOD studies), full precision in CSV; failed cells render
/// as "—".
pub fn emit_table(report: &GridReport, format: TableFormat) -> String {
    let col_names: Vec<String> = report.test_kinds.iter().map(|k| k.to_string()).collect();
    let row_names: Vec<String> = report.train_kinds.iter().map(|k| k.to_string()).collect();
    let cells: Vec<Vec<Option<String>>> = report
        .accuracy_matrix()
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| {
                    c.map(|acc| match format {
                        TableFormat::Csv => format!("{acc}"),
                        TableFormat::Markdown => format!("{}", acc.round() as i64),
                    })
                })
                .collect()
        })
        .collect();
    render_table("train \\ test", &col_names, &row_names, &cells, format)
}

/// Condition-number quantile table over several ensembles (median / Q3 / P90
/// per kind) — the rows are directly comparable to the reference statistics.
pub fn condition_table(
    kinds: &[EnsembleKind],
    n: usize,
    count: u64,
    seed: u64,
    sigma: Option<f64>,
    format: TableFormat,
) -> std::result::Result<String, crate::ensembles::EnsembleError> {
    let col_names = vec!["median".to_string(), "q3".to_string(), "p90".to_string()];
    let mut row_names = Vec::new();
    let mut cells = Vec::new();
    for &kind in kinds {
        let mut cfg = EnsembleConfig::new(kind, n, seed);
        if let Some(s) = sigma {
            cfg.sigma = s;
        }
        let q = condition_stats(&cfg, count)?;
        row_names.push(kind.to_string());
        cells.push(vec![
            Some(format!("{:.1}", q.median)),
            Some(format!("{:.1}", q.q3)),
            Some(format!("{:.1}", q.p90)),
        ]);
    }
    Ok(render_table("ensemble", &col_names, &row_names, &cells, format))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Scheme;

    fn micro_grid_spec(seed: u64) -> GridSpec {
        let model = ModelConfig {
            enc_layers: 1,
            dec_layers: 1,
            dim: 16,
            heads: 2,
            ffn_mult: 2,
            src_scheme: Scheme::P1000,
            tgt_scheme: Scheme::P1000,
            max_src_len: 13,
            max_tgt_len: 8,
            seed,
        };
        GridSpec {
            task: TaskKind::Eigenvalues,
            train_kinds: vec![EnsembleKind::Semicircle, EnsembleKind::AbsSemicircle],
            test_kinds: vec![EnsembleKind::Semicircle, EnsembleKind::AbsSemicircle],
            n: 2,
            model,
            train: TrainConfig {
                lr_max: 1e-3,
                batch: 8,
                warmup_steps: 1,
                eval_every: 0,
                grad_lanes: 1,
                ..TrainConfig::default()
            },
            samples_per_cell: 64,
            test_count: 100,
            tol: ToleranceConfig::default(),
            seed,
        }
    }

    #[test]
    fn micro_grid_shape_and_determinism() {
        let spec = micro_grid_spec(5);
        let a = run_grid(&spec).unwrap();
        assert_eq!(a.cells.len(), 2);
        assert_eq!(a.cells[0].len(), 2);
        let b = run_grid(&spec).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(emit_table(&a, TableFormat::Csv), emit_table(&b, TableFormat::Csv));
    }

    #[test]
    fn grid_cells_are_row_independent() {
        let full = run_grid(&micro_grid_spec(9)).unwrap();
        let mut one_row = micro_grid_spec(9);
        one_row.train_kinds = vec![EnsembleKind::Semicircle];
        let partial = run_grid(&one_row).unwrap();
        assert_eq!(
            serde_json::to_string(&full.cells[0]).unwrap(),
            serde_json::to_string(&partial.cells[0]).unwrap()
        );
    }

    #[test]
    fn table_emission_layout() {
        let spec = micro_grid_spec(3);
        let mut report = GridReport {
            task: spec.task,
            train_kinds: spec.train_kinds.clone(),
            test_kinds: spec.test_kinds.clone(),
            cells: vec![vec![None, None], vec![None, None]],
            row_failures: vec![None, None],
            test_set_sha256: vec!["a".into(), "b".into()],
            row_seconds: vec![0.0, 0.0],
        };
        report.cells[0][0] = Some(CellReport {
            accuracy_pct: 87.4,
            verifier: crate::evalkit::verifier_report(
                &[crate::evalkit::EvalRecord::malformed(TaskKind::Eigenvalues)],
                &spec.tol,
            )
            .unwrap(),
        });
        let csv = emit_table(&report, TableFormat::Csv);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "train \\ test,semicircle,abs_semicircle"
        );
        assert_eq!(lines.next().unwrap(), "semicircle,87.4,—");
        assert_eq!(lines.next().unwrap(), "abs_semicircle,—,—");
        let md = emit_table(&report, TableFormat::Markdown);
        assert!(md.contains("| semicircle | 87 | — |"), "{md}");
    }

    #[test]
    fn curve_target_zero_reached_immediately() {
        let spec = CurveSpec {
            task: TaskKind::Eigenvalues,
            train_kind: EnsembleKind::Semicircle,
            eval_kind: EnsembleKind::Semicircle,
            n: 2,
            model: micro_grid_spec(0).model,
            train: TrainConfig {
                max_steps: 2,
                eval_every: 1,
                batch: 4,
                warmup_steps: 1,
                ..TrainConfig::default()
            },
            target_accuracy: 0.0,
            test_count: 100,
            tol: ToleranceConfig::default(),
            seed: 11,
        };
        let result = learning_curve(&spec).unwrap();
        assert_eq!(result.reached_at_samples, Some(0));
    }

    #[test]
    fn curve_unreachable_target_reports_budget() {
        let spec = CurveSpec {
            task: TaskKind::Eigenvalues,
            train_kind: EnsembleKind::Semicircle,
            eval_kind: EnsembleKind::Semicircle,
            n: 2,
            model: micro_grid_spec(1).model,
            train: TrainConfig {
                max_steps: 3,
                eval_every: 2,
                batch: 4,
                warmup_steps: 1,
                ..TrainConfig::default()
            },
            target_accuracy: 1.1, // impossible
            test_count: 100,
            tol: ToleranceConfig::default(),
            seed: 12,
        };
        let result = learning_curve(&spec).unwrap();
        assert_eq!(result.reached_at_samples, None);
        assert_eq!(result.budget_samples, 12);
        assert!(!result.history.is_empty());
    }

    #[test]
    fn condition_table_has_expected_rows() {
        let text = condition_table(
            &[EnsembleKind::Uniform, EnsembleKind::Laplace],
            5,
            1000,
            4,
            None,
            TableFormat::Csv,
        )
        .unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("ensemble,median,q3,p90"));
        assert!(lines[1].starts_with("uniform,"));
        assert!(lines[2].starts_with("laplace,"));
    }
}
