//! Task metrics, learned-property probes, and failure-predicting verifiers.
//!
//! Accuracy is residual-based: a prediction succeeds when its relative L1
//! residual is strictly below the tolerance `tau` (5% by default). Beyond
//! accuracy, per-example records capture the properties a model may have
//! learned even when it fails — eigenvalue agreement, row/column norms,
//! near-orthogonality of successive rows and columns — and the two
//! condition-number decision rules:
//!
//! - diagonalization: predict success iff `cond(H) < 1.045` (from the output);
//! - inversion: predict success iff `cond(M) < 62` (from the input alone).
//!
//! Malformed model outputs (wrong token count, bad token category) are scored
//! as failures with `malformed = true`, never skipped: accuracy denominators
//! include every test case.

use crate::codec::{CodecError, Solution, TaskKind};
use crate::linalg::{self, diag_residual, eig_sym, rel_l1, LinalgError, Matrix, Spectrum, SymMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction and truth have different lengths: {pred} vs {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("shape mismatch: expected side {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("no records to aggregate")]
    EmptyReport,
    #[error("records mix tasks: {a} and {b}")]
    MixedTasks { a: TaskKind, b: TaskKind },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Thresholds for metrics and verifiers. Defaults are the reference values;
/// everything is overridable per experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative residual tolerance for task success.
    pub tau: f64,
    /// Row/column L2 norms counted as "unit" when inside this band.
    pub norm_band: (f64, f64),
    /// Successive-pair dot-product thresholds (small-angle radians).
    pub angle_thresholds: Vec<f64>,
    /// Verifier rule for diagonalization: success iff cond(H) below this.
    pub cond_h_threshold: f64,
    /// Verifier rule for inversion: success iff cond(M) below this.
    pub cond_m_threshold: f64,
    /// "Eigenvalues correct" when their relative L1 error is below this.
    pub eig_rel_threshold: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            tau: 0.05,
            norm_band: (0.99, 1.01),
            angle_thresholds: vec![0.1, 0.05, 0.03],
            cond_h_threshold: 1.045,
            cond_m_threshold: 62.0,
            eig_rel_threshold: 0.01,
        }
    }
}

impl ToleranceConfig {
    pub fn with_tau(tau: f64) -> Self {
        Self {
            tau,
            ..Self::default()
        }
    }
}

/// Per-example statistics; fields are `None` where the task does not define
/// them or the statistic could not be computed (e.g. `inv_distance` when the
/// reference inverse does not exist).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalAux {
    pub cond_h: Option<f64>,
    pub cond_m: Option<f64>,
    pub max_dot: Option<f64>,
    pub eig_rel_err: Option<f64>,
    pub min_norm: Option<f64>,
    pub max_norm: Option<f64>,
    pub inv_distance: Option<f64>,
    pub malformed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub task: TaskKind,
    pub success: bool,
    pub residual: f64,
    pub aux: EvalAux,
}

impl EvalRecord {
    /// A failure caused by an undecodable or ill-shaped model output.
    pub fn malformed(task: TaskKind) -> Self {
        EvalRecord {
            task,
            success: false,
            residual: f64::INFINITY,
            aux: EvalAux {
                malformed: true,
                ..EvalAux::default()
            },
        }
    }

    /// Fixed CSV column order; the header for serialized record streams.
    pub const CSV_HEADER: &'static str =
        "task,success,residual,malformed,cond_h,cond_m,max_dot,eig_rel_err,min_norm,max_norm,inv_distance";

    pub fn to_csv_row(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| format!("{x}")).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.task,
            self.success,
            self.residual,
            self.aux.malformed,
            opt(self.aux.cond_h),
            opt(self.aux.cond_m),
            opt(self.aux.max_dot),
            opt(self.aux.eig_rel_err),
            opt(self.aux.min_norm),
            opt(self.aux.max_norm),
            opt(self.aux.inv_distance),
        )
    }

    pub fn from_csv_row(row: &str) -> Option<EvalRecord> {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 11 {
            return None;
        }
        fn opt(s: &str) -> Option<f64> {
            if s.is_empty() {
                None
            } else {
                s.parse().ok()
            }
        }
        Some(EvalRecord {
            task: fields[0].parse().ok()?,
            success: fields[1].parse().ok()?,
            residual: fields[2].parse().ok()?,
            aux: EvalAux {
                malformed: fields[3].parse().ok()?,
                cond_h: opt(fields[4]),
                cond_m: opt(fields[5]),
                max_dot: opt(fields[6]),
                eig_rel_err: opt(fields[7]),
                min_norm: opt(fields[8]),
                max_norm: opt(fields[9]),
                inv_distance: opt(fields[10]),
            },
        })
    }
}

/// Eigenvalue-task metric: relative L1 distance to the true spectrum.
pub fn eval_eigenvalues(pred: &[f64], truth: &Spectrum, tol: &ToleranceConfig) -> Result<EvalRecord> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    let residual = rel_l1(pred, truth.values())?;
    Ok(EvalRecord {
        task: TaskKind::Eigenvalues,
        success: residual < tol.tau,
        residual,
        aux: EvalAux {
            eig_rel_err: Some(residual),
            ..EvalAux::default()
        },
    })
}

fn row_col_norms(h: &Matrix) -> (f64, f64) {
    let n = h.n();
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for i in 0..n {
        let r: f64 = h.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        let c: f64 = (0..n).map(|k| h.get(k, i) * h.get(k, i)).sum::<f64>().sqrt();
        min = min.min(r).min(c);
        max = max.max(r).max(c);
    }
    (min, max)
}

/// Largest |dot product| between successive normalized rows and successive
/// normalized columns — 2(n−1) pairs, no wrap-around. For near-orthogonal
/// bases this approximates the angular deviation from π/2.
pub fn max_successive_dot(h: &Matrix) -> Result<f64> {
    let n = h.n();
    let mut max = 0.0f64;
    let normalize = |v: &[f64], index: usize| -> Result<Vec<f64>> {
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(EvalError::Linalg(LinalgError::ZeroVector { index }));
        }
        Ok(v.iter().map(|x| x / norm).collect())
    };
    for i in 0..n.saturating_sub(1) {
        let a = normalize(h.row(i), i)?;
        let b = normalize(h.row(i + 1), i + 1)?;
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        max = max.max(dot.abs());
        let a = normalize(&h.column(i), i)?;
        let b = normalize(&h.column(i + 1), i + 1)?;
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        max = max.max(dot.abs());
    }
    Ok(max)
}

/// Diagonalization metric: `‖HᵀMH − diag(Λ)‖₁ / ‖Λ‖₁` on the *predicted*
/// decomposition, plus the learned-property statistics of the predicted basis.
pub fn eval_diagonalization(
    m: &SymMatrix,
    pred_values: &[f64],
    pred_basis: &Matrix,
    tol: &ToleranceConfig,
) -> Result<EvalRecord> {
    let n = m.n();
    if pred_values.len() != n || pred_basis.n() != n {
        return Err(EvalError::ShapeMismatch {
            expected: n,
            got: pred_basis.n(),
        });
    }
    let residual = diag_residual(m.as_matrix(), pred_values, pred_basis)?;
    let (min_norm, max_norm) = row_col_norms(pred_basis);
    let cond_h = linalg::cond(pred_basis).ok();
    let max_dot = max_successive_dot(pred_basis).ok();
    let eig_rel_err = eig_sym(m)
        .ok()
        .and_then(|eig| rel_l1(pred_values, eig.spectrum.values()).ok());
    Ok(EvalRecord {
        task: TaskKind::Diagonalization,
        success: residual < tol.tau,
        residual,
        aux: EvalAux {
            cond_h,
            max_dot,
            eig_rel_err,
            min_norm: Some(min_norm),
            max_norm: Some(max_norm),
            ..EvalAux::default()
        },
    })
}

/// Inversion metric: `‖PM − I‖₁ / ‖I‖₁` (with ‖I‖₁ = n), plus the direct
/// distance to the true inverse when it exists.
pub fn eval_inversion(m: &Matrix, pred: &Matrix, tol: &ToleranceConfig) -> Result<EvalRecord> {
    let n = m.n();
    if pred.n() != n {
        return Err(EvalError::ShapeMismatch {
            expected: n,
            got: pred.n(),
        });
    }
    let pm = pred.matmul(m);
    let residual = rel_l1(pm.entries(), Matrix::identity(n).entries())?;
    let inv_distance = linalg::invert(m)
        .ok()
        .and_then(|inv| rel_l1(pred.entries(), inv.entries()).ok());
    let cond_m = linalg::cond(m).ok();
    Ok(EvalRecord {
        task: TaskKind::Inversion,
        success: residual < tol.tau,
        residual,
        aux: EvalAux {
            cond_m,
            inv_distance,
            ..EvalAux::default()
        },
    })
}

/// What the verifier looks at: the predicted basis (diagonalization) or the
/// problem input (inversion — no model run needed).
pub enum VerifierInput<'a> {
    DiagonalizationBasis(&'a Matrix),
    InversionInput(&'a Matrix),
}

/// Condition-number decision rule; strictly below the threshold predicts
/// success. A failed condition-number computation predicts failure.
pub fn predict_success(input: VerifierInput<'_>, tol: &ToleranceConfig) -> bool {
    match input {
        VerifierInput::DiagonalizationBasis(h) => linalg::cond(h)
            .map(|c| c < tol.cond_h_threshold)
            .unwrap_or(false),
        VerifierInput::InversionInput(m) => linalg::cond(m)
            .map(|c| c < tol.cond_m_threshold)
            .unwrap_or(false),
    }
}

/// Scores a decoded model output against its problem input. Decode failures
/// and shape mismatches become malformed-failure records; for eigenvalue and
/// diagonalization tasks the input is mirrored from its upper triangle. The
/// input condition number is recorded on every record.
pub fn eval_prediction(
    task: TaskKind,
    input: &Matrix,
    decoded: std::result::Result<Solution, CodecError>,
    tol: &ToleranceConfig,
) -> EvalRecord {
    let solution = match decoded {
        Ok(s) => s,
        Err(_) => return EvalRecord::malformed(task),
    };
    let cond_m = linalg::cond(input).ok();
    let mut record = match (task, solution) {
        (TaskKind::Eigenvalues, Solution::Eigenvalues(pred)) => {
            let sym = SymMatrix::mirror_upper(input);
            let truth = match eig_sym(&sym) {
                Ok(eig) => eig.spectrum,
                Err(_) => return EvalRecord::malformed(task),
            };
            match eval_eigenvalues(&pred, &truth, tol) {
                Ok(r) => r,
                Err(_) => return EvalRecord::malformed(task),
            }
        }
        (TaskKind::Diagonalization, Solution::Diagonalization { values, basis }) => {
            let sym = SymMatrix::mirror_upper(input);
            match eval_diagonalization(&sym, &values, &basis, tol) {
                Ok(r) => r,
                Err(_) => return EvalRecord::malformed(task),
            }
        }
        (TaskKind::Inversion, Solution::Inversion(pred)) => {
            match eval_inversion(input, &pred, tol) {
                Ok(r) => r,
                Err(_) => return EvalRecord::malformed(task),
            }
        }
        _ => return EvalRecord::malformed(task),
    };
    record.aux.cond_m = cond_m;
    record
}

/// Verifier confusion statistics over one record set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifierStats {
    pub threshold: f64,
    /// Fraction of records where the rule agrees with the observed outcome.
    pub agreement: f64,
    /// P(actual success | predicted success); 1.0 when nothing is predicted
    /// successful.
    pub precision_on_success: f64,
    /// P(predicted failure | actual failure); 1.0 when there are no failures.
    pub recall_on_failure: f64,
    /// P(predicted success | actual success); 1.0 when there are no successes.
    pub recall_on_success: f64,
}

/// Aggregate over a single-task record stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifierReport {
    pub task: TaskKind,
    pub count: usize,
    pub accuracy: f64,
    pub malformed_rate: f64,
    pub verifier: Option<VerifierStats>,
    pub cond_mean_success: Option<f64>,
    pub cond_std_success: Option<f64>,
    pub cond_mean_failure: Option<f64>,
    pub cond_std_failure: Option<f64>,
    /// Fraction with eigenvalue error below `eig_rel_threshold`.
    pub eig_correct_rate: Option<f64>,
    /// Fraction whose row/column norms all sit inside `norm_band`.
    pub unit_norm_rate: Option<f64>,
    /// (threshold, fraction with max successive dot below it).
    pub angle_rates: Vec<(f64, f64)>,
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

fn rate(numer: usize, denom: usize) -> f64 {
    if denom == 0 {
        1.0
    } else {
        numer as f64 / denom as f64
    }
}

/// Builds the aggregate report. The verifier column is cond(H) for
/// diagonalization and cond(M) for inversion; the eigenvalue task has no
/// condition-number rule. Records missing the verifier statistic are treated
/// as predicted failures (the rule cannot certify them).
pub fn verifier_report(records: &[EvalRecord], tol: &ToleranceConfig) -> Result<VerifierReport> {
    let first = records.first().ok_or(EvalError::EmptyReport)?;
    let task = first.task;
    if let Some(other) = records.iter().find(|r| r.task != task) {
        return Err(EvalError::MixedTasks {
            a: task,
            b: other.task,
        });
    }
    let count = records.len();
    let successes = records.iter().filter(|r| r.success).count();
    let malformed = records.iter().filter(|r| r.aux.malformed).count();

    let cond_of = |r: &EvalRecord| -> Option<f64> {
        match task {
            TaskKind::Diagonalization => r.aux.cond_h,
            TaskKind::Inversion | TaskKind::Eigenvalues => r.aux.cond_m,
        }
    };
    let threshold = match task {
        TaskKind::Diagonalization => Some(tol.cond_h_threshold),
        TaskKind::Inversion => Some(tol.cond_m_threshold),
        TaskKind::Eigenvalues => None,
    };

    let verifier = threshold.map(|threshold| {
        let predicted: Vec<bool> = records
            .iter()
            .map(|r| cond_of(r).map(|c| c < threshold).unwrap_or(false))
            .collect();
        let agree = records
            .iter()
            .zip(&predicted)
            .filter(|(r, &p)| r.success == p)
            .count();
        let pred_pos = predicted.iter().filter(|&&p| p).count();
        let true_pos = records
            .iter()
            .zip(&predicted)
            .filter(|(r, &p)| p && r.success)
            .count();
        let failures = count - successes;
        let pred_neg_on_failure = records
            .iter()
            .zip(&predicted)
            .filter(|(r, &p)| !p && !r.success)
            .count();
        VerifierStats {
            threshold,
            agreement: rate(agree, count),
            precision_on_success: rate(true_pos, pred_pos),
            recall_on_failure: rate(pred_neg_on_failure, failures),
            recall_on_success: rate(true_pos, successes),
        }
    });

    let cond_success: Vec<f64> = records
        .iter()
        .filter(|r| r.success)
        .filter_map(cond_of)
        .filter(|c| c.is_finite())
        .collect();
    let cond_failure: Vec<f64> = records
        .iter()
        .filter(|r| !r.success)
        .filter_map(cond_of)
        .filter(|c| c.is_finite())
        .collect();
    let (cond_mean_success, cond_std_success) = mean_std(&cond_success).unzip();
    let (cond_mean_failure, cond_std_failure) = mean_std(&cond_failure).unzip();

    let with_eig = records.iter().filter(|r| r.aux.eig_rel_err.is_some()).count();
    let eig_correct_rate = (with_eig > 0).then(|| {
        let ok = records
            .iter()
            .filter(|r| matches!(r.aux.eig_rel_err, Some(e) if e < tol.eig_rel_threshold))
            .count();
        ok as f64 / count as f64
    });

    let with_norms = records
        .iter()
        .filter(|r| r.aux.min_norm.is_some() && r.aux.max_norm.is_some())
        .count();
    let unit_norm_rate = (with_norms > 0).then(|| {
        let ok = records
            .iter()
            .filter(|r| {
                matches!((r.aux.min_norm, r.aux.max_norm), (Some(lo), Some(hi))
                    if lo >= tol.norm_band.0 && hi <= tol.norm_band.1)
            })
            .count();
        ok as f64 / count as f64
    });

    let with_dots = records.iter().filter(|r| r.aux.max_dot.is_some()).count();
    let angle_rates = if with_dots > 0 {
        tol.angle_thresholds
            .iter()
            .map(|&t| {
                let ok = records
                    .iter()
                    .filter(|r| matches!(r.aux.max_dot, Some(d) if d < t))
                    .count();
                (t, ok as f64 / count as f64)
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(VerifierReport {
        task,
        count,
        accuracy: successes as f64 / count as f64,
        malformed_rate: malformed as f64 / count as f64,
        verifier,
        cond_mean_success,
        cond_std_success,
        cond_mean_failure,
        cond_std_failure,
        eig_correct_rate,
        unit_norm_rate,
        angle_rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec;
    use crate::ensembles::{sample_matrix, EnsembleConfig, EnsembleKind};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn draw_sym(seed: u64, i: u64) -> SymMatrix {
        let cfg = EnsembleConfig::new(EnsembleKind::Semicircle, 5, seed);
        sample_matrix(&cfg, i).unwrap().symmetric().unwrap().clone()
    }

    #[test]
    fn eigenvalues_exact_and_scaled() {
        let truth = Spectrum::new(vec![4.0, 2.0, 1.0]).unwrap();
        let r = eval_eigenvalues(truth.values(), &truth, &tol()).unwrap();
        assert!(r.success);
        assert_eq!(r.residual, 0.0);

        // 1.05x scaling sits exactly at tau: strict inequality fails it.
        let pred: Vec<f64> = truth.values().iter().map(|v| v * 1.05).collect();
        let r = eval_eigenvalues(&pred, &truth, &tol()).unwrap();
        assert!((r.residual - 0.05).abs() < 1e-12);
        assert!(!r.success);

        // 0.9% error counts as "eigenvalues correct".
        let pred: Vec<f64> = truth.values().iter().map(|v| v * 1.009).collect();
        let r = eval_eigenvalues(&pred, &truth, &tol()).unwrap();
        assert!(r.success);
        assert!(r.aux.eig_rel_err.unwrap() < 0.01);
    }

    #[test]
    fn diagonalization_on_exact_solver_output_succeeds() {
        let m = draw_sym(3, 0);
        let eig = eig_sym(&m).unwrap();
        let r = eval_diagonalization(&m, eig.spectrum.values(), &eig.basis, &tol()).unwrap();
        assert!(r.success);
        assert!(r.residual < 1e-9);
        assert!(r.aux.cond_h.unwrap() < 1.0 + 1e-8);
        assert!(r.aux.max_dot.unwrap() < 1e-9);
        let (lo, hi) = (r.aux.min_norm.unwrap(), r.aux.max_norm.unwrap());
        assert!(lo > 0.99 && hi < 1.01);
        assert!(r.aux.eig_rel_err.unwrap() < 1e-9);
    }

    #[test]
    fn diagonalization_identity_basis_fails_on_nondiagonal_input() {
        let m = draw_sym(4, 1);
        let diag: Vec<f64> = (0..5).map(|i| m.get(i, i)).collect();
        let r = eval_diagonalization(&m, &diag, &Matrix::identity(5), &tol()).unwrap();
        assert!(!r.success, "off-diagonal mass must fail, residual {}", r.residual);
    }

    #[test]
    fn scaled_column_breaks_the_norm_band() {
        let m = draw_sym(5, 2);
        let eig = eig_sym(&m).unwrap();
        let mut bad = eig.basis.clone();
        for i in 0..5 {
            bad.set(i, 2, bad.get(i, 2) * 1.2);
        }
        let r = eval_diagonalization(&m, eig.spectrum.values(), &bad, &tol()).unwrap();
        assert!((r.aux.max_norm.unwrap() - 1.2).abs() < 1e-9);
        assert!(r.aux.max_norm.unwrap() > 1.01);
    }

    #[test]
    fn inversion_metrics() {
        let m = Matrix::from_diag(&[2.0, 4.0]);
        let p = linalg::invert(&m).unwrap();
        let r = eval_inversion(&m, &p, &tol()).unwrap();
        assert!(r.success);
        assert!(r.residual < 1e-12);

        // 1.05x the inverse: both metrics land exactly on 0.05.
        let p2 = p.scale(1.05);
        let r = eval_inversion(&m, &p2, &tol()).unwrap();
        assert!((r.residual - 0.05).abs() < 1e-12);
        assert!((r.aux.inv_distance.unwrap() - 0.05).abs() < 1e-12);
        assert!(!r.success);
    }

    #[test]
    fn inversion_conditioning_dominates() {
        // m = diag(1, 1e-6), P = diag(1, 0): residual 1/2, distance ~1.
        let m = Matrix::from_diag(&[1.0, 1e-6]);
        let p = Matrix::from_diag(&[1.0, 0.0]);
        let r = eval_inversion(&m, &p, &tol()).unwrap();
        assert!((r.residual - 0.5).abs() < 1e-12);
        assert!((r.aux.inv_distance.unwrap() - 1e6 / (1e6 + 1.0)).abs() < 1e-9);
        assert!(!r.success);
        assert!(r.aux.cond_m.unwrap() > 62.0);
    }

    #[test]
    fn successive_dot_examples() {
        assert_eq!(max_successive_dot(&Matrix::identity(4)).unwrap(), 0.0);

        let angle = std::f64::consts::FRAC_PI_2 - 0.03;
        let h = Matrix::from_rows(&[&[1.0, 0.0], &[angle.cos(), angle.sin()]]).unwrap();
        let d = max_successive_dot(&h).unwrap();
        assert!((d - 0.03f64.sin()).abs() < 1e-9, "dot {d}");

        let zero = Matrix::zeros(2);
        assert!(max_successive_dot(&zero).is_err());
    }

    #[test]
    fn rotation_perturbation_grows_monotonically_and_keeps_cond() {
        let m = draw_sym(6, 3);
        let eig = eig_sym(&m).unwrap();
        let mut last = -1.0;
        for k in 0..7 {
            let theta = 0.3 * k as f64 / 6.0;
            let mut rot = Matrix::identity(5);
            rot.set(0, 0, theta.cos());
            rot.set(0, 1, -theta.sin());
            rot.set(1, 0, theta.sin());
            rot.set(1, 1, theta.cos());
            let h = eig.basis.matmul(&rot);
            let d = max_successive_dot(&h).unwrap();
            assert!(d >= last - 1e-12, "theta {theta}: {d} < {last}");
            last = d;
            let c = linalg::cond(&h).unwrap();
            assert!((c - 1.0).abs() < 1e-7, "rotations preserve cond, got {c}");
        }
    }

    #[test]
    fn predict_success_thresholds() {
        let t = tol();
        let ortho = Matrix::identity(5);
        assert!(predict_success(VerifierInput::DiagonalizationBasis(&ortho), &t));
        // cond 1.28 — the typical failing basis.
        let skew = Matrix::from_diag(&[1.28, 1.0, 1.0, 1.0, 1.0]);
        assert!(!predict_success(VerifierInput::DiagonalizationBasis(&skew), &t));
        let good = Matrix::from_diag(&[15.8, 1.0]);
        assert!(predict_success(VerifierInput::InversionInput(&good), &t));
        let bad = Matrix::from_diag(&[640.5, 1.0]);
        assert!(!predict_success(VerifierInput::InversionInput(&bad), &t));
    }

    #[test]
    fn eval_prediction_handles_malformed_and_mismatched() {
        let input = Matrix::identity(2);
        let err = codec::CodecError::Decode {
            position: 0,
            reason: "bad".into(),
        };
        let r = eval_prediction(TaskKind::Eigenvalues, &input, Err(err), &tol());
        assert!(!r.success && r.aux.malformed);

        let wrong = Solution::Inversion(Matrix::identity(2));
        let r = eval_prediction(TaskKind::Eigenvalues, &input, Ok(wrong), &tol());
        assert!(!r.success && r.aux.malformed);

        let right = Solution::Eigenvalues(vec![1.0, 1.0]);
        let r = eval_prediction(TaskKind::Eigenvalues, &input, Ok(right), &tol());
        assert!(r.success && !r.aux.malformed);
        assert!(r.aux.cond_m.is_some());
    }

    #[test]
    fn report_on_constructed_mix() {
        // 90 successes at cond 1.01, 10 failures at cond 1.28: the rule
        // separates them perfectly.
        let mut records = Vec::new();
        for k in 0..100 {
            let success = k < 90;
            records.push(EvalRecord {
                task: TaskKind::Diagonalization,
                success,
                residual: if success { 0.001 } else { 0.5 },
                aux: EvalAux {
                    cond_h: Some(if success { 1.01 } else { 1.28 }),
                    ..EvalAux::default()
                },
            });
        }
        let report = verifier_report(&records, &tol()).unwrap();
        assert_eq!(report.count, 100);
        assert!((report.accuracy - 0.9).abs() < 1e-12);
        let v = report.verifier.unwrap();
        assert_eq!(v.agreement, 1.0);
        assert_eq!(v.recall_on_failure, 1.0);
        assert_eq!(v.precision_on_success, 1.0);
        assert!((report.cond_mean_success.unwrap() - 1.01).abs() < 1e-12);
        assert!((report.cond_mean_failure.unwrap() - 1.28).abs() < 1e-12);
    }

    #[test]
    fn report_rejects_empty_and_mixed() {
        assert!(matches!(
            verifier_report(&[], &tol()),
            Err(EvalError::EmptyReport)
        ));
        let records = vec![
            EvalRecord::malformed(TaskKind::Eigenvalues),
            EvalRecord::malformed(TaskKind::Inversion),
        ];
        assert!(matches!(
            verifier_report(&records, &tol()),
            Err(EvalError::MixedTasks { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let m = draw_sym(8, 4);
        let eig = eig_sym(&m).unwrap();
        let r = eval_diagonalization(&m, eig.spectrum.values(), &eig.basis, &tol()).unwrap();
        let row = r.to_csv_row();
        let back = EvalRecord::from_csv_row(&row).unwrap();
        assert_eq!(back.task, r.task);
        assert_eq!(back.success, r.success);
        assert_eq!(back.residual, r.residual);
        assert_eq!(back.aux.cond_h, r.aux.cond_h);
        assert_eq!(back.aux.inv_distance, None);
    }
}
