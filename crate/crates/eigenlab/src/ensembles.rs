//! Seeded samplers for the matrix ensembles under study, plus Monte-Carlo
//! statistics (condition-number quantiles, positive-spectrum fractions).
//!
//! Construction follows three recipes:
//!
//! - Wigner coefficients: iid entries (uniform or Gaussian), full matrix or
//!   mirrored upper triangle. Eigenvalues of the symmetric variants follow the
//!   semicircle law.
//! - Eigenvalue replacement: decompose a base Wigner draw into `H·Λ·Hᵀ`,
//!   substitute a spectrum drawn from another law, and reassemble
//!   `M = H·Λ₂·Hᵀ`.
//! - Marchenko–Pastur: `M = NᵀN` for an iid Gaussian `N`.
//!
//! Replacement spectra are scaled to the semicircle eigenvalue standard
//! deviation `sigma·√n` by default so the ensembles differ in shape, not
//! magnitude; `spectrum_scale` overrides this.

use crate::linalg::{self, eig_sym, LinalgError, Matrix, Spectrum, SymMatrix};
use crate::rng::{Lane, Stream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coefficient scale of the uniform law over [-10, 10]: 10/√3.
pub fn default_sigma() -> f64 {
    10.0 / 3.0_f64.sqrt()
}

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble config: {0}")]
    InvalidConfig(String),
    #[error("{kind} has no replacement spectrum law")]
    NoSpectrumLaw { kind: EnsembleKind },
    #[error(transparent)]
    Solver(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, EnsembleError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// All n² entries iid uniform; not symmetric.
    WignerUniformGeneral,
    /// Upper triangle iid uniform, mirrored.
    WignerUniformSymmetric,
    /// Upper triangle iid Gaussian, mirrored.
    WignerGaussianSymmetric,
    /// Alias of `WignerGaussianSymmetric`: eigenvalues follow the semicircle law.
    Semicircle,
    /// Replacement spectrum, uniform law.
    Uniform,
    /// Replacement spectrum, Gaussian law.
    Gaussian,
    /// Replacement spectrum, Laplace law.
    Laplace,
    /// Absolute values of the base Wigner spectrum.
    AbsSemicircle,
    /// Absolute values of a Laplace replacement spectrum.
    AbsLaplace,
    /// `NᵀN` for iid Gaussian N; nonnegative spectrum, heavy cond tail.
    MarchenkoPastur,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 10] = [
        EnsembleKind::WignerUniformGeneral,
        EnsembleKind::WignerUniformSymmetric,
        EnsembleKind::WignerGaussianSymmetric,
        EnsembleKind::Semicircle,
        EnsembleKind::Uniform,
        EnsembleKind::Gaussian,
        EnsembleKind::Laplace,
        EnsembleKind::AbsSemicircle,
        EnsembleKind::AbsLaplace,
        EnsembleKind::MarchenkoPastur,
    ];

    /// The seven eigenvalue distributions compared in the OOD study.
    pub const STUDY: [EnsembleKind; 7] = [
        EnsembleKind::Semicircle,
        EnsembleKind::Uniform,
        EnsembleKind::Gaussian,
        EnsembleKind::Laplace,
        EnsembleKind::AbsSemicircle,
        EnsembleKind::AbsLaplace,
        EnsembleKind::MarchenkoPastur,
    ];

    pub fn is_symmetric(self) -> bool {
        !matches!(self, EnsembleKind::WignerUniformGeneral)
    }

    /// Kinds whose eigenvalue law is symmetric around zero (iid per entry),
    /// for which P(all eigenvalues positive) = 2⁻ⁿ.
    pub fn has_sign_symmetric_spectrum(self) -> bool {
        matches!(
            self,
            EnsembleKind::Uniform | EnsembleKind::Gaussian | EnsembleKind::Laplace
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::WignerUniformGeneral => "wigner_uniform_general",
            EnsembleKind::WignerUniformSymmetric => "wigner_uniform_symmetric",
            EnsembleKind::WignerGaussianSymmetric => "wigner_gaussian_symmetric",
            EnsembleKind::Semicircle => "semicircle",
            EnsembleKind::Uniform => "uniform",
            EnsembleKind::Gaussian => "gaussian",
            EnsembleKind::Laplace => "laplace",
            EnsembleKind::AbsSemicircle => "abs_semicircle",
            EnsembleKind::AbsLaplace => "abs_laplace",
            EnsembleKind::MarchenkoPastur => "marchenko_pastur",
        }
    }
}

impl std::fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EnsembleKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        EnsembleKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown ensemble kind `{s}`"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnsembleConfig {
    pub kind: EnsembleKind,
    pub n: usize,
    /// Coefficient scale; defaults to 10/√3.
    pub sigma: f64,
    pub seed: u64,
    /// Override for the replacement-spectrum standard deviation
    /// (default `sigma·√n`).
    #[serde(default)]
    pub spectrum_scale: Option<f64>,
}

impl EnsembleConfig {
    pub fn new(kind: EnsembleKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            sigma: default_sigma(),
            seed,
            spectrum_scale: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(EnsembleError::InvalidConfig(format!(
                "n must be >= 2, got {}",
                self.n
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(EnsembleError::InvalidConfig(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if let Some(s) = self.spectrum_scale {
            if !(s > 0.0) {
                return Err(EnsembleError::InvalidConfig(format!(
                    "spectrum_scale must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }

    /// Standard deviation used for replacement spectra.
    pub fn spectrum_std(&self) -> f64 {
        self.spectrum_scale
            .unwrap_or(self.sigma * (self.n as f64).sqrt())
    }
}

/// A draw from an ensemble; symmetric kinds carry the proof in the type.
#[derive(Debug, Clone)]
pub enum MatrixSample {
    General(Matrix),
    Symmetric(SymMatrix),
}

impl MatrixSample {
    pub fn as_matrix(&self) -> &Matrix {
        match self {
            MatrixSample::General(m) => m,
            MatrixSample::Symmetric(s) => s.as_matrix(),
        }
    }

    pub fn into_matrix(self) -> Matrix {
        match self {
            MatrixSample::General(m) => m,
            MatrixSample::Symmetric(s) => s.into_matrix(),
        }
    }

    pub fn symmetric(&self) -> Option<&SymMatrix> {
        match self {
            MatrixSample::General(_) => None,
            MatrixSample::Symmetric(s) => Some(s),
        }
    }
}

fn wigner_uniform_general(cfg: &EnsembleConfig, stream: &mut Stream) -> Matrix {
    let half = cfg.sigma * 3.0_f64.sqrt();
    let n = cfg.n;
    let data: Vec<f64> = (0..n * n).map(|_| stream.range(-half, half)).collect();
    Matrix::from_vec(n, data).expect("finite draws")
}

fn mirrored_from_upper(n: usize, mut draw: impl FnMut() -> f64) -> SymMatrix {
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            m.set(i, j, draw());
        }
    }
    SymMatrix::mirror_upper(&m)
}

fn wigner_uniform_symmetric(cfg: &EnsembleConfig, stream: &mut Stream) -> SymMatrix {
    let half = cfg.sigma * 3.0_f64.sqrt();
    mirrored_from_upper(cfg.n, || stream.range(-half, half))
}

fn wigner_gaussian_symmetric(cfg: &EnsembleConfig, stream: &mut Stream) -> SymMatrix {
    let n = cfg.n;
    let mut coeffs = vec![0.0; n * (n + 1) / 2];
    stream.fill_normal(cfg.sigma, &mut coeffs);
    let mut it = coeffs.into_iter();
    mirrored_from_upper(n, || it.next().expect("enough coefficients"))
}

/// Draws `n` iid values from the named replacement law with standard
/// deviation `std`, sorted non-increasing. `seed` plays the role of the
/// sub-seed: the stream is keyed by (seed, index, spectrum lane).
pub fn sample_spectrum(kind: EnsembleKind, n: usize, std: f64, seed: u64, index: u64) -> Result<Spectrum> {
    let mut stream = Stream::derive(seed, index, Lane::Spectrum);
    sample_spectrum_from(kind, n, std, &mut stream)
}

fn sample_spectrum_from(
    kind: EnsembleKind,
    n: usize,
    std: f64,
    stream: &mut Stream,
) -> Result<Spectrum> {
    let values: Vec<f64> = match kind {
        EnsembleKind::Uniform => {
            let half = std * 3.0_f64.sqrt();
            (0..n).map(|_| stream.range(-half, half)).collect()
        }
        EnsembleKind::Gaussian => {
            let mut v = vec![0.0; n];
            stream.fill_normal(std, &mut v);
            v
        }
        EnsembleKind::Laplace => {
            let scale = std / 2.0_f64.sqrt();
            (0..n).map(|_| stream.laplace(scale)).collect()
        }
        EnsembleKind::AbsLaplace => {
            let scale = std / 2.0_f64.sqrt();
            (0..n).map(|_| stream.laplace(scale).abs()).collect()
        }
        other => return Err(EnsembleError::NoSpectrumLaw { kind: other }),
    };
    Ok(Spectrum::from_unsorted(values))
}

/// Draws the `index`-th matrix of the ensemble. Bit-identical across runs and
/// thread counts: the generator state depends only on (cfg.seed, index).
pub fn sample_matrix(cfg: &EnsembleConfig, index: u64) -> Result<MatrixSample> {
    cfg.validate()?;
    let mut stream = Stream::derive(cfg.seed, index, Lane::Matrix);
    match cfg.kind {
        EnsembleKind::WignerUniformGeneral => Ok(MatrixSample::General(wigner_uniform_general(
            cfg,
            &mut stream,
        ))),
        EnsembleKind::WignerUniformSymmetric => Ok(MatrixSample::Symmetric(
            wigner_uniform_symmetric(cfg, &mut stream),
        )),
        EnsembleKind::WignerGaussianSymmetric | EnsembleKind::Semicircle => Ok(
            MatrixSample::Symmetric(wigner_gaussian_symmetric(cfg, &mut stream)),
        ),
        EnsembleKind::Uniform | EnsembleKind::Gaussian | EnsembleKind::Laplace => {
            let base = wigner_gaussian_symmetric(cfg, &mut stream);
            let eig = eig_sym(&base)?;
            let mut spectrum_stream = Stream::derive(cfg.seed, index, Lane::Spectrum);
            let lambda2 =
                sample_spectrum_from(cfg.kind, cfg.n, cfg.spectrum_std(), &mut spectrum_stream)?;
            Ok(MatrixSample::Symmetric(linalg::reassemble(
                &lambda2, &eig.basis,
            )?))
        }
        EnsembleKind::AbsSemicircle => {
            let base = wigner_gaussian_symmetric(cfg, &mut stream);
            let eig = eig_sym(&base)?;
            let abs = Spectrum::from_unsorted(
                eig.spectrum.values().iter().map(|v| v.abs()).collect(),
            );
            Ok(MatrixSample::Symmetric(linalg::reassemble(
                &abs, &eig.basis,
            )?))
        }
        EnsembleKind::AbsLaplace => {
            let base = wigner_gaussian_symmetric(cfg, &mut stream);
            let eig = eig_sym(&base)?;
            let mut spectrum_stream = Stream::derive(cfg.seed, index, Lane::Spectrum);
            let lambda2 = sample_spectrum_from(
                EnsembleKind::AbsLaplace,
                cfg.n,
                cfg.spectrum_std(),
                &mut spectrum_stream,
            )?;
            Ok(MatrixSample::Symmetric(linalg::reassemble(
                &lambda2, &eig.basis,
            )?))
        }
        EnsembleKind::MarchenkoPastur => {
            // Entry variance sigma, i.e. standard deviation √sigma.
            let sd = cfg.sigma.sqrt();
            let n = cfg.n;
            let mut entries = vec![0.0; n * n];
            stream.fill_normal(sd, &mut entries);
            let nm = Matrix::from_vec(n, entries).expect("finite draws");
            let mut gram = Matrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += nm.get(k, i) * nm.get(k, j);
                    }
                    gram.set(i, j, acc);
                }
            }
            Ok(MatrixSample::Symmetric(SymMatrix::mirror_upper(&gram)))
        }
    }
}

/// Empirical condition-number quantiles over `count` draws.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuantileReport {
    pub median: f64,
    pub q3: f64,
    pub p90: f64,
    pub count: u64,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Condition numbers of `count` draws, reduced to median / Q3 / P90.
pub fn condition_stats(cfg: &EnsembleConfig, count: u64) -> Result<QuantileReport> {
    cfg.validate()?;
    if count < 1000 {
        return Err(EnsembleError::InvalidConfig(format!(
            "condition_stats needs count >= 1000, got {count}"
        )));
    }
    let mut conds: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let m = sample_matrix(cfg, i)?;
            Ok(linalg::cond(m.as_matrix())?)
        })
        .collect::<Result<_>>()?;
    conds.sort_by(f64::total_cmp);
    Ok(QuantileReport {
        median: quantile(&conds, 0.5),
        q3: quantile(&conds, 0.75),
        p90: quantile(&conds, 0.9),
        count,
    })
}

/// Fraction of draws whose smallest eigenvalue is strictly positive.
pub fn positive_fraction(cfg: &EnsembleConfig, count: u64) -> Result<f64> {
    cfg.validate()?;
    if count < 10_000 {
        return Err(EnsembleError::InvalidConfig(format!(
            "positive_fraction needs count >= 10000, got {count}"
        )));
    }
    if !cfg.kind.is_symmetric() {
        return Err(EnsembleError::InvalidConfig(
            "positive_fraction requires a symmetric ensemble".into(),
        ));
    }
    let positives: u64 = (0..count)
        .into_par_iter()
        .map(|i| -> Result<u64> {
            let m = sample_matrix(cfg, i)?;
            let sym = m.symmetric().expect("symmetric kind");
            let eig = eig_sym(sym)?;
            Ok(u64::from(eig.spectrum.min() > 0.0))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(positives as f64 / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rel_l1;

    #[test]
    fn general_uniform_entries_are_bounded() {
        let cfg = EnsembleConfig::new(EnsembleKind::WignerUniformGeneral, 5, 42);
        for i in 0..50 {
            let m = sample_matrix(&cfg, i).unwrap().into_matrix();
            assert!(m.entries().iter().all(|v| (-10.0..=10.0).contains(v)));
        }
    }

    #[test]
    fn symmetric_kinds_are_exactly_mirrored() {
        for kind in [
            EnsembleKind::WignerUniformSymmetric,
            EnsembleKind::Semicircle,
            EnsembleKind::Gaussian,
            EnsembleKind::AbsSemicircle,
            EnsembleKind::MarchenkoPastur,
        ] {
            let cfg = EnsembleConfig::new(kind, 4, 7);
            let m = sample_matrix(&cfg, 3).unwrap();
            assert!(m.symmetric().is_some(), "{kind} should be symmetric");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = EnsembleConfig::new(EnsembleKind::Laplace, 5, 99);
        let a = sample_matrix(&cfg, 11).unwrap().into_matrix();
        let b = sample_matrix(&cfg, 11).unwrap().into_matrix();
        assert_eq!(a, b);
        let c = sample_matrix(&cfg, 12).unwrap().into_matrix();
        assert_ne!(a, c);
    }

    #[test]
    fn semicircle_alias_matches_wigner_gaussian() {
        let a = sample_matrix(&EnsembleConfig::new(EnsembleKind::Semicircle, 5, 5), 0)
            .unwrap()
            .into_matrix();
        let b = sample_matrix(
            &EnsembleConfig::new(EnsembleKind::WignerGaussianSymmetric, 5, 5),
            0,
        )
        .unwrap()
        .into_matrix();
        assert_eq!(a, b);
    }

    #[test]
    fn nonnegative_kinds_have_nonnegative_spectra() {
        for kind in [
            EnsembleKind::AbsSemicircle,
            EnsembleKind::AbsLaplace,
            EnsembleKind::MarchenkoPastur,
        ] {
            let cfg = EnsembleConfig::new(kind, 5, 1);
            for i in 0..20 {
                let m = sample_matrix(&cfg, i).unwrap();
                let eig = eig_sym(m.symmetric().unwrap()).unwrap();
                assert!(
                    eig.spectrum.min() >= -1e-9,
                    "{kind} draw {i}: min {}",
                    eig.spectrum.min()
                );
            }
        }
    }

    #[test]
    fn replacement_spectrum_is_recovered_by_eig() {
        let cfg = EnsembleConfig::new(EnsembleKind::Gaussian, 5, 12);
        for i in 0..20 {
            let m = sample_matrix(&cfg, i).unwrap();
            let recovered = eig_sym(m.symmetric().unwrap()).unwrap().spectrum;
            let drawn =
                sample_spectrum(EnsembleKind::Gaussian, 5, cfg.spectrum_std(), cfg.seed, i)
                    .unwrap();
            let err = rel_l1(recovered.values(), drawn.values()).unwrap();
            assert!(err < 1e-8, "draw {i}: err {err}");
        }
    }

    #[test]
    fn spectrum_scale_override_takes_effect() {
        let mut cfg = EnsembleConfig::new(EnsembleKind::Gaussian, 5, 3);
        cfg.spectrum_scale = Some(1.0);
        let m = sample_matrix(&cfg, 0).unwrap();
        let eig = eig_sym(m.symmetric().unwrap()).unwrap();
        assert!(eig.spectrum.max().abs() < 10.0);
        assert_eq!(cfg.spectrum_std(), 1.0);
    }

    #[test]
    fn spectrum_draws_are_sorted_and_signed_correctly() {
        for kind in [
            EnsembleKind::Uniform,
            EnsembleKind::Gaussian,
            EnsembleKind::Laplace,
            EnsembleKind::AbsLaplace,
        ] {
            for i in 0..10 {
                let s = sample_spectrum(kind, 6, 5.0, 8, i).unwrap();
                for w in s.values().windows(2) {
                    assert!(w[0] >= w[1]);
                }
                if kind == EnsembleKind::AbsLaplace {
                    assert!(s.min() >= 0.0);
                }
            }
        }
    }

    #[test]
    fn semicircle_eigenvalue_std_matches_sigma_sqrt_n() {
        // Pooled eigenvalue std over many draws ≈ sigma·√n.
        let cfg = EnsembleConfig::new(EnsembleKind::Semicircle, 5, 2024);
        let draws = 10_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for i in 0..draws {
            let m = sample_matrix(&cfg, i).unwrap();
            let eig = eig_sym(m.symmetric().unwrap()).unwrap();
            for &l in eig.spectrum.values() {
                sum += l;
                sum_sq += l * l;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        let std = (sum_sq / count as f64 - mean * mean).sqrt();
        let target = default_sigma() * 5.0_f64.sqrt();
        assert!(
            (std / target - 1.0).abs() < 0.02,
            "std {std} vs target {target}"
        );
    }

    #[test]
    fn gaussian_spectrum_std_matches_target() {
        let std_target = default_sigma() * 5.0_f64.sqrt();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for i in 0..10_000 {
            let s = sample_spectrum(EnsembleKind::Gaussian, 5, std_target, 77, i).unwrap();
            for &x in s.values() {
                sum += x;
                sum_sq += x * x;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        let std = (sum_sq / count as f64 - mean * mean).sqrt();
        assert!(
            (std / std_target - 1.0).abs() < 0.01,
            "std {std} vs {std_target}"
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = EnsembleConfig::new(EnsembleKind::Gaussian, 1, 0);
        assert!(cfg.validate().is_err());
        cfg.n = 5;
        cfg.sigma = 0.0;
        assert!(cfg.validate().is_err());
        assert!(matches!(
            sample_spectrum(EnsembleKind::Semicircle, 5, 1.0, 0, 0),
            Err(EnsembleError::NoSpectrumLaw { .. })
        ));
    }
}
