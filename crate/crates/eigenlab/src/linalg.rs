//! Dense linear algebra for small matrices: symmetric eigendecomposition via
//! cyclic Jacobi rotations, Gauss–Jordan inversion, condition numbers, and the
//! relative L1 residuals every metric in this crate is built on.
//!
//! All norms here are elementwise L1 (sum of absolute entries); L2 is used
//! only to normalize eigenvector columns. All operations are pure functions
//! of their inputs and deterministic down to the bit for identical input bits.

use thiserror::Error;

/// Maximum number of Jacobi sweeps before giving up.
const MAX_SWEEPS: usize = 50;
/// Relative off-diagonal mass at which the Jacobi iteration stops.
const JACOBI_TOL: f64 = 1e-12;
/// Rotations are skipped outright below this magnitude.
const JACOBI_SKIP: f64 = 1e-300;
/// Relative pivot threshold for declaring a matrix singular.
const PIVOT_TOL: f64 = 1e-13;
/// Singular values below this are treated as zero by `cond`.
const SIGMA_FLOOR: f64 = 1e-300;
/// Orthogonality precondition for `reassemble`: cond(H) < 1 + this.
const ORTHO_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix entry at ({row},{col}) is not finite: {value}")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("expected {expected} entries for a {n}x{n} matrix, got {got}")]
    BadShape { n: usize, expected: usize, got: usize },
    #[error("matrix is not symmetric at ({row},{col}): {a} != {b}")]
    NotSymmetric { row: usize, col: usize, a: f64, b: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix is numerically singular (pivot {pivot:e} below threshold {threshold:e})")]
    Singular { pivot: f64, threshold: f64 },
    #[error("shapes differ: {a} vs {b} entries")]
    ShapeMismatch { a: usize, b: usize },
    #[error("reference has zero L1 norm")]
    DegenerateReference,
    #[error("basis is not orthogonal: cond = {cond}")]
    NotOrthogonal { cond: f64 },
    #[error("vector {index} has zero norm")]
    ZeroVector { index: usize },
    #[error("spectrum is not sorted non-increasing at position {position}")]
    Unsorted { position: usize },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense square matrix of 64-bit reals, row-major. All entries are finite by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds an `n`x`n` matrix from row-major entries, rejecting NaN/Inf.
    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(LinalgError::BadShape {
                n,
                expected: n * n,
                got: data.len(),
            });
        }
        for (k, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(LinalgError::NonFinite {
                    row: k / n,
                    col: k % n,
                    value: v,
                });
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(LinalgError::BadShape {
                    n,
                    expected: n * n,
                    got: row.len() * n,
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(n, data)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n);
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.n;
        let mut t = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n, "matmul requires equal sizes");
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn scale(&self, alpha: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    /// Elementwise L1 norm: sum of absolute entries.
    pub fn norm_l1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

/// Square matrix with `entries[i][j] == entries[j][i]` exactly. Constructed by
/// mirroring one triangle, never by approximate symmetrization.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Mirrors the upper triangle (including diagonal) over the lower one.
    pub fn mirror_upper(m: &Matrix) -> SymMatrix {
        let n = m.n();
        let mut out = m.clone();
        for i in 0..n {
            for j in 0..i {
                out.set(i, j, m.get(j, i));
            }
        }
        SymMatrix(out)
    }

    /// Accepts a matrix that is already exactly symmetric.
    pub fn try_from_matrix(m: Matrix) -> Result<SymMatrix> {
        let n = m.n();
        for i in 0..n {
            for j in (i + 1)..n {
                let a = m.get(i, j);
                let b = m.get(j, i);
                if a.to_bits() != b.to_bits() {
                    return Err(LinalgError::NotSymmetric {
                        row: i,
                        col: j,
                        a,
                        b,
                    });
                }
            }
        }
        Ok(SymMatrix(m))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<SymMatrix> {
        Self::try_from_matrix(Matrix::from_rows(rows)?)
    }

    #[inline]
    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl std::ops::Deref for SymMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// Eigenvalues sorted non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Validates the non-increasing order.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for i in 1..values.len() {
            if values[i] > values[i - 1] {
                return Err(LinalgError::Unsorted { position: i });
            }
        }
        Ok(Self { values })
    }

    /// Sorts descending, then wraps.
    pub fn from_unsorted(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        Self { values }
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("nonempty spectrum")
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }
}

/// Result of `eig_sym`: `basis` columns are unit eigenvectors, column `k`
/// paired with `spectrum.values()[k]`, and `basisᵀ · M · basis = diag(spectrum)`
/// within 1e-9 relative L1.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub spectrum: Spectrum,
    pub basis: Matrix,
}

impl EigenDecomposition {
    /// `basis · diag(spectrum) · basisᵀ`, mirrored exactly symmetric.
    pub fn reassemble(&self) -> Result<SymMatrix> {
        reassemble(&self.spectrum, &self.basis)
    }
}

/// Symmetric eigendecomposition by row-cyclic Jacobi rotations.
///
/// Column sign convention: the entry of largest absolute value in each
/// eigenvector is made positive (lowest index wins ties), which makes the
/// output a deterministic function of the input bits. Degenerate eigenspaces
/// are not otherwise canonicalized.
pub fn eig_sym(m: &SymMatrix) -> Result<EigenDecomposition> {
    let n = m.n();
    let norm = m.norm_l1();
    let threshold = JACOBI_TOL * norm;

    let mut a = m.as_matrix().clone();
    let mut v = Matrix::identity(n);
    // Running diagonal with deferred accumulation (b + z) to limit roundoff.
    let mut d: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| 2.0 * a.get(p, q).abs())
            .sum();
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() < JACOBI_SKIP {
                    continue;
                }
                let theta = 0.5 * (d[q] - d[p]) / apq;
                let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                if theta < 0.0 {
                    t = -t;
                }
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                a.set(p, q, 0.0);
                for j in 0..p {
                    let g = a.get(j, p);
                    let hh = a.get(j, q);
                    a.set(j, p, g - s * (hh + g * tau));
                    a.set(j, q, hh + s * (g - hh * tau));
                }
                for j in (p + 1)..q {
                    let g = a.get(p, j);
                    let hh = a.get(j, q);
                    a.set(p, j, g - s * (hh + g * tau));
                    a.set(j, q, hh + s * (g - hh * tau));
                }
                for j in (q + 1)..n {
                    let g = a.get(p, j);
                    let hh = a.get(q, j);
                    a.set(p, j, g - s * (hh + g * tau));
                    a.set(q, j, hh + s * (g - hh * tau));
                }
                for j in 0..n {
                    let g = v.get(j, p);
                    let hh = v.get(j, q);
                    v.set(j, p, g - s * (hh + g * tau));
                    v.set(j, q, hh + s * (g - hh * tau));
                }
            }
        }
        for p in 0..n {
            b[p] += z[p];
            z[p] = 0.0;
            d[p] = b[p];
        }
    }
    if !converged {
        // Re-check once more after the final sweep.
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| 2.0 * a.get(p, q).abs())
            .sum();
        if off > threshold {
            return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
        }
    }

    // Sort eigenpairs non-increasing; stable so equal values keep column order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).expect("finite eigenvalues"));

    let mut basis = Matrix::zeros(n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(d[src]);
        let col = v.column(src);
        let norm2 = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        // Largest-magnitude entry positive; lowest index wins ties.
        let mut lead = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[lead].abs() {
                lead = i;
            }
        }
        let flip = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            basis.set(i, dst, col[i] * flip / norm2);
        }
    }

    Ok(EigenDecomposition {
        spectrum: Spectrum::new(values)?,
        basis,
    })
}

/// Matrix inverse by Gauss–Jordan elimination with partial pivoting.
pub fn invert(m: &Matrix) -> Result<Matrix> {
    let n = m.n();
    let threshold = PIVOT_TOL * m.norm_l1();
    let mut a = m.clone();
    let mut inv = Matrix::identity(n);

    for k in 0..n {
        let mut pivot_row = k;
        for r in (k + 1)..n {
            if a.get(r, k).abs() > a.get(pivot_row, k).abs() {
                pivot_row = r;
            }
        }
        let pivot = a.get(pivot_row, k);
        if pivot.abs() < threshold {
            return Err(LinalgError::Singular {
                pivot: pivot.abs(),
                threshold,
            });
        }
        if pivot_row != k {
            for j in 0..n {
                let (x, y) = (a.get(k, j), a.get(pivot_row, j));
                a.set(k, j, y);
                a.set(pivot_row, j, x);
                let (x, y) = (inv.get(k, j), inv.get(pivot_row, j));
                inv.set(k, j, y);
                inv.set(pivot_row, j, x);
            }
        }
        let inv_pivot = 1.0 / pivot;
        for j in 0..n {
            a.set(k, j, a.get(k, j) * inv_pivot);
            inv.set(k, j, inv.get(k, j) * inv_pivot);
        }
        for r in 0..n {
            if r == k {
                continue;
            }
            let factor = a.get(r, k);
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                a.set(r, j, a.get(r, j) - factor * a.get(k, j));
                inv.set(r, j, inv.get(r, j) - factor * inv.get(k, j));
            }
        }
    }
    Ok(inv)
}

/// Condition number: ratio of largest to smallest singular value, computed as
/// square roots of the eigenvalues of `mᵀm`. Returns `+inf` when the smallest
/// singular value is below 1e-300.
pub fn cond(m: &Matrix) -> Result<f64> {
    let n = m.n();
    let mut gram = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += m.get(k, i) * m.get(k, j);
            }
            gram.set(i, j, acc);
        }
    }
    let gram = SymMatrix::mirror_upper(&gram);
    let eig = eig_sym(&gram)?;
    let sigma_max = eig.spectrum.max().max(0.0).sqrt();
    let sigma_min = eig.spectrum.min().max(0.0).sqrt();
    if sigma_min < SIGMA_FLOOR {
        return Ok(f64::INFINITY);
    }
    Ok(sigma_max / sigma_min)
}

/// Relative L1 distance `‖a−b‖₁ / ‖b‖₁` over raw entries.
pub fn rel_l1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(LinalgError::ShapeMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let denom: f64 = b.iter().map(|v| v.abs()).sum();
    if denom == 0.0 {
        return Err(LinalgError::DegenerateReference);
    }
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    Ok(num / denom)
}

/// `H · diag(Λ) · Hᵀ` with the lower triangle mirrored from the computed
/// upper triangle, so the result is exactly symmetric. Requires `h` orthogonal
/// within `cond(h) < 1 + 1e-8`.
pub fn reassemble(spectrum: &Spectrum, h: &Matrix) -> Result<SymMatrix> {
    let n = h.n();
    if spectrum.len() != n {
        return Err(LinalgError::ShapeMismatch {
            a: spectrum.len(),
            b: n,
        });
    }
    let c = cond(h)?;
    if !(c < 1.0 + ORTHO_TOL) {
        return Err(LinalgError::NotOrthogonal { cond: c });
    }
    let lambda = spectrum.values();
    let mut out = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += h.get(i, k) * lambda[k] * h.get(j, k);
            }
            out.set(i, j, acc);
        }
    }
    Ok(SymMatrix::mirror_upper(&out))
}

/// Residual `‖HᵀMH − diag(Λ)‖₁ / ‖Λ‖₁` of a proposed decomposition.
pub fn diag_residual(m: &Matrix, spectrum: &[f64], basis: &Matrix) -> Result<f64> {
    let n = m.n();
    if basis.n() != n || spectrum.len() != n {
        return Err(LinalgError::ShapeMismatch {
            a: basis.n() * basis.n() + spectrum.len(),
            b: n * n + n,
        });
    }
    let ht_m_h = basis.transpose().matmul(m).matmul(basis);
    rel_l1(ht_m_h.entries(), Matrix::from_diag(spectrum).entries())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eig_of_diagonal_is_identity_basis() {
        let m = SymMatrix::from_rows(&[&[3.0, 0.0], &[0.0, 1.0]]).unwrap();
        let eig = eig_sym(&m).unwrap();
        assert_eq!(eig.spectrum.values(), &[3.0, 1.0]);
        assert_eq!(eig.basis, Matrix::identity(2));
    }

    #[test]
    fn eig_of_identity() {
        let m = SymMatrix::try_from_matrix(Matrix::identity(5)).unwrap();
        let eig = eig_sym(&m).unwrap();
        assert_eq!(eig.spectrum.values(), &[1.0; 5]);
        let resid = diag_residual(&m, eig.spectrum.values(), &eig.basis).unwrap();
        assert_eq!(resid, 0.0);
    }

    #[test]
    fn eig_analytic_2x2_exchange() {
        let m = SymMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let eig = eig_sym(&m).unwrap();
        let r = 1.0 / 2.0_f64.sqrt();
        assert!(approx(eig.spectrum.values()[0], 1.0, 1e-14));
        assert!(approx(eig.spectrum.values()[1], -1.0, 1e-14));
        // Sign convention: first entry positive in both columns (tie on magnitude).
        assert!(approx(eig.basis.get(0, 0), r, 1e-12));
        assert!(approx(eig.basis.get(1, 0), r, 1e-12));
        assert!(approx(eig.basis.get(0, 1), r, 1e-12));
        assert!(approx(eig.basis.get(1, 1), -r, 1e-12));
    }

    #[test]
    fn eig_zero_matrix_converges_immediately() {
        let m = SymMatrix::try_from_matrix(Matrix::zeros(3)).unwrap();
        let eig = eig_sym(&m).unwrap();
        assert_eq!(eig.spectrum.values(), &[0.0; 3]);
    }

    #[test]
    fn invert_diagonal() {
        let m = Matrix::from_rows(&[&[2.0, 0.0], &[0.0, 4.0]]).unwrap();
        let inv = invert(&m).unwrap();
        assert_eq!(inv, Matrix::from_rows(&[&[0.5, 0.0], &[0.0, 0.25]]).unwrap());
    }

    #[test]
    fn invert_identity() {
        let i = Matrix::identity(4);
        assert_eq!(invert(&i).unwrap(), i);
    }

    #[test]
    fn invert_singular_errors() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(invert(&m), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn cond_of_diagonal() {
        let m = Matrix::from_diag(&[10.0, 1.0]);
        assert!(approx(cond(&m).unwrap(), 10.0, 1e-9));
    }

    #[test]
    fn cond_of_orthogonal_is_one() {
        let t = 0.7_f64;
        let m = Matrix::from_rows(&[&[t.cos(), -t.sin()], &[t.sin(), t.cos()]]).unwrap();
        assert!(approx(cond(&m).unwrap(), 1.0, 1e-9));
    }

    #[test]
    fn cond_scale_invariant() {
        let m = Matrix::from_rows(&[&[3.0, 1.0, 0.5], &[0.2, -2.0, 1.5], &[1.0, 0.0, 0.7]])
            .unwrap();
        let base = cond(&m).unwrap();
        for alpha in [1e-3, 1.0, 1e3] {
            let c = cond(&m.scale(alpha)).unwrap();
            assert!((c - base).abs() / base < 1e-12);
        }
    }

    #[test]
    fn rel_l1_examples() {
        assert_eq!(rel_l1(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rel_l1(&[1.0, 2.0], &[2.0, 2.0]).unwrap(), 0.25);
        let b = [2.0, -3.0, 0.5];
        let a: Vec<f64> = b.iter().map(|v| v * 1.05).collect();
        assert!(approx(rel_l1(&a, &b).unwrap(), 0.05, 1e-12));
    }

    #[test]
    fn rel_l1_error_paths() {
        assert!(matches!(
            rel_l1(&[1.0], &[1.0, 2.0]),
            Err(LinalgError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            rel_l1(&[1.0], &[0.0]),
            Err(LinalgError::DegenerateReference)
        ));
    }

    #[test]
    fn rel_l1_scaling_invariance() {
        let a = [1.0, -2.0, 3.0];
        let b = [1.5, -1.0, 2.0];
        let base = rel_l1(&a, &b).unwrap();
        let a2: Vec<f64> = a.iter().map(|v| v * 7.5).collect();
        let b2: Vec<f64> = b.iter().map(|v| v * 7.5).collect();
        assert!(approx(rel_l1(&a2, &b2).unwrap(), base, 1e-15));
    }

    #[test]
    fn reassemble_identity_spectrum() {
        let t = 0.3_f64;
        let h = Matrix::from_rows(&[&[t.cos(), -t.sin()], &[t.sin(), t.cos()]]).unwrap();
        let s = Spectrum::new(vec![1.0, 1.0]).unwrap();
        let m = reassemble(&s, &h).unwrap();
        let resid: f64 = m
            .entries()
            .iter()
            .zip(Matrix::identity(2).entries())
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(resid < 1e-12);
    }

    #[test]
    fn reassemble_diag_with_identity_basis() {
        let s = Spectrum::new(vec![2.0, 0.0]).unwrap();
        let m = reassemble(&s, &Matrix::identity(2)).unwrap();
        assert_eq!(m.as_matrix(), &Matrix::from_diag(&[2.0, 0.0]));
    }

    #[test]
    fn reassemble_rejects_non_orthogonal() {
        let h = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap();
        let s = Spectrum::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            reassemble(&s, &h),
            Err(LinalgError::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn matrix_rejects_non_finite() {
        assert!(matches!(
            Matrix::from_vec(2, vec![1.0, f64::NAN, 0.0, 1.0]),
            Err(LinalgError::NonFinite { .. })
        ));
    }

    #[test]
    fn sym_matrix_rejects_asymmetry() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[2.0000001, 1.0]]).unwrap();
        assert!(SymMatrix::try_from_matrix(m).is_err());
    }

    #[test]
    fn spectrum_order_is_validated() {
        assert!(Spectrum::new(vec![1.0, 2.0]).is_err());
        let s = Spectrum::from_unsorted(vec![1.0, 3.0, -2.0]);
        assert_eq!(s.values(), &[3.0, 1.0, -2.0]);
    }
}
