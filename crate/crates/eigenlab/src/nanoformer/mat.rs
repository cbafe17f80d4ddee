//! Minimal row-major f64 matrix for activations and parameters.

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn add_assign(&mut self, other: &Mat) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// `self · otherᵀ` — the shape used by `y = x·Wᵀ` projections.
    pub fn matmul_nt(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.cols, other.cols);
        let mut out = Mat::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let x = self.row(i);
            let o = out.row_mut(i);
            for (j, oj) in o.iter_mut().enumerate() {
                let w = other.row(j);
                let mut acc = 0.0;
                for k in 0..x.len() {
                    acc += x[k] * w[k];
                }
                *oj = acc;
            }
        }
        out
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let x = self.row(i);
            for (k, &xk) in x.iter().enumerate() {
                if xk == 0.0 {
                    continue;
                }
                let b = other.row(k);
                let o = out.row_mut(i);
                for j in 0..b.len() {
                    o[j] += xk * b[j];
                }
            }
        }
        out
    }

    /// `selfᵀ · other`, accumulated into `acc` — the shape of `dW += dyᵀ·x`.
    pub fn matmul_tn_into(&self, other: &Mat, acc: &mut [f64]) {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(acc.len(), self.cols * other.cols);
        for r in 0..self.rows {
            let a = self.row(r);
            let b = other.row(r);
            for (i, &ai) in a.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                let dst = &mut acc[i * other.cols..(i + 1) * other.cols];
                for j in 0..b.len() {
                    dst[j] += ai * b[j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Mat {
        Mat {
            rows,
            cols,
            data: v.to_vec(),
        }
    }

    #[test]
    fn matmul_shapes_agree() {
        let a = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = m(3, 2, &[7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = a.matmul(&b);
        assert_eq!(c.data, vec![58.0, 64.0, 139.0, 154.0]);

        let bt = m(2, 3, &[7.0, 9.0, 11.0, 8.0, 10.0, 12.0]);
        let c2 = a.matmul_nt(&bt);
        assert_eq!(c2.data, c.data);

        let mut acc = vec![0.0; 3 * 2];
        a.matmul_tn_into(&m(2, 2, &[1.0, 0.0, 0.0, 1.0]), &mut acc);
        assert_eq!(acc, vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }
}
