//! Small dense linear algebra and scalar helpers shared by the numeric
//! modules. Transcendentals go through `libm` so the crate behaves
//! identically with and without `std`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

pub(crate) fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what })
    }
}

/// Dense row-major matrix of `f64`.
///
/// Storage is a flat `Vec` with `data[r * cols + c]`; serialization of model
/// parameters flattens in exactly this order.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix storage",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out = self * x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = 0.0;
            for (w, xi) in row.iter().zip(x.iter()) {
                acc += w * xi;
            }
            out[r] = acc;
        }
    }

    /// `out = self^T * x`, i.e. x projected back through the matrix.
    pub fn tr_matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = 0.0);
        for r in 0..self.rows {
            let row = self.row(r);
            let xr = x[r];
            for (o, w) in out.iter_mut().zip(row.iter()) {
                *o += w * xr;
            }
        }
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(r);
                for (o, b) in out_row.iter_mut().zip(orow.iter()) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)];
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl core::ops::Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Solve `A x = b` for square `A` by Gaussian elimination with partial
/// pivoting. `b` holds one column per right-hand side and is returned in
/// solved form.
pub fn solve_linear(a: &Mat, b: &Mat) -> Result<Mat> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            what: "linear solve (square matrix)",
            expected: n,
            got: a.cols(),
        });
    }
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            what: "linear solve (rhs rows)",
            expected: n,
            got: b.rows(),
        });
    }
    let mut a = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[(r, col)].abs() > a[(pivot, col)].abs() {
                pivot = r;
            }
        }
        if a[(pivot, col)].abs() < 1e-300 {
            return Err(Error::InvalidParameter(alloc::format!(
                "singular system at column {col}"
            )));
        }
        if pivot != col {
            for c in 0..n {
                let tmp = a[(col, c)];
                a[(col, c)] = a[(pivot, c)];
                a[(pivot, c)] = tmp;
            }
            for c in 0..x.cols() {
                let tmp = x[(col, c)];
                x[(col, c)] = x[(pivot, c)];
                x[(pivot, c)] = tmp;
            }
        }
        let d = a[(col, col)];
        for r in col + 1..n {
            let factor = a[(r, col)] / d;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                let v = a[(col, c)];
                a[(r, c)] -= factor * v;
            }
            for c in 0..x.cols() {
                let v = x[(col, c)];
                x[(r, c)] -= factor * v;
            }
        }
    }
    for col in (0..n).rev() {
        let d = a[(col, col)];
        for c in 0..x.cols() {
            let mut acc = x[(col, c)];
            for k in col + 1..n {
                acc -= a[(col, k)] * x[(k, c)];
            }
            x[(col, c)] = acc / d;
        }
    }
    Ok(x)
}

/// Eigenvalues and eigenvectors of a symmetric matrix by the cyclic Jacobi
/// rotation method. Returns `(eigenvalues, eigenvectors)` with eigenvectors
/// stored column-wise.
pub fn symmetric_eigen(m: &Mat) -> Result<(Vec<f64>, Mat)> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::DimensionMismatch {
            what: "symmetric eigendecomposition",
            expected: n,
            got: m.cols(),
        });
    }
    let mut a = m.clone();
    let mut v = Mat::identity(n);
    // Off-diagonal Frobenius mass drops quadratically per sweep; 64 sweeps is
    // far beyond what d <= a few hundred needs.
    for _ in 0..64 {
        let mut off = 0.0;
        for r in 0..n {
            for c in r + 1..n {
                off += a[(r, c)] * a[(r, c)];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigenvalues = (0..n).map(|i| a[(i, i)]).collect();
    Ok((eigenvalues, v))
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_identity() {
        let m = Mat::identity(3);
        let mut out = [0.0; 3];
        m.matvec(&[1.0, 2.0, 3.0], &mut out);
        assert_eq!(out, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn solve_round_trip() {
        let a = Mat::from_vec(2, 2, alloc::vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let b = Mat::from_vec(2, 1, alloc::vec![5.0, 10.0]).unwrap();
        let x = solve_linear(&a, &b).unwrap();
        // 2x + y = 5, x + 3y = 10 -> x = 1, y = 3
        assert!((x[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((x[(1, 0)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_recovers_spectrum() {
        // Symmetric matrix with known eigenvalues {1, 4}.
        let m = Mat::from_vec(2, 2, alloc::vec![2.5, 1.5, 1.5, 2.5]).unwrap();
        let (mut eig, _) = symmetric_eigen(&m).unwrap();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eig[0] - 1.0).abs() < 1e-10);
        assert!((eig[1] - 4.0).abs() < 1e-10);
    }

    #[test]
    fn jacobi_preserves_trace_on_random_matrix() {
        let mut rng = crate::rng::SeedRng::new(7);
        let n = 8;
        let mut m = Mat::zeros(n, n);
        for r in 0..n {
            for c in r..n {
                let v = rng.uniform_in(-1.0, 1.0);
                m[(r, c)] = v;
                m[(c, r)] = v;
            }
        }
        let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
        let (eig, _) = symmetric_eigen(&m).unwrap();
        let sum: f64 = eig.iter().sum();
        assert!((trace - sum).abs() < 1e-9);
    }
}
