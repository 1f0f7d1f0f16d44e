//! Frechet distance between Gaussian fits of two embedded sample sets.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, Mat};
use crate::series::TimeSeries;

/// Ridge added to each sample covariance before the matrix square root.
pub const COVARIANCE_SHRINKAGE: f64 = 1e-6;

fn mean_and_covariance(set: &[Vec<f64>], dim: usize) -> (Vec<f64>, Mat) {
    let n = set.len();
    let mut mean = vec![0.0; dim];
    for v in set {
        for (m, x) in mean.iter_mut().zip(v.iter()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = Mat::zeros(dim, dim);
    for v in set {
        for r in 0..dim {
            let dr = v[r] - mean[r];
            for c in r..dim {
                cov[(r, c)] += dr * (v[c] - mean[c]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for r in 0..dim {
        for c in r..dim {
            let value = cov[(r, c)] / denom;
            cov[(r, c)] = value;
            cov[(c, r)] = value;
        }
    }
    for i in 0..dim {
        cov[(i, i)] += COVARIANCE_SHRINKAGE;
    }
    (mean, cov)
}

/// Symmetric PSD square root via eigendecomposition; negative rounding
/// residue in the spectrum is clamped to zero.
fn sqrtm_psd(m: &Mat) -> Result<Mat> {
    let n = m.rows();
    let (eigenvalues, vectors) = math::symmetric_eigen(m)?;
    let mut out = Mat::zeros(n, n);
    for (k, &lambda) in eigenvalues.iter().enumerate() {
        let root = math::sqrt(lambda.max(0.0));
        if root == 0.0 {
            continue;
        }
        for r in 0..n {
            let vr = vectors[(r, k)] * root;
            if vr == 0.0 {
                continue;
            }
            for c in 0..n {
                out[(r, c)] += vr * vectors[(c, k)];
            }
        }
    }
    Ok(out)
}

/// Frechet distance between the Gaussian fits of two embedded sets:
/// `||m1 - m2||^2 + tr(C1 + C2 - 2 (C1 C2)^{1/2})`, with shrinkage added to
/// both covariances. Both sets need at least two members.
pub fn cfid_embedded(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Empty("embedded set (need at least 2 members)"));
    }
    let dim = a[0].len();
    for v in a.iter().chain(b.iter()) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                what: "embedding width",
                expected: dim,
                got: v.len(),
            });
        }
        math::ensure_finite(v, "embedding")?;
    }
    let (mean_a, cov_a) = mean_and_covariance(a, dim);
    let (mean_b, cov_b) = mean_and_covariance(b, dim);
    let mean_gap = math::squared_distance(&mean_a, &mean_b);
    let trace_a: f64 = (0..dim).map(|i| cov_a[(i, i)]).sum();
    let trace_b: f64 = (0..dim).map(|i| cov_b[(i, i)]).sum();
    // tr((C1 C2)^{1/2}) computed symmetrically as tr((S C1 S)^{1/2}) with
    // S = C2^{1/2}; the eigenvalues of S C1 S match those of C1 C2.
    let s = sqrtm_psd(&cov_b)?;
    let inner = s.matmul(&cov_a).matmul(&s);
    let (eigenvalues, _) = math::symmetric_eigen(&inner)?;
    let trace_sqrt: f64 = eigenvalues.iter().map(|&l| math::sqrt(l.max(0.0))).sum();
    let value = mean_gap + trace_a + trace_b - 2.0 * trace_sqrt;
    if !value.is_finite() {
        return Err(Error::NonFinite {
            what: "frechet distance",
        });
    }
    // The exact distance is nonnegative; tiny negative values are rounding.
    Ok(value.max(0.0))
}

/// Embed both series sets and take the Frechet distance of the embeddings.
pub fn cfid<F>(real: &[TimeSeries], generated: &[TimeSeries], mut embed: F) -> Result<f64>
where
    F: FnMut(&TimeSeries) -> Result<Vec<f64>>,
{
    let a: Result<Vec<Vec<f64>>> = real.iter().map(&mut embed).collect();
    let b: Result<Vec<Vec<f64>>> = generated.iter().map(&mut embed).collect();
    cfid_embedded(&a?, &b?)
}
