//! Random convolutional kernel classifier.
//!
//! A bank of random dilated kernels turns each series into two features per
//! kernel (proportion of positive outputs and the maximum), and a ridge
//! one-vs-rest classifier runs on the standardized features. Used as the
//! interpolation controllability probe: if the generated series follow the
//! requested condition class, the classifier recognizes them as that class.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, Mat};
use crate::rng::SeedRng;
use crate::series::TimeSeries;

const KERNEL_LENGTHS: [usize; 3] = [7, 9, 11];
const RIDGE_CANDIDATES: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

/// One random convolutional kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub length: usize,
    /// Standard-normal draws, mean-centered.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub dilation: usize,
    /// Zero padding applied on both sides (0 when the padding flag is off).
    pub padding: usize,
    /// Input channel the kernel reads.
    pub channel: usize,
}

impl Kernel {
    fn span(&self) -> usize {
        (self.length - 1) * self.dilation + 1
    }

    /// PPV and max of the convolution outputs over one series.
    fn apply(&self, x: &TimeSeries) -> Result<(f64, f64)> {
        let t = x.len() as isize;
        let out_len = t + 2 * self.padding as isize - (self.span() as isize - 1);
        if out_len <= 0 {
            return Err(Error::InvalidParameter(alloc::format!(
                "series of length {} shorter than kernel span {}",
                x.len(),
                self.span()
            )));
        }
        let mut positives = 0usize;
        let mut max = f64::NEG_INFINITY;
        for p in 0..out_len {
            let mut acc = self.bias;
            let start = p - self.padding as isize;
            for (i, w) in self.weights.iter().enumerate() {
                let idx = start + (i * self.dilation) as isize;
                if idx >= 0 && idx < t {
                    acc += w * x.value(idx as usize, self.channel);
                }
            }
            if acc > 0.0 {
                positives += 1;
            }
            if acc > max {
                max = acc;
            }
        }
        Ok((positives as f64 / out_len as f64, max))
    }
}

/// Fitted kernel bank plus ridge classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct RocketModel {
    kernels: Vec<Kernel>,
    feat_mean: Vec<f64>,
    feat_std: Vec<f64>,
    /// `features x classes` ridge weights.
    weights: Mat,
    intercept: Vec<f64>,
    classes: usize,
    channels: usize,
    /// The regularization picked by the holdout scan.
    pub ridge_lambda: f64,
}

impl RocketModel {
    #[inline]
    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    #[inline]
    pub fn feature_count(&self) -> usize {
        2 * self.kernels.len()
    }

    #[inline]
    pub fn classes(&self) -> usize {
        self.classes
    }
}

fn random_kernels(
    num_kernels: usize,
    series_len: usize,
    channels: usize,
    rng: &mut SeedRng,
) -> Vec<Kernel> {
    let mut kernels = Vec::with_capacity(num_kernels);
    for _ in 0..num_kernels {
        let length = KERNEL_LENGTHS[rng.index(KERNEL_LENGTHS.len())];
        let mut weights: Vec<f64> = (0..length).map(|_| rng.normal()).collect();
        let mean = weights.iter().sum::<f64>() / length as f64;
        weights.iter_mut().for_each(|w| *w -= mean);
        let bias = rng.uniform_in(-1.0, 1.0);
        // Dilation 2^u with u uniform over the range keeping the dilated
        // span inside the series.
        let max_exp = math::ln((series_len - 1) as f64 / (length - 1) as f64) / math::ln(2.0);
        let u = rng.uniform_in(0.0, max_exp.max(0.0));
        let dilation = (math::powf(2.0, u) as usize).max(1);
        let padding = if rng.uniform() < 0.5 {
            ((length - 1) * dilation) / 2
        } else {
            0
        };
        let channel = rng.index(channels);
        kernels.push(Kernel {
            length,
            weights,
            bias,
            dilation,
            padding,
            channel,
        });
    }
    kernels
}

/// Feature matrix row for one series: `[ppv_0, max_0, ppv_1, max_1, ...]`.
pub fn rocket_transform(kernels: &[Kernel], x: &TimeSeries) -> Result<Vec<f64>> {
    let mut features = Vec::with_capacity(2 * kernels.len());
    for kernel in kernels {
        if kernel.channel >= x.channels() {
            return Err(Error::DimensionMismatch {
                what: "kernel channel",
                expected: x.channels(),
                got: kernel.channel,
            });
        }
        let (ppv, max) = kernel.apply(x)?;
        features.push(ppv);
        features.push(max);
    }
    Ok(features)
}

/// Ridge one-vs-rest fit with an unpenalized intercept; uses the dual form
/// when features outnumber rows.
fn ridge_fit(x: &Mat, y: &Mat, lambda: f64) -> Result<(Mat, Vec<f64>)> {
    let (n, f) = (x.rows(), x.cols());
    let c = y.cols();
    let mut x_mean = vec![0.0; f];
    for r in 0..n {
        for (m, v) in x_mean.iter_mut().zip(x.row(r).iter()) {
            *m += v;
        }
    }
    x_mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut y_mean = vec![0.0; c];
    for r in 0..n {
        for (m, v) in y_mean.iter_mut().zip(y.row(r).iter()) {
            *m += v;
        }
    }
    y_mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut xc = Mat::zeros(n, f);
    for r in 0..n {
        for j in 0..f {
            xc[(r, j)] = x[(r, j)] - x_mean[j];
        }
    }
    let mut yc = Mat::zeros(n, c);
    for r in 0..n {
        for j in 0..c {
            yc[(r, j)] = y[(r, j)] - y_mean[j];
        }
    }

    let weights = if f <= n {
        let xt = xc.transpose();
        let mut a = xt.matmul(&xc);
        for i in 0..f {
            a[(i, i)] += lambda;
        }
        math::solve_linear(&a, &xt.matmul(&yc))?
    } else {
        let mut gram = xc.matmul(&xc.transpose());
        for i in 0..n {
            gram[(i, i)] += lambda;
        }
        let alpha = math::solve_linear(&gram, &yc)?;
        xc.transpose().matmul(&alpha)
    };
    let mut intercept = y_mean;
    for (j, b) in intercept.iter_mut().enumerate() {
        for i in 0..f {
            *b -= x_mean[i] * weights[(i, j)];
        }
    }
    Ok((weights, intercept))
}

fn scores_for(weights: &Mat, intercept: &[f64], row: &[f64]) -> Vec<f64> {
    let mut out = intercept.to_vec();
    for (i, &v) in row.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += v * weights[(i, j)];
        }
    }
    out
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Fit the kernel bank and ridge classifier. Labels are class ids
/// `0..classes`; at least two classes must be present and the series must be
/// at least as long as the smallest kernel.
pub fn rocket_fit(
    train: &[TimeSeries],
    labels: &[usize],
    num_kernels: usize,
    seed: u64,
) -> Result<RocketModel> {
    if train.is_empty() {
        return Err(Error::Empty("rocket training set"));
    }
    if train.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            what: "rocket labels",
            expected: train.len(),
            got: labels.len(),
        });
    }
    if num_kernels == 0 {
        return Err(Error::InvalidParameter(alloc::string::String::from(
            "num_kernels must be positive",
        )));
    }
    let series_len = train[0].len();
    let channels = train[0].channels();
    for x in train {
        if x.len() != series_len || x.channels() != channels {
            return Err(Error::DimensionMismatch {
                what: "rocket training shapes",
                expected: series_len * channels,
                got: x.len() * x.channels(),
            });
        }
    }
    if series_len < KERNEL_LENGTHS[0] {
        return Err(Error::InvalidParameter(alloc::format!(
            "series length {series_len} shorter than the smallest kernel ({})",
            KERNEL_LENGTHS[0]
        )));
    }
    let classes = labels.iter().max().unwrap() + 1;
    let distinct = {
        let mut seen = vec![false; classes];
        labels.iter().for_each(|&l| seen[l] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(Error::InvalidParameter(alloc::string::String::from(
            "rocket needs at least two classes",
        )));
    }

    let mut rng = SeedRng::new(seed);
    let kernels = random_kernels(num_kernels, series_len, channels, &mut rng);

    let n = train.len();
    let f = 2 * num_kernels;
    let mut features = Mat::zeros(n, f);
    for (r, x) in train.iter().enumerate() {
        let row = rocket_transform(&kernels, x)?;
        features.row_mut(r).copy_from_slice(&row);
    }

    // Standardize per feature on the training set.
    let mut feat_mean = vec![0.0; f];
    let mut feat_std = vec![0.0; f];
    for j in 0..f {
        let mut sum = 0.0;
        for r in 0..n {
            sum += features[(r, j)];
        }
        let mean = sum / n as f64;
        let mut var = 0.0;
        for r in 0..n {
            let d = features[(r, j)] - mean;
            var += d * d;
        }
        let std = math::sqrt(var / n as f64);
        feat_mean[j] = mean;
        feat_std[j] = if std > 0.0 { std } else { 1.0 };
        for r in 0..n {
            features[(r, j)] = (features[(r, j)] - mean) / feat_std[j];
        }
    }

    let mut targets = Mat::zeros(n, classes);
    for (r, &l) in labels.iter().enumerate() {
        for j in 0..classes {
            targets[(r, j)] = if j == l { 1.0 } else { -1.0 };
        }
    }

    // Pick lambda on a held-out fifth of the training rows, then refit on
    // everything.
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let holdout_size = (n / 5).max(1);
    let (holdout, fit_rows) = order.split_at(holdout_size);
    let lambda = if fit_rows.is_empty() {
        1.0
    } else {
        let sub_x = gather_rows(&features, fit_rows);
        let sub_y = gather_rows(&targets, fit_rows);
        let mut best = (RIDGE_CANDIDATES[0], -1.0);
        for &candidate in &RIDGE_CANDIDATES {
            let (w, b) = ridge_fit(&sub_x, &sub_y, candidate)?;
            let mut hits = 0usize;
            for &r in holdout {
                if argmax(&scores_for(&w, &b, features.row(r))) == labels[r] {
                    hits += 1;
                }
            }
            let acc = hits as f64 / holdout.len() as f64;
            if acc > best.1 {
                best = (candidate, acc);
            }
        }
        best.0
    };
    let (weights, intercept) = ridge_fit(&features, &targets, lambda)?;

    Ok(RocketModel {
        kernels,
        feat_mean,
        feat_std,
        weights,
        intercept,
        classes,
        channels,
        ridge_lambda: lambda,
    })
}

fn gather_rows(m: &Mat, rows: &[usize]) -> Mat {
    let mut out = Mat::zeros(rows.len(), m.cols());
    for (r, &src) in rows.iter().enumerate() {
        out.row_mut(r).copy_from_slice(m.row(src));
    }
    out
}

/// Predicted class and the per-class ridge scores for one series.
pub fn rocket_predict(model: &RocketModel, x: &TimeSeries) -> Result<(usize, Vec<f64>)> {
    if x.channels() != model.channels {
        return Err(Error::DimensionMismatch {
            what: "rocket channels",
            expected: model.channels,
            got: x.channels(),
        });
    }
    let mut row = rocket_transform(&model.kernels, x)?;
    for (j, v) in row.iter_mut().enumerate() {
        *v = (*v - model.feat_mean[j]) / model.feat_std[j];
    }
    let scores = scores_for(&model.weights, &model.intercept, &row);
    Ok((argmax(&scores), scores))
}
