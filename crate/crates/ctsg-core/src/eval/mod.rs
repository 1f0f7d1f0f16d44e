//! Evaluation metrics for generated time series.
//!
//! Three axes: generation fidelity (Euclidean distance, dynamic time
//! warping), attribute coherence (Frechet distance over embeddings,
//! autocorrelation difference), and controllability probes (a random-kernel
//! classifier in [`rocket`], an empirical-CDF outlier detector in [`ecod`],
//! and the accuracy / weighted-F1 / AUC scores below).

mod ecod;
mod frechet;
mod rocket;

pub use ecod::{ecod_fit, ecod_flag, ecod_score, EcodModel};
pub use frechet::{cfid, cfid_embedded, COVARIANCE_SHRINKAGE};
pub use rocket::{rocket_fit, rocket_predict, rocket_transform, Kernel, RocketModel};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::series::TimeSeries;

/// Euclidean (Frobenius) distance between two same-shape series.
pub fn ed(x: &TimeSeries, y: &TimeSeries) -> Result<f64> {
    if !x.same_shape(y) {
        return Err(Error::DimensionMismatch {
            what: "series shapes for ed",
            expected: x.values().len(),
            got: y.values().len(),
        });
    }
    Ok(math::sqrt(math::squared_distance(x.values(), y.values())))
}

/// Dynamic time warping distance: the square root of the minimal
/// accumulated squared-Euclidean frame cost over monotone alignments
/// (full dynamic program, no window). Lengths may differ; channel counts
/// must match.
pub fn dtw(x: &TimeSeries, y: &TimeSeries) -> Result<f64> {
    if x.channels() != y.channels() {
        return Err(Error::DimensionMismatch {
            what: "channel counts for dtw",
            expected: x.channels(),
            got: y.channels(),
        });
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::Empty("dtw input series"));
    }
    let (n, m) = (x.len(), y.len());
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut current = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        current[0] = f64::INFINITY;
        for j in 1..=m {
            let cost = math::squared_distance(x.frame(i - 1), y.frame(j - 1));
            let best = prev[j].min(current[j - 1]).min(prev[j - 1]);
            current[j] = cost + best;
        }
        core::mem::swap(&mut prev, &mut current);
    }
    Ok(math::sqrt(prev[m]))
}

/// Sample autocorrelation of one channel at a given lag; constant channels
/// yield zero.
fn autocorrelation(channel: &[f64], lag: usize) -> f64 {
    let t = channel.len();
    let mean = channel.iter().sum::<f64>() / t as f64;
    let denom: f64 = channel.iter().map(|&v| (v - mean) * (v - mean)).sum();
    if denom == 0.0 {
        return 0.0;
    }
    let num: f64 = (0..t - lag)
        .map(|i| (channel[i] - mean) * (channel[i + lag] - mean))
        .sum();
    num / denom
}

/// Autocorrelation difference: the mean over channels and lags `1..=max_lag`
/// of the absolute gap between the two series' sample autocorrelations.
pub fn acd(x: &TimeSeries, y: &TimeSeries, max_lag: usize) -> Result<f64> {
    if !x.same_shape(y) {
        return Err(Error::DimensionMismatch {
            what: "series shapes for acd",
            expected: x.values().len(),
            got: y.values().len(),
        });
    }
    if max_lag == 0 || max_lag >= x.len() {
        return Err(Error::InvalidParameter(alloc::format!(
            "max_lag must be in 1..{} (series length)",
            x.len()
        )));
    }
    let mut total = 0.0;
    for c in 0..x.channels() {
        let xc = x.channel(c);
        let yc = y.channel(c);
        for lag in 1..=max_lag {
            total += (autocorrelation(&xc, lag) - autocorrelation(&yc, lag)).abs();
        }
    }
    Ok(total / (x.channels() * max_lag) as f64)
}

/// Default autocorrelation horizon: `min(T/2, 20)`.
pub fn default_max_lag(series_len: usize) -> usize {
    (series_len / 2).clamp(1, 20)
}

/// Fraction of matching label/prediction pairs.
pub fn accuracy(labels: &[usize], preds: &[usize]) -> Result<f64> {
    if labels.len() != preds.len() {
        return Err(Error::DimensionMismatch {
            what: "labels vs predictions",
            expected: labels.len(),
            got: preds.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty("label set"));
    }
    let hits = labels.iter().zip(preds.iter()).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Per-class F1 weighted by true-label support.
pub fn weighted_f1(labels: &[usize], preds: &[usize]) -> Result<f64> {
    if labels.len() != preds.len() {
        return Err(Error::DimensionMismatch {
            what: "labels vs predictions",
            expected: labels.len(),
            got: preds.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty("label set"));
    }
    let classes = labels.iter().chain(preds.iter()).max().unwrap() + 1;
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fn_ = vec![0usize; classes];
    let mut support = vec![0usize; classes];
    for (&l, &p) in labels.iter().zip(preds.iter()) {
        support[l] += 1;
        if l == p {
            tp[l] += 1;
        } else {
            fp[p] += 1;
            fn_[l] += 1;
        }
    }
    let mut weighted = 0.0;
    for c in 0..classes {
        if support[c] == 0 {
            continue;
        }
        let precision_den = tp[c] + fp[c];
        let recall_den = tp[c] + fn_[c];
        let f1 = if precision_den == 0 || recall_den == 0 || tp[c] == 0 {
            0.0
        } else {
            let precision = tp[c] as f64 / precision_den as f64;
            let recall = tp[c] as f64 / recall_den as f64;
            2.0 * precision * recall / (precision + recall)
        };
        weighted += f1 * support[c] as f64;
    }
    Ok(weighted / labels.len() as f64)
}

/// Area under the ROC curve via the Mann-Whitney statistic with midranks;
/// score ties between the classes count one half.
pub fn auc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            what: "labels vs scores",
            expected: labels.len(),
            got: scores.len(),
        });
    }
    math::ensure_finite(scores, "auc scores")?;
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::InvalidParameter(alloc::string::String::from(
            "auc needs both classes present",
        )));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    // Midranks over tie groups.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (positives * (positives + 1)) as f64 / 2.0;
    Ok(u / (positives * negatives) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedRng;

    fn series(values: &[f64]) -> TimeSeries {
        TimeSeries::univariate(values).unwrap()
    }

    fn random_series(len: usize, channels: usize, rng: &mut SeedRng) -> TimeSeries {
        TimeSeries::new(
            (0..len * channels).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
            len,
            channels,
        )
        .unwrap()
    }

    #[test]
    fn ed_examples() {
        let x = series(&[0.0, 0.0]);
        let y = series(&[3.0, 4.0]);
        assert_eq!(ed(&x, &x).unwrap(), 0.0);
        assert_eq!(ed(&x, &y).unwrap(), 5.0);
        assert_eq!(ed(&x, &y).unwrap(), ed(&y, &x).unwrap());
    }

    #[test]
    fn ed_rejects_shape_mismatch() {
        let x = series(&[0.0, 0.0]);
        let y = series(&[1.0]);
        assert!(ed(&x, &y).is_err());
    }

    #[test]
    fn dtw_self_distance_is_zero() {
        let x = series(&[1.0, 2.0, 3.0, 2.0]);
        assert_eq!(dtw(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn dtw_warps_duplicate_frame_for_free() {
        let x = series(&[1.0, 2.0, 3.0]);
        let y = series(&[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(dtw(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn dtw_single_frames() {
        assert_eq!(dtw(&series(&[0.0]), &series(&[5.0])).unwrap(), 5.0);
    }

    /// Exhaustive enumeration of monotone warping paths.
    fn dtw_oracle(x: &TimeSeries, y: &TimeSeries) -> f64 {
        fn walk(x: &TimeSeries, y: &TimeSeries, i: usize, j: usize) -> f64 {
            let cost = crate::math::squared_distance(x.frame(i), y.frame(j));
            if i == x.len() - 1 && j == y.len() - 1 {
                return cost;
            }
            let mut best = f64::INFINITY;
            if i + 1 < x.len() {
                best = best.min(walk(x, y, i + 1, j));
            }
            if j + 1 < y.len() {
                best = best.min(walk(x, y, i, j + 1));
            }
            if i + 1 < x.len() && j + 1 < y.len() {
                best = best.min(walk(x, y, i + 1, j + 1));
            }
            cost + best
        }
        crate::math::sqrt(walk(x, y, 0, 0))
    }

    #[test]
    fn dtw_matches_path_enumeration() {
        let mut rng = SeedRng::new(3);
        for _ in 0..200 {
            let lx = 1 + rng.index(6);
            let ly = 1 + rng.index(6);
            let channels = 1 + rng.index(2);
            let x = random_series(lx, channels, &mut rng);
            let y = random_series(ly, channels, &mut rng);
            let fast = dtw(&x, &y).unwrap();
            let slow = dtw_oracle(&x, &y);
            assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }

    #[test]
    fn dtw_never_exceeds_ed_for_equal_lengths() {
        let mut rng = SeedRng::new(4);
        for _ in 0..500 {
            let len = 2 + rng.index(20);
            let x = random_series(len, 1, &mut rng);
            let y = random_series(len, 1, &mut rng);
            let d = dtw(&x, &y).unwrap();
            let e = ed(&x, &y).unwrap();
            assert!(d <= e + 1e-12, "dtw {d} > ed {e}");
        }
    }

    #[test]
    fn acd_self_is_zero() {
        let mut rng = SeedRng::new(5);
        let x = random_series(32, 2, &mut rng);
        assert_eq!(acd(&x, &x, 8).unwrap(), 0.0);
    }

    #[test]
    fn acd_alternating_vs_constant() {
        // Alternating +-1 has lag-1 autocorrelation -(T-1)/T; a constant
        // series contributes zero by convention.
        let alternating: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let x = series(&alternating);
        let rho = autocorrelation(&alternating, 1);
        assert!((rho + 63.0 / 64.0).abs() < 1e-12);
        let y = series(&[2.5; 64]);
        let v = acd(&x, &y, 1).unwrap();
        assert!((v - 63.0 / 64.0).abs() < 1e-12);
    }

    #[test]
    fn acd_white_noise_pairs_stay_small() {
        let mut rng = SeedRng::new(6);
        let x = TimeSeries::new((0..512).map(|_| rng.normal()).collect(), 512, 1).unwrap();
        let y = TimeSeries::new((0..512).map(|_| rng.normal()).collect(), 512, 1).unwrap();
        let v = acd(&x, &y, 20).unwrap();
        assert!(v < 0.15, "acd {v}");
    }

    #[test]
    fn acd_rejects_large_lag() {
        let x = series(&[1.0, 2.0, 3.0]);
        assert!(acd(&x, &x, 3).is_err());
        assert!(acd(&x, &x, 2).is_ok());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn weighted_f1_examples() {
        assert_eq!(weighted_f1(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        // labels [a, a, b], preds [a, b, b]: per-class F1 both 2/3,
        // supports {2, 1} -> weighted 2/3.
        let v = weighted_f1(&[0, 0, 1], &[0, 1, 1]).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn auc_hand_example() {
        let v = auc(&[false, false, true, true], &[0.1, 0.4, 0.35, 0.8]).unwrap();
        assert!((v - 0.75).abs() < 1e-12);
    }

    #[test]
    fn auc_perfect_separation() {
        let v = auc(&[false, false, true, true], &[0.1, 0.2, 0.9, 1.0]).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn auc_negation_symmetry() {
        let mut rng = SeedRng::new(7);
        for _ in 0..50 {
            let n = 4 + rng.index(40);
            let labels: Vec<bool> = (0..n).map(|_| rng.uniform() < 0.5).collect();
            if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
                continue;
            }
            // Coarse scores force ties.
            let scores: Vec<f64> = (0..n).map(|_| (rng.index(6)) as f64 / 4.0).collect();
            let forward = auc(&labels, &scores).unwrap();
            let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
            let backward = auc(&labels, &negated).unwrap();
            assert!((forward + backward - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn auc_matches_pair_counting_oracle() {
        let mut rng = SeedRng::new(8);
        for _ in 0..100 {
            let n = 4 + rng.index(60);
            let labels: Vec<bool> = (0..n).map(|_| rng.uniform() < 0.4).collect();
            if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
                continue;
            }
            let scores: Vec<f64> = (0..n).map(|_| (rng.index(8)) as f64 / 8.0).collect();
            let fast = auc(&labels, &scores).unwrap();
            // Exhaustive pair count with ties at one half.
            let mut wins = 0.0;
            let mut pairs = 0.0;
            for i in 0..n {
                if !labels[i] {
                    continue;
                }
                for j in 0..n {
                    if labels[j] {
                        continue;
                    }
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
            let slow = wins / pairs;
            assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }
}
