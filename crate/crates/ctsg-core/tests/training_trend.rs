//! Training-run oracle on a small sine set: the smoothed loss must not rise
//! over the back half of training.

use ctsg_core::nn::TrainConfig;
use ctsg_core::rng::SeedRng;
use ctsg_core::vae::{train, VaeModel};
use ctsg_core::TimeSeries;

fn sine_set(n: usize, len: usize, seed: u64) -> Vec<TimeSeries> {
    let mut rng = SeedRng::new(seed);
    (0..n)
        .map(|_| {
            let amplitude = rng.uniform_in(0.4, 1.0);
            let phase = rng.uniform_in(0.0, 1.0);
            let values: Vec<f64> = (0..len)
                .map(|t| {
                    amplitude
                        * (2.0 * std::f64::consts::PI * (2.0 * t as f64 / len as f64 + phase))
                            .sin()
                })
                .collect();
            TimeSeries::univariate(&values).unwrap()
        })
        .collect()
}

#[test]
fn smoothed_loss_is_non_increasing_late_in_training() {
    let data = sine_set(48, 24, 5);
    let mut model = VaeModel::dense(24, 1, 4, &[32], 9).unwrap();
    let cfg = TrainConfig {
        epochs: 120,
        batch_size: 48,
        learning_rate: 5e-4,
        seed: 1,
        ..TrainConfig::default()
    };
    let trace = train(&mut model, &data, &cfg, 1e-3).unwrap();
    assert_eq!(trace.len(), 120);

    // 10-epoch moving average of the total loss.
    let window = 10;
    let averages: Vec<f64> = (0..=trace.len() - window)
        .map(|i| trace[i..i + window].iter().map(|e| e.total).sum::<f64>() / window as f64)
        .collect();
    let half = averages.len() / 2;
    for i in half..averages.len() - 1 {
        assert!(
            averages[i + 1] <= averages[i] * (1.0 + 1e-9),
            "moving average rose at epoch {}: {} -> {}",
            i,
            averages[i],
            averages[i + 1]
        );
    }
}
