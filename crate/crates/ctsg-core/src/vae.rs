//! Variational autoencoder over fixed-shape time series.
//!
//! The encoder maps a flattened `T x d_r` series to the mean and
//! log-variance of a diagonal Gaussian over the latent space; the decoder
//! deterministically maps a latent vector back to a series. Training
//! minimizes reconstruction error plus a weighted KL term against the
//! standard-normal prior.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::nn::{Activation, AdamState, DenseNet, Gradients, TrainConfig};
use crate::rng::SeedRng;
use crate::series::TimeSeries;

/// The latent triple produced for one series.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode {
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
    pub z: Vec<f64>,
}

/// Encoder/decoder pair with fixed series shape and latent width.
#[derive(Debug, Clone, PartialEq)]
pub struct VaeModel {
    encoder: DenseNet,
    decoder: DenseNet,
    latent_dim: usize,
    series_len: usize,
    channels: usize,
}

impl VaeModel {
    pub fn new(
        encoder: DenseNet,
        decoder: DenseNet,
        latent_dim: usize,
        series_len: usize,
        channels: usize,
    ) -> Result<Self> {
        let flat = series_len * channels;
        if encoder.input_dim() != flat {
            return Err(Error::DimensionMismatch {
                what: "encoder input",
                expected: flat,
                got: encoder.input_dim(),
            });
        }
        if encoder.output_dim() != 2 * latent_dim {
            return Err(Error::DimensionMismatch {
                what: "encoder output (mu ++ log_var)",
                expected: 2 * latent_dim,
                got: encoder.output_dim(),
            });
        }
        if decoder.input_dim() != latent_dim {
            return Err(Error::DimensionMismatch {
                what: "decoder input",
                expected: latent_dim,
                got: decoder.input_dim(),
            });
        }
        if decoder.output_dim() != flat {
            return Err(Error::DimensionMismatch {
                what: "decoder output",
                expected: flat,
                got: decoder.output_dim(),
            });
        }
        Ok(VaeModel {
            encoder,
            decoder,
            latent_dim,
            series_len,
            channels,
        })
    }

    /// Fully-connected architecture on flattened series: relu hidden layers,
    /// identity outputs, Glorot-uniform weights, zero biases.
    pub fn dense(
        series_len: usize,
        channels: usize,
        latent_dim: usize,
        hidden: &[usize],
        seed: u64,
    ) -> Result<Self> {
        let mut rng = SeedRng::new(seed);
        let flat = series_len * channels;
        let mut enc_dims = vec![flat];
        enc_dims.extend_from_slice(hidden);
        enc_dims.push(2 * latent_dim);
        let encoder = DenseNet::glorot(&enc_dims, Activation::Relu, Activation::Identity, &mut rng)?;
        let mut dec_dims = vec![latent_dim];
        dec_dims.extend(hidden.iter().rev());
        dec_dims.push(flat);
        let decoder = DenseNet::glorot(&dec_dims, Activation::Relu, Activation::Identity, &mut rng)?;
        VaeModel::new(encoder, decoder, latent_dim, series_len, channels)
    }

    #[inline]
    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    #[inline]
    pub fn series_len(&self) -> usize {
        self.series_len
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn encoder(&self) -> &DenseNet {
        &self.encoder
    }

    #[inline]
    pub fn decoder(&self) -> &DenseNet {
        &self.decoder
    }

    fn check_shape(&self, x: &TimeSeries) -> Result<()> {
        if x.len() != self.series_len || x.channels() != self.channels {
            return Err(Error::DimensionMismatch {
                what: "series shape",
                expected: self.series_len * self.channels,
                got: x.len() * x.channels(),
            });
        }
        Ok(())
    }

    /// Posterior parameters for one series: `(mu, log_var)`, each of length
    /// `latent_dim`. Deterministic in `(self, x)`.
    pub fn encode(&self, x: &TimeSeries) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_shape(x)?;
        let out = self.encoder.predict(x.values())?;
        let (mu, log_var) = out.split_at(self.latent_dim);
        Ok((mu.to_vec(), log_var.to_vec()))
    }

    /// Decode a latent vector into a series. Deterministic in `(self, z)`.
    pub fn decode(&self, z: &[f64]) -> Result<TimeSeries> {
        if z.len() != self.latent_dim {
            return Err(Error::DimensionMismatch {
                what: "latent vector",
                expected: self.latent_dim,
                got: z.len(),
            });
        }
        let out = self.decoder.predict(z)?;
        TimeSeries::new(out, self.series_len, self.channels)
    }

    /// Encode, sample, decode. `noise == None` runs the deterministic mode
    /// (`z = mu`).
    pub fn reconstruct(&self, x: &TimeSeries, noise: Option<&[f64]>) -> Result<TimeSeries> {
        let (mu, log_var) = self.encode(x)?;
        let z = match noise {
            Some(eps) => reparameterize(&mu, &log_var, eps)?,
            None => mu,
        };
        self.decode(&z)
    }

    /// Full latent triple for one series.
    pub fn encode_sampled(&self, x: &TimeSeries, rng: &mut SeedRng) -> Result<LatentCode> {
        let (mu, log_var) = self.encode(x)?;
        let mut noise = vec![0.0; self.latent_dim];
        rng.fill_normal(&mut noise);
        let z = reparameterize(&mu, &log_var, &noise)?;
        Ok(LatentCode { mu, log_var, z })
    }

    /// All parameters, encoder first then decoder, each flattened layer by
    /// layer (weights row-major, then bias).
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = self.encoder.params_flat();
        out.extend(self.decoder.params_flat());
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        let enc_count = self.encoder.param_count();
        let expected = enc_count + self.decoder.param_count();
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "vae flat parameters",
                expected,
                got: params.len(),
            });
        }
        self.encoder.set_params_flat(&params[..enc_count])?;
        self.decoder.set_params_flat(&params[enc_count..])
    }
}

/// `z = mu + exp(log_var / 2) * noise`, elementwise.
pub fn reparameterize(mu: &[f64], log_var: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
    if mu.len() != log_var.len() || mu.len() != noise.len() {
        return Err(Error::DimensionMismatch {
            what: "reparameterization lengths",
            expected: mu.len(),
            got: log_var.len().max(noise.len()),
        });
    }
    let z: Vec<f64> = mu
        .iter()
        .zip(log_var.iter().zip(noise.iter()))
        .map(|(&m, (&lv, &e))| m + math::exp(lv / 2.0) * e)
        .collect();
    math::ensure_finite(&z, "sampled latent")?;
    Ok(z)
}

/// KL divergence of `N(mu, diag(exp(log_var)))` from the standard normal:
/// `-1/2 sum(1 + log_var - mu^2 - exp(log_var))`. Nonnegative, zero exactly
/// at `(0, 0)`.
pub fn kl_divergence(mu: &[f64], log_var: &[f64]) -> Result<f64> {
    if mu.len() != log_var.len() {
        return Err(Error::DimensionMismatch {
            what: "kl divergence lengths",
            expected: mu.len(),
            got: log_var.len(),
        });
    }
    let mut acc = 0.0;
    for (&m, &lv) in mu.iter().zip(log_var.iter()) {
        acc += 1.0 + lv - m * m - math::exp(lv);
    }
    let kl = -0.5 * acc;
    if !kl.is_finite() {
        return Err(Error::NonFinite {
            what: "kl divergence",
        });
    }
    // Clamp the tiny negative rounding residue near the optimum.
    Ok(kl.max(0.0))
}

/// Loss breakdown for one series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboBreakdown {
    pub recon: f64,
    pub kl: f64,
    pub total: f64,
}

/// Negative-ELBO-style minimization objective for one series:
/// `recon + kl_weight * kl` with `recon = ||x - dec(z)||^2`.
pub fn elbo_loss(
    model: &VaeModel,
    x: &TimeSeries,
    noise: &[f64],
    kl_weight: f64,
) -> Result<ElboBreakdown> {
    let (breakdown, _, _) = elbo_gradients(model, x, noise, kl_weight)?;
    Ok(breakdown)
}

/// Loss and parameter gradients for one series. Returns
/// `(breakdown, encoder gradients, decoder gradients)`.
pub fn elbo_gradients(
    model: &VaeModel,
    x: &TimeSeries,
    noise: &[f64],
    kl_weight: f64,
) -> Result<(ElboBreakdown, Gradients, Gradients)> {
    model.check_shape(x)?;
    if noise.len() != model.latent_dim {
        return Err(Error::DimensionMismatch {
            what: "noise vector",
            expected: model.latent_dim,
            got: noise.len(),
        });
    }
    let d = model.latent_dim;
    let (enc_out, enc_cache) = model.encoder.forward(x.values())?;
    let (mu, log_var) = enc_out.split_at(d);
    let sigma: Vec<f64> = log_var.iter().map(|&lv| math::exp(lv / 2.0)).collect();
    let z: Vec<f64> = mu
        .iter()
        .zip(sigma.iter().zip(noise.iter()))
        .map(|(&m, (&s, &e))| m + s * e)
        .collect();
    math::ensure_finite(&z, "sampled latent")?;
    let (y, dec_cache) = model.decoder.forward(&z)?;

    let mut recon = 0.0;
    let mut dy = vec![0.0; y.len()];
    for (i, (&yi, &xi)) in y.iter().zip(x.values().iter()).enumerate() {
        let diff = yi - xi;
        recon += diff * diff;
        dy[i] = 2.0 * diff;
    }
    let kl = kl_divergence(mu, log_var)?;
    let total = recon + kl_weight * kl;
    if !total.is_finite() {
        return Err(Error::NonFinite { what: "elbo loss" });
    }

    let (dec_grads, dz) = model.decoder.backward(&dec_cache, &dy)?;

    // Gradient into the encoder head: reconstruction flows through
    // z = mu + sigma * eps, the KL term is differentiated in closed form.
    let mut dhead = vec![0.0; 2 * d];
    for j in 0..d {
        dhead[j] = dz[j] + kl_weight * mu[j];
        let dsigma_dlv = 0.5 * sigma[j];
        let dkl_dlv = 0.5 * (math::exp(log_var[j]) - 1.0);
        dhead[d + j] = dz[j] * noise[j] * dsigma_dlv + kl_weight * dkl_dlv;
    }
    let (enc_grads, _) = model.encoder.backward(&enc_cache, &dhead)?;

    let breakdown = ElboBreakdown { recon, kl, total };
    Ok((breakdown, enc_grads, dec_grads))
}

/// Per-epoch mean losses recorded during training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub recon: f64,
    pub kl: f64,
    pub total: f64,
}

/// Train the model in place by seeded mini-batch Adam. Returns the loss
/// trace. Bitwise deterministic for a fixed `(model, data, cfg, kl_weight)`.
pub fn train(
    model: &mut VaeModel,
    data: &[TimeSeries],
    cfg: &TrainConfig,
    kl_weight: f64,
) -> Result<Vec<EpochLoss>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    if !(kl_weight.is_finite() && kl_weight >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "kl_weight must be finite and nonnegative, got {kl_weight}"
        )));
    }
    for x in data {
        model.check_shape(x)?;
    }
    let n = data.len();
    let d = model.latent_dim;
    let mut rng = SeedRng::new(cfg.seed);
    let mut enc_state = AdamState::new(&model.encoder);
    let mut dec_state = AdamState::new(&model.decoder);
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..n).collect();
    let mut noise = vec![0.0; d];

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut epoch_recon = 0.0;
        let mut epoch_kl = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut enc_acc = Gradients::zeros_like(&model.encoder);
            let mut dec_acc = Gradients::zeros_like(&model.decoder);
            let scale = 1.0 / batch.len() as f64;
            for &idx in batch {
                rng.fill_normal(&mut noise);
                let (breakdown, enc_grads, dec_grads) =
                    elbo_gradients(model, &data[idx], &noise, kl_weight)?;
                enc_acc.add_scaled(&enc_grads, scale);
                dec_acc.add_scaled(&dec_grads, scale);
                epoch_recon += breakdown.recon;
                epoch_kl += breakdown.kl;
            }
            crate::nn::adam_step(&mut model.encoder, &enc_acc, &mut enc_state, cfg)?;
            crate::nn::adam_step(&mut model.decoder, &dec_acc, &mut dec_state, cfg)?;
        }
        let recon = epoch_recon / n as f64;
        let kl = epoch_kl / n as f64;
        let total = recon + kl_weight * kl;
        if !total.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        trace.push(EpochLoss {
            epoch,
            recon,
            kl,
            total,
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Mat;
    use crate::nn::Layer;

    fn zero_weight_net(input: usize, output: usize, bias: Vec<f64>) -> DenseNet {
        let w = Mat::zeros(output, input);
        DenseNet::new(vec![Layer::new(w, bias, Activation::Identity).unwrap()]).unwrap()
    }

    fn small_model(seed: u64) -> VaeModel {
        VaeModel::dense(8, 1, 3, &[10], seed).unwrap()
    }

    fn sample_series(seed: u64, len: usize, channels: usize) -> TimeSeries {
        let mut rng = SeedRng::new(seed);
        let values: Vec<f64> = (0..len * channels).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        TimeSeries::new(values, len, channels).unwrap()
    }

    #[test]
    fn encode_is_deterministic() {
        let model = small_model(1);
        let x = sample_series(2, 8, 1);
        let a = model.encode(&x).unwrap();
        let b = model.encode(&x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_weight_encoder_returns_bias_halves() {
        let bias = vec![0.1, 0.2, 0.3, -1.0, -2.0, -3.0];
        let encoder = zero_weight_net(8, 6, bias);
        let decoder = zero_weight_net(3, 8, vec![0.0; 8]);
        let model = VaeModel::new(encoder, decoder, 3, 8, 1).unwrap();
        let (mu, log_var) = model.encode(&sample_series(3, 8, 1)).unwrap();
        assert_eq!(mu, vec![0.1, 0.2, 0.3]);
        assert_eq!(log_var, vec![-1.0, -2.0, -3.0]);
    }

    #[test]
    fn encode_output_lengths_match_latent_dim() {
        let model = small_model(4);
        let (mu, log_var) = model.encode(&sample_series(5, 8, 1)).unwrap();
        assert_eq!(mu.len(), 3);
        assert_eq!(log_var.len(), 3);
    }

    #[test]
    fn encode_rejects_wrong_shape() {
        let model = small_model(1);
        let x = sample_series(2, 4, 1);
        assert!(matches!(
            model.encode(&x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn reparameterize_zero_noise_returns_mu() {
        let mu = [1.0, -2.0, 0.5];
        let z = reparameterize(&mu, &[0.3, -0.7, 2.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(z, mu.to_vec());
    }

    #[test]
    fn reparameterize_unit_variance_adds_noise() {
        let z = reparameterize(&[1.0, 2.0], &[0.0, 0.0], &[0.25, -0.5]).unwrap();
        assert_eq!(z, vec![1.25, 1.5]);
    }

    #[test]
    fn reparameterize_monte_carlo_mean() {
        // Mean of z over many unit-normal draws approaches mu; the tolerance
        // is four standard errors per coordinate.
        let mu = [0.5, -1.5];
        let log_var = [0.4, -0.8];
        let draws = 10_000;
        let mut rng = SeedRng::new(77);
        let mut sums = [0.0, 0.0];
        let mut noise = [0.0, 0.0];
        for _ in 0..draws {
            rng.fill_normal(&mut noise);
            let z = reparameterize(&mu, &log_var, &noise).unwrap();
            sums[0] += z[0];
            sums[1] += z[1];
        }
        for j in 0..2 {
            let mean = sums[j] / draws as f64;
            let tol = 4.0 * math::exp(log_var[j] / 2.0) / 100.0;
            assert!((mean - mu[j]).abs() < tol, "coord {j}: {mean} vs {}", mu[j]);
        }
    }

    #[test]
    fn reparameterize_rejects_length_mismatch() {
        assert!(reparameterize(&[0.0], &[0.0, 0.0], &[0.0]).is_err());
    }

    #[test]
    fn decode_deterministic_and_shaped() {
        let model = small_model(9);
        let z = [0.1, -0.2, 0.3];
        let a = model.decode(&z).unwrap();
        let b = model.decode(&z).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
        assert_eq!(a.channels(), 1);
    }

    #[test]
    fn zero_weight_decoder_returns_bias() {
        let bias: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let encoder = zero_weight_net(8, 6, vec![0.0; 6]);
        let decoder = zero_weight_net(3, 8, bias.clone());
        let model = VaeModel::new(encoder, decoder, 3, 8, 1).unwrap();
        let out = model.decode(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(out.values(), &bias[..]);
    }

    #[test]
    fn kl_zero_exactly_at_standard_posterior() {
        assert_eq!(kl_divergence(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn kl_closed_form_values() {
        let v = kl_divergence(&[1.0], &[0.0]).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        // mu = 0, sigma^2 = 4: (4 - ln 4 - 1) / 2
        let v = kl_divergence(&[0.0], &[math::ln(4.0)]).unwrap();
        let expected = 0.5 * (4.0 - math::ln(4.0) - 1.0);
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 0.8068528194400547).abs() < 1e-12);
    }

    #[test]
    fn perfect_reconstruction_gives_zero_loss() {
        let x = sample_series(6, 8, 1);
        let encoder = zero_weight_net(8, 6, vec![0.0; 6]);
        let decoder = zero_weight_net(3, 8, x.values().to_vec());
        let model = VaeModel::new(encoder, decoder, 3, 8, 1).unwrap();
        let b = elbo_loss(&model, &x, &[0.0; 3], 1.0).unwrap();
        assert_eq!(b.recon, 0.0);
        assert_eq!(b.kl, 0.0);
        assert_eq!(b.total, 0.0);
    }

    #[test]
    fn kl_weight_scales_only_the_kl_term() {
        let model = small_model(12);
        let x = sample_series(13, 8, 1);
        let noise = [0.2, -0.4, 0.6];
        let a = elbo_loss(&model, &x, &noise, 1.0).unwrap();
        let b = elbo_loss(&model, &x, &noise, 2.0).unwrap();
        assert_eq!(a.recon, b.recon);
        assert_eq!(a.kl, b.kl);
        assert!((b.total - (b.recon + 2.0 * b.kl)).abs() < 1e-12);
        assert!(((b.total - b.recon) - 2.0 * (a.total - a.recon)).abs() < 1e-12);
    }

    #[test]
    fn elbo_gradients_match_finite_differences() {
        let mut model = small_model(21);
        let x = sample_series(22, 8, 1);
        let noise = [0.3, -0.8, 0.5];
        let kl_weight = 0.7;
        let (_, enc_grads, dec_grads) = elbo_gradients(&model, &x, &noise, kl_weight).unwrap();
        let mut analytic = Vec::new();
        for layer in enc_grads.layers.iter().chain(dec_grads.layers.iter()) {
            analytic.extend_from_slice(layer.weights.data());
            analytic.extend_from_slice(&layer.bias);
        }
        let params = model.params_flat();
        let step = 1e-4;
        let mut max_rel = 0.0f64;
        for i in 0..params.len() {
            let mut p = params.clone();
            p[i] = params[i] + step;
            model.set_params_flat(&p).unwrap();
            let up = elbo_loss(&model, &x, &noise, kl_weight).unwrap().total;
            p[i] = params[i] - step;
            model.set_params_flat(&p).unwrap();
            let down = elbo_loss(&model, &x, &noise, kl_weight).unwrap().total;
            let numeric = (up - down) / (2.0 * step);
            let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-4);
            max_rel = max_rel.max(rel);
        }
        model.set_params_flat(&params).unwrap();
        assert!(max_rel < 1e-3, "max rel err {max_rel}");
    }

    #[test]
    fn train_is_bitwise_deterministic() {
        let data: Vec<TimeSeries> = (0..6).map(|i| sample_series(100 + i, 8, 1)).collect();
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 4,
            seed: 9,
            ..TrainConfig::default()
        };
        let mut m1 = small_model(50);
        let t1 = train(&mut m1, &data, &cfg, 1.0).unwrap();
        let mut m2 = small_model(50);
        let t2 = train(&mut m2, &data, &cfg, 1.0).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(m1.params_flat(), m2.params_flat());
    }

    #[test]
    fn train_rejects_empty_dataset() {
        let mut model = small_model(1);
        assert!(matches!(
            train(&mut model, &[], &TrainConfig::default(), 1.0),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn train_overfits_a_tiny_set() {
        let data: Vec<TimeSeries> = (0..4).map(|i| sample_series(200 + i, 8, 1)).collect();
        let mut model = VaeModel::dense(8, 1, 4, &[32], 3).unwrap();
        let cfg = TrainConfig {
            epochs: 600,
            batch_size: 4,
            learning_rate: 3e-3,
            seed: 4,
            ..TrainConfig::default()
        };
        train(&mut model, &data, &cfg, 1e-4).unwrap();
        for x in &data {
            let recon = model.reconstruct(x, None).unwrap();
            let mse: f64 = x
                .values()
                .iter()
                .zip(recon.values().iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / x.values().len() as f64;
            assert!(mse < 1e-2, "mse {mse}");
        }
    }

    #[test]
    fn reconstruct_deterministic_mode_is_decode_of_mu() {
        let model = small_model(31);
        let x = sample_series(32, 8, 1);
        let (mu, _) = model.encode(&x).unwrap();
        let direct = model.decode(&mu).unwrap();
        let via = model.reconstruct(&x, None).unwrap();
        assert_eq!(direct, via);
        assert!(via.same_shape(&x));
    }
}
