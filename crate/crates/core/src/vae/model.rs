use rand::Rng;
use rand_distr::StandardNormal;

use super::loss::{bce_loss, kl_divergence, kl_gradient, soft_f1_loss};
use super::{beta_schedule, LossKind, VaeConfig};
use crate::data::OccurrenceMatrix;
use crate::kernel::{
    activation_backward, activation_forward, Activation, AffineLayer, BatchNormCache, BatchNormLayer, DropoutMask,
    Matrix,
};
use crate::rng::{stream_rng, streams};
use crate::{Error, Result};

/// Posterior parameters of `q(z | x)`, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    pub mu: Matrix,
    pub logvar: Matrix,
}

/// `z = mu + exp(½·logvar) ⊙ ε` with `ε ~ N(0, I)` drawn row-major from `rng`.
pub fn reparameterize<R: Rng>(enc: &EncoderOutput, rng: &mut R) -> Matrix {
    let eps = standard_normal(enc.mu.rows(), enc.mu.cols(), rng);
    sample_latent(enc, &eps)
}

fn sample_latent(enc: &EncoderOutput, eps: &Matrix) -> Matrix {
    let mut z = enc.mu.clone();
    for ((zv, &lv), &e) in z.data_mut().iter_mut().zip(enc.logvar.data()).zip(eps.data()) {
        *zv += (0.5 * lv).exp() * e;
    }
    z
}

fn standard_normal<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

/// Every random quantity of one training step, drawn up front so the loss
/// is a deterministic function of the parameters.
#[derive(Debug, Clone)]
pub struct Noise {
    pub encoder_dropout: DropoutMask,
    pub decoder_dropout: DropoutMask,
    pub eps: Matrix,
}

impl Noise {
    /// Draws the encoder mask, the decoder mask, then ε, in that order.
    pub fn sample<R: Rng>(batch: usize, config: &VaeConfig, rng: &mut R) -> Result<Self> {
        Ok(Noise {
            encoder_dropout: DropoutMask::sample(batch * config.encoder_units[0], config.dropout_rate, rng)?,
            decoder_dropout: DropoutMask::sample(batch * config.decoder_units[0], config.dropout_rate, rng)?,
            eps: standard_normal(batch, config.latent_dim, rng),
        })
    }

    /// No dropout and `ε = 0`, i.e. `z = mu`.
    pub fn none(batch: usize, config: &VaeConfig) -> Self {
        Noise {
            encoder_dropout: DropoutMask::identity(batch * config.encoder_units[0]),
            decoder_dropout: DropoutMask::identity(batch * config.decoder_units[0]),
            eps: Matrix::zeros(batch, config.latent_dim),
        }
    }
}

/// A minibatch: the dense 0/1 targets, plus the sparse column lists when the
/// batch came from an [`OccurrenceMatrix`] (used for a cheaper first layer).
#[derive(Debug, Clone)]
pub struct BatchInput<'a> {
    pub dense: Matrix,
    pub sparse: Option<Vec<&'a [u32]>>,
}

impl<'a> BatchInput<'a> {
    pub fn dense(x: Matrix) -> Self {
        BatchInput { dense: x, sparse: None }
    }

    pub fn from_rows(matrix: &'a OccurrenceMatrix, indices: &[usize]) -> Self {
        BatchInput {
            dense: matrix.dense_rows(indices),
            sparse: Some(indices.iter().map(|&i| matrix.row(i)).collect()),
        }
    }

    pub fn rows(&self) -> usize {
        self.dense.rows()
    }
}

/// Affine layer (no bias) followed by batch norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    pub affine: AffineLayer,
    pub bn: BatchNormLayer,
}

struct BlockCache {
    bn: BatchNormCache,
    /// Batch-norm output, the activation's input.
    pre_act: Matrix,
}

impl DenseBlock {
    fn new<R: Rng>(in_dim: usize, out_dim: usize, config: &VaeConfig, rng: &mut R) -> Result<Self> {
        Ok(DenseBlock {
            affine: AffineLayer::glorot(in_dim, out_dim, false, config.l1_coeff, rng),
            bn: BatchNormLayer::new(out_dim, config.bn_momentum, config.bn_eps)?,
        })
    }

    fn train(&self, affine_out: Matrix, act: Activation) -> Result<(Matrix, BlockCache)> {
        let (pre_act, bn) = self.bn.forward_train(&affine_out)?;
        let out = activation_forward(act, &pre_act);
        Ok((out, BlockCache { bn, pre_act }))
    }

    fn infer(&self, x: &Matrix, act: Activation) -> Result<Matrix> {
        let pre_act = self.bn.forward_infer(&self.affine.forward(x)?)?;
        Ok(activation_forward(act, &pre_act))
    }
}

/// Scalar terms of the objective for one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub recon: f64,
    pub kl: f64,
    pub l1: f64,
    pub beta: f64,
    pub total: f64,
}

/// Gradients in [`VaeModel::parameters`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        self.0.concat()
    }
}

/// Batch statistics of the four batch-norm layers from one training pass.
pub struct BatchStats(Vec<BatchNormCache>);

#[derive(Debug, Clone, PartialEq)]
pub struct VaeModel {
    config: VaeConfig,
    pub encoder: [DenseBlock; 2],
    pub mu_head: AffineLayer,
    pub logvar_head: AffineLayer,
    pub decoder: [DenseBlock; 2],
    pub output: AffineLayer,
}

impl VaeModel {
    /// Glorot-uniform weights from the `INIT` stream of `config.seed`,
    /// zero biases, unit scales, zero shifts.
    pub fn new(config: VaeConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = stream_rng(config.seed, streams::INIT);
        let [e1, e2] = config.encoder_units;
        let [d1, d2] = config.decoder_units;
        let (m, d, l1) = (config.input_dim, config.latent_dim, config.l1_coeff);
        let encoder = [
            DenseBlock::new(m, e1, &config, &mut rng)?,
            DenseBlock::new(e1, e2, &config, &mut rng)?,
        ];
        let mu_head = AffineLayer::glorot(e2, d, true, l1, &mut rng);
        let logvar_head = AffineLayer::glorot(e2, d, true, l1, &mut rng);
        let decoder = [
            DenseBlock::new(d, d1, &config, &mut rng)?,
            DenseBlock::new(d1, d2, &config, &mut rng)?,
        ];
        let output = AffineLayer::glorot(d2, m, true, l1, &mut rng);
        Ok(VaeModel {
            config,
            encoder,
            mu_head,
            logvar_head,
            decoder,
            output,
        })
    }

    pub fn config(&self) -> &VaeConfig {
        &self.config
    }

    fn enc_act(&self) -> Activation {
        Activation::LeakyRelu(self.config.leaky_alpha)
    }

    /// Learnable arrays in fixed order: per encoder block `W, gamma, shift`;
    /// `mu W, b`; `logvar W, b`; per decoder block `W, gamma, shift`;
    /// output `W, b`.
    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(18);
        for b in &self.encoder {
            out.extend([b.affine.weights.data(), &b.bn.gamma, &b.bn.shift]);
        }
        for h in [&self.mu_head, &self.logvar_head] {
            out.extend([h.weights.data(), h.bias.as_deref().expect("head bias")]);
        }
        for b in &self.decoder {
            out.extend([b.affine.weights.data(), &b.bn.gamma, &b.bn.shift]);
        }
        out.extend([self.output.weights.data(), self.output.bias.as_deref().expect("output bias")]);
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(18);
        let VaeModel {
            encoder,
            mu_head,
            logvar_head,
            decoder,
            output,
            ..
        } = self;
        for b in encoder.iter_mut() {
            out.extend([b.affine.weights.data_mut(), &mut b.bn.gamma[..], &mut b.bn.shift[..]]);
        }
        for h in [mu_head, logvar_head] {
            out.extend([h.weights.data_mut(), h.bias.as_deref_mut().expect("head bias")]);
        }
        for b in decoder.iter_mut() {
            out.extend([b.affine.weights.data_mut(), &mut b.bn.gamma[..], &mut b.bn.shift[..]]);
        }
        out.extend([output.weights.data_mut(), output.bias.as_deref_mut().expect("output bias")]);
        out
    }

    pub fn flat_parameters(&self) -> Vec<f64> {
        self.parameters().concat()
    }

    pub fn set_flat_parameters(&mut self, flat: &[f64]) -> Result<()> {
        let total: usize = self.parameters().iter().map(|p| p.len()).sum();
        if flat.len() != total {
            return Err(Error::shape("flat parameters", total, flat.len()));
        }
        let mut offset = 0;
        for p in self.parameters_mut() {
            p.copy_from_slice(&flat[offset..offset + p.len()]);
            offset += p.len();
        }
        Ok(())
    }

    pub fn batch_norms(&self) -> [&BatchNormLayer; 4] {
        [&self.encoder[0].bn, &self.encoder[1].bn, &self.decoder[0].bn, &self.decoder[1].bn]
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.config.input_dim {
            return Err(Error::shape("model input columns", self.config.input_dim, x.cols()));
        }
        Ok(())
    }

    /// Posterior parameters in infer mode (running statistics, no dropout).
    pub fn encode(&self, x: &Matrix) -> Result<EncoderOutput> {
        self.check_input(x)?;
        let h1 = self.encoder[0].infer(x, self.enc_act())?;
        let h2 = self.encoder[1].infer(&h1, self.enc_act())?;
        Ok(EncoderOutput {
            mu: self.mu_head.forward(&h2)?,
            logvar: self.logvar_head.forward(&h2)?,
        })
    }

    /// Reconstruction probabilities in infer mode; every entry lies in (0, 1)
    /// up to floating-point saturation of the sigmoid.
    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        if z.cols() != self.config.latent_dim {
            return Err(Error::shape("latent columns", self.config.latent_dim, z.cols()));
        }
        let r3 = self.decoder[0].infer(z, Activation::Relu)?;
        let r4 = self.decoder[1].infer(&r3, Activation::Relu)?;
        Ok(activation_forward(Activation::Sigmoid, &self.output.forward(&r4)?))
    }

    /// `decode(encode(x).mu)`: the deterministic reconstruction.
    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        self.decode(&self.encode(x)?.mu)
    }

    pub fn l1_penalty(&self) -> f64 {
        self.encoder.iter().map(|b| b.affine.l1_penalty()).sum::<f64>()
            + self.mu_head.l1_penalty()
            + self.logvar_head.l1_penalty()
            + self.decoder.iter().map(|b| b.affine.l1_penalty()).sum::<f64>()
            + self.output.l1_penalty()
    }

    /// Objective and its gradient for one epoch index, drawing all noise
    /// from `rng`.
    pub fn total_loss<R: Rng>(&self, x: &Matrix, epoch: usize, rng: &mut R) -> Result<(f64, Gradients)> {
        self.check_input(x)?;
        let noise = Noise::sample(x.rows(), &self.config, rng)?;
        let beta = beta_schedule(epoch, &self.config);
        let (parts, grads, _) = self.loss_and_gradients(&BatchInput::dense(x.clone()), beta, &noise)?;
        Ok((parts.total, grads))
    }

    /// Train-mode forward and full reverse pass with the given noise:
    /// `recon(x, x̂) + beta·KL + Σ l1·‖W‖₁`.
    pub fn loss_and_gradients(
        &self,
        input: &BatchInput<'_>,
        beta: f64,
        noise: &Noise,
    ) -> Result<(LossParts, Gradients, BatchStats)> {
        let x = &input.dense;
        self.check_input(x)?;
        let n = x.rows();
        if noise.eps.shape() != (n, self.config.latent_dim) {
            return Err(Error::shape(
                "reparameterization noise",
                format!("{n}x{}", self.config.latent_dim),
                format!("{}x{}", noise.eps.rows(), noise.eps.cols()),
            ));
        }
        let leaky = self.enc_act();
        let [enc1, enc2] = &self.encoder;
        let [dec1, dec2] = &self.decoder;

        // Forward.
        let a1 = match &input.sparse {
            Some(rows) => enc1.affine.forward_sparse(rows)?,
            None => enc1.affine.forward(x)?,
        };
        let (h1, c1) = enc1.train(a1, leaky)?;
        let d1 = noise.encoder_dropout.apply(&h1)?;
        let (h2, c2) = enc2.train(enc2.affine.forward(&d1)?, leaky)?;
        let enc = EncoderOutput {
            mu: self.mu_head.forward(&h2)?,
            logvar: self.logvar_head.forward(&h2)?,
        };
        let z = sample_latent(&enc, &noise.eps);
        let (r3, c3) = dec1.train(dec1.affine.forward(&z)?, Activation::Relu)?;
        let d3 = noise.decoder_dropout.apply(&r3)?;
        let (r4, c4) = dec2.train(dec2.affine.forward(&d3)?, Activation::Relu)?;
        let x_hat = activation_forward(Activation::Sigmoid, &self.output.forward(&r4)?);

        let (recon, d_xhat) = match self.config.loss {
            LossKind::Bce => bce_loss(x, &x_hat)?,
            LossKind::SoftF1 => soft_f1_loss(x, &x_hat)?,
        };
        let kl = kl_divergence(&enc);
        let l1 = self.l1_penalty();

        // Reverse.
        let d_logits = d_xhat.zip_map(&x_hat, |g, p| g * p * (1.0 - p))?;
        let g_out = self.output.backward(&r4, &d_logits, true)?;
        let d_b4 = activation_backward(Activation::Relu, &c4.pre_act, g_out.dx.as_ref().expect("dx"))?;
        let g_bn4 = c4.bn.backward(&d_b4)?;
        let g_dec2 = dec2.affine.backward(&d3, &g_bn4.dx, true)?;
        let d_r3 = noise.decoder_dropout.apply(g_dec2.dx.as_ref().expect("dx"))?;
        let d_b3 = activation_backward(Activation::Relu, &c3.pre_act, &d_r3)?;
        let g_bn3 = c3.bn.backward(&d_b3)?;
        let g_dec1 = dec1.affine.backward(&z, &g_bn3.dx, true)?;
        let d_z = g_dec1.dx.as_ref().expect("dx");

        let (kl_mu, kl_lv) = kl_gradient(&enc);
        let mut d_mu = d_z.clone();
        let mut d_lv = Matrix::zeros(n, self.config.latent_dim);
        for i in 0..d_mu.data().len() {
            let lv = enc.logvar.data()[i];
            d_mu.data_mut()[i] += beta * kl_mu.data()[i];
            d_lv.data_mut()[i] =
                d_z.data()[i] * noise.eps.data()[i] * 0.5 * (0.5 * lv).exp() + beta * kl_lv.data()[i];
        }
        let g_mu = self.mu_head.backward(&h2, &d_mu, true)?;
        let g_lv = self.logvar_head.backward(&h2, &d_lv, true)?;
        let d_h2 = g_mu.dx.as_ref().expect("dx").zip_map(g_lv.dx.as_ref().expect("dx"), |a, b| a + b)?;
        let d_b2 = activation_backward(leaky, &c2.pre_act, &d_h2)?;
        let g_bn2 = c2.bn.backward(&d_b2)?;
        let g_enc2 = enc2.affine.backward(&d1, &g_bn2.dx, true)?;
        let d_h1 = noise.encoder_dropout.apply(g_enc2.dx.as_ref().expect("dx"))?;
        let d_b1 = activation_backward(leaky, &c1.pre_act, &d_h1)?;
        let g_bn1 = c1.bn.backward(&d_b1)?;
        let g_enc1 = match &input.sparse {
            Some(rows) => enc1.affine.backward_sparse(rows, &g_bn1.dx)?,
            None => enc1.affine.backward(x, &g_bn1.dx, false)?,
        };

        let grads = Gradients(vec![
            g_enc1.dw.into_vec(),
            g_bn1.dgamma,
            g_bn1.dshift,
            g_enc2.dw.into_vec(),
            g_bn2.dgamma,
            g_bn2.dshift,
            g_mu.dw.into_vec(),
            g_mu.db.expect("bias"),
            g_lv.dw.into_vec(),
            g_lv.db.expect("bias"),
            g_dec1.dw.into_vec(),
            g_bn3.dgamma,
            g_bn3.dshift,
            g_dec2.dw.into_vec(),
            g_bn4.dgamma,
            g_bn4.dshift,
            g_out.dw.into_vec(),
            g_out.db.expect("bias"),
        ]);
        let parts = LossParts {
            recon,
            kl,
            l1,
            beta,
            total: recon + beta * kl + l1,
        };
        Ok((parts, grads, BatchStats(vec![c1.bn, c2.bn, c3.bn, c4.bn])))
    }

    /// Folds one training pass's batch statistics into the running statistics.
    pub fn update_running_stats(&mut self, stats: &BatchStats) {
        let [e1, e2] = &mut self.encoder;
        let [d1, d2] = &mut self.decoder;
        for (bn, cache) in [&mut e1.bn, &mut e2.bn, &mut d1.bn, &mut d2.bn].into_iter().zip(&stats.0) {
            bn.update_running(cache);
        }
    }

    pub(crate) fn from_parts(
        config: VaeConfig,
        encoder: [DenseBlock; 2],
        mu_head: AffineLayer,
        logvar_head: AffineLayer,
        decoder: [DenseBlock; 2],
        output: AffineLayer,
    ) -> Self {
        VaeModel {
            config,
            encoder,
            mu_head,
            logvar_head,
            decoder,
            output,
        }
    }
}
