//! MLP variational autoencoder with hand-written gradients.
//!
//! Architecture (widths from [`VaeConfig`]):
//!
//! ```text
//! x ─ Dense ─ BN ─ LeakyReLU ─ Dropout ─ Dense ─ BN ─ LeakyReLU ─┬─ Dense → μ
//!                                                                 └─ Dense → log σ²
//! z = μ + exp(½·log σ²) ⊙ ε
//! z ─ Dense ─ BN ─ ReLU ─ Dropout ─ Dense ─ BN ─ ReLU ─ Dense ─ Sigmoid → x̂
//! ```

mod checkpoint;
mod config;
mod loss;
mod model;
mod schedule;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_FORMAT_VERSION, CHECKPOINT_MAGIC};
pub use config::{LossKind, VaeConfig, LATENT_SWEEP};
pub use loss::{bce_loss, kl_divergence, kl_gradient, soft_f1_loss, BCE_CLAMP};
pub use model::{reparameterize, BatchInput, BatchStats, DenseBlock, EncoderOutput, Gradients, LossParts, Noise, VaeModel};
pub use schedule::beta_schedule;
pub use train::{embed, train, train_observed, write_history, EpochRecord, TrainHistory};
