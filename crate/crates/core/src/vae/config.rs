use serde::{Deserialize, Serialize};

use crate::kernel::{DEFAULT_BN_EPS, DEFAULT_BN_MOMENTUM, DEFAULT_LR, DEFAULT_RHO, DEFAULT_RMS_EPS};
use crate::{Error, Result};

/// Latent sizes of the reconstruction sweep.
pub const LATENT_SWEEP: [usize; 7] = [2, 8, 32, 64, 128, 256, 512];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Bce,
    SoftF1,
}

/// Architecture, loss and optimisation settings.
///
/// `input_dim` may be left at 0 in configuration files; training fills it
/// from the matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VaeConfig {
    pub input_dim: usize,
    pub encoder_units: [usize; 2],
    pub latent_dim: usize,
    pub decoder_units: [usize; 2],
    pub dropout_rate: f64,
    pub l1_coeff: f64,
    pub leaky_alpha: f64,
    pub loss: LossKind,
    pub beta_max: f64,
    pub warmup_epochs: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub rho: f64,
    pub rms_eps: f64,
    pub bn_momentum: f64,
    pub bn_eps: f64,
    pub seed: u64,
}

impl Default for VaeConfig {
    fn default() -> Self {
        VaeConfig {
            input_dim: 0,
            encoder_units: [1024, 512],
            latent_dim: 32,
            decoder_units: [512, 1024],
            dropout_rate: 0.2,
            l1_coeff: 1e-5,
            leaky_alpha: 0.3,
            loss: LossKind::SoftF1,
            beta_max: 1.0,
            warmup_epochs: 20,
            epochs: 100,
            batch_size: 128,
            learning_rate: DEFAULT_LR,
            rho: DEFAULT_RHO,
            rms_eps: DEFAULT_RMS_EPS,
            bn_momentum: DEFAULT_BN_MOMENTUM,
            bn_eps: DEFAULT_BN_EPS,
            seed: 42,
        }
    }
}

impl VaeConfig {
    /// Collects every violated constraint instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.input_dim == 0 {
            bad.push("input_dim must be >= 1".to_string());
        }
        if self.encoder_units.contains(&0) || self.decoder_units.contains(&0) {
            bad.push("all layer widths must be >= 1".into());
        }
        if self.latent_dim == 0 {
            bad.push("latent_dim must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            bad.push(format!("dropout_rate {} not in [0, 1)", self.dropout_rate));
        }
        if !(self.l1_coeff >= 0.0) {
            bad.push(format!("l1_coeff {} must be >= 0", self.l1_coeff));
        }
        if !(self.leaky_alpha > 0.0 && self.leaky_alpha < 1.0) {
            bad.push(format!("leaky_alpha {} not in (0, 1)", self.leaky_alpha));
        }
        if !(self.beta_max >= 0.0) || !self.beta_max.is_finite() {
            bad.push(format!("beta_max {} must be finite and >= 0", self.beta_max));
        }
        if self.epochs == 0 {
            bad.push("epochs must be >= 1".into());
        }
        if self.batch_size < 2 {
            bad.push(format!(
                "batch_size {} must be >= 2 (batch norm needs at least two rows)",
                self.batch_size
            ));
        }
        if !(self.learning_rate > 0.0) {
            bad.push(format!("learning_rate {} must be > 0", self.learning_rate));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            bad.push(format!("rho {} not in (0, 1)", self.rho));
        }
        if !(self.rms_eps > 0.0) {
            bad.push(format!("rms_eps {} must be > 0", self.rms_eps));
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum < 1.0) {
            bad.push(format!("bn_momentum {} not in (0, 1)", self.bn_momentum));
        }
        if !(self.bn_eps > 0.0) {
            bad.push(format!("bn_eps {} must be > 0", self.bn_eps));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    pub fn with_input_dim(mut self, input_dim: usize) -> Self {
        self.input_dim = input_dim;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_once_input_dim_known() {
        assert!(VaeConfig::default().validate().is_err());
        VaeConfig::default().with_input_dim(10).validate().unwrap();
    }

    #[test]
    fn every_violation_is_listed() {
        let cfg = VaeConfig {
            batch_size: 1,
            latent_dim: 0,
            dropout_rate: 1.0,
            ..VaeConfig::default().with_input_dim(4)
        };
        let Err(Error::Config(msgs)) = cfg.validate() else {
            panic!("expected config error");
        };
        assert_eq!(msgs.len(), 3, "{msgs:?}");
        assert!(msgs.iter().any(|m| m.contains("batch norm")));
    }

    #[test]
    fn json_round_trip_and_partial_files() {
        let cfg = VaeConfig::default().with_input_dim(7);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<VaeConfig>(&json).unwrap(), cfg);
        let partial: VaeConfig = serde_json::from_str(r#"{"latent_dim": 8, "loss": "bce"}"#).unwrap();
        assert_eq!(partial.latent_dim, 8);
        assert_eq!(partial.loss, LossKind::Bce);
        assert_eq!(partial.batch_size, 128);
        assert!(serde_json::from_str::<VaeConfig>(r#"{"latnt_dim": 8}"#).is_err());
    }
}
