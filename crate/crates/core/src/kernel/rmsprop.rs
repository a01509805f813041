use crate::{Error, Result};

pub const DEFAULT_LR: f64 = 1e-3;
pub const DEFAULT_RHO: f64 = 0.9;
pub const DEFAULT_RMS_EPS: f64 = 1e-8;

/// Squared-gradient accumulator for one parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsPropState {
    pub cache: Vec<f64>,
    pub rho: f64,
    pub lr: f64,
    pub eps: f64,
}

impl RmsPropState {
    pub fn new(len: usize, lr: f64, rho: f64, eps: f64) -> Result<Self> {
        let mut bad = Vec::new();
        if !(lr > 0.0) {
            bad.push(format!("learning rate {lr} must be positive"));
        }
        if !(rho > 0.0 && rho < 1.0) {
            bad.push(format!("rho {rho} not in (0, 1)"));
        }
        if !(eps > 0.0) {
            bad.push(format!("eps {eps} must be positive"));
        }
        if !bad.is_empty() {
            return Err(Error::Config(bad));
        }
        Ok(RmsPropState {
            cache: vec![0.0; len],
            rho,
            lr,
            eps,
        })
    }

    /// `cache ← ρ·cache + (1−ρ)·g²;  θ ← θ − lr·g / (√cache + eps)`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.cache.len() || grads.len() != self.cache.len() {
            return Err(Error::shape(
                "rmsprop step",
                self.cache.len(),
                format!("params {} / grads {}", params.len(), grads.len()),
            ));
        }
        for ((p, &g), c) in params.iter_mut().zip(grads).zip(self.cache.iter_mut()) {
            *c = self.rho * *c + (1.0 - self.rho) * g * g;
            *p -= self.lr * g / (c.sqrt() + self.eps);
        }
        Ok(())
    }
}

pub fn rmsprop_step(params: &mut [f64], grads: &[f64], state: &mut RmsPropState) -> Result<()> {
    state.step(params, grads)
}
