use rand::Rng;

use super::{Matrix, Mode};
use crate::{Error, Result};

/// Kept units of an inverted-dropout pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    keep: Vec<bool>,
    scale: f64,
}

impl DropoutMask {
    /// Mask that keeps everything with unit scale.
    pub fn identity(len: usize) -> Self {
        DropoutMask {
            keep: vec![true; len],
            scale: 1.0,
        }
    }

    /// Draws a mask: each unit kept with probability `1 − rate`.
    pub fn sample<R: Rng>(len: usize, rate: f64, rng: &mut R) -> Result<Self> {
        check_rate(rate)?;
        if rate == 0.0 {
            return Ok(Self::identity(len));
        }
        let keep = (0..len).map(|_| rng.random::<f64>() >= rate).collect();
        Ok(DropoutMask {
            keep,
            scale: 1.0 / (1.0 - rate),
        })
    }

    pub fn kept(&self) -> &[bool] {
        &self.keep
    }

    /// `x ⊙ mask / (1 − rate)`; the same map serves forward and backward.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.data().len() != self.keep.len() {
            return Err(Error::shape("dropout mask", self.keep.len(), x.data().len()));
        }
        let mut y = x.clone();
        for (v, &k) in y.data_mut().iter_mut().zip(&self.keep) {
            *v = if k { *v * self.scale } else { 0.0 };
        }
        Ok(y)
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Argument(format!("dropout rate {rate} not in [0, 1)")));
    }
    Ok(())
}

/// Inverted dropout. Infer mode (or rate 0) is the identity.
pub fn dropout_forward<R: Rng>(x: &Matrix, rate: f64, mode: Mode, rng: &mut R) -> Result<(Matrix, DropoutMask)> {
    check_rate(rate)?;
    let mask = match mode {
        Mode::Infer => DropoutMask::identity(x.data().len()),
        Mode::Train => DropoutMask::sample(x.data().len(), rate, rng)?,
    };
    Ok((mask.apply(x)?, mask))
}
