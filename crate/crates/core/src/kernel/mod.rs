//! Dense 64-bit kernels with hand-written backward passes.
//!
//! Every layer keeps forward and backward as separate pure functions; the
//! only mutable state is batch-norm running statistics and the optimizer
//! cache, both updated explicitly by the caller.

mod activation;
mod affine;
mod batchnorm;
mod dropout;
mod gradcheck;
mod matrix;
mod rmsprop;

pub use batchnorm::{DEFAULT_BN_EPS, DEFAULT_BN_MOMENTUM};
pub use rmsprop::{DEFAULT_LR, DEFAULT_RHO, DEFAULT_RMS_EPS};

pub use activation::{activation_backward, activation_forward, Activation};
pub use affine::{affine_backward, affine_forward, AffineGrads, AffineLayer};
pub use batchnorm::{batchnorm_backward, batchnorm_forward, BatchNormCache, BatchNormGrads, BatchNormLayer};
pub use dropout::{dropout_forward, DropoutMask};
pub use gradcheck::{finite_diff_check, relative_error, GradCheckReport};
pub use matrix::Matrix;
pub use rmsprop::{rmsprop_step, RmsPropState};

/// Train mode uses batch statistics and dropout; infer mode is deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}
