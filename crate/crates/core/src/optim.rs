//! SGD with momentum.
//!
//! One optimizer step applies, elementwise:
//!
//! ```text
//! v <- momentum * v - effective_lr * grad_sum
//! theta <- theta + v
//! ```
//!
//! where `grad_sum` is the summed (not averaged) minibatch gradient. The
//! velocity persists across minibatch and reuse boundaries; it is never
//! reset implicitly. [`Sgd::reset_velocity`] exists purely as an
//! experimental knob.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{GradientVector, ParameterVector};

/// How the learning rate responds to minibatch reuse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LrPolicy {
    /// The base rate regardless of reuse.
    Constant,
    /// `k * lr` on the k-th consecutive use of the same minibatch, the
    /// rationale being that the update direction becomes more reliable as
    /// the minibatch is re-optimized.
    AdaptivePersistency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub lr_policy: LrPolicy,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            momentum: 0.5,
            lr_policy: LrPolicy::Constant,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }
}

/// Learning rate for the `reuse_index`-th use (1-based) of a minibatch.
pub fn effective_lr(config: &OptimizerConfig, reuse_index: usize) -> Result<f64> {
    if reuse_index < 1 {
        return Err(Error::Config(
            "reuse index must be at least 1 (it is 1-based)".into(),
        ));
    }
    Ok(match config.lr_policy {
        LrPolicy::Constant => config.learning_rate,
        LrPolicy::AdaptivePersistency => reuse_index as f64 * config.learning_rate,
    })
}

/// Velocity buffer plus step counter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    velocity: Vec<f64>,
    step_count: u64,
}

impl OptimizerState {
    pub fn new(param_count: usize) -> Self {
        Self {
            velocity: vec![0.0; param_count],
            step_count: 0,
        }
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// The optimizer: immutable config plus mutable state.
#[derive(Debug, Clone)]
pub struct Sgd {
    config: OptimizerConfig,
    state: OptimizerState,
}

impl Sgd {
    pub fn new(config: OptimizerConfig, param_count: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            state: OptimizerState::new(param_count),
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    pub fn effective_lr(&self, reuse_index: usize) -> Result<f64> {
        effective_lr(&self.config, reuse_index)
    }

    /// Applies one momentum-SGD step with the given effective learning
    /// rate. Errors with the step index if the gradient or the resulting
    /// parameters are not finite.
    pub fn step(
        &mut self,
        params: &mut ParameterVector,
        grad_sum: &GradientVector,
        effective_lr: f64,
    ) -> Result<()> {
        if grad_sum.len() != params.len() || self.state.velocity.len() != params.len() {
            return Err(Error::Config(format!(
                "length mismatch: {} params, {} gradient entries, {} velocity entries",
                params.len(),
                grad_sum.len(),
                self.state.velocity.len()
            )));
        }
        if !(effective_lr > 0.0) {
            return Err(Error::Config(format!(
                "effective learning rate must be positive, got {effective_lr}"
            )));
        }
        let step_index = self.state.step_count;
        grad_sum.check_finite(&format!("at optimizer step {step_index}"))?;
        let gamma = self.config.momentum;
        let theta = params.values_mut();
        for ((v, t), &g) in self.state.velocity.iter_mut().zip(theta.iter_mut()).zip(grad_sum.values()) {
            *v = gamma * *v - effective_lr * g;
            *t += *v;
        }
        self.state.step_count += 1;
        params.check_finite(&format!("after optimizer step {step_index}"))
    }

    /// Zeroes the velocity, preserving the step counter. Never called by
    /// the training loop itself.
    pub fn reset_velocity(&mut self) {
        self.state.velocity.fill(0.0);
    }
}
