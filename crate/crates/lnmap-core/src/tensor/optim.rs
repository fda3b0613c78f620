//! Plain SGD with a step learning-rate decay schedule.

use alloc::string::ToString;

use super::params::Parameters;
use crate::error::Error;
use crate::Result;

/// Stochastic gradient descent. The decay clock ticks once per outer
/// self-training iteration, not per mini-batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdOptimizer {
    learning_rate: f64,
    decay_factor: f64,
    decay_every: usize,
    step_count: usize,
}

impl SgdOptimizer {
    pub fn new(learning_rate: f64, decay_factor: f64, decay_every: usize) -> Result<Self> {
        if learning_rate < 0.0 || !learning_rate.is_finite() {
            return Err(Error::NonFinite {
                what: "learning rate",
                context: "SgdOptimizer::new".to_string(),
            });
        }
        if !(decay_factor > 0.0 && decay_factor <= 1.0) {
            return Err(Error::NonFinite {
                what: "decay factor",
                context: "SgdOptimizer::new".to_string(),
            });
        }
        if decay_every == 0 {
            return Err(Error::InvalidDimension {
                what: "SgdOptimizer decay_every",
                value: 0,
            });
        }
        Ok(SgdOptimizer {
            learning_rate,
            decay_factor,
            decay_every,
            step_count: 0,
        })
    }

    /// Learning rate after the decays accumulated so far. Computed by
    /// repeated multiplication so it is exactly reproducible.
    pub fn effective_lr(&self) -> f64 {
        let decays = self.step_count / self.decay_every;
        let mut lr = self.learning_rate;
        for _ in 0..decays {
            lr *= self.decay_factor;
        }
        lr
    }

    /// Advances the decay clock by one outer iteration.
    pub fn tick(&mut self) {
        self.step_count += 1;
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    /// Restores the decay clock; used when resuming a run.
    pub fn set_step_count(&mut self, steps: usize) {
        self.step_count = steps;
    }

    /// Applies `p -= lr_eff * g` to every parameter. Gradients are left
    /// untouched; callers zero them at the start of the next step.
    pub fn apply(&self, target: &mut impl Parameters) -> Result<()> {
        self.apply_scaled(target, 1.0)
    }

    /// Like [`SgdOptimizer::apply`] but with the step scaled by `weight`,
    /// which is how individual loss terms get their weighting.
    pub fn apply_scaled(&self, target: &mut impl Parameters, weight: f64) -> Result<()> {
        let lr = weight * self.effective_lr();
        let mut bad: Option<Error> = None;
        target.visit_mut(&mut |name, _, values, grads| {
            if bad.is_some() {
                return;
            }
            for (v, &g) in values.iter_mut().zip(grads.iter()) {
                if !g.is_finite() {
                    bad = Some(Error::NonFinite {
                        what: "gradient",
                        context: name.to_string(),
                    });
                    return;
                }
                *v -= lr * g;
            }
        });
        match bad {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}
