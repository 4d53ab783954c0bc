//! SGD with momentum and L2 weight decay.

use alloc::format;

use crate::error::{Error, Result};
use crate::param::Params;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Sgd {
    pub learning_rate: f32,
    pub weight_decay: f32,
    pub momentum: f32,
}

impl Default for Sgd {
    fn default() -> Self {
        Sgd {
            learning_rate: 0.002,
            weight_decay: 1e-4,
            momentum: 0.9,
        }
    }
}

impl Sgd {
    pub fn validate(&self) -> Result<()> {
        // lr = 0 is accepted so a run can be replayed without moving parameters.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }

    /// One update over every parameter in `stores`, then zeroes the gradients.
    ///
    /// `buffer ← momentum·buffer + (grad + weight_decay·value)`,
    /// `value ← value − lr·buffer`.
    ///
    /// If any gradient or updated value would be non-finite nothing is
    /// modified.
    pub fn step(&self, stores: &mut [&mut Params]) -> Result<()> {
        self.validate()?;
        let finite = stores.iter().all(|s| {
            s.iter().all(|p| {
                let (values, grads, buf) = (p.value.data(), p.grad.data(), p.momentum_buffer.data());
                (0..values.len()).all(|i| {
                    let d = grads[i] + self.weight_decay * values[i];
                    let b = self.momentum * buf[i] + d;
                    (values[i] - self.learning_rate * b).is_finite()
                })
            })
        });
        if !finite {
            return Err(Error::NonFinite { op: "sgd_step" });
        }
        for store in stores.iter_mut() {
            for p in store.iter_mut() {
                let values = p.value.data_mut();
                let grads = p.grad.data();
                let buf = p.momentum_buffer.data_mut();
                for i in 0..values.len() {
                    let d = grads[i] + self.weight_decay * values[i];
                    buf[i] = self.momentum * buf[i] + d;
                    values[i] -= self.learning_rate * buf[i];
                }
            }
            store.zero_grad();
        }
        Ok(())
    }
}

/// Free-function form of [`Sgd::step`].
pub fn sgd_step(stores: &mut [&mut Params], opt: &Sgd) -> Result<()> {
    opt.step(stores)
}
