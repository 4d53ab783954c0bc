//! Named trainable parameters.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::autodiff::Gradients;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

static NEXT_STORE: AtomicU64 = AtomicU64::new(1);

fn next_store_id() -> StoreId {
    StoreId(NEXT_STORE.fetch_add(1, Ordering::Relaxed))
}

/// Identity of one live [`Params`] instance; gradients recorded on a tape are
/// routed back to the store they came from by this id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StoreId(u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    pub momentum_buffer: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        let momentum_buffer = Tensor::zeros(value.shape());
        Parameter {
            name: name.into(),
            value,
            grad,
            momentum_buffer,
        }
    }
}

/// An ordered collection of named parameters.
#[derive(Debug)]
pub struct Params {
    id: StoreId,
    entries: Vec<Parameter>,
}

impl Clone for Params {
    /// The clone is a distinct store: gradients recorded against the original
    /// are not routed to it.
    fn clone(&self) -> Self {
        Params {
            id: next_store_id(),
            entries: self.entries.clone(),
        }
    }
}

impl Default for Params {
    fn default() -> Self {
        Self::new()
    }
}

impl Params {
    pub fn new() -> Self {
        Params {
            id: next_store_id(),
            entries: Vec::new(),
        }
    }

    pub fn store_id(&self) -> StoreId {
        self.id
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.entries.push(Parameter::new(name, value));
        ParamId(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.entries[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.entries[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].value
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.entries.iter_mut()
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|p| p.name == name).map(ParamId)
    }

    /// Adds every gradient recorded for this store into `Parameter::grad`.
    pub fn accumulate(&mut self, grads: &Gradients) {
        for (store, id, g) in grads.iter() {
            if store == self.id {
                self.entries[id.0].grad.add_assign(g);
            }
        }
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.entries {
            p.grad.fill(0.0);
        }
    }

    /// Overwrites the value of the parameter called `name`, checking the shape.
    pub fn set_value(&mut self, name: &str, value: &Tensor) -> Result<()> {
        let id = self
            .find(name)
            .ok_or_else(|| Error::Parameter(format!("unknown parameter {name}")))?;
        let p = &mut self.entries[id.0];
        if p.value.shape() != value.shape() {
            return Err(Error::Parameter(format!(
                "{name}: expected shape {:?}, found {:?}",
                p.value.shape(),
                value.shape()
            )));
        }
        p.value = value.clone();
        Ok(())
    }

    pub fn num_values(&self) -> usize {
        self.entries.iter().map(|p| p.value.numel()).sum()
    }
}
