//! Core of the CoSeg self-supervised event segmentation pipeline.
//!
//! Everything here is pure computation over in-memory data and only needs
//! `alloc`: a small dense tensor type with tape-based reverse-mode
//! differentiation, an SGD optimizer, the contrastive frame embedding, the
//! masked frame-feature reconstructor, boundary detection from reconstruction
//! error trajectories, and the segmentation metrics used to score it.
//!
//! File formats, configuration files and the command-line driver live in the
//! `coseg` crate.

#![no_std]

extern crate alloc;

pub mod autodiff;
pub mod data;
pub mod detect;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod nn;
pub mod optim;
pub mod param;
pub mod reconstruction;
pub mod tensor;
pub mod train;

pub use autodiff::{Gradients, Tape, Var};
pub use error::{Error, Result};
pub use optim::Sgd;
pub use param::{ParamId, Parameter, Params};
pub use tensor::Tensor;
