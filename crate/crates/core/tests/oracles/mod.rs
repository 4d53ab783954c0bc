//! Independent reference implementations shared by the integration tests
//! here and the acceptance run in the `coseg` crate. Each test target uses
//! only part of this module.
#![allow(dead_code)]

pub mod contrastive;
pub mod gradcheck;
pub mod matching;
