//! Rationale distillation toolkit for abstractive summarization.

pub mod config;
pub mod curriculum;
pub mod error;
pub mod eval;
pub mod probe;
pub mod rationale;
pub mod select;
pub mod synthetic;
pub mod text;
pub mod topic;
pub mod workspace;

pub use error::{Error, Result};
