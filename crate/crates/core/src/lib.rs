//! smelt: a desk-scale language-model pretraining stack.
//!
//! The crate covers the whole pipeline end to end: reverse-mode autodiff
//! over dense f64 arrays ([`tensor`]), a Soft-MoE transformer ([`model`]),
//! a text/code curation operator catalog ([`curation`]), packed token
//! shards with a fully serializable shuffled iterator ([`dataset`]), and
//! an AdamW training loop with bit-exact resume ([`train`]).

pub mod curation;
pub mod dataset;
pub mod error;
pub mod gradcheck;
pub mod model;
pub mod reference;
pub mod rng;
pub mod tensor;
pub mod tokenizer;
pub mod train;

pub use error::{Error, Result};
pub use tensor::{finite_difference_gradient, max_rel_err, InitScheme, Value};
