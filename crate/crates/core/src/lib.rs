//! Exact lattice-polytope tooling for evaluating generative models trained
//! on reflexive-polytope datasets.

mod cone;
pub mod error;
pub mod linalg;
pub mod polytope;
pub mod properties;
mod normality;
pub mod tokens;
pub mod dataset;
pub mod equivalence;
pub mod ngram;
pub mod eval;

pub use error::{Error, Result};
