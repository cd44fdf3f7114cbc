//! Sequential measurement selection with online Bayesian linear
//! classification.
//!
//! The crate models a finite menu of alternatives whose binary outcomes
//! follow a linear model through a configurable link, keeps a diagonal
//! Gaussian belief over the weights, updates it online after each outcome,
//! and scores the next measurement by the knowledge-gradient criterion or
//! one of several baselines. A harness layer runs full experiments, tracks
//! opportunity cost against a known truth, and backs the command-line tool.

pub mod adf;
pub mod baselines;
pub mod belief;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod kg;
pub mod laplace;
pub mod links;
pub mod quad;

pub use belief::{Alternative, AlternativeSet, GaussianBelief, LatentMoments};
pub use error::{Error, Result};
pub use links::{Label, Link};
