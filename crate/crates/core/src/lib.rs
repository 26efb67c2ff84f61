//! Known-minimum regression benchmarks for comparing how well shallow and deep
//! fully connected networks can actually be fitted.
//!
//! - [`netcore`]: architectures, forward map, MSE objective and backprop gradient.
//! - [`probgen`]: random parametrizations and zero-minimum training sets.
//! - [`optim`]: SGD, RMSprop, Adadelta and Polak-Ribiere conjugate gradient with
//!   a strong Wolfe line search, all budgeted in gradient calls.
//! - [`experiment`]: the shallow/deep cross-check matrix, its metrics and the
//!   results store.

pub mod error;
pub mod experiment;
pub mod netcore;
pub mod optim;
pub mod probgen;

pub use error::{Error, Result};
pub use netcore::{ArchitectureSpec, Dataset, EvalResult, OutputActivation, ParameterVector, Reduction};
