//! Euler-Maruyama simulation of parametric scalar SDEs
//!
//! ```text
//! dS_t = a(θ, S_t) dt + b(θ, S_t) dW_t
//! ```
//!
//! together with the first- and second-order pathwise sensitivities
//! `∂S/∂θ` and `∂²S/∂θ²` (tangent processes), plus the Monte Carlo machinery
//! needed to check their strong convergence empirically: coupled coarse/fine
//! Brownian paths, strong-error moments per level, log-log rate fits,
//! sup-moment estimates, MLMC level-variance tables and a brute-force checker
//! for the product-difference moment inequality.
//!
//! The crate is organised bottom-up:
//!
//! - [`models`]: drift/diffusion coefficients with all partials up to order 2
//! - [`taylor`]: second-order jets in θ
//! - [`paths`]: reproducible Brownian increments and coarse-grid coupling
//! - [`engine`]: explicit and jet forms of the EM recursion
//! - [`oracle`]: GBM closed form and finite-difference sensitivities
//! - [`analysis`]: Monte Carlo estimators and regressions
//! - [`cli`]: configuration parsing, dispatch and CSV output

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod engine;
mod error;
pub mod models;
pub mod oracle;
pub mod paths;
pub mod taylor;

pub use crate::engine::{
    em_step, simulate_coupled, simulate_path, simulate_path_jet, Order, PathResult, PathState,
    SimConfig,
};
pub use crate::error::{Error, Result};
pub use crate::models::{
    derivative_bounds, eval_partial, list_models, lookup_model, Additive, Coefficient,
    DerivativeBounds, Gbm, ModelDescriptor, ModelRegistry, Partials, SdeModel, Trig,
};
pub use crate::paths::{coarsen, cumulative, sample_increments, IncrementGrid, SeedSpec};
pub use crate::taylor::{jet_apply_coeff, jet_mul, Jet2};
