//! Monte Carlo estimators for strong errors, sup-moments and MLMC level
//! variances, the log-log rate regression, and the product-difference moment
//! checker.
//!
//! Paths are simulated on a rayon pool and written to a slot array indexed
//! by path number. Every sum over that array is a pairwise tree reduction in
//! index order, so results do not depend on the worker count.

mod checks;
mod lemma;
mod mlmc;
mod moments;
mod regression;
mod stats;
mod strong;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use checks::{fd_richardson, jet_consistency, relative_difference, JetCheck, RichardsonCheck};
pub use lemma::{product_lemma_check, random_lemma_instance, Atom, LemmaCheck, LemmaInstance};
pub use mlmc::{mlmc_variance_table, MlmcRow, Payoff};
pub use moments::{
    estimate_increment_moments, estimate_sup_moment, estimate_sup_moments, sup_moment_seed,
    IncrementMoment, MomentEstimate,
};
pub use regression::{fit_loglog, fit_rate, LogLogFit, RateFit};
pub use stats::{mean_and_std_error, pairwise_sum};
pub use strong::{
    estimate_exact_errors, estimate_strong_error, estimate_strong_errors, level_steps, LevelRecord,
};

/// Which component of the path a statistic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    /// `S`
    State,
    /// `∂S/∂θ`
    Tangent1,
    /// `∂²S/∂θ²`
    Tangent2,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::State, Quantity::Tangent1, Quantity::Tangent2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::State => "state",
            Quantity::Tangent1 => "tangent1",
            Quantity::Tangent2 => "tangent2",
        }
    }

    /// Sensitivity order needed to simulate this quantity.
    pub fn order(self) -> crate::engine::Order {
        match self {
            Quantity::State => crate::engine::Order::State,
            Quantity::Tangent1 => crate::engine::Order::First,
            Quantity::Tangent2 => crate::engine::Order::Second,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "state" => Ok(Quantity::State),
            "tangent1" => Ok(Quantity::Tangent1),
            "tangent2" => Ok(Quantity::Tangent2),
            _ => Err(Error::invalid(format!(
                "unknown quantity `{s}` (expected state, tangent1 or tangent2)"
            ))),
        }
    }
}

/// Sampling settings shared by every Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub n_paths: usize,
    pub base_seed: u64,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
}

impl McSettings {
    pub fn new(n_paths: usize, base_seed: u64) -> Self {
        McSettings {
            n_paths,
            base_seed,
            workers: 0,
        }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        McSettings { workers, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::invalid(format!(
                "at least 2 paths are needed, got {}",
                self.n_paths
            )));
        }
        Ok(())
    }
}

/// Evaluates `f(path_index)` for every path and returns the results in index
/// order. On failure reports the error of the lowest failing path index.
pub(crate) fn run_paths<T, F>(mc: &McSettings, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(mc.workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let slots: Vec<Result<T>> = pool.install(|| {
        (0..mc.n_paths as u64)
            .into_par_iter()
            .map(|i| f(i).map_err(|e| e.on_path(i)))
            .collect()
    });
    slots.into_iter().collect()
}

fn check_moment_order(p: f64) -> Result<()> {
    if p >= 2.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("moment order must be ≥ 2, got {p}")))
    }
}
