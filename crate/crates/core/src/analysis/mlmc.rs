use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use super::stats::mean_and_variance;
use super::strong::level_steps;
use super::{run_paths, McSettings};
use crate::engine::{walk_coupled, Order, PathState, SimConfig};
use crate::error::{Error, Result};
use crate::models::SdeModel;
use crate::paths::{derive_seed, sample_increments, SeedSpec};

/// Functions of the terminal `(S_T, Ṡ_T)` usable as MLMC payoffs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payoff {
    /// `S_T`
    State,
    /// `Ṡ_T`
    Tangent,
    /// `max(S_T - K, 0) · Ṡ_T`
    CallTangent { strike: f64 },
}

impl Payoff {
    pub fn evaluate(&self, terminal: &PathState) -> f64 {
        match *self {
            Payoff::State => terminal.s,
            Payoff::Tangent => terminal.ds,
            Payoff::CallTangent { strike } => (terminal.s - strike).max(0.0) * terminal.ds,
        }
    }

    fn order(&self) -> Order {
        match self {
            Payoff::State => Order::State,
            _ => Order::First,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Payoff::State => "state",
            Payoff::Tangent => "tangent",
            Payoff::CallTangent { .. } => "call-tangent",
        }
    }
}

impl fmt::Display for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `state`, `tangent` or `call-tangent` (strike 1; set the strike
/// field afterwards if needed).
impl FromStr for Payoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "state" => Ok(Payoff::State),
            "tangent" => Ok(Payoff::Tangent),
            "call-tangent" => Ok(Payoff::CallTangent { strike: 1.0 }),
            _ => Err(Error::invalid(format!(
                "unknown payoff `{s}` (expected state, tangent or call-tangent)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlmcRow {
    pub level: u32,
    /// Fine timestep at this level.
    pub h: f64,
    pub mean_dp: f64,
    pub var_dp: f64,
    pub n_paths: usize,
}

/// Mean and variance of `P(fine) - P(coarse)` on coupled paths, per level.
pub fn mlmc_variance_table(
    model: &dyn SdeModel,
    config: &SimConfig,
    payoff: Payoff,
    levels: RangeInclusive<u32>,
    mc: &McSettings,
) -> Result<Vec<MlmcRow>> {
    mc.validate()?;
    if levels.is_empty() {
        return Err(Error::invalid("empty level range"));
    }
    let mut rows = Vec::new();
    for level in levels {
        let n = level_steps(config.steps, level)?;
        if n % 2 != 0 {
            return Err(Error::invalid(format!(
                "fine step count at level {level} is odd ({n}); use an even base N"
            )));
        }
        let cfg = config.with_steps(n).with_order(payoff.order());
        cfg.validate()?;
        let h = cfg.h();
        let seed = derive_seed(mc.base_seed, u64::from(level));
        let dps = run_paths(mc, |i| {
            let incs = sample_increments(SeedSpec::new(seed, i), n, h)?;
            let (f, c) = walk_coupled(model, &cfg, &incs.increments, h, |_, _, _| {})?;
            Ok(payoff.evaluate(&f) - payoff.evaluate(&c))
        })?;
        let (mean_dp, var_dp) = mean_and_variance(&dps);
        rows.push(MlmcRow {
            level,
            h,
            mean_dp,
            var_dp,
            n_paths: dps.len(),
        });
    }
    Ok(rows)
}
