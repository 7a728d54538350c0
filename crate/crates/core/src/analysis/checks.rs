//! Pathwise consistency checks: jet recursion against the explicit tangent
//! recursions, and finite differences of the scheme against the tangents.

use super::{McSettings, Quantity};
use crate::engine::{simulate_path, simulate_path_jet, SimConfig};
use crate::error::{Error, Result};
use crate::models::SdeModel;
use crate::oracle::{fd_second, fd_second_noise, fd_tangent, fd_tangent_noise};
use crate::paths::{derive_seed, sample_increments, SeedSpec};

const JET_STREAM_TAG: u64 = 0x4A45_5400_0000_0000;
const FD_STREAM_TAG: u64 = 0x4644_0000_0000_0000;

/// `|a - b| / max(|a|, |b|)`, 0 when both are 0.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetCheck {
    pub steps: usize,
    pub n_paths: usize,
    /// Largest componentwise relative difference over all grid points.
    pub max_relative_difference: f64,
}

/// Runs [`simulate_path_jet`] and [`simulate_path`] on the same increments
/// for `mc.n_paths` paths with `steps` steps.
pub fn jet_consistency(
    model: &dyn SdeModel,
    config: &SimConfig,
    steps: usize,
    mc: &McSettings,
) -> Result<JetCheck> {
    let cfg = config.with_steps(steps);
    cfg.validate()?;
    let h = cfg.h();
    let seed = derive_seed(mc.base_seed, JET_STREAM_TAG ^ steps as u64);
    let per_path = super::run_paths(mc, |i| {
        let incs = sample_increments(SeedSpec::new(seed, i), steps, h)?;
        let explicit = simulate_path(model, &cfg, &incs)?;
        let jet = simulate_path_jet(model, &cfg, &incs)?;
        Ok(explicit
            .states
            .iter()
            .zip(&jet.states)
            .flat_map(|(a, b)| {
                a.as_array()
                    .into_iter()
                    .zip(b.as_array())
                    .map(|(x, y)| relative_difference(x, y))
            })
            .fold(0.0, f64::max))
    })?;
    Ok(JetCheck {
        steps,
        n_paths: mc.n_paths,
        max_relative_difference: per_path.into_iter().fold(0.0, f64::max),
    })
}

/// Outcome of the Richardson test between bumps `10ε` and `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct RichardsonCheck {
    pub quantity: Quantity,
    pub large_bump: f64,
    pub small_bump: f64,
    /// Paths where the small-bump error exceeded 10× the rounding noise.
    pub evaluated: usize,
    /// Paths skipped by the noise guard.
    pub below_noise: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Guarded ratios falling outside `[50, 200]`.
    pub out_of_band: usize,
}

impl RichardsonCheck {
    pub const BAND: (f64, f64) = (50.0, 200.0);

    /// Every evaluated ratio lies in the band.
    pub fn passed(&self) -> bool {
        self.out_of_band == 0
    }
}

/// Compares the terminal finite-difference sensitivity at bumps `10ε` and
/// `ε` with the tangent from the explicit recursion, on `mc.n_paths` paths.
/// The ratio of the two errors should be about 100 for an O(ε²) difference
/// quotient. Paths where the small-bump error is within 10× the estimated
/// rounding noise are counted in `below_noise` and not judged.
pub fn fd_richardson(
    model: &dyn SdeModel,
    config: &SimConfig,
    quantity: Quantity,
    small_bump: f64,
    mc: &McSettings,
) -> Result<RichardsonCheck> {
    if quantity == Quantity::State {
        return Err(Error::invalid(
            "finite differences check tangent1 or tangent2",
        ));
    }
    config.validate()?;
    let cfg = config.with_order(quantity.order());
    let n = cfg.steps;
    let h = cfg.h();
    let large_bump = 10.0 * small_bump;
    let seed = derive_seed(mc.base_seed, FD_STREAM_TAG ^ n as u64);

    let outcomes = super::run_paths(mc, |i| {
        let incs = sample_increments(SeedSpec::new(seed, i), n, h)?;
        let exact = simulate_path(model, &cfg, &incs)?.terminal();
        let (target, noise) = match quantity {
            Quantity::Tangent1 => (exact.ds, fd_tangent_noise(exact.s.abs(), n, small_bump)),
            _ => (exact.dds, fd_second_noise(exact.s.abs(), n, small_bump)),
        };
        let fd = |eps| -> Result<f64> {
            let v = match quantity {
                Quantity::Tangent1 => fd_tangent(model, &cfg, &incs, eps)?,
                _ => fd_second(model, &cfg, &incs, eps)?,
            };
            Ok(v[n])
        };
        let err_large = (fd(large_bump)? - target).abs();
        let err_small = (fd(small_bump)? - target).abs();
        Ok((err_small > 10.0 * noise).then(|| err_large / err_small))
    })?;

    let ratios: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let (lo, hi) = RichardsonCheck::BAND;
    Ok(RichardsonCheck {
        quantity,
        large_bump,
        small_bump,
        evaluated: ratios.len(),
        below_noise: outcomes.len() - ratios.len(),
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        out_of_band: ratios.iter().filter(|r| !(lo..=hi).contains(*r)).count(),
    })
}
