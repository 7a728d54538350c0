use super::stats::mean_and_std_error;
use super::{check_moment_order, run_paths, McSettings, Quantity};
use crate::engine::{walk_coupled, walk_path, Order, SimConfig};
use crate::error::{Error, Result};
use crate::models::{Gbm, SdeModel};
use crate::oracle::gbm_value;
use crate::paths::{derive_seed, sample_increments, SeedSpec};

/// Monte Carlo estimate of `E[sup_n |fine - coarse|^p]` (or of the error
/// against an exact solution) at one discretisation level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRecord {
    pub level: u32,
    /// Fine timestep `T / (N₀ 2^level)`.
    pub h: f64,
    pub p: u32,
    pub quantity: Quantity,
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// Fine step count `N₀ · 2^level` at a level.
pub fn level_steps(base_steps: usize, level: u32) -> Result<usize> {
    base_steps
        .checked_mul(1usize.checked_shl(level).unwrap_or(0))
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::invalid(format!("level {level} overflows the step count")))
}

fn records_from_sups(
    sups: &[[f64; 3]],
    level: u32,
    h: f64,
    ps: &[u32],
    quantities: &[Quantity],
) -> Vec<LevelRecord> {
    let mut out = Vec::with_capacity(ps.len() * quantities.len());
    for &p in ps {
        for &q in quantities {
            let vals: Vec<f64> = sups.iter().map(|s| s[q.index()].powi(p as i32)).collect();
            let (estimate, std_error) = mean_and_std_error(&vals);
            out.push(LevelRecord {
                level,
                h,
                p,
                quantity: q,
                estimate,
                std_error,
                n_paths: sups.len(),
            });
        }
    }
    out
}

fn quantities_for(order: Order) -> Vec<Quantity> {
    Quantity::ALL
        .into_iter()
        .filter(|q| q.order() <= order)
        .collect()
}

/// Coupled fine/coarse strong-error moments at `level` for every requested
/// `p` and every quantity propagated at `config.order`, from one set of
/// paths. The fine grid has `config.steps · 2^level` steps and the sup is
/// over coarse grid points.
pub fn estimate_strong_errors(
    model: &dyn SdeModel,
    config: &SimConfig,
    level: u32,
    ps: &[u32],
    mc: &McSettings,
) -> Result<Vec<LevelRecord>> {
    mc.validate()?;
    ps.iter().try_for_each(|&p| check_moment_order(p as f64))?;
    let n = level_steps(config.steps, level)?;
    if n % 2 != 0 {
        return Err(Error::invalid(format!(
            "fine step count at level {level} is odd ({n}); use an even base N"
        )));
    }
    let cfg = config.with_steps(n);
    cfg.validate()?;
    let h = cfg.h();
    let seed = derive_seed(mc.base_seed, u64::from(level));

    let sups = run_paths(mc, |i| {
        let incs = sample_increments(SeedSpec::new(seed, i), n, h)?;
        let mut sup = [0.0f64; 3];
        walk_coupled(model, &cfg, &incs.increments, h, |_, f, c| {
            sup[0] = sup[0].max((f.s - c.s).abs());
            sup[1] = sup[1].max((f.ds - c.ds).abs());
            sup[2] = sup[2].max((f.dds - c.dds).abs());
        })?;
        Ok(sup)
    })?;
    Ok(records_from_sups(
        &sups,
        level,
        h,
        ps,
        &quantities_for(cfg.order),
    ))
}

/// Single-quantity form of [`estimate_strong_errors`].
pub fn estimate_strong_error(
    model: &dyn SdeModel,
    config: &SimConfig,
    p: u32,
    mc: &McSettings,
    level: u32,
    quantity: Quantity,
) -> Result<LevelRecord> {
    let cfg = config.with_order(quantity.order());
    let recs = estimate_strong_errors(model, &cfg, level, &[p], mc)?;
    Ok(*recs
        .iter()
        .find(|r| r.quantity == quantity)
        .expect("requested quantity is simulated"))
}

/// Strong error of the EM state and tangent against the exact GBM solution
/// on the same Brownian path, sup over fine grid points. Requires
/// `config.ds0 == 0` (the closed form assumes S0 independent of θ).
pub fn estimate_exact_errors(
    gbm: &Gbm,
    config: &SimConfig,
    level: u32,
    ps: &[u32],
    mc: &McSettings,
) -> Result<Vec<LevelRecord>> {
    mc.validate()?;
    ps.iter().try_for_each(|&p| check_moment_order(p as f64))?;
    if config.ds0 != 0.0 {
        return Err(Error::invalid("exact GBM reference requires dS0 = 0"));
    }
    if !(config.s0 > 0.0) {
        return Err(Error::invalid("exact GBM reference requires S0 > 0"));
    }
    let n = level_steps(config.steps, level)?;
    let cfg = config
        .with_steps(n)
        .with_order(config.order.min(Order::First));
    cfg.validate()?;
    let h = cfg.h();
    let seed = derive_seed(mc.base_seed, u64::from(level));
    let drift = cfg.theta - 0.5 * gbm.sigma * gbm.sigma;

    let sups = run_paths(mc, |i| {
        let incs = sample_increments(SeedSpec::new(seed, i), n, h)?;
        let mut sup = [0.0f64; 3];
        let mut w = 0.0;
        walk_path(gbm, &cfg, &incs.increments, h, |k, st| {
            if k > 0 {
                w += incs.increments[k - 1];
            }
            let t = k as f64 * h;
            let exact = gbm_value(drift, gbm.sigma, cfg.s0, w, t);
            sup[0] = sup[0].max((st.s - exact).abs());
            sup[1] = sup[1].max((st.ds - t * exact).abs());
        })?;
        Ok(sup)
    })?;
    Ok(records_from_sups(
        &sups,
        level,
        h,
        ps,
        &quantities_for(cfg.order),
    ))
}
