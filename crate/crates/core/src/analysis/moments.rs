use super::stats::mean_and_std_error;
use super::{check_moment_order, run_paths, McSettings, Quantity};
use crate::engine::{walk_path, SimConfig};
use crate::error::{Error, Result};
use crate::models::SdeModel;
use crate::paths::{derive_seed, sample_increments, SeedSpec};

const MOMENT_STREAM_TAG: u64 = 0x4D4F_4D45_4E54_0000;
const INCREMENT_STREAM_TAG: u64 = 0x494E_4352_0000_0000;

/// Base seed of the path streams used by [`estimate_sup_moments`] for a
/// grid of `steps` steps.
pub fn sup_moment_seed(base_seed: u64, steps: usize) -> u64 {
    derive_seed(base_seed, MOMENT_STREAM_TAG ^ steps as u64)
}

/// Monte Carlo estimate of `E[(sup_n |X_n|)^p]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub p: u32,
    pub quantity: Quantity,
    pub estimate: f64,
    pub std_error: f64,
    pub h: f64,
    pub n_paths: usize,
}

/// Sup-moments for every `p` in `ps` and every quantity propagated at
/// `config.order`, on the grid `h = T / config.steps`.
pub fn estimate_sup_moments(
    model: &dyn SdeModel,
    config: &SimConfig,
    ps: &[u32],
    mc: &McSettings,
) -> Result<Vec<MomentEstimate>> {
    mc.validate()?;
    config.validate()?;
    ps.iter().try_for_each(|&p| check_moment_order(p as f64))?;
    let n = config.steps;
    let h = config.h();
    let seed = sup_moment_seed(mc.base_seed, n);

    let sups = run_paths(mc, |i| {
        let incs = sample_increments(SeedSpec::new(seed, i), n, h)?;
        let mut sup = [0.0f64; 3];
        walk_path(model, config, &incs.increments, h, |_, st| {
            sup[0] = sup[0].max(st.s.abs());
            sup[1] = sup[1].max(st.ds.abs());
            sup[2] = sup[2].max(st.dds.abs());
        })?;
        Ok(sup)
    })?;

    let mut out = Vec::new();
    for &p in ps {
        for q in Quantity::ALL
            .into_iter()
            .filter(|q| q.order() <= config.order)
        {
            let vals: Vec<f64> = sups.iter().map(|s| s[q.index()].powi(p as i32)).collect();
            let (estimate, std_error) = mean_and_std_error(&vals);
            out.push(MomentEstimate {
                p,
                quantity: q,
                estimate,
                std_error,
                h,
                n_paths: sups.len(),
            });
        }
    }
    Ok(out)
}

pub fn estimate_sup_moment(
    model: &dyn SdeModel,
    config: &SimConfig,
    p: u32,
    quantity: Quantity,
    mc: &McSettings,
) -> Result<MomentEstimate> {
    let cfg = config.with_order(quantity.order());
    let est = estimate_sup_moments(model, &cfg, &[p], mc)?;
    Ok(*est
        .iter()
        .find(|e| e.quantity == quantity)
        .expect("requested quantity is simulated"))
}

/// Monte Carlo estimate of `E[|X(t0 + gap) - X(t0)|^p]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementMoment {
    pub gap: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

fn grid_index(t: f64, h: f64, steps: usize) -> Result<usize> {
    let k = (t / h).round();
    if (k * h - t).abs() > 1e-9 * h.max(t) || k < 0.0 || k > steps as f64 {
        return Err(Error::invalid(format!(
            "time {t} is not a grid point of h = {h}"
        )));
    }
    Ok(k as usize)
}

/// Time-increment moments of one quantity, all gaps measured on the same
/// set of paths. `t0` and every `t0 + gap` must be grid points.
pub fn estimate_increment_moments(
    model: &dyn SdeModel,
    config: &SimConfig,
    quantity: Quantity,
    t0: f64,
    gaps: &[f64],
    p: u32,
    mc: &McSettings,
) -> Result<Vec<IncrementMoment>> {
    mc.validate()?;
    check_moment_order(p as f64)?;
    let cfg = config.with_order(config.order.max(quantity.order()));
    cfg.validate()?;
    let n = cfg.steps;
    let h = cfg.h();
    let start = grid_index(t0, h, n)?;
    let ends = gaps
        .iter()
        .map(|&g| {
            if g > 0.0 {
                grid_index(t0 + g, h, n)
            } else {
                Err(Error::invalid(format!("gap must be positive, got {g}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let seed = derive_seed(mc.base_seed, INCREMENT_STREAM_TAG ^ n as u64);
    let qi = quantity.index();

    let diffs = run_paths(mc, |i| {
        let incs = sample_increments(SeedSpec::new(seed, i), n, h)?;
        let mut values = vec![0.0; n + 1];
        walk_path(model, &cfg, &incs.increments, h, |k, st| {
            values[k] = st.as_array()[qi]
        })?;
        Ok(ends
            .iter()
            .map(|&e| (values[e] - values[start]).abs().powi(p as i32))
            .collect::<Vec<f64>>())
    })?;

    Ok(gaps
        .iter()
        .enumerate()
        .map(|(j, &gap)| {
            let vals: Vec<f64> = diffs.iter().map(|d| d[j]).collect();
            let (estimate, std_error) = mean_and_std_error(&vals);
            IncrementMoment {
                gap,
                estimate,
                std_error,
                n_paths: vals.len(),
            }
        })
        .collect())
}
