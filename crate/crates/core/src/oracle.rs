//! Ground truths independent of the tangent recursions: the GBM closed form
//! and finite differences of the discrete scheme in θ.

use crate::engine::{simulate_path, Order, SimConfig};
use crate::error::{Error, Result};
use crate::models::SdeModel;
use crate::paths::IncrementGrid;

/// Exact GBM solution and its θ-derivative on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormPath {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub ds: Vec<f64>,
}

/// `S_t = S0 exp((θ - σ²/2) t + σ W_t)` and `Ṡ_t = t S_t`.
pub fn gbm_closed_form(
    theta: f64,
    sigma: f64,
    s0: f64,
    w: &[f64],
    times: &[f64],
) -> Result<ClosedFormPath> {
    if !(s0 > 0.0) {
        return Err(Error::invalid(format!(
            "GBM closed form needs S0 > 0, got {s0}"
        )));
    }
    if w.len() != times.len() {
        return Err(Error::invalid(format!(
            "{} Brownian values for {} times",
            w.len(),
            times.len()
        )));
    }
    let drift = theta - 0.5 * sigma * sigma;
    let s: Vec<f64> = w
        .iter()
        .zip(times)
        .map(|(&wt, &t)| gbm_value(drift, sigma, s0, wt, t))
        .collect();
    let ds = s.iter().zip(times).map(|(&st, &t)| t * st).collect();
    Ok(ClosedFormPath {
        times: times.to_vec(),
        s,
        ds,
    })
}

#[inline]
pub(crate) fn gbm_value(drift: f64, sigma: f64, s0: f64, w: f64, t: f64) -> f64 {
    s0 * (drift * t + sigma * w).exp()
}

/// Default bump: `1e-4 · max(1, |θ|)`.
pub fn default_fd_bump(theta: f64) -> f64 {
    1e-4 * theta.abs().max(1.0)
}

fn bumped_states(
    model: &dyn SdeModel,
    config: &SimConfig,
    increments: &IncrementGrid,
    theta: f64,
) -> Result<Vec<f64>> {
    let cfg = config.with_theta(theta).with_order(Order::State);
    Ok(simulate_path(model, &cfg, increments)?
        .states
        .into_iter()
        .map(|st| st.s)
        .collect())
}

fn check_bump(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("bump must be positive, got {eps}")))
    }
}

/// Central difference `(S(θ+ε) - S(θ-ε)) / 2ε` at every grid point, with the
/// Brownian increments held fixed.
pub fn fd_tangent(
    model: &dyn SdeModel,
    config: &SimConfig,
    increments: &IncrementGrid,
    eps: f64,
) -> Result<Vec<f64>> {
    check_bump(eps)?;
    let up = bumped_states(model, config, increments, config.theta + eps)?;
    let down = bumped_states(model, config, increments, config.theta - eps)?;
    Ok(up
        .iter()
        .zip(&down)
        .map(|(u, d)| (u - d) / (2.0 * eps))
        .collect())
}

/// Second central difference `(S(θ+ε) - 2S(θ) + S(θ-ε)) / ε²`.
pub fn fd_second(
    model: &dyn SdeModel,
    config: &SimConfig,
    increments: &IncrementGrid,
    eps: f64,
) -> Result<Vec<f64>> {
    check_bump(eps)?;
    let up = bumped_states(model, config, increments, config.theta + eps)?;
    let mid = bumped_states(model, config, increments, config.theta)?;
    let down = bumped_states(model, config, increments, config.theta - eps)?;
    Ok(up
        .iter()
        .zip(&mid)
        .zip(&down)
        .map(|((u, m), d)| (u - 2.0 * m + d) / (eps * eps))
        .collect())
}

/// Rounding-noise scale of [`fd_tangent`] at one grid point given the
/// magnitude of `S` there.
pub fn fd_tangent_noise(s_abs: f64, steps: usize, eps: f64) -> f64 {
    f64::EPSILON * s_abs.max(1.0) * (steps.max(1) as f64).sqrt() / eps
}

/// Rounding-noise scale of [`fd_second`].
pub fn fd_second_noise(s_abs: f64, steps: usize, eps: f64) -> f64 {
    4.0 * f64::EPSILON * s_abs.max(1.0) * (steps.max(1) as f64).sqrt() / (eps * eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::simulate_path;
    use crate::models::{Additive, Gbm, Trig};
    use crate::paths::{sample_increments, SeedSpec};

    #[test]
    fn closed_form_examples() {
        let sigma: f64 = 0.2;
        let times = [0.0, 0.5, 1.0, 3.0];
        let cf = gbm_closed_form(0.5 * sigma * sigma, sigma, 2.0, &[0.0; 4], &times).unwrap();
        assert!(cf.s.iter().all(|&s| (s - 2.0).abs() < 1e-15));
        assert_eq!(cf.ds[0], 0.0);

        let cf = gbm_closed_form(0.05, 0.2, 1.0, &[0.5], &[1.0]).unwrap();
        let e = 0.13_f64.exp();
        assert!((cf.s[0] - e).abs() < 1e-15);
        assert!((cf.ds[0] - e).abs() < 1e-15);
    }

    #[test]
    fn closed_form_errors() {
        assert!(gbm_closed_form(0.1, 0.2, 1.0, &[0.0, 1.0], &[0.0]).is_err());
        assert!(gbm_closed_form(0.1, 0.2, 0.0, &[0.0], &[0.0]).is_err());
    }

    #[test]
    fn closed_form_tangent_identity() {
        let incs = sample_increments(SeedSpec::new(2, 2), 50, 0.02).unwrap();
        let w = crate::paths::cumulative(&incs);
        let times: Vec<f64> = (1..=50).map(|n| n as f64 * 0.02).collect();
        let cf = gbm_closed_form(0.07, 0.3, 1.2, &w, &times).unwrap();
        for ((s, ds), t) in cf.s.iter().zip(&cf.ds).zip(&times) {
            assert_eq!(*ds, t * s);
            assert!(*s > 0.0);
        }
    }

    #[test]
    fn additive_fd_is_exact_on_dyadic_inputs() {
        let cfg = SimConfig::new(0.25, 0.0, 1.0, 32);
        let incs = sample_increments(SeedSpec::new(12, 0), 32, cfg.h()).unwrap();
        let model = Additive::default();
        for eps in [2f64.powi(-10), 2f64.powi(-14)] {
            let fd = fd_tangent(&model, &cfg, &incs, eps).unwrap();
            for (n, d) in fd.iter().enumerate() {
                assert_eq!(*d, n as f64 * cfg.h());
            }
            let fd2 = fd_second(&model, &cfg, &incs, eps).unwrap();
            assert!(fd2.iter().all(|&x| x == 0.0));
        }
        // non-dyadic θ and ε: exact up to rounding
        let cfg = SimConfig::new(0.3, 0.0, 1.0, 32);
        let fd = fd_tangent(&model, &cfg, &incs, 1e-4).unwrap();
        for (n, d) in fd.iter().enumerate() {
            assert!((d - n as f64 * cfg.h()).abs() < 1e-9);
        }
    }

    #[test]
    fn gbm_deterministic_fd() {
        let (theta, s0, n) = (0.1, 1.0, 10usize);
        let cfg = SimConfig::new(theta, s0, 1.0, n);
        let h = cfg.h();
        let zeros = IncrementGrid::new(h, vec![0.0; n]).unwrap();
        let first = |k: f64| k * h * (1.0 + theta * h).powf(k - 1.0) * s0;
        let second = |k: f64| k * (k - 1.0) * h * h * (1.0 + theta * h).powf(k - 2.0) * s0;
        let mut err1 = Vec::new();
        let mut err2 = Vec::new();
        for eps in [1e-2, 1e-3] {
            let fd = fd_tangent(&Gbm::default(), &cfg, &zeros, eps).unwrap();
            let fd2 = fd_second(&Gbm::default(), &cfg, &zeros, eps).unwrap();
            err1.push((fd[n] - first(n as f64)).abs());
            err2.push((fd2[n] - second(n as f64)).abs());
        }
        let r1 = err1[0] / err1[1];
        assert!((50.0..200.0).contains(&r1), "ratio {r1}");
        assert!(err2[0] < 1e-5 && err2[1] < 1e-6, "{err2:?}");
    }

    #[test]
    fn trig_fd_richardson_ratio() {
        let cfg = SimConfig::new(0.1, 1.0, 1.0, 16);
        let incs = sample_increments(SeedSpec::new(77, 0), 16, cfg.h()).unwrap();
        let exact = simulate_path(&Trig, &cfg, &incs).unwrap();
        let e = |eps| {
            let fd = fd_tangent(&Trig, &cfg, &incs, eps).unwrap();
            (fd[16] - exact.terminal().ds).abs()
        };
        let (e3, e4) = (e(1e-3), e(1e-4));
        let noise = fd_tangent_noise(exact.terminal().s.abs(), 16, 1e-4);
        assert!(e4 > 10.0 * noise);
        let ratio = e3 / e4;
        assert!((50.0..200.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn bump_must_be_positive() {
        let cfg = SimConfig::new(0.1, 1.0, 1.0, 4);
        let incs = IncrementGrid::new(0.25, vec![0.0; 4]).unwrap();
        assert!(fd_tangent(&Trig, &cfg, &incs, 0.0).is_err());
        assert!(fd_second(&Trig, &cfg, &incs, -1.0).is_err());
        assert_eq!(default_fd_bump(0.1), 1e-4);
        assert!((default_fd_bump(-3.0) - 3e-4).abs() < 1e-19);
    }
}
