//! Euler-Maruyama recursions for the state and its θ-sensitivities.
//!
//! With coefficients frozen at the pre-step state `(θ, S_n)`:
//!
//! ```text
//! S⁺   = S + a h + b ΔW
//! Ṡ⁺   = Ṡ + (ȧ + a'Ṡ) h + (ḃ + b'Ṡ) ΔW
//! S̈⁺   = S̈ + (ä + 2ȧ'Ṡ + a''Ṡ² + a'S̈) h + (b̈ + 2ḃ'Ṡ + b''Ṡ² + b'S̈) ΔW
//! ```
//!
//! The same numbers come out of running the first line alone in [`Jet2`]
//! arithmetic with θ seeded as `(θ, 1, 0)`; [`simulate_path_jet`] does that.
//!
//! Sup statistics are taken over grid points only; nothing is simulated
//! between grid points.

use crate::error::{Error, Result};
use crate::models::{Coefficient, SdeModel};
use crate::paths::{coarsen, IncrementGrid};
use crate::taylor::{jet_apply_coeff, Jet2};

/// How many sensitivity orders to propagate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Order {
    /// State only; the tangent fields keep their initial values.
    State,
    First,
    #[default]
    Second,
}

impl Order {
    pub fn from_u8(order: u8) -> Result<Self> {
        match order {
            0 => Ok(Order::State),
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(Error::invalid(format!(
                "order must be 0, 1 or 2, got {order}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub theta: f64,
    pub s0: f64,
    pub ds0: f64,
    pub dds0: f64,
    /// Final time `T`.
    pub t_final: f64,
    /// Number of steps `N`; the timestep is `T / N`.
    pub steps: usize,
    pub order: Order,
}

impl SimConfig {
    pub fn new(theta: f64, s0: f64, t_final: f64, steps: usize) -> Self {
        SimConfig {
            theta,
            s0,
            ds0: 0.0,
            dds0: 0.0,
            t_final,
            steps,
            order: Order::Second,
        }
    }

    pub fn with_steps(self, steps: usize) -> Self {
        SimConfig { steps, ..self }
    }

    pub fn with_order(self, order: Order) -> Self {
        SimConfig { order, ..self }
    }

    pub fn with_theta(self, theta: f64) -> Self {
        SimConfig { theta, ..self }
    }

    pub fn h(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn initial_state(&self) -> PathState {
        PathState {
            s: self.s0,
            ds: self.ds0,
            dds: self.dds0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid(format!(
                "T must be positive, got {}",
                self.t_final
            )));
        }
        if self.steps == 0 {
            return Err(Error::invalid("N must be at least 1"));
        }
        if ![self.theta, self.s0, self.ds0, self.dds0]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::invalid("θ and initial data must be finite"));
        }
        Ok(())
    }

    fn check_grid(&self, grid: &IncrementGrid) -> Result<()> {
        self.validate()?;
        if grid.len() != self.steps {
            return Err(Error::invalid(format!(
                "increment count {} does not match N = {}",
                grid.len(),
                self.steps
            )));
        }
        let h = self.h();
        if (grid.h - h).abs() > 1e-12 * h {
            return Err(Error::invalid(format!(
                "increment timestep {} does not match T/N = {h}",
                grid.h
            )));
        }
        Ok(())
    }
}

/// `(S, Ṡ, S̈)` at one grid point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PathState {
    pub s: f64,
    pub ds: f64,
    pub dds: f64,
}

impl PathState {
    pub fn new(s: f64, ds: f64, dds: f64) -> Self {
        PathState { s, ds, dds }
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite() && self.ds.is_finite() && self.dds.is_finite()
    }

    pub fn abs(&self) -> PathState {
        PathState::new(self.s.abs(), self.ds.abs(), self.dds.abs())
    }

    pub fn max(&self, other: &PathState) -> PathState {
        PathState::new(
            self.s.max(other.s),
            self.ds.max(other.ds),
            self.dds.max(other.dds),
        )
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.s, self.ds, self.dds]
    }
}

impl From<Jet2> for PathState {
    fn from(j: Jet2) -> Self {
        PathState::new(j.v0, j.v1, j.v2)
    }
}

/// Grid trajectory `t_n = n h`, `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub h: f64,
    pub states: Vec<PathState>,
    /// Componentwise max of `|S|`, `|Ṡ|`, `|S̈|` over the grid.
    pub sup_abs: PathState,
}

impl PathResult {
    fn from_states(h: f64, states: Vec<PathState>) -> Self {
        let sup_abs = states
            .iter()
            .fold(PathState::default(), |m, st| m.max(&st.abs()));
        PathResult { h, states, sup_abs }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(move |n| n as f64 * self.h)
    }

    pub fn terminal(&self) -> PathState {
        *self
            .states
            .last()
            .expect("a path has at least its initial state")
    }
}

/// One EM step. On a non-finite result returns [`Error::Divergence`] with
/// `step = 0`; callers iterating a grid relabel the step.
pub fn em_step(
    model: &dyn SdeModel,
    theta: f64,
    state: PathState,
    h: f64,
    dw: f64,
    order: Order,
) -> Result<PathState> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!(
            "timestep must be positive, got {h}"
        )));
    }
    let next = step_unchecked(model, theta, state, h, dw, order);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Divergence {
            step: 0,
            path: None,
        })
    }
}

#[inline]
fn step_unchecked(
    model: &dyn SdeModel,
    theta: f64,
    st: PathState,
    h: f64,
    dw: f64,
    order: Order,
) -> PathState {
    if order == Order::State {
        let a = model.value(Coefficient::Drift, theta, st.s);
        let b = model.value(Coefficient::Diffusion, theta, st.s);
        return PathState::new(st.s + a * h + b * dw, st.ds, st.dds);
    }

    let a = model.partials(Coefficient::Drift, theta, st.s);
    let b = model.partials(Coefficient::Diffusion, theta, st.s);
    let s = st.s + a.value * h + b.value * dw;
    let ds = st.ds + (a.d_theta + a.d_state * st.ds) * h + (b.d_theta + b.d_state * st.ds) * dw;
    let dds = if order == Order::Second {
        let ds2 = st.ds * st.ds;
        let drift =
            a.d_theta2 + 2.0 * a.d_theta_state * st.ds + a.d_state2 * ds2 + a.d_state * st.dds;
        let diff =
            b.d_theta2 + 2.0 * b.d_theta_state * st.ds + b.d_state2 * ds2 + b.d_state * st.dds;
        st.dds + drift * h + diff * dw
    } else {
        st.dds
    };
    PathState::new(s, ds, dds)
}

/// Runs the recursion over `increments`, calling `visit(n, state)` for every
/// grid point `n = 0..=N`.
pub(crate) fn walk_path(
    model: &dyn SdeModel,
    config: &SimConfig,
    increments: &[f64],
    h: f64,
    mut visit: impl FnMut(usize, &PathState),
) -> Result<PathState> {
    let mut state = config.initial_state();
    visit(0, &state);
    for (n, &dw) in increments.iter().enumerate() {
        state = step_unchecked(model, config.theta, state, h, dw, config.order);
        if !state.is_finite() {
            return Err(Error::Divergence {
                step: n,
                path: None,
            });
        }
        visit(n + 1, &state);
    }
    Ok(state)
}

/// Runs a fine path and the coarse path driven by the pairwise-summed
/// increments side by side, calling `visit(m, fine, coarse)` at each coarse
/// grid point `m = 0..=N/2` (fine index `2m`).
pub(crate) fn walk_coupled(
    model: &dyn SdeModel,
    config: &SimConfig,
    fine: &[f64],
    h_fine: f64,
    mut visit: impl FnMut(usize, &PathState, &PathState),
) -> Result<(PathState, PathState)> {
    if fine.len() % 2 != 0 {
        return Err(Error::invalid(format!(
            "coupled simulation needs an even step count, got {}",
            fine.len()
        )));
    }
    let h_coarse = 2.0 * h_fine;
    let mut f = config.initial_state();
    let mut c = f;
    visit(0, &f, &c);
    for (m, pair) in fine.chunks_exact(2).enumerate() {
        f = step_unchecked(model, config.theta, f, h_fine, pair[0], config.order);
        if !f.is_finite() {
            return Err(Error::Divergence {
                step: 2 * m,
                path: None,
            });
        }
        f = step_unchecked(model, config.theta, f, h_fine, pair[1], config.order);
        if !f.is_finite() {
            return Err(Error::Divergence {
                step: 2 * m + 1,
                path: None,
            });
        }
        c = step_unchecked(
            model,
            config.theta,
            c,
            h_coarse,
            pair[0] + pair[1],
            config.order,
        );
        if !c.is_finite() {
            return Err(Error::Divergence {
                step: m,
                path: None,
            });
        }
        visit(m + 1, &f, &c);
    }
    Ok((f, c))
}

pub fn simulate_path(
    model: &dyn SdeModel,
    config: &SimConfig,
    increments: &IncrementGrid,
) -> Result<PathResult> {
    config.check_grid(increments)?;
    let mut states = Vec::with_capacity(increments.len() + 1);
    walk_path(
        model,
        config,
        &increments.increments,
        increments.h,
        |_, st| states.push(*st),
    )?;
    Ok(PathResult::from_states(increments.h, states))
}

/// Simulates on `fine` and on `coarsen(fine)` from the same initial data.
pub fn simulate_coupled(
    model: &dyn SdeModel,
    config: &SimConfig,
    fine: &IncrementGrid,
) -> Result<(PathResult, PathResult)> {
    config.check_grid(fine)?;
    let coarse = coarsen(fine)?;
    let coarse_config = config.with_steps(config.steps / 2);
    Ok((
        simulate_path(model, config, fine)?,
        simulate_path(model, &coarse_config, &coarse)?,
    ))
}

/// The state-only EM recursion evaluated in jet arithmetic. The order in
/// `config` is ignored; all three components are always propagated.
pub fn simulate_path_jet(
    model: &dyn SdeModel,
    config: &SimConfig,
    increments: &IncrementGrid,
) -> Result<PathResult> {
    config.check_grid(increments)?;
    let theta = config.theta;
    let h = increments.h;
    let mut x = Jet2::new(config.s0, config.ds0, config.dds0);
    let mut states = Vec::with_capacity(increments.len() + 1);
    states.push(PathState::from(x));
    for (n, &dw) in increments.increments.iter().enumerate() {
        let a = jet_apply_coeff(model, Coefficient::Drift, theta, x);
        let b = jet_apply_coeff(model, Coefficient::Diffusion, theta, x);
        x = x + a * h + b * dw;
        if !x.is_finite() {
            return Err(Error::Divergence {
                step: n,
                path: None,
            });
        }
        states.push(PathState::from(x));
    }
    Ok(PathResult::from_states(h, states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Additive, Gbm, Partials, Trig};
    use crate::paths::{cumulative, sample_increments, SeedSpec};

    fn zeros(n: usize, h: f64) -> IncrementGrid {
        IncrementGrid::new(h, vec![0.0; n]).unwrap()
    }

    #[test]
    fn one_step_examples() {
        let gbm = Gbm::default();
        let st = em_step(
            &gbm,
            0.05,
            PathState::new(1.0, 0.0, 0.0),
            1.0,
            0.5,
            Order::Second,
        )
        .unwrap();
        assert!((st.s - 1.15).abs() < 1e-15);
        assert_eq!(st.ds, 1.0);
        assert_eq!(st.dds, 0.0);

        let add = Additive::default();
        let st = em_step(&add, 0.3, PathState::default(), 0.5, -0.2, Order::Second).unwrap();
        assert!((st.s - -0.05).abs() < 1e-15);
        assert_eq!((st.ds, st.dds), (0.5, 0.0));

        // trig drift vanishes at θ + S = 0; with dW = 0 the state is fixed
        let st = em_step(
            &Trig,
            0.4,
            PathState::new(-0.4, 0.0, 0.0),
            0.1,
            0.0,
            Order::State,
        )
        .unwrap();
        assert_eq!(st.s, -0.4);
    }

    #[test]
    fn step_rejects_nonpositive_h() {
        assert!(em_step(&Trig, 0.0, PathState::default(), 0.0, 0.0, Order::State).is_err());
    }

    #[test]
    fn divergence_is_reported_with_step() {
        let gbm = Gbm { sigma: 1.0 };
        let cfg = SimConfig::new(1e300, 1e10, 4.0, 4);
        let err = simulate_path(&gbm, &cfg, &zeros(4, 1.0)).unwrap_err();
        assert_eq!(
            err,
            Error::Divergence {
                step: 0,
                path: None
            }
        );

        let st = em_step(
            &gbm,
            1e308,
            PathState::new(1e10, 0.0, 0.0),
            1.0,
            0.0,
            Order::State,
        );
        assert!(matches!(st, Err(Error::Divergence { .. })));
    }

    #[test]
    fn additive_path_is_exact() {
        let cfg = SimConfig::new(0.3, 0.0, 1.0, 64);
        let incs = sample_increments(SeedSpec::new(3, 0), 64, cfg.h()).unwrap();
        let path = simulate_path(&Additive::default(), &cfg, &incs).unwrap();
        let w = cumulative(&incs);
        for (n, (st, t)) in path.states.iter().zip(path.times()).enumerate() {
            let wn = if n == 0 { 0.0 } else { w[n - 1] };
            assert!((st.s - (0.3 * t + wn)).abs() < 1e-14);
            assert_eq!(st.ds, t);
            assert_eq!(st.dds, 0.0);
        }
    }

    #[test]
    fn deterministic_gbm_recursion() {
        let (theta, s0, n) = (0.1, 1.5, 20);
        let cfg = SimConfig::new(theta, s0, 1.0, n);
        let h = cfg.h();
        let path = simulate_path(&Gbm::default(), &cfg, &zeros(n, h)).unwrap();
        for (k, st) in path.states.iter().enumerate() {
            let expect = s0 * (1.0 + theta * h).powi(k as i32);
            assert!((st.s - expect).abs() <= 1e-14 * expect);
        }
    }

    #[derive(Debug)]
    struct ThetaFree;

    impl SdeModel for ThetaFree {
        fn id(&self) -> &str {
            "theta-free"
        }
        fn description(&self) -> &str {
            "a = -S, b = 0.3 cos S"
        }
        fn bounds(&self) -> crate::models::DerivativeBounds {
            crate::models::DerivativeBounds {
                l_a: Some(1.0),
                l_b: Some(0.3),
            }
        }
        fn partials(&self, which: Coefficient, _theta: f64, s: f64) -> Partials {
            match which {
                Coefficient::Drift => Partials {
                    value: -s,
                    d_state: -1.0,
                    ..Default::default()
                },
                Coefficient::Diffusion => Partials {
                    value: 0.3 * s.cos(),
                    d_state: -0.3 * s.sin(),
                    d_state2: -0.3 * s.cos(),
                    ..Default::default()
                },
            }
        }
    }

    #[test]
    fn zero_tangent_is_a_fixed_point() {
        let cfg = SimConfig::new(0.7, 0.2, 1.0, 128);
        let incs = sample_increments(SeedSpec::new(8, 1), 128, cfg.h()).unwrap();
        let path = simulate_path(&ThetaFree, &cfg, &incs).unwrap();
        assert!(path.states.iter().all(|st| st.ds == 0.0 && st.dds == 0.0));
    }

    #[test]
    fn order_gates_tangent_work() {
        let cfg = SimConfig::new(0.1, 1.0, 1.0, 32).with_order(Order::State);
        let incs = sample_increments(SeedSpec::new(1, 1), 32, cfg.h()).unwrap();
        let p0 = simulate_path(&Trig, &cfg, &incs).unwrap();
        let p2 = simulate_path(&Trig, &cfg.with_order(Order::Second), &incs).unwrap();
        let p1 = simulate_path(&Trig, &cfg.with_order(Order::First), &incs).unwrap();
        for ((a, b), c) in p0.states.iter().zip(&p2.states).zip(&p1.states) {
            assert_eq!(a.s, b.s);
            assert_eq!(a.ds, 0.0);
            assert_eq!(c.ds, b.ds);
            assert_eq!(c.dds, 0.0);
        }
    }

    #[test]
    fn sup_statistics_match_grid() {
        let cfg = SimConfig::new(0.1, 1.0, 1.0, 64);
        let incs = sample_increments(SeedSpec::new(4, 2), 64, cfg.h()).unwrap();
        let p = simulate_path(&Trig, &cfg, &incs).unwrap();
        let sup = p.states.iter().map(|s| s.ds.abs()).fold(0.0, f64::max);
        assert_eq!(sup, p.sup_abs.ds);
        assert_eq!(p.states.len(), 65);
        assert_eq!(p.terminal(), p.states[64]);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let cfg = SimConfig::new(0.1, 1.0, 1.0, 16);
        assert!(simulate_path(&Trig, &cfg, &zeros(8, 1.0 / 8.0)).is_err());
        assert!(simulate_path(&Trig, &cfg, &zeros(16, 0.1)).is_err());
        let odd = SimConfig::new(0.1, 1.0, 1.0, 3);
        assert!(simulate_coupled(&Trig, &odd, &zeros(3, 1.0 / 3.0)).is_err());
    }

    #[test]
    fn coupled_examples() {
        let cfg = SimConfig::new(0.1, 1.0, 1.0, 2);
        let (f, c) = simulate_coupled(&Gbm::default(), &cfg, &zeros(2, 0.5)).unwrap();
        assert!((f.terminal().s - 1.1025).abs() < 1e-15);
        assert!((c.terminal().s - 1.1).abs() < 1e-15);
        assert!((f.terminal().s - c.terminal().s - 0.0025).abs() < 1e-15);

        let cfg = SimConfig::new(0.25, 0.0, 1.0, 64);
        let incs = sample_increments(SeedSpec::new(5, 9), 64, cfg.h()).unwrap();
        let (f, c) = simulate_coupled(&Additive::default(), &cfg, &incs).unwrap();
        for (m, cs) in c.states.iter().enumerate() {
            assert_eq!(*cs, f.states[2 * m]);
        }
    }

    #[test]
    fn streaming_coupled_matches_stored_paths() {
        let cfg = SimConfig::new(0.1, 1.0, 1.0, 128);
        let incs = sample_increments(SeedSpec::new(6, 3), 128, cfg.h()).unwrap();
        let (f, c) = simulate_coupled(&Trig, &cfg, &incs).unwrap();
        walk_coupled(&Trig, &cfg, &incs.increments, incs.h, |m, fs, cs| {
            assert_eq!(*fs, f.states[2 * m]);
            assert_eq!(*cs, c.states[m]);
        })
        .unwrap();
    }

    #[test]
    fn jet_examples() {
        let cfg = SimConfig::new(0.3, 0.0, 1.0, 16);
        let incs = sample_increments(SeedSpec::new(1, 0), 16, cfg.h()).unwrap();
        let j = simulate_path_jet(&Additive::default(), &cfg, &incs).unwrap();
        for (st, t) in j.states.iter().zip(j.times()) {
            assert_eq!(st.ds, t);
        }

        // ∂²/∂θ² of S0 (1 + θh)^n = n(n-1) h² (1 + θh)^{n-2} S0
        let (theta, s0, n) = (0.2, 1.3, 12usize);
        let cfg = SimConfig::new(theta, s0, 1.0, n);
        let h = cfg.h();
        let j = simulate_path_jet(&Gbm::default(), &cfg, &zeros(n, h)).unwrap();
        for (k, st) in j.states.iter().enumerate().skip(2) {
            let kf = k as f64;
            let expect = kf * (kf - 1.0) * h * h * (1.0 + theta * h).powi(k as i32 - 2) * s0;
            assert!((st.dds - expect).abs() <= 1e-10 * expect.abs(), "{k}");
        }
    }
}
