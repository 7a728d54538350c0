//! Second-order jets in the single parameter θ.
//!
//! A [`Jet2`] carries a value together with its first and second θ-derivatives.
//! The second component is the raw derivative, not the Taylor coefficient
//! (no division by 2). Running the plain EM recursion in jet arithmetic
//! differentiates the discrete scheme itself.

use std::ops::{Add, Mul, Neg, Sub};

use crate::models::{Coefficient, SdeModel};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet2 {
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
}

impl Jet2 {
    pub const fn new(v0: f64, v1: f64, v2: f64) -> Self {
        Jet2 { v0, v1, v2 }
    }

    /// A quantity that does not depend on θ.
    pub const fn constant(v0: f64) -> Self {
        Jet2 {
            v0,
            v1: 0.0,
            v2: 0.0,
        }
    }

    /// The independent variable θ itself.
    pub const fn variable(theta: f64) -> Self {
        Jet2 {
            v0: theta,
            v1: 1.0,
            v2: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v0.is_finite() && self.v1.is_finite() && self.v2.is_finite()
    }

    /// Multiply every component by a θ-independent scalar.
    pub fn scale(self, k: f64) -> Self {
        Jet2::new(self.v0 * k, self.v1 * k, self.v2 * k)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        Jet2::new(self.v0 + rhs.v0, self.v1 + rhs.v1, self.v2 + rhs.v2)
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        Jet2::new(self.v0 - rhs.v0, self.v1 - rhs.v1, self.v2 - rhs.v2)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2::new(-self.v0, -self.v1, -self.v2)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        jet_mul(self, rhs)
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: f64) -> Jet2 {
        self.scale(rhs)
    }
}

/// Leibniz product truncated at order 2.
pub fn jet_mul(x: Jet2, y: Jet2) -> Jet2 {
    Jet2 {
        v0: x.v0 * y.v0,
        v1: x.v0 * y.v1 + x.v1 * y.v0,
        v2: x.v0 * y.v2 + 2.0 * x.v1 * y.v1 + x.v2 * y.v0,
    }
}

/// Evaluates `f(θ, S(θ))` in jet arithmetic, where `f` is the drift or
/// diffusion of `model` and `x` is the jet of `S`.
///
/// Uses the bivariate second-order Taylor polynomial of `f` about
/// `(θ, x.v0)`, composed with the increments `δθ = (0, 1, 0)` and
/// `δS = (0, x.v1, x.v2)`. This yields
/// `(f, ḟ + f'·x1, f̈ + 2ḟ'·x1 + f''·x1² + f'·x2)`.
pub fn jet_apply_coeff(model: &dyn SdeModel, which: Coefficient, theta: f64, x: Jet2) -> Jet2 {
    let p = model.partials(which, theta, x.v0);
    let dt = Jet2::new(0.0, 1.0, 0.0);
    let ds = Jet2::new(0.0, x.v1, x.v2);

    Jet2::constant(p.value)
        + dt * p.d_theta
        + ds * p.d_state
        + (dt * dt) * (0.5 * p.d_theta2)
        + (dt * ds) * p.d_theta_state
        + (ds * ds) * (0.5 * p.d_state2)
}
