//! SDE models: drift `a(θ, S)` and diffusion `b(θ, S)` with every partial
//! derivative of total order ≤ 2 supplied analytically.
//!
//! Notation used in the docs: `f'` is `∂f/∂S`, `ḟ` is `∂f/∂θ`, so `ḟ'` is the
//! mixed partial `∂²f/∂θ∂S`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Which coefficient of the SDE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coefficient {
    Drift,
    Diffusion,
}

/// A coefficient and all its partials up to total order 2 at one `(θ, S)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Partials {
    pub value: f64,
    /// `∂f/∂θ`
    pub d_theta: f64,
    /// `∂f/∂S`
    pub d_state: f64,
    /// `∂²f/∂θ²`
    pub d_theta2: f64,
    /// `∂²f/∂θ∂S`
    pub d_theta_state: f64,
    /// `∂²f/∂S²`
    pub d_state2: f64,
}

impl Partials {
    /// Partial with θ-order `i` and S-order `j`.
    pub fn get(&self, i: u32, j: u32) -> Result<f64> {
        Ok(match (i, j) {
            (0, 0) => self.value,
            (1, 0) => self.d_theta,
            (0, 1) => self.d_state,
            (2, 0) => self.d_theta2,
            (1, 1) => self.d_theta_state,
            (0, 2) => self.d_state2,
            _ => return Err(Error::UnsupportedOrder { theta: i, state: j }),
        })
    }

    /// Largest absolute value among the partials of order ≥ 1.
    pub fn max_abs_derivative(&self) -> f64 {
        [
            self.d_theta,
            self.d_state,
            self.d_theta2,
            self.d_theta_state,
            self.d_state2,
        ]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Uniform bounds on every order-1 and order-2 partial of the drift (`l_a`)
/// and diffusion (`l_b`). `None` means no such bound exists for the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeBounds {
    pub l_a: Option<f64>,
    pub l_b: Option<f64>,
}

impl DerivativeBounds {
    pub fn satisfied(&self) -> bool {
        self.l_a.is_some() && self.l_b.is_some()
    }
}

/// A parametric scalar SDE model.
///
/// Implementations must be pure: the same `(θ, S)` always gives the same
/// partials. Models are shared read-only between worker threads.
pub trait SdeModel: Send + Sync + fmt::Debug {
    fn id(&self) -> &str;

    fn description(&self) -> &str;

    /// Fixed model constants, e.g. `σ` for GBM.
    fn constants(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }

    fn bounds(&self) -> DerivativeBounds;

    fn partials(&self, which: Coefficient, theta: f64, s: f64) -> Partials;

    /// The coefficient value alone. Override when it is cheaper than the full
    /// set of partials.
    fn value(&self, which: Coefficient, theta: f64, s: f64) -> f64 {
        self.partials(which, theta, s).value
    }
}

/// Geometric Brownian motion: `a = θS`, `b = σS`.
///
/// `∂a/∂θ = S` is unbounded, so no uniform derivative bounds exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gbm {
    pub sigma: f64,
}

impl Default for Gbm {
    fn default() -> Self {
        Gbm { sigma: 0.2 }
    }
}

impl SdeModel for Gbm {
    fn id(&self) -> &str {
        "gbm"
    }

    fn description(&self) -> &str {
        "geometric Brownian motion a = theta*S, b = sigma*S; closed form available, derivative bounds do not hold"
    }

    fn constants(&self) -> Vec<(&'static str, f64)> {
        vec![("sigma", self.sigma)]
    }

    fn bounds(&self) -> DerivativeBounds {
        DerivativeBounds {
            l_a: None,
            l_b: None,
        }
    }

    fn partials(&self, which: Coefficient, theta: f64, s: f64) -> Partials {
        match which {
            Coefficient::Drift => Partials {
                value: theta * s,
                d_theta: s,
                d_state: theta,
                d_theta2: 0.0,
                d_theta_state: 1.0,
                d_state2: 0.0,
            },
            Coefficient::Diffusion => Partials {
                value: self.sigma * s,
                d_state: self.sigma,
                ..Partials::default()
            },
        }
    }

    fn value(&self, which: Coefficient, theta: f64, s: f64) -> f64 {
        match which {
            Coefficient::Drift => theta * s,
            Coefficient::Diffusion => self.sigma * s,
        }
    }
}

/// `a = sin(θ + S)`, `b = 0.5 + 0.25·cos(θ − S)`.
///
/// Every partial of order 1 and 2 is bounded: `L_a = 1`, `L_b = 0.25`.
/// The diffusion stays in `[0.25, 0.75]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Trig;

impl SdeModel for Trig {
    fn id(&self) -> &str {
        "trig"
    }

    fn description(&self) -> &str {
        "a = sin(theta + S), b = 0.5 + 0.25*cos(theta - S); all derivatives bounded (L_a = 1, L_b = 0.25)"
    }

    fn bounds(&self) -> DerivativeBounds {
        DerivativeBounds {
            l_a: Some(1.0),
            l_b: Some(0.25),
        }
    }

    fn partials(&self, which: Coefficient, theta: f64, s: f64) -> Partials {
        match which {
            Coefficient::Drift => {
                let (sin, cos) = (theta + s).sin_cos();
                Partials {
                    value: sin,
                    d_theta: cos,
                    d_state: cos,
                    d_theta2: -sin,
                    d_theta_state: -sin,
                    d_state2: -sin,
                }
            }
            Coefficient::Diffusion => {
                let (sin, cos) = (theta - s).sin_cos();
                Partials {
                    value: 0.5 + 0.25 * cos,
                    d_theta: -0.25 * sin,
                    d_state: 0.25 * sin,
                    d_theta2: -0.25 * cos,
                    d_theta_state: 0.25 * cos,
                    d_state2: -0.25 * cos,
                }
            }
        }
    }

    fn value(&self, which: Coefficient, theta: f64, s: f64) -> f64 {
        match which {
            Coefficient::Drift => (theta + s).sin(),
            Coefficient::Diffusion => 0.5 + 0.25 * (theta - s).cos(),
        }
    }
}

/// Additive noise: `a = θ`, `b = β`.
///
/// EM is exact at grid points for this model, so coupled levels agree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Additive {
    pub beta: f64,
}

impl Default for Additive {
    fn default() -> Self {
        Additive { beta: 1.0 }
    }
}

impl SdeModel for Additive {
    fn id(&self) -> &str {
        "additive"
    }

    fn description(&self) -> &str {
        "a = theta, b = beta; EM exact at grid points (L_a = 1, L_b = 0)"
    }

    fn constants(&self) -> Vec<(&'static str, f64)> {
        vec![("beta", self.beta)]
    }

    fn bounds(&self) -> DerivativeBounds {
        DerivativeBounds {
            l_a: Some(1.0),
            l_b: Some(0.0),
        }
    }

    fn partials(&self, which: Coefficient, theta: f64, _s: f64) -> Partials {
        match which {
            Coefficient::Drift => Partials {
                value: theta,
                d_theta: 1.0,
                ..Partials::default()
            },
            Coefficient::Diffusion => Partials {
                value: self.beta,
                ..Partials::default()
            },
        }
    }
}

/// `∂^{i+j} f / ∂θ^i ∂S^j` at `(θ, S)`.
pub fn eval_partial(
    model: &dyn SdeModel,
    which: Coefficient,
    i: u32,
    j: u32,
    theta: f64,
    s: f64,
) -> Result<f64> {
    if i + j > 2 {
        return Err(Error::UnsupportedOrder { theta: i, state: j });
    }
    model.partials(which, theta, s).get(i, j)
}

pub fn derivative_bounds(model: &dyn SdeModel) -> DerivativeBounds {
    model.bounds()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDescriptor {
    pub id: String,
    pub description: String,
    pub constants: Vec<(&'static str, f64)>,
    pub bounds: DerivativeBounds,
}

/// Lookup table of models by id. Custom models are added with
/// [`ModelRegistry::register`].
#[derive(Debug, Clone)]
pub struct ModelRegistry {
    models: BTreeMap<String, Arc<dyn SdeModel>>,
}

impl ModelRegistry {
    pub fn empty() -> Self {
        ModelRegistry {
            models: BTreeMap::new(),
        }
    }

    /// Registry holding `gbm` (σ = 0.2), `trig` and `additive` (β = 1).
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(Gbm::default()));
        reg.register(Arc::new(Trig));
        reg.register(Arc::new(Additive::default()));
        reg
    }

    /// Adds a model, replacing any existing model with the same id.
    pub fn register(&mut self, model: Arc<dyn SdeModel>) {
        self.models.insert(model.id().to_owned(), model);
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn SdeModel>> {
        self.models
            .get(id)
            .cloned()
            .ok_or_else(|| Error::UnknownModel(id.to_owned()))
    }

    pub fn descriptors(&self) -> Vec<ModelDescriptor> {
        self.models
            .values()
            .map(|m| ModelDescriptor {
                id: m.id().to_owned(),
                description: m.description().to_owned(),
                constants: m.constants(),
                bounds: m.bounds(),
            })
            .collect()
    }
}

impl Default for ModelRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

pub fn list_models() -> Vec<ModelDescriptor> {
    ModelRegistry::builtin().descriptors()
}

pub fn lookup_model(id: &str) -> Result<Arc<dyn SdeModel>> {
    ModelRegistry::builtin().get(id)
}
