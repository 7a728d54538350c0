//! Exact check of the product-difference moment bound
//!
//! ```text
//! E|∏u_i - ∏v_i|^p ≤ k^p · C_{pk}^{1-1/k} · D_{pk}^{1/k}
//! C_q = max_i max(E|u_i|^q, E|v_i|^q),   D_q = max_i E|u_i - v_i|^q
//! ```
//!
//! for independent pairs `(u_i, v_i)` with finite discrete joint laws.

use rand::Rng;

use crate::error::{Error, Result};

const MAX_OUTCOMES: u128 = 1_000_000;

/// One support point of the joint law of `(u_i, v_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub prob: f64,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaInstance {
    pub p: u32,
    /// Joint law of `(u_i, v_i)` for each factor `i`; factors are independent.
    pub components: Vec<Vec<Atom>>,
}

impl LemmaInstance {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Deterministic pairs `u_i = u[i]`, `v_i = v[i]`.
    pub fn deterministic(p: u32, u: &[f64], v: &[f64]) -> Self {
        LemmaInstance {
            p,
            components: u
                .iter()
                .zip(v)
                .map(|(&u, &v)| vec![Atom { prob: 1.0, u, v }])
                .collect(),
        }
    }

    fn validate(&self) -> Result<u128> {
        if self.components.is_empty() {
            return Err(Error::invalid("lemma instance needs at least one factor"));
        }
        if self.p < 2 {
            return Err(Error::invalid(format!(
                "moment order must be ≥ 2, got {}",
                self.p
            )));
        }
        let mut size: u128 = 1;
        for (i, comp) in self.components.iter().enumerate() {
            if comp.is_empty() {
                return Err(Error::invalid(format!("factor {i} has empty support")));
            }
            if comp
                .iter()
                .any(|a| !(a.prob > 0.0) || !a.u.is_finite() || !a.v.is_finite())
            {
                return Err(Error::invalid(format!(
                    "factor {i}: probabilities must be positive and values finite"
                )));
            }
            let total: f64 = comp.iter().map(|a| a.prob).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "factor {i}: probabilities sum to {total}, not 1"
                )));
            }
            size = size.saturating_mul(comp.len() as u128);
        }
        if size > MAX_OUTCOMES {
            return Err(Error::TooLarge { size });
        }
        Ok(size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub c_pk: f64,
    pub d_pk: f64,
    pub holds: bool,
}

/// Enumerates the product distribution to get the left side exactly (up to
/// floating point) and evaluates the bound from the marginal moments.
pub fn product_lemma_check(instance: &LemmaInstance) -> Result<LemmaCheck> {
    instance.validate()?;
    let k = instance.k();
    let p = instance.p as i32;
    let pk = p * k as i32;

    let mut c_pk = 0.0f64;
    let mut d_pk = 0.0f64;
    for comp in &instance.components {
        let eu: f64 = comp.iter().map(|a| a.prob * a.u.abs().powi(pk)).sum();
        let ev: f64 = comp.iter().map(|a| a.prob * a.v.abs().powi(pk)).sum();
        let ed: f64 = comp
            .iter()
            .map(|a| a.prob * (a.u - a.v).abs().powi(pk))
            .sum();
        c_pk = c_pk.max(eu).max(ev);
        d_pk = d_pk.max(ed);
    }
    let kf = k as f64;
    let rhs = kf.powi(p) * c_pk.powf(1.0 - 1.0 / kf) * d_pk.powf(1.0 / kf);

    let mut idx = vec![0usize; k];
    let mut lhs = 0.0;
    loop {
        let (mut prob, mut pu, mut pv) = (1.0, 1.0, 1.0);
        for (comp, &j) in instance.components.iter().zip(&idx) {
            let a = comp[j];
            prob *= a.prob;
            pu *= a.u;
            pv *= a.v;
        }
        lhs += prob * (pu - pv).abs().powi(p);

        // odometer increment, last factor fastest
        let mut pos = k;
        loop {
            if pos == 0 {
                let holds = lhs <= rhs * (1.0 + 1e-12);
                return Ok(LemmaCheck {
                    lhs,
                    rhs,
                    c_pk,
                    d_pk,
                    holds,
                });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < instance.components[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Random instance with `k` factors, each with 1..=`max_support` atoms whose
/// values lie in `[-range, range]`.
pub fn random_lemma_instance<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    p: u32,
    max_support: usize,
    range: f64,
) -> LemmaInstance {
    let components = (0..k)
        .map(|_| {
            let m = rng.random_range(1..=max_support.max(1));
            let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = weights.iter().sum();
            weights
                .into_iter()
                .map(|w| Atom {
                    prob: w / total,
                    u: rng.random_range(-range..=range),
                    v: rng.random_range(-range..=range),
                })
                .collect()
        })
        .collect();
    LemmaInstance { p, components }
}
