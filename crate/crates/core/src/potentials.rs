//! Regularized Morse potentials
//! `Φ(d) = R exp(-|d|_ε / r) - A exp(-|d|_ε / a)` with `|d|_ε = sqrt(|d|² + ε²)`,
//! together with their gradients (interaction forces) and Hessians.

use crate::error::ConfigError;
use crate::real::Real;
use crate::vec2::{Sym2, Vec2};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorseParams<T> {
    pub attraction_strength: T,
    pub repulsion_strength: T,
    pub attraction_radius: T,
    pub repulsion_radius: T,
    /// Smoothing length ε of the regularized distance.
    pub regularization: T,
}

impl<T: Real> MorseParams<T> {
    pub fn new(a_strength: f64, r_strength: f64, a_radius: f64, r_radius: f64, eps: f64) -> Self {
        Self {
            attraction_strength: T::cst(a_strength),
            repulsion_strength: T::cst(r_strength),
            attraction_radius: T::cst(a_radius),
            repulsion_radius: T::cst(r_radius),
            regularization: T::cst(eps),
        }
    }

    /// Crowd-crowd interaction: A=20, R=50, a=100, r=2.
    pub fn sheep_sheep() -> Self {
        Self::new(20.0, 50.0, 100.0, 2.0, 1e-3)
    }

    /// Agent-crowd interaction: A=5, R=100, a=1000, r=50.
    pub fn dog_sheep() -> Self {
        Self::new(5.0, 100.0, 1000.0, 50.0, 1e-3)
    }

    /// Same radii with both strengths set to zero, i.e. no interaction.
    pub fn disabled(self) -> Self {
        Self { attraction_strength: T::zero(), repulsion_strength: T::zero(), ..self }
    }

    pub fn with_regularization(self, eps: T) -> Self {
        Self { regularization: eps, ..self }
    }

    pub fn is_disabled(&self) -> bool {
        self.attraction_strength == T::zero() && self.repulsion_strength == T::zero()
    }

    /// Strengths may be zero (interaction switched off); radii must be positive.
    pub fn validate(&self, name: &str, errors: &mut Vec<String>) {
        let finite = |v: T| v.is_finite();
        if !(finite(self.attraction_strength) && self.attraction_strength >= T::zero()) {
            errors.push(format!("{name}.attraction_strength must be finite and >= 0"));
        }
        if !(finite(self.repulsion_strength) && self.repulsion_strength >= T::zero()) {
            errors.push(format!("{name}.repulsion_strength must be finite and >= 0"));
        }
        if !(finite(self.attraction_radius) && self.attraction_radius > T::zero()) {
            errors.push(format!("{name}.attraction_radius must be finite and > 0"));
        }
        if !(finite(self.repulsion_radius) && self.repulsion_radius > T::zero()) {
            errors.push(format!("{name}.repulsion_radius must be finite and > 0"));
        }
        if !(finite(self.regularization) && self.regularization >= T::zero()) {
            errors.push(format!("{name}.regularization must be finite and >= 0"));
        }
    }

    pub fn checked(self, name: &str) -> Result<Self, ConfigError> {
        let mut errors = Vec::new();
        self.validate(name, &mut errors);
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    pub fn cast<U: Real>(&self) -> MorseParams<U> {
        MorseParams {
            attraction_strength: U::cst(self.attraction_strength.as_f64()),
            repulsion_strength: U::cst(self.repulsion_strength.as_f64()),
            attraction_radius: U::cst(self.attraction_radius.as_f64()),
            repulsion_radius: U::cst(self.repulsion_radius.as_f64()),
            regularization: U::cst(self.regularization.as_f64()),
        }
    }
}

pub fn morse_value<T: Real>(p: &MorseParams<T>, d: Vec2<T>) -> T {
    let rho = (d.norm_sq() + p.regularization * p.regularization).sqrt();
    p.repulsion_strength * (-rho / p.repulsion_radius).exp()
        - p.attraction_strength * (-rho / p.attraction_radius).exp()
}

/// `K(x, y) = ∇Φ(x - y)`.
pub fn interaction_force<T: Real>(p: &MorseParams<T>, x: Vec2<T>, y: Vec2<T>) -> Vec2<T> {
    MorseKernel::new(p).grad(x - y)
}

pub fn interaction_hessian<T: Real>(p: &MorseParams<T>, d: Vec2<T>) -> Sym2<T> {
    MorseKernel::new(p).grad_hess(d).1
}

/// Precomputed coefficients of a Morse potential for the inner loops.
///
/// With `ρ = |d|_ε`, `Φ'(ρ) = -(R/r) e^{-ρ/r} + (A/a) e^{-ρ/a}` and
/// `∇Φ = Φ'(ρ) d / ρ`,
/// `∇²Φ = (Φ'/ρ) I + (Φ'' - Φ'/ρ) d dᵀ / ρ²`.
#[derive(Clone, Copy, Debug)]
pub struct MorseKernel<T> {
    eps_sq: T,
    inv_r: T,
    inv_a: T,
    r_over_r: T,
    a_over_a: T,
    r_over_r2: T,
    a_over_a2: T,
    pub disabled: bool,
}

impl<T: Real> MorseKernel<T> {
    pub fn new(p: &MorseParams<T>) -> Self {
        let inv_r = T::one() / p.repulsion_radius;
        let inv_a = T::one() / p.attraction_radius;
        Self {
            eps_sq: p.regularization * p.regularization,
            inv_r,
            inv_a,
            r_over_r: p.repulsion_strength * inv_r,
            a_over_a: p.attraction_strength * inv_a,
            r_over_r2: p.repulsion_strength * inv_r * inv_r,
            a_over_a2: p.attraction_strength * inv_a * inv_a,
            disabled: p.is_disabled(),
        }
    }

    /// Returns `(Φ'(ρ), Φ''(ρ))`.
    #[inline]
    fn radial(&self, rho: T) -> (T, T) {
        let er = (-rho * self.inv_r).exp();
        let ea = (-rho * self.inv_a).exp();
        (
            -self.r_over_r * er + self.a_over_a * ea,
            self.r_over_r2 * er - self.a_over_a2 * ea,
        )
    }

    #[inline]
    pub fn grad(&self, d: Vec2<T>) -> Vec2<T> {
        let rho_sq = d.norm_sq() + self.eps_sq;
        if rho_sq == T::zero() || self.disabled {
            return Vec2::zero();
        }
        let rho = rho_sq.sqrt();
        let er = (-rho * self.inv_r).exp();
        let ea = (-rho * self.inv_a).exp();
        let dphi = -self.r_over_r * er + self.a_over_a * ea;
        d.scale(dphi / rho)
    }

    /// Gradient and Hessian at `d`. At `ρ = 0` (only possible for ε = 0)
    /// the gradient is set to zero and the Hessian to `Φ''(0) I`.
    #[inline]
    pub fn grad_hess(&self, d: Vec2<T>) -> (Vec2<T>, Sym2<T>) {
        if self.disabled {
            return (Vec2::zero(), Sym2::zero());
        }
        let rho_sq = d.norm_sq() + self.eps_sq;
        if rho_sq == T::zero() {
            let (_, d2) = self.radial(T::zero());
            return (Vec2::zero(), Sym2 { xx: d2, xy: T::zero(), yy: d2 });
        }
        let rho = rho_sq.sqrt();
        let (d1, d2) = self.radial(rho);
        let iso = d1 / rho;
        let aniso = (d2 - iso) / rho_sq;
        let h = Sym2 {
            xx: iso + aniso * d.x * d.x,
            xy: aniso * d.x * d.y,
            yy: iso + aniso * d.y * d.y,
        };
        (d.scale(iso), h)
    }

    #[inline]
    pub fn hess(&self, d: Vec2<T>) -> Sym2<T> {
        self.grad_hess(d).1
    }
}
