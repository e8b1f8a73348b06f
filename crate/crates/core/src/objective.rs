//! Cost functional, moments, control projection and reduced gradients.
//!
//! The running cost at a state with center of mass `E` and variance `V` is
//! `L = σ1/(4T) (V - V̄)² + σ2/(2T) |E - E_des|²`, and the control cost is
//! `σ3/(2M) |u|²`. A slice contributes `dt` times their values at the slice
//! end (rectangle rule).

use crate::error::ConfigError;
use crate::meanfield::DensityField;
use crate::real::Real;
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostWeights<T> {
    pub sigma1: T,
    pub sigma2: T,
    pub sigma3: T,
    /// Horizon `T` of the time normalization.
    pub horizon: T,
    pub desired_variance: T,
    pub destination: Vec2<T>,
}

impl<T: Real> CostWeights<T> {
    pub fn new(s1: f64, s2: f64, s3: f64, horizon: f64, vbar: f64, dest: Vec2<T>) -> Self {
        Self {
            sigma1: T::cst(s1),
            sigma2: T::cst(s2),
            sigma3: T::cst(s3),
            horizon: T::cst(horizon),
            desired_variance: T::cst(vbar),
            destination: dest,
        }
    }

    pub fn validate(&self, errors: &mut Vec<String>) {
        for (name, s) in [("sigma1", self.sigma1), ("sigma2", self.sigma2), ("sigma3", self.sigma3)] {
            if !(s.is_finite() && s >= T::zero()) {
                errors.push(format!("cost.{name} must be finite and >= 0"));
            }
        }
        if !(self.horizon.is_finite() && self.horizon > T::zero()) {
            errors.push("horizon must be > 0".to_string());
        }
        if !(self.desired_variance.is_finite() && self.desired_variance > T::zero()) {
            errors.push("desired variance must be > 0".to_string());
        }
        if !self.destination.is_finite() {
            errors.push("cost.destination must be finite".to_string());
        }
    }

    pub fn cast<U: Real>(&self) -> CostWeights<U> {
        CostWeights {
            sigma1: U::cst(self.sigma1.as_f64()),
            sigma2: U::cst(self.sigma2.as_f64()),
            sigma3: U::cst(self.sigma3.as_f64()),
            horizon: U::cst(self.horizon.as_f64()),
            desired_variance: U::cst(self.desired_variance.as_f64()),
            destination: self.destination.cast(),
        }
    }
}

/// Center of mass and mean squared distance to it.
pub fn micro_moments<T: Real>(x: &[Vec2<T>]) -> (Vec2<T>, T) {
    let inv_n = T::one() / T::cst(x.len() as f64);
    let mut e = Vec2::zero();
    for p in x {
        e += *p;
    }
    let e = e.scale(inv_n);
    let mut v = T::zero();
    for p in x {
        v += (*p - e).norm_sq();
    }
    (e, v * inv_n)
}

/// Moments of the spatial marginal by cell-center quadrature, normalized by
/// the total mass. The mass is returned so callers can flag drift.
pub fn mf_moments<T: Real>(f: &DensityField<T>) -> (Vec2<T>, T, T) {
    let rho = f.macroscopic_density();
    let g = &f.grid;
    let w = g.dx * g.dx;
    let mut mass = T::zero();
    let mut e = Vec2::zero();
    for i in 0..g.n {
        for j in 0..g.n {
            let m = rho[i * g.n + j] * w;
            mass += m;
            e += g.x_center(i, j).scale(m);
        }
    }
    let e = e.scale(T::one() / mass);
    let mut v = T::zero();
    for i in 0..g.n {
        for j in 0..g.n {
            v += (g.x_center(i, j) - e).norm_sq() * rho[i * g.n + j] * w;
        }
    }
    (e, v / mass, mass)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SliceCost<T> {
    pub total: T,
    /// `J1`, variance tracking.
    pub variance: T,
    /// `J2`, destination tracking.
    pub destination: T,
    /// `J3`, control effort.
    pub control: T,
}

impl<T: Real> SliceCost<T> {
    pub fn state_part(&self) -> T {
        self.variance + self.destination
    }

    pub fn is_valid(&self) -> bool {
        [self.total, self.variance, self.destination, self.control]
            .iter()
            .all(|v| v.is_finite() && *v >= T::zero())
    }
}

pub fn control_norm_sq<T: Real>(u: &[Vec2<T>]) -> T {
    let mut s = T::zero();
    for p in u {
        s += p.norm_sq();
    }
    s
}

pub fn slice_cost<T: Real>(e: Vec2<T>, v: T, u: &[Vec2<T>], w: &CostWeights<T>, dt: T) -> SliceCost<T> {
    let m = T::cst(u.len().max(1) as f64);
    let dv = v - w.desired_variance;
    let variance = dt * w.sigma1 / (T::cst(4.0) * w.horizon) * dv * dv;
    let destination = dt * w.sigma2 / (T::two() * w.horizon) * (e - w.destination).norm_sq();
    let control = dt * w.sigma3 / (T::two() * m) * control_norm_sq(u);
    SliceCost { total: variance + destination + control, variance, destination, control }
}

/// `∂L/∂x_i = σ1/(NT) (V - V̄)(x_i - E) + σ2/(NT) (E - E_des)`.
pub fn micro_state_gradient<T: Real>(x: &[Vec2<T>], w: &CostWeights<T>) -> Vec<Vec2<T>> {
    let (e, v) = micro_moments(x);
    let nt = T::cst(x.len() as f64) * w.horizon;
    let a = w.sigma1 * (v - w.desired_variance) / nt;
    let b = (e - w.destination).scale(w.sigma2 / nt);
    x.iter().map(|p| (*p - e).scale(a) + b).collect()
}

/// Radial projection onto the ball of radius `u_max`.
pub fn project_vec<T: Real>(h: Vec2<T>, u_max: T) -> Vec2<T> {
    let n = h.norm();
    if n <= u_max {
        return h;
    }
    let mut p = Vec2::new(h.x * u_max / n, h.y * u_max / n);
    // rounding may leave the result a few ulps outside the ball
    while p.norm() > u_max {
        p = p.scale(T::one() - T::epsilon());
    }
    p
}

pub fn project_slice<T: Real>(u: &[Vec2<T>], u_max: T) -> Vec<Vec2<T>> {
    u.iter().map(|h| project_vec(*h, u_max)).collect()
}

/// `σ3/M u - φ̄`, the gradient per unit time of the slice cost with respect
/// to the slice control.
pub fn reduced_gradient<T: Real>(u: &[Vec2<T>], phi: &[Vec2<T>], sigma3: T) -> Vec<Vec2<T>> {
    let c = sigma3 / T::cst(u.len() as f64);
    u.iter().zip(phi).map(|(a, p)| a.scale(c) - *p).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule<T> {
    /// `slices[k][m]` is the velocity of agent `m` on slice `k`.
    pub slices: Vec<Vec<Vec2<T>>>,
    pub u_max: T,
    pub dt: T,
}

impl<T: Real> ControlSchedule<T> {
    pub fn zeros(k: usize, m: usize, u_max: T, dt: T) -> Self {
        Self { slices: vec![vec![Vec2::zero(); m]; k], u_max, dt }
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn horizon(&self) -> T {
        self.dt * T::cst(self.len() as f64)
    }

    pub fn is_feasible(&self) -> bool {
        self.slices.iter().flatten().all(|h| h.norm() <= self.u_max)
    }
}

pub fn project_control<T: Real>(h: &ControlSchedule<T>) -> ControlSchedule<T> {
    ControlSchedule {
        slices: h.slices.iter().map(|s| project_slice(s, h.u_max)).collect(),
        u_max: h.u_max,
        dt: h.dt,
    }
}

/// Number of slices `K` with `K dt = T`, rejecting horizons that are not a
/// whole number of steps.
pub fn slice_count(horizon: f64, dt: f64) -> Result<usize, ConfigError> {
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(ConfigError::single("horizon and dt must be > 0"));
    }
    let k = (horizon / dt).round();
    if (k * dt - horizon).abs() > 1e-9 * horizon {
        return Err(ConfigError::single(format!("horizon {horizon} is not a multiple of dt {dt}")));
    }
    Ok(k as usize)
}
