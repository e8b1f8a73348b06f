//! Step-size admissibility for the mean-field scheme.

use super::grid::{DensityField, PhaseGrid};
use super::interaction::force_field;
use super::transport::position_courant;
use super::velocity::velocity_courant;
use crate::microsim::ModelParams;
use crate::real::Real;

/// Largest admissible scaled ratio.
pub const SCALED_CFL_LIMIT: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CflReport {
    /// `τ |V| T / (L h)` with `L = 2 Lx`, `|V| = Lv` and relative spacing `h = Δx / L`.
    pub scaled_ratio: f64,
    /// `max |τ v| / Δx` of the free transport; must stay at or below one.
    pub position_courant: f64,
}

impl CflReport {
    pub fn passes(&self) -> bool {
        self.scaled_ratio <= SCALED_CFL_LIMIT && self.position_courant <= 1.0
    }
}

pub fn cfl_check<T: Real>(grid: &PhaseGrid<T>, tau: T, horizon: T) -> CflReport {
    let len = T::two() * grid.lx;
    let h = grid.dx / len;
    CflReport {
        scaled_ratio: (tau * grid.lv * horizon / (len * h)).as_f64(),
        position_courant: position_courant(grid, tau).as_f64(),
    }
}

/// Courant number `max |S| (τ/2) / Δv` of a velocity half step for the force
/// of `f` itself.
pub fn velocity_cfl<T: Real>(f: &DensityField<T>, m: &ModelParams<T>, tau: T) -> T {
    let s = force_field(f, m);
    velocity_courant(&f.grid, &s.accel, m.alpha, tau, &f.active_cells())
}
