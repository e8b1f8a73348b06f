//! What the driver needs to observe and checkpoint a level state.

use swarm_core::meanfield::{histogram_from_particles, spatial_histogram, PhaseGrid};
use swarm_core::objective::{mf_moments, micro_moments};
use swarm_core::{Density, Ensemble, Point};

pub struct Observation {
    pub center: Point,
    pub variance: f64,
    pub mass: f64,
    /// Spatial density on the `n × n` output grid.
    pub rho: Vec<f64>,
    /// Particles that fell outside the output grid.
    pub outside: usize,
}

pub trait RunState: Clone {
    fn observe(&self, grid: &PhaseGrid<f64>) -> Observation;
    fn phase_density(&self, grid: &PhaseGrid<f64>) -> Vec<f64>;
    fn agent_positions(&self) -> &[Point];
    /// Flat values for a checkpoint.
    fn payload(&self) -> Vec<f64>;
    /// Inverse of [`RunState::payload`], with `self` supplying the shape.
    fn restore(&self, values: &[f64]) -> Option<Self>;
}

fn points(values: &[f64]) -> Vec<Point> {
    values.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect()
}

fn flatten(p: &[Point], out: &mut Vec<f64>) {
    for q in p {
        out.push(q.x);
        out.push(q.y);
    }
}

impl RunState for Ensemble {
    fn observe(&self, grid: &PhaseGrid<f64>) -> Observation {
        let (center, variance) = micro_moments(&self.x);
        let (rho, outside) = spatial_histogram(&self.x, grid.n, grid.lx);
        Observation { center, variance, mass: 1.0, rho, outside }
    }

    fn phase_density(&self, grid: &PhaseGrid<f64>) -> Vec<f64> {
        histogram_from_particles(self, grid).0.f
    }

    fn agent_positions(&self) -> &[Point] {
        &self.d
    }

    fn payload(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.n() + 2 * self.m());
        flatten(&self.x, &mut out);
        flatten(&self.v, &mut out);
        flatten(&self.d, &mut out);
        out
    }

    fn restore(&self, values: &[f64]) -> Option<Self> {
        let (n, m) = (self.n(), self.m());
        if values.len() != 4 * n + 2 * m {
            return None;
        }
        let x = points(&values[..2 * n]);
        let v = points(&values[2 * n..4 * n]);
        let d = points(&values[4 * n..]);
        Ensemble::new(x, v, d).ok()
    }
}

impl RunState for Density {
    fn observe(&self, _grid: &PhaseGrid<f64>) -> Observation {
        let (center, variance, mass) = mf_moments(self);
        Observation { center, variance, mass, rho: self.macroscopic_density(), outside: 0 }
    }

    fn phase_density(&self, _grid: &PhaseGrid<f64>) -> Vec<f64> {
        self.f.clone()
    }

    fn agent_positions(&self) -> &[Point] {
        &self.d
    }

    fn payload(&self) -> Vec<f64> {
        let mut out = self.f.clone();
        flatten(&self.d, &mut out);
        out
    }

    fn restore(&self, values: &[f64]) -> Option<Self> {
        let cells = self.f.len();
        if values.len() != cells + 2 * self.m() {
            return None;
        }
        Some(Density { grid: self.grid, f: values[..cells].to_vec(), d: points(&values[cells..]) })
    }
}
