//! One Strang step of the controlled Vlasov equation and its adjoint.
//!
//! The step is `V(τ/2) ∘ X(τ) ∘ V(τ/2)`. The first velocity half step uses
//! the force of the start density with the agents at `d0 + τ/3 w`, the second
//! the force of the transported density with the agents at `d0 + 2τ/3 w`.
//! These positions make the position response to `w` agree with the
//! particle RK4 step to leading order. The agents end at `d0 + τ w`.

use super::grid::{active_cells, DensityField, PhaseGrid};
use super::interaction::FieldKernels;
use super::transport::{check_position_cfl, shift_axis, shift_axis_transpose};
use super::velocity::{check_velocity_cfl, sweep, sweep_adjoint};
use crate::error::{ConfigError, NumericalError, SolverError};
use crate::microsim::{AdjointMode, ModelParams};
use crate::objective::{mf_moments, CostWeights};
use crate::real::Real;
use crate::vec2::Vec2;

/// Values below this fraction of the maximum are set to zero after a step,
/// which keeps the support (and the work) compact.
const FLUSH: f64 = 1e-30;

#[derive(Clone, Debug)]
pub struct MeanFieldSolver<T> {
    pub grid: PhaseGrid<T>,
    pub params: ModelParams<T>,
    pub tau: T,
    kernels: FieldKernels<T>,
}

impl<T: Real> MeanFieldSolver<T> {
    pub fn new(grid: PhaseGrid<T>, params: ModelParams<T>, tau: T) -> Result<Self, SolverError> {
        let mut errors = Vec::new();
        params.validate(&mut errors);
        if !(tau.is_finite() && tau >= T::zero()) {
            errors.push("time step must be finite and >= 0".to_string());
        }
        if !errors.is_empty() {
            return Err(ConfigError::Invalid(errors).into());
        }
        check_position_cfl(&grid, tau)?;
        Ok(Self { kernels: FieldKernels::new(&grid, &params), grid, params, tau })
    }

    pub fn kernels(&self) -> &FieldKernels<T> {
        &self.kernels
    }

    fn check_input(&self, f: &DensityField<T>, w: &[Vec2<T>]) -> Result<(), SolverError> {
        if f.grid != self.grid {
            return Err(ConfigError::single("density lives on a different grid than the solver").into());
        }
        if w.len() != f.m() {
            return Err(ConfigError::single(format!("control has {} entries for {} agents", w.len(), f.m())).into());
        }
        Ok(())
    }

    pub fn step(&self, f: &DensityField<T>, w: &[Vec2<T>]) -> Result<MfStep<T>, SolverError> {
        self.check_input(f, w)?;
        let crowd_a = self.kernels.crowd_field(&f.macroscopic_density());
        self.step_with(f, w, crowd_a)
    }

    fn step_with(&self, f: &DensityField<T>, w: &[Vec2<T>], crowd_a: Vec<Vec2<T>>) -> Result<MfStep<T>, SolverError> {
        let (g, tau, alpha) = (&self.grid, self.tau, self.params.alpha);
        let third = tau / T::cst(3.0);
        let d_a = moved(&f.d, w, third);
        let accel_a = self.kernels.acceleration_with(&crowd_a, &d_a);
        let active = f.active_cells();
        check_velocity_cfl(g, &accel_a, alpha, tau, &active)?;
        let mut f_a1 = f.f.clone();
        sweep(g, &f.f, &accel_a, alpha, tau, 0, &active, &mut f_a1);
        let mut f_star = f.f.clone();
        sweep(g, &f_a1, &accel_a, alpha, tau, 1, &active, &mut f_star);
        let f_x1 = shift_axis(g, &f_star, tau, 0);
        let f_xx = shift_axis(g, &f_x1, tau, 1);
        let rho = rho_of(g, &f_xx);
        let d_b = moved(&f.d, w, third * T::two());
        let accel_b = self.kernels.acceleration(&rho, &d_b);
        let active_b = active_cells(&f_xx, g.spatial_cells());
        check_velocity_cfl(g, &accel_b, alpha, tau, &active_b)?;
        let mut mid = f_xx.clone();
        sweep(g, &f_xx, &accel_b, alpha, tau, 0, &active_b, &mut mid);
        let mut out = f_xx;
        sweep(g, &mid, &accel_b, alpha, tau, 1, &active_b, &mut out);
        flush(&mut out);
        let end = DensityField { grid: *g, f: out, d: moved(&f.d, w, tau) };
        if !end.is_finite() {
            return Err(NumericalError::NonFinite("mean-field step".to_string()).into());
        }
        Ok(MfStep { tau, control: w.to_vec(), start: f.clone(), crowd_a, accel_a, f_a1, f_star, f_x1, end })
    }
}

impl<T: Real> MeanFieldSolver<T> {
    /// The same splitting with every sub-flow advanced in `substeps` equal
    /// pieces. Forces are frozen per sub-flow as in [`step`](Self::step).
    /// With many substeps the sub-flows approach their exact solutions on
    /// the grid, which isolates the splitting error.
    pub fn step_substepped(
        &self,
        f: &DensityField<T>,
        w: &[Vec2<T>],
        substeps: usize,
    ) -> Result<DensityField<T>, SolverError> {
        self.check_input(f, w)?;
        if substeps == 0 {
            return Err(ConfigError::single("substeps must be >= 1").into());
        }
        let (g, tau, alpha) = (&self.grid, self.tau, self.params.alpha);
        let piece = tau / T::cst(substeps as f64);
        let third = tau / T::cst(3.0);
        let half = |f: Vec<T>, accel: &[Vec2<T>]| -> Result<Vec<T>, SolverError> {
            let mut cur = f;
            for _ in 0..substeps {
                let active = active_cells(&cur, g.spatial_cells());
                check_velocity_cfl(g, accel, alpha, piece, &active)?;
                let mut mid = cur.clone();
                sweep(g, &cur, accel, alpha, piece, 0, &active, &mut mid);
                sweep(g, &mid, accel, alpha, piece, 1, &active, &mut cur);
            }
            Ok(cur)
        };
        let accel_a = self.kernels.acceleration(&f.macroscopic_density(), &moved(&f.d, w, third));
        let mut cur = half(f.f.clone(), &accel_a)?;
        for _ in 0..substeps {
            cur = shift_axis(g, &cur, piece, 0);
            cur = shift_axis(g, &cur, piece, 1);
        }
        let accel_b = self.kernels.acceleration(&rho_of(g, &cur), &moved(&f.d, w, third * T::two()));
        let mut out = half(cur, &accel_b)?;
        flush(&mut out);
        let end = DensityField { grid: *g, f: out, d: moved(&f.d, w, tau) };
        if !end.is_finite() {
            return Err(NumericalError::NonFinite("mean-field step".to_string()).into());
        }
        Ok(end)
    }
}

fn moved<T: Real>(d: &[Vec2<T>], w: &[Vec2<T>], t: T) -> Vec<Vec2<T>> {
    d.iter().zip(w).map(|(p, u)| *p + u.scale(t)).collect()
}

fn rho_of<T: Real>(g: &PhaseGrid<T>, f: &[T]) -> Vec<T> {
    let dv2 = g.dv * g.dv;
    f.chunks_exact(g.spatial_cells())
        .map(|b| {
            let mut s = T::zero();
            for v in b {
                s += *v;
            }
            s * dv2
        })
        .collect()
}

fn flush<T: Real>(f: &mut [T]) {
    let max = f.iter().fold(T::zero(), |a, b| a.max(b.abs()));
    let thr = max * T::cst(FLUSH);
    for v in f.iter_mut() {
        if v.abs() < thr {
            *v = T::zero();
        }
    }
}

/// A Strang step with the intermediate fields its adjoint needs.
#[derive(Clone, Debug)]
pub struct MfStep<T> {
    pub tau: T,
    pub control: Vec<Vec2<T>>,
    pub start: DensityField<T>,
    crowd_a: Vec<Vec2<T>>,
    accel_a: Vec<Vec2<T>>,
    f_a1: Vec<T>,
    f_star: Vec<T>,
    f_x1: Vec<T>,
    pub end: DensityField<T>,
}

impl<T: Real> MfStep<T> {
    /// End state of the same step under another control. The crowd force of
    /// the start density is reused.
    pub fn candidate(&self, solver: &MeanFieldSolver<T>, w: &[Vec2<T>]) -> Result<DensityField<T>, SolverError> {
        solver.check_input(&self.start, w)?;
        Ok(solver.step_with(&self.start, w, self.crowd_a.clone())?.end)
    }

    /// Velocity-independent force of the first half step.
    pub fn first_acceleration(&self) -> &[Vec2<T>] {
        &self.accel_a
    }
}

pub fn strang_step<T: Real>(
    f: &DensityField<T>,
    w: &[Vec2<T>],
    tau: T,
    m: &ModelParams<T>,
) -> Result<DensityField<T>, SolverError> {
    Ok(MeanFieldSolver::new(f.grid, *m, tau)?.step(f, w)?.end)
}

/// Adjoint of one step for the slice cost at its end.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldAdjoint<T> {
    /// Cost sensitivity per unit phase-space volume at the step start, so that
    /// `δJ ≈ Σ g δf Δx²Δv²`. Empty in [`AdjointMode::ControlOnly`].
    pub g: Vec<T>,
    /// `-∂J/∂d` at the step start.
    pub phi_d: Vec<Vec2<T>>,
    /// Agent adjoint averaged over the step; the reduced gradient is
    /// `σ3/M w - phi_slice`.
    pub phi_slice: Vec<Vec2<T>>,
}

/// `∂J/∂f` of the state cost at the end of a step of length `tau`: constant
/// in velocity, so only the spatial profile is returned.
pub fn terminal_sensitivity<T: Real>(end: &DensityField<T>, weights: &CostWeights<T>, tau: T) -> Vec<T> {
    let g = &end.grid;
    let (e, v, mass) = mf_moments(end);
    let t = weights.horizon;
    let dx2 = g.dx * g.dx;
    let cv = weights.sigma1 / (T::two() * t) * (v - weights.desired_variance);
    let ce = (e - weights.destination).scale(weights.sigma2 / t);
    let scale = tau * g.dv * g.dv * dx2 / mass;
    let mut out = Vec::with_capacity(g.spatial_cells());
    for i1 in 0..g.n {
        for i2 in 0..g.n {
            let r = g.x_center(i1, i2) - e;
            out.push(scale * (cv * (r.norm_sq() - v) + ce.dot(r)));
        }
    }
    out
}

fn dilate<T: Real>(g: &PhaseGrid<T>, mask: &[bool], reach: usize) -> Vec<bool> {
    let n = g.n;
    let mut out = vec![false; mask.len()];
    for i1 in 0..n {
        for i2 in 0..n {
            if mask[i1 * n + i2] {
                for k in i1.saturating_sub(reach)..=(i1 + reach).min(n - 1) {
                    out[k * n + i2] = true;
                }
            }
        }
    }
    out
}

pub fn adjoint_strang_step<T: Real>(
    step: &MfStep<T>,
    solver: &MeanFieldSolver<T>,
    weights: &CostWeights<T>,
    mode: AdjointMode,
) -> MeanFieldAdjoint<T> {
    let g = &solver.grid;
    let (tau, alpha) = (step.tau, solver.params.alpha);
    let ns = g.spatial_cells();
    let nv = ns;
    let profile = terminal_sensitivity(&step.end, weights, tau);
    let mut g_end = vec![T::zero(); g.cells()];
    for (s, p) in profile.iter().enumerate() {
        g_end[s * nv..(s + 1) * nv].iter_mut().for_each(|v| *v = *p);
    }
    // the second velocity half step conserves every spatial cell's mass, so
    // its transpose leaves a velocity-constant sensitivity unchanged
    let (needed, wide) = match mode {
        AdjointMode::Full => (vec![true; ns], vec![true; ns]),
        AdjointMode::ControlOnly => {
            let a0 = step.start.active_cells();
            let a1 = active_cells(&step.f_star, ns);
            let n1: Vec<bool> = a0.iter().zip(&a1).map(|(a, b)| *a || *b).collect();
            let wide = dilate(g, &n1, 3);
            (n1, wide)
        }
    };
    let g_x1 = shift_axis_transpose(g, &step.f_x1, tau, 1, &g_end, &wide);
    drop(g_end);
    let g_star = shift_axis_transpose(g, &step.f_star, tau, 0, &g_x1, &needed);
    drop(g_x1);
    let mut s_a = vec![Vec2::zero(); ns];
    let mut g_a1 = vec![T::zero(); g.cells()];
    sweep_adjoint(g, &step.f_a1, &step.accel_a, alpha, tau, 1, &needed, &g_star, &mut g_a1, &mut s_a);
    drop(g_star);
    let mut g0 = vec![T::zero(); g.cells()];
    sweep_adjoint(g, &step.start.f, &step.accel_a, alpha, tau, 0, &needed, &g_a1, &mut g0, &mut s_a);
    drop(g_a1);
    let third = tau / T::cst(3.0);
    let d_a = moved(&step.start.d, &step.control, third);
    let dj_da = solver.kernels.agent_hessian_sum(&s_a, &d_a);
    let phi_d = dj_da.iter().map(|p| -*p).collect();
    let phi_slice = dj_da.iter().map(|p| p.scale(-T::one() / T::cst(3.0))).collect();
    let g = match mode {
        AdjointMode::ControlOnly => Vec::new(),
        AdjointMode::Full => {
            let dv2 = g.dv * g.dv;
            let nonlocal = solver.kernels.kernel_dot(&s_a);
            let inv_vol = T::one() / g.cell_volume();
            for (s, c) in nonlocal.iter().enumerate() {
                g0[s * nv..(s + 1) * nv].iter_mut().for_each(|v| *v += *c * dv2);
            }
            g0.iter_mut().for_each(|v| *v *= inv_vol);
            g0
        }
    };
    MeanFieldAdjoint { g, phi_d, phi_slice }
}
