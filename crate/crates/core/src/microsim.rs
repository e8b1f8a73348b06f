//! Particle system with external agents:
//!
//! ```text
//! x_i' = v_i
//! v_i' = -(1/N) Σ_k K1(x_i, x_k) - (1/M) Σ_m K2(x_i, d_m) - α v_i
//! d_m' = u_m
//! ```
//!
//! integrated by one classical RK4 step per control slice, and the adjoint of
//! that step.

use crate::error::ConfigError;
use crate::objective::{self, CostWeights};
use crate::potentials::{MorseKernel, MorseParams};
use crate::real::Real;
use crate::vec2::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble<T> {
    pub x: Vec<Vec2<T>>,
    pub v: Vec<Vec2<T>>,
    /// Agent positions.
    pub d: Vec<Vec2<T>>,
}

impl<T: Real> ParticleEnsemble<T> {
    pub fn new(x: Vec<Vec2<T>>, v: Vec<Vec2<T>>, d: Vec<Vec2<T>>) -> Result<Self, ConfigError> {
        let mut errors = Vec::new();
        if x.is_empty() {
            errors.push("ensemble needs at least one particle".to_string());
        }
        if d.is_empty() {
            errors.push("ensemble needs at least one agent".to_string());
        }
        if x.len() != v.len() {
            errors.push(format!("{} positions but {} velocities", x.len(), v.len()));
        }
        if !x.iter().chain(&v).chain(&d).all(|p| p.is_finite()) {
            errors.push("ensemble contains non-finite entries".to_string());
        }
        if errors.is_empty() {
            Ok(Self { x, v, d })
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.d.len()
    }

    fn zeros_like(&self) -> Self {
        Self {
            x: vec![Vec2::zero(); self.n()],
            v: vec![Vec2::zero(); self.n()],
            d: vec![Vec2::zero(); self.m()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).chain(&self.d).all(|p| p.is_finite())
    }

    pub fn cast<U: Real>(&self) -> ParticleEnsemble<U> {
        let c = |xs: &[Vec2<T>]| xs.iter().map(|p| p.cast()).collect();
        ParticleEnsemble { x: c(&self.x), v: c(&self.v), d: c(&self.d) }
    }

    /// `self += h * k`.
    fn add_scaled(&mut self, h: T, k: &Self) {
        for (a, b) in self.x.iter_mut().zip(&k.x) {
            *a += b.scale(h);
        }
        for (a, b) in self.v.iter_mut().zip(&k.v) {
            *a += b.scale(h);
        }
        for (a, b) in self.d.iter_mut().zip(&k.d) {
            *a += b.scale(h);
        }
    }

    /// `out = self + h * k`.
    fn axpy_into(&self, h: T, k: &Self, out: &mut Self) {
        for (o, (a, b)) in out.x.iter_mut().zip(self.x.iter().zip(&k.x)) {
            *o = *a + b.scale(h);
        }
        for (o, (a, b)) in out.v.iter_mut().zip(self.v.iter().zip(&k.v)) {
            *o = *a + b.scale(h);
        }
        for (o, (a, b)) in out.d.iter_mut().zip(self.d.iter().zip(&k.d)) {
            *o = *a + b.scale(h);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams<T> {
    /// Linear friction coefficient α (1/time).
    pub alpha: T,
    pub sheep_sheep: MorseParams<T>,
    pub dog_sheep: MorseParams<T>,
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::one(),
            sheep_sheep: MorseParams::sheep_sheep(),
            dog_sheep: MorseParams::dog_sheep(),
        }
    }
}

impl<T: Real> ModelParams<T> {
    pub fn validate(&self, errors: &mut Vec<String>) {
        if !(self.alpha.is_finite() && self.alpha > T::zero()) {
            errors.push("model.alpha must be finite and > 0".to_string());
        }
        self.sheep_sheep.validate("model.sheep_sheep", errors);
        self.dog_sheep.validate("model.dog_sheep", errors);
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            alpha: U::cst(self.alpha.as_f64()),
            sheep_sheep: self.sheep_sheep.cast(),
            dog_sheep: self.dog_sheep.cast(),
        }
    }

    pub fn without_interactions(self) -> Self {
        Self {
            sheep_sheep: self.sheep_sheep.disabled(),
            dog_sheep: self.dog_sheep.disabled(),
            ..self
        }
    }
}

/// `out_i = Σ_k K1(x_i - x_k)`, visiting each pair once.
pub fn pair_force_sums<T: Real>(k1: &MorseKernel<T>, x: &[Vec2<T>], out: &mut [Vec2<T>]) {
    out.iter_mut().for_each(|o| *o = Vec2::zero());
    if k1.disabled {
        return;
    }
    for i in 0..x.len() {
        let xi = x[i];
        let mut acc = Vec2::zero();
        for k in (i + 1)..x.len() {
            let f = k1.grad(xi - x[k]);
            acc += f;
            out[k] -= f;
        }
        out[i] += acc;
    }
}

/// `out_i = Σ_m K2(x_i - d_m)`.
pub fn agent_force_sums<T: Real>(k2: &MorseKernel<T>, x: &[Vec2<T>], d: &[Vec2<T>], out: &mut [Vec2<T>]) {
    for (o, &xi) in out.iter_mut().zip(x) {
        let mut acc = Vec2::zero();
        if !k2.disabled {
            for &dm in d {
                acc += k2.grad(xi - dm);
            }
        }
        *o = acc;
    }
}

fn check_controls<T>(m: usize, u: &[Vec2<T>]) -> Result<(), ConfigError> {
    if u.len() != m {
        return Err(ConfigError::single(format!("control has {} entries for {} agents", u.len(), m)));
    }
    Ok(())
}

struct Kernels<T> {
    k1: MorseKernel<T>,
    k2: MorseKernel<T>,
    alpha: T,
}

impl<T: Real> Kernels<T> {
    fn new(m: &ModelParams<T>) -> Self {
        Self { k1: MorseKernel::new(&m.sheep_sheep), k2: MorseKernel::new(&m.dog_sheep), alpha: m.alpha }
    }

    /// Writes the time derivative at `y` into `out` given precomputed pair sums.
    fn rate(&self, y: &ParticleEnsemble<T>, u: &[Vec2<T>], pair: &[Vec2<T>], out: &mut ParticleEnsemble<T>) {
        let inv_n = T::one() / T::cst(y.n() as f64);
        let inv_m = T::one() / T::cst(y.m() as f64);
        agent_force_sums(&self.k2, &y.x, &y.d, &mut out.v);
        for i in 0..y.n() {
            out.x[i] = y.v[i];
            out.v[i] = -(pair[i].scale(inv_n) + out.v[i].scale(inv_m)) - y.v[i].scale(self.alpha);
        }
        out.d.copy_from_slice(u);
    }
}

pub fn micro_rhs<T: Real>(
    y: &ParticleEnsemble<T>,
    u: &[Vec2<T>],
    m: &ModelParams<T>,
) -> Result<ParticleEnsemble<T>, ConfigError> {
    check_controls(y.m(), u)?;
    let kern = Kernels::new(m);
    let mut pair = vec![Vec2::zero(); y.n()];
    pair_force_sums(&kern.k1, &y.x, &mut pair);
    let mut out = y.zeros_like();
    kern.rate(y, u, &pair, &mut out);
    Ok(out)
}

/// One RK4 step over a slice, keeping the stage states needed by the adjoint.
#[derive(Clone, Debug)]
pub struct MicroStep<T> {
    pub dt: T,
    pub control: Vec<Vec2<T>>,
    /// Stage states `Y1 = y0, Y2, Y3, Y4`.
    pub stages: [ParticleEnsemble<T>; 4],
    /// Crowd pair sums at stages 1..3. Their positions do not depend on the control.
    pair: [Vec<Vec2<T>>; 3],
    pub end: ParticleEnsemble<T>,
}

const B: [f64; 4] = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];

fn rk4_stages<T: Real>(
    y0: &ParticleEnsemble<T>,
    u: &[Vec2<T>],
    dt: T,
    m: &ModelParams<T>,
    reuse: Option<&[Vec<Vec2<T>>; 3]>,
) -> MicroStep<T> {
    let kern = Kernels::new(m);
    let h = dt;
    let half = h * T::half();
    let mut stages = [y0.clone(), y0.zeros_like(), y0.zeros_like(), y0.zeros_like()];
    let mut k = y0.zeros_like();
    let mut acc = y0.clone();
    let mut pair_cache: [Vec<Vec2<T>>; 3] = match reuse {
        Some(p) => p.clone(),
        None => [vec![Vec2::zero(); y0.n()], vec![Vec2::zero(); y0.n()], vec![Vec2::zero(); y0.n()]],
    };
    let mut pair4 = vec![Vec2::zero(); y0.n()];
    let steps = [half, half, h];
    for s in 0..4 {
        let pair: &[Vec2<T>] = if s < 3 {
            if reuse.is_none() {
                pair_force_sums(&kern.k1, &stages[s].x, &mut pair_cache[s]);
            }
            &pair_cache[s]
        } else {
            pair_force_sums(&kern.k1, &stages[3].x, &mut pair4);
            &pair4
        };
        kern.rate(&stages[s], u, pair, &mut k);
        acc.add_scaled(h * T::cst(B[s]), &k);
        if s < 3 {
            y0.axpy_into(steps[s], &k, &mut stages[s + 1]);
        }
    }
    // the agents solve d' = u exactly; avoid the rounding of the stage sum
    for ((e, d0), um) in acc.d.iter_mut().zip(&y0.d).zip(u) {
        *e = *d0 + um.scale(h);
    }
    MicroStep { dt, control: u.to_vec(), stages, pair: pair_cache, end: acc }
}

/// Classical RK4 step with the control held constant on the slice.
pub fn rk4_forward_step<T: Real>(
    y: &ParticleEnsemble<T>,
    u: &[Vec2<T>],
    dt: T,
    m: &ModelParams<T>,
) -> Result<ParticleEnsemble<T>, ConfigError> {
    Ok(micro_step(y, u, dt, m)?.end)
}

pub fn micro_step<T: Real>(
    y: &ParticleEnsemble<T>,
    u: &[Vec2<T>],
    dt: T,
    m: &ModelParams<T>,
) -> Result<MicroStep<T>, ConfigError> {
    check_controls(y.m(), u)?;
    Ok(rk4_stages(y, u, dt, m, None))
}

impl<T: Real> MicroStep<T> {
    /// Same step from the same start state under another control.
    /// Reuses the crowd interaction sums of the first three stages.
    pub fn with_control(&self, u: &[Vec2<T>], m: &ModelParams<T>) -> Result<MicroStep<T>, ConfigError> {
        check_controls(self.stages[0].m(), u)?;
        Ok(rk4_stages(&self.stages[0], u, self.dt, m, Some(&self.pair)))
    }

    pub fn start(&self) -> &ParticleEnsemble<T> {
        &self.stages[0]
    }
}

/// Adjoint fields at the start of a slice, `r = N ξ1`, `s = N ξ2`, `φ = ξ3`,
/// where `ξ = -∂J/∂y` for the slice cost `J`.
#[derive(Clone, Debug, PartialEq)]
pub struct MicroAdjoint<T> {
    pub r: Vec<Vec2<T>>,
    pub s: Vec<Vec2<T>>,
    pub phi: Vec<Vec2<T>>,
    /// Agent adjoint averaged over the slice, the quantity that enters the
    /// reduced gradient `σ3/M u - φ̄`.
    pub phi_slice: Vec<Vec2<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdjointMode {
    /// Everything, including the crowd adjoint at the slice start.
    Full,
    /// Only what the control gradient needs; skips crowd pair Hessians.
    ControlOnly,
}

/// `Jᵀ k̄` for the right-hand side at `y`, added into `out`.
fn rate_transpose<T: Real>(
    kern: &Kernels<T>,
    y: &ParticleEnsemble<T>,
    kbar: &ParticleEnsemble<T>,
    with_pairs: bool,
    out: &mut ParticleEnsemble<T>,
) {
    let n = y.n();
    let inv_n = T::one() / T::cst(n as f64);
    let inv_m = T::one() / T::cst(y.m() as f64);
    for i in 0..n {
        out.v[i] += kbar.x[i] - kbar.v[i].scale(kern.alpha);
    }
    if with_pairs && !kern.k1.disabled {
        for i in 0..n {
            let si = kbar.v[i];
            let mut acc = Vec2::zero();
            for k in (i + 1)..n {
                let w = kern.k1.hess(y.x[i] - y.x[k]).apply(si - kbar.v[k]).scale(inv_n);
                acc -= w;
                out.x[k] += w;
            }
            out.x[i] += acc;
        }
    }
    if !kern.k2.disabled {
        for i in 0..n {
            let si = kbar.v[i];
            for (m, &dm) in y.d.iter().enumerate() {
                let w = kern.k2.hess(y.x[i] - dm).apply(si).scale(inv_m);
                out.x[i] -= w;
                out.d[m] += w;
            }
        }
    }
}

/// Backward sweep through one RK4 step with zero terminal adjoint and the
/// running cost evaluated at the slice end.
pub fn micro_adjoint_backward<T: Real>(
    step: &MicroStep<T>,
    weights: &CostWeights<T>,
    m: &ModelParams<T>,
    mode: AdjointMode,
) -> MicroAdjoint<T> {
    let kern = Kernels::new(m);
    let h = step.dt;
    let y0 = step.start();
    let n = y0.n();
    let mut lam = y0.zeros_like();
    let dl = objective::micro_state_gradient(&step.end.x, weights);
    for (l, g) in lam.x.iter_mut().zip(dl) {
        *l = g.scale(h);
    }
    let with_pairs = mode == AdjointMode::Full;
    // ȳ0 = λ + Σ Ȳ_s with Ȳ_s = Jᵀ(Y_s) k̄_s and k̄_s = h b_s λ + h a_{s+1,s} Ȳ_{s+1}
    let mut ybar = lam.clone();
    let mut next: Option<ParticleEnsemble<T>> = None;
    let mut dsum = vec![Vec2::zero(); y0.m()];
    let a_next = [h * T::half(), h * T::half(), h];
    for s in (0..4).rev() {
        let mut kbar = y0.zeros_like();
        kbar.add_scaled(h * T::cst(B[s]), &lam);
        if let Some(ys) = &next {
            kbar.add_scaled(a_next[s], ys);
        }
        for (acc, kd) in dsum.iter_mut().zip(&kbar.d) {
            *acc += *kd;
        }
        let mut ys = y0.zeros_like();
        rate_transpose(&kern, &step.stages[s], &kbar, with_pairs, &mut ys);
        ybar.add_scaled(T::one(), &ys);
        next = Some(ys);
    }
    let nn = T::cst(n as f64);
    let inv_h = T::one() / h;
    MicroAdjoint {
        r: ybar.x.iter().map(|p| p.scale(-nn)).collect(),
        s: ybar.v.iter().map(|p| p.scale(-nn)).collect(),
        phi: ybar.d.iter().map(|p| -*p).collect(),
        phi_slice: dsum.iter().map(|p| p.scale(-inv_h)).collect(),
    }
}

/// Axis-aligned rectangle `[min.x, max.x] × [min.y, max.y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub min: Vec2<T>,
    pub max: Vec2<T>,
}

impl<T: Real> Rect<T> {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { min: Vec2::from_f64(x0, y0), max: Vec2::from_f64(x1, y1) }
    }

    pub fn center(&self) -> Vec2<T> {
        (self.min + self.max).scale(T::half())
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn is_proper(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.max.x > self.min.x && self.max.y > self.min.y
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VelocityInit {
    Zero,
    /// Uniform on `[-half_width, half_width]²`.
    Uniform { half_width: f64 },
}

/// Positions i.i.d. uniform on `support`, velocities per `velocities`.
pub fn sample_initial<T: Real>(
    n: usize,
    support: &Rect<T>,
    velocities: VelocityInit,
    seed: u64,
) -> Result<(Vec<Vec2<T>>, Vec<Vec2<T>>), ConfigError> {
    if n == 0 {
        return Err(ConfigError::single("particle count must be >= 1"));
    }
    if !support.is_proper() {
        return Err(ConfigError::single("initial support box is degenerate"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x0, x1) = (support.min.x.as_f64(), support.max.x.as_f64());
    let (y0, y1) = (support.min.y.as_f64(), support.max.y.as_f64());
    let x = (0..n)
        .map(|_| {
            let px = rng.gen_range(x0..x1);
            let py = rng.gen_range(y0..y1);
            Vec2::from_f64(px, py)
        })
        .collect();
    let v = match velocities {
        VelocityInit::Zero => vec![Vec2::zero(); n],
        VelocityInit::Uniform { half_width } => {
            if !(half_width > 0.0) {
                return Err(ConfigError::single("velocity half width must be > 0"));
            }
            (0..n)
                .map(|_| {
                    let a = rng.gen_range(-half_width..half_width);
                    let b = rng.gen_range(-half_width..half_width);
                    Vec2::from_f64(a, b)
                })
                .collect()
        }
    };
    Ok((x, v))
}

/// `m` agents evenly spaced on a circle, the first one on the positive x-axis.
pub fn agents_on_circle<T: Real>(m: usize, center: Vec2<T>, radius: T) -> Vec<Vec2<T>> {
    (0..m)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            center + Vec2::from_f64(theta.cos(), theta.sin()).scale(radius)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::CostWeights;

    type V = Vec2<f64>;

    fn ensemble(x: Vec<V>, d: Vec<V>) -> ParticleEnsemble<f64> {
        let v = vec![V::zero(); x.len()];
        ParticleEnsemble::new(x, v, d).unwrap()
    }

    #[test]
    fn zero_control_keeps_agents_still() {
        let y = ensemble(vec![V::new(1.0, 2.0), V::new(-3.0, 0.5)], vec![V::new(50.0, 0.0)]);
        let r = micro_rhs(&y, &[V::zero()], &ModelParams::default()).unwrap();
        assert_eq!(r.d, vec![V::zero()]);
        let mut s = y.clone();
        for _ in 0..10 {
            s = rk4_forward_step(&s, &[V::zero()], 0.02, &ModelParams::default()).unwrap();
        }
        assert_eq!(s.d, y.d);
    }

    #[test]
    fn mirror_pair_has_opposite_accelerations() {
        let far = V::new(0.0, 1e6);
        let y = ensemble(vec![V::new(-1.5, 0.0), V::new(1.5, 0.0)], vec![far]);
        let r = micro_rhs(&y, &[V::zero()], &ModelParams::default()).unwrap();
        assert_eq!(r.v[0], -r.v[1]);
        assert!(r.v[0].x != 0.0);
    }

    #[test]
    fn distant_agent_leaves_only_friction() {
        let y = ParticleEnsemble::new(vec![V::zero()], vec![V::new(1.0, 0.0)], vec![V::new(1e4, 0.0)]).unwrap();
        let r = micro_rhs(&y, &[V::zero()], &ModelParams::default()).unwrap();
        assert!((r.v[0].x + 1.0).abs() < 1e-6);
        assert!(r.v[0].y.abs() < 1e-6);
    }

    #[test]
    fn control_count_mismatch_is_a_config_error() {
        let y = ensemble(vec![V::zero()], vec![V::new(5.0, 5.0)]);
        assert!(micro_rhs(&y, &[V::zero(), V::zero()], &ModelParams::default()).is_err());
    }

    #[test]
    fn zero_step_is_identity() {
        let y = ensemble(vec![V::new(1.0, 2.0), V::new(-3.0, 0.5)], vec![V::new(50.0, 0.0)]);
        let s = rk4_forward_step(&y, &[V::new(1.0, 1.0)], 0.0, &ModelParams::default()).unwrap();
        assert_eq!(s, y);
    }

    #[test]
    fn agents_move_linearly() {
        let y = ensemble(vec![V::new(1.0, 2.0)], vec![V::new(50.0, 0.0), V::new(0.0, 50.0)]);
        let u = [V::new(0.5, -2.0), V::new(3.0, 0.25)];
        let s = rk4_forward_step(&y, &u, 0.5, &ModelParams::default()).unwrap();
        assert_eq!(s.d[0], V::new(50.25, -1.0));
        assert_eq!(s.d[1], V::new(1.5, 50.125));
    }

    #[test]
    fn cached_candidate_matches_fresh_step() {
        let (x, v) = sample_initial(30, &Rect::new(-10.0, 55.0, -20.0, 55.0), VelocityInit::Uniform { half_width: 1.0 }, 3).unwrap();
        let y = ParticleEnsemble::new(x, v, agents_on_circle(3, V::new(22.5, 17.5), 60.0)).unwrap();
        let m = ModelParams::default();
        let base = micro_step(&y, &[V::zero(); 3], 0.02, &m).unwrap();
        let u = [V::new(1.0, -2.0), V::new(0.0, 3.0), V::new(-4.0, 0.5)];
        let fresh = micro_step(&y, &u, 0.02, &m).unwrap();
        let cached = base.with_control(&u, &m).unwrap();
        assert_eq!(fresh.end, cached.end);
    }

    #[test]
    fn adjoint_vanishes_without_state_cost() {
        let (x, v) = sample_initial(10, &Rect::new(-10.0, 55.0, -20.0, 55.0), VelocityInit::Zero, 1).unwrap();
        let y = ParticleEnsemble::new(x, v, vec![V::new(80.0, 0.0)]).unwrap();
        let m = ModelParams::default();
        let step = micro_step(&y, &[V::new(1.0, 0.0)], 0.02, &m).unwrap();
        let w = CostWeights::new(0.0, 0.0, 1e-7, 10.0, 100.0, V::new(-20.0, -20.0));
        let adj = micro_adjoint_backward(&step, &w, &m, AdjointMode::Full);
        assert!(adj.r.iter().chain(&adj.s).chain(&adj.phi).chain(&adj.phi_slice).all(|p| *p == V::zero()));
    }

    #[test]
    fn control_only_mode_gives_same_agent_sensitivity() {
        let (x, v) = sample_initial(25, &Rect::new(-10.0, 55.0, -20.0, 55.0), VelocityInit::Zero, 9).unwrap();
        let y = ParticleEnsemble::new(x, v, agents_on_circle(3, V::new(22.5, 17.5), 60.0)).unwrap();
        let m = ModelParams::default();
        let step = micro_step(&y, &[V::new(1.0, 0.0), V::new(0.0, -2.0), V::zero()], 0.02, &m).unwrap();
        let w = CostWeights::new(5e-3, 5e-1, 1e-7, 10.0, 700.0, V::new(-20.0, -20.0));
        let full = micro_adjoint_backward(&step, &w, &m, AdjointMode::Full);
        let lean = micro_adjoint_backward(&step, &w, &m, AdjointMode::ControlOnly);
        for (a, b) in full.phi_slice.iter().zip(&lean.phi_slice) {
            assert!((*a - *b).norm() <= 1e-14 * a.norm());
        }
    }

    #[test]
    fn sampling_is_deterministic_and_inside() {
        let b = Rect::new(-10.0, 55.0, -20.0, 55.0);
        let (a, _) = sample_initial::<f64>(500, &b, VelocityInit::Zero, 42).unwrap();
        let (c, _) = sample_initial::<f64>(500, &b, VelocityInit::Zero, 42).unwrap();
        assert_eq!(a, c);
        assert!(a.iter().all(|p| b.contains(*p)));
        let (e, _) = sample_initial::<f64>(500, &b, VelocityInit::Zero, 43).unwrap();
        assert_ne!(a, e);
    }

    #[test]
    fn agents_on_circle_are_evenly_spaced() {
        let d = agents_on_circle(4, V::new(1.0, 1.0), 2.0);
        assert!((d[0] - V::new(3.0, 1.0)).norm() < 1e-12);
        assert!((d[1] - V::new(1.0, 3.0)).norm() < 1e-12);
        assert!((d[2] - V::new(-1.0, 1.0)).norm() < 1e-12);
    }
}
