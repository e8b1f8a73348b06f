//! Interaction forces on the spatial grid. The crowd term is a direct
//! convolution with a table of `K1` over all cell offsets.

use super::grid::{DensityField, PhaseGrid};
use crate::microsim::ModelParams;
use crate::potentials::MorseKernel;
use crate::real::Real;
use crate::vec2::Vec2;

#[derive(Clone, Debug)]
pub struct FieldKernels<T> {
    n: usize,
    dx: T,
    /// `K1(o Δx) Δx²` for offsets `o ∈ [-(n-1), n-1]²`, row-major.
    table: Vec<Vec2<T>>,
    crowd_disabled: bool,
    k2: MorseKernel<T>,
    grid: PhaseGrid<T>,
}

impl<T: Real> FieldKernels<T> {
    pub fn new(grid: &PhaseGrid<T>, params: &ModelParams<T>) -> Self {
        let n = grid.n;
        let w = 2 * n - 1;
        let k1 = MorseKernel::new(&params.sheep_sheep);
        let dx2 = grid.dx * grid.dx;
        let mut table = vec![Vec2::zero(); w * w];
        if !k1.disabled {
            for a in 0..w {
                for b in 0..w {
                    let o = Vec2::new(
                        T::cst(a as f64 - (n - 1) as f64) * grid.dx,
                        T::cst(b as f64 - (n - 1) as f64) * grid.dx,
                    );
                    table[a * w + b] = k1.grad(o).scale(dx2);
                }
            }
        }
        Self {
            n,
            dx: grid.dx,
            table,
            crowd_disabled: k1.disabled,
            k2: MorseKernel::new(&params.dog_sheep),
            grid: *grid,
        }
    }

    #[inline]
    fn kernel(&self, i1: usize, i2: usize, k1: usize, k2: usize) -> Vec2<T> {
        let w = 2 * self.n - 1;
        self.table[(i1 + self.n - 1 - k1) * w + (i2 + self.n - 1 - k2)]
    }

    /// `(K1 * ρ)(x) = Σ_x' K1(x - x') ρ(x') Δx²` at every cell center.
    pub fn crowd_field(&self, rho: &[T]) -> Vec<Vec2<T>> {
        let n = self.n;
        let mut out = vec![Vec2::zero(); n * n];
        if self.crowd_disabled {
            return out;
        }
        for k1 in 0..n {
            for k2 in 0..n {
                let r = rho[k1 * n + k2];
                if r == T::zero() {
                    continue;
                }
                for i1 in 0..n {
                    for i2 in 0..n {
                        out[i1 * n + i2] += self.kernel(i1, i2, k1, k2).scale(r);
                    }
                }
            }
        }
        out
    }

    /// `Σ_x K1(x̄ - x)·s(x) Δx²` at every cell center `x̄`.
    pub fn kernel_dot(&self, s: &[Vec2<T>]) -> Vec<T> {
        let n = self.n;
        let mut out = vec![T::zero(); n * n];
        if self.crowd_disabled {
            return out;
        }
        for k1 in 0..n {
            for k2 in 0..n {
                let sk = s[k1 * n + k2];
                if sk.x == T::zero() && sk.y == T::zero() {
                    continue;
                }
                for i1 in 0..n {
                    for i2 in 0..n {
                        out[i1 * n + i2] += self.kernel(i1, i2, k1, k2).dot(sk);
                    }
                }
            }
        }
        out
    }

    /// `(1/M) Σ_m K2(x - d_m)` at every cell center.
    pub fn agent_field(&self, d: &[Vec2<T>]) -> Vec<Vec2<T>> {
        let n = self.n;
        let inv_m = T::one() / T::cst(d.len() as f64);
        let mut out = vec![Vec2::zero(); n * n];
        if self.k2.disabled {
            return out;
        }
        for i1 in 0..n {
            for i2 in 0..n {
                let x = self.grid.x_center(i1, i2);
                let mut acc = Vec2::zero();
                for dm in d {
                    acc += self.k2.grad(x - *dm);
                }
                out[i1 * n + i2] = acc.scale(inv_m);
            }
        }
        out
    }

    /// `(1/M) Σ_x HessΦ2(x - d_m) s(x)` for each agent `m`.
    pub fn agent_hessian_sum(&self, s: &[Vec2<T>], d: &[Vec2<T>]) -> Vec<Vec2<T>> {
        let n = self.n;
        let inv_m = T::one() / T::cst(d.len() as f64);
        let mut out = vec![Vec2::zero(); d.len()];
        if self.k2.disabled {
            return out;
        }
        for (o, dm) in out.iter_mut().zip(d) {
            let mut acc = Vec2::zero();
            for i1 in 0..n {
                for i2 in 0..n {
                    let sk = s[i1 * n + i2];
                    if sk.x == T::zero() && sk.y == T::zero() {
                        continue;
                    }
                    acc += self.k2.hess(self.grid.x_center(i1, i2) - *dm).apply(sk);
                }
            }
            *o = acc.scale(inv_m);
        }
        out
    }

    /// Velocity-independent part of the force, `-(K1 * ρ) - (1/M) Σ_m K2(x - d_m)`.
    pub fn acceleration(&self, rho: &[T], d: &[Vec2<T>]) -> Vec<Vec2<T>> {
        let crowd = self.crowd_field(rho);
        self.acceleration_with(&crowd, d)
    }

    pub(crate) fn acceleration_with(&self, crowd: &[Vec2<T>], d: &[Vec2<T>]) -> Vec<Vec2<T>> {
        let agents = self.agent_field(d);
        crowd.iter().zip(&agents).map(|(c, a)| -(*c + *a)).collect()
    }

    pub fn spacing(&self) -> T {
        self.dx
    }
}

/// Force `S(x, v) = A(x) - α v` of the mean-field model.
#[derive(Clone, Debug, PartialEq)]
pub struct ForceField<T> {
    pub grid: PhaseGrid<T>,
    /// `A` per spatial cell, row-major over `(x1, x2)`.
    pub accel: Vec<Vec2<T>>,
    pub alpha: T,
}

impl<T: Real> ForceField<T> {
    pub fn at(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> Vec2<T> {
        self.accel[i1 * self.grid.n + i2] - self.grid.v_center(j1, j2).scale(self.alpha)
    }
}

pub fn force_field<T: Real>(f: &DensityField<T>, m: &ModelParams<T>) -> ForceField<T> {
    let kern = FieldKernels::new(&f.grid, m);
    ForceField { grid: f.grid, accel: kern.acceleration(&f.macroscopic_density(), &f.d), alpha: m.alpha }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microsim::{micro_rhs, ParticleEnsemble};
    use crate::potentials::{interaction_force, interaction_hessian, MorseParams};
    use rand::{Rng, SeedableRng};

    type V = Vec2<f64>;

    #[test]
    fn symmetric_density_cancels_at_its_center() {
        let g = PhaseGrid::<f64>::new(21, 50.0, 2.0).unwrap();
        let n = g.n;
        let mut f = DensityField::zeros(g, vec![V::new(1e6, 1e6)]);
        let nv = n * n;
        for i1 in 0..n {
            for i2 in 0..n {
                let r2 = g.x_center(i1, i2).norm_sq();
                f.f[(i1 * n + i2) * nv + nv / 2] = (-r2 / 200.0).exp();
            }
        }
        let s = force_field(&f, &ModelParams::default());
        let c = s.at(10, 10, n / 2, n / 2);
        assert!(c.norm() < 1e-8, "{c:?}");
    }

    #[test]
    fn zero_strength_potentials_give_zero_force_at_rest() {
        let g = PhaseGrid::<f64>::new(8, 10.0, 2.0).unwrap();
        let mut f = DensityField::zeros(g, vec![V::new(1.0, 2.0)]);
        f.f.iter_mut().enumerate().for_each(|(i, v)| *v = (i % 7) as f64);
        let m = ModelParams::default().without_interactions();
        let s = force_field(&f, &m);
        assert!(s.accel.iter().all(|a| *a == V::zero()));
    }

    #[test]
    fn crowd_field_matches_direct_sum() {
        let g = PhaseGrid::<f64>::new(6, 10.0, 2.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let rho: Vec<f64> = (0..36).map(|_| rng.gen()).collect();
        let kern = FieldKernels::new(&g, &ModelParams::default());
        let out = kern.crowd_field(&rho);
        let p = MorseParams::sheep_sheep();
        for i in 0..36 {
            let mut e = V::zero();
            for k in 0..36 {
                e += interaction_force(&p, g.x_center(i / 6, i % 6), g.x_center(k / 6, k % 6)).scale(rho[k] * g.dx * g.dx);
            }
            assert!((out[i] - e).norm() < 1e-13 * e.norm().max(1.0), "{i}: {:?} vs {e:?}", out[i]);
        }
    }

    #[test]
    fn histogram_force_matches_particle_force() {
        // particles at cell centers: the grid force equals the particle force
        // up to the self-interaction the particle sum leaves out
        let g = PhaseGrid::<f64>::new(20, 50.0, 2.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x: Vec<V> = (0..200).map(|_| g.x_center(rng.gen_range(4..16), rng.gen_range(4..16))).collect();
        let d = vec![V::new(-30.0, 10.0), V::new(20.0, 25.0)];
        let y = ParticleEnsemble::new(x.clone(), vec![V::zero(); 200], d).unwrap();
        let m = ModelParams::default();
        let rate = micro_rhs(&y, &[V::zero(); 2], &m).unwrap();
        let (h, _) = crate::meanfield::histogram_from_particles(&y, &g);
        let s = force_field(&h, &m);
        for (i, xi) in x.iter().enumerate() {
            let (i1, _) = g.x_index(xi.x);
            let (i2, _) = g.x_index(xi.y);
            let diff = (s.accel[i1 * g.n + i2] - rate.v[i]).norm();
            assert!(diff < 1e-10, "particle {i}: {diff}");
        }
    }

    #[test]
    fn agent_hessian_sum_matches_direct() {
        let g = PhaseGrid::<f64>::new(6, 10.0, 2.0).unwrap();
        let kern = FieldKernels::new(&g, &ModelParams::default());
        let s: Vec<V> = (0..36).map(|i| V::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let d = vec![V::new(3.0, -2.0), V::new(-7.0, 1.0)];
        let out = kern.agent_hessian_sum(&s, &d);
        for (m, dm) in d.iter().enumerate() {
            let mut e = V::zero();
            for i in 0..36 {
                e += interaction_hessian(&MorseParams::dog_sheep(), g.x_center(i / 6, i % 6) - *dm).apply(s[i]).scale(0.5);
            }
            assert!((out[m] - e).norm() < 1e-14);
        }
    }
}
